from django.apps import AppConfig


class ExtrudeConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "extrude"
