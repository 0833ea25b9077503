from django.apps import AppConfig


class Sdf2dConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "sdf2d"
