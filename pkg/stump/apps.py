from django.apps import AppConfig


class StumpConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "stump"
