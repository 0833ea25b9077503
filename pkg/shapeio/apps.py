from django.apps import AppConfig


class ShapeioConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "shapeio"
