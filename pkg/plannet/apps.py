from django.apps import AppConfig


class PlannetConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'plannet'
    verbose_name = 'Path, link and node model'
