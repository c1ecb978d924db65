from django.apps import AppConfig


class SimcoreConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'simcore'
    verbose_name = 'Packet simulator'
