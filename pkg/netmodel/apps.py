from django.apps import AppConfig


class NetmodelConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'netmodel'
    verbose_name = 'Network model'
