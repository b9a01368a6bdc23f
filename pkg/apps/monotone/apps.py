from django.apps import AppConfig


class MonotoneConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.monotone'
    label = 'monotone'
    verbose_name = 'Maximal monotone operators'
