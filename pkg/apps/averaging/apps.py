from django.apps import AppConfig


class AveragingConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.averaging'
    label = 'averaging'
    verbose_name = 'Invariant measures and averaged coefficients'
