from django.apps import AppConfig


class LdpConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.ldp'
    label = 'ldp'
    verbose_name = 'Rate function and Laplace functionals'
