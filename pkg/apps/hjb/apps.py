from django.apps import AppConfig


class HjbConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.hjb'
    label = 'hjb'
    verbose_name = 'Limit Hamilton-Jacobi-Bellman solver'
