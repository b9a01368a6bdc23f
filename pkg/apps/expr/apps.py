from django.apps import AppConfig


class ExprConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.expr'
    label = 'expr'
    verbose_name = 'Coefficient expressions'
