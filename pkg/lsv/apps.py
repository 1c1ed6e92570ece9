from django.apps import AppConfig


class LsvConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'lsv'
    verbose_name = 'LSV tube bounds'
