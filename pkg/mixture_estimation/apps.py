from django.apps import AppConfig


class MixtureEstimationConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'mixture_estimation'
    verbose_name = 'Mixture density estimation'
