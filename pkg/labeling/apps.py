from django.apps import AppConfig


class LabelingConfig(AppConfig):
    name = 'labeling'
    verbose_name = 'Biometric API method labeling'
