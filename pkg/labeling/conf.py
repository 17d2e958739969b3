from django.conf import settings


def get_setting(name):
    return settings.LABELING[name]


def hyperparameters(algorithm):
    return dict(settings.LABELING['HYPERPARAMETERS'].get(algorithm, {}))
