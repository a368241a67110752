"""
``pulseflow`` console script: runs the management command without a Django
project, configuring the minimal settings it needs.
"""
import os
import sys

import django
from django.conf import settings

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {'format': '%(levelname)s %(name)s: %(message)s'},
    },
    'handlers': {
        'console': {'class': 'logging.StreamHandler', 'formatter': 'plain'},
    },
    'loggers': {
        'pulseflow': {'handlers': ['console'], 'level': 'WARNING', 'propagate': False},
    },
}


def configure():
    if settings.configured or os.environ.get('DJANGO_SETTINGS_MODULE'):
        return
    settings.configure(INSTALLED_APPS=['pulseflow'], LOGGING=LOGGING)


def main(argv=None):
    configure()
    django.setup()
    from pulseflow.management.commands.pulseflow import Command

    argv = sys.argv[1:] if argv is None else list(argv)
    Command().run_from_argv(['pulseflow', 'pulseflow'] + argv)


if __name__ == '__main__':
    main()
