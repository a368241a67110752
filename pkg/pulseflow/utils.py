import re

from django.conf import settings
from django.core.exceptions import ImproperlyConfigured

NAME_RE = re.compile(r'^[A-Za-z0-9_.-]+$')


def setting(name, default=None, strict=False):
    """
    Helper function to get a Django setting by name. If setting doesn't exists
    it can return a default or raise an error if in strict mode.

    :param name: Name of setting
    :type name: str
    :param default: Value if setting is unfound
    :param strict: Define if return default value or raise an error
    :type strict: bool
    :returns: Setting's value
    :raises: django.core.exceptions.ImproperlyConfigured if setting is unfound
             and strict mode
    """
    if strict and not hasattr(settings, name):
        msg = "You must provide settings.%s" % name
        raise ImproperlyConfigured(msg)
    return getattr(settings, name, default)


def is_valid_name(name):
    return bool(NAME_RE.match(name))


def split_pin(endpoint):
    """
    Split ``instance.PORT`` into ``(instance, PORT)``.

    Instance names may themselves contain dots, so only the last one
    separates the port. Returns ``(endpoint, None)`` for bare names, which
    refer to external ports.
    """
    if '.' not in endpoint:
        return endpoint, None
    cell, port = endpoint.rsplit('.', 1)
    if not cell or not port:
        return endpoint, None
    return cell, port


def join_pin(cell, port):
    return '%s.%s' % (cell, port)


def word_bits(word, width):
    """Indices of the set bits of ``word``, lowest first."""
    return [i for i in range(width) if (word >> i) & 1]


def format_word(word, width):
    return format(word, '0%db' % width)
