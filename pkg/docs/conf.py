# pulseflow documentation build configuration file.
import os
import sys

sys.path.insert(0, os.path.abspath('..'))

import django  # noqa: E402
from django.conf import settings  # noqa: E402

settings.configure(INSTALLED_APPS=['pulseflow'])
django.setup()

import pulseflow  # noqa: E402

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.viewcode']

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'pulseflow'
copyright = u'2026, pulseflow contributors'

version = pulseflow.__version__
release = pulseflow.__version__

exclude_patterns = ['_build']
pygments_style = 'sphinx'

html_theme = 'default'
html_static_path = ['_static']
htmlhelp_basename = 'pulseflowdoc'

latex_documents = [
    ('index', 'pulseflow.tex', u'pulseflow Documentation', u'pulseflow contributors', 'manual'),
]

man_pages = [
    ('index', 'pulseflow', u'pulseflow Documentation', [u'pulseflow contributors'], 1)
]
