"""
WSGI entry point of the nettwin project. Only the admin site is served,
for browsing the RunRecord registry of pipeline runs.
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'nettwin.settings')

application = get_wsgi_application()
