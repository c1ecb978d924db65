"""
URL configuration for the nettwin project.

Only the Django admin is routed; it lists the RunRecord registry written by
the management commands.
"""
from django.contrib import admin
from django.urls import path

urlpatterns = [
    path('admin/', admin.site.urls),
]
