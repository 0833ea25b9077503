"""
URL configuration for extrude_cad.

The only web surface is the admin, used to browse the fit-run ledger.
"""

from django.contrib import admin
from django.urls import path

urlpatterns = [
    path("admin/", admin.site.urls),
]
