"""
voltube API v1 URLs
"""
from django.urls import path

from .views import ConstantsView, RunHistoryView

app_name = 'lsv_api_v1'

urlpatterns = [
    # Persisted experiment runs
    path('runs/', RunHistoryView.as_view(), name='run_history'),
    # Constant chain for a model, computed on request
    path('constants/', ConstantsView.as_view(), name='constants'),
]
