from django.contrib import admin
from django.urls import path, include

urlpatterns = [
    path('admin/', admin.site.urls),
    path('api/v1/auth/', include('lsv.api.v1.auth_urls')),
    path('api/v1/', include('lsv.api.v1.urls')),
]
