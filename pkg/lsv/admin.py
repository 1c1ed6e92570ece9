"""
Admin for persisted experiment runs
"""
from django.contrib import admin
from unfold.admin import ModelAdmin

from .models import ExperimentRun


@admin.register(ExperimentRun)
class ExperimentRunAdmin(ModelAdmin):
    list_display = ['subcommand', 'family', 'seed', 'n_paths', 'scheme', 'status', 'short_hash', 'created_at']
    list_filter = ['subcommand', 'family', 'scheme', 'status']
    search_fields = ['config_hash', 'spec_hash', 'family']
    ordering = ['-created_at']
    readonly_fields = [
        'subcommand', 'family', 'config_hash', 'spec_hash', 'seed', 'n_paths', 'n_steps',
        'scheme', 'engine_version', 'status', 'meta', 'summary', 'artifacts', 'created_at',
    ]

    fieldsets = (
        ('Run', {
            'fields': ('subcommand', 'family', 'status', 'created_at')
        }),
        ('Reproducibility', {
            'fields': ('config_hash', 'spec_hash', 'seed', 'n_paths', 'n_steps', 'scheme', 'engine_version'),
        }),
        ('Results', {
            'fields': ('meta', 'summary', 'artifacts'),
        }),
    )

    @admin.display(description='Config')
    def short_hash(self, obj):
        return obj.config_hash[:12]

    def has_add_permission(self, request):
        return False
