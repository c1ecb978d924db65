from django.contrib import admin
from django.utils.html import format_html

from .models import RunRecord


@admin.register(RunRecord)
class RunRecordAdmin(admin.ModelAdmin):
    """Admin interface for pipeline runs."""

    list_display = ('id', 'command', 'status_display', 'seed', 'out_dir', 'created_at', 'duration')
    list_filter = ('command', 'status', 'created_at')
    search_fields = ('out_dir', 'error_message')
    readonly_fields = ('created_at', 'finished_at')
    ordering = ('-created_at',)

    fieldsets = (
        ('Run', {
            'fields': ('command', 'status', 'seed', 'out_dir')
        }),
        ('Configuration', {
            'fields': ('config',),
            'classes': ('collapse',)
        }),
        ('Result', {
            'fields': ('summary', 'error_message')
        }),
        ('Timestamps', {
            'fields': ('created_at', 'finished_at')
        }),
    )

    def status_display(self, obj):
        colors = {'succeeded': 'green', 'failed': 'red', 'running': 'orange'}
        return format_html('<span style="color: {};">{}</span>',
                           colors.get(obj.status, 'black'), obj.get_status_display())
    status_display.short_description = 'Status'
