from django.contrib import admin
from .models import FitRun


@admin.register(FitRun)
class FitRunAdmin(admin.ModelAdmin):
    list_display = ('kind', 'status', 'short_target', 'final_loss', 'iterations_run', 'created_at')
    list_filter = ('kind', 'status', 'created_at')
    search_fields = ('target_path', 'error_message')
    readonly_fields = ('created_at', 'finished_at')
    date_hierarchy = 'created_at'
    ordering = ('-created_at',)

    def short_target(self, obj):
        return obj.target_path[-60:] if obj.target_path else '-'
    short_target.short_description = 'Target'
