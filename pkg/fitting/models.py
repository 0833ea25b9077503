from django.db import models


class FitRun(models.Model):
    """One fit2d / fit3d invocation, kept as a browsable ledger"""
    KIND_CHOICES = [
        ('fit2d', '2D sketch fit'),
        ('fit3d', '3D shape fit'),
    ]
    STATUS_CHOICES = [
        ('pending', 'Pending'),
        ('running', 'Running'),
        ('completed', 'Completed'),
        ('failed', 'Failed'),
    ]

    kind = models.CharField(max_length=10, choices=KIND_CHOICES)
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default='pending')
    config = models.JSONField(default=dict)
    target_path = models.CharField(max_length=1024, blank=True)
    output_paths = models.JSONField(default=list)
    final_loss = models.FloatField(null=True, blank=True)
    iterations_run = models.IntegerField(default=0)
    error_message = models.TextField(blank=True, null=True)
    created_at = models.DateTimeField(auto_now_add=True)
    finished_at = models.DateTimeField(null=True, blank=True)

    class Meta:
        ordering = ['-created_at']

    def __str__(self):
        return f"{self.kind} {self.status} - {self.created_at.strftime('%Y-%m-%d %H:%M')}"
