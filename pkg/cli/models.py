from django.db import models


class RunRecord(models.Model):
    """One invocation of a pipeline command."""

    COMMAND_CHOICES = [
        ('topology', 'Topology'),
        ('dataset', 'Dataset'),
        ('train', 'Train'),
        ('eval', 'Evaluate'),
        ('bench', 'Benchmark'),
    ]

    STATUS_CHOICES = [
        ('running', 'Running'),
        ('succeeded', 'Succeeded'),
        ('failed', 'Failed'),
    ]

    command = models.CharField(max_length=20, choices=COMMAND_CHOICES)
    status = models.CharField(
        max_length=20, choices=STATUS_CHOICES, default='running')
    seed = models.BigIntegerField()
    out_dir = models.CharField(max_length=500)

    # Resolved run configuration, section -> key -> value
    config = models.JSONField(default=dict, blank=True)
    summary = models.JSONField(default=dict, blank=True)

    error_message = models.TextField(blank=True)

    created_at = models.DateTimeField(auto_now_add=True)
    finished_at = models.DateTimeField(null=True, blank=True)

    def __str__(self):
        return f"{self.command} #{self.id} - {self.status}"

    @property
    def duration(self):
        if self.finished_at is None:
            return None
        return self.finished_at - self.created_at

    class Meta:
        verbose_name = 'Run Record'
        verbose_name_plural = 'Run Records'
        ordering = ['-created_at']
