from django.db import models
import uuid


class ExperimentRun(models.Model):
    """A recorded Monte-Carlo experiment or variance-decay run"""

    KIND_CHOICES = [
        ('experiment', 'Experiment'),
        ('variance_slope', 'Variance slope'),
    ]

    STATUS_CHOICES = [
        ('completed', 'Completed'),
        ('failed', 'Failed'),
    ]

    id = models.UUIDField(primary_key=True, default=uuid.uuid4, editable=False)
    kind = models.CharField(max_length=20, choices=KIND_CHOICES, default='experiment')
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default='completed')

    # Inputs
    spec = models.JSONField(default=dict)
    seed = models.CharField(max_length=20, blank=True)

    # Outcome
    report = models.JSONField(default=dict)
    failed = models.PositiveIntegerField(default=0)
    total = models.PositiveIntegerField(default=0)
    error_code = models.CharField(max_length=50, blank=True)
    elapsed_seconds = models.FloatField(null=True, blank=True)

    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        db_table = 'experiment_runs'
        ordering = ['-created_at']

    def __str__(self):
        return f"{self.kind} {self.id} ({self.status}, {self.failed}/{self.total} failed)"

    @property
    def failure_rate(self) -> float:
        return self.failed / self.total if self.total else 0.0
