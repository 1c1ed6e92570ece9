"""
Persisted experiment runs
"""
from django.db import models


class ExperimentRun(models.Model):
    """
    One executed subcommand: the metadata stamped on its outputs, its JSON
    summary and the artifact paths it wrote.
    """
    STATUS_CHOICES = [
        ('OK', 'OK'),
        ('UNVERIFIED', 'Hypotheses not verified'),
    ]

    subcommand = models.CharField(max_length=32, db_index=True)
    family = models.CharField(max_length=64, db_index=True)
    config_hash = models.CharField(max_length=64, db_index=True)
    spec_hash = models.CharField(max_length=64)
    seed = models.BigIntegerField()
    n_paths = models.PositiveIntegerField()
    n_steps = models.PositiveIntegerField()
    scheme = models.CharField(max_length=32)
    engine_version = models.CharField(max_length=32)
    status = models.CharField(max_length=16, choices=STATUS_CHOICES, default='OK')

    meta = models.JSONField(default=dict)
    summary = models.JSONField(default=dict)
    artifacts = models.JSONField(default=list)

    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        verbose_name = "Experiment run"
        verbose_name_plural = "Experiment runs"
        ordering = ['-created_at', '-id']
        indexes = [
            models.Index(fields=['subcommand', '-created_at'], name='lsv_experim_subcomm_6f1c2a_idx'),
            models.Index(fields=['family', '-created_at'], name='lsv_experim_family_9b3e4d_idx'),
        ]

    def __str__(self):
        return f"{self.subcommand} [{self.family}] seed={self.seed} ({self.config_hash[:12]})"
