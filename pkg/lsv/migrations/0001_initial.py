from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('subcommand', models.CharField(db_index=True, max_length=32)),
                ('family', models.CharField(db_index=True, max_length=64)),
                ('config_hash', models.CharField(db_index=True, max_length=64)),
                ('spec_hash', models.CharField(max_length=64)),
                ('seed', models.BigIntegerField()),
                ('n_paths', models.PositiveIntegerField()),
                ('n_steps', models.PositiveIntegerField()),
                ('scheme', models.CharField(max_length=32)),
                ('engine_version', models.CharField(max_length=32)),
                ('status', models.CharField(choices=[('OK', 'OK'), ('UNVERIFIED', 'Hypotheses not verified')], default='OK', max_length=16)),
                ('meta', models.JSONField(default=dict)),
                ('summary', models.JSONField(default=dict)),
                ('artifacts', models.JSONField(default=list)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'verbose_name': 'Experiment run',
                'verbose_name_plural': 'Experiment runs',
                'ordering': ['-created_at', '-id'],
                'indexes': [
                    models.Index(fields=['subcommand', '-created_at'], name='lsv_experim_subcomm_6f1c2a_idx'),
                    models.Index(fields=['family', '-created_at'], name='lsv_experim_family_9b3e4d_idx'),
                ],
            },
        ),
    ]
