import logging
import time

from django.core.management.base import BaseCommand, CommandError

from ...exceptions import ExperimentFailureError
from ...models import ExperimentRun
from ...presets import experiment_preset
from ...services.harness import ExperimentSpec, run_experiment, variance_slope, write_report
from ...utils.reporting import round_report
from ._common import EXIT_CONFIG_ERROR, exit_codes, load_json_argument, seed

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = 'Run a Monte-Carlo experiment from a spec file and write the report JSON and plot tables'

    def add_arguments(self, parser):
        parser.add_argument('spec', nargs='?', default=None, help='Experiment spec JSON file')
        parser.add_argument('--case', type=int, default=None, help='Use the preset for case 1, 2 or 3')
        parser.add_argument('--M', type=int, default=None, help='Override the number of replications')
        parser.add_argument('--n', type=int, default=None, help='Override the series length')
        parser.add_argument('--seed', type=seed, default=None, help='Override the master seed')
        parser.add_argument('--out-dir', required=True)
        parser.add_argument('--workers', type=int, default=None)
        parser.add_argument('--variance-slope', action='store_true',
                            help="Also fit the variance decay over the spec's n_grid")
        parser.add_argument('--point', type=float, default=None, help='Evaluation point of the variance fit')
        parser.add_argument('--record', action='store_true', help='Store the run in the database')

    def _load_spec(self, options) -> dict:
        if options['spec'] and options['case'] is not None:
            raise CommandError('Give either a spec file or --case, not both', returncode=EXIT_CONFIG_ERROR)
        if options['spec']:
            data = load_json_argument(options['spec'])
        elif options['case'] is not None:
            data = experiment_preset(options['case'])
        else:
            raise CommandError('A spec file or --case is required', returncode=EXIT_CONFIG_ERROR)
        for key in ('M', 'n', 'seed'):
            if options[key] is not None:
                data[key] = options[key]
        return data

    def handle(self, *args, **options):
        started = time.perf_counter()
        with exit_codes():
            data = self._load_spec(options)
            spec = ExperimentSpec.from_dict(data)
            if options['variance_slope'] and not spec.n_grid:
                raise CommandError('--variance-slope needs a non-empty n_grid in the spec',
                                   returncode=EXIT_CONFIG_ERROR)
            try:
                report = run_experiment(spec, workers=options['workers'])
                slope = None
                if options['variance_slope']:
                    slope = variance_slope(spec, spec.n_grid, options['point'], workers=options['workers'])
            except ExperimentFailureError as e:
                if options['record']:
                    self._record(spec, {'error': e.to_dict()}, 'failed', e.failed, e.total, started, e.code)
                raise
            paths = write_report(report, options['out_dir'], slope)

            if options['record']:
                payload = report.to_dict(include_timing=True)
                if slope is not None:
                    payload['variance_slope'] = slope.to_dict()
                run = self._record(spec, payload, 'completed', report.failed, spec.M, started)
                self.stdout.write(f"Recorded run {run.id}")

        self.stdout.write(self.style.SUCCESS(
            f"MISE={report.mise:.6g}, K_n={report.Kn}, {report.succeeded}/{spec.M} replications; "
            f"wrote {', '.join(str(p) for p in paths.values())}"
        ))

    def _record(self, spec, payload, status, failed, total, started, error_code=''):
        return ExperimentRun.objects.create(
            kind='variance_slope' if 'variance_slope' in payload else 'experiment',
            status=status,
            spec=round_report(spec.to_dict()),
            seed=str(spec.seed),
            report=round_report(payload),
            failed=failed,
            total=total,
            error_code=error_code,
            elapsed_seconds=time.perf_counter() - started,
        )
