from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from ...services.ma_repr import ma_representation
from ...services.mixture import CompensatorMixture
from ...utils.reporting import dump_report, write_table
from ._common import EXIT_CONFIG_ERROR, add_mixture_arguments, exit_codes, load_mixture


class Command(BaseCommand):
    help = 'MA(infinity) coefficients of f(lambda; d) g(lambda), g the spectral density of a mixture'

    def add_arguments(self, parser):
        parser.add_argument('--d', type=float, required=True, help='Memory parameter in (0, 1/2)')
        add_mixture_arguments(parser, required=False)
        parser.add_argument('--kappa', type=float, default=None, help='Compensator exponent')
        parser.add_argument('--a-star', type=float, default=None, help='Compensator support bound')
        parser.add_argument('--J', type=int, default=1024, help='Number of coefficients after psi_0')
        parser.add_argument('--out', required=True, help='Output CSV with columns j, h_j, g_j, psi_j')

    def handle(self, *args, **options):
        with exit_codes():
            mixture = load_mixture(options)
            if mixture is None:
                if options['kappa'] is None or options['a_star'] is None:
                    raise CommandError(
                        'Give --kappa and --a-star, --mixture-json or --case for g', returncode=EXIT_CONFIG_ERROR
                    )
                mixture = CompensatorMixture(options['kappa'], options['a_star'])

            result = ma_representation(options['d'], mixture, options['J'])
            out = Path(options['out'])
            write_table(out, ['j', 'h', 'g', 'psi'], result.table())
            dump_report(out.with_suffix('.json'), {**result.summary(), 'g_mixture': mixture.to_dict()})

        self.stdout.write(self.style.SUCCESS(
            f"sigma2={result.sigma2:.10g}, sigma_g2={result.sigma_g2:.10g}; wrote {out}"
        ))
