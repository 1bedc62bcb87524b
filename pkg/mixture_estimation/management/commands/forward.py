import numpy as np
from django.core.management.base import BaseCommand

from ...utils.reporting import dump_report, write_table
from ._common import add_mixture_arguments, exit_codes, load_mixture


class Command(BaseCommand):
    help = 'Tabulate the autocovariance and spectral density of a mixture'

    def add_arguments(self, parser):
        add_mixture_arguments(parser)
        parser.add_argument('--max-lag', type=int, default=100)
        parser.add_argument('--n-freq', type=int, default=256, help='Frequencies pi*l/n_freq, l = 1..n_freq')
        parser.add_argument('--sigma-eps2', type=float, default=None)
        parser.add_argument('--alpha', type=float, default=None, help='Also report integrability for this alpha')
        parser.add_argument('--out-prefix', required=True)

    def handle(self, *args, **options):
        with exit_codes():
            mixture = load_mixture(options)
            sigma_eps2 = options['sigma_eps2']
            prefix = options['out_prefix']

            lags = np.arange(options['max_lag'] + 1)
            autocov = mixture.autocovariances(len(lags), sigma_eps2)
            write_table(f'{prefix}_covariance.csv', ['h', 'sigma'], np.column_stack([lags, autocov]))

            # λ = 0 is excluded: long-memory spectra are infinite there
            lam = np.pi * np.arange(1, options['n_freq'] + 1) / options['n_freq']
            values = mixture.spectral(lam, sigma_eps2)
            write_table(f'{prefix}_spectral.csv', ['lambda', 'f'], np.column_stack([lam, values]))

            summary = {
                'mixture': mixture.to_dict(),
                'sigma_eps2': mixture.natural_sigma_eps2 if sigma_eps2 is None else sigma_eps2,
                'mass': mixture.mass(),
                'mean': mixture.mean(),
                'variance': float(autocov[0]),
            }
            if options['alpha'] is not None:
                summary['integrability'] = mixture.check_integrability(options['alpha']).to_dict()
            dump_report(f'{prefix}_summary.json', summary)

        self.stdout.write(self.style.SUCCESS(
            f"Wrote {len(lags)} autocovariances and {len(lam)} spectral values with prefix {prefix}"
        ))
