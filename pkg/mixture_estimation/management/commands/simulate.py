import logging

import numpy as np
from django.core.management.base import BaseCommand

from ...services.simulate import PanelConfig, aggregate, gaussian_synthesis
from ...utils.series_io import write_series
from ._common import add_mixture_arguments, exit_codes, load_mixture, panel_size, seed

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = 'Simulate one aggregated series (panel aggregation or exact Gaussian synthesis) to a CSV file'

    def add_arguments(self, parser):
        add_mixture_arguments(parser)
        parser.add_argument('--n', type=int, required=True, help='Series length')
        parser.add_argument('--N', type=panel_size, default='limit',
                            help="Panel size, or 'limit' for the Gaussian limit process")
        parser.add_argument('--sigma-eps2', type=float, default=None,
                            help="Innovation variance (default: the mixture's natural value)")
        parser.add_argument('--seed', type=seed, default=0)
        parser.add_argument('--burn-in', type=int, default=0)
        parser.add_argument('--workers', type=int, default=1)
        parser.add_argument('--out', required=True, help='Output series CSV')

    def handle(self, *args, **options):
        with exit_codes():
            mixture = load_mixture(options)
            sigma_eps2 = options['sigma_eps2']
            if options['N'] == 'limit':
                series = gaussian_synthesis(mixture, options['n'], sigma_eps2, options['seed'])
            else:
                sigma_eps2 = mixture.natural_sigma_eps2 if sigma_eps2 is None else sigma_eps2
                config = PanelConfig(
                    N=options['N'],
                    n=options['n'],
                    sigma_eps=float(np.sqrt(sigma_eps2)) if sigma_eps2 > 0 else sigma_eps2,
                    burn_in=options['burn_in'],
                    seed=options['seed'],
                )
                series = aggregate(mixture, config, workers=options['workers'])
            path = write_series(options['out'], series)

        self.stdout.write(self.style.SUCCESS(
            f"Wrote {series.n} observations ({series.meta.get('route')}) to {path}"
        ))
