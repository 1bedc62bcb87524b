# Utils package for mixture_estimation app

from .reporting import dump_report, round_report, write_table
from .series_io import read_density, read_series, write_density, write_series

__all__ = [
    'dump_report',
    'round_report',
    'write_table',
    'read_density',
    'read_series',
    'write_density',
    'write_series',
]
