"""
CSV input/output for series and tabulated densities.
"""
import json
import logging
from pathlib import Path
from typing import Union

import numpy as np

from ..exceptions import InvalidParameterError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
META_PREFIX = 'meta: '


def write_series(path: PathLike, series) -> Path:
    """
    Write a single-column series CSV with a comment header carrying its metadata.

    Args:
        path: Output file
        series: AggregatedSeries

    Returns:
        Path of the written file
    """
    path = Path(path)
    header = META_PREFIX + json.dumps(series.descriptor(), sort_keys=True, default=float)
    np.savetxt(path, series.values, fmt='%.17g', header=header, comments='# ')
    logger.info(f"Wrote series of length {series.n} to {path}")
    return path


def read_series(path: PathLike):
    """
    Read a series CSV written by ``write_series`` (or any single numeric column).

    Returns:
        AggregatedSeries with the header metadata, if present
    """
    from ..services.simulate import AggregatedSeries

    path = Path(path)
    if not path.exists():
        raise InvalidParameterError(f"Series file {path} does not exist")
    meta = {}
    with path.open() as handle:
        for line in handle:
            if not line.startswith('#'):
                break
            text = line.lstrip('#').strip()
            if text.startswith(META_PREFIX):
                try:
                    meta = json.loads(text[len(META_PREFIX):])
                except json.JSONDecodeError as e:
                    logger.warning(f"Ignoring unreadable metadata header in {path}: {e}")
    try:
        values = np.loadtxt(path, comments='#', delimiter=',', ndmin=2)[:, 0]
    except ValueError as e:
        raise InvalidParameterError(f"Series file {path} is not numeric: {e}")
    return AggregatedSeries(values, meta)


def write_density(path: PathLike, x, values) -> Path:
    path = Path(path)
    table = np.column_stack([np.asarray(x, dtype=float), np.asarray(values, dtype=float)])
    np.savetxt(path, table, fmt='%.17g', delimiter=',', header='x,phi', comments='# ')
    return path


def read_density(path: PathLike):
    """Two-column (x, φ(x)) CSV; a textual header line is skipped."""
    path = Path(path)
    if not path.exists():
        raise InvalidParameterError(f"Density file {path} does not exist")
    with path.open() as handle:
        first = handle.readline()
    skip = 0
    if first and not first.startswith('#'):
        try:
            [float(v) for v in first.split(',')]
        except ValueError:
            skip = 1
    try:
        table = np.loadtxt(path, comments='#', delimiter=',', skiprows=skip, ndmin=2)
    except ValueError as e:
        raise InvalidParameterError(f"Density file {path} is not a numeric two-column CSV: {e}")
    if table.shape[1] < 2:
        raise InvalidParameterError(f"Density file {path} needs two columns")
    return table[:, 0], table[:, 1]
