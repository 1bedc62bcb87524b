"""
Fixed-precision JSON reports and plot-ready CSV tables.

Numbers are rounded to REPORT_PRECISION significant digits and keys are
sorted, so identical runs produce byte-identical files.
"""
import json
import logging
import math
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from django.conf import settings

logger = logging.getLogger(__name__)


def _precision() -> int:
    return getattr(settings, 'REPORT_PRECISION', 10)


def round_report(value: Any, precision: int = None) -> Any:
    """Convert numpy containers to plain Python and round floats."""
    precision = precision or _precision()
    if isinstance(value, dict):
        return {str(k): round_report(v, precision) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [round_report(v, precision) for v in value]
    if isinstance(value, np.ndarray):
        return [round_report(v, precision) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return None
        return float(f"{value:.{precision}g}")
    return value


def dump_report(path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w') as handle:
        json.dump(round_report(payload), handle, sort_keys=True, indent=2)
        handle.write('\n')
    logger.info(f"Wrote report {path}")
    return path


def write_table(path, columns: Sequence[str], rows) -> Path:
    """CSV with a plain header line and fixed-precision numeric rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    np.savetxt(path, rows, fmt=f'%.{_precision()}g', delimiter=',', header=','.join(columns), comments='')
    return path
