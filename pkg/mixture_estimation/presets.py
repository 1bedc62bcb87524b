"""
Simulation-study presets: the three mixture cases and experiment defaults.
"""
from typing import Dict, Any

from django.conf import settings

from .exceptions import InvalidParameterError

SIMULATION_CASES: Dict[int, Dict[str, Any]] = {
    1: {
        'mixture': {
            'family': 'beta_two_component',
            'w': 0.8, 'a_star': 0.95, 'p1': 3.0, 'q1': 1.5, 'p2': 2.0, 'q2': 1.0,
        },
        'd': 0.25,
        'alpha': 0.5,
    },
    2: {
        'mixture': {
            'family': 'beta_two_component',
            'w': 0.8, 'a_star': 0.8, 'p1': 1.2, 'q1': 1.6, 'p2': 1.3, 'q2': 2.5,
        },
        'd': 0.2,
        'alpha': 0.6,
    },
    3: {
        'mixture': {
            'family': 'beta_uniform',
            'w': 0.8, 'a_star': 0.9, 'p3': 2.0, 'q3': 1.2,
        },
        'd': 0.4,
        'alpha': 0.2,
    },
}

# Evaluation points of the QQ/histogram study
QQ_POINTS = [-0.5, 0.96]

EXPERIMENT_DEFAULTS = {
    'n': 1500,
    'N': 'limit',
    'M': 500,
    'grid_size': 512,
    'sigma_eps2': 1.0,
    'seed': 20240101,
}


def _case(case_id: int) -> Dict[str, Any]:
    try:
        return SIMULATION_CASES[case_id]
    except KeyError:
        raise InvalidParameterError(
            f"Unknown case {case_id}; available cases are {sorted(SIMULATION_CASES)}", case=case_id
        )


def case_mixture_descriptor(case_id: int) -> Dict[str, Any]:
    return dict(_case(case_id)['mixture'])


def experiment_preset(case_id: int, **overrides) -> Dict[str, Any]:
    """Experiment spec dictionary for one of the preset cases."""
    case = _case(case_id)
    spec = {
        **EXPERIMENT_DEFAULTS,
        'case_id': case_id,
        'mixture': dict(case['mixture']),
        'd': case['d'],
        'alpha': case['alpha'],
        'gamma': getattr(settings, 'DEFAULT_GAMMA', 0.42),
        'eval_points': list(QQ_POINTS),
    }
    spec.update(overrides)
    return spec
