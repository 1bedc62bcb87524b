"""
Helpers shared by the management commands: mixture loading and the mapping
from toolkit errors to process exit codes.
"""
import argparse
import contextlib
import json
import logging
from pathlib import Path

from django.core.management.base import CommandError
from rest_framework import serializers

from ...exceptions import DisaggregationError, InvalidParameterError
from ...serializers import MixtureSerializer

logger = logging.getLogger(__name__)

EXIT_CONFIG_ERROR = 2
EXIT_NUMERIC_FAILURE = 3


def add_mixture_arguments(parser, required: bool = True):
    group = parser.add_mutually_exclusive_group(required=required)
    group.add_argument('--case', type=int, help='Preset simulation case (1, 2 or 3)')
    group.add_argument(
        '--mixture-json',
        help='Mixture descriptor as inline JSON or a path to a JSON file',
    )


def load_json_argument(value: str):
    """Inline JSON text or the path of a JSON file."""
    path = Path(value)
    try:
        if not value.lstrip().startswith('{') and path.exists():
            return json.loads(path.read_text())
        return json.loads(value)
    except json.JSONDecodeError as e:
        raise InvalidParameterError(f"Unreadable JSON in {value!r}: {e}")


def load_mixture(options):
    """Mixture instance from --case or --mixture-json, or None when neither was given."""
    if options.get('case') is not None:
        descriptor = {'family': 'case', 'case': options['case']}
    elif options.get('mixture_json'):
        descriptor = load_json_argument(options['mixture_json'])
    else:
        return None
    serializer = MixtureSerializer(data=descriptor)
    serializer.is_valid(raise_exception=True)
    return serializer.validated_data['instance']


def panel_size(value: str):
    """argparse type for N: a positive integer or 'limit'."""
    if value == 'limit':
        return value
    try:
        size = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"N must be a positive integer or 'limit', got {value!r}")
    if size < 1:
        raise argparse.ArgumentTypeError(f"N must be a positive integer or 'limit', got {value!r}")
    return size


def seed(value: str):
    """argparse type for a master seed: an integer in 0..2^64 - 1."""
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be a non-negative integer, got {value!r}")
    if not 0 <= number < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must lie in 0..2^64 - 1, got {value!r}")
    return number


@contextlib.contextmanager
def exit_codes():
    """Translate configuration errors to exit code 2 and numeric failures to exit code 3."""
    try:
        yield
    except serializers.ValidationError as e:
        logger.error(f"Invalid configuration: {e.detail}")
        raise CommandError(f"Invalid configuration: {e.detail}", returncode=EXIT_CONFIG_ERROR)
    except InvalidParameterError as e:
        logger.error(f"Invalid parameter: {e}")
        raise CommandError(str(e), returncode=EXIT_CONFIG_ERROR)
    except DisaggregationError as e:
        logger.error(f"Numeric failure ({e.code}): {e}")
        raise CommandError(f"{e.code}: {e}", returncode=EXIT_NUMERIC_FAILURE)
