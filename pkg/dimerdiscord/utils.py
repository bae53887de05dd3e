#
#
#

from json import JSONDecodeError, load
from math import inf, isfinite, isnan

SIGNIFICANT_DIGITS = 12


class DimerDiscordError(ValueError):
    '''Base class for every error raised by dimerdiscord.'''


class UsageError(DimerDiscordError):
    pass


def format_value(value):
    """Format a float for CSV output.

    Args:
        value: int or float; infinities become "inf"/"-inf"

    Returns:
        Locale independent string with 12 significant digits
    """
    if value == inf:
        return 'inf'
    if value == -inf:
        return '-inf'
    return f'{value:.{SIGNIFICANT_DIGITS}g}'


def parse_float(value, name):
    """Parse a flag or config value into a float.

    Accepts numbers or strings; "inf" maps to math.inf.
    """
    if isinstance(value, bool):
        raise UsageError(f'{name}: expected a number, got {value!r}')
    try:
        ret = float(value)
    except (TypeError, ValueError):
        raise UsageError(f'{name}: expected a number, got {value!r}')
    if isnan(ret):
        raise UsageError(f'{name}: NaN is not allowed')
    return ret


def parse_int(value, name, minimum=None):
    """Parse a flag or config value into an int, "3" and 3.0 alike."""
    ret = parse_float(value, name)
    if not isfinite(ret) or ret != int(ret):
        raise UsageError(f'{name}: expected an integer, got {value!r}')
    ret = int(ret)
    if minimum is not None and ret < minimum:
        raise UsageError(f'{name}: must be >= {minimum}, got {ret}')
    return ret


def parse_list(value, name):
    """Split a comma separated flag value (or a JSON list) into items."""
    if value is None:
        return []
    if isinstance(value, (list, tuple)):
        return list(value)
    if isinstance(value, (int, float)):
        return [value]
    if not isinstance(value, str):
        raise UsageError(f'{name}: expected a list, got {value!r}')
    return [v.strip() for v in value.split(',') if v.strip()]


def parse_range(value, name):
    """Parse a `min:max:steps` range.

    Args:
        value: "min:max:steps" string or a 3 item list from a config file
        name: flag name used in error messages

    Returns:
        Tuple of (min, max, steps) with min/max floats and steps an int
    """
    if isinstance(value, str):
        parts = value.split(':')
    elif isinstance(value, (list, tuple)):
        parts = list(value)
    else:
        raise UsageError(f'{name}: expected min:max:steps, got {value!r}')
    if len(parts) != 3:
        raise UsageError(f'{name}: expected min:max:steps, got {value!r}')
    low = parse_float(parts[0], name)
    high = parse_float(parts[1], name)
    steps = parse_int(parts[2], name)
    if not isfinite(low) or not isfinite(high):
        raise UsageError(f'{name}: range bounds must be finite')
    if high <= low:
        raise UsageError(f'{name}: max ({high}) must exceed min ({low})')
    if steps < 2:
        raise UsageError(f'{name}: at least 2 steps required, got {steps}')
    return low, high, steps


def load_config(path):
    """Load a JSON config file.

    Keys are the snake_case forms of the command's flags.

    Returns:
        dict of flag destination to value
    """
    try:
        with open(path) as fh:
            config = load(fh)
    except OSError as e:
        raise UsageError(f'unable to read config {path}: {e.strerror}')
    except JSONDecodeError as e:
        raise UsageError(f'invalid JSON in config {path}: {e}')
    if not isinstance(config, dict):
        raise UsageError(f'config {path} must contain a JSON object')
    return config
