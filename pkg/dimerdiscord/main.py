from argparse import ArgumentParser
from json import dumps
from logging import DEBUG, ERROR, INFO, WARNING, basicConfig, getLogger
from os import getenv
from re import compile
from sys import argv, exit, stdout

from .correlations import (
    discord_closed_form,
    mutual_information_closed_form,
    quantum_discord_numeric,
    super_discord_closed_form,
    super_discord_numeric,
    werner_state,
)
from .fitting import (
    PARAMETERS,
    FitConfig,
    fit_bleaney_bowers,
    read_dataset,
    synthesize,
    write_dataset,
)
from .magnetics import (
    DimerModel,
    OutOfPhysicalRange,
    correlation_from_susceptibility,
    spin_correlation,
    temperature_grid,
)
from .measurements import PROJECTIVE, NegativeStrength, validate_strength
from .utils import (
    DimerDiscordError,
    UsageError,
    format_value,
    load_config,
    parse_float,
    parse_int,
    parse_list,
    parse_range,
)

log = getLogger('dimerdiscord')

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_USAGE = 2

DEFAULT_STRENGTHS = (0.0, 0.5, 1.0, 2.0, PROJECTIVE)
DEFAULT_TOLERANCE = 1e-8

LEVELS = {'DEBUG': DEBUG, 'INFO': INFO, 'WARNING': WARNING, 'ERROR': ERROR}

# negative numbers, ranges and lists such as -0.9:0.3:13 or -1,2
NEGATIVE_VALUE = compile(r'^-[\d.]')


def parse_strengths(value, default=DEFAULT_STRENGTHS):
    """Measurement strengths from "0.5,1,inf" or a config list.

    An empty list falls back to the default strengths.
    """
    items = parse_list(value, '--x')
    if not items:
        return list(default)
    strengths = []
    for item in items:
        try:
            strengths.append(validate_strength(parse_float(item, '--x')))
        except NegativeStrength as e:
            raise UsageError(f'--x: {e}')
    return strengths


def parse_g(value):
    '''Isotropic "2.1" or polycrystalline "gx,gy,gz" g-factor.'''
    items = parse_list(value, '--g')
    if len(items) == 1:
        return parse_float(items[0], '--g')
    if len(items) == 3:
        return tuple(parse_float(i, '--g') for i in items)
    raise UsageError(f'--g: expected 1 or 3 values, got {value!r}')


def parse_temperatures(value, logarithmic):
    low, high, steps = parse_range(value, '--t')
    if low <= 0:
        raise UsageError(f'--t: minimum temperature must be > 0, got {low}')
    return temperature_grid(low, high, steps, logarithmic=logarithmic)


def strength_column(x):
    return f'Dw_x={format_value(x)}_bits'


def write_row(out, values):
    out.write(','.join(values))
    out.write('\n')


def build_model(args):
    if args.j_over_kb is None:
        raise UsageError('--j-over-kb is required')
    return DimerModel(
        j_over_kb=parse_float(args.j_over_kb, '--j-over-kb'),
        g_factor=parse_g(args.g),
        impurity_fraction=parse_float(
            args.impurity_fraction, '--impurity-fraction'
        ),
        tip=parse_float(args.tip, '--tip'),
    )


def closed_form_values(g_value, strengths):
    """I, D and one D_w per strength for a spin correlation, formatted."""
    values = [
        mutual_information_closed_form(g_value),
        discord_closed_form(g_value),
    ]
    values.extend(super_discord_closed_form(g_value, x) for x in strengths)
    return [format_value(v) for v in values]


def cmd_sweep(args, out):
    '''Closed form correlations of a dimer model over a temperature range.'''
    model = build_model(args)
    temperatures = parse_temperatures(args.t, args.log)
    strengths = parse_strengths(args.x)
    log.info(
        f'sweep: {model}, {len(temperatures)} temperatures, x={strengths}'
    )

    write_row(
        out,
        ['T_K', 'G', 'I_bits', 'D_bits']
        + [strength_column(x) for x in strengths],
    )
    for t in temperatures:
        g_value = spin_correlation(model, t)
        write_row(
            out,
            [format_value(t), format_value(g_value)]
            + closed_form_values(g_value, strengths),
        )
    return EXIT_OK


def cmd_from_chi(args, out):
    '''Correlations from measured susceptibilities, one row per record.'''
    data = read_dataset(args.csv)
    g_factor = parse_g(args.g)
    strengths = parse_strengths(args.x)
    log.info(f'from-chi: {len(data)} records from {data.source}')

    columns = ['T_K', 'chi', 'G', 'I_bits', 'D_bits']
    columns.extend(strength_column(x) for x in strengths)
    columns.append('error')
    write_row(out, columns)
    flagged = 0
    for t, chi in data:
        try:
            g_value = correlation_from_susceptibility(chi, t, g_factor)
        except OutOfPhysicalRange as e:
            flagged += 1
            log.warning(f'from-chi: T={t} K flagged, {e}')
            blanks = [''] * (len(columns) - 3)
            write_row(
                out,
                [format_value(t), format_value(chi)]
                + blanks
                + [type(e).__name__],
            )
            continue
        write_row(
            out,
            [format_value(t), format_value(chi), format_value(g_value)]
            + closed_form_values(g_value, strengths)
            + [''],
        )
    if flagged:
        log.warning(f'from-chi: {flagged} of {len(data)} records flagged')
    return EXIT_OK


def cmd_fit(args, out):
    '''Bleaney-Bowers fit, JSON result.'''
    data = read_dataset(args.csv)
    free_parameters = parse_list(args.free, '--free')
    config = FitConfig(
        free_parameters=free_parameters,
        initial_guess=build_model(args),
        weighted=args.weighted,
        starts=parse_int(args.starts, '--starts', minimum=1),
        seed=parse_int(args.seed, '--seed', minimum=0),
    )
    log.info(
        f'fit: {len(data)} records, free={", ".join(config.free_parameters)}'
    )
    result = fit_bleaney_bowers(data, config)
    model = result.model
    out.write(
        dumps(
            {
                'model': {
                    'j_over_kb_K': model.j_over_kb,
                    'g': model.g,
                    'impurity_fraction': model.impurity_fraction,
                    'tip_emu_per_mol': model.tip,
                },
                'cost': result.cost,
                'converged': result.converged,
                'iterations': result.iterations,
                'residuals': result.residuals.tolist(),
            },
            indent=2,
        )
    )
    out.write('\n')
    return EXIT_OK


def cmd_oracle(args, out):
    '''Numeric optimisation against the closed forms on a G x x grid.'''
    low, high, steps = parse_range(args.g, '--g')
    strengths = parse_strengths(args.x)
    tolerance = parse_float(args.tolerance, '--tolerance')
    grid = [low + (high - low) * i / (steps - 1) for i in range(steps)]
    # fail on bad grid points before any optimisation starts
    states = [werner_state(g_value) for g_value in grid]

    write_row(
        out, ['G', 'quantity', 'x', 'closed_bits', 'numeric_bits', 'abs_dev']
    )
    worst = 0.0
    for g_value, rho in zip(grid, states):
        rows = [
            (
                'D',
                PROJECTIVE,
                discord_closed_form(g_value),
                quantum_discord_numeric(rho).discord,
            )
        ]
        for x in strengths:
            rows.append(
                (
                    'Dw',
                    x,
                    super_discord_closed_form(g_value, x),
                    super_discord_numeric(rho, x).discord,
                )
            )
        for quantity, x, closed, numeric in rows:
            deviation = abs(closed - numeric)
            worst = max(worst, deviation)
            write_row(
                out,
                [
                    format_value(g_value),
                    quantity,
                    format_value(x),
                    format_value(closed),
                    format_value(numeric),
                    format_value(deviation),
                ],
            )
    out.write(f'# max_abs_deviation={format_value(worst)}\n')

    if worst > tolerance:
        log.error(
            f'oracle: max deviation {worst:.3e} exceeds tolerance '
            f'{tolerance:.3e}'
        )
        return EXIT_TOLERANCE
    log.info(f'oracle: max deviation {worst:.3e} within {tolerance:.3e}')
    return EXIT_OK


def cmd_synth(args, out):
    '''Synthetic susceptibility CSV for a dimer model.'''
    model = build_model(args)
    temperatures = parse_temperatures(args.t, args.log)
    noise = parse_float(args.noise, '--noise')
    if noise < 0:
        raise UsageError(f'--noise: must be >= 0, got {noise}')
    seed = parse_int(args.seed, '--seed', minimum=0)
    source = args.label
    if source is None:
        source = (
            f'SYNTHETIC data, not measurements: {model}, noise={noise:g}, '
            f'seed={seed}'
        )
    write_dataset(
        synthesize(model, temperatures, noise=noise, seed=seed, source=source),
        out,
    )
    return EXIT_OK


def add_model_arguments(parser, j_default):
    parser.add_argument(
        '--j-over-kb',
        default=j_default,
        help='Exchange constant J/k_B in K, negative is antiferromagnetic'
        + ('' if j_default is None else f' (default: {j_default})'),
    )
    parser.add_argument(
        '--g',
        default='2',
        help='g-factor, isotropic (e.g. "2.13") or "gx,gy,gz" (default: 2)',
    )
    parser.add_argument(
        '--impurity-fraction',
        default='0',
        help='Mole fraction of paramagnetic impurity (default: 0)',
    )
    parser.add_argument(
        '--tip',
        default='0',
        help='Temperature independent paramagnetism, emu/mol (default: 0)',
    )


def add_temperature_arguments(parser):
    parser.add_argument(
        '--t',
        default='5:300:60',
        help='Temperature range min:max:steps in K (default: 5:300:60)',
    )
    parser.add_argument(
        '--log',
        action='store_true',
        default=False,
        help='Logarithmic instead of linear temperature spacing',
    )


def add_strength_argument(parser):
    parser.add_argument(
        '--x',
        default=None,
        help='Comma-separated measurement strengths, "inf" for the '
        'projective limit (default: 0,0.5,1,2,inf)',
    )


def build_parser():
    parser = ArgumentParser(
        prog='dimerdiscord',
        description='Quantum discord and super-quantum discord of '
        'Heisenberg spin dimers from magnetic susceptibility',
    )
    parser.add_argument(
        '--level',
        default=None,
        choices=sorted(LEVELS.keys()) + sorted(k.lower() for k in LEVELS),
        help='Logging level (default: $DIMERDISCORD_LEVEL or WARNING)',
    )
    subparsers = parser.add_subparsers(dest='command', required=True)

    sweep = subparsers.add_parser(
        'sweep', help='Closed form I, D and D_w over temperature'
    )
    add_model_arguments(sweep, j_default='-1')
    add_temperature_arguments(sweep)
    add_strength_argument(sweep)
    sweep.set_defaults(handler=cmd_sweep)

    from_chi = subparsers.add_parser(
        'from-chi', help='Correlations from a susceptibility CSV'
    )
    from_chi.add_argument(
        'csv', help='CSV with header temperature_K,chi_emu_per_mol'
    )
    from_chi.add_argument(
        '--g', default='2', help='g-factor used for the inversion (default: 2)'
    )
    add_strength_argument(from_chi)
    from_chi.set_defaults(handler=cmd_from_chi)

    fit = subparsers.add_parser(
        'fit', help='Fit the Bleaney-Bowers model to a susceptibility CSV'
    )
    fit.add_argument(
        'csv', help='CSV with header temperature_K,chi_emu_per_mol'
    )
    add_model_arguments(fit, j_default='-1')
    fit.add_argument(
        '--free',
        default='j_over_kb,g',
        help=f'Comma-separated free parameters out of {", ".join(PARAMETERS)} '
        '(default: j_over_kb,g)',
    )
    fit.add_argument(
        '--weighted',
        action='store_true',
        default=False,
        help='Weight squared residuals by 1/chi^2',
    )
    fit.add_argument(
        '--starts', default='8', help='Number of simplex starts (default: 8)'
    )
    fit.add_argument(
        '--seed', default='0', help='Seed of the random starts (default: 0)'
    )
    fit.set_defaults(handler=cmd_fit)

    oracle = subparsers.add_parser(
        'oracle', help='Check numeric optimisation against the closed forms'
    )
    oracle.add_argument(
        '--g',
        default='-0.9:0.3:13',
        help='Spin correlation grid min:max:steps (default: -0.9:0.3:13)',
    )
    add_strength_argument(oracle)
    oracle.add_argument(
        '--tolerance',
        default=str(DEFAULT_TOLERANCE),
        help='Maximum absolute deviation in bits '
        f'(default: {DEFAULT_TOLERANCE})',
    )
    oracle.set_defaults(handler=cmd_oracle)

    synth = subparsers.add_parser(
        'synth', help='Synthetic susceptibility CSV from a dimer model'
    )
    add_model_arguments(synth, j_default=None)
    add_temperature_arguments(synth)
    synth.add_argument(
        '--noise',
        default='0',
        help='Relative standard deviation of multiplicative noise (default: 0)',
    )
    synth.add_argument(
        '--seed', default='0', help='Noise seed (default: 0)'
    )
    synth.add_argument(
        '--label', default=None, help='Source label written as a comment'
    )
    synth.set_defaults(handler=cmd_synth)

    for subparser in subparsers.choices.values():
        subparser.add_argument(
            '--config',
            default=None,
            help='JSON file of flag values (snake_case keys), flags override',
        )

    return parser, subparsers.choices


def fold_negative_values(arguments):
    """Join `--flag -value` pairs into `--flag=-value`.

    argparse only takes a leading dash value for plain negative numbers, and
    how plain depends on the Python version.
    """
    ret = []
    i = 0
    while i < len(arguments):
        token = arguments[i]
        if (
            token.startswith('--')
            and token != '--'
            and '=' not in token
            and i + 1 < len(arguments)
            and NEGATIVE_VALUE.match(arguments[i + 1])
        ):
            ret.append(f'{token}={arguments[i + 1]}')
            i += 2
            continue
        ret.append(token)
        i += 1
    return ret


def parse_args(arguments):
    """Parse the command line, applying a --config file as defaults.

    Args:
        arguments: argument list without the program name

    Returns:
        argparse Namespace
    """
    arguments = fold_negative_values(arguments)
    parser, subparsers = build_parser()
    args = parser.parse_args(arguments)
    if args.config is None:
        return args

    config = load_config(args.config)
    subparser = subparsers[args.command]
    allowed = {
        action.dest
        for action in subparser._actions
        if action.dest not in ('help', 'config')
    }
    unknown = set(config) - allowed
    if unknown:
        raise UsageError(
            f'unknown keys in {args.config}: {", ".join(sorted(unknown))}'
        )
    subparser.set_defaults(**config)
    return parser.parse_args(arguments)


def run(arguments, out):
    """Run one command.

    Returns:
        exit code, 0 success, 1 oracle tolerance breach, 2 usage or input
        error
    """
    try:
        args = parse_args(arguments)
        level = args.level or getenv('DIMERDISCORD_LEVEL') or 'WARNING'
        log.setLevel(LEVELS.get(level.upper(), WARNING))
        return args.handler(args, out)
    except DimerDiscordError as e:
        log.error(f'{type(e).__name__}: {e}')
        return EXIT_USAGE


def main():  # pragma: no cover
    basicConfig(
        format='%(asctime)s [%(levelname)-8s] %(message)s',
        datefmt='%Y-%m-%dT%H:%M:%S',
    )
    exit(run(argv[1:], stdout))


if __name__ == '__main__':  # pragma: no cover
    main()
