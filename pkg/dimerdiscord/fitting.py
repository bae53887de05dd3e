#
# Bleaney-Bowers fits of susceptibility data
#

from io import StringIO
from logging import getLogger

import numpy as np
import pandas as pd
from lmfit import Parameters, minimize

from .magnetics import DimerModel, susceptibility
from .utils import DimerDiscordError, format_value

log = getLogger('dimerdiscord.fitting')

TEMPERATURE_COLUMN = 'temperature_K'
CHI_COLUMN = 'chi_emu_per_mol'

PARAMETERS = ('j_over_kb', 'g', 'impurity_fraction', 'tip')
DEFAULT_FREE_PARAMETERS = ('j_over_kb', 'g')
DEFAULT_BOUNDS = {
    'j_over_kb': (-500.0, 500.0),
    'g': (1.5, 3.0),
    'impurity_fraction': (0.0, 0.2),
    'tip': (0.0, 1e-3),
}
# every temperature inside a window this wide (K) carries no J information
DEGENERATE_WINDOW = 1.0


class InvalidDataset(DimerDiscordError):
    pass


class InsufficientData(DimerDiscordError):
    pass


class DegenerateData(DimerDiscordError):
    pass


class InvalidFitConfig(DimerDiscordError):
    pass


class SusceptibilityDataset:
    """Ordered (temperature, chi) records.

    Args:
        temperatures: kelvin, strictly positive and strictly increasing
        chi: molar susceptibility in emu/mol, >= 0
        source: free text label
    """

    def __init__(self, temperatures, chi, source=''):
        temperatures = np.array(temperatures, dtype=float)
        chi = np.array(chi, dtype=float)
        if temperatures.ndim != 1 or temperatures.shape != chi.shape:
            raise InvalidDataset(
                f'temperatures ({temperatures.shape}) and chi ({chi.shape}) '
                'must be 1d and equally long'
            )
        if not np.all(np.isfinite(temperatures)) or not np.all(
            np.isfinite(chi)
        ):
            raise InvalidDataset('temperatures and chi must be finite')
        if np.any(temperatures <= 0):
            raise InvalidDataset('temperatures must be strictly positive')
        if np.any(np.diff(temperatures) <= 0):
            raise InvalidDataset('temperatures must be strictly increasing')
        if np.any(chi < 0):
            raise InvalidDataset('susceptibilities must be >= 0')
        temperatures.flags.writeable = False
        chi.flags.writeable = False
        self.temperatures = temperatures
        self.chi = chi
        self.source = source

    def __len__(self):
        return len(self.temperatures)

    def __iter__(self):
        return zip(self.temperatures.tolist(), self.chi.tolist())

    def __repr__(self):
        return f'SusceptibilityDataset({len(self)} records, {self.source!r})'


class FitConfig:
    """What to fit and how.

    Args:
        free_parameters: subset of PARAMETERS, the rest stay at
            initial_guess
        initial_guess: DimerModel, also the first of the starts
        bounds: dict of parameter to (min, max), merged over DEFAULT_BOUNDS
        tolerance: convergence tolerance of the simplex
        max_iterations: simplex iteration cap per start
        weighted: weight squared residuals by 1 / chi^2
        starts: number of starts, the first is initial_guess and the rest
            are drawn uniformly inside the bounds
        seed: seed of the start generator
    """

    def __init__(
        self,
        free_parameters=DEFAULT_FREE_PARAMETERS,
        initial_guess=None,
        bounds=None,
        tolerance=1e-10,
        max_iterations=1000,
        weighted=False,
        starts=8,
        seed=0,
    ):
        free_parameters = tuple(free_parameters)
        unknown = set(free_parameters) - set(PARAMETERS)
        if unknown:
            raise InvalidFitConfig(
                f'unknown parameters {", ".join(sorted(unknown))}, '
                f'expected a subset of {", ".join(PARAMETERS)}'
            )
        if not free_parameters:
            raise InvalidFitConfig('at least one free parameter is required')
        if len(set(free_parameters)) != len(free_parameters):
            raise InvalidFitConfig(
                f'duplicate free parameters: {", ".join(free_parameters)}'
            )
        if initial_guess is None:
            initial_guess = DimerModel(j_over_kb=-1.0, g_factor=2.0)
        merged = dict(DEFAULT_BOUNDS)
        merged.update(bounds or {})
        for name, (low, high) in merged.items():
            if not low < high:
                raise InvalidFitConfig(
                    f'bounds of {name} are empty: [{low}, {high}]'
                )
        if not tolerance > 0:
            raise InvalidFitConfig(f'tolerance must be > 0, got {tolerance}')
        if max_iterations < 1 or starts < 1:
            raise InvalidFitConfig(
                'max_iterations and starts must be positive, got '
                f'{max_iterations} and {starts}'
            )

        self.free_parameters = free_parameters
        self.initial_guess = initial_guess
        self.bounds = merged
        self.tolerance = tolerance
        self.max_iterations = int(max_iterations)
        self.weighted = weighted
        self.starts = int(starts)
        self.seed = seed

        for name, value in _model_values(initial_guess).items():
            low, high = merged[name]
            if name in free_parameters and not low <= value <= high:
                raise InvalidFitConfig(
                    f'initial {name}={value} is outside its bounds '
                    f'[{low}, {high}]'
                )


class FitResult:
    def __init__(self, model, cost, residuals, converged, iterations, start):
        self.model = model
        self.cost = cost
        self.residuals = residuals
        self.converged = converged
        self.iterations = iterations
        self.start = start

    def __repr__(self):
        return (
            f'FitResult(model={self.model!r}, cost={self.cost!r}, '
            f'converged={self.converged!r}, iterations={self.iterations!r})'
        )


def _model_values(model):
    return {
        'j_over_kb': model.j_over_kb,
        'g': model.g,
        'impurity_fraction': model.impurity_fraction,
        'tip': model.tip,
    }


def _model_from_params(params, template):
    values = params.valuesdict()
    g_factor = values['g'] if params['g'].vary else template.g_factor
    return DimerModel(
        j_over_kb=values['j_over_kb'],
        g_factor=g_factor,
        impurity_fraction=values['impurity_fraction'],
        tip=values['tip'],
    )


def predict(model, temperatures):
    '''Susceptibility of the model at each temperature, emu/mol.'''
    return np.array([susceptibility(model, t) for t in temperatures])


def _parameters(config, values):
    params = Parameters()
    for name in PARAMETERS:
        if name in config.free_parameters:
            low, high = config.bounds[name]
            value = min(max(values[name], low), high)
            params.add(name, value=value, min=low, max=high)
        else:
            # fixed values are not clipped to the fit bounds
            params.add(name, value=values[name], vary=False)
    return params


def _starts(config):
    initial = _model_values(config.initial_guess)
    yield initial
    rng = np.random.default_rng(config.seed)
    for _ in range(config.starts - 1):
        values = dict(initial)
        for name in config.free_parameters:
            low, high = config.bounds[name]
            values[name] = float(rng.uniform(low, high))
        yield values


def fit_bleaney_bowers(data, config):
    """Fit DimerModel parameters to a susceptibility dataset.

    Each start runs a bounded Nelder-Mead simplex; the result with the lowest
    cost wins, ties going to the earliest start.

    Args:
        data: SusceptibilityDataset
        config: FitConfig

    Returns:
        FitResult, converged=False results are returned rather than raised

    Raises:
        InsufficientData: fewer records than free parameters + 2
        DegenerateData: every temperature within a 1 K window
    """
    needed = len(config.free_parameters) + 2
    if len(data) < needed:
        raise InsufficientData(
            f'{len(data)} records for {len(config.free_parameters)} free '
            f'parameters, at least {needed} required'
        )
    temperatures = data.temperatures
    if temperatures[-1] - temperatures[0] < DEGENERATE_WINDOW:
        raise DegenerateData(
            f'all temperatures lie within [{temperatures[0]}, '
            f'{temperatures[-1]}] K, a window under {DEGENERATE_WINDOW} K'
        )
    if config.weighted:
        if np.any(data.chi == 0):
            raise InvalidFitConfig('1/chi^2 weighting needs chi > 0')
        weights = 1 / data.chi**2
    else:
        weights = np.ones(len(data))
    # scale free objective for the simplex tolerances; argmin is unchanged
    scale = np.sum(weights * data.chi**2)
    template = config.initial_guess

    def objective(params):
        model = _model_from_params(params, template)
        residuals = data.chi - predict(model, temperatures)
        return np.sum(weights * residuals**2) / scale

    best = None
    for i, values in enumerate(_starts(config)):
        log.debug(f'fit_bleaney_bowers: start {i} from {values}')
        result = minimize(
            objective,
            _parameters(config, values),
            method='nelder',
            calc_covar=False,
            options={
                'xatol': config.tolerance,
                'fatol': config.tolerance**2,
                'maxiter': config.max_iterations,
            },
        )
        model = _model_from_params(result.params, template)
        residuals = data.chi - predict(model, temperatures)
        cost = float(np.sum(weights * residuals**2))
        iterations = int(getattr(result, 'nit', result.nfev))
        log.debug(
            f'fit_bleaney_bowers: start {i} -> {model}, cost={cost!r}, '
            f'success={result.success}'
        )
        if best is None or cost < best.cost:
            best = FitResult(
                model=model,
                cost=cost,
                residuals=residuals,
                converged=bool(result.success),
                iterations=iterations,
                start=i,
            )

    if not best.converged:
        log.warning(
            f'fit_bleaney_bowers: best start {best.start} did not converge in '
            f'{config.max_iterations} iterations'
        )
    return best


def synthesize(model, temperatures, noise=0.0, seed=0, source=None):
    """Synthetic dataset from the model.

    Args:
        model: DimerModel
        temperatures: increasing temperatures, K
        noise: relative standard deviation of multiplicative Gaussian noise
        seed: noise generator seed

    Returns:
        SusceptibilityDataset
    """
    chi = predict(model, temperatures)
    if noise:
        rng = np.random.default_rng(seed)
        chi = chi * (1 + noise * rng.standard_normal(len(chi)))
    if source is None:
        source = f'synthetic from {model}, noise={noise:g}, seed={seed}'
    return SusceptibilityDataset(temperatures, chi, source=source)


def read_dataset(path):
    """Read a `temperature_K,chi_emu_per_mol` CSV file.

    Lines starting with # are comments, their text becomes the source label.

    Raises:
        InvalidDataset for unreadable files, malformed headers or values
    """
    try:
        with open(path, encoding='utf-8') as fh:
            text = fh.read()
    except OSError as e:
        raise InvalidDataset(f'unable to read {path}: {e.strerror}')

    comments = [
        line[1:].strip()
        for line in text.splitlines()
        if line.lstrip().startswith('#')
    ]
    try:
        frame = pd.read_csv(StringIO(text), comment='#', skip_blank_lines=True)
    except pd.errors.EmptyDataError:
        raise InvalidDataset(f'{path} has no header')
    except pd.errors.ParserError as e:
        raise InvalidDataset(f'unable to parse {path}: {e}')

    columns = [str(c).strip() for c in frame.columns]
    if columns != [TEMPERATURE_COLUMN, CHI_COLUMN]:
        raise InvalidDataset(
            f'{path} has header {",".join(columns)}, expected '
            f'{TEMPERATURE_COLUMN},{CHI_COLUMN}'
        )
    try:
        frame = frame.astype(float)
    except ValueError as e:
        raise InvalidDataset(f'non-numeric value in {path}: {e}')

    log.debug(f'read_dataset: {len(frame)} records from {path}')
    return SusceptibilityDataset(
        frame.iloc[:, 0].to_numpy(),
        frame.iloc[:, 1].to_numpy(),
        source=' '.join(comments) or str(path),
    )


def write_dataset(data, fh):
    '''Write a dataset in the read_dataset format.'''
    if data.source:
        for line in data.source.splitlines():
            fh.write(f'# {line}\n')
    fh.write(f'{TEMPERATURE_COLUMN},{CHI_COLUMN}\n')
    for t, chi in data:
        fh.write(f'{format_value(t)},{format_value(chi)}\n')
