#
# Mutual information, classical correlations, discord and super-discord
#

from logging import getLogger

import numpy as np
from scipy.optimize import minimize
from scipy.special import xlogy

from .measurements import (
    PROJECTIVE,
    BlochDirection,
    batch_conditional_states,
    strength_tanh,
    validate_strength,
)
from .qlinalg import (
    IDENTITY_4,
    SIGMA_DOT_SIGMA,
    SUBSYSTEM_A,
    SUBSYSTEM_B,
    batch_entropy,
    partial_trace,
    validate_state,
    von_neumann_entropy,
)
from .utils import DimerDiscordError

log = getLogger('dimerdiscord.correlations')

G_MIN = -1.0
G_MAX = 1 / 3
G_TOLERANCE = 1e-12
# werner_state keeps this much headroom above the singlet limit
WERNER_HEADROOM = 1e-12
# values this far below zero are floating noise and clamp to zero
CLAMP_TOLERANCE = 1e-10

_LN2 = np.log(2)


class OutOfRange(DimerDiscordError):
    pass


class OptimizerDidNotConverge(DimerDiscordError):
    pass


class InconsistentResult(DimerDiscordError):
    pass


class OptimizerConfig:
    """Settings of the measurement direction search.

    A uniform theta x phi grid seeds a Nelder-Mead refinement of the best
    grid point.

    Args:
        theta_steps: grid points in theta over [0, pi]
        phi_steps: grid points in phi over [0, 2 pi)
        fatol: absolute objective tolerance of the refinement
        xatol: absolute angle tolerance of the refinement
        max_iterations: refinement iteration cap
    """

    def __init__(
        self,
        theta_steps=64,
        phi_steps=64,
        fatol=1e-12,
        xatol=1e-8,
        max_iterations=500,
    ):
        if theta_steps < 2 or phi_steps < 1:
            raise DimerDiscordError(
                f'grid must be at least 2x1, got {theta_steps}x{phi_steps}'
            )
        if max_iterations < 1:
            raise DimerDiscordError(
                f'max_iterations must be positive, got {max_iterations}'
            )
        self.theta_steps = int(theta_steps)
        self.phi_steps = int(phi_steps)
        self.fatol = fatol
        self.xatol = xatol
        self.max_iterations = int(max_iterations)

    def grid(self):
        """The seed directions, theta major.

        Returns:
            (thetas, phis) flattened so that index order is smallest theta,
            then smallest phi
        """
        thetas = np.linspace(0, np.pi, self.theta_steps)
        phis = np.linspace(0, 2 * np.pi, self.phi_steps, endpoint=False)
        thetas, phis = np.meshgrid(thetas, phis, indexing='ij')
        return thetas.ravel(), phis.ravel()


DEFAULT_OPTIMIZER = OptimizerConfig()


class CorrelationReport:
    '''Mutual information split into its classical and quantum parts.'''

    def __init__(
        self,
        mutual_information,
        classical_correlation,
        discord,
        optimal_direction,
        strength,
    ):
        self.mutual_information = mutual_information
        self.classical_correlation = classical_correlation
        self.discord = discord
        self.optimal_direction = optimal_direction
        self.strength = strength

    def __repr__(self):
        return (
            f'CorrelationReport(mutual_information={self.mutual_information!r}'
            f', classical_correlation={self.classical_correlation!r}'
            f', discord={self.discord!r}'
            f', optimal_direction={self.optimal_direction!r}'
            f', strength={self.strength!r})'
        )


def _clamp(value, name):
    if value < -CLAMP_TOLERANCE:
        raise InconsistentResult(
            f'{name} = {value:.3e} is negative beyond floating noise'
        )
    return max(value, 0.0)


def _xlog2x(value):
    return xlogy(value, value) / _LN2


def validate_correlation(g):
    """Validate a spin correlation G.

    Returns:
        G as a float clamped into [-1, 1/3]

    Raises:
        OutOfRange if G is outside [-1, 1/3] by more than 1e-12
    """
    g = float(g)
    if not G_MIN - G_TOLERANCE <= g <= G_MAX + G_TOLERANCE:
        raise OutOfRange(f'spin correlation G={g} is outside [-1, 1/3]')
    return min(max(g, G_MIN), G_MAX)


def werner_state(g):
    """The dimer state (1 + G sigma_1 . sigma_2) / 4.

    Args:
        g: spin correlation in (-1 + 1e-12, 1/3]

    Returns:
        QubitPairState
    """
    g = validate_correlation(g)
    if g <= G_MIN + WERNER_HEADROOM:
        raise OutOfRange(
            f'spin correlation G={g} is too close to the singlet limit, '
            f'need G > {G_MIN + WERNER_HEADROOM}'
        )
    return validate_state((IDENTITY_4 + g * SIGMA_DOT_SIGMA) / 4)


def mutual_information(rho):
    '''I = S(rho_A) + S(rho_B) - S(rho_AB) in bits.'''
    value = (
        von_neumann_entropy(partial_trace(rho, SUBSYSTEM_A))
        + von_neumann_entropy(partial_trace(rho, SUBSYSTEM_B))
        - von_neumann_entropy(rho)
    )
    return _clamp(value, 'mutual information')


def _information_gain(rho, entropy_a, vectors, x):
    # S(rho_A) - sum_y p(y) S(rho_A|y) for each direction
    probabilities, states = batch_conditional_states(rho, vectors, x)
    safe = np.where(probabilities > 0, probabilities, 1.0)
    entropies = batch_entropy(states / safe[..., np.newaxis, np.newaxis])
    weighted = np.where(probabilities > 0, probabilities * entropies, 0.0)
    return entropy_a - weighted.sum(axis=0)


def _angles_to_vectors(thetas, phis):
    sin_theta = np.sin(thetas)
    return np.stack(
        [sin_theta * np.cos(phis), sin_theta * np.sin(phis), np.cos(thetas)],
        axis=-1,
    )


def _maximize(rho, x, optimizer):
    optimizer = optimizer or DEFAULT_OPTIMIZER
    entropy_a = von_neumann_entropy(partial_trace(rho, SUBSYSTEM_A))

    thetas, phis = optimizer.grid()
    values = _information_gain(
        rho, entropy_a, _angles_to_vectors(thetas, phis), x
    )
    # argmax returns the first maximum, i.e. smallest theta then smallest phi
    best = int(np.argmax(values))
    seed = np.array([thetas[best], phis[best]])
    log.debug(
        f'_maximize: x={x}, grid best {values[best]!r} at theta={seed[0]}, '
        f'phi={seed[1]}'
    )

    if values.max() - values.min() <= optimizer.fatol:
        # direction independent objective, nothing to refine
        direction = BlochDirection.from_angles(*seed)
        return _clamp(float(values[best]), 'classical correlation'), direction

    def objective(angles):
        vectors = _angles_to_vectors(angles[:1], angles[1:])
        return -float(_information_gain(rho, entropy_a, vectors, x)[0])

    result = minimize(
        objective,
        seed,
        method='Nelder-Mead',
        options={
            'fatol': optimizer.fatol,
            'xatol': optimizer.xatol,
            'maxiter': optimizer.max_iterations,
        },
    )
    if result.status != 0:
        raise OptimizerDidNotConverge(
            f'direction refinement stopped after {result.nit} iterations: '
            f'{result.message}'
        )

    refined = -float(result.fun)
    if refined > values[best]:
        value = refined
        direction = BlochDirection.from_angles(*result.x)
    else:
        value = float(values[best])
        direction = BlochDirection.from_angles(*seed)
    log.debug(f'_maximize: refined to {value!r} along {direction}')
    return _clamp(value, 'classical correlation'), direction


def classical_correlation_projective(rho, optimizer=None):
    """Classical correlation extractable by projective measurements on B.

    C = max over directions of S(rho_A) - sum_i p_i S(rho_A^i)

    Args:
        rho: QubitPairState
        optimizer: OptimizerConfig, defaults to a 64x64 grid

    Returns:
        (bits, BlochDirection of the maximum)

    Raises:
        OptimizerDidNotConverge
    """
    return _maximize(rho, PROJECTIVE, optimizer)


def classical_correlation_weak(rho, x, optimizer=None):
    '''As classical_correlation_projective with weak measurements of strength
    x on B.'''
    return _maximize(rho, validate_strength(x), optimizer)


def _report(rho, classical, x):
    information = mutual_information(rho)
    value, direction = classical
    discord = _clamp(information - value, 'discord')
    return CorrelationReport(
        mutual_information=information,
        classical_correlation=information - discord,
        discord=discord,
        optimal_direction=direction,
        strength=x,
    )


def quantum_discord_numeric(rho, optimizer=None):
    '''D = I - C by direct optimisation over projective measurements.'''
    return _report(
        rho, classical_correlation_projective(rho, optimizer), PROJECTIVE
    )


def super_discord_numeric(rho, x, optimizer=None):
    '''D_w = I - C_w by direct optimisation over weak measurements.'''
    x = validate_strength(x)
    return _report(rho, classical_correlation_weak(rho, x, optimizer), x)


def mutual_information_closed_form(g):
    '''2 - S(rho_AB) for the dimer state with spin correlation g.'''
    g = validate_correlation(g)
    value = 2 + 3 * _xlog2x((1 + g) / 4) + _xlog2x((1 - 3 * g) / 4)
    return _clamp(float(value), 'mutual information')


def discord_closed_form(g):
    """Quantum discord of the dimer state with spin correlation g.

    D = (1+G)/4 log(1+G) - (1-G)/2 log(1-G) + (1-3G)/4 log(1-3G)

    Raises:
        OutOfRange
    """
    g = validate_correlation(g)
    value = (
        _xlog2x(1 + g) / 4 - _xlog2x(1 - g) / 2 + _xlog2x(1 - 3 * g) / 4
    )
    return _clamp(float(value), 'discord')


def super_discord_closed_form(g, x):
    """Super-quantum discord of the dimer state for weak measurements.

    D_w = 1 + (1-3G)/4 log((1-3G)/4) + 3(1+G)/4 log((1+G)/4)
          - (1-Gt)/2 log((1-Gt)/2) - (1+Gt)/2 log((1+Gt)/2)

    with t = tanh(x), t = 1 in the projective limit.

    Raises:
        OutOfRange, NegativeStrength
    """
    g = validate_correlation(g)
    gt = g * strength_tanh(x)
    value = (
        1
        + _xlog2x((1 - 3 * g) / 4)
        + 3 * _xlog2x((1 + g) / 4)
        - _xlog2x((1 - gt) / 2)
        - _xlog2x((1 + gt) / 2)
    )
    return _clamp(float(value), 'super-quantum discord')
