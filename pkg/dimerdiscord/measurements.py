#
# Projective and weak two outcome measurements acting on qubit B
#

from math import atan2, cos, isinf, isnan, pi, sin, tau

import numpy as np
from scipy.special import expit

from .qlinalg import (
    IDENTITY_2,
    PAULI,
    SUBSYSTEM_A,
    reduced_matrix,
    validate_qubit,
)
from .utils import DimerDiscordError

# measurement strength of the projective limit
PROJECTIVE = float('inf')

PLUS = 1
MINUS = -1
OUTCOMES = (PLUS, MINUS)

ZERO_PROBABILITY = 1e-14


class InvalidDirection(DimerDiscordError):
    pass


class NegativeStrength(DimerDiscordError):
    pass


class InvalidOutcome(DimerDiscordError):
    pass


class ZeroProbability(DimerDiscordError):
    pass


class BlochDirection:
    """Measurement axis on the Bloch sphere.

    Args:
        theta: polar angle in [0, pi]
        phi: azimuth in [0, 2 pi)
    """

    def __init__(self, theta, phi):
        theta = float(theta)
        phi = float(phi)
        if not 0 <= theta <= pi:
            raise InvalidDirection(f'theta={theta} is outside [0, pi]')
        if not 0 <= phi < tau:
            raise InvalidDirection(f'phi={phi} is outside [0, 2 pi)')
        self.theta = theta
        self.phi = phi

    @classmethod
    def from_angles(cls, theta, phi):
        '''Canonical direction for arbitrary, possibly out of range, angles.'''
        return cls.from_vector(
            (sin(theta) * cos(phi), sin(theta) * sin(phi), cos(theta))
        )

    @classmethod
    def from_vector(cls, vector):
        x, y, z = (float(v) for v in vector)
        norm = (x * x + y * y + z * z) ** 0.5
        if norm == 0 or isnan(norm):
            raise InvalidDirection(f'cannot normalise {vector!r}')
        z = min(max(z / norm, -1.0), 1.0)
        theta = np.arccos(z)
        phi = atan2(y, x) % tau if theta not in (0, pi) else 0.0
        if phi >= tau:
            phi = 0.0
        return cls(theta, phi)

    @property
    def vector(self):
        '''Unit vector n = (sin t cos p, sin t sin p, cos t)'''
        return np.array(
            [
                sin(self.theta) * cos(self.phi),
                sin(self.theta) * sin(self.phi),
                cos(self.theta),
            ]
        )

    def __repr__(self):
        return f'BlochDirection({self.theta!r}, {self.phi!r})'

    def __eq__(self, other):
        if not isinstance(other, BlochDirection):
            return NotImplemented
        return (self.theta, self.phi) == (other.theta, other.phi)

    def __hash__(self):
        return hash((self.theta, self.phi))


class WeakMeasurementPair:
    '''The operators P(x) and P(-x) of a two outcome weak measurement.'''

    def __init__(self, p_plus, p_minus):
        self.p_plus = p_plus
        self.p_minus = p_minus

    def operator(self, outcome):
        if outcome == PLUS:
            return self.p_plus
        elif outcome == MINUS:
            return self.p_minus
        raise InvalidOutcome(f'outcome must be +1 or -1, got {outcome!r}')

    def __repr__(self):
        return (
            f'WeakMeasurementPair({self.p_plus.tolist()!r}, '
            f'{self.p_minus.tolist()!r})'
        )


class ConditionalOutcome:
    '''State of A conditioned on one outcome on B, with its probability.'''

    def __init__(self, state, probability):
        self.state = state
        self.probability = probability

    def __repr__(self):
        return f'ConditionalOutcome({self.state!r}, {self.probability!r})'


def validate_strength(x):
    """Validate a measurement strength.

    Returns:
        float x >= 0, PROJECTIVE for the projective limit

    Raises:
        NegativeStrength for negative (or NaN) strengths
    """
    x = float(x)
    if isnan(x) or x < 0:
        raise NegativeStrength(f'measurement strength must be >= 0, got {x}')
    return x


def strength_tanh(x):
    '''tanh(x) with tanh(PROJECTIVE) := 1'''
    x = validate_strength(x)
    if isinf(x):
        return 1.0
    return float(np.tanh(x))


def _amplitudes(x):
    # sqrt((1 - tanh x) / 2) and sqrt((1 + tanh x) / 2); the expit form keeps
    # full relative precision of the small amplitude at large x
    x = validate_strength(x)
    if isinf(x):
        return 0.0, 1.0
    return float(np.sqrt(expit(-2 * x))), float(np.sqrt(expit(2 * x)))


def batch_projectors(vectors):
    """Projector pairs for a stack of unit vectors.

    Args:
        vectors: (N, 3) array of unit vectors

    Returns:
        (plus, minus), each (N, 2, 2) with Pi_pm = (I +- n.sigma) / 2
    """
    n_sigma = np.einsum('ni,ijk->njk', vectors, PAULI)
    return (IDENTITY_2 + n_sigma) / 2, (IDENTITY_2 - n_sigma) / 2


def batch_weak_operators(vectors, x):
    '''(P(x), P(-x)) for a stack of unit vectors, each (N, 2, 2).'''
    plus, minus = batch_projectors(vectors)
    if isinf(validate_strength(x)):
        # projective limit: P(x) -> Pi_-, P(-x) -> Pi_+
        return minus, plus
    small, large = _amplitudes(x)
    return small * plus + large * minus, large * plus + small * minus


def projectors_from_direction(direction):
    """Orthogonal projectors along a Bloch direction.

    Returns:
        (Pi_+, Pi_-) as 2x2 complex arrays, Pi_+ + Pi_- = I
    """
    plus, minus = batch_projectors(direction.vector[np.newaxis])
    return plus[0], minus[0]


def weak_pair(direction, x):
    """Weak measurement operators along a direction.

    P(x) = sqrt((1 - tanh x) / 2) Pi_+ + sqrt((1 + tanh x) / 2) Pi_-
    P(-x) = sqrt((1 + tanh x) / 2) Pi_+ + sqrt((1 - tanh x) / 2) Pi_-

    Args:
        direction: BlochDirection
        x: measurement strength >= 0, PROJECTIVE for the projective limit

    Returns:
        WeakMeasurementPair
    """
    p_plus, p_minus = batch_weak_operators(direction.vector[np.newaxis], x)
    return WeakMeasurementPair(p_plus[0], p_minus[0])


def _conditional(rho, operator):
    # (I (x) P) rho (I (x) P)^dagger
    local = np.kron(IDENTITY_2, operator)
    sandwiched = local @ rho.elements @ local.conj().T
    probability = float(np.trace(sandwiched).real)
    if probability < ZERO_PROBABILITY:
        raise ZeroProbability(
            f'outcome probability {probability:.3e} is below '
            f'{ZERO_PROBABILITY:g}'
        )
    state = validate_qubit(
        reduced_matrix(sandwiched, SUBSYSTEM_A) / probability
    )
    return ConditionalOutcome(state, min(probability, 1.0))


def conditional_state_weak(rho, direction, x, outcome):
    """Conditional state of A after a weak measurement on B.

    rho_A|y = Tr_B[(I (x) P(y)) rho (I (x) P(y))^dagger] / p(y)

    Args:
        rho: QubitPairState
        direction: BlochDirection of the underlying projectors
        x: measurement strength
        outcome: PLUS for P(x), MINUS for P(-x)

    Returns:
        ConditionalOutcome

    Raises:
        ZeroProbability if p(y) < 1e-14
    """
    return _conditional(rho, weak_pair(direction, x).operator(outcome))


def conditional_state_projective(rho, direction, outcome):
    '''Conditional state of A after projecting B onto Pi_+ (PLUS) or Pi_-.'''
    plus, minus = projectors_from_direction(direction)
    if outcome == PLUS:
        return _conditional(rho, plus)
    elif outcome == MINUS:
        return _conditional(rho, minus)
    raise InvalidOutcome(f'outcome must be +1 or -1, got {outcome!r}')


def batch_conditional_states(rho, vectors, x):
    """Unnormalised conditional states of A for a stack of directions.

    Uses Tr_B[(I (x) P) rho (I (x) P)^dagger] = Tr_B[(I (x) P^dagger P) rho].

    Args:
        rho: QubitPairState
        vectors: (N, 3) unit vectors
        x: measurement strength

    Returns:
        (probabilities, states) shaped (2, N) and (2, N, 2, 2), outcome PLUS
        first
    """
    t = rho.elements.reshape(2, 2, 2, 2)
    states = []
    for operator in batch_weak_operators(vectors, x):
        effect = np.einsum('nji,njk->nik', operator.conj(), operator)
        states.append(np.einsum('nbe,aecb->nac', effect, t))
    states = np.array(states)
    probabilities = np.einsum('onaa->on', states).real
    return probabilities, states
