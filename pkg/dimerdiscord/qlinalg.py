#
# Dense linear algebra for one and two qubit density matrices
#

import numpy as np
from scipy.linalg import eigvalsh
from scipy.special import xlogy

from .utils import DimerDiscordError

HERMITIAN_TOLERANCE = 1e-12
TRACE_TOLERANCE = 1e-12
PSD_TOLERANCE = 1e-10
# eigenvalues below this are exact zeros as far as entropy is concerned
ENTROPY_CUTOFF = 1e-14

SUBSYSTEM_A = 'A'
SUBSYSTEM_B = 'B'

IDENTITY_2 = np.eye(2, dtype=complex)
IDENTITY_4 = np.eye(4, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = np.array([SIGMA_X, SIGMA_Y, SIGMA_Z])
# sigma_1 . sigma_2 = sum_a sigma^a (x) sigma^a
SIGMA_DOT_SIGMA = sum(np.kron(s, s) for s in PAULI)


class InvalidShape(DimerDiscordError):
    pass


class NotHermitian(DimerDiscordError):
    pass


class TraceNotOne(DimerDiscordError):
    pass


class NotPositiveSemidefinite(DimerDiscordError):
    pass


class DensityMatrix:
    '''A validated density matrix, see validate_state and validate_qubit.'''

    dim = None

    def __init__(self, elements):
        elements = np.array(elements, dtype=complex)
        elements.flags.writeable = False
        self.elements = elements

    def __repr__(self):
        return f'{self.__class__.__name__}({self.elements.tolist()!r})'

    def __eq__(self, other):
        if not isinstance(other, DensityMatrix):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(
            self.elements, other.elements
        )

    __hash__ = None


class QubitPairState(DensityMatrix):
    dim = 4


class SingleQubitState(DensityMatrix):
    dim = 2


def _validate(m, cls):
    m = np.asarray(m, dtype=complex)
    if m.shape != (cls.dim, cls.dim):
        raise InvalidShape(
            f'expected a {cls.dim}x{cls.dim} matrix, got shape {m.shape}'
        )

    deviation = np.max(np.abs(m - m.conj().T))
    if deviation > HERMITIAN_TOLERANCE:
        raise NotHermitian(
            f'matrix is not Hermitian: max |m - m^H| = {deviation:.3e} '
            f'exceeds {HERMITIAN_TOLERANCE:g}'
        )
    # symmetrise away the sub-tolerance noise before the eigensolve
    m = (m + m.conj().T) / 2

    deviation = abs(np.trace(m) - 1)
    if deviation > TRACE_TOLERANCE:
        raise TraceNotOne(
            f'trace is not one: |Tr - 1| = {deviation:.3e} exceeds '
            f'{TRACE_TOLERANCE:g}'
        )

    values, vectors = np.linalg.eigh(m)
    if values[0] < -PSD_TOLERANCE:
        raise NotPositiveSemidefinite(
            f'matrix is not positive semidefinite: min eigenvalue '
            f'{values[0]:.3e} is below -{PSD_TOLERANCE:g}'
        )
    if values[0] < 0:
        # clamp floating noise, no renormalisation
        values = np.clip(values, 0, None)
        m = (vectors * values) @ vectors.conj().T

    return cls(m)


def validate_state(m):
    """Validate a 4x4 two qubit density matrix.

    Args:
        m: 4x4 complex array-like

    Returns:
        QubitPairState

    Raises:
        NotHermitian, TraceNotOne, NotPositiveSemidefinite, checked in that
        order; the message carries the measured violation.
    """
    return _validate(m, QubitPairState)


def validate_qubit(m):
    """Validate a 2x2 single qubit density matrix, see validate_state."""
    return _validate(m, SingleQubitState)


def reduced_matrix(elements, keep):
    """Partial trace of a raw 4x4 array (not necessarily unit trace).

    Index order is (A, B) with A the most significant qubit.
    """
    t = np.asarray(elements).reshape(2, 2, 2, 2)
    if keep == SUBSYSTEM_A:
        return np.einsum('abcb->ac', t)
    elif keep == SUBSYSTEM_B:
        return np.einsum('abad->bd', t)
    raise DimerDiscordError(
        f'unknown subsystem {keep!r}, expected {SUBSYSTEM_A!r} or '
        f'{SUBSYSTEM_B!r}'
    )


def partial_trace(rho, keep):
    """Reduced state of the kept subsystem.

    Args:
        rho: QubitPairState
        keep: SUBSYSTEM_A or SUBSYSTEM_B

    Returns:
        SingleQubitState
    """
    return validate_qubit(reduced_matrix(rho.elements, keep))


def spectrum(rho):
    '''Eigenvalues of a validated state, descending.'''
    return eigvalsh(rho.elements)[::-1]


def entropy_of_values(values):
    """Shannon entropy in bits of a probability vector (or stack of them).

    Values below ENTROPY_CUTOFF contribute nothing, 0 log 0 = 0.
    """
    values = np.asarray(values, dtype=float)
    values = np.where(values < ENTROPY_CUTOFF, 0.0, values)
    return np.maximum(-xlogy(values, values).sum(axis=-1) / np.log(2), 0.0)


def von_neumann_entropy(rho):
    """Von Neumann entropy in bits.

    Args:
        rho: SingleQubitState or QubitPairState

    Returns:
        float >= 0
    """
    return float(entropy_of_values(spectrum(rho)))


def batch_entropy(matrices):
    """Von Neumann entropies of a stack of Hermitian matrices.

    No validation, callers are the optimizer hot loops.

    Args:
        matrices: (..., d, d) complex array of unit trace Hermitian matrices

    Returns:
        (...,) float array of entropies in bits
    """
    return entropy_of_values(np.linalg.eigvalsh(matrices))


def product_state(rho_a, rho_b):
    '''rho_a (x) rho_b for two SingleQubitStates.'''
    return validate_state(np.kron(rho_a.elements, rho_b.elements))


def pure_state(amplitudes):
    '''|psi><psi| for a normalised 4 component amplitude vector.'''
    psi = np.asarray(amplitudes, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return validate_state(np.outer(psi, psi.conj()))


def bell_state():
    '''|Phi+> = (|00> + |11>) / sqrt(2)'''
    return pure_state([1, 0, 0, 1])


def singlet_state():
    '''(|01> - |10>) / sqrt(2)'''
    return pure_state([0, 1, -1, 0])
