#
# Heisenberg dimer thermodynamics in CGS-emu units
#

from logging import getLogger
from math import exp, isfinite, sqrt

import numpy as np
from scipy import constants

from .qlinalg import SIGMA_DOT_SIGMA, validate_state
from .utils import DimerDiscordError

log = getLogger('dimerdiscord.magnetics')

MAX_ABS_J = 1e5
# inverted G may stray this far outside [-1, 1/3] before it is an error
PHYSICAL_RANGE_BAND = 0.02


class InvalidModel(DimerDiscordError):
    pass


class InvalidTemperature(DimerDiscordError):
    pass


class NonPositiveComponent(DimerDiscordError):
    pass


class OutOfPhysicalRange(DimerDiscordError):
    pass


class PhysicalConstants:
    """CODATA constants in the CGS units of the magnetochemistry literature.

    avogadro: 1/mol, boltzmann: erg/K, bohr_magneton: erg/G,
    hc_over_kb: K cm (wavenumber to kelvin)
    """

    # CODATA 2018; N_A, k_B, h and c are exact SI values so only the Bohr
    # magneton needs pinning against newer adjustments
    BOHR_MAGNETON_SI = 9.2740100783e-24

    def __init__(self):
        self.avogadro = constants.N_A
        # J/K -> erg/K
        self.boltzmann = constants.k * 1e7
        # J/T -> erg/G
        self.bohr_magneton = self.BOHR_MAGNETON_SI * 1e3
        # m K -> cm K
        self.hc_over_kb = constants.h * constants.c / constants.k * 1e2

    @property
    def curie_prefactor(self):
        '''N_A mu_B^2 / k_B in emu K / mol'''
        return self.avogadro * self.bohr_magneton**2 / self.boltzmann

    def __setattr__(self, name, value):
        if name in self.__dict__:
            raise AttributeError(f'{name} is immutable')
        super().__setattr__(name, value)


CONSTANTS = PhysicalConstants()


def effective_g(components):
    """Polycrystalline g-factor, g^2 = (g_x^2 + g_y^2 + g_z^2) / 3.

    Raises:
        NonPositiveComponent
    """
    components = tuple(float(c) for c in components)
    if len(components) != 3:
        raise InvalidModel(
            f'expected 3 g-factor components, got {len(components)}'
        )
    for c in components:
        if not c > 0:
            raise NonPositiveComponent(
                f'g-factor components must be positive, got {components}'
            )
    return sqrt(sum(c * c for c in components) / 3)


def _scalar_g(g_factor):
    if isinstance(g_factor, (tuple, list)):
        return effective_g(g_factor)
    g = float(g_factor)
    if not g > 0 or not isfinite(g):
        raise NonPositiveComponent(f'g-factor must be positive, got {g}')
    return g


class DimerModel:
    """Exchange coupled S=1/2 dimer, H = -(1/2) J sigma_1 . sigma_2.

    Args:
        j_over_kb: exchange constant J/k_B in kelvin, negative is
            antiferromagnetic
        g_factor: isotropic g or (g_x, g_y, g_z)
        impurity_fraction: mole fraction of uncoupled paramagnetic impurity
            in [0, 1)
        tip: temperature independent paramagnetism, emu/mol
    """

    def __init__(self, j_over_kb, g_factor=2.0, impurity_fraction=0.0, tip=0.0):
        j_over_kb = float(j_over_kb)
        if not abs(j_over_kb) < MAX_ABS_J:
            raise InvalidModel(
                f'|J/k_B| must be below {MAX_ABS_J:g} K, got {j_over_kb}'
            )
        if isinstance(g_factor, (tuple, list)):
            g_factor = tuple(float(c) for c in g_factor)
        else:
            g_factor = float(g_factor)
        self.g = _scalar_g(g_factor)
        impurity_fraction = float(impurity_fraction)
        if not 0 <= impurity_fraction < 1:
            raise InvalidModel(
                f'impurity fraction must be in [0, 1), got {impurity_fraction}'
            )
        tip = float(tip)
        if not isfinite(tip):
            raise InvalidModel(f'TIP must be finite, got {tip}')

        self.j_over_kb = j_over_kb
        self.g_factor = g_factor
        self.impurity_fraction = impurity_fraction
        self.tip = tip

    def replace(self, **kwargs):
        '''Copy of this model with some fields changed.'''
        values = {
            'j_over_kb': self.j_over_kb,
            'g_factor': self.g_factor,
            'impurity_fraction': self.impurity_fraction,
            'tip': self.tip,
        }
        values.update(kwargs)
        return DimerModel(**values)

    def __repr__(self):
        return (
            f'DimerModel(j_over_kb={self.j_over_kb!r}, '
            f'g_factor={self.g_factor!r}, '
            f'impurity_fraction={self.impurity_fraction!r}, tip={self.tip!r})'
        )

    def __eq__(self, other):
        if not isinstance(other, DimerModel):
            return NotImplemented
        return (
            self.j_over_kb,
            self.g_factor,
            self.impurity_fraction,
            self.tip,
        ) == (
            other.j_over_kb,
            other.g_factor,
            other.impurity_fraction,
            other.tip,
        )

    def __hash__(self):
        return hash(
            (self.j_over_kb, self.g_factor, self.impurity_fraction, self.tip)
        )


def validate_temperature(t):
    t = float(t)
    if not t > 0 or not isfinite(t):
        raise InvalidTemperature(
            f'temperature must be positive and finite, got {t}'
        )
    return t


def _weights(model, t):
    # per state Boltzmann weights of the triplet and the singlet, 3a + b = 1;
    # u = 2J / k_B T, a = 1 / (3 + e^-u), b = e^-u / (3 + e^-u)
    u = 2 * model.j_over_kb / validate_temperature(t)
    if u >= 0:
        r = exp(-u)
        return 1 / (3 + r), r / (3 + r)
    r = exp(u)
    return r / (3 * r + 1), 1 / (3 * r + 1)


def hamiltonian(model):
    '''H / k_B = -(1/2) J sigma_1 . sigma_2 as a 4x4 array in kelvin.'''
    return -0.5 * model.j_over_kb * SIGMA_DOT_SIGMA


def partition_function(model, t):
    '''Z = 3 e^L + e^-3L with L = J / 2 k_B T.'''
    big_l = model.j_over_kb / (2 * validate_temperature(t))
    return 3 * exp(big_l) + exp(-3 * big_l)


def thermal_state(model, t):
    """Thermal density matrix exp(-H / k_B T) / Z of the dimer.

    Built from the triplet and singlet weights so that neither overflows at
    low temperature; equal to (1 + G sigma_1 . sigma_2) / 4.

    Returns:
        QubitPairState
    """
    a, b = _weights(model, t)
    diagonal = (a + b) / 2
    off = (a - b) / 2
    return validate_state(
        [
            [a, 0, 0, 0],
            [0, diagonal, off, 0],
            [0, off, diagonal, 0],
            [0, 0, 0, a],
        ]
    )


def spin_correlation(model, t):
    '''G(T) = 4 / (3 + exp(-2J / k_B T)) - 1'''
    a, _ = _weights(model, t)
    return 4 * a - 1


def curie_susceptibility(g, t):
    '''chi_curie = N_A g^2 mu_B^2 / (2 k_B T), the uncorrelated dimer.'''
    g = _scalar_g(g)
    return CONSTANTS.curie_prefactor * g * g / (2 * validate_temperature(t))


def susceptibility(model, t):
    """Molar susceptibility in emu/mol.

    Bleaney-Bowers, chi = 2 N_A g^2 mu_B^2 / (k_B T (3 + exp(-2J / k_B T))),
    mixed with a Curie tail of impurity_fraction and offset by the TIP.
    """
    t = validate_temperature(t)
    a, _ = _weights(model, t)
    g2 = model.g * model.g
    dimer = 2 * CONSTANTS.curie_prefactor * g2 * a / t
    rho = model.impurity_fraction
    if rho:
        dimer = (1 - rho) * dimer + rho * curie_susceptibility(model.g, t)
    return dimer + model.tip


def correlation_from_susceptibility(chi, t, g):
    """Invert the Bleaney-Bowers equation, G = chi / chi_curie - 1.

    Args:
        chi: molar susceptibility, emu/mol
        t: temperature, K
        g: isotropic g or (g_x, g_y, g_z)

    Returns:
        G clamped into [-1, 1/3]

    Raises:
        OutOfPhysicalRange if G falls more than 0.02 outside [-1, 1/3]
    """
    g_value = chi / curie_susceptibility(g, t) - 1
    low = -1 - PHYSICAL_RANGE_BAND
    high = 1 / 3 + PHYSICAL_RANGE_BAND
    if not low <= g_value <= high:
        raise OutOfPhysicalRange(
            f'G={g_value:.6g} at T={t} K is outside [-1, 1/3]; wrong g, '
            'impurity contamination or non-dimer physics'
        )
    clamped = min(max(g_value, -1.0), 1 / 3)
    if clamped != g_value:
        log.debug(f'clamped G={g_value!r} to {clamped!r} at T={t} K')
    return clamped


def wavenumber_to_kelvin(v):
    '''cm^-1 -> K'''
    return v * CONSTANTS.hc_over_kb


def temperature_grid(t_min, t_max, steps, logarithmic=False):
    """Temperatures for sweeps and synthetic data.

    Returns:
        numpy array of `steps` temperatures, linear or geometric spacing
    """
    t_min = validate_temperature(t_min)
    t_max = validate_temperature(t_max)
    if logarithmic:
        return np.geomspace(t_min, t_max, steps)
    return np.linspace(t_min, t_max, steps)
