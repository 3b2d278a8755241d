"""
Classical mutual information between local observables and its averages
over one or both Bloch spheres
"""
from __future__ import annotations

import logging
import math
from typing import Literal

import mpmath
import numpy as np
from numpy.polynomial.polynomial import polyval
from scipy.special import entr, xlogy

from bloch_core import (
    Observable,
    ObservablePair,
    TwoQubitState,
    joint_distribution,
    require_physical,
)
from config import CLASSIFY_TOL
from errors import DegenerateInputError, DomainError, InvalidInputError
from sphere_avg import (
    DEFAULT_QUADRATURE,
    QuadratureSpec,
    average_s2,
    average_s2x_s2,
    for_correlation_bound,
)

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)
SQRT3 = math.sqrt(3.0)
LIMIT_TOL = 1e-12
SERIES_BELOW = 0.05
SERIES_TERMS = 12
MP_DPS = 40

# <I>_{S^2} at R = 1, i.e. 1 - 1/(2 ln 2)
SINGLE_SPHERE_MAX = 1.0 - 1.0 / (2.0 * LN2)


def shannon_entropy(probabilities: np.ndarray) -> float:
    """Entropy in bits, 0 log 0 = 0."""
    return float(np.sum(entr(np.asarray(probabilities, dtype=float))) / LN2)


def mi_of_x(x: np.ndarray | float) -> np.ndarray | float:
    """
    I(x) = ((1-x) log2(1-x) + (1+x) log2(1+x)) / 2 for unpolarized marginals.
    |x| within LIMIT_TOL of 1 is snapped to the exact limit 1.
    """
    x = np.asarray(x, dtype=float)
    x = np.where(np.abs(np.abs(x) - 1.0) < LIMIT_TOL, np.sign(x), x)
    values = (xlogy(1.0 - x, 1.0 - x) + xlogy(1.0 + x, 1.0 + x)) / (2.0 * LN2)
    values = np.where(np.abs(x) == 1.0, 1.0, np.maximum(values, 0.0))
    return float(values) if values.ndim == 0 else values


def pair_mi_integrand(state: TwoQubitState):
    """I(n, m) as a broadcasting callable for sphere_avg."""
    c_vec = state.c_vec

    def integrand(n: np.ndarray, m: np.ndarray) -> np.ndarray:
        return mi_of_x(np.sum(n * c_vec * m, axis=-1))

    return integrand


def mutual_information(
    state: TwoQubitState, pair: ObservablePair, oracle: bool = False
) -> float:
    """I(n, m) in bits from the joint outcome table; closed form in x for MMMS."""
    require_physical(state, oracle)
    if state.is_mmms:
        x = float(np.sum(pair.n.array * state.c_vec * pair.m.array))
        return float(mi_of_x(x))

    joint = joint_distribution(state, pair, oracle=oracle)
    value = (
        shannon_entropy(np.array(joint.pA))
        + shannon_entropy(np.array(joint.pB))
        - shannon_entropy(joint.table)
    )
    return max(value, 0.0)


# --------------------------------------------------------------------
#  SINGLE-SPHERE AVERAGE
# --------------------------------------------------------------------
def radial_moment(state: TwoQubitState, m: np.ndarray) -> np.ndarray | float:
    """R = m E E^T m^T = sum_i (kappa c_i m_i)^2, vectorized over the last axis."""
    values = np.sum((state.c_vec * np.asarray(m)) ** 2, axis=-1)
    return float(values) if np.ndim(values) == 0 else values


def _series_coefficients(terms: int) -> np.ndarray:
    h = np.arange(1, terms + 1, dtype=float)
    return np.concatenate(([0.0], 1.0 / (h * (2 * h - 1) * (2 * h + 1) * 2.0 * LN2)))


# R^h / (h (2h-1) (2h+1) 2 ln2), h = 1..SERIES_TERMS
_SERIES = _series_coefficients(SERIES_TERMS)


def single_sphere_average(R: np.ndarray) -> np.ndarray:
    """
    Closed form of <I>_{S^2} written with s = sqrt(R):
    ((1+s)^2 ln(1+s) - (1-s)^2 ln(1-s) - 2s) / (4 s ln 2).
    Expanding atanh and ln(1-R) shows this equals
    ((1+R) atanh s - s (1 - ln(1-R))) / (s ln 4) while staying finite at R = 1.
    Below SERIES_BELOW the closed form loses digits to cancellation and the
    power series is used instead.
    """
    R = np.asarray(R, dtype=float)
    s = np.sqrt(np.clip(R, 0.0, 1.0))
    safe = np.where(R < SERIES_BELOW, 1.0, s)
    closed = (
        xlogy((1.0 + safe) ** 2, 1.0 + safe) - xlogy((1.0 - safe) ** 2, 1.0 - safe) - 2.0 * safe
    ) / (4.0 * safe * LN2)
    series = polyval(np.clip(R, 0.0, 1.0), _SERIES)
    return np.where(R < SERIES_BELOW, series, closed)


def avg_mi_single_from_r(R: float) -> float:
    if R < 0 or R > 1.0 + LIMIT_TOL:
        raise DomainError(f"R must lie in [0, 1], got {R}")
    if R >= 1.0:
        return SINGLE_SPHERE_MAX
    return float(single_sphere_average(R))


def avg_mi_single(state: TwoQubitState, m: Observable) -> float:
    """<I>_{S^2}(m): average of I(n, m) over n for an MMMS."""
    if not state.is_mmms:
        raise InvalidInputError("avg_mi_single is defined for maximally mixed marginals only")
    return avg_mi_single_from_r(radial_moment(state, m.array))


# --------------------------------------------------------------------
#  DOUBLE-SPHERE CLOSED FORMS
# --------------------------------------------------------------------
def lerch_phi_2_3half(z: float) -> float:
    """Phi(z, 2, 3/2) = sum_k z^k / (k + 3/2)^2 for 0 <= z < 1."""
    if z < 0 or z >= 1:
        raise DomainError(f"Lerch Phi(z, 2, 3/2) needs 0 <= z < 1, got {z}")
    with mpmath.workdps(MP_DPS):
        return float(mpmath.lerchphi(mpmath.mpf(z), 2, mpmath.mpf(3) / 2))


def avg_mi_series(kind: Literal["single", "classical", "isotropic"], value: float) -> float:
    """
    Power-series evaluation of the averages, independent of the closed forms:
      single:    sum_h R^h / (h (2h-1) (2h+1))          / (2 ln 2)
      isotropic: same with R = kappa^2 / 3
      classical: sum_h kappa^(2h) / (h (2h-1) (2h+1)^2) / (2 ln 2)
    """
    if kind == "single":
        ratio, power = value, 1
    elif kind == "isotropic":
        ratio, power = value**2 / 3.0, 1
    elif kind == "classical":
        ratio, power = value**2, 2
    else:
        raise InvalidInputError(f"unknown series kind {kind!r}")
    if ratio < 0 or ratio > 1.0 + LIMIT_TOL:
        raise DomainError(f"series argument must lie in [0, 1], got {ratio}")
    # kappa = sqrt3 in floats gives kappa^2/3 = 1 - 1e-16
    if ratio > 1.0 - LIMIT_TOL:
        ratio = 1.0
    if ratio == 0:
        return 0.0

    with mpmath.workdps(MP_DPS):
        if ratio == 1.0 and power == 1:
            # sum_h 1/(h (2h-1) (2h+1)) = 2 ln2 - 1
            return float(1 - 1 / (2 * mpmath.log(2)))
        r = mpmath.mpf(ratio)
        total = mpmath.nsum(
            lambda h: r**h / (h * (2 * h - 1) * (2 * h + 1) ** power), [1, mpmath.inf]
        )
        return float(total / (2 * mpmath.log(2)))


def avg_mi_classical(kappa: float) -> float:
    """<I>_Omega for rho_2iso^0, closed form with Phi(kappa^2, 2, 3/2)."""
    if kappa < 0 or kappa > 1.0:
        raise DomainError(f"rho_2iso^0 needs 0 <= kappa <= 1, got {kappa}")
    if kappa == 0:
        return 0.0
    if kappa == 1.0:
        return avg_mi_series("classical", 1.0)

    with mpmath.workdps(MP_DPS):
        k = mpmath.mpf(kappa)
        ln2 = mpmath.log(2)
        phi = mpmath.lerchphi(k**2, 2, mpmath.mpf(3) / 2)
        first = (-6 * k + (6 + 2 * k**2) * mpmath.atanh(k)) / (8 * k * ln2)
        second = (k**3 * phi + 4 * k * mpmath.log(1 - k**2)) / (8 * k * ln2)
        return float(first + second)


def avg_mi_isotropic(kappa: float) -> float:
    """
    <I>_Omega for rho_3iso:
    ((3 + k^2) atanh(k/sqrt3) - sqrt3 k (1 - ln(1 - k^2/3))) / (sqrt3 k ln 4),
    which is the single-sphere average at R = k^2/3.
    """
    if kappa < 0 or kappa > SQRT3 + LIMIT_TOL:
        raise DomainError(f"rho_3iso needs 0 <= kappa <= sqrt(3), got {kappa}")
    return avg_mi_single_from_r(min(kappa**2 / 3.0, 1.0))


def avg_mi_general(
    state: TwoQubitState,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
    oracle: bool = False,
) -> float:
    """
    <I>_Omega for any MMMS: closed-form average over n, quadrature over m.
    With `oracle` both spheres are integrated numerically.
    """
    if not state.is_mmms:
        raise InvalidInputError("avg_mi_general is defined for maximally mixed marginals only")
    require_physical(state, oracle)
    if state.kappa == 0:
        return 0.0

    quad = for_correlation_bound(quad, float(np.max(np.abs(state.c_vec))))
    if oracle:
        return average_s2x_s2(pair_mi_integrand(state), quad)
    return average_s2(lambda m: single_sphere_average(radial_moment(state, m)), quad)


def omega_max_dim(state: TwoQubitState, tol: float = CLASSIFY_TOL) -> int:
    """
    Dimension of the set of maximally correlated pairs: 2 for three equal
    singular values, 1 for a doubly degenerate top value, 0 for a simple one.
    """
    if state.kappa == 0:
        raise DegenerateInputError("Omega_Max is undefined for kappa = 0")
    singular = np.sort(np.abs(state.c_hat))[::-1]
    if singular[0] - singular[2] <= tol:
        return 2
    if singular[0] - singular[1] <= tol:
        return 1
    return 0
