"""
Coherence of product measurement bases relative to an MMMS
Coh = H_basis - S(rho), complementary to the mutual information through
Coh + I + S(rho) = 2
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy.special import entr

from bloch_core import (
    ObservablePair,
    TwoQubitState,
    density_matrix,
    joint_distribution,
    make_mmms,
    require_physical,
)
from errors import InvalidInputError
from mutual_info import LN2, avg_mi_general, mutual_information, shannon_entropy
from sphere_avg import DEFAULT_QUADRATURE, QuadratureSpec, average_s2x_s2, for_correlation_bound
from symmetry import ORBIT_TOL, group_elements, dedup_directions

logger = logging.getLogger(__name__)

IDENTITY_TOL = 1e-10


@dataclass(frozen=True)
class CoherenceBreakdown:
    H_basis: float
    S_vn: float
    coherence: float
    I: float
    identity_residual: float

    def as_dict(self) -> dict:
        return asdict(self)


def von_neumann_entropy(state: TwoQubitState, oracle: bool = False) -> float:
    """S(rho) in bits from the spectrum of the reconstructed density matrix."""
    require_physical(state, oracle)
    eigenvalues = np.clip(np.linalg.eigvalsh(density_matrix(state)), 0.0, 1.0)
    return shannon_entropy(eigenvalues)


def coherence_of_basis(state: TwoQubitState, pair: ObservablePair) -> CoherenceBreakdown:
    if not state.is_mmms:
        raise InvalidInputError("coherence_of_basis is defined for maximally mixed marginals only")
    require_physical(state)

    h_basis = shannon_entropy(joint_distribution(state, pair).table)
    s_vn = von_neumann_entropy(state)
    coh = h_basis - s_vn
    info = mutual_information(state, pair)

    residual = abs(coh - (2.0 - info - s_vn))
    if residual > IDENTITY_TOL:
        logger.warning("[coherence] Coh + I + S = 2 violated by %.3e", residual)
    return CoherenceBreakdown(h_basis, s_vn, coh, info, residual)


def _basis_entropy(c_vec: np.ndarray):
    def integrand(n: np.ndarray, m: np.ndarray) -> np.ndarray:
        x = np.sum(n * c_vec * m, axis=-1)
        # p_ij = (1 + ij x)/4, each value twice
        return 2.0 * (entr((1.0 + x) / 4.0) + entr((1.0 - x) / 4.0)) / LN2

    return integrand


def avg_coherence(
    state: TwoQubitState, quad: QuadratureSpec = DEFAULT_QUADRATURE, oracle: bool = False
) -> float:
    """
    <Coh>_Omega = 2 - <I>_Omega - S(rho). With `oracle` the basis entropy is
    integrated over both spheres instead.
    """
    if not state.is_mmms:
        raise InvalidInputError("avg_coherence is defined for maximally mixed marginals only")
    s_vn = von_neumann_entropy(state)
    if oracle:
        quad = for_correlation_bound(quad, float(np.max(np.abs(state.c_vec))))
        return average_s2x_s2(_basis_entropy(state.c_vec), quad) - s_vn
    return 2.0 - avg_mi_general(state, quad) - s_vn


def suborbit_split(
    kappa: float, c_hat: Sequence[float] | np.ndarray, tol: float = ORBIT_TOL
) -> tuple[np.ndarray, np.ndarray]:
    """
    Orbit of c_hat partitioned by parity: even elements give the sub-orbit of
    +c_hat, odd ones (inversion times an even element) the sub-orbit of -c_hat.
    Raises NonPhysicalStateError when kappa * c_hat is not a valid MMMS.
    """
    c = make_mmms(kappa, c_hat).c_hat
    plus = [el.apply(c) for el in group_elements() if el.parity == 1]
    minus = [el.apply(c) for el in group_elements() if el.parity == -1]
    return dedup_directions(plus, tol), dedup_directions(minus, tol)
