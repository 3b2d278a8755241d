"""
Two-qubit states in Bloch-Fano form
Handles state construction, positivity checks, purity and the joint
probabilities of local von Neumann measurements
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from config import TOL_POS
from errors import InvalidInputError, NonPhysicalStateError

logger = logging.getLogger(__name__)

Vector3 = tuple[float, float, float]

UNIT_TOL = 1e-12
TETRAHEDRON_TOL = 1e-10
PROB_CLAMP_TOL = 1e-12

# Outward face normals of the tetrahedron with vertices
# (-1,-1,-1), (-1,1,1), (1,-1,1), (1,1,-1); every face is at n.c = 1.
TETRAHEDRON_NORMALS = np.array(
    [
        [1.0, 1.0, 1.0],
        [1.0, -1.0, -1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0],
    ]
)
TETRAHEDRON_VERTICES = -TETRAHEDRON_NORMALS

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
IDENTITY_2 = np.eye(2, dtype=complex)

# outcome index 0 <-> "+", 1 <-> "-"
OUTCOME_SIGNS = (1, -1)


def as_vector3(values: Sequence[float] | np.ndarray, name: str = "vector") -> np.ndarray:
    """Coerce to a float array of shape (3,), rejecting anything else."""
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.shape != (3,) or not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} must be three finite numbers, got {values!r}")
    return arr


def unit(values: Sequence[float] | np.ndarray, name: str = "direction") -> np.ndarray:
    """Normalize a non-zero 3-vector."""
    arr = as_vector3(values, name)
    norm = np.linalg.norm(arr)
    if norm == 0.0:
        raise InvalidInputError(f"{name} must be non-zero")
    return arr / norm


# --------------------------------------------------------------------
#  VALUE TYPES
# --------------------------------------------------------------------
@dataclass(frozen=True)
class BlochVector:
    components: Vector3

    @classmethod
    def of(cls, values: Sequence[float] | np.ndarray) -> BlochVector:
        arr = as_vector3(values, "Bloch vector")
        return cls(tuple(float(v) for v in arr))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.components)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.components))

    def is_marginal(self, tol: float = TOL_POS) -> bool:
        """A single-qubit Bloch vector lies in the unit ball."""
        return self.norm <= 1.0 + tol


ZERO_VECTOR = BlochVector((0.0, 0.0, 0.0))


@dataclass(frozen=True)
class CorrelationMatrix:
    """E = kappa * diag(c_hat); kappa = |c| exactly."""

    kappa: float
    c_hat: Vector3

    @classmethod
    def from_vector(cls, c_vec: Sequence[float] | np.ndarray) -> CorrelationMatrix:
        arr = as_vector3(c_vec, "correlation vector")
        kappa = float(np.linalg.norm(arr))
        if kappa == 0.0:
            return cls(0.0, (0.0, 0.0, 1.0))
        return cls(kappa, tuple(float(v) for v in arr / kappa))

    @property
    def diag(self) -> np.ndarray:
        """The correlation vector c = kappa * c_hat."""
        return self.kappa * np.array(self.c_hat)

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.diag)


@dataclass(frozen=True)
class TwoQubitState:
    a: BlochVector
    b: BlochVector
    E: CorrelationMatrix
    physical: bool = True
    forced: bool = False
    min_eigenvalue: float = field(default=0.0, compare=False)

    def is_physical(self) -> bool:
        return self.physical

    @property
    def is_mmms(self) -> bool:
        return not np.any(self.a.array) and not np.any(self.b.array)

    @property
    def kappa(self) -> float:
        return self.E.kappa

    @property
    def c_hat(self) -> np.ndarray:
        return np.array(self.E.c_hat)

    @property
    def c_vec(self) -> np.ndarray:
        return self.E.diag


@dataclass(frozen=True)
class Observable:
    axis: Vector3

    def __post_init__(self):
        norm = float(np.linalg.norm(self.axis))
        if abs(norm - 1.0) > UNIT_TOL:
            raise InvalidInputError(f"observable axis must be a unit vector, |axis| = {norm}")

    @classmethod
    def along(cls, values: Sequence[float] | np.ndarray) -> Observable:
        """Observable along the (normalized) direction of `values`."""
        return cls(tuple(float(v) for v in unit(values, "observable axis")))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.axis)


@dataclass(frozen=True)
class ObservablePair:
    n: Observable
    m: Observable

    @classmethod
    def along(cls, n, m) -> ObservablePair:
        return cls(Observable.along(n), Observable.along(m))


@dataclass(frozen=True)
class JointDistribution:
    """Outcome table p[i][j], i for side A, j for side B; index 0 is '+'."""

    p: tuple[tuple[float, float], tuple[float, float]]
    pA: tuple[float, float]
    pB: tuple[float, float]
    x: float

    @property
    def table(self) -> np.ndarray:
        return np.array(self.p)

    def as_dict(self) -> dict:
        return {
            "p": [list(row) for row in self.p],
            "pA": list(self.pA),
            "pB": list(self.pB),
            "x": self.x,
        }


# --------------------------------------------------------------------
#  POSITIVITY
# --------------------------------------------------------------------
def is_in_tetrahedron(c_vec: Sequence[float] | np.ndarray, tol: float = TETRAHEDRON_TOL) -> bool:
    """True iff c lies in the tetrahedron of positive MMMS correlation vectors."""
    arr = as_vector3(c_vec, "correlation vector")
    return bool(np.all(TETRAHEDRON_NORMALS @ arr <= 1.0 + tol))


def density_matrix_from_parts(
    a: np.ndarray, b: np.ndarray, e_matrix: np.ndarray
) -> np.ndarray:
    """rho = (I + a.sigma x I + I x b.sigma + sum_ij E_ij sigma_i x sigma_j) / 4"""
    rho = np.kron(IDENTITY_2, IDENTITY_2).astype(complex)
    for k in range(3):
        rho += a[k] * np.kron(PAULI[k], IDENTITY_2)
        rho += b[k] * np.kron(IDENTITY_2, PAULI[k])
        for l in range(3):
            if e_matrix[k, l] != 0.0:
                rho += e_matrix[k, l] * np.kron(PAULI[k], PAULI[l])
    return rho / 4.0


def density_matrix(state: TwoQubitState) -> np.ndarray:
    """Reconstructed 4x4 density operator; the oracle for every closed form."""
    return density_matrix_from_parts(state.a.array, state.b.array, state.E.matrix)


def min_eigenvalue(a: np.ndarray, b: np.ndarray, c_vec: np.ndarray) -> float:
    rho = density_matrix_from_parts(a, b, np.diag(c_vec))
    return float(np.linalg.eigvalsh(rho).min())


# --------------------------------------------------------------------
#  CONSTRUCTION
# --------------------------------------------------------------------
def make_state(
    a: Sequence[float],
    b: Sequence[float],
    c_vec: Sequence[float],
    force: bool = False,
    tol_pos: float = TOL_POS,
) -> TwoQubitState:
    """
    General diagonal-E state. Physicality comes from the eigenvalues of the
    reconstructed density matrix; non-physical input raises unless `force`,
    in which case the flag is recorded on the returned state.
    """
    a_vec = as_vector3(a, "a")
    b_vec = as_vector3(b, "b")
    c_arr = as_vector3(c_vec, "correlation vector")

    lowest = min_eigenvalue(a_vec, b_vec, c_arr)
    physical = lowest >= -tol_pos
    if not physical and not force:
        raise NonPhysicalStateError(
            f"state (a={a_vec.tolist()}, b={b_vec.tolist()}, c={c_arr.tolist()}) "
            f"has negative eigenvalue {lowest:.3e}"
        )
    if not physical:
        logger.warning("[state] forced non-physical state, min eigenvalue %.3e", lowest)

    return TwoQubitState(
        a=BlochVector.of(a_vec),
        b=BlochVector.of(b_vec),
        E=CorrelationMatrix.from_vector(c_arr),
        physical=physical,
        forced=force and not physical,
        min_eigenvalue=lowest,
    )


def make_mmms(kappa: float, c_hat: Sequence[float], force: bool = False) -> TwoQubitState:
    """
    Maximally-mixed-marginal state with correlation vector kappa * c_hat.
    Physicality is decided by the tetrahedron test.
    """
    if kappa < 0 or not np.isfinite(kappa):
        raise InvalidInputError(f"kappa must be a finite number >= 0, got {kappa}")
    direction = as_vector3(c_hat, "c_hat")
    norm = float(np.linalg.norm(direction))
    if abs(norm - 1.0) > 1e-9:
        raise InvalidInputError(f"c_hat must be a unit vector, |c_hat| = {norm}")
    direction = direction / norm

    c_vec = kappa * direction
    physical = is_in_tetrahedron(c_vec)
    if not physical and not force:
        raise NonPhysicalStateError(
            f"correlation vector {c_vec.tolist()} lies outside the tetrahedron"
        )
    if not physical:
        logger.warning("[state] forced MMMS outside the tetrahedron: c=%s", c_vec.tolist())

    return TwoQubitState(
        a=ZERO_VECTOR,
        b=ZERO_VECTOR,
        E=CorrelationMatrix(float(kappa), tuple(float(v) for v in direction)),
        physical=physical,
        forced=force and not physical,
        min_eigenvalue=float(min(0.25 * (1.0 - TETRAHEDRON_NORMALS @ c_vec))),
    )


ISOTROPIC_DIRECTION = -np.ones(3) / np.sqrt(3.0)
CLASSICAL_DIRECTION = np.array([0.0, 0.0, 1.0])


def isotropic_state(kappa: float, force: bool = False) -> TwoQubitState:
    """rho_3iso on the singlet side of its orbit, physical for kappa <= sqrt(3)."""
    return make_mmms(kappa, ISOTROPIC_DIRECTION, force=force)


def classical_state(kappa: float, force: bool = False) -> TwoQubitState:
    """rho_2iso^0 with c_hat = z, physical for kappa <= 1."""
    return make_mmms(kappa, CLASSICAL_DIRECTION, force=force)


def require_physical(state: TwoQubitState, oracle: bool = False) -> None:
    if not state.physical and not oracle:
        raise NonPhysicalStateError(
            "operation refused on a non-physical state (pass oracle=True to override)"
        )


# --------------------------------------------------------------------
#  MEASUREMENT STATISTICS
# --------------------------------------------------------------------
def correlation_scalar(state: TwoQubitState, n: np.ndarray, m: np.ndarray) -> float:
    """x = n E m^T for diagonal E."""
    return float(np.sum(n * state.c_vec * m))


def _clamp(values: np.ndarray) -> np.ndarray:
    worst = float(values.min())
    if worst < -PROB_CLAMP_TOL:
        logger.warning("[probabilities] clamping negative probability %.3e", worst)
    return np.clip(values, 0.0, 1.0)


def joint_distribution(
    state: TwoQubitState, pair: ObservablePair, oracle: bool = False
) -> JointDistribution:
    """p_ij = (1 + i n.a + j m.b + ij nEm^T) / 4, marginals (1 + i n.a)/2, (1 + j m.b)/2."""
    require_physical(state, oracle)
    n, m = pair.n.array, pair.m.array
    na = float(n @ state.a.array)
    mb = float(m @ state.b.array)
    x = correlation_scalar(state, n, m)

    signs = np.array(OUTCOME_SIGNS, dtype=float)
    table = (1.0 + signs[:, None] * na + signs[None, :] * mb + np.outer(signs, signs) * x) / 4.0
    table = _clamp(table)
    pA = _clamp((1.0 + signs * na) / 2.0)
    pB = _clamp((1.0 + signs * mb) / 2.0)

    return JointDistribution(
        p=tuple(tuple(float(v) for v in row) for row in table),
        pA=tuple(float(v) for v in pA),
        pB=tuple(float(v) for v in pB),
        x=x,
    )


def projector(axis: np.ndarray, sign: int) -> np.ndarray:
    """Pi_(+/-)(axis) = (I +/- axis.sigma) / 2"""
    return (IDENTITY_2 + sign * np.einsum("k,kij->ij", axis, PAULI)) / 2.0


def joint_distribution_oracle(state: TwoQubitState, pair: ObservablePair) -> JointDistribution:
    """Tr[rho Pi_i x Pi_j] computed on the explicit 4x4 matrices."""
    rho = density_matrix(state)
    n, m = pair.n.array, pair.m.array
    table = np.empty((2, 2))
    for i, si in enumerate(OUTCOME_SIGNS):
        for j, sj in enumerate(OUTCOME_SIGNS):
            table[i, j] = np.real(np.trace(rho @ np.kron(projector(n, si), projector(m, sj))))
    return JointDistribution(
        p=tuple(tuple(float(v) for v in row) for row in table),
        pA=tuple(float(v) for v in table.sum(axis=1)),
        pB=tuple(float(v) for v in table.sum(axis=0)),
        x=correlation_scalar(state, n, m),
    )


def purity(state: TwoQubitState) -> float:
    """Tr[rho^2] from the reconstructed density matrix."""
    rho = density_matrix(state)
    return float(np.real(np.trace(rho @ rho)))
