"""
Local-unitary equivalence orbits of MMMS correlation directions
Signed permutations of the components of c_hat, symmetry-class detection
and admissibility of the spin flip
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal, Sequence

import numpy as np

from bloch_core import is_in_tetrahedron, unit
from config import CLASSIFY_TOL
from errors import DomainError, InvalidInputError

logger = logging.getLogger(__name__)

ORBIT_TOL = 1e-9
BOUNDARY_FACTOR = 1e3

ClassTag = Literal["Iso3", "Iso2", "Iso2_0", "Generic"]


@dataclass(frozen=True, order=True)
class OrbitElement:
    """d_i = signs[i] * c[perm[i]]"""

    signs: tuple[int, int, int]
    perm: tuple[int, int, int]

    def __post_init__(self):
        if sorted(self.perm) != [0, 1, 2]:
            raise InvalidInputError(f"perm must be a permutation of (0, 1, 2), got {self.perm}")
        if any(s not in (-1, 1) for s in self.signs):
            raise InvalidInputError(f"signs must be +-1, got {self.signs}")

    @property
    def parity(self) -> int:
        """det(O_A) det(O_B); +1 for the 24 elements realizable by local unitaries."""
        return self.signs[0] * self.signs[1] * self.signs[2]

    @property
    def matrix(self) -> np.ndarray:
        """Signed permutation matrix M with d = M c."""
        m = np.zeros((3, 3))
        for i, (s, j) in enumerate(zip(self.signs, self.perm)):
            m[i, j] = s
        return m

    def apply(self, c: np.ndarray) -> np.ndarray:
        return np.array([s * c[j] for s, j in zip(self.signs, self.perm)], dtype=float)

    def __matmul__(self, other: OrbitElement) -> OrbitElement:
        return compose(self, other)


IDENTITY = OrbitElement((1, 1, 1), (0, 1, 2))
INVERSION = OrbitElement((-1, -1, -1), (0, 1, 2))


@lru_cache(maxsize=1)
def group_elements() -> tuple[OrbitElement, ...]:
    """All 48 signed permutations, identity first."""
    return tuple(
        OrbitElement(tuple(signs), tuple(perm))
        for signs in itertools.product((1, -1), repeat=3)
        for perm in itertools.permutations(range(3))
    )


def even_elements() -> tuple[OrbitElement, ...]:
    return tuple(el for el in group_elements() if el.parity == 1)


def compose(h: OrbitElement, g: OrbitElement) -> OrbitElement:
    """h after g: (h o g)(c)_i = t_i s_{tau(i)} c_{sigma(tau(i))}."""
    signs = tuple(h.signs[i] * g.signs[h.perm[i]] for i in range(3))
    perm = tuple(g.perm[h.perm[i]] for i in range(3))
    return OrbitElement(signs, perm)


def inverse(g: OrbitElement) -> OrbitElement:
    perm_inv = [0, 0, 0]
    for i, j in enumerate(g.perm):
        perm_inv[j] = i
    signs = tuple(g.signs[perm_inv[j]] for j in range(3))
    return OrbitElement(signs, tuple(perm_inv))


def apply_orbit(el: OrbitElement, c_hat: Sequence[float] | np.ndarray) -> np.ndarray:
    """d_hat = (s1 c_sigma(1), s2 c_sigma(2), s3 c_sigma(3))."""
    return el.apply(unit(c_hat, "c_hat"))


def local_maps(el: OrbitElement) -> tuple[np.ndarray, np.ndarray]:
    """
    Orthogonal (O_A, O_B) with O_A diag(c) O_B^T = diag(el(c)) for every c.
    O_A = diag(signs) P and O_B = P, P being the permutation part.
    """
    p = np.zeros((3, 3))
    for i, j in enumerate(el.perm):
        p[i, j] = 1.0
    return np.diag(np.array(el.signs, dtype=float)) @ p, p


def local_map_residual(el: OrbitElement, c_hat: Sequence[float] | np.ndarray) -> float:
    c = unit(c_hat, "c_hat")
    o_a, o_b = local_maps(el)
    return float(np.max(np.abs(o_a @ np.diag(c) @ o_b.T - np.diag(el.apply(c)))))


def dedup_directions(vectors: list[np.ndarray], tol: float) -> np.ndarray:
    kept: list[np.ndarray] = []
    for v in vectors:
        if not any(np.max(np.abs(v - k)) <= tol for k in kept):
            kept.append(v)
    out = np.array(kept)
    return out[np.lexsort(out.T[::-1])]


def orbit(c_hat: Sequence[float] | np.ndarray, tol: float = ORBIT_TOL) -> np.ndarray:
    """Distinct images of c_hat under the 48 elements, rows sorted lexicographically."""
    c = unit(c_hat, "c_hat")
    return dedup_directions([el.apply(c) for el in group_elements()], tol)


def suborbit(c_hat: Sequence[float] | np.ndarray, tol: float = ORBIT_TOL) -> np.ndarray:
    """Images under the parity-even subgroup only."""
    c = unit(c_hat, "c_hat")
    return dedup_directions([el.apply(c) for el in even_elements()], tol)


def orbit_size(c_hat: Sequence[float] | np.ndarray, tol: float = ORBIT_TOL) -> int:
    return len(orbit(c_hat, tol))


@dataclass(frozen=True)
class SymmetryClass:
    tag: ClassTag
    epsilon: float | None = None
    near_boundary: bool = False

    @property
    def label(self) -> str:
        if self.tag == "Iso2":
            return f"Iso2({self.epsilon:.12g})"
        return self.tag


def classify(c_hat: Sequence[float] | np.ndarray, tol: float = CLASSIFY_TOL) -> SymmetryClass:
    """
    Iso3 when all |c_i| agree, Iso2_0 when a single component survives,
    Iso2(eps) when two |c_i| agree (eps being the repeated value), Generic otherwise.
    """
    low, mid, high = np.sort(np.abs(unit(c_hat, "c_hat")))
    gaps = (mid - low, high - mid, low, mid)
    near = any(tol < g <= BOUNDARY_FACTOR * tol for g in gaps)

    if high - low <= tol:
        result = SymmetryClass("Iso3", near_boundary=near)
    elif mid <= tol:
        result = SymmetryClass("Iso2_0", near_boundary=near)
    elif mid - low <= tol:
        result = SymmetryClass("Iso2", epsilon=float(low), near_boundary=near)
    elif high - mid <= tol:
        result = SymmetryClass("Iso2", epsilon=float(mid), near_boundary=near)
    else:
        result = SymmetryClass("Generic", near_boundary=near)

    if near:
        logger.warning("[orbit] %s lies within %.0e of a class boundary", result.label, BOUNDARY_FACTOR * tol)
    return result


def spin_flip_admissible(c_vec: Sequence[float] | np.ndarray) -> bool:
    """True when -c is also a positive MMMS correlation vector."""
    c = np.asarray(c_vec, dtype=float)
    if not is_in_tetrahedron(c):
        raise InvalidInputError(f"correlation vector {c.tolist()} lies outside the tetrahedron")
    return is_in_tetrahedron(-c)


def orbit_physical_subset(
    kappa: float, c_hat: Sequence[float] | np.ndarray, tol: float = ORBIT_TOL
) -> np.ndarray:
    """
    Orbit members d with kappa * d still inside the tetrahedron.
    Parity-even elements map the tetrahedron onto itself, so their images are
    always kept; a parity-odd image is the spin flip of an even one and is kept
    only where that flip is admissible.
    """
    c = unit(c_hat, "c_hat")
    if not is_in_tetrahedron(kappa * c):
        raise DomainError(f"kappa * c_hat = {(kappa * c).tolist()} lies outside the tetrahedron")
    images = []
    for el in group_elements():
        d = el.apply(c)
        if el.parity == 1 or spin_flip_admissible(-kappa * d):
            images.append(d)
    members = dedup_directions(images, tol)
    logger.debug("[orbit] %d of %d orbit members physical at kappa=%.6g", len(members), orbit_size(c, tol), kappa)
    return members
