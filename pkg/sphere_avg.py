"""
Haar averages over S^2 and S^2 x S^2
Composite Gauss-Legendre (cos theta) x trapezoid (phi) quadrature, plus a
seeded Monte-Carlo estimator used as an independent oracle
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Literal

import numpy as np

from config import QUAD_PHI, QUAD_THETA, WORKERS
from errors import InvalidInputError

logger = logging.getLogger(__name__)

SCHEME = "gauss-legendre-x-trapezoid"
NEAR_PURE_MARGIN = 1e-6
MC_CHUNK = 65536
PAIR_CHUNK = 256

SphereFunction = Callable[[np.ndarray], np.ndarray]
PairFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class QuadratureSpec:
    n_theta: int = QUAD_THETA
    n_phi: int = QUAD_PHI
    scheme: str = SCHEME

    def __post_init__(self):
        if self.n_theta < 2 or self.n_theta % 2 or self.n_phi < 4:
            raise InvalidInputError(
                "quadrature needs an even n_theta >= 2 and n_phi >= 4, "
                f"got {self.n_theta}, {self.n_phi}"
            )
        if self.scheme != SCHEME:
            raise InvalidInputError(f"unknown quadrature scheme {self.scheme!r}")

    def doubled(self) -> QuadratureSpec:
        return QuadratureSpec(2 * self.n_theta, 2 * self.n_phi, self.scheme)

    @property
    def size(self) -> int:
        return self.n_theta * self.n_phi


@dataclass(frozen=True)
class McSpec:
    n_samples: int
    seed: int

    def __post_init__(self):
        if self.n_samples < 1:
            raise InvalidInputError(f"n_samples must be >= 1, got {self.n_samples}")


DEFAULT_QUADRATURE = QuadratureSpec()


@lru_cache(maxsize=32)
def _nodes(n_theta: int, n_phi: int) -> tuple[np.ndarray, np.ndarray]:
    # Gauss-Legendre on each hemisphere separately: integrands of |n.v| with v
    # along z keep their kink on a panel edge
    half, w_half = np.polynomial.legendre.leggauss(n_theta // 2)
    u = np.concatenate([(half - 1.0) / 2.0, (half + 1.0) / 2.0])
    w_u = np.concatenate([w_half, w_half]) / 2.0
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    sin_t = np.sqrt(1.0 - u**2)
    points = np.stack(
        [
            np.outer(sin_t, np.cos(phi)).ravel(),
            np.outer(sin_t, np.sin(phi)).ravel(),
            np.repeat(u, n_phi),
        ],
        axis=-1,
    )
    weights = np.repeat(w_u / 2.0, n_phi) / n_phi
    points.setflags(write=False)
    weights.setflags(write=False)
    return points, weights


def sphere_nodes(quad: QuadratureSpec = DEFAULT_QUADRATURE) -> tuple[np.ndarray, np.ndarray]:
    """Unit vectors (N, 3) and weights (N,) summing to one."""
    return _nodes(quad.n_theta, quad.n_phi)


def for_correlation_bound(quad: QuadratureSpec, max_abs_x: float) -> QuadratureSpec:
    """Doubled orders when |x| can come within NEAR_PURE_MARGIN of 1."""
    if 1.0 - max_abs_x < NEAR_PURE_MARGIN:
        logger.info("[quadrature] near-pure integrand (max |x| = %.9f), doubling orders", max_abs_x)
        return quad.doubled()
    return quad


def average_s2(
    f: SphereFunction, quad: QuadratureSpec = DEFAULT_QUADRATURE, vectorized: bool = True
) -> float:
    """
    (1/4pi) * integral of f over S^2.

    With `vectorized` the callable receives all nodes as an (N, 3) array and
    must return (N,) values or a scalar; otherwise it is called once per unit vector.
    """
    points, weights = sphere_nodes(quad)
    if vectorized:
        values = np.broadcast_to(np.asarray(f(points), dtype=float), weights.shape)
    else:
        values = np.array([f(p) for p in points], dtype=float)
    return float(weights @ values)


def average_s2x_s2(
    f: PairFunction,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
    workers: int = WORKERS,
) -> float:
    """
    Average of f(n, m) over both spheres. `f` takes broadcastable arrays whose
    last axis holds the vectors; it is evaluated on blocks of m-nodes against all
    n-nodes.
    """
    points, weights = sphere_nodes(quad)
    starts = range(0, len(points), PAIR_CHUNK)

    def block(start: int) -> float:
        m_block = points[start : start + PAIR_CHUNK]
        values = np.broadcast_to(
            np.asarray(f(points[None, :, :], m_block[:, None, :]), dtype=float),
            (len(m_block), len(points)),
        )
        return float(weights[start : start + PAIR_CHUNK] @ (values @ weights))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(block, starts))
    else:
        partials = [block(start) for start in starts]
    return float(sum(partials))


# --------------------------------------------------------------------
#  MONTE CARLO
# --------------------------------------------------------------------
def random_unit_vectors(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar-uniform directions from normalized 3-component Gaussian draws."""
    draws = rng.standard_normal((n, 3))
    norms = np.linalg.norm(draws, axis=1, keepdims=True)
    # a zero draw has probability zero; redraw it for completeness
    while np.any(norms == 0.0):
        bad = norms[:, 0] == 0.0
        draws[bad] = rng.standard_normal((int(bad.sum()), 3))
        norms = np.linalg.norm(draws, axis=1, keepdims=True)
    return draws / norms


def haar_directions(n: int, seed: int) -> np.ndarray:
    return random_unit_vectors(np.random.default_rng(seed), n)


def mc_average(
    f: SphereFunction | PairFunction,
    spec: McSpec,
    domain: Literal["s2", "s2xs2"] = "s2",
    workers: int = WORKERS,
) -> tuple[float, float]:
    """
    Monte-Carlo mean and standard error. Chunk k draws from the k-th child of
    SeedSequence(seed), so the estimate depends only on (seed, n_samples).
    """
    if domain not in ("s2", "s2xs2"):
        raise InvalidInputError(f"unknown domain {domain!r}")

    sizes = [MC_CHUNK] * (spec.n_samples // MC_CHUNK)
    if spec.n_samples % MC_CHUNK:
        sizes.append(spec.n_samples % MC_CHUNK)
    children = np.random.SeedSequence(spec.seed).spawn(len(sizes))

    def chunk(job: tuple[np.random.SeedSequence, int]) -> np.ndarray:
        child, size = job
        rng = np.random.default_rng(child)
        if domain == "s2":
            return np.broadcast_to(np.asarray(f(random_unit_vectors(rng, size)), dtype=float), (size,))
        n = random_unit_vectors(rng, size)
        m = random_unit_vectors(rng, size)
        return np.broadcast_to(np.asarray(f(n, m), dtype=float), (size,))

    jobs = list(zip(children, sizes))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(chunk, jobs))
    else:
        parts = [chunk(job) for job in jobs]

    values = np.concatenate(parts)
    mean = float(values.mean())
    if values.size < 2:
        return mean, 0.0
    std_err = float(values.std(ddof=1) / np.sqrt(values.size))
    logger.debug("[mc] %s samples=%d mean=%.10f se=%.2e", domain, values.size, mean, std_err)
    return mean, std_err
