"""
Remote state preparation with one shared two-qubit state and one classical bit
A measures m, sends the outcome, B rotates by pi about beta on the "-" branch.
Figure of merit, gain, usefulness of correlations, class averages and a
trial-level simulation of the protocol.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Literal, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.spatial.transform import Rotation
from scipy.special import rel_entr, xlogy

from bloch_core import (
    CLASSICAL_DIRECTION,
    OUTCOME_SIGNS,
    PAULI,
    BlochVector,
    Observable,
    ObservablePair,
    TwoQubitState,
    classical_state,
    correlation_scalar,
    density_matrix,
    make_mmms,
    make_state,
    projector,
    require_physical,
)
from config import SEED, TRIALS, WORKERS
from errors import DegenerateOutcomeError, DomainError, InvalidInputError, ZeroCorrelationError
from mutual_info import LN2, SQRT3, single_sphere_average, mi_of_x
from sphere_avg import (
    DEFAULT_QUADRATURE,
    QuadratureSpec,
    for_correlation_bound,
    sphere_nodes,
)

logger = logging.getLogger(__name__)

ORTHOGONALITY_TOL = 1e-10
ZERO_CORRELATION_TOL = 1e-12
DIVERGENCE_MARGIN = 1e-15
DEGENERATE_PROB = 1e-14
CONSISTENCY_TOL = 1e-10
SMALL_B = 1e-4
TRIAL_CHUNK = 65536

BetaPolicy = Callable[[np.ndarray], np.ndarray]


# --------------------------------------------------------------------
#  TYPES
# --------------------------------------------------------------------
@dataclass(frozen=True)
class RspTask:
    """Prepare +target on B; the correction is a pi-rotation about `axis`."""

    target: Observable
    axis: Observable

    def __post_init__(self):
        overlap = float(self.target.array @ self.axis.array)
        if abs(overlap) > ORTHOGONALITY_TOL:
            raise InvalidInputError(f"target and rotation axis must be orthogonal, n.beta = {overlap:.3e}")

    @classmethod
    def of(cls, target: Sequence[float], axis: Sequence[float]) -> RspTask:
        return cls(Observable.along(target), Observable.along(axis))


@dataclass(frozen=True)
class RspOutcome:
    p_plus: float
    p_minus: float
    r_plus: BlochVector | None
    r_minus: BlochVector | None
    r_final: BlochVector
    degenerate: tuple[int, ...] = ()


@dataclass(frozen=True)
class RspEvaluation:
    m_opt: Observable | None
    F_U: float
    F_UN: float
    F_opt: float
    useful: bool
    gain: float
    gain_negative: bool = False

    def as_dict(self) -> dict:
        record = asdict(self)
        record["m_opt"] = None if self.m_opt is None else list(self.m_opt.axis)
        return record


@dataclass(frozen=True)
class RelevantAverages:
    F_U: float
    F_opt: float
    F_UN: float
    gain: float
    useful_fraction: float
    mi_useful: float

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TrialStatistics:
    n_trials: int
    seed: int
    freq_plus: float
    freq_minus: float
    freq_a_plus: float
    expected_plus: float
    std_error: float

    def as_dict(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------
#  STATE FAMILIES
# --------------------------------------------------------------------
def pure_state(lam: float) -> TwoQubitState:
    """Schmidt form lam|00> + sqrt(1-lam^2)|11>: E = diag(s, -s, 1), a = b = (2 lam^2 - 1) z."""
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"Schmidt coefficient must lie in [0, 1], got {lam}")
    s = 2.0 * lam * math.sqrt(1.0 - lam**2)
    polarization = (0.0, 0.0, 2.0 * lam**2 - 1.0)
    return make_state(polarization, polarization, (s, -s, 1.0))


def isotropic_nonmmms_state(kappa: float, b: float) -> TwoQubitState:
    """E = -(kappa/sqrt3) I, a = 0, b along z."""
    if kappa < 0 or b < 0:
        raise DomainError(f"kappa and b must be >= 0, got {kappa}, {b}")
    tau = kappa / SQRT3
    return make_state((0.0, 0.0, 0.0), (0.0, 0.0, b), (-tau, -tau, -tau))


def stripped_state(state: TwoQubitState) -> TwoQubitState:
    """Same correlations with both marginals removed."""
    if state.is_mmms:
        return state
    stripped = make_state((0.0, 0.0, 0.0), (0.0, 0.0, 0.0), state.c_vec, force=True)
    if not stripped.physical:
        logger.warning(
            "[rsp] stripped state of c=%s is not physical (min eigenvalue %.3e)",
            state.c_vec.tolist(),
            stripped.min_eigenvalue,
        )
    return stripped


# --------------------------------------------------------------------
#  PROTOCOL MECHANICS
# --------------------------------------------------------------------
def rotate_pi(v: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """R^pi(beta) v = 2 (v.beta) beta - v, vectorized over leading axes."""
    return 2.0 * np.sum(v * beta, axis=-1, keepdims=True) * beta - v


def conditional_state(state: TwoQubitState, m: Observable, sign: int) -> tuple[float, np.ndarray]:
    """(p_i, r_i) with p_i = (1 + i m.a)/2 and r_i = (b + i mE)/(2 p_i)."""
    p = (1.0 + sign * float(m.array @ state.a.array)) / 2.0
    if p <= DEGENERATE_PROB:
        raise DegenerateOutcomeError(f"outcome {sign:+d} of A's measurement has probability {p:.3e}", sign)
    return p, (state.b.array + sign * m.array * state.c_vec) / (2.0 * p)


def conditional_state_oracle(state: TwoQubitState, m: Observable, sign: int) -> tuple[float, np.ndarray]:
    """Same as conditional_state from the collapsed 4x4 density matrix."""
    rho = density_matrix(state)
    lifted = np.kron(projector(m.array, sign), np.eye(2))
    collapsed = lifted @ rho @ lifted
    p = float(np.real(np.trace(collapsed)))
    if p <= DEGENERATE_PROB:
        raise DegenerateOutcomeError(f"outcome {sign:+d} of A's measurement has probability {p:.3e}", sign)
    rho_b = np.einsum("ijik->jk", collapsed.reshape(2, 2, 2, 2)) / p
    return p, np.real(np.einsum("kij,ji->k", PAULI, rho_b))


def post_measurement(
    state: TwoQubitState, m: Observable, task: RspTask, oracle: bool = False
) -> RspOutcome:
    """
    Conditional states of B after A measures m, and B's final state after the
    pi-rotation of the "-" branch. Outcomes of zero probability are omitted
    and listed in `degenerate`.
    """
    require_physical(state, oracle)
    beta = task.axis.array
    branch = conditional_state_oracle if oracle else conditional_state

    probabilities, vectors, degenerate = {}, {}, []
    for sign in OUTCOME_SIGNS:
        try:
            probabilities[sign], vectors[sign] = branch(state, m, sign)
        except DegenerateOutcomeError as e:
            logger.info("[rsp] %s", e)
            probabilities[sign], vectors[sign] = 0.0, None
            degenerate.append(e.outcome)

    r_final = np.zeros(3)
    if vectors[1] is not None:
        r_final += probabilities[1] * vectors[1]
    if vectors[-1] is not None:
        r_final += probabilities[-1] * rotate_pi(vectors[-1], beta)

    return RspOutcome(
        p_plus=probabilities[1],
        p_minus=probabilities[-1],
        r_plus=None if vectors[1] is None else BlochVector.of(vectors[1]),
        r_minus=None if vectors[-1] is None else BlochVector.of(vectors[-1]),
        r_final=BlochVector.of(r_final),
        degenerate=tuple(degenerate),
    )


def optimal_measurement(state: TwoQubitState, n: Observable) -> Observable:
    """n^E = nE / |nE|."""
    ne = n.array * state.c_vec
    norm = float(np.linalg.norm(ne))
    if norm <= ZERO_CORRELATION_TOL:
        raise ZeroCorrelationError(f"|nE| = {norm:.3e} for target {list(n.axis)}")
    return Observable.along(ne)


def figure_of_merit_x(x: np.ndarray | float) -> np.ndarray | float:
    """1 - log2(1 + x); +inf once x reaches -1."""
    x = np.asarray(x, dtype=float)
    divergent = x <= -1.0 + DIVERGENCE_MARGIN
    values = np.where(divergent, np.inf, 1.0 - np.log2(np.where(divergent, 1.0, 1.0 + x)))
    return float(values) if values.ndim == 0 else values


def figure_of_merit(state: TwoQubitState, pair: ObservablePair) -> float:
    """F(n, m) for target pair.n prepared through A's measurement pair.m."""
    return figure_of_merit_x(correlation_scalar(state, pair.n.array, pair.m.array))


def _relative_gain(x: np.ndarray | float, y: np.ndarray | float) -> np.ndarray | float:
    """
    Relative entropy between (1 +- x)/2 and (1 +- y)/2 in bits:
    I(x) - ((1+x) log2(1+y) + (1-x) log2(1-y)) / 2.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    values = mi_of_x(x) - (xlogy(1.0 + x, 1.0 + y) + xlogy(1.0 - x, 1.0 - y)) / (2.0 * LN2)
    return float(values) if np.ndim(values) == 0 else values


def evaluate(state: TwoQubitState, task: RspTask, oracle: bool = False) -> RspEvaluation:
    require_physical(state, oracle)
    n = task.target.array
    y = abs(float(n @ state.b.array))
    f_un = figure_of_merit_x(y)

    try:
        m_opt = optimal_measurement(state, task.target)
    except ZeroCorrelationError as e:
        logger.debug("[rsp] %s; using the uncorrelated branch", e)
        m_opt, x, f_u = None, 0.0, 1.0
    else:
        x = float(np.linalg.norm(n * state.c_vec))
        outcome = post_measurement(state, m_opt, task, oracle=oracle)
        realized = float(n @ outcome.r_final.array)
        if abs(realized - x) > CONSISTENCY_TOL:
            logger.warning("[rsp] n.r_final = %.12f differs from |nE| = %.12f", realized, x)
        f_u = figure_of_merit_x(x)

    useful = x >= y
    if not useful:
        gain = 0.0
    elif state.is_mmms:
        gain = float(mi_of_x(x))
    else:
        gain = _relative_gain(x, y)

    return RspEvaluation(
        m_opt=m_opt,
        F_U=f_u,
        F_UN=f_un,
        F_opt=min(f_u, f_un),
        useful=useful,
        gain=gain,
        gain_negative=gain < 0.0,
    )


def gain_relative_entropy(state: TwoQubitState, task: RspTask, oracle: bool = False) -> float:
    """
    Gain from the raw outcome tables of B's +-n measurement: with the optimal
    protocol against with B's best uncorrelated preparation.
    """
    n = task.target.array
    try:
        m_opt = optimal_measurement(state, task.target)
    except ZeroCorrelationError:
        return 0.0
    r_final = post_measurement(state, m_opt, task, oracle=oracle).r_final.array
    x = float(n @ r_final)
    y = abs(float(n @ state.b.array))
    with_correlations = np.array([(1.0 + x) / 2.0, (1.0 - x) / 2.0])
    without = np.array([(1.0 + y) / 2.0, (1.0 - y) / 2.0])
    return float(np.sum(rel_entr(with_correlations, without)) / LN2)


def usefulness_condition_check(state: TwoQubitState, task: RspTask) -> bool:
    """(n.r_+)(n.r_-) <= 0 on the conditional states of the optimal measurement."""
    require_physical(state)
    n = task.target.array
    try:
        m_opt = optimal_measurement(state, task.target)
    except ZeroCorrelationError:
        # both conditional states are then parallel to b
        return abs(float(n @ state.b.array)) <= CONSISTENCY_TOL
    outcome = post_measurement(state, m_opt, task)
    if outcome.degenerate:
        return True
    return float(n @ outcome.r_plus.array) * float(n @ outcome.r_minus.array) <= 0.0


# --------------------------------------------------------------------
#  AVERAGES OVER TARGETS
# --------------------------------------------------------------------
def default_beta(n: np.ndarray) -> np.ndarray:
    """Normalized z x n, or x x n where n is parallel to z."""
    n = np.atleast_2d(n)
    beta = np.cross(np.array([0.0, 0.0, 1.0]), n)
    fallback = np.linalg.norm(beta, axis=-1) < ZERO_CORRELATION_TOL
    beta[fallback] = np.cross(np.array([1.0, 0.0, 0.0]), n[fallback])
    return beta / np.linalg.norm(beta, axis=-1, keepdims=True)


def average_over_relevant(
    state: TwoQubitState,
    beta_policy: BetaPolicy = default_beta,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
) -> RelevantAverages:
    """
    Sphere averages over targets n of F_U, F_opt, F_UN and of the gain on the
    useful set; non-useful targets contribute zero gain.
    """
    require_physical(state)
    bound = max(float(np.max(np.abs(state.c_vec))), state.b.norm)
    n, weights = sphere_nodes(for_correlation_bound(quad, bound))
    beta = beta_policy(n)

    ne = n * state.c_vec
    x = np.linalg.norm(ne, axis=-1)
    m_opt = np.divide(ne, x[:, None], out=np.zeros_like(ne), where=x[:, None] > ZERO_CORRELATION_TOL)
    b_vec = state.b.array
    # standard protocol r_final = mE + ((b - mE).beta) beta
    m_e = m_opt * state.c_vec
    r_final = m_e + np.sum((b_vec - m_e) * beta, axis=-1, keepdims=True) * beta
    realized = np.sum(n * r_final, axis=-1)
    drift = float(np.max(np.abs(realized - x)))
    if drift > CONSISTENCY_TOL:
        logger.warning("[rsp] beta policy leaks into n.r_final by %.3e", drift)

    y = np.abs(n @ b_vec)
    f_u = figure_of_merit_x(x)
    f_un = figure_of_merit_x(y)
    useful = x >= y
    gain = np.where(useful, mi_of_x(x) if state.is_mmms else _relative_gain(x, y), 0.0)

    return RelevantAverages(
        F_U=float(weights @ f_u),
        F_opt=float(weights @ np.minimum(f_u, f_un)),
        F_UN=float(weights @ f_un),
        gain=float(weights @ gain),
        useful_fraction=float(weights @ useful),
        mi_useful=float(weights @ np.where(useful, mi_of_x(x), 0.0)),
    )


def closed_form_averages(kind: Literal["iso3", "classical"], kappa: float) -> tuple[float, float]:
    """(<F>, <G>) over targets for rho_3iso or rho_2iso^0."""
    if kind == "iso3":
        if not 0.0 <= kappa <= SQRT3:
            raise DomainError(f"rho_3iso needs 0 <= kappa <= sqrt(3), got {kappa}")
        tau = kappa / SQRT3
        return 1.0 - math.log2(1.0 + tau), float(mi_of_x(tau))
    if kind == "classical":
        if not 0.0 <= kappa <= 1.0:
            raise DomainError(f"rho_2iso^0 needs 0 <= kappa <= 1, got {kappa}")
        if kappa == 0.0:
            return 1.0, 0.0
        # <log2(1 + kappa u)> over u in [0, 1]
        mean_log = ((1.0 + kappa) * math.log1p(kappa) - kappa) / (kappa * LN2)
        return 1.0 - mean_log, float(single_sphere_average(kappa**2))
    raise InvalidInputError(f"unknown class {kind!r}")


def relative_differences(
    kappa: float, normalize: Literal["classical", "isotropic"] = "isotropic"
) -> tuple[float, float]:
    """(delta G, delta F) between rho_2iso^0 and rho_3iso at equal kappa in [0, 1]."""
    f_iso, g_iso = closed_form_averages("iso3", kappa)
    f_cl, g_cl = closed_form_averages("classical", kappa)
    if kappa == 0.0:
        return 0.0, 0.0
    if normalize == "classical":
        return (g_cl - g_iso) / g_cl, (f_cl - f_iso) / f_cl
    if normalize == "isotropic":
        return (g_cl - g_iso) / g_iso, (f_cl - f_iso) / f_iso
    raise InvalidInputError(f"unknown normalization {normalize!r}")


def avg_gain_isotropic_nonmmms(kappa: float, b: float) -> float:
    """
    <G^U> for E = -(kappa/sqrt3) I, b along z, when every target is useful:
    <G_3iso> + (1 - (f(1) - f(-1)) / (6b)) / ln 2,  f(+-1) = (1+-b)(3+-kappa sqrt3) ln(1+-b).
    """
    tau = kappa / SQRT3
    if tau <= b:
        raise DomainError(f"closed form needs kappa/sqrt(3) > b, got {tau:.6g} <= {b:.6g}")
    isotropic_nonmmms_state(kappa, b)

    base = float(mi_of_x(tau))
    if b < SMALL_B:
        return base + (-tau * b / 2.0 + b**2 / 6.0) / LN2
    f_plus = (1.0 + b) * (3.0 + kappa * SQRT3) * math.log1p(b)
    f_minus = (1.0 - b) * (3.0 - kappa * SQRT3) * math.log1p(-b)
    return base + (1.0 - (f_plus - f_minus) / (6.0 * b)) / LN2


def circle_average_payoff(state: TwoQubitState, beta: np.ndarray) -> np.ndarray | float:
    """<|En|^2> over the great circle of targets n orthogonal to beta."""
    beta = np.asarray(beta, dtype=float)
    total = float(np.sum(state.c_vec**2))
    values = (total - np.sum((state.c_vec * beta) ** 2, axis=-1)) / 2.0
    return float(values) if np.ndim(values) == 0 else values


def min_beta_avg_payoff(state: TwoQubitState) -> float:
    """kappa^2 (c1^2 + c2^2) / 2 over the two smallest |c_i|."""
    if not state.is_mmms:
        raise InvalidInputError("min_beta_avg_payoff is defined for maximally mixed marginals only")
    smallest = np.sort(state.c_vec**2)[:2]
    return float(smallest.sum() / 2.0)


def min_beta_avg_payoff_search(state: TwoQubitState, quad: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """Grid search over beta on the sphere followed by a local polish in angles."""
    nodes, _ = sphere_nodes(quad)
    start = nodes[int(np.argmin(circle_average_payoff(state, nodes)))]

    def objective(angles: np.ndarray) -> float:
        theta, phi = angles
        beta = np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])
        return circle_average_payoff(state, beta)

    x0 = np.array([np.arccos(np.clip(start[2], -1.0, 1.0)), np.arctan2(start[1], start[0])])
    result = minimize(objective, x0, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15})
    return float(min(result.fun, circle_average_payoff(state, start)))


# --------------------------------------------------------------------
#  TRIAL SIMULATION
# --------------------------------------------------------------------
def simulate_trials(
    state: TwoQubitState,
    task: RspTask,
    n_trials: int = TRIALS,
    seed: int = SEED,
    m: Observable | None = None,
    workers: int = WORKERS,
    oracle: bool = False,
) -> TrialStatistics:
    """
    Sample A's outcome, apply B's conditional rotation, then sample B's +-n
    measurement. Chunk k uses the k-th child of SeedSequence(seed).
    """
    require_physical(state, oracle)
    if n_trials < 1:
        raise InvalidInputError(f"n_trials must be >= 1, got {n_trials}")
    if m is None:
        try:
            m = optimal_measurement(state, task.target)
        except ZeroCorrelationError:
            m = task.axis

    outcome = post_measurement(state, m, task, oracle=oracle)
    n = task.target.array
    beta = task.axis.array
    prob_b_plus = {
        1: 0.5 if outcome.r_plus is None else (1.0 + n @ outcome.r_plus.array) / 2.0,
        -1: 0.5 if outcome.r_minus is None else (1.0 + n @ rotate_pi(outcome.r_minus.array, beta)) / 2.0,
    }
    prob_b_plus = {k: float(np.clip(v, 0.0, 1.0)) for k, v in prob_b_plus.items()}

    sizes = [TRIAL_CHUNK] * (n_trials // TRIAL_CHUNK)
    if n_trials % TRIAL_CHUNK:
        sizes.append(n_trials % TRIAL_CHUNK)
    children = np.random.SeedSequence(seed).spawn(len(sizes))

    def chunk(job: tuple[np.random.SeedSequence, int]) -> tuple[int, int]:
        child, size = job
        rng = np.random.default_rng(child)
        a_plus = rng.random(size) < outcome.p_plus
        p_b = np.where(a_plus, prob_b_plus[1], prob_b_plus[-1])
        b_plus = rng.random(size) < p_b
        return int(a_plus.sum()), int(b_plus.sum())

    jobs = list(zip(children, sizes))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(chunk, jobs))
    else:
        counts = [chunk(job) for job in jobs]

    a_hits = sum(c[0] for c in counts)
    b_hits = sum(c[1] for c in counts)
    expected = (1.0 + float(n @ outcome.r_final.array)) / 2.0
    expected = min(max(expected, 0.0), 1.0)
    logger.debug("[simulate] %d trials, +n frequency %.6f (expected %.6f)", n_trials, b_hits / n_trials, expected)
    return TrialStatistics(
        n_trials=n_trials,
        seed=seed,
        freq_plus=b_hits / n_trials,
        freq_minus=1.0 - b_hits / n_trials,
        freq_a_plus=a_hits / n_trials,
        expected_plus=expected,
        std_error=math.sqrt(expected * (1.0 - expected) / n_trials),
    )


# --------------------------------------------------------------------
#  ADAPTED PROTOCOLS
# --------------------------------------------------------------------
def _frame_rotation(direction: np.ndarray) -> Rotation:
    """Rotation taking z onto `direction`."""
    axis = np.cross(CLASSICAL_DIRECTION, direction)
    sin_angle = float(np.linalg.norm(axis))
    cos_angle = float(CLASSICAL_DIRECTION @ direction)
    if sin_angle < ZERO_CORRELATION_TOL:
        if cos_angle > 0:
            return Rotation.identity()
        return Rotation.from_rotvec(np.pi * np.array([1.0, 0.0, 0.0]))
    return Rotation.from_rotvec(axis / sin_angle * math.atan2(sin_angle, cos_angle))


def _task_in_frame(task: RspTask, rotation: Rotation) -> RspTask:
    back = rotation.inv()
    return RspTask.of(back.apply(task.target.array), back.apply(task.axis.array))


def adapted_classical_rsp(task: RspTask) -> float:
    """
    F of the standard protocol on rho_2iso^0 (kappa = 1) whose correlation axis
    is rotated onto the target before the channel is set up. Evaluated in the
    frame where that axis is z.
    """
    rotation = _frame_rotation(task.target.array)
    return evaluate(classical_state(1.0), _task_in_frame(task, rotation)).F_U


def adapted_partial_isotropic_rsp(task: RspTask) -> float:
    """
    F on rho_2iso^(1/sqrt2) at its largest kappa, with B's frame rotated so that
    the uncorrelated axis is the rotation axis beta; targets then see the
    isotropic value 1 - log2(3/2).
    """
    rotation = _frame_rotation(task.axis.array)
    state = make_mmms(1.0 / math.sqrt(2.0), (1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0), 0.0))
    return evaluate(state, _task_in_frame(task, rotation)).F_U


