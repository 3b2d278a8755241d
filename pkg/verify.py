"""
Acceptance checks
Every check reports its tolerance and the measured deviation; suites are
deterministic for a fixed seed
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass
from typing import Iterable

import numpy as np

from bloch_core import (
    CLASSICAL_DIRECTION,
    Observable,
    ObservablePair,
    TwoQubitState,
    classical_state,
    is_in_tetrahedron,
    isotropic_state,
    make_mmms,
    make_state,
    min_eigenvalue,
)
from coherence import coherence_of_basis
from config import SEED
from errors import InvalidInputError, NonPhysicalStateError, ZeroCorrelationError
from mutual_info import (
    avg_mi_classical,
    avg_mi_general,
    avg_mi_isotropic,
    avg_mi_single,
    avg_mi_single_from_r,
    mi_of_x,
    omega_max_dim,
)
from rsp import (
    RspTask,
    adapted_classical_rsp,
    average_over_relevant,
    avg_gain_isotropic_nonmmms,
    closed_form_averages,
    default_beta,
    evaluate,
    figure_of_merit,
    figure_of_merit_x,
    gain_relative_entropy,
    isotropic_nonmmms_state,
    min_beta_avg_payoff,
    min_beta_avg_payoff_search,
    optimal_measurement,
    pure_state,
    relative_differences,
    simulate_trials,
    usefulness_condition_check,
)
from sphere_avg import (
    DEFAULT_QUADRATURE,
    QuadratureSpec,
    average_s2,
    random_unit_vectors,
)
from symmetry import orbit_size

logger = logging.getLogger(__name__)

SUITES = ("props", "closed-forms", "all")
KAPPAS = (0.1, 0.3, 0.5, 0.7, 0.9)
ORACLE_QUADRATURE = QuadratureSpec(32, 64)
BOUNDARY_BAND = 1e-10


@dataclass(frozen=True)
class CheckResult:
    name: str
    tolerance: float
    measured: float
    passed: bool
    seconds: float = 0.0

    @property
    def slack(self) -> float:
        return self.tolerance - self.measured

    def as_dict(self) -> dict:
        return {**asdict(self), "slack": self.slack}


def _check(name: str, measured: float, tolerance: float, started: float) -> CheckResult:
    passed = bool(np.isfinite(measured) and measured <= tolerance)
    result = CheckResult(name, tolerance, float(measured), passed, time.perf_counter() - started)
    logger.info("[verify] %-40s measured=%.3e tol=%.1e %s", name, measured, tolerance, "ok" if passed else "FAIL")
    return result


# --------------------------------------------------------------------
#  RANDOM INPUTS
# --------------------------------------------------------------------
def random_mmms(rng: np.random.Generator, kappa: float | None = None) -> TwoQubitState:
    """Haar direction with kappa uniform on [0, sqrt3] (or fixed), rejected until inside the tetrahedron."""
    while True:
        c_hat = random_unit_vectors(rng, 1)[0]
        k = rng.uniform(0.0, math.sqrt(3.0)) if kappa is None else kappa
        if is_in_tetrahedron(k * c_hat):
            return make_mmms(k, c_hat)


def random_state(rng: np.random.Generator) -> TwoQubitState:
    """Diagonal-E state with polarized marginals, rejected until positive."""
    while True:
        a = random_unit_vectors(rng, 1)[0] * rng.uniform(0.0, 0.6)
        b = random_unit_vectors(rng, 1)[0] * rng.uniform(0.0, 0.6)
        c = rng.uniform(-1.0, 1.0, 3)
        if min_eigenvalue(a, b, c) >= 0.0:
            return make_state(a, b, c)


def random_task(rng: np.random.Generator) -> RspTask:
    n = random_unit_vectors(rng, 1)[0]
    beta = np.cross(n, random_unit_vectors(rng, 1)[0])
    return RspTask.of(n, beta)


# --------------------------------------------------------------------
#  CLOSED FORMS AGAINST QUADRATURE
# --------------------------------------------------------------------
def check_single_sphere(quad: QuadratureSpec) -> CheckResult:
    started = time.perf_counter()
    m = Observable.along((0.36, 0.48, 0.8))
    worst = 0.0
    for kappa in KAPPAS:
        for state in (isotropic_state(kappa), classical_state(kappa)):
            v = state.c_vec * m.array
            oracle = average_s2(lambda n: mi_of_x(n @ v), quad)
            worst = max(worst, abs(avg_mi_single(state, m) - oracle))
    return _check("single-sphere average vs quadrature", worst, 1e-7, started)


def check_single_sphere_bound() -> CheckResult:
    started = time.perf_counter()
    return _check(
        "single-sphere average at R=1 is 0.27865",
        abs(avg_mi_single_from_r(1.0) - 0.27865),
        5e-6,
        started,
    )


def check_double_sphere(quad: QuadratureSpec) -> list[CheckResult]:
    results = []
    for label, closed, make in (
        ("classical <I> vs double quadrature", avg_mi_classical, classical_state),
        ("isotropic <I> vs double quadrature", avg_mi_isotropic, isotropic_state),
    ):
        started = time.perf_counter()
        worst = max(abs(closed(k) - avg_mi_general(make(k), quad, oracle=True)) for k in KAPPAS)
        results.append(_check(label, worst, 1e-7, started))
    return results


def check_rsp_averages(quad: QuadratureSpec) -> list[CheckResult]:
    results = []
    for label, kind, make in (
        ("isotropic <F>, <G> vs quadrature", "iso3", isotropic_state),
        ("classical <F>, <G> vs quadrature", "classical", classical_state),
    ):
        started = time.perf_counter()
        worst = 0.0
        for kappa in KAPPAS:
            f_closed, g_closed = closed_form_averages(kind, kappa)
            averages = average_over_relevant(make(kappa), quad=quad)
            worst = max(worst, abs(f_closed - averages.F_U), abs(g_closed - averages.gain))
        results.append(_check(label, worst, 1e-7, started))
    return results


def closed_form_suite(quad: QuadratureSpec = DEFAULT_QUADRATURE) -> list[CheckResult]:
    return [
        check_single_sphere(quad),
        check_single_sphere_bound(),
        *check_double_sphere(ORACLE_QUADRATURE),
        *check_rsp_averages(quad),
    ]


# --------------------------------------------------------------------
#  PROPERTIES
# --------------------------------------------------------------------
def check_extremality(rng: np.random.Generator, samples: int, quad: QuadratureSpec) -> CheckResult:
    started = time.perf_counter()
    kappa = 0.8
    low, high = avg_mi_isotropic(kappa), avg_mi_classical(kappa)
    violation = 0.0
    for _ in range(samples):
        value = avg_mi_general(random_mmms(rng, kappa), quad)
        violation = max(violation, low - value, value - high)
    return _check("<I> between isotropic and classical", max(violation, 0.0), 1e-7, started)


def check_rsp_extremality(rng: np.random.Generator, samples: int, quad: QuadratureSpec) -> CheckResult:
    started = time.perf_counter()
    kappa = 0.8
    f_iso, g_iso = closed_form_averages("iso3", kappa)
    f_cl, g_cl = closed_form_averages("classical", kappa)
    violation = 0.0
    for _ in range(samples):
        averages = average_over_relevant(random_mmms(rng, kappa), quad=quad)
        violation = max(
            violation,
            f_iso - averages.F_U,
            averages.F_U - f_cl,
            g_iso - averages.gain,
            averages.gain - g_cl,
        )
    return _check("<F>, <G> between isotropic and classical", max(violation, 0.0), 1e-6, started)


def check_complementarity(rng: np.random.Generator, samples: int) -> CheckResult:
    started = time.perf_counter()
    worst = 0.0
    for _ in range(samples):
        pair = ObservablePair.along(random_unit_vectors(rng, 1)[0], random_unit_vectors(rng, 1)[0])
        breakdown = coherence_of_basis(random_mmms(rng), pair)
        worst = max(worst, abs(breakdown.coherence + breakdown.I + breakdown.S_vn - 2.0))
    return _check("Coh + I + S = 2", worst, 1e-10, started)


def check_gain_identity(rng: np.random.Generator, samples: int) -> CheckResult:
    started = time.perf_counter()
    worst = 0.0
    for _ in range(samples):
        state, task = random_mmms(rng), random_task(rng)
        try:
            m_opt = optimal_measurement(state, task.target)
        except ZeroCorrelationError:
            continue
        identity = mi_of_x(float(np.sum(m_opt.array * state.c_vec * task.target.array)))
        worst = max(worst, abs(gain_relative_entropy(state, task) - identity))
    return _check("raw relative entropy = I(n^E, n)", worst, 1e-10, started)


def check_orbit_sizes() -> CheckResult:
    started = time.perf_counter()
    eps = 0.4
    cases = (
        (np.ones(3) / math.sqrt(3.0), 8),
        ((eps, eps, math.sqrt(1.0 - 2 * eps**2)), 24),
        ((1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0), 0.0), 12),
        (CLASSICAL_DIRECTION, 6),
    )
    misses = sum(orbit_size(c) != expected for c, expected in cases)
    return _check("orbit cardinalities 8/24/12/6", misses, 0, started)


def check_omega_max() -> CheckResult:
    started = time.perf_counter()
    half = 1.0 / math.sqrt(2.0)
    cases = (
        (isotropic_state(1.0), 2),
        (make_mmms(0.5, (half, half, 0.0)), 1),
        (classical_state(0.5), 0),
    )
    misses = sum(omega_max_dim(state) != expected for state, expected in cases)
    return _check("Omega_Max dimensions 2/1/0", misses, 0, started)


def check_optimal_measurement(rng: np.random.Generator, samples: int, candidates: int) -> CheckResult:
    started = time.perf_counter()
    grid = random_unit_vectors(rng, candidates)
    improvement = 0.0
    for index in range(samples):
        state = random_mmms(rng) if index % 2 else random_state(rng)
        task = random_task(rng)
        n = task.target.array
        try:
            m_opt = optimal_measurement(state, task.target)
        except ZeroCorrelationError:
            continue
        best = figure_of_merit(state, ObservablePair(task.target, m_opt))
        searched = float(np.min(figure_of_merit_x(grid @ (n * state.c_vec))))
        improvement = max(improvement, best - searched)
    return _check("no m beats n^E", max(improvement, 0.0), 1e-9, started)


def check_usefulness_equivalence(rng: np.random.Generator, samples: int) -> CheckResult:
    started = time.perf_counter()
    disagreements = 0
    for _ in range(samples):
        state, task = random_state(rng), random_task(rng)
        n = task.target.array
        x = float(np.linalg.norm(n * state.c_vec))
        y = abs(float(n @ state.b.array))
        if abs(x - y) <= BOUNDARY_BAND:
            continue
        if usefulness_condition_check(state, task) != (x > y):
            disagreements += 1
    return _check("sign test <=> |nE| > |n.b|", disagreements, 0, started)


def check_relative_differences() -> CheckResult:
    started = time.perf_counter()
    kappas = np.linspace(0.01, 0.99, 99)
    diffs = np.array([relative_differences(k) for k in kappas])
    max_g, max_f = diffs.max(axis=0)
    off = max(0.08 - max_g, max_g - 0.095, 0.27 - max_f, max_f - 0.31, 0.0)
    return _check("max dG in [0.08,0.095], dF in [0.27,0.31]", off, 0.0, started)


def check_fig6_region(grid: int, quad: QuadratureSpec) -> CheckResult:
    started = time.perf_counter()
    worst_inside, best_outside = 0.0, 0.0
    for kappa in np.linspace(0.0, math.sqrt(3.0), grid):
        for b in np.linspace(0.0, 1.0, grid):
            try:
                state = isotropic_nonmmms_state(kappa, b)
            except NonPhysicalStateError:
                continue
            averages = average_over_relevant(state, quad=quad)
            delta = averages.F_U - averages.F_opt
            if kappa / math.sqrt(3.0) > b:
                worst_inside = max(worst_inside, abs(delta))
            else:
                best_outside = max(best_outside, delta)
    measured = worst_inside if best_outside > 0.0 else float("inf")
    return _check("dF = 0 where kappa/sqrt3 > b, > 0 elsewhere", measured, 1e-8, started)


def check_pure_states(rng: np.random.Generator, targets: int, quad: QuadratureSpec) -> CheckResult:
    started = time.perf_counter()
    failures = 0.0
    for lam in (0.55, 0.7, 0.9):
        state = pure_state(lam)
        for n in random_unit_vectors(rng, targets):
            if not evaluate(state, RspTask.of(n, default_beta(n)[0])).useful:
                failures += 1
    bell = average_over_relevant(pure_state(1.0 / math.sqrt(2.0)), quad=quad)
    deviation = max(abs(bell.F_U), abs(bell.gain - 1.0))
    return _check("pure states: all targets useful, Bell <F>=0 <G>=1", failures + deviation, 1e-9, started)


def check_min_beta(rng: np.random.Generator, samples: int) -> CheckResult:
    started = time.perf_counter()
    worst = 0.0
    for _ in range(samples):
        state = random_mmms(rng)
        worst = max(worst, abs(min_beta_avg_payoff(state) - min_beta_avg_payoff_search(state)))
    return _check("min_beta <|En|^2> closed form vs search", worst, 1e-6, started)


def check_trials(rng: np.random.Generator, configs: int, trials: int, seed: int) -> CheckResult:
    started = time.perf_counter()
    misses = 0
    for index in range(configs):
        state = random_mmms(rng) if index % 2 else random_state(rng)
        stats = simulate_trials(state, random_task(rng), trials, seed + index)
        if abs(stats.freq_plus - stats.expected_plus) > 3.0 * stats.std_error + 1e-12:
            misses += 1
    # at most one configuration in twenty may fall outside 3 sigma
    return _check("trial frequencies within 3 sigma", misses, max(1, configs // 20), started)


def check_adapted_classical(rng: np.random.Generator, samples: int) -> CheckResult:
    started = time.perf_counter()
    worst = max(adapted_classical_rsp(random_task(rng)) for _ in range(samples))
    return _check("adapted classical protocol F = 0", worst, 1e-10, started)


def check_small_b_limit() -> CheckResult:
    started = time.perf_counter()
    worst = 0.0
    for kappa in (0.3, 0.6, 0.9):
        _, g_iso = closed_form_averages("iso3", kappa)
        worst = max(worst, abs(avg_gain_isotropic_nonmmms(kappa, 1e-8) - g_iso))
    return _check("b -> 0 gain limit", worst, 1e-6, started)


def property_suite(
    seed: int = SEED,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
    scale: float = 1.0,
) -> list[CheckResult]:
    """`scale` shrinks every sample count, for quick runs."""
    rng = np.random.default_rng(seed)

    def count(n: int) -> int:
        return max(1, int(round(n * scale)))

    return [
        check_extremality(rng, count(500), quad),
        check_rsp_extremality(rng, count(500), quad),
        check_complementarity(rng, count(1000)),
        check_gain_identity(rng, count(1000)),
        check_orbit_sizes(),
        check_omega_max(),
        check_optimal_measurement(rng, count(200), count(10_000)),
        check_usefulness_equivalence(rng, count(10_000)),
        check_relative_differences(),
        check_fig6_region(20, quad),
        check_pure_states(rng, count(1000), quad),
        check_min_beta(rng, count(100)),
        check_trials(rng, count(20), count(100_000), seed),
        check_adapted_classical(rng, count(100)),
        check_small_b_limit(),
    ]


def run_suite(
    suite: str,
    seed: int = SEED,
    quad: QuadratureSpec = DEFAULT_QUADRATURE,
    scale: float = 1.0,
) -> list[CheckResult]:
    if suite == "closed-forms":
        return closed_form_suite(quad)
    if suite == "props":
        return property_suite(seed, quad, scale)
    if suite == "all":
        return closed_form_suite(quad) + property_suite(seed, quad, scale)
    raise InvalidInputError(f"unknown suite {suite!r}, expected one of {SUITES}")


def all_passed(results: Iterable[CheckResult]) -> bool:
    return all(r.passed for r in results)
