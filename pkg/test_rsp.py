import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bloch_core import Observable, classical_state, isotropic_state, make_mmms, make_state
from errors import DomainError, InvalidInputError, NonPhysicalStateError, ZeroCorrelationError
from mutual_info import SINGLE_SPHERE_MAX, mi_of_x
from rsp import (
    RspTask,
    adapted_classical_rsp,
    adapted_partial_isotropic_rsp,
    average_over_relevant,
    avg_gain_isotropic_nonmmms,
    circle_average_payoff,
    closed_form_averages,
    default_beta,
    evaluate,
    figure_of_merit_x,
    gain_relative_entropy,
    isotropic_nonmmms_state,
    min_beta_avg_payoff,
    min_beta_avg_payoff_search,
    optimal_measurement,
    post_measurement,
    pure_state,
    relative_differences,
    rotate_pi,
    simulate_trials,
    stripped_state,
    usefulness_condition_check,
)
from sphere_avg import QuadratureSpec
from symmetry import even_elements, local_maps

X, Y, Z = np.eye(3)
BELL = math.sqrt(3.0)

component = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False, allow_infinity=False)
directions = st.tuples(component, component, component).filter(lambda v: np.linalg.norm(v) > 1e-2)


def _task(n) -> RspTask:
    n = np.asarray(n, dtype=float)
    return RspTask.of(n, default_beta(n)[0])


def test_task_requires_orthogonal_axis():
    with pytest.raises(InvalidInputError):
        RspTask.of(X, (1, 1, 0))
    task = RspTask.of(X, Z)
    assert task.target.axis == (1.0, 0.0, 0.0)


def test_default_beta_is_orthogonal_unit():
    n = np.array([[0.0, 0.0, 1.0], [0.6, 0.0, 0.8], [0.0, 0.0, -1.0]])
    beta = default_beta(n)
    np.testing.assert_allclose(np.sum(beta * n, axis=1), 0.0, atol=1e-15)
    np.testing.assert_allclose(np.linalg.norm(beta, axis=1), 1.0)


def test_rotation_by_pi():
    np.testing.assert_allclose(rotate_pi(X, Z), -X)
    np.testing.assert_allclose(rotate_pi(Z, Z), Z)


def test_bell_state_prepares_any_target():
    result = evaluate(isotropic_state(BELL), RspTask.of(X, Z))
    assert result.F_U == pytest.approx(0.0, abs=1e-12)
    assert result.gain == pytest.approx(1.0)
    assert result.useful
    # singlet-side representative: measure along -n
    np.testing.assert_allclose(result.m_opt.array, -X, atol=1e-12)


def test_uncorrelated_state():
    result = evaluate(classical_state(0.0), RspTask.of(X, Z))
    assert result.m_opt is None
    assert result.F_opt == 1.0
    assert result.gain == 0.0
    with pytest.raises(ZeroCorrelationError):
        optimal_measurement(classical_state(0.0), Observable.along(X))


def test_optimal_measurement_direction():
    state = make_mmms(0.5, (0.6, 0.0, 0.8))
    m = optimal_measurement(state, Observable.along((0.6, 0.0, 0.8)))
    np.testing.assert_allclose(m.array, np.array([0.36, 0.0, 0.64]) / math.hypot(0.36, 0.64))


def test_figure_of_merit_limits():
    assert figure_of_merit_x(1.0) == 0.0
    assert figure_of_merit_x(0.0) == 1.0
    assert figure_of_merit_x(-1.0) == math.inf


def test_final_state_realizes_ne():
    state = isotropic_nonmmms_state(1.0, 0.3)
    task = RspTask.of((0.6, 0.0, 0.8), (0.0, 1.0, 0.0))
    m_opt = optimal_measurement(state, task.target)
    outcome = post_measurement(state, m_opt, task)
    assert outcome.p_plus + outcome.p_minus == pytest.approx(1.0)
    assert task.target.array @ outcome.r_final.array == pytest.approx(
        np.linalg.norm(task.target.array * state.c_vec), abs=1e-12
    )


@given(directions)
@settings(max_examples=50, deadline=None)
def test_conditional_states_match_density_matrix(m):
    state = make_state((0.1, 0.0, -0.2), (0.0, 0.2, 0.1), (0.3, -0.2, 0.4))
    task = RspTask.of(X, Z)
    fast = post_measurement(state, Observable.along(m), task)
    exact = post_measurement(state, Observable.along(m), task, oracle=True)
    assert fast.p_plus == pytest.approx(exact.p_plus, abs=1e-12)
    np.testing.assert_allclose(fast.r_plus.array, exact.r_plus.array, atol=1e-12)
    np.testing.assert_allclose(fast.r_final.array, exact.r_final.array, atol=1e-12)


def test_degenerate_outcome_is_omitted():
    state = pure_state(1.0)
    outcome = post_measurement(state, Observable.along(Z), RspTask.of(X, Z))
    assert outcome.degenerate == (-1,)
    assert outcome.r_minus is None
    assert outcome.p_plus == pytest.approx(1.0)


def test_usefulness_example():
    state = isotropic_nonmmms_state(0.3, 0.5)
    along_b = evaluate(state, RspTask.of(Z, X))
    assert not along_b.useful
    assert along_b.gain == 0.0
    assert along_b.F_opt == along_b.F_UN
    assert evaluate(state, RspTask.of(X, Z)).useful
    with pytest.raises(NonPhysicalStateError):
        isotropic_nonmmms_state(0.3, 0.9)


def test_usefulness_sign_test_agrees():
    rng = np.random.default_rng(8)
    state = isotropic_nonmmms_state(0.5, 0.6)
    for n in rng.standard_normal((200, 3)):
        task = _task(n)
        x = np.linalg.norm(task.target.array * state.c_vec)
        y = abs(task.target.array @ state.b.array)
        if abs(x - y) > 1e-9:
            assert usefulness_condition_check(state, task) == (x > y)


@pytest.mark.parametrize("state", [isotropic_state(1.2), make_mmms(0.7, (0.48, -0.6, 0.64)), isotropic_nonmmms_state(1.0, 0.3), pure_state(0.8)])
def test_gain_equals_relative_entropy(state):
    rng = np.random.default_rng(5)
    for n in rng.standard_normal((20, 3)):
        task = _task(n)
        result = evaluate(state, task)
        if result.useful:
            assert result.gain == pytest.approx(gain_relative_entropy(state, task), abs=1e-10)
            assert not result.gain_negative


def test_mmms_gain_is_mutual_information():
    state = make_mmms(0.7, (0.48, -0.6, 0.64))
    task = _task((0.3, 0.4, 0.5))
    m_opt = optimal_measurement(state, task.target)
    x = float(np.sum(m_opt.array * state.c_vec * task.target.array))
    assert evaluate(state, task).gain == pytest.approx(mi_of_x(x))


def test_closed_form_averages_extremes():
    assert closed_form_averages("iso3", BELL) == pytest.approx((0.0, 1.0))
    f, g = closed_form_averages("classical", 1.0)
    assert f == pytest.approx(0.4427, abs=1e-4)
    assert g == pytest.approx(SINGLE_SPHERE_MAX)
    assert closed_form_averages("classical", 0.0) == (1.0, 0.0)
    with pytest.raises(DomainError):
        closed_form_averages("classical", 1.1)
    with pytest.raises(InvalidInputError):
        closed_form_averages("werner", 0.5)


@pytest.mark.parametrize("kappa", [0.2, 0.5, 0.9])
def test_closed_form_averages_match_quadrature(kappa):
    for kind, make in (("iso3", isotropic_state), ("classical", classical_state)):
        f, g = closed_form_averages(kind, kappa)
        averages = average_over_relevant(make(kappa))
        assert averages.F_U == pytest.approx(f, abs=1e-7)
        assert averages.gain == pytest.approx(g, abs=1e-7)
        assert averages.useful_fraction == pytest.approx(1.0)


def test_relative_differences_peak_values():
    delta_g, delta_f = relative_differences(1.0)
    assert delta_g == pytest.approx(0.0885, abs=5e-4)
    assert delta_f == pytest.approx(0.2926, abs=5e-4)
    assert relative_differences(0.0) == (0.0, 0.0)
    classical_g, classical_f = relative_differences(1.0, "classical")
    assert classical_g == pytest.approx(0.081, abs=1e-3)
    assert classical_f == pytest.approx(0.226, abs=1e-3)
    # same difference, different denominators
    assert delta_f * (1.0 - classical_f) == pytest.approx(classical_f, rel=1e-12)


def test_pure_state_averages():
    bell = average_over_relevant(pure_state(1.0 / math.sqrt(2.0)))
    assert bell.F_U == pytest.approx(0.0, abs=1e-9)
    assert bell.gain == pytest.approx(1.0, abs=1e-9)
    product = average_over_relevant(pure_state(1.0))
    assert product.gain == pytest.approx(0.0, abs=1e-12)
    assert product.F_U == pytest.approx(product.F_UN)


def test_optimized_protocol_never_worse():
    averages = average_over_relevant(isotropic_nonmmms_state(0.5, 0.6))
    assert averages.F_opt <= averages.F_U + 1e-15
    assert averages.F_opt <= averages.F_UN + 1e-15
    assert 0.0 < averages.useful_fraction < 1.0


def test_isotropic_gain_closed_form():
    kappa, b = 1.2, 0.3
    averages = average_over_relevant(isotropic_nonmmms_state(kappa, b))
    assert averages.useful_fraction == pytest.approx(1.0)
    assert avg_gain_isotropic_nonmmms(kappa, b) == pytest.approx(averages.gain, abs=1e-7)


def test_isotropic_gain_small_b_branch_is_continuous():
    kappa = 0.9
    below = avg_gain_isotropic_nonmmms(kappa, 1e-4 * (1 - 1e-9))
    above = avg_gain_isotropic_nonmmms(kappa, 1e-4 * (1 + 1e-9))
    assert below == pytest.approx(above, abs=1e-10)
    assert avg_gain_isotropic_nonmmms(kappa, 1e-9) == pytest.approx(closed_form_averages("iso3", kappa)[1], abs=1e-8)
    with pytest.raises(DomainError):
        avg_gain_isotropic_nonmmms(0.3, 0.5)


def test_min_beta_payoff():
    state = make_mmms(1.0, (0.6, 0.8, 0.0), force=True)
    assert min_beta_avg_payoff(state) == pytest.approx(0.18)
    assert circle_average_payoff(state, Z) == pytest.approx(0.5)
    physical = make_mmms(0.7, (0.48, -0.6, 0.64))
    assert min_beta_avg_payoff_search(physical) == pytest.approx(min_beta_avg_payoff(physical), abs=1e-6)


def test_stripped_state():
    state = pure_state(0.8)
    stripped = stripped_state(state)
    assert stripped.is_mmms
    assert stripped.physical
    np.testing.assert_allclose(stripped.c_vec, state.c_vec)


def test_simulation_is_seeded_and_consistent():
    state = isotropic_nonmmms_state(1.0, 0.3)
    task = RspTask.of((0.6, 0.0, 0.8), (0.0, 1.0, 0.0))
    stats = simulate_trials(state, task, 100_000, seed=17)
    assert abs(stats.freq_plus - stats.expected_plus) <= 4.0 * stats.std_error
    assert simulate_trials(state, task, 100_000, seed=17, workers=2) == stats
    assert stats.freq_plus + stats.freq_minus == pytest.approx(1.0)
    with pytest.raises(InvalidInputError):
        simulate_trials(state, task, 0)


def test_adapted_protocols():
    rng = np.random.default_rng(2)
    for n in rng.standard_normal((10, 3)):
        task = _task(n)
        assert adapted_classical_rsp(task) == pytest.approx(0.0, abs=1e-10)
        assert adapted_partial_isotropic_rsp(task) == pytest.approx(1.0 - math.log2(1.5), abs=1e-10)
    assert adapted_classical_rsp(RspTask.of(-Z, X)) == pytest.approx(0.0, abs=1e-10)


def test_averages_are_constant_on_orbits_with_corotated_b():
    c_vec = 0.4 * np.array([0.2, 0.3, 0.9]) / np.linalg.norm([0.2, 0.3, 0.9])
    # |b| below the smallest |c_i| keeps every target useful
    b = np.array([0.02, 0.04, 0.01])
    expected = average_over_relevant(make_state((0, 0, 0), b, c_vec))
    assert expected.useful_fraction == pytest.approx(1.0)
    for el in even_elements():
        _, o_b = local_maps(el)
        moved = average_over_relevant(make_state((0, 0, 0), o_b @ b, el.apply(c_vec)))
        assert moved.F_U == pytest.approx(expected.F_U, abs=1e-8)
        assert moved.F_opt == pytest.approx(expected.F_opt, abs=1e-8)
        assert moved.gain == pytest.approx(expected.gain, abs=1e-8)


def test_optimized_average_does_not_grow_with_kappa():
    quad = QuadratureSpec(32, 64)
    values = [
        average_over_relevant(isotropic_nonmmms_state(kappa, 0.2), quad=quad).F_opt
        for kappa in (0.2, 0.4, 0.6, 0.8, 1.0, 1.2)
    ]
    assert all(later <= earlier + 1e-6 for earlier, later in zip(values, values[1:]))
