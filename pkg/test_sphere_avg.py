import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from bloch_core import classical_state, isotropic_state, make_mmms
from errors import InvalidInputError
from mutual_info import avg_mi_general, avg_mi_isotropic, pair_mi_integrand
from rsp import average_over_relevant, figure_of_merit_x
from sphere_avg import (
    DEFAULT_QUADRATURE,
    McSpec,
    QuadratureSpec,
    average_s2,
    average_s2x_s2,
    for_correlation_bound,
    haar_directions,
    mc_average,
    random_unit_vectors,
    sphere_nodes,
)

SMALL = QuadratureSpec(16, 32)


def test_nodes_are_unit_with_normalized_weights():
    points, weights = sphere_nodes(SMALL)
    assert points.shape == (SMALL.size, 3)
    np.testing.assert_allclose(np.linalg.norm(points, axis=1), 1.0, atol=1e-14)
    assert weights.sum() == pytest.approx(1.0, abs=1e-14)
    assert not points.flags.writeable


def test_quadrature_spec_validation():
    with pytest.raises(InvalidInputError):
        QuadratureSpec(15, 32)
    with pytest.raises(InvalidInputError):
        QuadratureSpec(16, 2)
    with pytest.raises(InvalidInputError):
        QuadratureSpec(16, 32, scheme="lebedev")
    assert QuadratureSpec(16, 32).doubled() == QuadratureSpec(32, 64)


def test_low_moments_are_exact():
    assert average_s2(lambda p: np.ones(len(p)), SMALL) == pytest.approx(1.0)
    assert average_s2(lambda p: p[:, 2] ** 2, SMALL) == pytest.approx(1.0 / 3.0, abs=1e-14)
    assert average_s2(lambda p: p[:, 0] ** 2 * p[:, 1] ** 2, SMALL) == pytest.approx(1.0 / 15.0, abs=1e-14)
    assert average_s2(lambda p: p[:, 0], SMALL) == pytest.approx(0.0, abs=1e-14)


def test_equator_kink_is_resolved():
    # |n_z| has its kink on the panel edge between the hemispheres
    assert average_s2(lambda p: np.abs(p[:, 2]), SMALL) == pytest.approx(0.5, abs=1e-13)


def test_scalar_callable_mode():
    value = average_s2(lambda p: p[2] ** 2, SMALL, vectorized=False)
    assert value == pytest.approx(1.0 / 3.0, abs=1e-14)


def test_double_sphere_average():
    value = average_s2x_s2(lambda n, m: np.sum(n * m, axis=-1) ** 2, SMALL)
    assert value == pytest.approx(1.0 / 3.0, abs=1e-13)


def test_double_sphere_workers_agree():
    f = lambda n, m: np.abs(np.sum(n * m, axis=-1))  # noqa: E731
    assert average_s2x_s2(f, SMALL, workers=3) == pytest.approx(average_s2x_s2(f, SMALL, workers=1), abs=1e-14)


def test_near_pure_integrands_double_orders():
    assert for_correlation_bound(SMALL, 0.5) == SMALL
    assert for_correlation_bound(SMALL, 1.0) == SMALL.doubled()


def test_random_unit_vectors_are_unit_and_centered():
    points = random_unit_vectors(np.random.default_rng(3), 20000)
    np.testing.assert_allclose(np.linalg.norm(points, axis=1), 1.0, atol=1e-14)
    assert np.abs(points.mean(axis=0)).max() < 0.03
    np.testing.assert_array_equal(haar_directions(10, 5), haar_directions(10, 5))


def test_mc_average_is_reproducible_and_consistent():
    spec = McSpec(100_000, 11)
    mean, stderr = mc_average(lambda p: p[:, 2] ** 2, spec)
    assert abs(mean - 1.0 / 3.0) < 5.0 * stderr
    assert mc_average(lambda p: p[:, 2] ** 2, spec, workers=2) == (mean, stderr)


def test_mc_average_pair_domain():
    mean, stderr = mc_average(lambda n, m: np.sum(n * m, axis=-1) ** 2, McSpec(50_000, 2), "s2xs2")
    assert abs(mean - 1.0 / 3.0) < 5.0 * stderr


def test_mc_rejects_bad_arguments():
    with pytest.raises(InvalidInputError):
        McSpec(0, 1)
    with pytest.raises(InvalidInputError):
        mc_average(lambda p: p[:, 0], McSpec(10, 1), domain="torus")


def test_constant_integrands():
    assert average_s2(lambda p: 1.0, SMALL) == pytest.approx(1.0, abs=1e-14)
    assert average_s2x_s2(lambda n, m: 1.0, SMALL) == pytest.approx(1.0, abs=1e-14)
    assert mc_average(lambda p: 1.0, McSpec(1000, 7)) == (1.0, 0.0)
    assert mc_average(lambda n, m: 1.0, McSpec(1000, 7), "s2xs2") == (1.0, 0.0)


def test_average_is_rotation_invariant():
    v = np.array([0.3, 0.5, -0.2])
    f = lambda p: np.exp(p @ v) * (1.0 + p[:, 0] * p[:, 2])  # noqa: E731
    expected = average_s2(f)
    for seed in range(3):
        rot = Rotation.random(random_state=seed)
        assert average_s2(lambda p: f(rot.apply(p))) == pytest.approx(expected, abs=1e-9)


def test_doubling_orders_changes_little():
    state = make_mmms(0.8, (-0.2, -0.3, -0.9))
    assert avg_mi_general(state, DEFAULT_QUADRATURE.doubled()) == pytest.approx(avg_mi_general(state), abs=1e-8)


def test_mc_agrees_with_quadrature():
    mean, stderr = mc_average(pair_mi_integrand(isotropic_state(1.0)), McSpec(200_000, 5), "s2xs2")
    assert abs(mean - avg_mi_isotropic(1.0)) < 5.0 * stderr

    state = classical_state(0.8)
    mean, stderr = mc_average(
        lambda n: figure_of_merit_x(np.linalg.norm(n * state.c_vec, axis=-1)), McSpec(200_000, 6)
    )
    assert abs(mean - average_over_relevant(state).F_U) < 5.0 * stderr
