import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bloch_core import is_in_tetrahedron
from errors import DomainError, InvalidInputError
from symmetry import (
    IDENTITY,
    INVERSION,
    OrbitElement,
    apply_orbit,
    classify,
    compose,
    even_elements,
    group_elements,
    inverse,
    local_map_residual,
    orbit,
    orbit_physical_subset,
    orbit_size,
    spin_flip_admissible,
    suborbit,
)

ISO3 = np.ones(3) / math.sqrt(3.0)
ISO2 = (0.5, 0.5, 1.0 / math.sqrt(2.0))
GENERIC = (0.2, 0.3, math.sqrt(0.87))

elements = st.sampled_from(group_elements())


def test_group_sizes():
    assert len(group_elements()) == 48
    assert len(set(group_elements())) == 48
    assert len(even_elements()) == 24
    assert group_elements()[0] == IDENTITY
    assert INVERSION.parity == -1


@given(elements, elements)
@settings(max_examples=200, deadline=None)
def test_composition_acts_sequentially(h, g):
    c = np.array(GENERIC)
    np.testing.assert_allclose(compose(h, g).apply(c), h.apply(g.apply(c)))
    np.testing.assert_allclose((h @ g).matrix, h.matrix @ g.matrix)
    assert (h @ g).parity == h.parity * g.parity


@given(elements)
@settings(max_examples=48, deadline=None)
def test_inverse(g):
    assert compose(g, inverse(g)) == IDENTITY
    assert compose(inverse(g), g) == IDENTITY


def test_local_maps_realize_every_element():
    for el in group_elements():
        assert local_map_residual(el, GENERIC) < 1e-15


def test_invalid_elements():
    with pytest.raises(InvalidInputError):
        OrbitElement((1, 1, 1), (0, 0, 1))
    with pytest.raises(InvalidInputError):
        OrbitElement((1, 2, 1), (0, 1, 2))


def test_apply_orbit_normalizes():
    np.testing.assert_allclose(
        apply_orbit(OrbitElement((1, -1, 1), (2, 0, 1)), (0.0, 3.0, 4.0)), (0.8, 0.0, 0.6)
    )


@pytest.mark.parametrize(
    "c_hat, size",
    [
        (ISO3, 8),
        (ISO2, 24),
        ((1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0), 0.0), 12),
        ((0.0, 0.0, 1.0), 6),
        (GENERIC, 48),
    ],
)
def test_orbit_sizes(c_hat, size):
    assert orbit_size(c_hat) == size
    members = orbit(c_hat)
    np.testing.assert_allclose(np.linalg.norm(members, axis=1), 1.0)


def test_orbit_is_closed():
    members = orbit(GENERIC)
    for el in group_elements()[:10]:
        for d in members:
            image = el.apply(d)
            assert np.min(np.max(np.abs(members - image), axis=1)) < 1e-12


def test_suborbits_of_isotropic_directions():
    assert len(suborbit(ISO3)) == 4
    assert len(suborbit(-ISO3)) == 4
    assert not set(map(tuple, np.round(suborbit(ISO3), 9))) & set(map(tuple, np.round(suborbit(-ISO3), 9)))


def test_classification():
    assert classify(ISO3).label == "Iso3"
    assert classify((0.0, 0.0, -1.0)).label == "Iso2_0"
    result = classify(ISO2)
    assert result.tag == "Iso2"
    assert result.epsilon == pytest.approx(0.5)
    assert result.label == "Iso2(0.5)"
    assert classify(GENERIC).label == "Generic"
    # two large equal components: eps is the repeated value
    assert classify((0.6, 0.6, math.sqrt(0.28))).epsilon == pytest.approx(0.6)


def test_classification_near_boundary_warns(caplog):
    c_hat = np.array([1.0, 1.0, 1.0 + 1e-7])
    result = classify(c_hat, tol=1e-9)
    assert result.tag == "Iso2"
    assert result.near_boundary
    assert "[orbit]" in caplog.text


def test_spin_flip():
    assert spin_flip_admissible((0.0, 0.0, 0.5))
    assert not spin_flip_admissible(-0.9 * np.ones(3))
    with pytest.raises(InvalidInputError):
        spin_flip_admissible(np.ones(3))


def test_physical_orbit_subset():
    assert len(orbit_physical_subset(1.0, -ISO3)) == 4
    assert len(orbit_physical_subset(math.sqrt(3.0), -ISO3)) == 4
    assert len(orbit_physical_subset(0.5, ISO3)) == 8
    assert len(orbit_physical_subset(0.3, ISO2)) == 24
    with pytest.raises(DomainError):
        orbit_physical_subset(1.0, ISO3)


tetrahedron_points = st.tuples(*[st.floats(-1.0, 1.0)] * 3).filter(
    lambda c: max(abs(x) for x in c) > 1e-3 and is_in_tetrahedron(np.array(c))
)


@given(tetrahedron_points, elements)
@settings(max_examples=200, deadline=None)
def test_parity_decides_tetrahedron_membership(c, el):
    c = np.array(c)
    if el.parity == 1:
        assert is_in_tetrahedron(el.apply(c))
    else:
        assert is_in_tetrahedron(el.apply(c)) == spin_flip_admissible(c)


@given(tetrahedron_points)
@settings(max_examples=100, deadline=None)
def test_physical_subset_matches_direct_filter(c):
    c = np.array(c)
    kappa = float(np.linalg.norm(c))
    members = orbit_physical_subset(kappa, c)
    direct = [d for d in orbit(c) if is_in_tetrahedron(kappa * d)]
    assert len(members) == len(direct)
    for d in members:
        assert is_in_tetrahedron(kappa * d)
    assert len(members) >= len(suborbit(c))
