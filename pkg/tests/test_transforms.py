import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stargraph import (
    GraphFunction,
    SpectralField,
    build_graph,
    dilation_apply,
    dilation_inverse,
    dirichlet_propagate,
    dollard_propagate,
    multiplier_apply,
    multiplier_inverse,
    sample_function,
    sine_inverse,
    sine_transform,
)
from stargraph.errors import DomainEscape, InvalidExponent, NonpositiveTime
from stargraph.transforms import hausdorff_young_check, resample


def _interior(graph, rng):
    v = rng.normal(size=graph.shape) + 1j * rng.normal(size=graph.shape)
    v[:, 0] = v[:, -1] = 0
    return GraphFunction(graph, v)


def test_square_is_minus_identity_and_isometry(small_graph, rng):
    for _ in range(5):
        f = _interior(small_graph, rng)
        F = sine_transform(f)
        assert F.norm() == pytest.approx(f.norm(), rel=1e-12)
        back = sine_transform(F.as_function())
        assert np.allclose(back.coefficients, -f.values, atol=1e-12)
        assert np.allclose(sine_inverse(F).values, f.values, atol=1e-12)


def test_closed_form_exponential():
    g = build_graph(1 + 1, 400.0, 16384)
    f = g.from_profile(lambda x: np.exp(-x))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        F = sine_transform(f)
    xi = F.frequencies
    exact = -1j * math.sqrt(2 / math.pi) * xi / (1 + xi**2)
    sel = xi <= 10
    assert np.abs(F.coefficients[:, sel] - exact[sel]).max() < 1e-6


def test_endpoint_correction_is_inactive_on_interior_data(small_graph, rng):
    f = _interior(small_graph, rng)
    assert np.array_equal(sine_transform(f).coefficients,
                          sine_transform(f, endpoint_correction=False).coefficients)


def test_nonzero_vertex_warns(small_graph):
    with pytest.warns(RuntimeWarning):
        sine_transform(small_graph.from_profile(lambda x: np.exp(-x)))


@pytest.mark.parametrize("r", [2, 4, "inf"])
def test_hausdorff_young(small_graph, rng, r):
    f = _interior(small_graph, rng)
    lhs, rhs = hausdorff_young_check(f, r)
    assert np.all(lhs <= rhs * (1 + 1e-10))


def test_hausdorff_young_rejects_small_r(small_graph):
    with pytest.raises(InvalidExponent):
        hausdorff_young_check(small_graph.zeros(), 1.5)


def test_dilation_round_trip_is_exact(bump):
    for t in (0.3, 1.0, 7.5):
        d = dilation_apply(t, bump)
        assert d.graph.edge_length == pytest.approx(bump.graph.edge_length * 2 * t)
        assert d.norm() == pytest.approx(bump.norm(), rel=1e-12)
        back = dilation_inverse(t, d)
        assert np.allclose(back.values, bump.values, atol=1e-14)


def test_dilation_onto_other_grid_interpolates(bump):
    target = build_graph(3, 120.0, 3000)
    d = dilation_apply(1.0, bump, target=target)
    x = target.nodes
    exact = (np.exp(-0.5 * ((x / 2 - 10) / 2) ** 2) - np.exp(-0.5 * ((x / 2 + 10) / 2) ** 2)) / np.sqrt(2j)
    assert np.abs(d.values[0] - exact).max() < 1e-6


def test_dilation_domain_guard(bump):
    with pytest.raises(DomainEscape):
        dilation_apply(0.1, bump, target=bump.graph)
    d = dilation_apply(0.1, bump, target=bump.graph, outside="zero")
    assert d.norm() == pytest.approx(bump.norm(), rel=1e-6)
    g = bump.graph
    wall = g.from_profile(lambda x: np.exp(-0.5 * (x - g.edge_length) ** 2))
    with pytest.raises(DomainEscape):
        resample(wall, build_graph(3, 2 * g.edge_length, 64), 1.0, outside="zero")


def test_time_checks(bump):
    with pytest.raises(NonpositiveTime):
        dilation_apply(0.0, bump)
    with pytest.raises(NonpositiveTime):
        multiplier_apply(0.0, bump)
    assert np.allclose(multiplier_inverse(-2.0, multiplier_apply(-2.0, bump)).values, bump.values)


def test_dollard_matches_spectral_propagator():
    g = build_graph(3, 100.0, 4096)
    phi = sample_function(g, "gaussian-bump", center=10.0, width=2.0, dirichlet=True)
    for t in (5.0, 20.0):
        assert (dollard_propagate(t, phi) - dirichlet_propagate(t, phi)).norm() < 1e-3


def test_spectral_field_wraps_dual(small_graph):
    F = SpectralField(small_graph, np.ones(small_graph.shape))
    assert F.as_function().graph.same_grid(small_graph.dual())
    assert SpectralField.from_function(F.as_function(), small_graph).norm() == pytest.approx(F.norm())


@settings(max_examples=20, deadline=None)
@given(st.floats(2.0, 15.0), st.floats(0.5, 3.0), st.floats(-2.0, 2.0))
def test_isometry_property(center, width, k):
    g = build_graph(2, 40.0, 512)
    f = sample_function(g, "gaussian-bump", center=center, width=width, phase_velocity=k, dirichlet=True)
    f = GraphFunction(g, np.where(np.arange(g.points_per_edge + 1) == g.points_per_edge, 0, f.values))
    assert sine_transform(f).norm() == pytest.approx(f.norm(), rel=1e-10)
