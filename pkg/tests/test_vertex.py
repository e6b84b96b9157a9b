import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stargraph import (
    VertexCondition,
    build_graph,
    canonical,
    find_bound_states,
    resolvent_difference_rank,
    scattering_matrix,
    validate,
)
from stargraph.errors import InvalidAlpha, InvalidSpectralParameter, NonSelfAdjoint, RankDeficient
from stargraph.vertex import resolvent_kernel

KINDS = ["kirchhoff", "dirichlet", "delta", "delta_prime"]


def _cond(kind, n, alpha=-1.0):
    return canonical(kind, n, alpha if kind in ("delta", "delta_prime") else None)


@pytest.mark.parametrize("n", [2, 3, 5])
@pytest.mark.parametrize("kind", KINDS)
def test_canonical_conditions_are_admissible_and_unitary(kind, n):
    vc = _cond(kind, n)
    validate(vc.A, vc.B)
    for k in (0.5, 1.0, 2.0):
        S = scattering_matrix(vc, k)
        assert np.allclose(S @ S.conj().T, np.eye(n), atol=1e-10)


@pytest.mark.parametrize("n", [2, 3, 5])
def test_energy_independent_matrices(n):
    K = scattering_matrix(canonical("kirchhoff", n), 1.3)
    assert np.allclose(K, 2.0 / n * np.ones((n, n)) - np.eye(n), atol=1e-12)
    D = scattering_matrix(canonical("dirichlet", n), 0.7)
    assert np.array_equal(D, -np.eye(n))
    assert np.linalg.matrix_rank(D - K, tol=1e-10) == 1


def test_validation_errors():
    with pytest.raises(RankDeficient):
        validate(np.zeros((2, 2)), np.zeros((2, 2)))
    with pytest.raises(NonSelfAdjoint):
        validate(np.eye(2), np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(InvalidAlpha):
        canonical("delta", 3, 0.0)


def test_equivalent_under_left_multiplication():
    vc = canonical("delta", 3, 2.0)
    C = np.array([[2.0, 1.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 3.0]])
    other = validate(C @ vc.A, C @ vc.B)
    assert vc.equivalent(other)
    assert not vc.equivalent(canonical("kirchhoff", 3))


def test_dict_round_trip():
    vc = canonical("delta", 3, -1.5)
    back = VertexCondition.from_dict(vc.to_dict())
    assert back.kind == "delta" and back.alpha == -1.5
    assert vc.equivalent(back)
    custom = VertexCondition.from_dict(vc.to_dict(include_matrices=True))
    assert vc.equivalent(custom)


@pytest.mark.parametrize("n", [2, 3, 5])
@pytest.mark.parametrize("alpha", [-0.5, -2.0, -4.0])
def test_delta_bound_state(n, alpha):
    states = find_bound_states(canonical("delta", n, alpha))
    assert len(states) == 1
    assert states[0].kappa == pytest.approx(-alpha / n, abs=1e-6)
    assert states[0].energy == pytest.approx(-(alpha / n) ** 2, rel=1e-6)


@pytest.mark.parametrize("kind", ["kirchhoff", "dirichlet"])
def test_no_bound_states(kind):
    assert find_bound_states(canonical(kind, 3)) == []
    assert find_bound_states(canonical("delta", 3, 1.0)) == []


def test_delta_prime_bound_states():
    # sum f_j(0) = alpha f'(0): one state with kappa = -n / alpha when alpha < 0
    states = find_bound_states(canonical("delta_prime", 3, -1.5))
    assert [round(s.kappa, 6) for s in states] == [2.0]
    assert find_bound_states(canonical("delta_prime", 3, 1.5)) == []


def test_eigenfunction_satisfies_condition():
    vc = canonical("delta", 3, -2.0)
    s = find_bound_states(vc)[0]
    g = build_graph(3, 30.0, 4096)
    f = s.eigenfunction(g)
    assert f.norm() == pytest.approx(1.0)
    c = s.coefficients
    assert np.linalg.norm(vc.A @ c + vc.B @ (-s.kappa * c)) < 1e-10


def test_resolvent_difference_rank():
    g = build_graph(3, 20.0, 256)
    assert resolvent_difference_rank(canonical("kirchhoff", 3), g) == 1
    assert resolvent_difference_rank(canonical("dirichlet", 3), g) == 0
    assert resolvent_difference_rank(canonical("delta", 3, 1.0), g) <= 3
    dense = resolvent_difference_rank(canonical("delta", 3, 1.0), g, dense=True)
    assert dense == resolvent_difference_rank(canonical("delta", 3, 1.0), g)


def test_resolvent_kernel_symmetric():
    vc = canonical("delta", 3, 1.0)
    lam = 0.3 + 0.8j
    assert resolvent_kernel(vc, lam, 0, 1.0, 2, 2.5) == pytest.approx(resolvent_kernel(vc, lam, 2, 2.5, 0, 1.0))


def test_resolvent_requires_upper_half_plane():
    with pytest.raises(InvalidSpectralParameter):
        resolvent_kernel(canonical("kirchhoff", 3), -1.0j, 0, 1.0, 0, 1.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(-5, 5).filter(lambda a: abs(a) > 1e-3), st.floats(0.05, 10))
def test_delta_scattering_unitary(alpha, k):
    S = scattering_matrix(canonical("delta", 3, alpha), k)
    assert np.allclose(S @ S.conj().T, np.eye(3), atol=1e-10)
