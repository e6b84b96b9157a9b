"""Self-adjoint vertex conditions ``A f(0) + B f'(0+) = 0``.

Covers admissibility of the pair ``(A, B)``, the four canonical conditions
(Kirchhoff, delta, Dirichlet, delta-prime), the vertex scattering matrix
``G(k) = -(A + ikB)^{-1}(A - ikB)``, the resolvent kernel, negative
eigenvalues and the rank of the resolvent difference against Dirichlet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    InvalidAlpha,
    InvalidParameter,
    InvalidSpectralParameter,
    NonSelfAdjoint,
    RankDeficient,
    SingularMatrix,
)
from .graph import GraphFunction, StarGraph

RANK_RTOL = 1e-10
HERMITIAN_RTOL = 1e-10
COND_MAX = 1e12
DEFAULT_LAMBDA = (1 + 1j) / math.sqrt(2)
KINDS = ("kirchhoff", "delta", "dirichlet", "delta_prime", "custom")


@dataclass(frozen=True, eq=False)
class VertexCondition:
    A: np.ndarray = field(repr=False)
    B: np.ndarray = field(repr=False)
    kind: str = "custom"
    alpha: float | None = None

    def __post_init__(self):
        for name in ("A", "B"):
            mat = np.array(getattr(self, name), dtype=complex, copy=True)
            mat.flags.writeable = False
            object.__setattr__(self, name, mat)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def __repr__(self):
        extra = f", alpha={self.alpha}" if self.alpha is not None else ""
        return f"VertexCondition(kind={self.kind!r}, n={self.n}{extra})"

    def residual(self, f0, df0) -> float:
        """``|A f(0) + B f'(0+)|`` for given vertex values and derivatives."""
        return float(np.linalg.norm(self.A @ np.asarray(f0) + self.B @ np.asarray(df0)))

    def scattering_matrix(self, k) -> np.ndarray:
        return scattering_matrix(self, k)

    def equivalent(self, other: "VertexCondition", ks=(0.5, 1.0, 2.0), tol=1e-8) -> bool:
        """Same self-adjoint Laplacian: scattering matrices agree at sample ``k``."""
        if self.n != other.n:
            return False
        return all(
            np.abs(scattering_matrix(self, k) - scattering_matrix(other, k)).max() <= tol
            for k in ks
        )

    def boundary_form(self, tol: float = 1e-9):
        """Split the condition into Dirichlet and Robin parts.

        Returns ``(V, Lam)`` with ``V`` an ``n x r`` orthonormal basis of the
        subspace where vertex values are free, and ``Lam`` Hermitian ``r x r``
        such that the condition reads ``f(0) = V c`` and
        ``V^* f'(0+) = Lam c``.  Derived from the eigen-decomposition of the
        unitary ``G(1)``: eigenvalue ``-1`` is Dirichlet, ``e^{i theta}``
        gives ``f' = -tan(theta/2) f`` on its eigenspace.
        """
        U = scattering_matrix(self, 1.0)
        T, Z = scipy.linalg.schur(U, output="complex")
        ev = np.diag(T)
        keep = np.abs(ev + 1.0) > tol
        V = Z[:, keep]
        theta = np.angle(ev[keep])
        Lam = np.diag(-np.tan(theta / 2)).astype(complex)
        return V, Lam

    def to_dict(self, include_matrices: bool | None = None) -> dict:
        if include_matrices is None:
            include_matrices = self.kind == "custom"
        out = {"kind": self.kind, "n": self.n, "alpha": self.alpha}
        if include_matrices:
            out["A"] = [[[float(z.real), float(z.imag)] for z in row] for row in self.A]
            out["B"] = [[[float(z.real), float(z.imag)] for z in row] for row in self.B]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "VertexCondition":
        kind = str(data.get("kind", "custom")).replace("-", "_")
        if "A" in data and "B" in data:
            A = _matrix_from_pairs(data["A"])
            B = _matrix_from_pairs(data["B"])
            return validate(A, B, kind=kind, alpha=data.get("alpha"))
        if kind == "custom":
            raise InvalidParameter("custom vertex condition needs matrices A and B")
        return canonical(kind, int(data["n"]), data.get("alpha"))


def _matrix_from_pairs(rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.ndim == 3 and arr.shape[-1] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    return arr.astype(complex)


def admissibility_defects(A, B) -> dict:
    """Numeric witnesses for the maximal-rank and Hermitian conditions."""
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    sv = np.linalg.svd(np.hstack([A, B]), compute_uv=False)
    smax = sv[0] if sv.size else 0.0
    rank = int(np.sum(sv > RANK_RTOL * smax)) if smax > 0 else 0
    ABs = A @ B.conj().T
    herm_defect = float(np.abs(ABs - ABs.conj().T).max())
    herm_tol = HERMITIAN_RTOL * (np.linalg.norm(A, 2) * np.linalg.norm(B, 2) + 1.0)
    return {
        "singular_values": sv,
        "rank": rank,
        "hermitian_defect": herm_defect,
        "hermitian_tol": herm_tol,
    }


def validate(A, B, kind: str = "custom", alpha: float | None = None) -> VertexCondition:
    """Check that ``(A B)`` has rank ``n`` and ``A B^*`` is Hermitian."""
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape != B.shape:
        raise InvalidParameter(f"A and B must be square and equal-sized, got {A.shape}, {B.shape}")
    n = A.shape[0]
    if n < 2:
        raise InvalidParameter("a star graph needs n >= 2 edges")
    d = admissibility_defects(A, B)
    if d["rank"] < n:
        raise RankDeficient(
            f"rank(A B) = {d['rank']} < {n}; singular values {d['singular_values']}",
            singular_values=d["singular_values"],
        )
    if d["hermitian_defect"] > d["hermitian_tol"]:
        raise NonSelfAdjoint(
            f"A B^* is not Hermitian: max |AB^* - BA^*| = {d['hermitian_defect']:.3e}",
            defect=d["hermitian_defect"],
        )
    return VertexCondition(A, B, kind=kind, alpha=alpha)


def _chain_rows(n: int) -> np.ndarray:
    """Rows ``e_i - e_{i+1}`` (continuity across the vertex), last row zero."""
    C = np.zeros((n, n))
    for i in range(n - 1):
        C[i, i] = 1.0
        C[i, i + 1] = -1.0
    return C


def canonical(kind: str, n: int, alpha: float | None = None) -> VertexCondition:
    """The standard matrices for ``kirchhoff``, ``delta``, ``dirichlet``, ``delta_prime``."""
    kind = kind.replace("-", "_").lower()
    if kind == "delta'":
        kind = "delta_prime"
    if int(n) != n or n < 2:
        raise InvalidParameter(f"need n >= 2 edges, got {n}")
    n = int(n)
    ones = np.zeros((n, n))
    ones[-1, :] = 1.0
    if kind == "kirchhoff":
        A, B, alpha = _chain_rows(n), ones, None
    elif kind == "delta":
        if alpha is None or alpha == 0:
            raise InvalidAlpha("delta condition requires alpha != 0")
        A = _chain_rows(n)
        A[-1, 0] = -float(alpha)
        B = ones
    elif kind == "dirichlet":
        A, B, alpha = np.eye(n), np.zeros((n, n)), None
    elif kind == "delta_prime":
        alpha = 0.0 if alpha is None else float(alpha)
        A = ones
        B = _chain_rows(n)
        B[-1, 0] = -alpha
    else:
        raise InvalidParameter(f"unknown canonical condition {kind!r}")
    return validate(A, B, kind=kind, alpha=None if alpha is None else float(alpha))


def scattering_matrix(vc: VertexCondition, k) -> np.ndarray:
    """``G(k) = -(A + ikB)^{-1}(A - ikB)``."""
    M = vc.A + 1j * k * vc.B
    if np.linalg.cond(M) > COND_MAX:
        raise SingularMatrix(f"A + ikB is numerically singular at k={k}")
    return -np.linalg.solve(M, vc.A - 1j * k * vc.B)


# ------------------------------------------------------------ bound states

@dataclass(frozen=True, eq=False)
class BoundState:
    """Eigenfunction ``f_j(x) = c_j exp(-kappa x)`` with energy ``-kappa^2``."""

    kappa: float
    coefficients: np.ndarray = field(repr=False)
    residual: float = 0.0

    @property
    def energy(self) -> float:
        return -self.kappa**2

    def eigenfunction(self, graph: StarGraph) -> GraphFunction:
        """Sampled eigenfunction, normalized in the discrete ``L^2`` norm."""
        values = np.outer(self.coefficients, np.exp(-self.kappa * graph.nodes))
        values[:, -1] = 0.0  # far wall
        f = GraphFunction(graph, values)
        return f / f.norm()


def default_kappa_max(vc: VertexCondition) -> float:
    nb = np.linalg.norm(vc.B, 2)
    return 10.0 * (1.0 + np.linalg.norm(vc.A, 2) / max(nb, 1e-12))


def _det(vc, kappa):
    return np.linalg.det(vc.A - kappa * vc.B)


def _newton_root(vc, k0, scale, max_iter=100):
    k = complex(k0)
    for _ in range(max_iter):
        step_h = 1e-6 * max(abs(k), 1e-8)
        f = _det(vc, k)
        df = (_det(vc, k + step_h) - _det(vc, k - step_h)) / (2 * step_h)
        if df == 0:
            break
        dk = f / df
        k -= dk
        if abs(dk) <= 1e-15 * max(abs(k), scale):
            break
    return k


def find_bound_states(vc: VertexCondition, kappa_max: float | None = None,
                      n_grid: int = 2048) -> list[BoundState]:
    """Negative eigenvalues ``-kappa^2`` from ``det(A - kappa B) = 0``.

    ``|det|`` is scanned on a log-spaced grid in ``(0, kappa_max]``; every
    local minimum seeds a Newton iteration.  Converged real roots are kept,
    and each contributes one state per dimension of the null space of
    ``A - kappa B`` (orthonormal coefficient vectors).
    """
    if kappa_max is None:
        kappa_max = default_kappa_max(vc)
    if kappa_max <= 0:
        raise InvalidParameter("kappa_max must be positive")
    grid = np.geomspace(kappa_max * 1e-7, kappa_max, n_grid)
    vals = np.abs([_det(vc, k) for k in grid])
    interior = np.flatnonzero((vals[1:-1] <= vals[:-2]) & (vals[1:-1] <= vals[2:])) + 1
    seeds = list(grid[interior])
    if vals[-1] < vals[-2]:
        seeds.append(grid[-1])
    if vals[0] < vals[1]:
        seeds.append(grid[0])

    scale_A = np.linalg.norm(vc.A, 2)
    scale_B = np.linalg.norm(vc.B, 2)
    roots: list[float] = []
    for s in seeds:
        k = _newton_root(vc, s, kappa_max)
        if abs(k.imag) > 1e-8 * max(1.0, abs(k.real)):
            continue
        kr = k.real
        # kappa -> 0 is a threshold resonance, not an L^2 eigenfunction
        if not (grid[0] <= kr <= kappa_max * (1 + 1e-12)):
            continue
        sv = np.linalg.svd(vc.A - kr * vc.B, compute_uv=False)
        if sv[-1] > 1e-8 * (scale_A + kr * scale_B):
            continue
        if any(abs(kr - r) <= 1e-8 * max(kr, 1e-12) for r in roots):
            continue
        roots.append(kr)

    states = []
    for kr in sorted(roots):
        M = vc.A - kr * vc.B
        _, sv, vh = np.linalg.svd(M)
        tol = 1e-8 * (scale_A + kr * scale_B)
        null = vh[sv <= tol].conj()
        for c in null:
            # continuum normalization: int |c|^2 e^{-2 kappa x} dx = 1
            c = c * math.sqrt(2 * kr) / np.linalg.norm(c)
            res = float(np.linalg.norm(M @ c))
            states.append(BoundState(kr, c, res))
    return states


# -------------------------------------------------------------- resolvent

def _check_lambda(lam):
    lam = complex(lam)
    if lam.imag <= 0:
        raise InvalidSpectralParameter(f"need Im lambda > 0, got {lam}")
    if abs((lam * lam).imag) <= 1e-14 * abs(lam) ** 2:
        raise InvalidSpectralParameter(f"lambda^2 = {lam * lam} is real")
    return lam


def resolvent_matrix(vc: VertexCondition, lam, x: float, y: float) -> np.ndarray:
    """``n x n`` kernel of ``(-Delta_M - lam^2)^{-1}`` at points ``x, y`` on the edges."""
    lam = _check_lambda(lam)
    G = scattering_matrix(vc, lam)
    c = 1j / (2 * lam)
    return c * (np.eye(vc.n) * np.exp(1j * lam * abs(x - y)) + G * np.exp(1j * lam * (x + y)))


def resolvent_kernel(vc: VertexCondition, lam, j: int, x: float, l: int, y: float) -> complex:
    if not (0 <= j < vc.n and 0 <= l < vc.n):
        raise InvalidParameter("edge index out of range")
    return complex(resolvent_matrix(vc, lam, x, y)[j, l])


def resolvent_difference_rank(vc: VertexCondition, graph: StarGraph, lam=DEFAULT_LAMBDA,
                              rtol: float = 1e-8, dense: bool = False) -> int:
    """Numerical rank of the Dirichlet-minus-``M`` resolvent difference on the grid.

    The discretized operator is ``c Phi (G_D - G_M) (W Phi)^T`` with
    ``Phi[(j,k), j] = exp(i lam x_k)`` and trapezoid weights ``W``.  By
    default its singular values are obtained from the thin QR factors of
    both ``Phi`` blocks; ``dense=True`` assembles the full matrix instead.
    """
    lam = _check_lambda(lam)
    if vc.n != graph.n_edges:
        raise InvalidParameter("vertex condition and graph have different edge counts")
    n = vc.n
    dirichlet = canonical("dirichlet", n)
    D = scattering_matrix(dirichlet, lam) - scattering_matrix(vc, lam)
    c = 1j / (2 * lam)
    x = graph.nodes
    w = graph.weights()
    e = np.exp(1j * lam * x)
    N = n * x.size
    Phi = np.zeros((N, n), dtype=complex)
    for j in range(n):
        Phi[j * x.size:(j + 1) * x.size, j] = e
    WPhi = Phi * np.tile(w, n)[:, None]
    if dense:
        K = c * Phi @ D @ WPhi.T
        sv = np.linalg.svd(K, compute_uv=False)
    else:
        _, R1 = np.linalg.qr(Phi)
        _, R2 = np.linalg.qr(WPhi)
        sv = np.linalg.svd(c * R1 @ D @ R2.T, compute_uv=False)
    smax = sv.max() if sv.size else 0.0
    scale = abs(c) * np.linalg.norm(Phi, 2) * np.linalg.norm(WPhi, 2)
    if smax <= 1e-13 * scale:
        return 0
    return int(np.sum(sv > rtol * smax))
