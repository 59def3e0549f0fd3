"""Pointwise tensor objects of a metric or a metric pair.

Everything here is a pure function of immutable field inputs evaluated at a
point: metric inverse, both Christoffel index positions, Riemann curvature,
the affinor of a pair, its Nijenhuis tensor, the obstruction tensor built
from the two contravariant connections, and pencil eigenvalues.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from .errors import DegenerateMetric, RootFindingFailure
from .expr import ScalarField, constant

DEGENERACY_TOL = 1e-10

CONTRAVARIANT = "contravariant"
COVARIANT = "covariant"


@dataclass
class MetricField:
    """Symmetric N x N matrix of scalar fields, contravariant or covariant.

    entries[i][j] and entries[j][i] reference the same field object.
    """

    dim: int
    variance: str
    entries: List[List[ScalarField]]

    def __post_init__(self):
        if self.variance not in (CONTRAVARIANT, COVARIANT):
            raise ValueError(f"bad variance {self.variance!r}")
        n = self.dim
        if len(self.entries) != n or any(len(row) != n for row in self.entries):
            raise ValueError("entries must be an N x N matrix")
        for i in range(n):
            for j in range(i + 1, n):
                if self.entries[i][j] is not self.entries[j][i]:
                    raise ValueError(
                        "symmetric entries must share the same field object"
                    )

    @staticmethod
    def from_upper(upper, variance):
        """Build from a dict {(i, j): field, i <= j}; missing entries are zero."""
        dims = {f.dim for f in upper.values()}
        if len(dims) != 1:
            raise ValueError("all entries must share a dimension")
        n = next(iter(dims))
        zero = constant(0.0, n)
        entries = [[zero] * n for _ in range(n)]
        for (i, j), f in upper.items():
            a, b = min(i, j), max(i, j)
            entries[a][b] = f
            entries[b][a] = f
        return MetricField(n, variance, entries)

    @staticmethod
    def diagonal(fields, variance=CONTRAVARIANT):
        n = len(fields)
        return MetricField.from_upper(
            {(i, i): f for i, f in enumerate(fields)}, variance
        )

    @staticmethod
    def from_constant(matrix, variance=CONTRAVARIANT):
        m = np.asarray(matrix, dtype=complex)
        n = m.shape[0]
        if not np.array_equal(m, m.T):
            raise ValueError("constant metric must be symmetric")
        upper = {
            (i, j): constant(m[i, j], n) for i in range(n) for j in range(i, n)
        }
        return MetricField.from_upper(upper, variance)

    def values(self, point):
        pt = np.asarray(point, dtype=complex)
        out = np.empty((self.dim, self.dim), dtype=complex)
        for i in range(self.dim):
            for j in range(i, self.dim):
                out[i, j] = out[j, i] = self.entries[i][j](pt)
        return out


def linear_combination(l1, g1, l2, g2):
    """The metric field l1*g1 + l2*g2 (entries stay shared symmetrically)."""
    if g1.dim != g2.dim or g1.variance != g2.variance:
        raise ValueError("metrics must share dimension and variance")
    upper = {}
    for i in range(g1.dim):
        for j in range(i, g1.dim):
            upper[(i, j)] = l1 * g1.entries[i][j] + l2 * g2.entries[i][j]
    return MetricField.from_upper(upper, g1.variance)


@dataclass
class GeometryJet:
    """All tensor data of one metric at one point."""

    point: np.ndarray
    g_up: np.ndarray          # g^{ij}
    g_down: np.ndarray        # g_{ij}
    dg_up: np.ndarray         # [k,i,j] = d g^{ij} / d u^k
    d2g_up: np.ndarray        # [k,l,i,j]
    dg_down: np.ndarray
    d2g_down: np.ndarray
    gamma_mixed: np.ndarray   # [i,j,k] = Gamma^i_{jk}
    gamma_contra: np.ndarray  # [i,j,k] = Gamma^{ij}_k
    riemann_mixed: np.ndarray  # [i,j,k,l] = R^i_{jkl}
    riemann_upup: np.ndarray   # [i,j,k,l] = R^{ij}_{kl}


@dataclass
class Affinor:
    """Values and first partials of v^i_j = g1^{is} g_{2,sj} at a point."""

    v: np.ndarray   # [i,j]
    dv: np.ndarray  # [s,i,j] = d v^i_j / d u^s


def _entry_jets(g, point, order):
    """Evaluate metric entries; return value/deriv arrays (derivative index first)."""
    n = g.dim
    V = np.zeros((n, n), dtype=complex)
    d = np.zeros((n, n, n), dtype=complex)
    d2 = np.zeros((n, n, n, n), dtype=complex)
    for i in range(n):
        for j in range(i, n):
            jet = g.entries[i][j].eval_jet(point, order)
            V[i, j] = V[j, i] = jet.value
            if order >= 1:
                d[:, i, j] = d[:, j, i] = jet.grad
            if order >= 2:
                d2[:, :, i, j] = d2[:, :, j, i] = jet.hess
    return V, d, d2


def _invert_with_derivs(V, d, d2, order, point, degeneracy_tol):
    n = V.shape[0]
    scale = max(1.0, float(np.max(np.abs(V))))
    det = np.linalg.det(V)
    if abs(det) < degeneracy_tol * scale**n:
        raise DegenerateMetric(np.asarray(point), abs(det))
    W = np.linalg.inv(V)
    dW = np.zeros_like(d)
    d2W = np.zeros_like(d2)
    if order >= 1:
        for k in range(n):
            dW[k] = -W @ d[k] @ W
    if order >= 2:
        for k in range(n):
            for l in range(n):
                d2W[k, l] = -(
                    dW[l] @ d[k] @ W + W @ d2[k, l] @ W + W @ d[k] @ dW[l]
                )
    return W, dW, d2W


def _both_variances(g, point, order, degeneracy_tol):
    """(up, dup, d2up, down, ddown, d2down) for a metric field at a point."""
    V, d, d2 = _entry_jets(g, point, order)
    W, dW, d2W = _invert_with_derivs(V, d, d2, order, point, degeneracy_tol)
    if g.variance == CONTRAVARIANT:
        return V, d, d2, W, dW, d2W
    return W, dW, d2W, V, d, d2


def geometry_jet(g, point, degeneracy_tol=DEGENERACY_TOL):
    """Metric inverse, Christoffel symbols and curvature at one point.

    The Levi-Civita connection comes from the covariant entries; curvature
    needs second metric derivatives, supplied exactly by the jets.
    """
    pt = np.asarray(point, dtype=complex)
    n = g.dim
    up, dup, d2up, down, ddown, d2down = _both_variances(g, pt, 2, degeneracy_tol)

    # Gamma^i_{jk} = 1/2 g^{is} (d_j g_{sk} + d_k g_{js} - d_s g_{jk})
    # ddown[k,i,j] = d_k g_{ij}
    bracket = (
        np.einsum("jsk->sjk", ddown)
        + np.einsum("kjs->sjk", ddown)
        - np.einsum("sjk->sjk", ddown)
    )
    gamma_mixed = 0.5 * np.einsum("is,sjk->ijk", up, bracket)

    # d_m Gamma^i_{jk}
    dbracket = (
        np.einsum("mjsk->msjk", d2down)
        + np.einsum("mkjs->msjk", d2down)
        - np.einsum("msjk->msjk", d2down)
    )
    dgamma = 0.5 * (
        np.einsum("mis,sjk->mijk", dup, bracket)
        + np.einsum("is,msjk->mijk", up, dbracket)
    )

    # R^i_{jkl} = d_k Gamma^i_{jl} - d_l Gamma^i_{jk}
    #           + Gamma^i_{pk} Gamma^p_{jl} - Gamma^i_{pl} Gamma^p_{jk}
    riemann_mixed = (
        np.einsum("kijl->ijkl", dgamma)
        - np.einsum("lijk->ijkl", dgamma)
        + np.einsum("ipk,pjl->ijkl", gamma_mixed, gamma_mixed)
        - np.einsum("ipl,pjk->ijkl", gamma_mixed, gamma_mixed)
    )

    gamma_contra = np.einsum("is,jsk->ijk", up, gamma_mixed)
    riemann_upup = np.einsum("is,jskl->ijkl", up, riemann_mixed)

    return GeometryJet(
        point=pt,
        g_up=up,
        g_down=down,
        dg_up=dup,
        d2g_up=d2up,
        dg_down=ddown,
        d2g_down=d2down,
        gamma_mixed=gamma_mixed,
        gamma_contra=gamma_contra,
        riemann_mixed=riemann_mixed,
        riemann_upup=riemann_upup,
    )


def affinor_at(g1, g2, point, degeneracy_tol=DEGENERACY_TOL):
    """v^i_j = g1^{is} g_{2,sj} and its first partials at a point."""
    pt = np.asarray(point, dtype=complex)
    up1, dup1, _, _, _, _ = _both_variances(g1, pt, 1, degeneracy_tol)
    _, _, _, down2, ddown2, _ = _both_variances(g2, pt, 1, degeneracy_tol)
    v = up1 @ down2
    dv = np.einsum("sip,pj->sij", dup1, down2) + np.einsum(
        "ip,spj->sij", up1, ddown2
    )
    return Affinor(v=v, dv=dv)


def nijenhuis(a):
    """N^k_{ij} of an affinor; antisymmetric in (i, j) exactly."""
    v, dv = a.v, a.dv
    t1 = np.einsum("si,skj->kij", v, dv)
    t3 = np.einsum("ks,jsi->kij", v, dv)
    n1 = t1 - np.einsum("kij->kji", t1)
    n3 = t3 - np.einsum("kij->kji", t3)
    return n1 + n3


def tensor_M(g1, g2, point, degeneracy_tol=DEGENERACY_TOL):
    """Obstruction tensor M^{ijk} built from both contravariant connections.

    Vanishes exactly when the pair is almost compatible; antisymmetric in
    (i, j) by construction.
    """
    pt = np.asarray(point, dtype=complex)
    j1 = geometry_jet(g1, pt, degeneracy_tol)
    j2 = geometry_jet(g2, pt, degeneracy_tol)
    up1, up2 = j1.g_up, j2.g_up
    gc1, gc2 = j1.gamma_contra, j2.gamma_contra
    return (
        np.einsum("is,jks->ijk", up1, gc2)
        - np.einsum("js,iks->ijk", up2, gc1)
        - np.einsum("js,iks->ijk", up1, gc2)
        + np.einsum("is,jks->ijk", up2, gc1)
    )


def _faddeev_leverrier(A):
    """Monic characteristic polynomial coefficients via the trace recursion."""
    n = A.shape[0]
    c = np.zeros(n + 1, dtype=complex)
    c[0] = 1.0
    M = np.zeros_like(A)
    for k in range(1, n + 1):
        M = A @ M + c[k - 1] * np.eye(n, dtype=complex)
        c[k] = -np.trace(A @ M) / k
    return c  # p(x) = sum c[k] x^{n-k}


def durand_kerner(coeffs, max_iters=500, tol=1e-13):
    """All roots of a monic polynomial by simultaneous iteration."""
    c = np.asarray(coeffs, dtype=complex)
    n = len(c) - 1
    if n == 0:
        return np.array([], dtype=complex)
    radius = 1.0 + float(np.max(np.abs(c[1:])))
    base = 0.4 + 0.9j
    z = radius * base ** np.arange(1, n + 1)
    for _ in range(max_iters):
        p = np.polyval(c, z)
        denom = np.ones_like(z)
        for i in range(n):
            others = np.delete(z, i)
            denom[i] = np.prod(z[i] - others)
        if np.any(denom == 0):
            z = z + 1e-8 * radius * base ** np.arange(1, n + 1)
            continue
        step = p / denom
        z = z - step
        if np.max(np.abs(step)) < tol * max(1.0, np.max(np.abs(z))):
            return z
    raise RootFindingFailure(
        f"Durand-Kerner did not converge in {max_iters} iterations"
    )


def pencil_eigenvalues(g1, g2, point, degeneracy_tol=DEGENERACY_TOL,
                       max_iters=500):
    """Roots of det(g1 - lambda g2) = 0, sorted by (Re, Im), plus min gap."""
    pt = np.asarray(point, dtype=complex)
    up1 = g1.values(pt) if g1.variance == CONTRAVARIANT else None
    if up1 is None:
        raise ValueError("pencil eigenvalues expect contravariant metrics")
    aff = affinor_at(g1, g2, pt, degeneracy_tol)
    coeffs = _faddeev_leverrier(aff.v)
    roots = durand_kerner(coeffs, max_iters=max_iters)
    order = np.lexsort((roots.imag, roots.real))
    roots = roots[order]
    n = len(roots)
    if n < 2:
        gap = np.inf
    else:
        diffs = [
            abs(roots[i] - roots[j]) for i in range(n) for j in range(i + 1, n)
        ]
        gap = min(diffs)
    return roots, gap
