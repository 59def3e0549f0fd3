"""Dressing construction of rotation coefficients.

A kernel F_ij(s, s') is built from potentials Phi_ij via a parameterization
that resolves the differential relation

    dF_ij(s, s')/ds' + dF_ji(s', s)/ds = 0

identically.  The linear integral equation

    K_ij(s, s') = F_ij(s, s') + int_s^{smax} sum_l K_il(s, q) F_lj(q, s') dq

is discretized by the composite trapezoid rule (Nystrom method, one dense
solve per row node) and rotation coefficients are read off the diagonal,
beta_ij(s) = K_ji(s, s).  The sqrt-ratio reduction of the kernel and the
second-order PDE residuals for the potentials are also implemented.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from .errors import DomainError, SingularOperator, TruncationWarning
from .expr import ScalarField
from .lame import RotationCoeffs

DECAY_TOL = 1e-8


@dataclass
class DressingProblem:
    """Potentials, eigenvalue functions, quadrature grid and base point.

    Phi maps (i, j) with i <= j to a two-variable field; diagonal entries
    must be skew-symmetric (Phi(x, y) = -Phi(y, x)).  Entries may be absent
    (treated as zero).  f is optional; it only enters the reduction.
    """

    dim: int
    Phi: Dict[tuple, ScalarField]
    u: np.ndarray
    s_min: float
    s_max: float
    m: int
    f: Optional[List[ScalarField]] = None

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        if self.u.shape != (self.dim,):
            raise ValueError("base point must have length dim")
        if not (self.s_max > self.s_min and self.m >= 2):
            raise ValueError("need s_max > s_min and at least two nodes")
        for (i, j), phi in self.Phi.items():
            if not (0 <= i <= j < self.dim):
                raise ValueError(f"bad potential index {(i, j)}")
            if phi.dim != 2:
                raise ValueError("potentials are two-variable fields")
        for i in range(self.dim):
            phi = self.Phi.get((i, i))
            if phi is not None:
                _check_skew(phi)
        if self.f is not None and any(g.dim != 1 for g in self.f):
            raise ValueError("eigenvalue functions are single-variable")

    @property
    def nodes(self):
        return np.linspace(self.s_min, self.s_max, self.m)

    @property
    def spacing(self):
        return (self.s_max - self.s_min) / (self.m - 1)


def _check_skew(phi, tol=1e-12):
    rng = np.random.default_rng(12345)
    xy = rng.uniform(-1.0, 1.0, size=(16, 2))
    fwd = phi.eval_jet(xy, 0).value
    bwd = phi.eval_jet(xy[:, ::-1], 0).value
    if np.max(np.abs(fwd + bwd)) > tol:
        raise ValueError("diagonal potential is not skew-symmetric")


@dataclass
class KernelGrid:
    """F_ij(s_a, s_b) tabulated on the quadrature nodes; flag raw | reduced."""

    values: np.ndarray  # (N, N, m, m)
    nodes: np.ndarray
    flag: str = "raw"


def _phi_grad(phi, x, y):
    """Gradient of a two-variable field on a broadcast (x, y) grid."""
    pts = np.stack(np.broadcast_arrays(x, y), axis=-1)
    return phi.eval_jet(pts, 1).grad


def build_kernel(p):
    """Tabulate the raw kernel on the grid.

    For i < j:  F_ij(s, s') = Phi_x(s - u^i, s' - u^j),
                F_ji(s, s') = -Phi_y(s' - u^i, s - u^j),
    and F_ii(s, s') = Phi_x(s - u^i, s' - u^i) with skew Phi_ii.
    """
    n, m = p.dim, p.m
    s = p.nodes
    sa = s[:, None]  # row argument
    sb = s[None, :]  # column argument
    values = np.zeros((n, n, m, m), dtype=complex)
    for (i, j), phi in p.Phi.items():
        if i == j:
            g = _phi_grad(phi, sa - p.u[i], sb - p.u[i])
            values[i, i] = g[..., 0]
        else:
            g = _phi_grad(phi, sa - p.u[i], sb - p.u[j])
            values[i, j] = g[..., 0]
            g = _phi_grad(phi, sb - p.u[i], sa - p.u[j])
            values[j, i] = -g[..., 1]
    return KernelGrid(values, s, "raw")


def _sqrt_f_at(p, i, shift):
    """Principal sqrt of f^i(u^i - s_a) over the nodes (shape (m,))."""
    args = (p.u[i] - p.nodes - shift)[:, None]
    vals = p.f[i].eval_jet(args, 0).value
    if np.any(np.abs(vals) < 1e-14):
        raise DomainError(f"eigenvalue function {i} vanishes on the grid")
    return np.sqrt(vals.astype(complex))


def reduction_ratio(p):
    """ratio[i, j, a, b] = sqrt(f^j(u^j - s_b)) / sqrt(f^i(u^i - s_a))."""
    if p.f is None:
        raise ValueError("problem carries no eigenvalue functions")
    roots = np.array([_sqrt_f_at(p, i, 0.0) for i in range(p.dim)])  # (N, m)
    return roots[None, :, None, :] / roots[:, None, :, None]


def reduce_kernel(k, p):
    """Entrywise sqrt-ratio scaling of a raw kernel."""
    if k.flag != "raw":
        raise ValueError("kernel already reduced")
    return KernelGrid(k.values * reduction_ratio(p), k.nodes, "reduced")


def check_reduction_relation(k, samples=None, step=1e-4):
    """Max residual of dF_ij(s, s')/ds' + dF_ji(s', s)/ds.

    k is either a KernelGrid (second-order differences on the grid interior)
    or a callable F(s, s') -> (N, N) matrix, checked at the given (s, s')
    sample pairs with fourth-order differences of the given step.
    """
    if isinstance(k, KernelGrid):
        h = k.nodes[1] - k.nodes[0]
        d_sp = np.gradient(k.values, h, axis=3)  # dF_ij(s,s')/ds'
        # dF_ji(s', s)/ds differentiates the second slot of F_ji at (s_b, s_a)
        res = d_sp + np.einsum("ijab->jiba", d_sp)
        interior = res[:, :, 1:-1, 1:-1]
        return float(np.max(np.abs(interior))) if interior.size else 0.0

    if samples is None:
        rng = np.random.default_rng(0)
        samples = rng.uniform(-1.0, 1.0, size=(16, 2))

    def d4(fn, x):
        return (-fn(x + 2 * step) + 8 * fn(x + step)
                - 8 * fn(x - step) + fn(x - 2 * step)) / (12 * step)

    worst = 0.0
    for s, sp in np.atleast_2d(np.asarray(samples)):
        dsp = d4(lambda y: np.asarray(k(s, y)), sp)
        ds = d4(lambda x: np.asarray(k(sp, x)).T, s)
        worst = max(worst, float(np.max(np.abs(dsp + ds))))
    return worst


def check_phi_pdes(p, samples):
    """(res_offdiag, res_diag): residuals of the linearizing PDEs.

    Off-diagonal (i < j), at (x, y) = (s - u^i, s' - u^j):
      2 Phi_xy (f^i(u^i - s) - f^j(u^j - s')) - Phi_y f^i'(u^i - s)
      + Phi_x f^j'(u^j - s')
    Diagonal, at (x, y) = (s - u^i, s' - u^i):
      2 Phi_xy (f^i(u^i - s) - f^i(u^i - s')) + Phi_x f^i'(u^i - s')
      - Phi_y f^i'(u^i - s)
    """
    if p.f is None:
        raise ValueError("problem carries no eigenvalue functions")
    res_off = 0.0
    res_diag = 0.0
    for s, sp in np.atleast_2d(np.asarray(samples)):
        fv = []
        fd = []
        for i in range(p.dim):
            a = p.f[i].eval_jet(np.array([p.u[i] - s]), 1)
            b = p.f[i].eval_jet(np.array([p.u[i] - sp]), 1)
            fv.append((a.value, b.value))
            fd.append((a.grad[0], b.grad[0]))
        for (i, j), phi in p.Phi.items():
            if i == j:
                jet = phi.eval_jet(np.array([s - p.u[i], sp - p.u[i]]), 2)
                r = (2 * jet.hess[0, 1] * (fv[i][0] - fv[i][1])
                     + jet.grad[0] * fd[i][1] - jet.grad[1] * fd[i][0])
                res_diag = max(res_diag, abs(r))
            else:
                jet = phi.eval_jet(np.array([s - p.u[i], sp - p.u[j]]), 2)
                r = (2 * jet.hess[0, 1] * (fv[i][0] - fv[j][1])
                     - jet.grad[1] * fd[i][0] + jet.grad[0] * fd[j][1])
                res_off = max(res_off, abs(r))
    return res_off, res_diag


@dataclass
class SolutionGrid:
    """K_ij(s_a, s_b) for the solved row nodes; unsolved rows hold NaN."""

    values: np.ndarray  # (N, N, m, m)
    nodes: np.ndarray
    rows: List[int]
    cond: Dict[int, float]


def _row_weights(nodes, a):
    """Trapezoid weights for the truncated integral over [s_a, s_max]."""
    k = len(nodes) - a
    if k == 1:
        return np.zeros(1)
    h = nodes[1] - nodes[0]
    w = np.full(k, h)
    w[0] = w[-1] = h / 2
    return w


def solve_integral_equation(k, decay_tol=DECAY_TOL, rows=None,
                            cond_limit=1e12):
    """Nystrom solve of the truncated integral equation for each row node.

    For row node s_a the unknowns are K_il(s_a, s_q) with q >= a; the dense
    system (same matrix for every i) is solved by LU, then the columns with
    b < a follow by direct evaluation of the right-hand side.
    """
    F = k.values
    n, _, m, _ = F.shape
    nodes = k.nodes
    tail = max(np.max(np.abs(F[:, :, -1, :])), np.max(np.abs(F[:, :, :, -1])))
    if tail > decay_tol:
        warnings.warn(
            f"kernel magnitude {tail:.2e} at the truncation endpoint "
            f"exceeds {decay_tol:.0e}",
            TruncationWarning,
        )
    if rows is None:
        rows = list(range(m))
    K = np.full((n, n, m, m), np.nan, dtype=complex)
    conds = {}
    for a in rows:
        q = m - a  # nodes in [s_a, s_max]
        w = _row_weights(nodes, a)
        # A[(j,b),(l,qq)] = delta_jl delta_bqq - w_qq F_lj(s_qq, s_b)
        Fblk = F[:, :, a:, a:]  # (l, j, qq, b)
        A = np.eye(n * q, dtype=complex)
        A -= np.transpose(w[None, None, :, None] * Fblk,
                          (1, 3, 0, 2)).reshape(n * q, n * q)
        cond = float(abs(np.linalg.cond(A, 1)))
        conds[a] = cond
        if not np.isfinite(cond) or cond > cond_limit:
            raise SingularOperator(a, cond)
        rhs = F[:, :, a, a:].reshape(n, n * q).T  # columns: one per i
        sol = np.linalg.solve(A, rhs)  # (n*q, n)
        Krow = sol.T.reshape(n, n, q)  # K[i, l, qq]
        K[:, :, a, a:] = Krow
        if a > 0:
            # K_ij(s_a, s_b) for b < a: direct evaluation
            K[:, :, a, :a] = F[:, :, a, :a] + np.einsum(
                "ilq,q,ljqb->ijb", Krow, w, F[:, :, a:, :a][:, :, :, :]
            )
    return SolutionGrid(K, nodes, list(rows), conds)


def neumann_solution(k, a, terms=200, tol=1e-15):
    """Independent check value for row a: iterate K <- F + K*F to a fixpoint."""
    F = k.values
    n, _, m, _ = F.shape
    w = _row_weights(k.nodes, a)
    rhs = F[:, :, a, a:]  # (i, j, b)
    Fblk = F[:, :, a:, a:]  # (l, j, q, b)
    K = rhs.copy()
    for _ in range(terms):
        nxt = rhs + np.einsum("ilq,q,ljqb->ijb", K, w, Fblk)
        if np.max(np.abs(nxt - K)) < tol:
            return nxt
        K = nxt
    raise RuntimeError("fixpoint iteration did not converge")


def extract_beta(sol):
    """beta_ij(s_a) = K_ji(s_a, s_a) for the solved rows; shape (N, N, m)."""
    n, _, m, _ = sol.values.shape
    beta = np.full((n, n, m), np.nan, dtype=complex)
    for a in sol.rows:
        beta[:, :, a] = sol.values[:, :, a, a].T
    return beta


def dressing_rotation(p, s_index=0, decay_tol=DECAY_TOL, step=1e-3):
    """Rotation coefficients beta_ij(u) at the grid node s_{s_index}.

    Each evaluation rebuilds the kernel at the shifted base point and
    re-solves the single row; partial derivatives in u use fourth-order
    central differences (handled by RotationCoeffs.from_callable).
    """

    def beta_at(u_point):
        shifted = DressingProblem(
            p.dim, p.Phi, u_point, p.s_min, p.s_max, p.m, p.f
        )
        k = build_kernel(shifted)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            sol = solve_integral_equation(
                k, decay_tol=decay_tol, rows=[s_index]
            )
        return sol.values[:, :, s_index, s_index].T.copy()

    return RotationCoeffs.from_callable(
        p.dim, beta_at, step=step, provenance="from-dressing"
    )
