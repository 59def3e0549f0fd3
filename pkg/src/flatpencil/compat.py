"""Compatibility verdicts for pairs of contravariant metrics.

Three nested notions are decided by pointwise sampling:

* almost compatible — the Nijenhuis tensor of the affinor g1·g2^{-1} and the
  obstruction tensor M both vanish;
* compatible — Christoffel symbols and curvature of every pencil member
  lambda1*g1 + lambda2*g2 combine linearly;
* flat pencil — compatible and every pencil member (endpoints included) is
  flat.

Also here: the constant-curvature test, the flat-coordinate vector-field
construction of g1 from g2 = eta, the bracket-ansatz metric built from a
vector of potentials h^i, and the associativity residual for a single
potential Phi.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from .errors import DegenerateMetric
from .expr import constant
from .geometry import (
    CONTRAVARIANT,
    DEGENERACY_TOL,
    MetricField,
    affinor_at,
    geometry_jet,
    linear_combination,
    nijenhuis,
    tensor_M,
)

DEFAULT_TOL = 1e-8


def sample_points(dim, count, seed=0, lo=0.2, hi=2.0, min_sep=0.0,
                  max_tries=1000):
    """Seeded random real sample points in [lo, hi]^dim.

    min_sep > 0 rejects points with any |u^i - u^j| below it (used to stay
    off singular diagonals).
    """
    rng = np.random.default_rng(seed)
    pts = []
    for _ in range(max_tries):
        if len(pts) == count:
            break
        p = rng.uniform(lo, hi, size=dim)
        if min_sep > 0 and dim > 1:
            d = np.abs(p[:, None] - p[None, :])
            if np.min(d[~np.eye(dim, dtype=bool)]) < min_sep:
                continue
        pts.append(p)
    if len(pts) < count:
        raise ValueError("could not draw enough separated sample points")
    return np.array(pts)


def grid_points(dim, per_axis, lo=0.2, hi=2.0):
    """Regular grid in [lo, hi]^dim, flattened to a point list."""
    axes = [np.linspace(lo, hi, per_axis)] * dim
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def default_lambda_samples(seed=0):
    """Two real pairs, one sign-flipped pair and one random complex pair."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(4)
    return [
        (1.0, 1.0),
        (1.0, -1.0),
        (2.0, 3.0),
        (complex(z[0], z[1]), complex(z[2], z[3])),
    ]


@dataclass
class MetricPair:
    """A pair of contravariant metrics plus the sampling configuration."""

    g1: MetricField
    g2: MetricField
    sample_points: np.ndarray
    lambda_samples: List[Tuple[complex, complex]] = field(
        default_factory=default_lambda_samples
    )
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.g1.dim != self.g2.dim:
            raise ValueError("metrics must share a dimension")
        if (self.g1.variance != CONTRAVARIANT
                or self.g2.variance != CONTRAVARIANT):
            raise ValueError("pair checks expect contravariant metrics")
        self.sample_points = np.atleast_2d(
            np.asarray(self.sample_points)
        )


@dataclass
class CheckResult:
    """Verdict plus named max residuals and their worst witness points."""

    passed: bool
    max_residuals: Dict[str, float]
    witnesses: Dict[str, np.ndarray]

    def residual(self, name):
        return self.max_residuals[name]


@dataclass
class CompatReport:
    almost_compatible: bool
    compatible: bool
    flat_pencil: bool
    nonsingular: bool
    max_residuals: Dict[str, float]
    witnesses: Dict[str, np.ndarray]


class _Worst:
    """Accumulate per-name max residuals with witness points."""

    def __init__(self):
        self.res = {}
        self.wit = {}

    def update(self, name, value, point):
        v = float(value)
        if name not in self.res or v > self.res[name]:
            self.res[name] = v
            self.wit[name] = np.asarray(point)

    def merge(self, other):
        for name, v in other.res.items():
            self.update(name, v, other.wit[name])


def _almost_at(pair, point):
    w = _Worst()
    j1 = geometry_jet(pair.g1, point)
    j2 = geometry_jet(pair.g2, point)
    scale = 1.0 + max(
        np.max(np.abs(j1.g_up)), np.max(np.abs(j2.g_up)),
        np.max(np.abs(j1.gamma_contra)), np.max(np.abs(j2.gamma_contra)),
    )
    aff = affinor_at(pair.g1, pair.g2, point)
    N = nijenhuis(aff)
    M = (
        np.einsum("is,jks->ijk", j1.g_up, j2.gamma_contra)
        - np.einsum("js,iks->ijk", j2.g_up, j1.gamma_contra)
        - np.einsum("js,iks->ijk", j1.g_up, j2.gamma_contra)
        + np.einsum("is,jks->ijk", j2.g_up, j1.gamma_contra)
    )
    w.update("nijenhuis", np.max(np.abs(N)) / scale, point)
    w.update("M", np.max(np.abs(M)) / scale, point)
    return w


def check_almost_compatible(pair, map_fn=map):
    """Vanishing of Nijenhuis and M tensors at every sample point."""
    w = _Worst()
    for part in map_fn(lambda p: _almost_at(pair, p), pair.sample_points):
        w.merge(part)
    passed = all(v < pair.tol for v in w.res.values())
    return CheckResult(passed, w.res, w.wit)


def _linearity_at(pair, point):
    w = _Worst()
    j1 = geometry_jet(pair.g1, point)
    j2 = geometry_jet(pair.g2, point)
    for l1, l2 in pair.lambda_samples:
        comb = linear_combination(l1, pair.g1, l2, pair.g2)
        try:
            jc = geometry_jet(comb, point)
        except DegenerateMetric as exc:
            raise DegenerateMetric(
                np.asarray(point), exc.absdet,
                context=f"pencil member lambda=({l1}, {l2})",
            ) from exc
        target_g = l1 * j1.gamma_contra + l2 * j2.gamma_contra
        target_r = l1 * j1.riemann_upup + l2 * j2.riemann_upup
        sg = 1.0 + max(np.max(np.abs(jc.gamma_contra)),
                       np.max(np.abs(target_g)))
        sr = 1.0 + max(np.max(np.abs(jc.riemann_upup)),
                       np.max(np.abs(target_r)))
        w.update("gamma_linearity",
                 np.max(np.abs(jc.gamma_contra - target_g)) / sg, point)
        w.update("curvature_linearity",
                 np.max(np.abs(jc.riemann_upup - target_r)) / sr, point)
    return w


def check_compatible(pair, map_fn=map):
    """Linearity of Christoffel symbols and curvature across the pencil."""
    almost = check_almost_compatible(pair, map_fn)
    w = _Worst()
    w.res.update(almost.max_residuals)
    w.wit.update(almost.witnesses)
    for part in map_fn(lambda p: _linearity_at(pair, p), pair.sample_points):
        w.merge(part)
    passed = (
        almost.passed
        and w.res["gamma_linearity"] < pair.tol
        and w.res["curvature_linearity"] < pair.tol
    )
    return CheckResult(passed, w.res, w.wit)


def _flatness_at(pair, point):
    w = _Worst()
    combos = [(1.0, 0.0), (0.0, 1.0)] + list(pair.lambda_samples)
    for l1, l2 in combos:
        comb = linear_combination(l1, pair.g1, l2, pair.g2)
        jc = geometry_jet(comb, point)
        scale = 1.0 + max(np.max(np.abs(jc.g_up)),
                          np.max(np.abs(jc.gamma_contra)))
        w.update(f"flatness({l1},{l2})",
                 np.max(np.abs(jc.riemann_upup)) / scale, point)
    return w


def check_flat_pencil(pair, map_fn=map):
    """Compatibility plus flatness of every sampled pencil member."""
    comp = check_compatible(pair, map_fn)
    w = _Worst()
    w.res.update(comp.max_residuals)
    w.wit.update(comp.witnesses)
    for part in map_fn(lambda p: _flatness_at(pair, p), pair.sample_points):
        w.merge(part)
    flat = all(
        v < pair.tol for k, v in w.res.items() if k.startswith("flatness")
    )
    return CheckResult(comp.passed and flat, w.res, w.wit)


def full_report(pair, map_fn=map):
    """Complete nested verdict (almost / compatible / flat pencil)."""
    flat = check_flat_pencil(pair, map_fn)
    res, wit = flat.max_residuals, flat.witnesses
    almost = res["nijenhuis"] < pair.tol and res["M"] < pair.tol
    compat = (almost and res["gamma_linearity"] < pair.tol
              and res["curvature_linearity"] < pair.tol)
    gaps = []
    for p in pair.sample_points:
        from .geometry import pencil_eigenvalues
        _, gap = pencil_eigenvalues(pair.g1, pair.g2, p)
        gaps.append(gap)
    nonsingular = bool(min(gaps) > 1e-6) if gaps else True
    return CompatReport(
        almost_compatible=almost,
        compatible=compat,
        flat_pencil=flat.passed,
        nonsingular=nonsingular,
        max_residuals=res,
        witnesses=wit,
    )


def check_constant_curvature(g, K, points, tol=DEFAULT_TOL):
    """Max deviation of R^{ij}_{kl} from the constant-curvature pattern."""
    n = g.dim
    eye = np.eye(n)
    pattern = K * (
        np.einsum("il,jk->ijkl", eye, eye) - np.einsum("ik,jl->ijkl", eye, eye)
    )
    w = _Worst()
    for p in np.atleast_2d(np.asarray(points)):
        j = geometry_jet(g, p)
        scale = 1.0 + abs(K)
        w.update("constant_curvature",
                 np.max(np.abs(j.riemann_upup - pattern)) / scale, p)
    return CheckResult(w.res["constant_curvature"] < tol, w.res, w.wit)


def _check_eta(eta):
    eta = np.asarray(eta, dtype=complex)
    if not np.array_equal(eta, eta.T):
        raise ValueError("eta must be symmetric")
    if abs(np.linalg.det(eta)) < DEGENERACY_TOL:
        raise ValueError("eta must be nondegenerate")
    return eta


def dubrovin_construct_and_check(eta, f, c, points, tol=DEFAULT_TOL,
                                 lambda_samples=None):
    """Build g1 from a vector field in flat coordinates of g2 = eta.

    g1^{ij} = eta^{is} d_s f^j + eta^{js} d_s f^i + c eta^{ij}.  Residuals of
    the quadratic compatibility condition on Delta^{ij}_k = eta^{is} d_k d_s
    f^j and of the mixed second-derivative condition are reported, together
    with the flat-pencil verdict of the constructed pair.
    """
    eta = _check_eta(eta)
    n = eta.shape[0]
    eta_up = np.linalg.inv(eta)
    pts = np.atleast_2d(np.asarray(points))

    upper = {}
    for i in range(n):
        for j in range(i, n):
            entry = constant(c * eta_up[i, j], n)
            for s in range(n):
                if eta_up[i, s] != 0:
                    entry = entry + eta_up[i, s] * f[j].partial(s)
                if eta_up[j, s] != 0:
                    entry = entry + eta_up[j, s] * f[i].partial(s)
            upper[(i, j)] = entry
    g1 = MetricField.from_upper(upper, CONTRAVARIANT)
    g2 = MetricField.from_constant(eta_up, CONTRAVARIANT)

    w = _Worst()
    for p in pts:
        H = np.array([f[k].eval_jet(p, 2).hess for k in range(n)])  # [k,s,p]
        D = np.einsum("is,jks->ijk", eta_up, H)  # Delta^{ij}_k
        quad = (np.einsum("ijs,skl->ijkl", D, D)
                - np.einsum("iks,sjl->ijkl", D, D))
        G1 = g1.values(p)
        mixed = (np.einsum("is,jp,ksp->ijk", G1, eta_up, H)
                 - np.einsum("is,jp,ksp->ijk", eta_up, G1, H))
        scale = 1.0 + max(np.max(np.abs(D)) ** 2, np.max(np.abs(G1)))
        w.update("quadratic", np.max(np.abs(quad)) / scale, p)
        w.update("mixed", np.max(np.abs(mixed)) / scale, p)

    pair = MetricPair(g1, g2, pts, tol=tol)
    if lambda_samples is not None:
        pair.lambda_samples = lambda_samples
    flat = check_flat_pencil(pair)
    w.res.update(flat.max_residuals)
    w.wit.update(flat.witnesses)
    passed = (w.res["quadratic"] < tol and w.res["mixed"] < tol
              and flat.passed)
    return g1, CheckResult(passed, w.res, w.wit)


def mokhov_bracket_metric(eta, h, points, tol=DEFAULT_TOL):
    """Metric of the bracket ansatz g2^{ij} = eta^{is} d_s h^j + eta^{js} d_s h^i.

    Returns (g2 field, connection coefficients b^{ij}_k as a callable of the
    point, CheckResult).  When g2 is nondegenerate at all points the verdict
    is full compatibility against eta; otherwise only the connection-level
    linearity against b is checked (the construction allows degenerate g2).
    """
    eta = _check_eta(eta)
    n = eta.shape[0]
    eta_up = np.linalg.inv(eta)
    pts = np.atleast_2d(np.asarray(points))

    upper = {}
    for i in range(n):
        for j in range(i, n):
            entry = constant(0.0, n)
            for s in range(n):
                if eta_up[i, s] != 0:
                    entry = entry + eta_up[i, s] * h[j].partial(s)
                if eta_up[j, s] != 0:
                    entry = entry + eta_up[j, s] * h[i].partial(s)
            upper[(i, j)] = entry
    g2 = MetricField.from_upper(upper, CONTRAVARIANT)
    g1 = MetricField.from_constant(eta_up, CONTRAVARIANT)

    def b_at(point):
        H = np.array([h[k].eval_jet(point, 2).hess for k in range(n)])
        return np.einsum("is,jks->ijk", eta_up, H)  # b^{ij}_k

    degenerate = False
    for p in pts:
        if abs(np.linalg.det(g2.values(p))) < DEGENERACY_TOL:
            degenerate = True
            break

    if not degenerate:
        pair = MetricPair(g1, g2, pts, tol=tol)
        return g2, b_at, check_compatible(pair)

    # Connection-level check only: the pencil member lambda1*eta + lambda2*g2
    # must have Christoffel symbols -lambda2 * b (eta contributes none).
    w = _Worst()
    for p in pts:
        b = b_at(p)
        used = 0
        for l1, l2 in [(1.0, 0.5), (1.0, -0.5), (2.0, 0.25)]:
            comb = linear_combination(l1, g1, l2, g2)
            try:
                jc = geometry_jet(comb, p)
            except DegenerateMetric:
                continue  # this lambda hits a pencil eigenvalue; skip it
            used += 1
            scale = 1.0 + max(np.max(np.abs(b)), np.max(np.abs(jc.gamma_contra)))
            w.update("gamma_linearity",
                     np.max(np.abs(jc.gamma_contra + l2 * b)) / scale, p)
        if used == 0:
            raise DegenerateMetric(p, 0.0, context="all pencil samples")
    return g2, b_at, CheckResult(w.res["gamma_linearity"] < tol, w.res, w.wit)


def associativity_residual(eta, Phi, points):
    """Residual of the third-order symmetry condition on a potential Phi.

    eta^{sp} Phi_{pi} Phi_{sjk} must be symmetric under i <-> k.
    """
    eta = _check_eta(eta)
    eta_up = np.linalg.inv(eta)
    worst = 0.0
    for p in np.atleast_2d(np.asarray(points)):
        jet = Phi.eval_jet(p, 3)
        lhs = np.einsum("sp,pi,sjk->ijk", eta_up, jet.hess, jet.third)
        res = lhs - np.einsum("ijk->kji", lhs)
        scale = 1.0 + np.max(np.abs(jet.hess)) * np.max(np.abs(jet.third))
        worst = max(worst, float(np.max(np.abs(res))) / scale)
    return worst
