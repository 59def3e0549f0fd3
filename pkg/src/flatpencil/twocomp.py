"""Complete two-component (N=2) theory of diagonal metric pairs.

A pair in canonical diagonal form is parameterized by nonzero functions
b^1(u), b^2(u), signs eps^i, and eigenvalue functions f^i(u^i).  Flatness of
g2 reduces to a linear first-order system for the b^i driven by a potential
F(u); the flat-pencil property adds one linear second-order equation on F.
Also here: the constant-curvature pencil construction and the conformally
Euclidean checkers (harmonicity / Liouville equation).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .compat import CheckResult, _Worst, check_constant_curvature
from .errors import DomainError
from .expr import ScalarField, constant, embed, exp, parse
from .geometry import CONTRAVARIANT, MetricField, geometry_jet


@dataclass
class TwoCompModel:
    """Diagonal two-component model (b^1, b^2, F, eps^i, f^i)."""

    b1: ScalarField
    b2: ScalarField
    F: ScalarField
    eps1: int
    eps2: int
    f1: ScalarField  # dim 1, argument u^1
    f2: ScalarField  # dim 1, argument u^2

    def __post_init__(self):
        if self.eps1 not in (1, -1) or self.eps2 not in (1, -1):
            raise ValueError("eps must be +1 or -1")
        if self.b1.dim != 2 or self.b2.dim != 2 or self.F.dim != 2:
            raise ValueError("b and F must be two-variable fields")
        if self.f1.dim != 1 or self.f2.dim != 1:
            raise ValueError("f must be single-variable fields")


def check_sys(m, points):
    """Max residual of the linear system tying b^1, b^2 to the potential F:

    db^2/du^1 = eps^1 (dF/du^2) b^1,   db^1/du^2 = -eps^2 (dF/du^1) b^2.
    """
    w = _Worst()
    for p in np.atleast_2d(np.asarray(points)):
        db1 = m.b1.eval_jet(p, 1)
        db2 = m.b2.eval_jet(p, 1)
        dF = m.F.eval_jet(p, 1)
        r1 = abs(db2.grad[0] - m.eps1 * dF.grad[1] * db1.value)
        r2 = abs(db1.grad[1] + m.eps2 * dF.grad[0] * db2.value)
        w.update("sys", max(r1, r2), p)
    return CheckResult(True, w.res, w.wit)


def check_lequa(m, points):
    """Max residual of the flat-pencil condition on F:

    2 F_{12} (f^1 - f^2) + F_2 (f^1)' - F_1 (f^2)' = 0.
    """
    w = _Worst()
    for p in np.atleast_2d(np.asarray(points)):
        jF = m.F.eval_jet(p, 2)
        f1 = m.f1.eval_jet(np.array([p[0]]), 1)
        f2 = m.f2.eval_jet(np.array([p[1]]), 1)
        r = abs(
            2 * jF.hess[0, 1] * (f1.value - f2.value)
            + jF.grad[1] * f1.grad[0]
            - jF.grad[0] * f2.grad[0]
        )
        w.update("lequa", r, p)
    return CheckResult(True, w.res, w.wit)


def assemble_two_metrics(m):
    """(g1, g2) with g2 = diag(eps^i/(b^i)^2) and g1 carrying the f^i factors."""
    inv1 = constant(float(m.eps1), 2) / (m.b1 * m.b1)
    inv2 = constant(float(m.eps2), 2) / (m.b2 * m.b2)
    g2 = MetricField.diagonal([inv1, inv2], CONTRAVARIANT)
    g1 = MetricField.diagonal(
        [embed(m.f1, 0, 2) * inv1, embed(m.f2, 1, 2) * inv2], CONTRAVARIANT
    )
    return g1, g2


def constant_curvature_pencil(K, points, tol=1e-8):
    """Four metrics G_0..G_3 with G_n = diag(eps^i (u^i)^n / (b^i)^2).

    Sign convention eps^2 = +1, eps^1 = -1, (b^i)^2 = (u^1 - u^2) / (4K).
    Returns (metrics, result): G_0..G_2 flat, G_3 of constant curvature K.
    """
    if K == 0:
        raise ValueError("K must be nonzero")
    pts = np.atleast_2d(np.asarray(points))
    if np.any(np.abs(pts[:, 0] - pts[:, 1]) < 1e-12):
        raise DomainError("sample point on the singular line u1 = u2")
    b_sq_inv = parse(f"4*({K}) / (u1 - u2)", 2)
    metrics = []
    for n in range(4):
        power = constant(1.0, 2) if n == 0 else parse(f"u1^{n}", 2)
        power2 = constant(1.0, 2) if n == 0 else parse(f"u2^{n}", 2)
        g11 = -1.0 * power * b_sq_inv
        g22 = power2 * b_sq_inv
        metrics.append(MetricField.diagonal([g11, g22], CONTRAVARIANT))
    w = _Worst()
    for n in range(3):
        for p in pts:
            j = geometry_jet(metrics[n], p)
            scale = 1.0 + max(np.max(np.abs(j.g_up)),
                              np.max(np.abs(j.gamma_contra)))
            w.update(f"flatness_G{n}",
                     np.max(np.abs(j.riemann_upup)) / scale, p)
    cc = check_constant_curvature(metrics[3], K, pts, tol)
    w.update("curvature_G3", cc.max_residuals["constant_curvature"],
             cc.witnesses["constant_curvature"])
    passed = all(v < tol for v in w.res.values())
    return metrics, CheckResult(passed, w.res, w.wit)


def harmonic_flatness(a, points):
    """(max |laplacian a|, max curvature residual) for g^{ij} = exp(a) d^{ij}.

    The two vanish together: the conformal metric is flat iff a is harmonic.
    """
    if a.dim != 2:
        raise ValueError("conformal checkers are two-dimensional")
    g = MetricField.diagonal([exp(a), exp(a)], CONTRAVARIANT)
    lap = 0.0
    curv = 0.0
    for p in np.atleast_2d(np.asarray(points)):
        jet = a.eval_jet(p, 2)
        lap = max(lap, abs(jet.hess[0, 0] + jet.hess[1, 1]))
        j = geometry_jet(g, p)
        curv = max(curv, float(np.max(np.abs(j.riemann_upup))))
    return lap, curv


def liouville_check(a, K, points):
    """Max residual of laplacian a = 2 K exp(-a) over the points."""
    if a.dim != 2:
        raise ValueError("conformal checkers are two-dimensional")
    worst = 0.0
    for p in np.atleast_2d(np.asarray(points)):
        jet = a.eval_jet(p, 2)
        lap = jet.hess[0, 0] + jet.hess[1, 1]
        worst = max(worst, abs(lap - 2 * K * np.exp(-jet.value)))
    return worst
