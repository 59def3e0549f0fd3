"""Rotation coefficients of orthogonal coordinate systems.

beta_ik = (1/H_i) dH_k/du^i from Lame coefficients H_i, residuals of the
orthogonal-system equations, and the extra linear-in-f reduction that singles
out compatible flat diagonal pairs.  Rotation coefficients may come from
symbolic fields or from a numeric solver (grid route); both expose the same
value/derivative interface.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .expr import ScalarField, constant, embed, sqrt
from .geometry import CONTRAVARIANT, MetricField

FD_STEP = 1e-3


@dataclass
class LameData:
    """Lame coefficients H_i(u) plus per-axis eigenvalue functions f^i(u^i)."""

    H: List[ScalarField]
    f: List[ScalarField]  # each of dim 1, evaluated at u^i

    def __post_init__(self):
        self.dim = len(self.H)
        if len(self.f) != self.dim:
            raise ValueError("need one eigenvalue function per axis")
        if any(g.dim != self.dim for g in self.H):
            raise ValueError("H entries must have dim N")
        if any(g.dim != 1 for g in self.f):
            raise ValueError("f entries must be single-variable fields")


@dataclass
class RotationCoeffs:
    """beta_ij samples: value(u) -> (N, N), deriv(u) -> (k, i, j) partials."""

    dim: int
    provenance: str
    _value: Callable[[np.ndarray], np.ndarray]
    _deriv: Callable[[np.ndarray], np.ndarray]
    beta_fields: Optional[List[List[ScalarField]]] = None

    def value(self, point):
        return self._value(np.asarray(point, dtype=float))

    def deriv(self, point):
        return self._deriv(np.asarray(point, dtype=float))

    @staticmethod
    def from_fields(beta_fields, provenance="fields"):
        n = len(beta_fields)

        def value(point):
            out = np.zeros((n, n), dtype=complex)
            for i in range(n):
                for j in range(n):
                    if i != j:
                        out[i, j] = beta_fields[i][j](point)
            return out

        def deriv(point):
            out = np.zeros((n, n, n), dtype=complex)
            for i in range(n):
                for j in range(n):
                    if i != j:
                        jet = beta_fields[i][j].eval_jet(point, 1)
                        out[:, i, j] = jet.grad
            return out

        return RotationCoeffs(n, provenance, value, deriv, beta_fields)

    @staticmethod
    def from_callable(dim, fn, step=FD_STEP, provenance="from-dressing"):
        """fn(u) -> (N, N) beta matrix; partials by 4th-order differences."""

        def deriv(point):
            out = np.zeros((dim, dim, dim), dtype=complex)
            for k in range(dim):
                e = np.zeros(dim)
                e[k] = step
                out[k] = (
                    -fn(point + 2 * e) + 8 * fn(point + e)
                    - 8 * fn(point - e) + fn(point - 2 * e)
                ) / (12 * step)
            return out

        return RotationCoeffs(dim, provenance, fn, deriv, None)


def rotation_from_H(d):
    """beta_ik = (1/H_i) dH_k/du^i for i != k; diagonal entries unused."""
    n = d.dim
    zero = constant(0.0, n)
    beta = [[zero] * n for _ in range(n)]
    for i in range(n):
        for k in range(n):
            if i != k:
                beta[i][k] = d.H[k].partial(i) / d.H[i]
    return RotationCoeffs.from_fields(beta, provenance="from-H")


def lame_residuals(b, points):
    """(res_system, res_divergence): the two orthogonal-system equation sets.

    System equations: d beta_ij / du^k = beta_ik beta_kj for distinct i,j,k
    (vacuous at N=2).  Divergence equations: d beta_ij / du^i
    + d beta_ji / du^j + sum_{s != i,j} beta_si beta_sj = 0 for i != j.
    """
    n = b.dim
    res1 = 0.0
    res2 = 0.0
    for p in np.atleast_2d(np.asarray(points)):
        B = b.value(p)
        D = b.deriv(p)
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                for k in range(n):
                    if k != i and k != j:
                        res1 = max(res1, abs(D[k, i, j] - B[i, k] * B[k, j]))
                acc = D[i, i, j] + D[j, j, i]
                for s in range(n):
                    if s != i and s != j:
                        acc += B[s, i] * B[s, j]
                res2 = max(res2, abs(acc))
    return res1, res2


def _f_values(f, point):
    vals = np.array([fi(np.array([x])) for fi, x in zip(f, point)])
    ders = np.array(
        [fi.partial(0)(np.array([x])) for fi, x in zip(f, point)]
    )
    return vals, ders


def reduction_residual(b, f, points):
    """Residual of the linear-in-f reduction, for i != j:

    f^i b_ij,i + (f^i)'/2 b_ij + f^j b_ji,j + (f^j)'/2 b_ji
    + sum_{s != i,j} f^s b_si b_sj = 0.
    """
    n = b.dim
    worst = 0.0
    for p in np.atleast_2d(np.asarray(points)):
        B = b.value(p)
        D = b.deriv(p)
        fv, fd = _f_values(f, p)
        for i in range(n):
            for j in range(i + 1, n):
                acc = (
                    fv[i] * D[i, i, j] + 0.5 * fd[i] * B[i, j]
                    + fv[j] * D[j, j, i] + 0.5 * fd[j] * B[j, i]
                )
                for s in range(n):
                    if s != i and s != j:
                        acc += fv[s] * B[s, i] * B[s, j]
                worst = max(worst, abs(acc))
    return worst


def scaled_rotation(b, f):
    """beta~_ik = sqrt(f^i(u^i)) / sqrt(f^k(u^k)) * beta_ik (field route only).

    Satisfies the system equations whenever beta does; its divergence
    equations are exactly the reduction.
    """
    if b.beta_fields is None:
        raise ValueError("scaling requires a field-backed rotation")
    n = b.dim
    roots = [sqrt(embed(fi, i, n)) for i, fi in enumerate(f)]
    zero = constant(0.0, n)
    scaled = [[zero] * n for _ in range(n)]
    for i in range(n):
        for k in range(n):
            if i != k:
                scaled[i][k] = roots[i] * b.beta_fields[i][k] / roots[k]
    return RotationCoeffs.from_fields(scaled, provenance=b.provenance)


def assemble_pair(d):
    """Diagonal pair (g1, g2) with g2^i = 1/H_i^2, g1^i = f^i(u^i)/H_i^2."""
    n = d.dim
    g2_diag = []
    g1_diag = []
    for i in range(n):
        gi = constant(1.0, n) / (d.H[i] * d.H[i])
        g2_diag.append(gi)
        g1_diag.append(embed(d.f[i], i, n) * gi)
    g2 = MetricField.diagonal(g2_diag, CONTRAVARIANT)
    g1 = MetricField.diagonal(g1_diag, CONTRAVARIANT)
    return g1, g2


_HEADER = struct.Struct("<qqdd")


def write_beta_grid(path, beta, s_min, s_max):
    """Serialize beta_ij(s_a) samples of shape (N, N, m).

    Layout: little-endian int64 N, int64 m, float64 s_min, float64 s_max,
    then the (N, N, m) array in row-major order as interleaved
    (re, im) float64 pairs.
    """
    arr = np.ascontiguousarray(beta, dtype=complex)
    if arr.ndim != 3 or arr.shape[0] != arr.shape[1]:
        raise ValueError("beta grid must have shape (N, N, m)")
    n, _, m = arr.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(n, m, float(s_min), float(s_max)))
        flat = np.empty(arr.size * 2, dtype="<f8")
        flat[0::2] = arr.real.ravel()
        flat[1::2] = arr.imag.ravel()
        fh.write(flat.tobytes())


def read_beta_grid(path):
    """Inverse of write_beta_grid; returns (beta, s_min, s_max)."""
    with open(path, "rb") as fh:
        n, m, s_min, s_max = _HEADER.unpack(fh.read(_HEADER.size))
        flat = np.frombuffer(fh.read(), dtype="<f8")
    if flat.size != 2 * n * n * m:
        raise ValueError("beta grid payload size mismatch")
    beta = (flat[0::2] + 1j * flat[1::2]).reshape(n, n, m)
    return beta, s_min, s_max
