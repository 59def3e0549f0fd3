"""Christoffel symbols, curvature, affinor, Nijenhuis/M tensors, eigenvalues."""

import numpy as np
import pytest

from flatpencil import expr
from flatpencil.errors import DegenerateMetric
from flatpencil.geometry import (
    CONTRAVARIANT,
    COVARIANT,
    MetricField,
    affinor_at,
    durand_kerner,
    geometry_jet,
    linear_combination,
    nijenhuis,
    pencil_eigenvalues,
    tensor_M,
)


def polar_covariant():
    return MetricField.diagonal(
        [expr.parse("1", 2), expr.parse("u1^2", 2)], COVARIANT
    )


class TestMetricField:
    def test_shared_symmetric_entries_required(self):
        f = expr.parse("u1", 2)
        g = expr.parse("u1", 2)
        rows = [[f, f], [g, f]]
        with pytest.raises(ValueError):
            MetricField(2, COVARIANT, rows)

    def test_values_symmetric(self):
        g = MetricField.from_upper(
            {(0, 0): expr.parse("u1", 2), (0, 1): expr.parse("u2", 2),
             (1, 1): expr.parse("3", 2)},
            CONTRAVARIANT,
        )
        v = g.values([2.0, 5.0])
        assert v[0, 1] == v[1, 0] == pytest.approx(5.0)

    def test_constant_metric_must_be_symmetric(self):
        with pytest.raises(ValueError):
            MetricField.from_constant([[1.0, 2.0], [3.0, 1.0]])

    def test_degenerate_raises(self):
        g = MetricField.diagonal([expr.parse("u1", 2), expr.parse("1", 2)])
        with pytest.raises(DegenerateMetric):
            geometry_jet(g, [0.0, 1.0])


class TestChristoffelAndCurvature:
    def test_polar_christoffels(self):
        j = geometry_jet(polar_covariant(), [2.0, 0.7])
        assert j.gamma_mixed[0, 1, 1] == pytest.approx(-2.0)
        assert j.gamma_mixed[1, 0, 1] == pytest.approx(0.5)
        assert j.gamma_mixed[1, 1, 0] == pytest.approx(0.5)

    def test_polar_flat(self):
        for pt in ([1.0, 0.3], [2.5, 1.2]):
            j = geometry_jet(polar_covariant(), pt)
            assert np.max(np.abs(j.riemann_mixed)) < 1e-13

    def test_sphere_unit_curvature_pattern(self):
        g = MetricField.diagonal(
            [expr.parse("1", 2), expr.parse("sin(u1)^2", 2)], COVARIANT
        )
        eye = np.eye(2)
        pattern = np.einsum("il,jk->ijkl", eye, eye) - np.einsum(
            "ik,jl->ijkl", eye, eye
        )
        for pt in ([np.pi / 4, 0.3], [1.1, 2.0]):
            j = geometry_jet(g, pt)
            assert np.max(np.abs(j.riemann_upup - pattern)) < 1e-12

    def test_curvature_against_finite_difference_christoffels(self):
        # independent oracle: differentiate Gamma^i_{jl} numerically
        g = MetricField.diagonal(
            [expr.parse("exp(u1*u2)", 2), expr.parse("1+u2^2", 2)], COVARIANT
        )
        p = np.array([0.6, 0.9])
        j = geometry_jet(g, p)
        h = 1e-5
        dgamma = np.zeros((2, 2, 2, 2), dtype=complex)
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            gp = geometry_jet(g, p + e).gamma_mixed
            gm = geometry_jet(g, p - e).gamma_mixed
            dgamma[k] = (gp - gm) / (2 * h)
        gm0 = j.gamma_mixed
        riem = (
            np.einsum("kijl->ijkl", dgamma)
            - np.einsum("lijk->ijkl", dgamma)
            + np.einsum("ipk,pjl->ijkl", gm0, gm0)
            - np.einsum("ipl,pjk->ijkl", gm0, gm0)
        )
        assert np.max(np.abs(riem - j.riemann_mixed)) < 1e-6

    def test_contravariant_input_round_trip(self):
        # contravariant polar metric gives the same geometry
        g_up = MetricField.diagonal(
            [expr.parse("1", 2), expr.parse("1/u1^2", 2)], CONTRAVARIANT
        )
        j_up = geometry_jet(g_up, [2.0, 0.7])
        j_down = geometry_jet(polar_covariant(), [2.0, 0.7])
        assert j_up.gamma_mixed == pytest.approx(j_down.gamma_mixed)
        assert j_up.g_down == pytest.approx(j_down.g_down)


class TestAffinorAndObstructions:
    def setup_method(self):
        e = expr.parse("exp(u1*u2)", 2)
        self.g1 = MetricField.diagonal([e, e])
        self.g2 = MetricField.from_constant(np.eye(2))
        self.p = np.array([0.4, -0.3])

    def test_affinor_value(self):
        a = affinor_at(self.g1, self.g2, self.p)
        assert a.v == pytest.approx(np.exp(-0.12) * np.eye(2))

    def test_affinor_derivative_against_fd(self):
        a = affinor_at(self.g1, self.g2, self.p)
        h = 1e-6
        for s in range(2):
            e = np.zeros(2)
            e[s] = h
            num = (
                affinor_at(self.g1, self.g2, self.p + e).v
                - affinor_at(self.g1, self.g2, self.p - e).v
            ) / (2 * h)
            assert np.max(np.abs(num - a.dv[s])) < 1e-8

    def test_nijenhuis_vanishes_for_conformal_pair(self):
        a = affinor_at(self.g1, self.g2, self.p)
        assert np.max(np.abs(nijenhuis(a))) == 0.0

    def test_nijenhuis_antisymmetry_exact(self):
        g1 = MetricField.from_upper(
            {(0, 0): expr.parse("2+u2", 2), (0, 1): expr.parse("u1*u2", 2),
             (1, 1): expr.parse("3+u1^2", 2)},
            CONTRAVARIANT,
        )
        a = affinor_at(g1, self.g2, self.p)
        N = nijenhuis(a)
        assert np.array_equal(N, -np.transpose(N, (0, 2, 1)))
        assert np.max(np.abs(N)) > 0

    def test_tensor_M_vanishes_for_conformal_pair(self):
        assert np.max(np.abs(tensor_M(self.g1, self.g2, self.p))) < 1e-15

    def test_tensor_M_nonzero_generic(self):
        g1 = MetricField.diagonal(
            [expr.parse("1+u1^2", 2), expr.parse("2+u2", 2)]
        )
        g2 = MetricField.from_upper(
            {(0, 0): expr.parse("2", 2), (0, 1): expr.parse("u1", 2),
             (1, 1): expr.parse("3+u2^2", 2)},
            CONTRAVARIANT,
        )
        assert np.max(np.abs(tensor_M(g1, g2, self.p))) > 1e-3


class TestPencilEigenvalues:
    def test_diagonal_pair_roots(self):
        g1 = MetricField.diagonal([expr.parse("u1", 2), expr.parse("u2", 2)])
        g2 = MetricField.from_constant(np.eye(2))
        roots, gap = pencil_eigenvalues(g1, g2, [0.7, 2.0])
        assert roots == pytest.approx(np.array([0.7, 2.0]))
        assert gap == pytest.approx(1.3)

    def test_roots_match_determinant_zero(self):
        # residual oracle: det(g1 - r g2) = 0 at every reported root
        g1 = MetricField.from_upper(
            {(0, 0): expr.parse("2+u1", 2), (0, 1): expr.parse("u2/2", 2),
             (1, 1): expr.parse("3", 2)},
            CONTRAVARIANT,
        )
        g2 = MetricField.from_constant([[1.0, 0.2], [0.2, 2.0]])
        p = [0.9, 1.4]
        roots, _ = pencil_eigenvalues(g1, g2, p)
        v1 = g1.values(p)
        v2 = g2.values(p)
        for r in roots:
            assert abs(np.linalg.det(v1 - r * v2)) < 1e-10

    def test_sorted_by_real_then_imag(self):
        coeffs = np.poly([1.0 + 1j, 1.0 - 1j, 0.5])
        roots = durand_kerner(coeffs)
        order = np.lexsort((roots.imag, roots.real))
        roots = roots[order]
        assert roots[0] == pytest.approx(0.5)
        assert roots[1].imag < roots[2].imag

    def test_complex_eigenvalues_supported(self):
        g1 = MetricField.from_constant([[0.0, 1.0], [1.0, 0.0]])
        g2 = MetricField.from_constant(np.eye(2))
        roots, gap = pencil_eigenvalues(g1, g2, [0.5, 0.5])
        assert roots == pytest.approx(np.array([-1.0, 1.0]))
        assert gap == pytest.approx(2.0)


class TestLinearCombination:
    def test_combination_values(self):
        g1 = MetricField.diagonal([expr.parse("u1", 2), expr.parse("u2", 2)])
        g2 = MetricField.from_constant(np.eye(2))
        comb = linear_combination(2.0, g1, -1.0, g2)
        v = comb.values([3.0, 4.0])
        assert v == pytest.approx(np.diag([5.0, 7.0]))
