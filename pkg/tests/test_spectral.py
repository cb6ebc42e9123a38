"""Unit tests for basis evaluation, the coefficient map and the steppers."""

import csv
import math

import numpy as np
import pytest

from ssjacobi import jacobidiff
from ssjacobi.spectral import (
    CoeffVector,
    differentiate,
    expand,
    reconstruct,
    step_advection_cayley,
    step_diffusion,
    wfun_eval,
    wfun_table,
    write_norm_series_csv,
)
from ssjacobi.specfun import DomainError, JacobiParams, gauss_jacobi_rule

P22 = JacobiParams(2.0, 2.0)
P42 = JacobiParams(4.0, 2.0)


class TestBasisEvaluation:
    def test_endpoints_vanish(self):
        for p in (P22, P42, JacobiParams(0.5, 1.5)):
            for n in (0, 1, 5):
                assert wfun_eval(p, n, 1.0) == 0.0
                assert wfun_eval(p, n, -1.0) == 0.0

    def test_frozen_value_at_zero(self):
        assert wfun_eval(P22, 0, 0.0) == pytest.approx(math.sqrt(15.0) / 4.0, rel=1e-14)

    def test_outside_domain_rejected(self):
        with pytest.raises(DomainError):
            wfun_eval(P22, 0, 1.0001)
        with pytest.raises(DomainError):
            wfun_table(P22, 3, np.array([0.0, -1.5]))

    def test_unit_norms(self):
        # phi_n^2 is a polynomial of degree 2n plus the (integer) weight
        # exponents, so 32 flat-weight nodes integrate it exactly here.
        for p in (P22, P42):
            for n in (0, 2, 6):
                rule = gauss_jacobi_rule(0.0, 0.0, n + 32)
                nodes = np.asarray(rule.nodes, dtype=float)
                weights = np.asarray(rule.weights, dtype=float)
                vals = wfun_eval(p, n, nodes)
                assert float(weights @ vals**2) == pytest.approx(1.0, rel=1e-12)


class TestExpand:
    def test_basis_function_gives_unit_coordinate(self):
        u = expand(P22, lambda x: wfun_eval(P22, 3, x), 8)
        expected = np.zeros(8)
        expected[3] = 1.0
        assert np.abs(u.coeffs - expected).max() <= 1e-12

    def test_linearity(self):
        f = lambda x: 2.0 * wfun_eval(P22, 0, x) - wfun_eval(P22, 2, x)
        u = expand(P22, f, 6)
        expected = np.array([2.0, 0.0, -1.0, 0.0, 0.0, 0.0])
        assert np.abs(u.coeffs - expected).max() <= 1e-12

    def test_refinement_oracle(self):
        # (1-x^2)^2 is the full weight for these parameters; doubling the
        # node count must reproduce the same coefficients.
        from ssjacobi.specfun import jacobi_table
        from ssjacobi.jacobidiff import kappa_vector

        f = lambda x: (1.0 - x * x) ** 2
        n_size = 12
        u = expand(P22, f, n_size)
        rule = gauss_jacobi_rule(2.0, 2.0, 4 * n_size)
        nodes = np.asarray(rule.nodes, dtype=float)
        weights = np.asarray(rule.weights, dtype=float)
        ratio = np.array([f(x) for x in nodes]) / (
            (1.0 - nodes) ** 1.0 * (1.0 + nodes) ** 1.0
        )
        table = jacobi_table(2.0, 2.0, n_size - 1, nodes)
        ref = kappa_vector(P22, n_size - 1) * (table @ (weights * ratio))
        assert np.abs(u.coeffs - ref).max() <= 1e-12

    def test_non_finite_samples_rejected(self):
        with pytest.raises(ValueError):
            expand(P22, lambda x: float("nan"), 4)

    def test_plancherel(self):
        f = lambda x: (1.0 - x * x) ** 2 * (1.0 + 0.5 * x)
        u = expand(P22, f, 16)
        rule = gauss_jacobi_rule(0.0, 0.0, 64)
        nodes = np.asarray(rule.nodes, dtype=float)
        weights = np.asarray(rule.weights, dtype=float)
        l2sq = float(weights @ np.array([f(x) ** 2 for x in nodes]))
        assert u.norm() ** 2 == pytest.approx(l2sq, abs=1e-11)


class TestReconstruct:
    def test_round_trip_interior_points(self):
        n_size = 10
        f = lambda x: (1.0 - x) * (1.0 + x) * (1.0 + x - 0.3 * x**3)
        u = expand(JacobiParams(2.0, 2.0), lambda x: math.sqrt(
            (1.0 - x) ** 2 * (1.0 + x) ** 2
        ) * (1.0 + x - 0.3 * x**3), n_size)
        x = np.cos(np.pi * (np.arange(1, 34)) / 34.0) * 0.9
        vals = reconstruct(u, x)
        ref = np.sqrt((1.0 - x) ** 2 * (1.0 + x) ** 2) * (1.0 + x - 0.3 * x**3)
        assert np.abs(vals - ref).max() <= 1e-8

    def test_scalar_point(self):
        u = expand(P22, lambda x: wfun_eval(P22, 1, x), 4)
        got = reconstruct(u, 0.25)
        assert got == pytest.approx(wfun_eval(P22, 1, 0.25), abs=1e-12)


class TestDifferentiate:
    def test_zero_in_zero_out(self):
        b = jacobidiff.build(P22, 8, "generators")
        u = CoeffVector(params=P22, coeffs=np.zeros(8))
        assert np.array_equal(differentiate(b, u).coeffs, np.zeros(8))

    def test_derivative_reconstruction(self):
        # f is the full weight (1-x^2)^2 scaled to the lowest basis
        # function's normalization; its derivative is analytic.
        n_size = 16
        k0 = float(jacobidiff.kappa(P22, 0))
        f = lambda x: k0 * (1.0 - x * x) ** 2
        fprime = lambda x: k0 * 2.0 * (1.0 - x * x) * (-2.0 * x)
        u = expand(P22, f, n_size)
        b = jacobidiff.build(P22, n_size, "generators")
        du = differentiate(b, u)
        assert reconstruct(du, 0.3) == pytest.approx(fprime(0.3), abs=1e-6)

    def test_generator_and_dense_routes_agree(self):
        bg = jacobidiff.build(P42, 32, "generators")
        bd = jacobidiff.build(P42, 32, "closed_form")
        rng = np.random.default_rng(1)
        u = CoeffVector(params=P42, coeffs=rng.standard_normal(32))
        g = differentiate(bg, u).coeffs
        d = differentiate(bd, u).coeffs
        assert np.abs(np.linalg.norm(g) - np.linalg.norm(d)) <= 1e-11
        assert np.abs(g - d).max() <= 1e-11

    def test_size_mismatch(self):
        b = jacobidiff.build(P22, 8, "generators")
        with pytest.raises(ValueError):
            differentiate(b, CoeffVector(params=P22, coeffs=np.zeros(9)))

    def test_params_mismatch(self):
        b = jacobidiff.build(P22, 8, "generators")
        with pytest.raises(ValueError):
            differentiate(b, CoeffVector(params=P42, coeffs=np.zeros(8)))


class TestDiffusionStepper:
    def test_zero_fixed_point(self):
        b = jacobidiff.build(P22, 8, "generators")
        u = CoeffVector(params=P22, coeffs=np.zeros(8))
        assert np.array_equal(step_diffusion(b, u, 1e-2).coeffs, np.zeros(8))

    def test_contraction(self):
        b = jacobidiff.build(P22, 64, "generators")
        rng = np.random.default_rng(2)
        u = CoeffVector(params=P22, coeffs=rng.standard_normal(64))
        assert step_diffusion(b, u, 1e-2).norm() <= u.norm()

    def test_structured_matches_dense(self):
        for p in (P22, P42, JacobiParams(0.5, 1.5)):
            bg = jacobidiff.build(p, 64, "generators")
            bd = jacobidiff.build(p, 64, "closed_form")
            rng = np.random.default_rng(3)
            u = CoeffVector(params=p, coeffs=rng.standard_normal(64))
            s = step_diffusion(bg, u, 1e-2).coeffs
            d = step_diffusion(bd, u, 1e-2).coeffs
            assert np.abs(s - d).max() <= 1e-10

    def test_invalid_dt(self):
        b = jacobidiff.build(P22, 8, "generators")
        u = CoeffVector(params=P22, coeffs=np.zeros(8))
        with pytest.raises(DomainError):
            step_diffusion(b, u, 0.0)


class TestCayleyStepper:
    def test_zero_fixed_point(self):
        b = jacobidiff.build(P22, 8, "generators")
        u = CoeffVector(params=P22, coeffs=np.zeros(8))
        assert np.array_equal(step_advection_cayley(b, u, 1e-2).coeffs, np.zeros(8))

    def test_norm_drift_100_steps(self):
        b = jacobidiff.build(P22, 64, "generators")
        rng = np.random.default_rng(4)
        u = CoeffVector(params=P22, coeffs=rng.standard_normal(64))
        start = u.norm()
        for _ in range(100):
            u = step_advection_cayley(b, u, 1e-2)
        assert abs(u.norm() - start) <= 1e-10

    def test_structured_matches_dense(self):
        bg = jacobidiff.build(P42, 128, "generators")
        bd = jacobidiff.build(P42, 128, "closed_form")
        rng = np.random.default_rng(5)
        u = CoeffVector(params=P42, coeffs=rng.standard_normal(128))
        s = step_advection_cayley(bg, u, 1e-2).coeffs
        d = step_advection_cayley(bd, u, 1e-2).coeffs
        assert np.abs(s - d).max() <= 1e-10

    def test_invalid_dt(self):
        b = jacobidiff.build(P22, 8, "generators")
        u = CoeffVector(params=P22, coeffs=np.zeros(8))
        with pytest.raises(DomainError):
            step_advection_cayley(b, u, -1.0)


class TestCoeffVector:
    def test_norm_is_l2(self):
        u = CoeffVector(params=P22, coeffs=np.array([3.0, 4.0]))
        assert u.norm() == pytest.approx(5.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            CoeffVector(params=P22, coeffs=np.array([np.inf, 0.0]))
        with pytest.raises(ValueError):
            CoeffVector(params=P22, coeffs=np.zeros((2, 2)))


class TestNormSeriesCsv:
    def test_format(self, tmp_path):
        path = tmp_path / "series.csv"
        write_norm_series_csv(path, [(0, 0.0, 1.0), (1, 0.01, 0.5)])
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["step", "t", "l2_norm"]
        assert rows[1] == ["0", "0", "1"]
        assert float(rows[2][2]) == 0.5
