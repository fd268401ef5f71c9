import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lightningpoly.approx import (
    ApproxConfig,
    RationalApprox,
    _fit_tail_full,
    build_approximation,
    clustered_poles,
    clustered_poles_quadrature_form,
    deserialize,
    fit_tail,
    optimal_sigma,
    residues_power,
    residues_power_log,
    serialize,
)
from lightningpoly.geometry import SectorDomain
from lightningpoly.kernels import (
    KernelConfig,
    PoleCollisionError,
    log_weight_constant,
    trapezoid_rational_grid,
)


class TestOptimalSigma:
    def test_quarter_on_segment(self):
        assert optimal_sigma(0.25, 0.0) == pytest.approx(4 * math.pi, rel=1e-15)

    def test_half_on_half_plane(self):
        assert optimal_sigma(0.5, 1.0) == pytest.approx(2 * math.pi, rel=1e-15)

    def test_half_on_segment(self):
        assert optimal_sigma(0.5, 0.0) == pytest.approx(2 * math.sqrt(2) * math.pi, rel=1e-15)

    def test_range_checks(self):
        with pytest.raises(ValueError):
            optimal_sigma(0.0, 0.5)
        with pytest.raises(ValueError):
            optimal_sigma(0.5, 2.0)


class TestPoles:
    def test_last_pole_exactly_minus_c(self):
        cfg = ApproxConfig(alpha=0.5, beta=0.0, sigma=2.0, n1=4, n2=0)
        p = clustered_poles(cfg)
        assert p[-1] == -1.0
        assert p[0] == pytest.approx(-math.exp(-2 * (math.sqrt(4) - 1)), rel=1e-15)

    def test_single_pole(self):
        cfg = ApproxConfig(alpha=0.5, beta=0.0, sigma=3.0, C=0.5, n1=1, n2=0)
        np.testing.assert_array_equal(clustered_poles(cfg), [-0.5])

    @given(st.floats(0.15, 0.85), st.floats(1.0, 12.0), st.integers(2, 40))
    @settings(max_examples=30, deadline=None)
    def test_formula_equivalence(self, alpha, sigma, n1):
        # tapered form vs quadrature-node form of the same poles
        cfg = ApproxConfig(alpha=alpha, beta=0.5, sigma=sigma, n1=n1, n2=0)
        a = clustered_poles(cfg)
        b = clustered_poles_quadrature_form(cfg)
        assert np.max(np.abs(a - b) / np.abs(a)) <= 1e-13

    def test_scaling_in_c(self):
        base = ApproxConfig(alpha=0.4, beta=0.7, sigma=3.0, n1=7, n2=0)
        scaled = ApproxConfig(alpha=0.4, beta=0.7, sigma=3.0, n1=7, n2=0, C=3.5)
        pa, pb = clustered_poles(base), clustered_poles(scaled)
        assert np.max(np.abs(pb - 3.5 * pa) / np.abs(pb)) <= 1e-15

    def test_eta_ratio(self):
        cfg = ApproxConfig(alpha=0.5, beta=1.0, sigma=math.pi, n1=4, n2=0)
        assert cfg.eta == pytest.approx(2.0, rel=1e-15)
        assert cfg.h == pytest.approx(math.pi**2 / 4, rel=1e-15)

    def test_n_quad_consistency(self):
        for alpha in (0.3, 0.5, 0.62, 0.8):
            for n1 in (1, 5, 10, 36):
                cfg = ApproxConfig(alpha=alpha, beta=0.0, sigma=2.0, n1=n1, n2=0)
                ratio = (cfg.kappa + 1.0) ** 2
                assert math.ceil(cfg.n_quad / ratio - 1e-12) == n1


class TestResidues:
    def test_all_negative(self):
        cfg = ApproxConfig(alpha=0.37, beta=0.9, sigma=5.0, n1=9, n2=0)
        r = residues_power(cfg)
        assert np.all(r.real < 0) and np.all(r.imag == 0)

    def test_hand_value_last_index(self):
        # alpha=1/2, sigma=2 so h=1, C=1, n1=4: a_4 = -1/(2*pi)
        cfg = ApproxConfig(alpha=0.5, beta=0.0, sigma=2.0, n1=4, n2=0)
        r = residues_power(cfg)
        assert r[-1] == pytest.approx(-1.0 / (2 * math.pi), rel=1e-14)

    def test_scaling_in_c(self):
        cfg1 = ApproxConfig(alpha=0.5, beta=0.5, sigma=3.0, n1=6, n2=0)
        cfg2 = ApproxConfig(alpha=0.5, beta=0.5, sigma=3.0, n1=6, n2=0, C=2.0)
        np.testing.assert_allclose(residues_power(cfg2),
                                   2.0 ** 1.5 * residues_power(cfg1), rtol=1e-13)

    def test_log_residues_two_term_oracle(self):
        cfg = ApproxConfig(alpha=0.5, beta=0.0, sigma=2.0, n1=2, n2=0,
                           target="power_log")
        got = residues_power_log(cfg)
        a, h, T, C = 0.5, 1.0, 2.0 * 0.5 * math.sqrt(2), 1.0
        chi = log_weight_constant(a, C)
        for idx, j in enumerate((1, 2)):
            p = -C * math.exp(-2.0 * (math.sqrt(2) - math.sqrt(j)))
            w1 = h * math.sin(a * math.pi) / (2 * a**2 * math.pi)
            w2 = 0.5 * (chi / C**a - T * math.sin(a * math.pi) / (a**2 * math.pi))
            expected = (w1 + w2 * math.sqrt(h / j)) * p * abs(p)**a
            assert got[idx] == pytest.approx(expected, rel=1e-13)
        assert np.all(got.imag == 0)


class TestFitTail:
    def test_constant_remainder_single_coefficient(self):
        # with the far sum empty the remainder is the near-pole constant
        cfg = ApproxConfig(alpha=0.5, beta=0.0, sigma=2.0, n1=3, n2=0)
        pref = math.sin(0.5 * math.pi) / (2 * 0.5 * math.pi)
        j = np.arange(1, 4)
        mags = np.abs(clustered_poles(cfg)) ** 0.5
        const = pref * np.sum(np.sqrt(cfg.h / j) * mags)

        def values(zs):
            return np.full(np.shape(zs), const, complex)

        tail = _fit_tail_full(cfg, SectorDomain(beta=0.0), values_fn=values)
        assert tail.coeffs.size == 1
        assert tail.coeffs[0] == pytest.approx(const, rel=1e-12)

    def test_misfit_decreases_with_degree(self):
        dom = SectorDomain(beta=1.0)
        sups = []
        for n2 in (2, 6, 10, 16, 24):
            cfg = ApproxConfig(alpha=0.5, beta=1.0, sigma=optimal_sigma(0.5, 1.0),
                               n1=20, n2=n2)
            sups.append(_fit_tail_full(cfg, dom).validation_sup)
        for lo, hi in zip(sups[1:], sups[:-1]):
            assert lo <= 10 * hi
        assert sups[-1] < sups[0] * 1e-3

    def test_spec_point_reaches_1e10(self):
        cfg = ApproxConfig(alpha=0.5, beta=1.0, sigma=optimal_sigma(0.5, 1.0), n1=36)
        assert cfg.n2 == 47
        tail = _fit_tail_full(cfg, SectorDomain(beta=1.0))
        assert tail.validation_sup <= 1e-10
        assert tail.validation_sup <= 50 * max(tail.fit_rms, 1e-16)

    def test_rank_deficient_raises(self):
        from lightningpoly.approx import _poly_lstsq
        zs = np.array([0.1, 0.5, 0.9], complex)
        with pytest.raises(ValueError, match="reduce N2"):
            _poly_lstsq(zs, zs**0.5, degree=5, scale=1.0)


class TestBuildAndEval:
    def test_smallest_instance(self):
        cfg = ApproxConfig(alpha=0.5, beta=0.0, sigma=2.0, n1=1, n2=0)
        ap = build_approximation(cfg)
        assert ap.n_poles == 1 and ap.degree == 0
        assert np.isfinite(abs(ap.eval(0.5)))

    def test_segment_rate_value(self):
        cfg = ApproxConfig(alpha=0.5, beta=0.0, sigma=optimal_sigma(0.5, 0.0), n1=16)
        ap = build_approximation(cfg)
        xs = np.linspace(0, 1, 4001) ** 2
        err = np.max(np.abs(ap.eval(xs) - np.sqrt(xs)))
        predicted = math.exp(-2 * math.pi * math.sqrt(0.5 * 16))
        assert predicted / 100 <= err <= predicted * 100

    def test_matches_full_trapezoid_sum(self):
        # the built object reproduces the full quadrature sum to O(e^-T)
        cfg = ApproxConfig(alpha=0.5, beta=1.0, sigma=optimal_sigma(0.5, 1.0), n1=16)
        ap = build_approximation(cfg)
        kcfg = KernelConfig(alpha=0.5, C=1.0, h=cfg.h, n_quad=cfg.n_quad)
        assert abs(kcfg.T - cfg.T) < 1e-12
        zs = 0.97 * np.exp(1j * np.linspace(-math.pi / 2, math.pi / 2, 41))
        gap = np.max(np.abs(ap.eval(zs) - trapezoid_rational_grid(zs, kcfg)))
        assert gap <= 100 * math.exp(-cfg.T)

    def test_prefactor_one_reduces_to_power(self):
        base = ApproxConfig(alpha=0.4, beta=1.0, sigma=5.0, n1=10)
        pre = ApproxConfig(alpha=0.4, beta=1.0, sigma=5.0, n1=10,
                           target="prefactor_power", g=lambda z: 1.0)
        a1 = build_approximation(base)
        a2 = build_approximation(pre)
        np.testing.assert_array_equal(a1.poles, a2.poles)
        np.testing.assert_allclose(a2.residues, a1.residues, rtol=1e-13)
        scale = np.max(np.abs(a1.tail_coeffs))
        np.testing.assert_allclose(a2.tail_coeffs, a1.tail_coeffs,
                                   rtol=1e-13, atol=1e-13 * scale)

    def test_prefactor_exponential(self):
        beta = 1.0
        dom = SectorDomain(beta=beta)
        cfgp = ApproxConfig(alpha=0.5, beta=beta, sigma=optimal_sigma(0.5, beta), n1=16)
        cfgg = ApproxConfig(alpha=0.5, beta=beta, sigma=optimal_sigma(0.5, beta), n1=16,
                            target="prefactor_power", g=cmath.exp)
        ap = build_approximation(cfgp, dom)
        ag = build_approximation(cfgg, dom)
        th = np.linspace(-math.pi / 2, math.pi / 2, 31)
        zs = np.concatenate([r * np.exp(1j * th) for r in (1.0, 0.6, 0.2, 1e-3)])
        err_p = np.max(np.abs(ap.eval(zs) - zs**0.5))
        err_g = np.max(np.abs(ag.eval(zs) - np.exp(zs) * zs**0.5))
        assert err_g <= 10 * err_p * math.e

    def test_root_exponential_for_every_sigma(self):
        s_opt = optimal_sigma(0.5, 1.0)
        for sigma in (0.5 * s_opt, s_opt, 2.0 * s_opt):
            errs = []
            for n1 in (4, 9, 16, 25):
                cfg = ApproxConfig(alpha=0.5, beta=1.0, sigma=sigma, n1=n1)
                ap = build_approximation(cfg)
                th = np.linspace(-math.pi / 2, math.pi / 2, 21)
                zs = np.concatenate([r * np.exp(1j * th) for r in (1.0, 0.7, 0.3, 1e-2, 1e-5)])
                errs.append(np.max(np.abs(ap.eval(zs) - zs**0.5)))
            slope = np.polyfit(np.sqrt([4, 9, 16, 25]), np.log(errs), 1)[0]
            assert slope < 0

    def test_domain_mismatch(self):
        cfg = ApproxConfig(alpha=0.5, beta=1.0, sigma=4.0, n1=4)
        with pytest.raises(ValueError, match="beta"):
            build_approximation(cfg, SectorDomain(beta=0.5))

    def test_eval_single_pole(self):
        ap = RationalApprox(poles=np.array([-1.0 + 0j]), residues=np.array([1.0 + 0j]),
                            tail_coeffs=np.array([0j]), basis_scale=1.0)
        assert ap.eval(0.0) == 1.0

    def test_eval_tail_only_horner(self):
        ap = RationalApprox(poles=np.empty(0, complex), residues=np.empty(0, complex),
                            tail_coeffs=np.array([2.0 + 0j, 3.0 + 0j]), basis_scale=1.0)
        assert ap.eval(2.0) == 8.0

    def test_eval_conjugate_symmetry(self):
        cfg = ApproxConfig(alpha=0.5, beta=1.0, sigma=6.0, n1=8)
        ap = build_approximation(cfg)
        z = 0.4 + 0.3j
        assert abs(ap.eval(z.conjugate()) - ap.eval(z).conjugate()) < 1e-13

    def test_eval_pole_collision(self):
        ap = RationalApprox(poles=np.array([-1.0 + 0j]), residues=np.array([1.0 + 0j]),
                            tail_coeffs=np.array([0j]), basis_scale=1.0)
        with pytest.raises(PoleCollisionError):
            ap.eval(-1.0 + 1e-16j)

    def test_pole_ordering_enforced(self):
        with pytest.raises(ValueError):
            RationalApprox(poles=np.array([-1.0 + 0j, -2.0 + 0j, -1.5 + 0j]),
                           residues=np.ones(3, complex),
                           tail_coeffs=np.array([0j]), basis_scale=1.0)


class TestSerialization:
    def test_round_trip_bit_exact(self):
        cfg = ApproxConfig(alpha=0.37, beta=0.8, sigma=4.4, n1=9)
        ap = build_approximation(cfg)
        text = serialize(ap)
        back = deserialize(text)
        assert np.array_equal(back.poles, ap.poles)
        assert np.array_equal(back.residues, ap.residues)
        assert np.array_equal(back.tail_coeffs, ap.tail_coeffs)
        assert back.basis_scale == ap.basis_scale
        assert serialize(back) == text

    def test_complex_tail_tokens(self):
        ap = RationalApprox(poles=np.array([-0.5 + 0j]), residues=np.array([0.25 - 0.125j]),
                            tail_coeffs=np.array([1 / 3 + 0j, 0.1 - 0.7j]),
                            basis_scale=2.0)
        back = deserialize(serialize(ap))
        assert np.array_equal(back.tail_coeffs, ap.tail_coeffs)
        assert np.array_equal(back.residues, ap.residues)

    def test_unknown_record(self):
        with pytest.raises(ValueError, match="unknown record"):
            deserialize("pole -1 0\nresidue 1 0\nblob 3\n")
