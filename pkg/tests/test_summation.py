import pytest
import mpmath
from mpmath import mp, mpf, mpc

from stokeswb import derham, gevrey, summation
from stokeswb.errors import (ContinuationDiverged, DivergentLaplace,
                             GrowthTooFast, NearSingularity, SingularRay)
from stokeswb.gevrey import GevreySeries, UnboundedSector, from_coeffs
from stokeswb.summation import BorelFunction, borel_sum, continue_borel, laplace


def geometric(order=60):
    return BorelFunction(GevreySeries((mpc(1),) * (order + 1)), method="pade",
                         known_singularities=[mpc(1)])


def euler_borel(order=60, **kw):
    # Borel transform of sum (-1)^n n! z^n is the alternating geometric series
    return BorelFunction(GevreySeries(tuple(mpc(-1) ** n
                                            for n in range(order + 1))),
                         method="pade", known_singularities=[mpc(-1)], **kw)


class TestContinuation:
    def test_geometric_off_cut(self):
        g = geometric()
        assert abs(continue_borel(g, 2) - (-1)) < mpf("1e-40")
        assert abs(continue_borel(g, mpc(0, 3)) - 1 / (1 - mpc(0, 3))) < mpf("1e-40")

    def test_near_singularity_guard(self):
        with pytest.raises(NearSingularity):
            continue_borel(geometric(), 1)

    def test_stirling_borel_value_between_singularities(self):
        # the target lies between the branch points 2 pi i and 4 pi i on
        # their common axis: the rational approximant's cut runs through
        # it, so the straight evaluation must refuse; a detoured stepping
        # gets a finite value, to the modest accuracy that regime allows
        b = derham.stirling_exponent_series(1, 70)
        sing = [2j * mp.pi * k for k in range(-3, 4) if k != 0]
        zeta = 3j * mp.pi
        g_pade = BorelFunction(gevrey.formal_borel(b), method="pade",
                               known_singularities=sing, pade_order=34)
        with pytest.raises(ContinuationDiverged):
            continue_borel(g_pade, zeta)
        g_step = BorelFunction(gevrey.formal_borel(b), method="taylor_stepping",
                               known_singularities=sing)
        val = continue_borel(g_step, zeta, via=[mpc(4, 0), mpc(4, 3 * mp.pi)])
        # independent oracle at doubled precision: the termwise Borel
        # transform integrates the generating kernel of the coefficients,
        # evaluated along the same detour (series branch where the closed
        # form cancels catastrophically)
        with mp.workprec(mp.prec * 2):
            bern = derham.bernoulli_numbers(40)

            def kernel(t):
                if abs(t) < mpf("0.5"):
                    acc = mpc(0)
                    for n in range(1, 20):
                        b2n = mpf(bern[2 * n].numerator) / bern[2 * n].denominator
                        acc += b2n * t ** (2 * n - 2) / mpmath.factorial(2 * n)
                    return acc
                return (1 / (mpmath.exp(t) - 1) - 1 / t + mpf(1) / 2) / t

            oracle = mpmath.quad(kernel, [0, mpc(4, 0), mpc(4, 3 * mp.pi),
                                          3j * mp.pi])
        assert mpmath.isfinite(val)
        assert abs(val - oracle) < mpf("0.05") * abs(oracle)
        # away from the singular axis the detoured stepping is sharp
        side = mpc(10, 2)
        val2 = continue_borel(g_step, side, via=[mpc(5, 1)])
        with mp.workprec(mp.prec * 2):
            oracle2 = mpmath.quad(kernel, [0, mpc(5, 1), side])
        assert abs(val2 - oracle2) < mpf("1e-6") * abs(oracle2)

    def test_pade_vs_stepping_on_geometric(self):
        gp = geometric(120)
        gs = BorelFunction(GevreySeries((mpc(1),) * 121), method="taylor_stepping",
                           known_singularities=[mpc(1)])
        for zeta in (mpc(-5, 0), mpc(0, 5), mpc(-3, 3), mpc(2, 4.5)):
            a = continue_borel(gp, zeta)
            b = continue_borel(gs, zeta)
            assert abs(a - b) <= mpf("1e-10") * abs(1 / (1 - zeta))

    def test_radius_estimate(self):
        assert mpmath.isinf(BorelFunction(from_coeffs([1] + [0] * 10)).radius_estimate())
        r = geometric(20).radius_estimate()
        assert abs(r - 1) < mpf("1e-30")


class TestExpSize:
    def test_constant(self):
        g = BorelFunction(from_coeffs([1] + [0] * 40), method="pade")
        sector = UnboundedSector(0, mpf("0.1"))
        samples = [mpf("0.1") * mpf("1.5") ** k for k in range(12)]
        est = summation.exp_size_one_estimate(g, sector, samples)
        assert est.h <= mpf("1e-8")
        assert abs(est.C - 1) < mpf("0.01")

    def test_exponential_growth_rate(self):
        g = BorelFunction(gevrey.formal_borel(
            from_coeffs([mpmath.factorial(n) for n in range(41)])), method="pade")
        # Borel data of sum n! z^n is the geometric series; use exp data instead
        g = BorelFunction(from_coeffs([1 / mpmath.factorial(n)
                                       for n in range(41)]), method="pade")
        sector = UnboundedSector(0, mpf("0.1"))
        samples = [mpf("0.5") * mpf("1.3") ** k for k in range(14)]
        est = summation.exp_size_one_estimate(g, sector, samples)
        assert abs(est.h - 1) < mpf("0.05")

    def test_pole_straddle_flags_growth(self):
        g = geometric()
        sector = UnboundedSector(0, mpf("0.1"))
        # samples pass very close to the pole at 1 (outside the guard)
        samples = [mpf("0.1") * mpf("1.2") ** k for k in range(16)]
        samples += [mpf(1) + mpf("3e-3"), mpf(1) - mpf("3e-3")]
        with pytest.raises(GrowthTooFast):
            summation.exp_size_one_estimate(g, sector, samples, residual_cap=3)

    def test_beyond_pole_fit_is_flat(self):
        # with the near-pole region avoided the tail fit sees decay: h ~ 0
        g = geometric()
        sector = UnboundedSector(0, mpf("0.1"))
        samples = [mpf(2) + mpf(k) for k in range(0, 40, 2)]
        est = summation.exp_size_one_estimate(g, sector, samples)
        assert est.h < mpf("0.05")


class TestLaplace:
    def test_constant_gives_one(self):
        g = BorelFunction(from_coeffs([1] + [0] * 20), method="pade")
        val = laplace(g, 0, mpf("0.5"), tail_cut=mpf("1e-16"))
        assert abs(val - 1) < mpf("1e-12")

    def test_linear_gives_z(self):
        g = BorelFunction(from_coeffs([0, 1] + [0] * 20), method="pade")
        z = mpf("0.25")
        val = laplace(g, 0, z, tail_cut=mpf("1e-16"))
        assert abs(val - z) < mpf("1e-12")

    def test_euler_series_value(self):
        g = euler_borel()
        val = laplace(g, 0, mpf(1), tail_cut=mpf("1e-14"))
        with mp.workprec(mp.prec * 2):
            oracle = mpmath.quad(lambda t: mpmath.exp(-t) / (1 + t),
                                 [0, mpmath.inf])
        assert abs(val - oracle) < mpf("1e-10")
        # frozen reference: e * E_1(1) = 0.59634736232319407...
        assert abs(val - mpf("0.596347362323194074341078499369")) < mpf("1e-10")

    def test_divergent_outside_half_plane(self):
        g = euler_borel()
        with pytest.raises(DivergentLaplace):
            laplace(g, 0, mpc(-0.1, 0.01))

    def test_singular_ray(self):
        g = euler_borel()
        with pytest.raises(SingularRay):
            laplace(g, mp.pi, mpf("-0.3") + mpc(0, "0.001"))


class TestBorelSum:
    def test_polynomial_identity(self):
        s = from_coeffs([1, 1, 1] + [0] * 8)
        for d in (0, mpf("0.4")):
            out = borel_sum(s, d, [mpf("0.1") * mpmath.exp(1j * mpf(d))],
                            tail_cut=mpf("1e-14"))
            z, v = out.points[0]
            assert abs(v - s(z)) < mpf("1e-11")

    def test_euler_series_vs_quadrature(self):
        s = from_coeffs([mpmath.factorial(n) * (-1) ** n for n in range(55)])
        out = borel_sum(s, 0, [mpf("0.2")], tail_cut=mpf("1e-12"))
        with mp.workprec(mp.prec * 2):
            oracle = mpmath.quad(
                lambda t: mpmath.exp(-t / mpf("0.2")) / (1 + t),
                [0, mpmath.inf]) / mpf("0.2")
        assert abs(out.points[0][1] - oracle) < mpf("1e-10")

    def test_multiplicativity(self):
        z = mpf("0.1")
        euler = from_coeffs([mpmath.factorial(n) * (-1) ** n for n in range(41)])
        square = gevrey.mul(euler, euler)
        lhs = borel_sum(square, 0, [z], tail_cut=mpf("1e-12")).points[0][1]
        f = borel_sum(euler, 0, [z], tail_cut=mpf("1e-12")).points[0][1]
        assert abs(lhs - f * f) <= mpf("1e-8") * abs(lhs)

    def test_additivity(self):
        z = mpf("0.15")
        a = from_coeffs([mpmath.factorial(n) * (-1) ** n for n in range(31)])
        b = from_coeffs([1] * 31)
        lhs = borel_sum(gevrey.add(a, b), 0, [z]).points[0][1]
        va = borel_sum(a, 0, [z]).points[0][1]
        vb = borel_sum(b, 0, [z]).points[0][1]
        assert abs(lhs - (va + vb)) < mpf("1e-9")

    def test_watson_consistency(self):
        # the resummed function has its source series as Gevrey-1 expansion
        s = from_coeffs([mpmath.factorial(n) * (-1) ** n for n in range(25)])
        zs = [mpf("0.3") * mpf("0.5") ** k for k in range(6)]
        out = borel_sum(s, 0, zs, tail_cut=mpf("1e-20"))
        report = gevrey.check_asymptotic(out.points, s, 6)
        assert report.passed

    def test_csv_and_sidecar(self):
        s = from_coeffs([1, 1] + [0] * 5)
        out = borel_sum(s, 0, [mpf("0.1"), mpf("0.2")])
        text = out.to_csv()
        assert text.splitlines()[0] == "z_re,z_im,f_re,f_im"
        assert len(text.splitlines()) == 3
        side = out.sidecar()
        assert side["source_hash"] == summation.series_hash(s)


class TestSingularityLocation:
    def test_geometric(self):
        g = geometric(40)
        poles = summation.locate_borel_singularities(g, 3)
        assert len(poles) == 1
        assert abs(poles[0] - 1) < mpf("1e-20")

    def test_euler(self):
        g = euler_borel(40)
        poles = summation.locate_borel_singularities(g, 3)
        assert len(poles) == 1
        assert abs(poles[0] + 1) < mpf("1e-20")

    def test_stirling_lattice_translates(self, gamma_lattice):
        from stokeswb import lattice as lat_mod
        b = derham.stirling_exponent_series(1, 80)
        g = BorelFunction(gevrey.formal_borel(b), method="pade", pade_order=38)
        poles = summation.locate_borel_singularities(g, 15)
        targets = lat_mod.critical_differences([mpc(0)], gamma_lattice, 15)
        assert targets
        for t in targets:
            assert min(abs(p - t) for p in poles) < mpf("1e-3")
        for p in poles:
            assert min(abs(p - t) for t in targets) < mpf("1e-3")
