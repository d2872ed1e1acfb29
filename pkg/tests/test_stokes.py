import pytest
import mpmath
from mpmath import mp, mpf, mpc

from stokeswb import betti, derham, gevrey, stokes
from stokeswb.derham import RationalForm
from stokeswb.errors import FitResidualTooLarge, TailNotDecaying


def gamma_closed(z, lam=mpc(1)):
    """z^(lam/z) Gamma(lam/z) for the one-zero example."""
    s = lam / z
    return z ** s * mpmath.gamma(s)


def dual_entry_closed(z, lam=mpc(1)):
    c = lam - lam * mpmath.log(lam)
    return (mpmath.exp(c / z) * gamma_closed(z, lam)
            / mpmath.sqrt(2 * mp.pi * z))


class TestExpIntegral:
    def test_gamma_closed_form(self, gamma_form, gamma_crit, gamma_thimble,
                               gamma_omega):
        for z in (mpf("0.5"), mpf("0.2"), mpc("0.3", "0.1")):
            val = stokes.exp_integral(gamma_thimble, gamma_omega, gamma_crit, z,
                                      tol=mpf("1e-12"))
            ref = gamma_closed(z)
            assert abs(val - ref) <= mpf("1e-10") * abs(ref)

    def test_deformation_invariance(self, gamma_form, gamma_crit,
                                    gamma_thimble, gamma_omega):
        # independent oracle: direct quadrature of the same contour integral
        # along the positive axis (no shared code with the node tables)
        z = mpf("0.4")
        val = stokes.exp_integral(gamma_thimble, gamma_omega, gamma_crit, z,
                                  tol=mpf("1e-12"))
        with mp.workprec(mp.prec + 64):
            oracle = mpmath.quad(
                lambda x: mpmath.exp(-x / z) * x ** (1 / z - 1), [0, mpmath.inf])
        assert abs(val - oracle) <= mpf("1e-12") * abs(oracle)

    def test_small_loop_vanishes(self):
        # Cauchy sanity for the quadrature helper on a closed square
        from stokeswb.scalar import gauss_segment
        z = mpf("0.3")
        corners = [mpc(2, -1), mpc(3, -1), mpc(3, 1), mpc(2, 1), mpc(2, -1)]
        total = mpc(0)
        for a, b in zip(corners[:-1], corners[1:]):
            total += gauss_segment(
                lambda x: mpmath.exp(-(x - mpmath.log(x)) / z) / x, a, b, n=32)
        assert abs(total) < mpf("1e-30")

    def test_pure_local_model(self):
        # the order-one model cycle against du gives the Gaussian normalizer
        for z in (mpf("0.1"), mpf("0.5")):
            cyc = betti.dft_cycles(1, 0)[0]
            val = betti.local_cycle_integral(cyc, 1, 0, z)
            assert abs(val - mpmath.sqrt(2 * mp.pi * z)) < mpf("1e-8")

    def test_tail_not_decaying_outside_sector(self, gamma_form, gamma_crit,
                                              gamma_thimble, gamma_omega):
        with pytest.raises(TailNotDecaying):
            stokes.exp_integral(gamma_thimble, gamma_omega, gamma_crit,
                                mpc(-0.2, 0.05))


class TestSectorialMatrix:
    def test_entries_vs_closed_form_and_asy(self, gamma_form, gamma_crit):
        zs = [mpf("0.02"), mpf("0.05"), mpf("0.1"), mpf("0.2")]
        sm = stokes.sector_matrix(gamma_form, gamma_crit, 0, zs, asy_order=8,
                                  tol=mpf("1e-12"))
        vals = sm.entries[(0, 0)]
        for z, v in zip(zs, vals):
            ref = dual_entry_closed(z)
            assert abs(v - ref) <= mpf("1e-9") * abs(ref)
        # Gevrey asymptotics of the entries against the reduction series
        report = gevrey.check_asymptotic(list(zip(sm.z_grid, vals)),
                                         sm.asy[(0, 0)], 6)
        assert report.passed
        # leading slope from samples matches the first series coefficient 1/12
        slope = (vals[0] - 1) / zs[0]
        assert abs(slope - mpf(1) / 12) < mpf("0.01")

    def test_borel_sum_reproduces_entries(self, gamma_form, gamma_crit,
                                          gamma_lattice):
        from stokeswb import summation, lattice
        zs = [mpf("0.1"), mpf("0.25"), mpf("0.4") * mpmath.exp(1j * mpf("0.7"))]
        sm = stokes.sector_matrix(gamma_form, gamma_crit, 0, zs, asy_order=40,
                                  tol=mpf("1e-12"))
        sing = lattice.critical_differences(gamma_crit.representatives,
                                            gamma_lattice, 40)
        summed = summation.borel_sum(sm.asy[(0, 0)], 0, zs,
                                     tail_cut=mpf("1e-10"),
                                     known_singularities=sing)
        for (z, s_val), direct in zip(summed.points, sm.entries[(0, 0)]):
            assert abs(s_val - direct) <= mpf("1e-6") * abs(direct)


class TestStokesFactor:
    def overlap_grid(self, sign=1, eps=mpf("0.1")):
        ray = sign * mp.pi / 2
        return [r * mpmath.exp(1j * (ray - sign * eps))
                for r in (mpf("0.3"), mpf("0.33"), mpf("0.36"),
                          mpf("0.39"), mpf("0.42"), mpf("0.45"))]

    def test_identity_at_equal_directions(self, gamma_form, gamma_crit,
                                          gamma_lattice):
        grid = self.overlap_grid()
        xa = stokes.sector_matrix(gamma_form, gamma_crit, 0, grid, asy_order=4,
                                  tol=mpf("1e-14"))
        fac = stokes.stokes_factor(xa, xa, gamma_lattice, basis_bound=1)
        entry = fac.entries[0][0]
        assert abs(entry.terms.get((0,), mpc(0)) - 1) < mpf("1e-12")
        assert abs(entry.terms.get((1,), mpc(0))) < mpf("1e-12")
        assert fac.fit_residual < mpf("1e-12")

    def test_crossing_factors(self, gamma_form, gamma_crit, gamma_lattice):
        # across +pi/2 the decaying dictionary exponential is the lattice
        # generator (exp(-2 pi i/z)); across -pi/2 it is its inverse
        for sign, d2 in ((1, mp.pi - mpf("0.2")), (-1, -mp.pi + mpf("0.2"))):
            grid = self.overlap_grid(sign)
            xa = stokes.sector_matrix(gamma_form, gamma_crit, 0, grid,
                                      asy_order=4, tol=mpf("1e-16"))
            xb = stokes.sector_matrix(gamma_form, gamma_crit, d2, grid,
                                      asy_order=4, tol=mpf("1e-16"))
            fac = stokes.stokes_factor(xa, xb, gamma_lattice, basis_bound=2)
            entry = fac.entries[0][0]
            assert abs(entry.terms.get((0,), mpc(0)) - 1) < mpf("1e-6")
            assert abs(entry.terms.get((sign,), mpc(0)) + 1) < mpf("1e-6")
            assert fac.fit_residual < mpf("1e-6")
            # remaining dictionary terms contribute below tolerance on grid
            for g, coeff in entry.terms.items():
                if g in ((0,), (sign,)):
                    continue
                contrib = max(abs(coeff) * abs(mpmath.exp(
                    gamma_lattice.period(g) / z)) for z in grid)
                assert contrib < mpf("1e-6")

    def test_normalization_invariance(self, gamma_form, gamma_crit,
                                      gamma_lattice):
        # rescaling both matrices by the same diagonal leaves the factor
        grid = self.overlap_grid()
        xa = stokes.sector_matrix(gamma_form, gamma_crit, 0, grid, asy_order=4,
                                  tol=mpf("1e-16"))
        xb = stokes.sector_matrix(gamma_form, gamma_crit, mp.pi - mpf("0.2"),
                                  grid, asy_order=4, tol=mpf("1e-16"))
        import copy
        xa2 = copy.copy(xa)
        xb2 = copy.copy(xb)
        twist = [mpmath.exp(mpf("0.3") / z) * mpmath.sqrt(z) for z in grid]
        xa2.entries = {k: [v * t for v, t in zip(vals, twist)]
                       for k, vals in xa.entries.items()}
        xb2.entries = {k: [v * t for v, t in zip(vals, twist)]
                       for k, vals in xb.entries.items()}
        f1 = stokes.stokes_factor(xa, xb, gamma_lattice, basis_bound=2)
        f2 = stokes.stokes_factor(xa2, xb2, gamma_lattice, basis_bound=2)
        for g in ((0,), (1,)):
            a = f1.entries[0][0].terms.get(g, mpc(0))
            b = f2.entries[0][0].terms.get(g, mpc(0))
            assert abs(a - b) < mpf("1e-8")

    def test_cocycle(self, gamma_form, gamma_crit, gamma_lattice):
        # S(d1,d2) S(d2,d3) = S(d1,d3) on a common grid: with d1, d2 on one
        # side of the crossing the first factor is the identity
        d1, d2, d3 = mpf("0.3"), mpf("1.2"), mpf("2.2")
        grid = [r * mpmath.exp(1j * mpf("1.45"))
                for r in (mpf("0.3"), mpf("0.35"), mpf("0.4"))]
        grid += [r * mpmath.exp(1j * mpf("1.3")) for r in (mpf("0.32"), mpf("0.38"))]
        mats = {d: stokes.sector_matrix(gamma_form, gamma_crit, d, grid,
                                        asy_order=4, tol=mpf("1e-16"))
                for d in (d1, d2, d3)}
        s12 = stokes.stokes_factor(mats[d1], mats[d2], gamma_lattice, 2)
        s23 = stokes.stokes_factor(mats[d2], mats[d3], gamma_lattice, 2)
        s13 = stokes.stokes_factor(mats[d1], mats[d3], gamma_lattice, 2)
        budget = s12.fit_residual + s23.fit_residual + s13.fit_residual
        for z in grid:
            lhs = s12.evaluate(z)[0][0] * s23.evaluate(z)[0][0]
            rhs = s13.evaluate(z)[0][0]
            assert abs(lhs - rhs) <= 10 * budget + mpf("1e-10")


class TestComparison:
    def test_gamma_small_grid(self, gamma_form, gamma_crit):
        zs = [mpf("0.06"), mpf("0.2") * mpmath.exp(1j * mpf("0.9")),
              mpf("0.45") * mpmath.exp(-1j * mpf("0.6"))]
        rep = stokes.comparison_check(gamma_form, gamma_crit, 0, zs,
                                      asy_order=40, tol=mpf("1e-6"))
        assert rep.passed
        assert rep.max_rel_discrepancy < mpf("1e-6")

    def test_sector_boundary_points(self, gamma_form, gamma_crit):
        edge = mp.pi / 2 - mpf("0.05")
        zs = [mpf("0.05") * mpmath.exp(1j * edge),
              mpf("0.05") * mpmath.exp(-1j * edge)]
        rep = stokes.comparison_check(gamma_form, gamma_crit, 0, zs,
                                      asy_order=44, tol=mpf("1e-6"),
                                      quad_tol=mpf("1e-10"))
        assert rep.passed

    def test_rank_zero_local_model(self):
        # x^2 dx: no residues, trivial lattice, classical local comparison
        form = derham.analyze([0, 0, 1], [1])
        lat = derham.period_lattice(form)
        crit = derham.critical_values(form, 0, [[0]], lat=lat)
        zs = [mpf("0.1"), mpf("0.3")]
        rep = stokes.comparison_check(form, crit, mpf("0.15"), zs,
                                      asy_order=8, tol=mpf("1e-8"))
        assert rep.passed
        assert rep.max_rel_discrepancy < mpf("1e-8")


class TestDigamma:
    def entry_function(self, gamma_form, gamma_crit, gamma_omega, d):
        rays = [betti.trace_ray(gamma_form, gamma_crit, 0, ell, d)
                for ell in (0, 1)]

        def entry(z):
            vals = [stokes.ray_integral(r, gamma_omega, z, mpf("1e-14"))
                    for r in rays]
            h = betti.local_normalizer(1, 0, z, d)
            return (vals[0] - vals[1]) * mpmath.exp(gamma_crit.values[0] / z) / h

        return entry

    def test_primary_family(self, gamma_form, gamma_crit, gamma_omega):
        entry = self.entry_function(gamma_form, gamma_crit, gamma_omega, 0)
        rep = stokes.digamma_connection_check(
            1, 0, [mpf("0.2"), mpf("0.35")], entry)
        assert rep.passed
        assert rep.max_rel_error < mpf("1e-5")
        assert rep.series_match

    def test_secondary_family(self, gamma_form, gamma_crit, gamma_omega):
        d = mp.pi - mpf("0.2")
        entry = self.entry_function(gamma_form, gamma_crit, gamma_omega, d)
        zs = [mpf("0.3") * mpmath.exp(1j * mpf("2.2")),
              mpf("0.4") * mpmath.exp(1j * mpf("2.0"))]
        rep = stokes.digamma_connection_check(1, d, zs, entry,
                                              branch="secondary")
        assert rep.passed
