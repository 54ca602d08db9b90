import math

import numpy as np
import pytest

import eulerapprox as ea
from eulerapprox.analysis import Circle, ContourZeroError, DiscGrid


def poly_from_roots(roots):
    coef = np.poly(roots) if len(roots) else np.array([1.0])

    def f(s):
        return np.polyval(coef, np.asarray(s, dtype=complex))

    return f


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------


def test_grid_points_inside_disc():
    grid = DiscGrid(center=0.75 + 0j, radius=0.2, boundary=64, rings=3)
    pts = grid.points()
    assert np.all(np.abs(pts - 0.75) <= 0.2 + 1e-12)
    bpts = grid.boundary_points()
    assert len(bpts) == 64
    ang = np.angle(bpts - 0.75)
    steps = np.diff(np.unwrap(ang))
    assert np.allclose(steps, steps[0])


# ---------------------------------------------------------------------------
# hypothesis sums
# ---------------------------------------------------------------------------


def test_hypothesis_sum_empty_window():
    # the default window is far narrower than unit length at desk-scale h
    assert ea.hypothesis_sum(ea.zeta_spec(), 1e5, 0.2) == 0.0


def test_hypothesis_sum_wide_window_oracle():
    spec = ea.zeta_spec()
    h, lam, wf = 1000.0, 0.2, 0.5
    got = ea.hypothesis_sum(spec, h, lam, width_factor=wf)
    ps = [p for p in range(1001, 1501) if all(p % q for q in range(2, int(p**0.5) + 1))]
    oracle = sum(p ** (lam - 1.0) for p in ps)
    assert abs(got - oracle) < 1e-12


def test_hypothesis_sum_monotone_in_lambda():
    spec = ea.zeta_spec()
    vals = [ea.hypothesis_sum(spec, 500.0, lam, width_factor=1.0)
            for lam in (0.1, 0.2, 0.5, 1.0)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_hypothesis_requires_h_above_e():
    with pytest.raises(ValueError):
        ea.hypothesis_sum(ea.zeta_spec(), 2.0, 0.2)


def test_fit_c0_wide_window_positive():
    spec = ea.zeta_spec()
    hs = [100.0, 300.0, 1000.0]
    report = ea.fit_c0(spec, 0.2, hs, width_factor=0.5)
    assert report.c0 > 0
    assert report.all_pass()
    assert report.first_failure is None
    for row in report.rows:
        assert row.passed == (row.value >= row.threshold - 1e-15 and row.value > 0)
    text = report.to_text()
    assert str(report.c0) in text and len(text.splitlines()) == 3 + len(hs)


def test_fit_c0_desk_scale_window_fails():
    report = ea.fit_c0(ea.zeta_spec(), 0.2, [1e4, 1e5])
    assert report.c0 == 0.0
    assert report.first_failure == 1e4
    assert not any(r.passed for r in report.rows)


def test_fit_c0_zero_coefficients():
    # chi mod 4 kills p = 2 only; a spec with vanishing leading terms fails everywhere
    ps = [101, 103, 107]
    spec = ea.custom_spec({p: {2: 0.5} for p in ps}, {0.05: 1.0})
    report = ea.fit_c0(spec, 0.2, [100.0], width_factor=0.1)
    assert report.c0 == 0.0 and not report.rows[0].passed


def test_fit_c0_input_validation():
    with pytest.raises(ValueError):
        ea.fit_c0(ea.zeta_spec(), 0.2, [])
    with pytest.raises(ValueError):
        ea.fit_c0(ea.zeta_spec(), 0.2, [100.0, 50.0])


# ---------------------------------------------------------------------------
# zero counting
# ---------------------------------------------------------------------------


def test_zero_count_simple_roots():
    c = Circle(0j, 1.0)
    assert ea.zero_count(poly_from_roots([0.3 + 0.2j]), c) == 1
    assert ea.zero_count(poly_from_roots([0.3, -0.5j]), c) == 2
    assert ea.zero_count(poly_from_roots([2.0, 3.0 + 1j]), c) == 0


def test_zero_count_random_polynomials_refinement_invariant():
    rng = np.random.default_rng(12)
    c = Circle(0j, 1.0)
    for _ in range(100):
        deg = int(rng.integers(1, 7))
        inside = int(rng.integers(0, deg + 1))
        roots = []
        for k in range(deg):
            rad = rng.uniform(0.1, 0.8) if k < inside else rng.uniform(1.3, 3.0)
            roots.append(rad * np.exp(2j * math.pi * rng.random()))
        f = poly_from_roots(roots)
        n1 = ea.zero_count(f, c, quadrature_n=256)
        n2 = ea.zero_count(f, c, quadrature_n=512)
        assert n1 == n2 == inside


def test_zero_count_guards_contour_zero():
    with pytest.raises(ContourZeroError):
        ea.zero_count(poly_from_roots([1.0]), Circle(0j, 1.0))


def test_min_modulus():
    c = Circle(0j, 0.5)
    assert abs(ea.min_modulus(lambda s: 3j * np.ones_like(s), c) - 3.0) < 1e-12
    assert abs(ea.min_modulus(lambda s: s, c) - 0.5) < 1e-12
    with pytest.raises(ValueError):
        ea.min_modulus(lambda s: s, c, samples=32)


def test_min_modulus_refinement_improves():
    rng = np.random.default_rng(13)
    c = Circle(0j, 1.0)
    for _ in range(10):
        f = poly_from_roots([1.1 + 0.05j * rng.random(), -2.0])
        coarse = float(np.min(np.abs(f(c.points(64)))))
        refined = ea.min_modulus(f, c, samples=64)
        dense = float(np.min(np.abs(f(c.points(8192)))))
        assert refined <= coarse + 1e-15
        # three local bisection rounds resolve the minimizer to ~3e-3 rad
        assert refined <= dense + 1e-3 * max(1.0, dense)


def test_rouche_identity_and_far_perturbation():
    c = Circle(0j, 1.0)
    f = poly_from_roots([0.5])
    same = ea.rouche_check(f, f, c)
    assert same.passed and same.margin == pytest.approx(same.min_f)
    fail = ea.rouche_check(lambda s: s, lambda s: s + 10.0, c)
    assert not fail.passed and fail.margin < 0


def test_rouche_small_perturbation_counts_agree():
    c = Circle(0j, 0.5)
    f = lambda s: 1.0 + 0.1 * s
    g = lambda s: np.ones_like(np.asarray(s, dtype=complex))
    rr = ea.rouche_check(f, g, c)
    assert rr.passed and rr.zeros_f == rr.zeros_g == 0


def test_zeta_partial_product_zero_free_on_strip_disc():
    spec = ea.zeta_spec()
    ps = [int(p) for p in ea.primes_up_to(100)]

    def f(s):
        return ea.partial_product_grid(spec, np.asarray(s, dtype=complex), ps)

    assert ea.zero_count(f, Circle(0.75 + 0j, 0.2)) == 0


# ---------------------------------------------------------------------------
# surveys
# ---------------------------------------------------------------------------


def test_survey_exact_match_and_constant_offset():
    grid = DiscGrid(0j, 0.1, boundary=64, rings=2)
    one = lambda s: np.ones_like(np.asarray(s, dtype=complex))
    res = ea.disc_error_survey(one, one, grid)
    assert res.max_error == 0.0
    off = lambda s: np.ones_like(np.asarray(s, dtype=complex)) * (1 + 0.25j)
    res = ea.disc_error_survey(one, off, grid)
    assert abs(res.max_error - 0.25) < 1e-15
    assert res.rows.shape[1] == 3


def test_survey_refinement_stable_for_smooth():
    f = lambda s: np.exp(np.asarray(s, dtype=complex))
    g = lambda s: 1.0 + np.asarray(s, dtype=complex)
    a = ea.disc_error_survey(f, g, DiscGrid(0j, 0.3, boundary=256, rings=3)).max_error
    b = ea.disc_error_survey(f, g, DiscGrid(0j, 0.3, boundary=512, rings=3)).max_error
    assert abs(a - b) < 1e-6
