import cmath
import math
from fractions import Fraction

import numpy as np
import pytest

import eulerapprox as ea
from eulerapprox.exact import QI, QI_ONE
from eulerapprox.factors import HypothesisError, interval_weights


def make_custom(table, c_map=None, exact=None):
    return ea.custom_spec(table, c_map or {0.05: 2.0}, exact_table=exact)


CHI4 = ea.dirichlet_spec(4, [0, 1, 0, -1])


# ---------------------------------------------------------------------------
# factor evaluation
# ---------------------------------------------------------------------------


def test_eval_factor_zeta_trivial():
    spec = ea.zeta_spec()
    assert ea.eval_factor(spec, 2, 0.0) == 1.0
    assert abs(ea.eval_factor(spec, 2, 0.5) - 2.0) < 0.5**64 / 0.5


def test_eval_factor_character_against_closed_form():
    # closed form (1 - chi(p) z)^-1 is the oracle for the truncated series
    z = 0.1
    val = ea.eval_factor(CHI4, 3, z)
    oracle = 1.0 / (1.0 - CHI4.chi(3) * z)
    assert abs(val - oracle) < abs(z) ** 65 / (1 - abs(z))
    assert abs(val - 1.0 / (1.0 + z)) < 1e-12


def test_eval_factor_rejects_unit_disc_boundary():
    with pytest.raises(ea.FactorDomainError):
        ea.eval_factor(ea.zeta_spec(), 2, 1.0)
    with pytest.raises(ea.FactorDomainError):
        ea.factor_value(ea.zeta_spec(), 2, 1.2 + 0j)


def test_custom_spec_zero_inside_rejected():
    # 1 - 1.25 z vanishes at z = 0.8 inside the disc
    with pytest.raises(ea.FactorDomainError):
        make_custom({2: {1: -1.25}}, c_map={0.5: 2.0})


def test_custom_spec_growth_violation_rejected():
    with pytest.raises(ea.FactorDomainError):
        ea.custom_spec({2: {1: 5.0}}, {0.05: 1.0})


# ---------------------------------------------------------------------------
# partial products
# ---------------------------------------------------------------------------


def test_empty_product_is_one():
    assert ea.partial_product(ea.zeta_spec(), 2.0, []) == 1.0


def test_singleton_product_is_factor_value():
    spec = ea.zeta_spec()
    v = ea.partial_product(spec, 2.0, [7])
    assert v == ea.factor_value(spec, 7, 7.0**-2)


def test_zeta_product_flipped_phases():
    # twist 1/2 flips the factor argument sign: product of (1 + p^-2)^-1
    spec = ea.zeta_spec()
    ps = [int(p) for p in ea.primes_up_to(100)]
    phases = ea.PhaseAssignment({p: 0.5 for p in ps})
    got = ea.partial_product(spec, 2.0, ps, phases)
    oracle = 1.0
    for p in ps:
        oracle *= 1.0 / (1.0 + p**-2)
    assert abs(got - oracle) < 1e-12

    exact = ea.partial_product_exact(spec, 2, ps, {p: Fraction(1, 2) for p in ps})
    exact_oracle = QI_ONE
    for p in ps:
        exact_oracle = exact_oracle * (QI_ONE / (QI_ONE + QI(Fraction(1, p * p), Fraction(0))))
    assert exact.re == exact_oracle.re and exact.im == exact_oracle.im
    assert abs(exact.to_complex() - got) < 1e-12


def test_zeta_error_monotone_and_close():
    # independent summation oracle for the limit value
    n = np.arange(1, 2_000_001, dtype=float)
    zeta2 = float(np.sum(1.0 / n**2)) + 1.0 / 2_000_000  # tail integral correction
    assert abs(zeta2 - math.pi**2 / 6) < 1e-9
    spec = ea.zeta_spec()
    errs = []
    for cutoff in (10**2, 10**3, 10**4):
        ps = ea.primes_up_to(cutoff)
        errs.append(abs(ea.partial_product(spec, 2.0, ps) - zeta2))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-2


def test_product_grid_matches_scalar():
    spec = ea.zeta_spec()
    ps = [int(p) for p in ea.primes_up_to(50)]
    phases = ea.PhaseAssignment({p: 0.25 for p in ps}, t0=0.3)
    s = np.array([2.0 + 0.1j, 0.8 - 0.2j, 1.5])
    grid = ea.partial_product_grid(spec, s, ps, phases)
    for si, gi in zip(s, grid):
        assert abs(ea.partial_product(spec, complex(si), ps, phases) - gi) < 1e-12


def test_phase_assignment_shift_invariant():
    pa = ea.PhaseAssignment({2: 0.1, 3: 0.9}, t0=2.0)
    assert pa.gamma(2) == 2.0 * math.log(2) / (2 * math.pi)
    assert pa.twist(3) == 0.9 + 2.0 * math.log(3) / (2 * math.pi)
    restricted = ea.PhaseAssignment({2: 0.1, 3: 0.9}, t0=2.0, shifted=frozenset([2]))
    assert restricted.gamma(3) == 0.0
    with pytest.raises(ValueError):
        ea.PhaseAssignment({2: 1.0})


# ---------------------------------------------------------------------------
# quotient coefficients
# ---------------------------------------------------------------------------


def test_quotient_zeta_alternating_pattern():
    spec = ea.zeta_spec()
    bs = ea.quotient_coefficients(spec, 5, 12)
    for m, b in zip(range(2, 13), bs):
        assert abs(b - (1.0 if m % 2 == 0 else 0.0)) < 1e-12
    division = ea.quotient_coefficients_by_division(spec, 5, 12)
    assert np.allclose(bs, division, atol=1e-12)


def test_quotient_linear_only_table():
    # a_p^m = 0 for m >= 2: the factor equals the divisor, every b_m vanishes
    spec = make_custom({7: {1: 0.4 + 0.2j}})
    bs = ea.quotient_coefficients(spec, 7, 10)
    division = ea.quotient_coefficients_by_division(spec, 7, 10)
    assert np.allclose(bs, division, atol=1e-13)
    assert max(abs(b) for b in bs) < 1e-13


def test_quotient_zero_leading_coefficient():
    spec = make_custom({3: {1: 0.0, 2: 0.3, 3: 0.1}})
    bs = ea.quotient_coefficients(spec, 3, 6)
    assert bs[0] == 0.3 and bs[1] == 0.1
    assert np.allclose(bs, ea.quotient_coefficients_by_division(spec, 3, 6))


def test_quotient_rejects_large_leading():
    # (1 + 0.9 z)^2 is zero free on the disc but its linear part is not
    spec = make_custom({2: {1: 1.8, 2: 0.81}}, c_map={0.5: 2.0})
    with pytest.raises(ea.FactorDomainError):
        ea.quotient_coefficients(spec, 2, 6)


def test_quotient_exact_routes_agree():
    rngs = np.random.default_rng(11)
    checked = 0
    for _ in range(30):
        table = {}
        exact = {}
        num = rngs.integers(-4, 5, size=8)
        den = rngs.integers(2, 9, size=8)
        row, erow = {}, {}
        for m in range(1, 5):
            a = QI(Fraction(int(num[2 * m - 2]), int(den[2 * m - 2]) * 4),
                   Fraction(int(num[2 * m - 1]), int(den[2 * m - 1]) * 4))
            erow[m] = a
            row[m] = a.to_complex()
        table[5] = row
        exact[5] = erow
        try:
            spec = make_custom(table, c_map={0.3: 3.0}, exact=exact)
        except ea.FactorDomainError:
            continue
        alt = ea.quotient_coefficients_exact(spec, 5, 9)
        div = ea.quotient_coefficients_exact(spec, 5, 9, by_division=True)
        assert all(x.re == y.re and x.im == y.im for x, y in zip(alt, div))
        checked += 1
    assert checked >= 10


# ---------------------------------------------------------------------------
# log factors and the tail bound
# ---------------------------------------------------------------------------


def test_log_factor_mercator():
    spec = ea.zeta_spec()
    p, sigma0 = 101, 0.75
    x = p ** (-sigma0)
    lf = ea.log_factor(spec, p, 0.0, theta=0.0, sigma0=sigma0)
    assert abs(lf.total - (-math.log(1 - x))) < 1e-12
    assert abs(lf.leading - x) < 1e-15
    series = sum(x**k / k for k in range(2, 40))
    assert abs(lf.tail - series) < 1e-14


def test_phase_correction_zero_for_positive_real():
    assert ea.zeta_spec().phase_correction(13) == 0.0
    spec = make_custom({3: {1: -0.5}})
    assert abs(spec.phase_correction(3) - 0.5) < 1e-15


def test_exp_log_consistency():
    # exp of the summed log factors reproduces the product exactly
    spec = ea.zeta_spec()
    ps = [int(p) for p in ea.primes_up_to(50)]
    rng = np.random.default_rng(5)
    for _ in range(100):
        s = complex(rng.uniform(0.16, 2.5), rng.uniform(-3, 3))
        theta = {p: float(rng.random()) for p in ps}
        phases = ea.PhaseAssignment(theta)
        assert max(abs(ea.factors.twist_argument(p, s, phases)) for p in ps) < 0.9
        total = sum(ea.log_factor(spec, p, s, theta[p], sigma0=0.0).total for p in ps)
        prod = ea.partial_product(spec, s, ps, phases)
        assert abs(cmath.exp(total) - prod) <= 1e-9 * abs(prod)


def test_tail_bound_value_and_gates():
    spec = ea.zeta_spec()
    p = 10**6 + 3
    got = ea.log_tail_bound(spec, p, eps=0.05, r=0.02, sigma0=0.75)
    assert abs(got - 4.0 * p**-1.1) < 1e-18
    with pytest.raises(ea.FactorDomainError):
        ea.log_tail_bound(spec, 2, eps=0.05, r=0.02, sigma0=0.75)
    with pytest.raises(ea.FactorDomainError):
        ea.log_tail_bound(spec, 10**6, eps=0.2, r=0.02, sigma0=0.75)


def test_tail_bound_dominates_boundary_samples():
    spec = ea.zeta_spec()
    r, sigma0, eps = 0.02, 0.75, 0.05
    for p in (67, 499, 10007):
        bound = ea.log_tail_bound(spec, p, eps, r, sigma0)
        worst = 0.0
        for ang in np.linspace(0, 2 * math.pi, 64, endpoint=False):
            s = r * cmath.exp(1j * ang)
            lf = ea.log_factor(spec, p, s, theta=0.37, sigma0=sigma0)
            worst = max(worst, abs(lf.tail))
        assert worst <= bound


def test_branch_tracking_small_prime_custom():
    spec = make_custom({2: {1: 0.9}}, c_map={0.05: 1.0})
    lf = ea.log_factor(spec, 2, 0.0, theta=0.0, sigma0=0.55, r=0.3)
    z = 2**-0.55
    assert abs(lf.total - cmath.log(1 + 0.9 * z)) < 1e-9


# ---------------------------------------------------------------------------
# spec file round trip
# ---------------------------------------------------------------------------


def test_custom_spec_file_roundtrip(tmp_path):
    spec = make_custom({2: {1: 0.25 + 0.1j}, 5: {1: -0.3, 2: 0.05j}},
                       c_map={0.05: 2.0, 0.1: 1.5})
    path = str(tmp_path / "spec.txt")
    ea.save_custom_spec(path, spec)
    back = ea.load_custom_spec(path)
    assert back.c_map == spec.c_map
    for p in (2, 5):
        for m in spec.table[p]:
            assert back.coeff(p, m) == spec.coeff(p, m)


def test_custom_spec_file_requires_growth_header(tmp_path):
    path = str(tmp_path / "nogrowth.txt")
    with open(path, "w") as fh:
        fh.write("2 1 0.25 0.0\n")
    with pytest.raises(ValueError):
        ea.load_custom_spec(path)


# ---------------------------------------------------------------------------
# block partition (synthetic windows; the default window is empty at desk h)
# ---------------------------------------------------------------------------


def test_partition_blocks_zeta_wide_window():
    spec = ea.zeta_spec()
    h, lam, wf = 10**5, 0.2, 0.2
    ps, w = interval_weights(spec, h, lam, wf)
    assert len(ps) > 100
    total = float(np.sum(w))
    c0 = 0.9 * total / h ** (lam / 4)
    part = ea.partition_blocks(spec, h, lam, c0, width_factor=wf)
    floor = 0.1 * part.threshold
    assert not part.degenerate
    union = sorted(p for blk in part.blocks for p in blk)
    assert union == sorted(int(p) for p in ps)
    assert len(set(union)) == len(union)
    for blk, claimed in zip(part.blocks, part.block_sums):
        recomputed = sum(abs(spec.a1(p)) * p ** (lam - 1.0) for p in blk)
        assert abs(recomputed - claimed) < 1e-12
        assert recomputed >= floor - 1e-12


def test_partition_all_equal_weights_round_robin():
    # lam = 1 removes the damping; equal leading coefficients give equal weights
    ps = [int(p) for p in ea.primes_up_to(197) if p > 100]
    assert len(ps) == 20
    table = {p: {1: 0.5} for p in ps}
    spec = ea.custom_spec(table, {0.05: 1.0})
    h, lam, wf = 100.0, 1.0, 0.97
    total = 20 * 0.5
    c0 = 0.999 * total / h ** (lam / 4)
    part = ea.partition_blocks(spec, h, lam, c0, width_factor=wf)
    assert all(len(blk) == 5 for blk in part.blocks)
    assert part.blocks[0][0] == 101 and part.blocks[1][0] == 103


def test_partition_hypothesis_failure():
    spec = ea.zeta_spec()
    with pytest.raises(HypothesisError):
        ea.partition_blocks(spec, 10**5, 0.2, c0=1.0)  # empty default window


def test_partition_few_primes_degenerate():
    spec = ea.zeta_spec()
    # window (100, 104.9] holds primes 101, 103 only
    part = ea.partition_blocks(spec, 100.0, 0.2, c0=0.0, width_factor=0.049)
    assert part.degenerate
    union = [p for blk in part.blocks for p in blk]
    assert sorted(union) == [101, 103]


def test_partition_oversized_addend_rejected():
    ps = [int(p) for p in ea.primes_up_to(197) if p > 100]
    table = {p: {1: 0.9 if p == 101 else 1e-4} for p in ps}
    spec = ea.custom_spec(table, {0.05: 1.0})
    total = 0.9 + 19 * 1e-4
    c0 = 0.999 * total / 100.0**0.25
    with pytest.raises(HypothesisError):
        ea.partition_blocks(spec, 100.0, 1.0, c0, width_factor=0.97)
