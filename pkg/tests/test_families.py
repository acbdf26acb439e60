"""Family evaluation, auxiliary functions, and their quadrature oracles."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from navierlab.families import (
    FamilyDomainError,
    NonlinearityFamily,
    exponential,
    power,
    mems,
    parse_family,
    evaluate,
    g_aux,
    H_aux,
    h_aux_grid,
    gamma_limits,
)

ALL_FAMILIES = [exponential(), power(1.5), power(2.0), power(4.0), mems(1.5), mems(2.0), mems(3.0)]
REGULAR_FAMILIES = [exponential(), power(1.5), power(2.0), power(4.0)]


def sample_points(family, count=60):
    """Log-spaced admissible arguments, dense near the interesting end."""
    if family.kind == "mems":
        return 1.0 - np.logspace(0, -6, count)[::-1]  # up toward touchdown
    return np.concatenate([[0.0], np.logspace(-3, 1.5, count)])


def g_quadrature(family, t):
    """Defining integral sqrt(2) (int_0^t (f-1))^(1/2), the oracle for g."""
    if t == 0.0:
        return 0.0
    val, _ = quad(lambda s: family.f(s) - 1.0, 0.0, t, epsabs=1e-15, epsrel=1e-13)
    return math.sqrt(2.0) * math.sqrt(max(val, 0.0))


def h_simpson(family, t, panels):
    """Fixed composite-Simpson value of int_0^t f'' g, independent of H_aux."""
    if t == 0.0:
        return 0.0
    x = np.linspace(0.0, t, 2 * panels + 1)
    y = family.fpp(x) * np.array([g_aux(family, s) for s in x])
    h = x[1] - x[0]
    return (h / 3.0) * (y[0] + y[-1] + 4.0 * y[1::2].sum() + 2.0 * y[2:-1:2].sum())


# ---------------------------------------------------------------------------
# pointwise evaluation
# ---------------------------------------------------------------------------


def test_eval_exponential_at_zero():
    assert evaluate(exponential(), 0.0) == (1.0, 1.0, 1.0)


def test_eval_power_two_at_one():
    f, fp, fpp = evaluate(power(2.0), 1.0)
    assert (f, fp, fpp) == (4.0, 4.0, 2.0)


def test_eval_mems_two_at_half():
    # hand differentiation of (1-t)^-2 at t = 1/2
    f, fp, fpp = evaluate(mems(2.0), 0.5)
    assert abs(f - 4.0) < 1e-12
    assert abs(fp - 16.0) < 1e-12
    assert abs(fpp - 96.0) < 1e-12


def test_domain_errors():
    with pytest.raises(FamilyDomainError):
        mems(2.0).f(1.0)
    with pytest.raises(FamilyDomainError):
        mems(2.0).f(np.array([0.2, 1.3]))
    with pytest.raises(FamilyDomainError):
        power(2.0).f(-1.0)
    with pytest.raises(FamilyDomainError):
        power(0.9)
    with pytest.raises(FamilyDomainError):
        mems(0.0)
    with pytest.raises(FamilyDomainError):
        NonlinearityFamily("exp", 2.0)
    with pytest.raises(FamilyDomainError):
        NonlinearityFamily("cubic")


def test_parse_family_round_trip():
    for spec in ("exp", "power:p=2", "mems:p=1.5"):
        assert parse_family(spec).spec == parse_family(parse_family(spec).spec).spec
    assert parse_family("exp").kind == "exp"
    assert parse_family("power:p=2.5").p == 2.5
    for bad in ("", "exp:p=1", "power", "power:q=2", "mems:p=abc", "weird"):
        with pytest.raises(FamilyDomainError):
            parse_family(bad)


def test_type_conditions_sampled():
    # regular families: smooth increasing convex, f(0)=1, superlinear;
    # singular family: increasing convex on [0,1), blows up at 1
    for fam in ALL_FAMILIES:
        ts = sample_points(fam)
        f, fp, fpp = evaluate(fam, ts)
        assert abs(fam.f(0.0) - 1.0) < 1e-15
        assert np.all(fp >= 0.0)
        assert np.all(fpp >= 0.0)
    for fam in REGULAR_FAMILIES:
        big = np.array([10.0, 50.0, 200.0])
        assert np.all(np.diff(fam.f(big) / big) > 0)  # superlinear growth
    assert mems(2.0).f(1.0 - 1e-8) > 1e15


# ---------------------------------------------------------------------------
# auxiliary g
# ---------------------------------------------------------------------------


def test_g_zero_everywhere():
    for fam in ALL_FAMILIES:
        if fam.kind == "mems" and fam.p <= 1.0:
            continue
        assert g_aux(fam, 0.0) == 0.0


def test_g_exponential_at_one():
    val = g_aux(exponential(), 1.0)
    oracle = g_quadrature(exponential(), 1.0)  # sqrt(2)*sqrt(e-2)
    assert abs(val - oracle) <= 1e-10 * oracle
    assert abs(val - math.sqrt(2.0) * math.sqrt(math.e - 2.0)) < 1e-14


def test_g_mems_three_at_half():
    # sqrt(2/(p-1)) ((1-t)^(-(p-1)/2) - 1) with p=3, t=1/2 gives exactly 1
    assert abs(g_aux(mems(3.0), 0.5) - 1.0) < 1e-14


def test_g_closed_form_matches_quadrature():
    rng = np.random.default_rng(7)
    for fam in [exponential(), power(2.0), power(4.0)]:
        ts = np.concatenate([rng.uniform(0.0, 8.0, 80), np.logspace(-4, 0, 20)])
        for t in ts:
            oracle = g_quadrature(fam, float(t))
            assert abs(g_aux(fam, float(t)) - oracle) <= 1e-10 * max(oracle, 1e-30)
    for fam in [mems(1.5), mems(2.0), mems(3.0)]:
        ts = rng.uniform(0.0, 0.999, 100)
        for t in ts:
            oracle = g_quadrature(fam, float(t))
            # the singular-family g is a comparison function, not the defining
            # integral; it still must dominate zero and match its own closed form
            val = g_aux(fam, float(t))
            assert val >= 0.0
            p = fam.p
            direct = math.sqrt(2.0 / (p - 1.0)) * ((1.0 - t) ** (-(p - 1.0) / 2.0) - 1.0)
            assert abs(val - direct) <= 1e-12 * max(direct, 1.0)


def test_g_requires_admissible_range():
    with pytest.raises(FamilyDomainError):
        g_aux(exponential(), -0.5)
    with pytest.raises(FamilyDomainError):
        g_aux(mems(0.5), 0.2)  # needs p > 1
    with pytest.raises(FamilyDomainError):
        g_aux(mems(2.0), 1.0)


# ---------------------------------------------------------------------------
# auxiliary H
# ---------------------------------------------------------------------------


def test_H_zero():
    for fam in [exponential(), power(2.0), mems(2.0)]:
        assert H_aux(fam, 0.0) == 0.0


def test_H_exponential_quadrature_oracle():
    # two Simpson refinement levels agree, then pin H_aux against them
    coarse = h_simpson(exponential(), 1.0, 400)
    fine = h_simpson(exponential(), 1.0, 800)
    assert abs(fine - coarse) <= 1e-10 * abs(fine)
    assert abs(H_aux(exponential(), 1.0) - fine) <= 1e-9 * abs(fine)


def test_H_mems_closed_form_matches_quadrature():
    # 102 sampled points across three exponents
    for p in (1.5, 2.0, 3.0):
        fam = mems(p)
        for t in np.linspace(0.005, 0.9, 34):
            oracle, _ = quad(
                lambda s: fam.fpp(s) * g_aux(fam, s), 0.0, t, epsabs=1e-14, epsrel=1e-12
            )
            assert abs(H_aux(fam, float(t)) - oracle) <= 1e-10 * max(abs(oracle), 1.0)


def test_H_power_matches_simpson():
    fam = power(2.0)
    fine = h_simpson(fam, 2.0, 800)
    assert abs(H_aux(fam, 2.0) - fine) <= 1e-9 * abs(fine)


def test_h_grid_consistent_with_scalar():
    rng = np.random.default_rng(3)
    for fam in [exponential(), power(2.0), mems(2.0)]:
        hi = 0.9 if fam.kind == "mems" else 3.0
        vals = rng.uniform(0.0, hi, 40)
        vals[5] = vals[11]  # duplicates must not break the incremental path
        grid_vals = h_aux_grid(fam, vals)
        for t, hv in zip(vals, grid_vals):
            assert abs(hv - H_aux(fam, float(t))) <= 1e-9 * max(abs(hv), 1.0)


def test_g_and_H_nondecreasing():
    for fam in [exponential(), power(2.0), mems(2.0)]:
        hi = 0.99 if fam.kind == "mems" else 6.0
        ts = np.linspace(0.0, hi, 50)
        gs = np.array([g_aux(fam, t) for t in ts])
        hs = h_aux_grid(fam, ts)
        assert np.all(np.diff(gs) >= -1e-14)
        assert np.all(np.diff(hs) >= -1e-14)


# ---------------------------------------------------------------------------
# hypotheses of the pointwise-bound comparison function
# ---------------------------------------------------------------------------


def fd_derivative(func, t):
    # step balances truncation against rounding for a second-order difference
    h = np.cbrt(np.finfo(float).eps) * max(1.0, abs(t))
    return (func(t + h) - func(t - h)) / (2.0 * h)


def test_comparison_function_hypotheses():
    # f >= g g', g >= 0, g' >= 0, g'' >= 0 on a log-spaced sample
    for fam in ALL_FAMILIES:
        if fam.kind == "mems" and fam.p <= 1.0:
            continue
        ts = sample_points(fam, 40)
        lo = 1e-3 if fam.kind != "mems" else 1e-3
        ts = ts[(ts > lo) & (ts < (0.999 if fam.kind == "mems" else np.inf))]
        gf = lambda t: g_aux(fam, float(t))
        for t in ts:
            g = gf(t)
            gp = fd_derivative(gf, t)
            gpp = fd_derivative(lambda s: fd_derivative(gf, s), t)
            slack = 1e-5 * max(1.0, abs(fam.f(t)))
            assert g >= -1e-12
            assert gp >= -1e-6 * max(1.0, g)
            assert gpp >= -1e-3 * max(1.0, abs(gp))
            assert fam.f(t) - g * gp >= -slack


def test_fundamental_ratio_bound():
    # f'(u) (int_0^u f)^(1/2) >= (f^(3/2)(u) - 1) / (sqrt(6) (sqrt(u) + 1))
    for fam in REGULAR_FAMILIES:
        for u in np.concatenate([np.linspace(0.01, 5.0, 30), [10.0, 20.0]]):
            F, _ = quad(fam.f, 0.0, u, epsabs=1e-13, epsrel=1e-12)
            lhs = fam.fp(u) * math.sqrt(F)
            rhs = (fam.f(u) ** 1.5 - 1.0) / (math.sqrt(6.0) * (math.sqrt(u) + 1.0))
            assert lhs >= rhs * (1.0 - 1e-12)


def test_derivative_growth_bound():
    # f'(u) <= C0 f^gamma(u) with C0 = max(1, f'(M)/f^gamma(M)) at M = 0
    for fam in REGULAR_FAMILIES:
        gamma = gamma_limits(fam).gamma_limsup
        c0 = max(1.0, float(fam.fp(0.0)))
        for u in np.linspace(0.0, 20.0, 50):
            assert fam.fp(u) <= c0 * fam.f(u) ** gamma * (1.0 + 1e-12)


# ---------------------------------------------------------------------------
# curvature-ratio limits
# ---------------------------------------------------------------------------


def test_gamma_limits_values():
    assert gamma_limits(exponential()) == (1.0, 1.0, False)
    for p in (1.5, 2.0, 4.0):
        lims = gamma_limits(power(p))
        assert abs(lims.gamma_limsup - (1.0 - 1.0 / p)) < 1e-15
        assert lims.gamma_limsup == lims.delta_liminf
        assert not lims.singular
    for p in (1.5, 2.0, 3.0):
        lims = gamma_limits(mems(p))
        assert abs(lims.gamma_limsup - (p + 1.0) / p) < 1e-15
        assert lims.singular


def test_gamma_limits_match_sampled_ratio():
    # the ratio f f''/(f')^2 is constant for every family here; the exp
    # sample stays below the overflow threshold of the squared derivative
    for fam, t in [(exponential(), 300.0), (power(2.0), 1e6), (power(4.0), 1e6), (mems(2.0), 1.0 - 1e-9)]:
        f, fp, fpp = evaluate(fam, t)
        ratio = f * fpp / fp**2
        assert abs(ratio - gamma_limits(fam).gamma_limsup) < 1e-8
