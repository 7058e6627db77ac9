"""Tests for exponent-window validation and the Monte Carlo reports."""

import math
from fractions import Fraction

import numpy as np
import pytest

from coblim.counterexamples import build_tower_counterexample
from coblim.mc_harness import (
    SHIFT_FUNCTIONS,
    THEOREM_IDS,
    ExperimentConfig,
    clt_lil_report,
    condition16_report,
    condition17_report,
    ks_statistic,
    slln_report,
    validate_hypotheses,
)


# ---------------------------------------------------------------------------
# exponent windows (exact rational arithmetic)
# ---------------------------------------------------------------------------

def test_theorem_ids_frozen():
    assert THEOREM_IDS == ("2.1", "2.4i", "2.4ii", "2.7", "2.10", "2.11")


def test_window_210_at_reference_exponents():
    rep = validate_hypotheses({"p": 1.2, "r": 4}, "2.10")
    assert rep.all_passed
    lo, hi = rep.context["window"]
    assert float(lo) == pytest.approx(1.0 / 3.0)
    assert float(hi) == pytest.approx(0.4)
    # margins are exact: feasibility gap = (r/(r-1) - p)/2
    assert rep.context["feasibility_gap"] == Fraction(1, 15)


def test_window_211_at_reference_exponents():
    rep = validate_hypotheses({"q": 1.1, "p": 1.8, "r": 3}, "2.11")
    assert rep.all_passed
    lo, hi = rep.context["window"]
    assert float(lo) == pytest.approx(1.0 / 3.0)
    assert float(hi) == pytest.approx(0.38888888888888888)


def test_window_210_infeasible_exponents():
    rep = validate_hypotheses({"p": 1.5, "r": 4}, "2.10")
    assert not rep.all_passed
    failed = {c.name for c in rep.checks if not c.passed}
    assert "p < r/(r-1)" in failed
    assert "window nonempty" in failed


def test_window_24i_open_iff_p_large():
    # p > r/(r-1) makes (2/p - 1, 1 - 2/r) nonempty; below it, empty
    good = validate_hypotheses({"p": 1.5, "r": 4}, "2.4i")
    assert good.all_passed
    bad = validate_hypotheses({"p": 1.2, "r": 4}, "2.4i")
    assert not bad.all_passed


def test_window_24ii_boundary_case():
    rep = validate_hypotheses({"p": Fraction(4, 3), "r": 4}, "2.4ii")
    assert rep.all_passed  # 4/3 = r/(r-1) exactly, caught in rationals
    off = validate_hypotheses({"p": 1.34, "r": 4}, "2.4ii")
    assert not off.all_passed


def test_window_27_needs_q_at_least_bound():
    ok = validate_hypotheses({"q": 1.5, "p": 1.8, "r": 1.9}, "2.7")
    bound = (Fraction(18, 10) - 1) * Fraction(19, 10) / (Fraction(19, 10) - 1)
    assert ok.context["(p-1)r/(r-1)"] == pytest.approx(float(bound))
    low_q = validate_hypotheses({"q": 1.0, "p": 1.8, "r": 1.9}, "2.7")
    failed = {c.name for c in low_q.checks if not c.passed}
    assert "q >= (p-1)r/(r-1)" in failed


def test_window_21_alpha_interval():
    rep = validate_hypotheses({"p": 1.5}, "2.1")
    lo, hi = rep.context["alpha_window"]
    assert float(lo) == pytest.approx(0.25)  # 1 - p/2
    # default r = p/(p-1) = 3 makes the window degenerate: hi = lo
    assert float(hi) == pytest.approx(0.25)
    assert rep.all_passed


def test_unknown_theorem_rejected():
    with pytest.raises(ValueError, match="unknown theorem id"):
        validate_hypotheses({"p": 1.5}, "9.9")


def test_missing_exponent_message():
    with pytest.raises(ValueError, match="r"):
        validate_hypotheses({"p": 1.2}, "2.10")


# ---------------------------------------------------------------------------
# configuration validation
# ---------------------------------------------------------------------------

def test_config_rejects_bad_system():
    with pytest.raises(ValueError, match="unknown system"):
        ExperimentConfig(system="torus", horizons=(64,), paths=200, seed=1)


def test_config_rejects_unsorted_horizons():
    with pytest.raises(ValueError, match="strictly increasing"):
        ExperimentConfig(system="shift", horizons=(64, 64), paths=200, seed=1)


def test_config_rejects_thin_sampling():
    with pytest.raises(ValueError, match="at least 100 paths"):
        ExperimentConfig(system="shift", horizons=(64,), paths=50, seed=1)


def test_config_odometer_horizon_guard():
    with pytest.raises(ValueError, match="too long"):
        ExperimentConfig(system="odometer", horizons=(4096,), paths=200, seed=1, bits=12)


def test_config_resolves_named_shift_functions():
    cfg = ExperimentConfig(
        system="shift", horizons=(64,), paths=200, seed=1, transfer="cosine"
    )
    assert cfg.transfer is SHIFT_FUNCTIONS["cosine"]
    with pytest.raises(ValueError, match="unknown shift function"):
        ExperimentConfig(
            system="shift", horizons=(64,), paths=200, seed=1, transfer="sine"
        )


def test_config_alpha_defaults_to_reciprocal_p():
    cfg = ExperimentConfig(
        system="shift", horizons=(64,), paths=200, seed=1, p=1.6
    )
    assert cfg.resolved_alpha() == pytest.approx(1 / 1.6)
    cfg_bad = ExperimentConfig(
        system="shift", horizons=(64,), paths=200, seed=1, p=1.6, alpha=0.5
    )
    with pytest.raises(ValueError, match="outside"):
        cfg_bad.resolved_alpha()


# ---------------------------------------------------------------------------
# condition16: Monte Carlo against the exact residue count
# ---------------------------------------------------------------------------

def odometer_config(**kw):
    cex = build_tower_counterexample("ip_lil", p=1.2, r=4.0, i_max=12, bits=14)
    base = dict(
        system="odometer", horizons=(64, 256), paths=600, seed=3,
        epsilons=(0.5, 2.0), p=1.2, r=4.0, transfer=cex, bits=14,
    )
    base.update(kw)
    return ExperimentConfig(**base)


def test_condition16_estimates_within_three_sigma_of_exact():
    report = condition16_report(odometer_config())
    assert len(report.rows) == len(report.exact_rows) == 4
    for row, ex in zip(report.rows, report.exact_rows):
        exact = float(ex["exact_prob"])
        se = math.sqrt(max(exact * (1 - exact), 1e-12) / row["paths"])
        assert abs(row["estimate"] - exact) <= 3 * se + 1e-12
        assert isinstance(ex["exact_prob"], Fraction)


def test_condition16_tower_bound_is_a_lower_bound():
    # g >= g_i >= 0 pointwise, so the single-tower probability cannot exceed
    # the full-g probability
    report = condition16_report(odometer_config())
    for ex in report.exact_rows:
        assert ex["tower_bound"] <= ex["exact_prob"]


def test_condition16_deterministic_across_workers():
    a = condition16_report(odometer_config(workers=1)).to_dict()
    b = condition16_report(odometer_config(workers=3)).to_dict()
    assert a == b  # the config echo never includes the worker count


def test_condition16_shift_needs_transfer():
    cfg = ExperimentConfig(system="shift", horizons=(64,), paths=200, seed=1)
    with pytest.raises(ValueError, match="needs a transfer function"):
        condition16_report(cfg)


def test_condition16_shift_bounded_g_never_violates():
    # bounded g: max |g| <= sup g < eps sqrt(n) for large eps, estimate = 0
    cfg = ExperimentConfig(
        system="shift", horizons=(256,), paths=200, seed=5,
        epsilons=(4.0,), transfer="cosine",
    )
    report = condition16_report(cfg)
    assert report.rows[0]["estimate"] == 0.0


def test_condition17_and_slln_reports_run():
    cfg = odometer_config(horizons=(64, 256), alpha=1.0, q=None)
    r17 = condition17_report(cfg)
    assert r17.rows and r17.verdicts
    cex = build_tower_counterexample("slln", p=1.8, r=3.0, q=1.1, i_max=12, bits=14)
    cfg_s = ExperimentConfig(
        system="odometer", horizons=(64, 256), paths=300, seed=4,
        p=1.8, q=1.1, r=3.0, transfer=cex, bits=14,
    )
    rs = slln_report(cfg_s)
    assert rs.rows and rs.verdicts
    for row in rs.rows:
        assert math.isfinite(row["estimate"]) or row["estimate"] >= 0


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov distance and the CLT/LIL diagnostics
# ---------------------------------------------------------------------------

def test_ks_statistic_single_point():
    # one sample at 0: empirical CDF jumps 0 -> 1 there, Phi(0) = 1/2
    assert ks_statistic(np.array([0.0])) == pytest.approx(0.5)


def test_ks_statistic_large_normal_sample_small():
    z = np.random.default_rng(0).standard_normal(20000)
    assert ks_statistic(z) < 0.02


def test_ks_statistic_detects_wrong_scale():
    z = 3.0 * np.random.default_rng(1).standard_normal(5000)
    assert ks_statistic(z) > 0.2


def test_clt_report_pure_martingale():
    cfg = ExperimentConfig(
        system="shift", horizons=(128, 512), paths=400, seed=9,
    )
    report = clt_lil_report(cfg)
    assert report.sigma == 1.0
    assert [row["n"] for row in report.rows] == [128, 512]
    for row in report.rows:
        assert 0 <= row["ks_distance"] <= 1
        assert row["sup_q50"] <= row["sup_q90"] <= row["sup_q99"]
    assert report.limsup["tail_window"][1] == 512


def test_clt_report_zero_martingale_estimates_sigma():
    cfg = ExperimentConfig(
        system="shift", horizons=(256,), paths=300, seed=2,
        martingale="zero", transfer="identity",
    )
    report = clt_lil_report(cfg)
    assert report.sigma > 0


def test_clt_report_degenerate_f_raises():
    cfg = ExperimentConfig(
        system="shift", horizons=(128,), paths=200, seed=2,
        martingale="zero", transfer="zero",
    )
    with pytest.raises(ValueError, match="degenerate"):
        clt_lil_report(cfg)


def test_clt_bounded_transfer_moves_sums_at_most_two_sup():
    # f = m + g - g.T changes S_n by g(w) - g(T^n w): bounded by 2 sup|g|
    base = ExperimentConfig(system="shift", horizons=(256,), paths=300, seed=14)
    with_g = ExperimentConfig(
        system="shift", horizons=(256,), paths=300, seed=14, transfer="cosine",
    )
    r0 = clt_lil_report(base)
    r1 = clt_lil_report(with_g)
    sup_g = SHIFT_FUNCTIONS["cosine"].sup_bound
    n = 256
    # same seed, same martingale bits: scaled means differ by <= 2 sup|g|/sqrt(n)
    assert abs(r1.rows[0]["mean"] - r0.rows[0]["mean"]) <= 2 * sup_g / math.sqrt(n)


def test_clt_requires_shift_system():
    cex = build_tower_counterexample("ip_lil", p=1.2, r=4.0, i_max=10, bits=12)
    cfg = ExperimentConfig(
        system="odometer", horizons=(64,), paths=200, seed=1, transfer=cex, bits=12
    )
    with pytest.raises(ValueError, match="shift system"):
        clt_lil_report(cfg)
