"""Acceptance checks, one test per criterion.

Each test records a PASS/FAIL line (printed in the terminal summary) and
asserts the same condition. Operating points and seeds are fixed up front.
"""

import math
import os

import numpy as np

from conftest import record
from polarest.channels import AWGN, BEC, BSC
from polarest.construction import (ConstructionConfig, construct_bhattacharyya, construct_ga,
                                   construct_sc_optimized, construct_scl_optimized, import_sequence)
from polarest.core import CRC16, CodeSpec, crc_check, crc_compute, polar_transform
from polarest.decoders import DscfConfig, sc_decode, scl_decode
from polarest.estimators import (StopRule, convergence_runs, estimate, exact_sc_bler,
                                 exhaustive_estimates, sc_sample_terms, scl_sample_terms)
from polarest.harness.experiment import (DecoderConfig, binomial_half_width, flip_profile,
                                         monte_carlo, paired_comparison, paired_errors,
                                         run_bler_sweep, ExperimentConfig)
from polarest.rng import stream

WORKERS = int(os.environ.get("POLAREST_WORKERS", "1"))


def test_criterion_1_exhaustive_oracle():
    rng = np.random.default_rng(2024)
    channels = (BSC(0.05), BSC(0.1), BEC(0.3))
    total = exact_ok = bound_ok = 0
    worst = 0.0
    for N in (4, 8, 16):
        for K in sorted({max(1, N // 4), N // 2, 3 * N // 4}):
            for _ in range(3):
                info = rng.choice(np.arange(1, N + 1), K, replace=False)
                spec = CodeSpec.from_info_set(N, info)
                for ch in channels:
                    exact = exact_sc_bler(spec, ch)
                    genie = math.fsum(exhaustive_estimates(spec, ch, "genie"))
                    prac = math.fsum(exhaustive_estimates(spec, ch, "practical"))
                    total += 1
                    exact_ok += abs(genie - exact) <= 1e-10
                    bound_ok += prac >= genie
                    worst = max(worst, abs(genie - exact))
    passed = exact_ok == total and bound_ok == total
    record(1, passed, f"genie==exact (1e-10) in {exact_ok}/{total} cases, practical>=genie in "
                      f"{bound_ok}/{total}; worst |genie-exact| = {worst:.3e}")
    assert passed


def test_criterion_2_estimator_vs_mc():
    spec = construct_ga(ConstructionConfig(128, 64, AWGN(1.0), "ga"))
    res = estimate(spec, AWGN(1.0), "sc", stop=StopRule(100, 10**7), seed=11, workers=WORKERS)
    half = binomial_half_width(res.errors, res.n)
    gap = abs(res.bler_estimate - res.bler_mc)
    in_range = 1e-3 <= res.bler_mc <= 1e-2
    passed = res.errors >= 100 and in_range and gap <= half
    record(2, passed, f"(128,64) GA @1.0 dB: n={res.n}, errors={res.errors}, MC={res.bler_mc:.4e}, "
                      f"estimator={res.bler_estimate:.4e}, |diff|={gap:.2e} vs half-width {half:.2e}")
    assert passed


def test_criterion_3_variance_reduction():
    spec = import_sequence("5g", 256, 128)
    ch = AWGN(1.5)
    grid = [100, 1000, 10000]
    runs = 20
    est, mc = convergence_runs(spec, ch, "sc", grid, runs, seed=31, chunk_size=1000, workers=WORKERS)
    # independent reference stream (path 1000) so it shares nothing with the runs
    n_ref, e_ref, _ = monte_carlo(spec, ch, DecoderConfig(), StopRule(500, 3 * 10**7), 31, (1000,),
                                  chunk_size=10000, workers=WORKERS)
    p_ref = e_ref / n_ref
    se_ref = math.sqrt(p_ref * (1 - p_ref) / n_ref)
    parts, ok = [], True
    for k, g in enumerate(grid):
        s_est, s_mc = est[:, k].std(ddof=1), mc[:, k].std(ddof=1)
        m_est, m_mc = est[:, k].mean(), mc[:, k].mean()
        se_e = math.hypot(s_est / math.sqrt(runs), se_ref)
        se_m = math.hypot(s_mc / math.sqrt(runs), se_ref)
        c_std = s_est < s_mc
        c_est = abs(m_est - p_ref) <= 3 * se_e
        c_mc = abs(m_mc - p_ref) <= 3 * se_m
        ok &= c_std and c_est and c_mc
        parts.append(f"n={g}: std est/mc {s_est:.2e}/{s_mc:.2e} [{'ok' if c_std else 'x'}], "
                     f"mean est {m_est:.3e} [{'ok' if c_est else 'x'}], mean mc {m_mc:.3e} "
                     f"[{'ok' if c_mc else 'x'}]")
    record(3, ok, f"ref {p_ref:.3e} ({e_ref} errors / {n_ref}); " + "; ".join(parts))
    assert ok


def test_criterion_4_mdscf():
    spec = import_sequence("5g", 256, 144, CRC16)
    res, sets = flip_profile(spec, AWGN(-2.0), [0.001], StopRule(1000, 10**6), 11, workers=WORKERS)
    cand = sets[0.001]
    dscf = DecoderConfig("dscf", dscf=DscfConfig(10))
    mdscf = DecoderConfig("dscf", dscf=DscfConfig(10, gamma=0.001, candidate_set=tuple(cand)),
                          gamma=0.001)
    flags = paired_errors([spec, spec], AWGN(-0.5), [dscf, mdscf], StopRule(300, 10**6), 41,
                          workers=WORKERS)
    cmp = paired_comparison(flags[0], flags[1])
    bler = cmp.errors_a / cmp.n
    c_size = len(cand) <= 40
    c_range = 1e-2 <= bler <= 1e-1
    c_match = cmp.low <= 0.0 <= cmp.high
    passed = c_size and c_range and c_match
    record(4, passed, f"|candidates| = {len(cand)}/144 at gamma=0.001; DSCF vs MDSCF @-0.5 dB: "
                      f"{cmp.errors_a} vs {cmp.errors_b} errors over {cmp.n}, DSCF BLER {bler:.3e}, "
                      f"diff {cmp.diff:.2e} in [{cmp.low:.2e}, {cmp.high:.2e}]")
    assert passed


def test_criterion_5_construction_dominance():
    small_total = small_ok = 0
    for N in (8, 16):
        for K in (N // 4, N // 2, 3 * N // 4):
            for ch in (BSC(0.05), BSC(0.1), BEC(0.3)):
                opt = construct_sc_optimized(ConstructionConfig(N, K, ch, stop=StopRule(1000, 2 * 10**6),
                                                                seed=0, workers=WORKERS))
                bh = construct_bhattacharyya(ConstructionConfig(N, K, ch, "bhattacharyya"))
                small_total += 1
                small_ok += exact_sc_bler(opt, ch) <= exact_sc_bler(bh, ch)
    ch = BSC(0.05)
    opt = construct_sc_optimized(ConstructionConfig(64, 32, ch, stop=StopRule(1000, 10**6), seed=0,
                                                    workers=WORKERS))
    bh = construct_bhattacharyya(ConstructionConfig(64, 32, ch, "bhattacharyya"))
    sc = DecoderConfig()
    flags = paired_errors([opt, bh], ch, [sc, sc], StopRule(300, 10**7), 51, workers=WORKERS)
    cmp = paired_comparison(flags[0], flags[1])
    differ = sorted(set(opt.info_set) ^ set(bh.info_set))
    c_small = small_ok == small_total
    c_big = min(cmp.errors_a, cmp.errors_b) >= 300 and cmp.high < 0
    passed = c_small and c_big
    record(5, passed, f"exhaustive N=8/16: opt <= bhattacharyya in {small_ok}/{small_total}; "
                      f"(64,32) BSC 0.05: {cmp.errors_a} (opt) vs {cmp.errors_b} (bhatta) errors over "
                      f"{cmp.n}, diff {cmp.diff:.2e} in [{cmp.low:.2e}, {cmp.high:.2e}], "
                      f"sets differ at {differ}")
    assert passed


def test_criterion_6_scl():
    # L=1 degeneracy over 10^4 random trials
    spec = import_sequence("5g", 64, 32)
    rng = stream(61)
    llr = rng.normal(1.0, 1.5, size=(10_000, 64))
    sc = sc_decode(llr, spec)
    scl = scl_decode(llr, spec, 1)
    same = np.array_equal(sc.u_hat, scl.u_hat)
    tdiff = float(np.max(np.abs(scl_sample_terms(scl, spec) - sc_sample_terms(sc, spec))))
    # monotonicity in L on shared samples
    ch = AWGN(1.0)
    decs = [DecoderConfig("scl", L) for L in (1, 2, 4, 8)]
    flags = paired_errors([spec] * 4, ch, decs, StopRule(None, 20_000), 62, workers=WORKERS)
    errs = flags.sum(axis=1).tolist()
    mono = all(paired_comparison(flags[k + 1], flags[k]).low <= 0 for k in range(3))
    # SCL-optimized vs 5G at the design point, L=2
    opt = construct_scl_optimized(ConstructionConfig(64, 32, ch, "scl_opt", list_size=2,
                                                     stop=StopRule(100, 10**6), seed=0,
                                                     workers=WORKERS))
    d2 = DecoderConfig("scl", 2)
    pf = paired_errors([opt, spec], ch, [d2, d2], StopRule(300, 10**7), 63, workers=WORKERS)
    cmp = paired_comparison(pf[0], pf[1])
    noninf = min(cmp.errors_a, cmp.errors_b) >= 300 and cmp.low <= 0
    passed = same and tdiff <= 1e-12 and mono and noninf
    record(6, passed, f"SCL(1)==SC: {same}; max term diff {tdiff:.1e}; errors L=1,2,4,8 over 2e4: "
                      f"{errs} (non-increasing within 99%: {mono}); SCL-opt vs 5G L=2: "
                      f"{cmp.errors_a} vs {cmp.errors_b} over {cmp.n}, diff {cmp.diff:.2e} in "
                      f"[{cmp.low:.2e}, {cmp.high:.2e}], non-inferior: {noninf}")
    assert passed


def test_criterion_7_properties(tmp_path):
    checks = {}
    rng = np.random.default_rng(7)
    ok = True
    for n in range(1, 11):
        u = rng.integers(0, 2, (20, 1 << n), dtype=np.uint8)
        v = rng.integers(0, 2, (20, 1 << n), dtype=np.uint8)
        ok &= np.array_equal(polar_transform(polar_transform(u)), u)
        ok &= np.array_equal(polar_transform(u ^ v), polar_transform(u) ^ polar_transform(v))
    checks["encode"] = ok
    ok = True
    for _ in range(20):
        msg = rng.integers(0, 2, 64, dtype=np.uint8)
        block = np.concatenate([msg, crc_compute(msg, CRC16)])
        for k in range(block.size):
            bad = block.copy()
            bad[k] ^= 1
            ok &= not crc_check(bad, CRC16)
    checks["crc"] = ok
    spec = import_sequence("5g", 64, 32)
    llr = stream(71).normal(1.0, 1.5, size=(200, 64))
    ok = True
    for L in (2, 4, 8):
        m = scl_decode(llr, spec, L, record_metrics=True).stage_metrics
        rec = ~np.isnan(m[:, :, 0])
        ok &= bool(np.all(m[:, :, :L][rec].max(axis=1) <= m[:, :, L:][rec].min(axis=1)))
    checks["pruning"] = ok
    sc = sc_decode(llr, spec)
    pm = np.sum(np.logaddexp(0.0, -(1 - 2 * sc.u_hat.astype(float)) * sc.decision_llrs), axis=1)
    checks["path_metric"] = bool(np.allclose(scl_decode(llr, spec, 1).path_metrics[:, 0], pm,
                                             rtol=1e-12, atol=1e-9))
    base = dict(N=32, channel=BSC(0.05), stop=StopRule(60, 10**5), seed=5)
    a = construct_sc_optimized(ConstructionConfig(K=16, **base))
    b = construct_sc_optimized(ConstructionConfig(K=15, **base))
    fa, fb = a.construction_params["freeze_order"], b.construction_params["freeze_order"]
    la = construct_scl_optimized(ConstructionConfig(K=16, list_size=2, **base))
    lb = construct_scl_optimized(ConstructionConfig(K=15, list_size=2, **base))
    checks["nested"] = (fb[:len(fa)] == fa and set(b.info_set) < set(a.info_set)
                        and set(lb.info_set) < set(la.info_set))
    specs = [import_sequence("5g", 32, 16), construct_bhattacharyya(
        ConstructionConfig(32, 16, BSC(0.05), "bhattacharyya"))]
    reps = [run_bler_sweep(ExperimentConfig(specs, "bsc", [0.05, 0.08], seed=9,
                                            stop=StopRule(40, 10**5), chunk_size=300, workers=w))
            for w in (1, 2, 3)]
    checks["workers"] = all(r.canonical() == reps[0].canonical() for r in reps[1:])
    passed = all(checks.values())
    record(7, passed, ", ".join(f"{k}: {'ok' if v else 'FAIL'}" for k, v in checks.items()))
    assert passed
