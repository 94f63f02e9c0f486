"""Acceptance criteria 1-10, each at its stated tolerance and runtime.

Every test records one PASS/FAIL line (shown in the terminal summary) and
then asserts the same condition, so a failed criterion fails its test.
"""

import math
import time

import numpy as np
import pytest

from bifurcat.continuation import (StepControl, continue_equilibrium, continue_hopf,
                                   cycle_family_sweep, find_limit_cycle, hopf_point_in,
                                   BifurcationEvent)
from bifurcat.equilibria import (classify_region, coexistence_cubic, coexistence_equilibria,
                                 kappa2_pm, lift, newton_polish, s123_point, thresholds)
from bifurcat.hopf import hopf_alphas, hopf_quadratic, kappa2_hat, nilpotent_kappa2
from bifurcat.lyapunov import first_lyapunov
from bifurcat.model import ModelParams, vector_field
from bifurcat.stability import char_coeffs_at, eigenvalues

from conftest import P1, P2, P3, P4, P1_EQ, hopf_equilibrium, report


def rel(a, b):
    return abs(a - b) / abs(b)


def match_triple(got, ref):
    """Max relative error after pairing each reference eigenvalue with the
    nearest computed one."""
    got = list(got)
    worst = 0.0
    for z in ref:
        k = int(np.argmin([abs(g - z) for g in got]))
        worst = max(worst, abs(got.pop(k) - z) / abs(z))
    return worst


def test_criterion_01_equilibrium():
    t0 = time.perf_counter()
    eqs = coexistence_equilibria(P1)
    eq = min(eqs, key=lambda e: np.linalg.norm(e.x - P1_EQ))
    x = newton_polish(P1, eq.x)
    res = float(np.max(np.abs(vector_field(P1, x))))
    err = float(np.max(np.abs(x - P1_EQ) / np.abs(P1_EQ)))
    dt = time.perf_counter() - t0
    ok = res < 1e-6 and err < 1e-9 and dt < 1.0
    report("criterion 1 (P1 equilibrium)", ok,
           f"residual {res:.2e}, max rel coord err {err:.2e}, {dt:.3f}s")
    assert ok


def test_criterion_02_eigenvalues():
    t0 = time.perf_counter()
    refs = {"P1": (P1, [-109.28094024998, 1.09824705073231j, -1.09824705073231j]),
            "P3": (P3, [-109.326162726243, 1.0910208605339j, -1.0910208605339j])}
    errs = {}
    for name, (p, ref) in refs.items():
        eq = hopf_equilibrium(p)
        errs[name] = match_triple(eigenvalues(p, eq), ref)
    dt = time.perf_counter() - t0
    ok = all(e < 1e-6 for e in errs.values()) and dt < 1.0
    report("criterion 2 (eigenvalues)", ok,
           ", ".join(f"{k} max rel err {v:.2e}" for k, v in errs.items()) + f", {dt:.3f}s")
    assert ok


def test_criterion_03_kappa2_hat():
    t0 = time.perf_counter()
    printed = {"P1": (P1, 0.0000801963), "P2": (P2, 0.000113965),
               "P3": (P3, 0.0000847597), "P4": (P4, 0.000117406)}
    errs = {}
    for name, (p, v) in printed.items():
        eq = hopf_equilibrium(p)
        errs[name] = rel(kappa2_hat(p, eq.E2), v)
    dt = time.perf_counter() - t0
    ok = all(e < 1e-3 for e in errs.values()) and dt < 1.0
    report("criterion 3 (kappa2_hat)", ok,
           ", ".join(f"{k} rel err {v:.2e}" for k, v in errs.items()) + f", {dt:.3f}s")
    assert ok


def test_criterion_04_h_identity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240601)
    worst = 0.0
    n = 0
    while n < 200:
        r1, r2 = rng.uniform(10, 80), rng.uniform(0.3, 3.0)
        k1 = rng.uniform(1, 40)
        a, c, m = rng.uniform(0.5, 2.0, 3)
        e2 = rng.uniform(0.02, 0.95) * r1 / k1
        M = (r1 - k1 * e2) * (a + e2) / m
        k2 = (r2 + c * m * e2 / (a + e2)) / M
        p = ModelParams(r1, r2, 1.0, k1, k2, a, c, m)
        q = hopf_quadratic(p, e2)
        for alpha in rng.uniform(0.5, 100.0, 5):
            pa = p.with_(alpha=alpha)
            cc = char_coeffs_at(pa, e2)
            ref = cc.A0 - cc.A1 * cc.A2
            worst = max(worst, abs(q(alpha) - ref) / cc.scale())
        n += 1
    dt = time.perf_counter() - t0
    ok = worst < 1e-8 and dt < 5.0
    report("criterion 4 (H identity)", ok, f"max |H - (A0 - A1A2)|/scale {worst:.2e} over "
           f"{n}x5 draws, {dt:.3f}s")
    assert ok


def test_criterion_05_hopf_by_continuation():
    t0 = time.perf_counter()
    start = P1.with_(kappa1=22.8)
    br = continue_equilibrium(start, lift(start, 0.5),
                              "kappa1", (22.5, 24.5), StepControl(h0=0.01, hmax=0.05))
    hs = [e for e in br.events if e.kind == "H"]
    dt = time.perf_counter() - t0
    target = 23.2197961461739
    ok = False
    detail = "no H event"
    if hs:
        h = min(hs, key=lambda e: abs(e.values["kappa1"] - target))
        c = h.certificates
        err = rel(h.values["kappa1"], target)
        ok = (err < 1e-5 and c["A1"] > 0 and abs(c["A0_minus_A1A2"]) < 1e-7
              and c["transversality_fd"] != 0 and math.isfinite(c["transversality_fd"])
              and dt < 30.0)
        detail = (f"H at kappa1 = {h.values['kappa1']:.12g} (rel err {err:.1e}), "
                  f"A1 = {c['A1']:.4g}, |A0-A1A2| = {abs(c['A0_minus_A1A2']):.1e}, "
                  f"fd transversality {c['transversality_fd']:.4g}, {dt:.2f}s")
    report("criterion 5 (Hopf by continuation)", ok, detail)
    assert ok


def test_criterion_06_criticality():
    t0 = time.perf_counter()
    paper = {"P1": (P1, 0.02036690), "P2": (P2, 0.004838562)}
    parts, ok = [], True
    for name, (p, v) in paper.items():
        l1, nf = first_lyapunov(p, hopf_equilibrium(p))
        ok &= l1 > 0
        # diagnostic only: the printed value compares with Re c1 = l1 * omega
        parts.append(f"{name} l1 = {l1:.6g} (Re c1 = {nf.re_c1:.8g}, printed {v}, "
                     f"rel diff {rel(nf.re_c1, v):.1e})")
    dt = time.perf_counter() - t0
    ok = bool(ok) and dt < 5.0
    report("criterion 6 (criticality signs)", ok, "; ".join(parts) + f", {dt:.2f}s")
    assert ok


def _hopf_start_at(p):
    """Hopf alpha at the kappa's of p and the matching equilibrium."""
    best = None
    for e in coexistence_equilibria(p):
        for a in hopf_alphas(hopf_quadratic(p, e.E2)).admissible:
            if char_coeffs_at(p.with_(alpha=a), e.E2).A1 > 0:
                if best is None or abs(a - p.alpha) < abs(best[0] - p.alpha):
                    best = (a, e.E2)
    a, e2 = best
    q = p.with_(alpha=a)
    return q, lift(q, e2)


def test_criterion_07_bautin():
    t0 = time.perf_counter()
    bounds = {"alpha": (20.0, 80.0), "kappa1": (15.0, 30.0)}
    ghs = []
    for p in (P3, P2):
        q, x = _hopf_start_at(p)
        for d in (1, -1):
            br = continue_hopf(q, x, ("alpha", "kappa1"), bounds, direction=d)
            ghs += [e for e in br.events if e.kind == "GH"]
    dt = time.perf_counter() - t0
    targets = [((53.1351, 24.665343), -1), ((34.332136490836, 24.806008381396), +1)]
    ok = dt < 120.0
    parts = []
    for (ta, tk), sign in targets:
        near = [g for g in ghs if rel(g.values["alpha"], ta) < 1e-2
                and rel(g.values["kappa1"], tk) < 1e-2]
        hit = [g for g in near if np.sign(g.certificates["l2"]) == sign]
        ok &= bool(hit)
        parts.append(f"target ({ta}, {tk}) l2 {'<' if sign < 0 else '>'} 0: "
                     f"{'found' if hit else 'not found'}")
    found = ", ".join(f"GH({g.values['alpha']:.6f}, {g.values['kappa1']:.6f}; "
                      f"l2 = {g.certificates['l2']:.3e})" for g in ghs)
    report("criterion 7 (Bautin localization)", bool(ok),
           "; ".join(parts) + f"; located {found}; {dt:.1f}s")
    assert ok


def test_criterion_08_unstable_cycle():
    t0 = time.perf_counter()
    h = hopf_point_in(P1, "kappa1", (23.1, 23.3))
    cyc = find_limit_cycle(P1, h, -1e-3, "kappa1", reverse=True)
    mu_max = float(np.max(np.abs(cyc.nontrivial_multipliers)))
    amps = {}
    for off in (1e-4, 4e-4, 1.6e-3):
        amps[off] = find_limit_cycle(P1, h, -off, "kappa1", reverse=True).amplitude
    r1 = amps[4e-4] / amps[1e-4] / 2.0
    r2 = amps[1.6e-3] / amps[4e-4] / 2.0
    dt = time.perf_counter() - t0
    ok = (cyc.closure < 1e-8 and mu_max > 1.0 and abs(r1 - 1) < 0.2 and abs(r2 - 1) < 0.2
          and dt < 60.0)
    report("criterion 8 (unstable cycle)", ok,
           f"period {cyc.period:.6g}, closure {cyc.closure:.1e}, multiplier {mu_max:.6f}, "
           f"amplitude ratios / 2 = {r1:.4f}, {r2:.4f}, {dt:.1f}s")
    assert ok


def _brute_count(p):
    roots = np.roots(coexistence_cubic(p))
    n = 0
    for z in roots:
        if abs(z.imag) <= 1e-9 * max(1.0, abs(z)) and z.real > 0:
            x = lift(p, z.real)
            n += int(x[0] > 0 and x[2] > 0)
    return n


def test_criterion_09_region_map():
    t0 = time.perf_counter()
    th = thresholds(P1)
    k1s = np.linspace(21.0, 26.5, 50)
    k2s = np.linspace(0.0262, 0.0272, 50)
    band = 1e-6
    checked = skipped = 0
    bad = []
    for k1 in k1s:
        pm = kappa2_pm(P1.with_(kappa1=float(k1)))
        curves = [th.kappa2_bar] + (list(pm) if pm else [])
        for k2 in k2s:
            p = P1.with_(kappa1=float(k1), kappa2=float(k2))
            region = classify_region(p)
            if region.count is None or any(abs(k2 - c) <= band * c for c in curves):
                skipped += 1
                continue
            checked += 1
            if region.count != _brute_count(p):
                bad.append((k1, k2, region.value, _brute_count(p)))
    dt = time.perf_counter() - t0
    ok = not bad and dt < 30.0
    report("criterion 9 (region map)", ok, f"{checked} grid points agree, {skipped} in the "
           f"boundary band, {len(bad)} mismatches, {dt:.2f}s")
    assert ok


def test_criterion_10_nilpotent_thresholds():
    t0 = time.perf_counter()
    eq = hopf_equilibrium(P1)
    kt, _ = nilpotent_kappa2(P1, eq.E2)
    cc = char_coeffs_at(P1.with_(kappa2=kt), eq.E2)
    a0_rel = abs(cc.A0) / cc.scale()
    e2s, k1s, k2s = s123_point(P1)
    _, k2_from_formula = nilpotent_kappa2(P1.with_(kappa1=k1s), e2s)
    err = rel(k2_from_formula, k2s)
    dt = time.perf_counter() - t0
    ok = a0_rel < 1e-8 and err < 1e-10 and dt < 1.0
    report("criterion 10 (nilpotent thresholds)", ok,
           f"|A0|/scale at kappa2_tilde = {a0_rel:.2e}; kappa2(S123) at (E2*, kappa1*) "
           f"rel err {err:.1e}; {dt:.3f}s")
    assert ok


def test_lpc_near_p4():
    """At least one LPC in a cycle-family sweep near P4 (stand-in for the
    multiple-cycle figure)."""
    t0 = time.perf_counter()
    eq = [e for e in coexistence_equilibria(P2) if e.label == "S3"][0]
    br = continue_hopf(P2, eq.x, ("alpha", "kappa1"), {"alpha": (20, 80), "kappa1": (15, 30)},
                       step=StepControl(h0=0.01, hmax=0.02), direction=-1)
    # a Hopf point between P2 and the GH point, with small positive l1
    pt = min((b for b in br.points if math.isfinite(b.l1) and b.l1 > 0),
             key=lambda b: abs(b.l1 - 5.5e-4))
    q = P2.with_(alpha=pt.values[0], kappa1=pt.values[1])
    h = BifurcationEvent("H", 0.0, {"alpha": pt.values[0]}, pt.x, q)
    cyc = find_limit_cycle(q, h, -1e-7, "alpha")
    fam = cycle_family_sweep(q, cyc, "alpha", (pt.values[0] - 1, pt.values[0] + 1),
                             StepControl(h0=1e-3, hmin=1e-10, hmax=0.02), direction=-1,
                             max_points=150, stop_after_lpc=1)
    lpc = [e for e in fam.events if e.kind == "LPC"]
    dt = time.perf_counter() - t0
    ok = bool(lpc)
    detail = (f"LPC at alpha = {lpc[0].values['alpha']:.8f} (kappa1 = {pt.values[1]:.8f}, "
              f"period {lpc[0].certificates['period']:.4f}), {dt:.1f}s" if lpc else
              f"no LPC in {len(fam.points)} points, {dt:.1f}s")
    report("LPC near P4 (supplementary)", ok, detail)
    assert ok


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(pytest.main([__file__, "-v"]))
