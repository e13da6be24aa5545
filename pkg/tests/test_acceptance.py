"""The thirteen acceptance criteria, each at its stated tolerance.

Every test prints one "PASS criterion N: ..." or "FAIL criterion N: ..." line
before asserting, so the outcome is visible even when pytest captures output.
"""

import filecmp
import math
import os
import subprocess
import sys
import time

from kuznetsov_numerics import arithmetic as ar
from kuznetsov_numerics import experiments as ex
from kuznetsov_numerics import special as sp
from kuznetsov_numerics.transforms import STANDARD_V, STANDARD_W


def report(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
    assert ok, detail


def failing(rep):
    return [c for c in rep.checks if not c.passed and not c.informational]


def test_criterion_01_residue_bijection(capsys):
    t0 = time.perf_counter()
    audit = ex.bijection_audit(20, 40)
    secs = time.perf_counter() - t0
    bad = sum(audit[k] for k in ("size_mismatch", "not_injective", "off_target", "bad_product"))
    report(capsys, 1, bad == 0 and secs < 5, f"{audit['cases']} cases, {bad} defects, {secs:.2f}s (limit 5s)")


def test_criterion_02_r_weights(capsys):
    t0 = time.perf_counter()
    worst = max(abs(math.fsum(ar.r_weight(n, d) for d in ar.divisors(n)) - 1) for n in range(1, 10_001))
    secs = time.perf_counter() - t0
    report(capsys, 2, worst <= 1e-12 and secs < 30, f"max |sum - 1| = {worst:.3g} (tol 1e-12), {secs:.1f}s (limit 30s)")


def test_criterion_03_ramanujan_sums(capsys):
    mismatches = sum(
        ar.ramanujan_closed(n, m) != ar.ramanujan_divisor(n, m) for n in range(1, 501) for m in range(-500, 501)
    )
    report(capsys, 3, mismatches == 0, f"{mismatches} mismatches over n <= 500, |m| <= 500")


def test_criterion_04_dirichlet_closed_forms(capsys):
    N = 100_000
    worst = -math.inf
    cases = 0
    for s in (1.5, 2.0, 3.0):
        for l, lp in ((1, 1), (3, 1), (2, 7), (10, 4)):
            trunc, closed = ar.dirichlet_series_check(l, lp, s, N)
            worst = max(worst, abs(trunc - closed) / ar.dirichlet_tail_bound(l - lp, s, N))
            cases += 1
        for n, d in ((12, 4), (30, 6), (7, 7), (360, 12)):
            trunc, closed = ar.phi_dirichlet_check(n, d, 0, s, N)
            worst = max(worst, abs(trunc - closed) / ar.dirichlet_tail_bound(0, s, N))
            cases += 1
    report(capsys, 4, worst <= 1, f"{cases} series, worst |error| / tail bound = {worst:.3g}")


def test_criterion_05_convolution_theorem(capsys):
    t0 = time.perf_counter()
    rep = ex.convolution_theorem_check(STANDARD_V, STANDARD_W)
    secs = time.perf_counter() - t0
    parts = [f"{c.name} err={c.measured:.2g}/{c.tolerance:g} ({c.detail})" for c in rep.checks]
    ok = rep.passed and secs < 600
    report(capsys, 5, ok, f"{secs:.0f}s; " + "; ".join(parts))


def test_criterion_06_route_consistency(capsys):
    rep = ex.route_consistency(STANDARD_V, STANDARD_W)
    parts = [
        f"{c.name}: diff={c.measured:.2g} bound={c.tolerance:.2g}{' (info)' if c.informational else ''}"
        for c in rep.checks
    ]
    report(capsys, 6, rep.passed, "; ".join(parts))


def test_criterion_07_watson(capsys):
    rep = ex.run_watson()
    bad = failing(rep)
    detail = f"{len(rep.checks) - len(bad)}/{len(rep.checks)} forms within tolerance"
    if bad:
        detail += "; failing: " + ", ".join(f"{c.name} err={c.measured:.2g}" for c in bad)
    report(capsys, 7, not bad, detail)


def test_criterion_08_sears_round_trip(capsys):
    rep = ex.run_sears(STANDARD_V, 30.0, 60, points=20, W=STANDARD_W)
    sup, pr5 = rep.checks
    parts = [f"{c.name} {c.measured:.3g} (tol {c.tolerance:.3g})" for c in (sup, pr5)]
    report(capsys, 8, sup.passed and pr5.passed, "; ".join(parts))


def test_criterion_09_diagonal_asymptotic(capsys):
    diag = ex.run_a0(1, 1, ladder=(100, 1000, 10_000))
    off = ex.run_a0(1, 2, ladder=(100, 1000, 10_000))
    slope = diag.metadata["fitted_exponent"]
    last = off.rows[-1]["abs_err"]
    ok = slope <= -0.5 and last <= 1e-3
    report(capsys, 9, ok, f"l=l'=1 exponent {slope:.3f} (need <= -0.5); l=1,l'=2 value at 1e4 {last:.3g} (need <= 1e-3)")


def test_criterion_10_limit_experiment(capsys):
    t0 = time.perf_counter()
    reps = [ex.run_limit(l, lp, ladder=(500, 1000, 2000, 4000, 8000), threads=8) for l, lp in ((1, 1), (1, 2))]
    secs = time.perf_counter() - t0
    parts = []
    for rep in reps:
        m = rep.metadata
        trend = next(c for c in rep.checks if c.name == "error decreasing along the ladder")
        parts.append(
            f"l={m['l']} l'={m['lp']} variant {m['winning_variant']} (constant {m['winning_constant']}), "
            f"errors {trend.detail.split(': ', 1)[1]}, {'ok' if rep.passed else 'not ok'}"
        )
    ok = all(r.passed for r in reps) and all("winning_variant" in r.metadata for r in reps) and secs < 1800
    report(capsys, 10, ok, f"{secs:.0f}s at 8 threads; " + "; ".join(parts))


def test_criterion_11_principal_value(capsys):
    rep = ex.verify_pv(k_values=(-14, 14))
    checks = [c for c in rep.checks if c.name in ("k=14", "k=-14")]
    report(
        capsys,
        11,
        len(checks) == 2 and all(c.passed for c in checks),
        "; ".join(f"{c.name} deviation {c.measured:.3g} (tol {c.tolerance:.3g})" for c in checks),
    )


def test_criterion_12_zeta_product(capsys):
    N = 100_000
    parts, ok = [], True
    for T, t, s in ((0.0, 0.0, 2.0), (1.0, 0.5, 2.5)):
        trunc, closed = sp.ramanujan_zeta_identity(T, t, s, N)
        err, bound = abs(trunc - closed), sp.ramanujan_zeta_tail_bound(s, N)
        ok &= err <= bound
        parts.append(f"(T,t,s)=({T:g},{t:g},{s:g}) err {err:.3g} bound {bound:.3g}")
    report(capsys, 12, ok, "; ".join(parts))


def test_criterion_13_determinism(capsys, tmp_path):
    env = dict(os.environ)
    dirs = []
    for threads in (1, 8):
        for run in (1, 2):
            out = tmp_path / f"t{threads}_run{run}"
            proc = subprocess.run(
                [sys.executable, "-m", "kuznetsov_numerics", "all", "--threads", str(threads), "--output", str(out)],
                env=env,
                capture_output=True,
                text=True,
            )
            assert proc.returncode in (0, 1), proc.stderr[-2000:]
            dirs.append(out)
    names = sorted(p.name for p in dirs[0].iterdir())
    differing = []
    for other in dirs[1:]:
        assert sorted(p.name for p in other.iterdir()) == names
        _, mismatch, errors = filecmp.cmpfiles(dirs[0], other, names, shallow=False)
        differing += [f"{other.name}/{n}" for n in mismatch + errors]
    report(capsys, 13, not differing, f"{len(names)} files x 4 runs; differing: {differing or 'none'}")
