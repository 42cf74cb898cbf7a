"""Acceptance suite: one test per criterion, each with its runtime budget.

Every test records a single pass/fail line (see ``conftest.record_criterion``)
that is printed in the session summary.
"""
import io
import math
import time

import numpy as np

from conftest import record_criterion
from ruq import measures as ms
from ruq.bounds import BoundEvaluator, s0_single
from ruq.cli import run
from ruq.gf2m import Gf2mField
from ruq.hashing import (
    collision_matrix,
    make_binning_family,
    make_gf2m_family,
    verify_universality,
)
from ruq.measures import RenyiOrderSpec
from ruq.multipath import MultipathConfig, decode, eavesdropper_uncertainty, encode
from ruq.oneshot import (
    BinomialMomentQuery,
    OneShotInstance,
    binomial_moment_check,
    check_lower_gallager,
    check_lower_plain,
    check_upper_gallager,
    check_upper_plain,
)
from ruq.probability import JointSource, Pmf, ProductSource, example_source, random_source
from ruq.report import VerificationReport
from ruq.slepianwolf import SwSystem, verify_converse_chain, verify_strong_converse_identity

R_GRID = np.linspace(0.0, 0.8, 1601)
STEP = R_GRID[1] - R_GRID[0]


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def _zero_bracket(values):
    """``(last positive rate, first zero rate after it)`` of a non-increasing curve."""
    pos = np.flatnonzero(values > 0)
    last = pos.max()
    assert np.all(values[last + 1:] == 0)
    return R_GRID[last], R_GRID[last + 1]


def _positive_bracket(values):
    """``(last zero rate, first positive rate)`` of a non-decreasing curve."""
    pos = np.flatnonzero(values > 0)
    first = pos.min()
    assert np.all(values[:first] == 0) and np.all(values[first:] > 0)
    return R_GRID[first - 1], R_GRID[first]


def test_criterion_01_shannon_entropy_of_example_source(tmp_path):
    path = tmp_path / "example.src"
    path.write_text("0 0 0.7\n0 1 0.1\n1 0 0.1\n1 1 0.1\n")
    out = io.StringIO()
    code, elapsed = _timed(lambda: run(["measure", "--source", str(path), "--variant", "shannon"], out, io.StringIO()))
    line = out.getvalue().splitlines()[-1]
    value = float(line.split("=")[1].split()[0])
    ok = code == 0 and abs(value - 0.4401) <= 0.0005 and elapsed < 1.0
    record_criterion("1", ok, f"H(A|E)={value} target 0.4401+/-0.0005 time={elapsed:.3f}s")
    assert ok


def test_criterion_02_s0_values():
    cases = [(1e-8, 0.549), (0.25, 0.615), (0.49, 0.618)]
    got, elapsed = _timed(lambda: [s0_single(Pmf(np.array([p, 1 - p]))) for p, _ in cases])
    ok = all(abs(g - e) <= 0.002 for g, (_, e) in zip(got, cases)) and elapsed < 1.0
    detail = " ".join(f"s0({p:g})={g:.4f}" for g, (p, _) in zip(got, cases))
    record_criterion("2", ok, f"{detail} time={elapsed:.3f}s")
    assert ok


def test_criterion_03_minus_bounds_and_g_plus_transitions():
    src = example_source()
    h = ms.plain_entropy(src, 0.0)

    def work():
        bad = []
        for s in (0.1, 0.3, 0.5):
            for kind, target in (("g_minus", ms.plain_entropy(src, -s)), ("gup_minus", ms.gallager_entropy(src, -s))):
                lo, hi = _zero_bracket(BoundEvaluator(src, kind, s).values(R_GRID))
                if not lo < target <= hi:
                    bad.append(f"{kind}(s={s}) zero at {hi:.4f} vs {target:.6f}")
        for s in (0.5, 1.0, 2.0):
            lo, hi = _zero_bracket(BoundEvaluator(src, "g_plus", s).values(R_GRID))
            if not (lo < h <= hi and lo <= 0.4400 <= hi):
                bad.append(f"g_plus(s={s}) zero at {hi:.4f}")
        return bad

    bad, elapsed = _timed(work)
    ok = not bad and elapsed < 5.0
    record_criterion("3", ok, f"g_minus/gup_minus/g_plus brackets {'ok' if not bad else bad} time={elapsed:.3f}s")
    assert ok


def test_criterion_03_gup_plus_transition_at_shannon_entropy():
    """The gup_plus curves are required to vanish from the Shannon entropy on."""
    src = example_source()
    h = ms.plain_entropy(src, 0.0)

    def work():
        found = {}
        for s in (0.5, 1.0, 2.0):
            lo, hi = _zero_bracket(BoundEvaluator(src, "gup_plus", s).values(R_GRID))
            found[s] = (lo, hi)
        return found

    found, elapsed = _timed(work)
    ok = all(lo < h <= hi for lo, hi in found.values()) and elapsed < 5.0
    detail = " ".join(f"s={s}:zero_from={hi:.4f}" for s, (_, hi) in found.items())
    record_criterion("3", ok, f"gup_plus {detail} target {h:.4f} time={elapsed:.3f}s")
    assert ok


def test_criterion_04_exponent_transitions():
    src = example_source()

    def work():
        bad = []
        for s in (0.1, 0.3, 0.5):
            for kind, target in (("e_minus", ms.plain_entropy(src, -s)), ("eup_minus", ms.gallager_entropy(src, -s))):
                lo, hi = _positive_bracket(BoundEvaluator(src, kind, s).values(R_GRID))
                if not (lo <= target < hi and hi - target <= STEP):
                    bad.append(f"{kind}(s={s}) positive from {hi:.4f} vs {target:.6f}")
        return bad

    bad, elapsed = _timed(work)
    ok = not bad and elapsed < 5.0
    record_criterion("4", ok, f"{'all brackets ok' if not bad else bad} time={elapsed:.3f}s")
    assert ok


UPPER_PLAIN_S = (0.0, 0.25, 0.5, 0.75, 1.0)
UPPER_GALLAGER_S = (0.0, 0.25, 0.5)
LOWER_PLAIN_S = (0.0, 0.5, 1.0)
LOWER_GALLAGER_S = (0.0, 0.5, 1.0, 2.0, 4.0)


def test_criterion_05_one_shot_inequalities():
    rng = np.random.default_rng(2024)
    gf = [make_gf2m_family(Gf2mField.standard(2), 1, j) for j in (1, 2)]  # |A| = 4
    binning = {(a, M): make_binning_family(a, M) for a in range(2, 6) for M in (2, 3)}

    def work():
        rep = VerificationReport()
        count = max_a = 0
        for k in range(200):
            group = k % 4
            if group < 2:
                M = 2 + group
                fam = binning[(int(rng.integers(2, 6)), M)]
            else:
                fam = gf[group - 2]
            src = random_source(rng, fam.domain_size, int(rng.integers(1, 4)), sparsity=0.3 * (k % 3 == 0))
            max_a = max(max_a, src.a_size)
            for grid, fn in ((UPPER_PLAIN_S, check_upper_plain), (UPPER_GALLAGER_S, check_upper_gallager),
                             (LOWER_PLAIN_S, check_lower_plain), (LOWER_GALLAGER_S, check_lower_gallager)):
                for s in grid:
                    rep.add(fn(OneShotInstance(src, fam, s, f"inst{k}")))
            count += 1
        return rep, count, max_a

    (rep, count, max_a), elapsed = _timed(work)
    ids = {c.check_id for c in rep.checks}
    ok = (rep.passed and rep.min_slack >= -1e-12 and count == 200 and len(ids) == 4
          and max_a <= 5 and elapsed < 60.0)
    record_criterion("5", ok, f"instances={count} max|A|={max_a} checks={len(rep)} failures={len(rep.failures)} "
                              f"min_slack={rep.min_slack:.3g} time={elapsed:.2f}s")
    assert ok


def _random_systems(seed, count=50):
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        n = 1 + k % 3
        a, e = int(rng.integers(2, 4)), int(rng.integers(1, 3))
        if n == 3:
            a = 2
        base = random_source(rng, a, e, sparsity=0.2 * (k % 2))
        prod = ProductSource(base, n)
        M = int(rng.integers(1, min(prod.a_blocks, 8) + 1))
        out.append(SwSystem(prod, rng.integers(0, M, size=prod.a_blocks), M, f"sys{k},n={n},M={M}"))
    return out


def test_criterion_06_strong_converse_identity():
    def work():
        worst = 0.0
        for system in _random_systems(6):
            c = verify_strong_converse_identity(system).checks[0]
            worst = max(worst, abs(c.lhs - c.rhs))
        return worst

    worst, elapsed = _timed(work)
    ok = worst <= 1e-10 and elapsed < 30.0
    record_criterion("6", ok, f"systems=50 max|lhs-rhs|={worst:.3g} time={elapsed:.2f}s")
    assert ok


def test_criterion_07_converse_chain():
    def work():
        rep = VerificationReport()
        for system in _random_systems(7):
            for s in (1.0, 2.0):
                rep.extend(verify_converse_chain(system, s))
        return rep

    rep, elapsed = _timed(work)
    ok = rep.passed and rep.min_slack >= -1e-12 and len(rep) == 300 and elapsed < 30.0
    record_criterion("7", ok, f"checks={len(rep)} failures={len(rep.failures)} min_slack={rep.min_slack:.3g} "
                              f"time={elapsed:.2f}s")
    assert ok


def test_criterion_08_hash_certification():
    def work():
        bad = []
        for a, M in ((2, 2), (3, 2), (4, 3), (5, 4), (8, 5), (10, 4)):
            assert M**a <= 2**20
            rep = verify_universality(make_binning_family(a, M), "strongly_universal")
            ids = {c.check_id for c in rep.checks}
            if not rep.passed or "strongly_universal.joint" not in ids:
                bad.append(f"binning({a},{M})")
        for m, l in ((4, 2), (6, 2), (6, 3), (8, 4)):
            expect = (2 ** (m - l) - 1) / (2**m - 1)
            for j in range(1, m // l + 1):
                fam = make_gf2m_family(Gf2mField.standard(m), l, j)
                c = collision_matrix(fam, counts=True) / fam.seed_count
                off = c[~np.eye(c.shape[0], dtype=bool)]
                if not (np.all(np.abs(off - expect) < 1e-15) and verify_universality(fam, "universal2").passed):
                    bad.append(f"gf2m({m},{l},j={j})")
        return bad

    bad, elapsed = _timed(work)
    ok = not bad and elapsed < 30.0
    record_criterion("8", ok, f"{'all families certified' if not bad else bad} time={elapsed:.2f}s")
    assert ok


def _legendre_oracle(joint, s, rates, up):
    """Grid Legendre transform built from the raw formulas, 4097 points on [0, s]."""
    j = np.asarray(joint, float)
    pe = j.sum(axis=0)
    keep = pe > 0
    cond = j[:, keep] / pe[keep]
    pe = pe[keep]
    ts = np.linspace(0.0, s, 4097)
    with np.errstate(divide="ignore"):
        logc = np.where(cond > 0, np.log(np.where(cond > 0, cond, 1.0)), -np.inf)
    norms_t = np.exp((1 + ts)[:, None, None] * logc[None]).sum(axis=1)  # (T, E)
    if up:
        norm_s = np.exp((1 + s) * logc).sum(axis=0)
        f = -(1 + s) * np.log((pe * norms_t * norm_s ** (-ts[:, None] / (1 + s))).sum(axis=1))
    else:
        f = -np.log((pe * norms_t).sum(axis=1))
    vals = (f[None, :] - ts[None, :] * rates[:, None]) / s
    return np.maximum(vals.max(axis=1), 0.0)


def test_criterion_09_legendre_cross_check():
    rng = np.random.default_rng(9)
    sources = [example_source(), random_source(rng, 3, 2), random_source(rng, 4, 3, sparsity=0.3)]
    rates = np.linspace(0.0, 1.0, 41)

    def work():
        worst = 0.0
        for src in sources:
            for s in (0.25, 0.5, 1.0, 2.0):
                for kind, up in (("g_plus", False), ("gup_plus", True)):
                    got = BoundEvaluator(src, kind, s).values(rates)
                    worst = max(worst, float(np.abs(got - _legendre_oracle(src.joint, s, rates, up)).max()))
        return worst

    worst, elapsed = _timed(work)
    ok = worst <= 1e-6 and elapsed < 10.0
    record_criterion("9", ok, f"max deviation={worst:.3g} over 3 sources x 4 s x 2 kinds x 41 rates "
                              f"time={elapsed:.2f}s")
    assert ok


def test_criterion_10_binomial_moment_grid():
    cells = [(L, p, s, eps) for L in (1, 5, 20, 100, 1000) for p in (0.05, 0.3, 0.7, 1.0)
             for s in (0.0, 0.5, 1.0) for eps in (0.1, 0.5)]
    assert len(cells) == 120

    def work():
        rep = VerificationReport()
        for cell in cells:
            rep.extend(binomial_moment_check(BinomialMomentQuery(*cell)))
        return rep

    rep, elapsed = _timed(work)
    ok = rep.passed and rep.min_slack >= -1e-12 and elapsed < 10.0
    record_criterion("10", ok, f"cells=120 checks={len(rep)} min_slack={rep.min_slack:.3g} time={elapsed:.2f}s")
    assert ok


def test_criterion_11_multipath():
    def work():
        bad = 0
        pairs = 0
        for m in range(1, 9):
            for l in [d for d in range(1, m + 1) if m % d == 0]:
                cfg = MultipathConfig(m, l)
                for X in range(1, 1 << m):
                    for A in range(1 << m):
                        bad += decode(cfg, encode(cfg, A, X), X) != A
                        pairs += 1
        rng = np.random.default_rng(11)
        worst = 0.0
        for m in range(1, 7):
            src = random_source(rng, 1 << m, 2)
            for spec in (RenyiOrderSpec.shannon(), RenyiOrderSpec.plain(-0.5), RenyiOrderSpec.gallager(1.0)):
                worst = max(worst, abs(eavesdropper_uncertainty(MultipathConfig(m, m), src, spec)))
        return bad, pairs, worst

    (bad, pairs, worst), elapsed = _timed(work)
    ok = bad == 0 and worst <= 1e-12 and elapsed < 10.0
    record_criterion("11", ok, f"round trips={pairs} mismatches={bad} identity-piece max|H|={worst:.3g} "
                               f"time={elapsed:.2f}s")
    assert ok
