"""Exact one-shot remaining-uncertainty computations and inequality checks.

For a seed ``x`` the hashed system conditions ``A`` on ``(f_x(A), E)``.  All
measures follow from the bin masses

    B_u[x, i, e] = sum_{a : f_x(a) = i} P_AE(a, e)^(1+u)

through the moments

    Z_x(u) = sum_{i,e} B_u B_0^(-u)       = exp(-u H_{1+u}(A|f_x(A),E))
    G_x(u) = sum_{i,e} B_u^(1/(1+u))      = exp(-(u/(1+u)) H^up_{1+u}(A|f_x(A),E))

and conditioning on the seed as well averages the moments over ``x``.
Working with moments rather than entropies keeps ``s = 0`` well defined.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp, xlog1py, xlogy
from scipy.stats import binom

from . import measures as ms
from .errors import ParameterError, ResourceError, UsageError
from .hashing import HashFamily, Level, verify_universality
from .measures import RenyiOrderSpec, Variant
from .probability import JointSource
from .report import Relation, VerificationReport, Verdict, evaluate, marker

BINOMIAL_CAP = 10**4
ENLARGED_CAP = 2**22
Z_95 = 1.959963984540054


@dataclass(frozen=True)
class OneShotInstance:
    """A source, a hash family and an order offset ``s``."""

    source: JointSource
    family: HashFamily
    s: float = 0.0
    name: str = "src"

    def __post_init__(self):
        if self.family.domain_size != self.source.a_size:
            raise ParameterError(
                f"family domain {self.family.domain_size} does not match |A|={self.source.a_size}"
            )

    @property
    def M(self) -> int:  # noqa: N802
        return self.family.range_size

    @property
    def epsilon(self) -> float:
        return self.family.epsilon_claim

    def describe(self) -> str:
        return f"{self.name}|{self.family.label}|s={self.s:g}"


@dataclass(frozen=True)
class SeedSample:
    """Bucket rows and weights of the seeds being averaged over."""

    table: np.ndarray
    weights: np.ndarray
    exact: bool
    rng_seed: int | None = None

    @property
    def count(self) -> int:
        return self.table.shape[0]


def seed_sample(fam: HashFamily, *, mc_samples: int | None = None, rng_seed: int | None = None) -> SeedSample:
    """All seeds of an enumerable family, or a Monte Carlo sample otherwise."""
    if fam.enumerable:
        return SeedSample(fam.table(), fam.seed_probs(), True)
    if mc_samples is None or rng_seed is None:
        raise UsageError(f"family {fam.label} is not enumerable; pass mc_samples and rng_seed")
    rng = np.random.default_rng(rng_seed)
    seeds = fam.sample_seeds(rng, mc_samples)
    table = np.stack([fam.bucket_row(x) for x in seeds])
    return SeedSample(table, np.full(mc_samples, 1.0 / mc_samples), False, rng_seed)


# --------------------------------------------------------------------------
# bin masses and moments


def _powered(joint: np.ndarray, u: float) -> np.ndarray:
    """``P^(1+u)`` on the support, 0 elsewhere (also for ``u = -1``)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(joint > 0, np.power(joint, 1.0 + u), 0.0)


def bin_masses(table: np.ndarray, joint: np.ndarray, M: int, u: float = 0.0) -> np.ndarray:
    """``B_u[x, i, e]`` for every seed row of ``table``."""
    pw = _powered(joint, u)
    out = np.empty((table.shape[0], M, joint.shape[1]))
    for i in range(M):
        out[:, i, :] = (table == i).astype(float) @ pw
    return out


def plain_moments(table, joint, M, u: float) -> np.ndarray:
    """``Z_x(u)`` per seed."""
    b0 = bin_masses(table, joint, M, 0.0)
    # P(a, e) (P(a, e) / B(bin of a, e))^u keeps every ratio in (0, 1], so tiny
    # masses cannot turn into 0 * inf
    mass = b0[np.arange(table.shape[0])[:, None], table]  # (S, A, E)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        terms = np.where(joint > 0, joint * np.power(joint / np.where(mass > 0, mass, 1.0), u), 0.0)
    return terms.sum(axis=(1, 2))


def gallager_moments(table, joint, M, u: float) -> np.ndarray:
    """``G_x(u)`` per seed, ``u > -1``."""
    if u <= -1:
        raise ParameterError("Gallager moments need u > -1")
    bu = bin_masses(table, joint, M, u)
    return np.power(bu, 1.0 / (1.0 + u)).sum(axis=(1, 2))


def _shannon_per_seed(table, joint, M) -> np.ndarray:
    b0 = bin_masses(table, joint, M, 0.0)
    out = np.zeros(table.shape[0])
    for x in range(table.shape[0]):
        mass = b0[x][table[x], :]  # (A, E): mass of the bin containing a
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(joint > 0, joint * np.log(joint / np.where(mass > 0, mass, 1.0)), 0.0)
        out[x] = -terms.sum()
    return out


def _support_counts(table, joint, M) -> np.ndarray:
    return bin_masses(table, (joint > 0).astype(float), M, 0.0)


def per_seed_entropy(src: JointSource, row, spec: RenyiOrderSpec) -> float:
    """``H(A | f(A), E)`` for one deterministic function given by a 0-based bucket row."""
    table = np.asarray(row, dtype=np.int64)[None, :]
    M = int(table.max()) + 1
    return float(_entropy_from_sample(src, SeedSample(table, np.ones(1), True), M, spec))


def _entropy_from_sample(src: JointSource, sample: SeedSample, M: int, spec: RenyiOrderSpec) -> float:
    joint, table, w = src.joint, sample.table, sample.weights
    v, s = spec.variant, spec.s
    if v is Variant.SHANNON or (v in (Variant.PLAIN, Variant.GALLAGER) and abs(s) < ms.SHANNON_SWITCH):
        return float(w @ _shannon_per_seed(table, joint, M))
    if v is Variant.PLAIN:
        if s < -1:
            raise ParameterError(f"plain order offset s={s} below -1")
        return float(-math.log(w @ plain_moments(table, joint, M, s)) / s)
    if v is Variant.GALLAGER:
        if s < -1:
            raise ParameterError(f"Gallager order offset s={s} below -1")
        if s == -1:
            counts = _support_counts(table, joint, M)
            used = w > 0
            return float(math.log(counts[used].max()))
        return float(-(1.0 + s) / s * math.log(w @ gallager_moments(table, joint, M, s)))
    if v is Variant.MIN:
        b0 = bin_masses(table, joint, M, 0.0)
        best = 0.0
        for x in np.flatnonzero(w > 0):
            mass = b0[x][table[x], :]
            with np.errstate(divide="ignore", invalid="ignore"):
                best = max(best, float(np.where(joint > 0, joint / mass, 0.0).max()))
        return -math.log(best) + 0.0  # no negative zero
    if v is Variant.MIN_GALLAGER:
        top = np.zeros(table.shape[0])
        for i in range(M):
            hit = table == i  # (S, A)
            top += np.where(hit[:, :, None], joint[None, :, :], 0.0).max(axis=1).sum(axis=1)
        return float(-math.log(w @ top))
    raise UsageError(f"variant {v.value} is evaluated through enlarged_joint instead")


def hashed_conditional_entropy(inst: OneShotInstance, spec: RenyiOrderSpec, *,
                               mc_samples: int | None = None, rng_seed: int | None = None) -> float:
    """``H(A | f_X(A), E, X)`` for the variant in ``spec`` (nats).

    Exact by seed enumeration; Monte Carlo over seeds when the family is not
    enumerable and ``mc_samples`` plus ``rng_seed`` are given.  The
    two-parameter variant is evaluated on the explicit enlarged joint.
    """
    sample = seed_sample(inst.family, mc_samples=mc_samples, rng_seed=rng_seed)
    if spec.variant is Variant.TWO_PARAM:
        return ms.conditional_entropy(enlarged_joint(inst, sample), spec)
    return _entropy_from_sample(inst.source, sample, inst.M, spec)


def enlarged_joint(inst: OneShotInstance, sample: SeedSample | None = None) -> JointSource:
    """Explicit joint of ``A`` and the observation ``(x, f_x(A), E)``.

    Column ``(x * M + i) * |E| + e`` carries ``P_X(x) P_AE(a, e) [f_x(a) = i]``.
    """
    if sample is None:
        sample = seed_sample(inst.family)
    S, M = sample.count, inst.M
    A, E = inst.source.joint.shape
    if A * S * M * E > ENLARGED_CAP:
        raise ResourceError(f"enlarged joint {A} x {S * M * E} exceeds the cap")
    out = np.zeros((A, S, M, E))
    for x in range(S):
        out[np.arange(A), x, sample.table[x], :] = sample.weights[x] * inst.source.joint
    return JointSource(out.reshape(A, S * M * E))


# --------------------------------------------------------------------------
# lemma checks


def _certify(inst: OneShotInstance) -> bool:
    fam = inst.family
    cache = fam.__dict__.setdefault("_certified", {})
    key = inst.epsilon
    if key not in cache:
        cache[key] = verify_universality(fam, Level.ALMOST_UNIVERSAL2, key).passed
    return cache[key]


def _moment_check(check_id: str, inst: OneShotInstance, per_seed: np.ndarray, sample: SeedSample,
                  rhs: float, relation: Relation, *, exploratory: bool = False):
    lhs = float(sample.weights @ per_seed)
    desc = inst.describe()
    if not sample.exact:
        half = Z_95 * float(np.std(per_seed, ddof=1)) / math.sqrt(sample.count) if sample.count > 1 else math.inf
        note = f"mc samples={sample.count} rng_seed={sample.rng_seed} halfwidth={half:.3g}"
        return marker(check_id, desc, Verdict.ESTIMATE, note, lhs, rhs)
    check = evaluate(check_id, desc, lhs, rhs, relation)
    if exploratory:
        return marker(check_id, desc, Verdict.EXPLORATORY, "outside the lemma's range", lhs, rhs)
    return check


def _gate(check_id: str, inst: OneShotInstance, lo: float, hi: float, exploratory: bool) -> bool:
    s = inst.s
    if lo <= s <= hi:
        return False
    if exploratory:
        return True
    raise ParameterError(f"{check_id} holds for s in [{lo:g}, {hi:g}]; got s={s}")


def check_upper_plain(inst: OneShotInstance, sample: SeedSample | None = None):
    """``E_X exp(s H_{1-s}(A|f_X(A),E)) <= 1 + (eps/M)^s exp(s H_{1-s}(A|E))``, s in [0, 1]."""
    _gate("oneshot.upper_plain", inst, 0.0, 1.0, False)
    sample = sample or seed_sample(inst.family)
    s, eps, M, src = inst.s, inst.epsilon, inst.M, inst.source
    per_seed = plain_moments(sample.table, src.joint, M, -s)
    rhs = 1.0 + (eps / M) ** s * math.exp(ms.log_plain_moment(src, -s))
    return _moment_check("oneshot.upper_plain", inst, per_seed, sample, rhs, Relation.LE)


def check_upper_gallager(inst: OneShotInstance, sample: SeedSample | None = None, *, exploratory: bool = False):
    """Gallager form of the upper lemma with exponent ``s/(1-s)``, s in [0, 1/2]."""
    explore = _gate("oneshot.upper_gallager", inst, 0.0, 0.5, exploratory)
    s, eps, M, src = inst.s, inst.epsilon, inst.M, inst.source
    if s >= 1:
        raise ParameterError("the Gallager upper lemma needs s < 1")
    sample = sample or seed_sample(inst.family)
    per_seed = gallager_moments(sample.table, src.joint, M, -s)
    r = s / (1.0 - s)
    rhs = 1.0 + (eps / M) ** r * math.exp(ms.log_gallager_moment(src, -s))
    return _moment_check("oneshot.upper_gallager", inst, per_seed, sample, rhs, Relation.LE, exploratory=explore)


def lower_plain_rhs(src: JointSource, s: float, eps: float, M: int) -> float:
    """Right side of the plain lower lemma, split at ``P(a|e)`` vs ``eps/M``."""
    c, pe = src.conditionals, src.p_e[src.active_e]
    thr = eps / M
    big = c >= thr
    small = (c > 0) & ~big
    first = float((pe * np.where(big, c, 0.0).sum(axis=0)).sum())
    second = float((pe * np.where(small, _powered(c, s), 0.0).sum(axis=0)).sum())
    return 2.0 ** (-s) * first + (thr ** (-s) * 2.0 ** (-s) * second if second > 0 else 0.0)


def lower_gallager_rhs(src: JointSource, s: float, eps: float, M: int) -> float:
    """Right side of the Gallager lower lemma, split at ``P^(1+s)`` vs ``(eps/M) sum P^(1+s)``."""
    c, pe = src.conditionals, src.p_e[src.active_e]
    thr = eps / M
    pw = _powered(c, s)
    norm = pw.sum(axis=0, keepdims=True)
    big = (pw >= thr * norm) & (c > 0)
    small = (c > 0) & ~big
    r = s / (1.0 + s)
    first = float((pe * np.where(big, c, 0.0).sum(axis=0)).sum())
    second = float((pe * (np.where(small, pw, 0.0) * norm ** (-r)).sum(axis=0)).sum())
    return 2.0 ** (-r) * first + (2.0 ** (-r) * thr ** (-r) * second if second > 0 else 0.0)


def check_lower_plain(inst: OneShotInstance, sample: SeedSample | None = None):
    """``E_X exp(-s H_{1+s}(A|f_X(A),E)) >= ...``, s in [0, 1]."""
    _gate("oneshot.lower_plain", inst, 0.0, 1.0, False)
    sample = sample or seed_sample(inst.family)
    s = inst.s
    per_seed = plain_moments(sample.table, inst.source.joint, inst.M, s)
    rhs = lower_plain_rhs(inst.source, s, inst.epsilon, inst.M)
    return _moment_check("oneshot.lower_plain", inst, per_seed, sample, rhs, Relation.GE)


def check_lower_gallager(inst: OneShotInstance, sample: SeedSample | None = None):
    """``E_X exp(-(s/(1+s)) H^up_{1+s}(A|f_X(A),E)) >= ...``, any s >= 0."""
    _gate("oneshot.lower_gallager", inst, 0.0, math.inf, False)
    sample = sample or seed_sample(inst.family)
    s = inst.s
    per_seed = gallager_moments(sample.table, inst.source.joint, inst.M, s)
    rhs = lower_gallager_rhs(inst.source, s, inst.epsilon, inst.M)
    return _moment_check("oneshot.lower_gallager", inst, per_seed, sample, rhs, Relation.GE)


def _run(inst: OneShotInstance, checks, *, mc_samples=None, rng_seed=None) -> VerificationReport:
    rep = VerificationReport()
    sample = seed_sample(inst.family, mc_samples=mc_samples, rng_seed=rng_seed)
    if sample.exact and not _certify(inst):
        for cid, _ in checks:
            rep.add(marker(cid, inst.describe(), Verdict.PRECONDITION_FAILED,
                           f"family is not {inst.epsilon:g}-almost universal2"))
        return rep
    if not sample.exact:
        rep.flags.add("monte-carlo")
    for _, fn in checks:
        rep.add(fn(inst, sample))
    return rep


def verify_oneshot_upper(inst: OneShotInstance, *, mc_samples: int | None = None,
                         rng_seed: int | None = None) -> VerificationReport:
    """Both upper lemmas wherever ``inst.s`` lies in their range."""
    if not 0 <= inst.s <= 1:
        raise ParameterError(f"upper one-shot lemmas need s in [0, 1], got {inst.s}")
    checks = [("oneshot.upper_plain", check_upper_plain)]
    if inst.s <= 0.5:
        checks.append(("oneshot.upper_gallager", check_upper_gallager))
    return _run(inst, checks, mc_samples=mc_samples, rng_seed=rng_seed)


def verify_oneshot_lower(inst: OneShotInstance, *, mc_samples: int | None = None,
                         rng_seed: int | None = None) -> VerificationReport:
    """Both lower lemmas wherever ``inst.s`` lies in their range."""
    if inst.s < 0:
        raise ParameterError(f"lower one-shot lemmas need s >= 0, got {inst.s}")
    checks = []
    if inst.s <= 1:
        checks.append(("oneshot.lower_plain", check_lower_plain))
    checks.append(("oneshot.lower_gallager", check_lower_gallager))
    return _run(inst, checks, mc_samples=mc_samples, rng_seed=rng_seed)


# --------------------------------------------------------------------------
# Fehr-Berens window


def fehr_berens_check(inst: OneShotInstance, s: float) -> VerificationReport:
    """``H^up_{1-s}(A|E) - log M <= H^up_{1-s}(A|f(A),E) <= H^up_{1-s}(A|E)``.

    Checked for every seed on its own and for the seed-conditioned family.
    """
    if not -1 <= s <= 1:
        raise ParameterError(f"Fehr-Berens check needs s in [-1, 1], got {s}")
    src, fam = inst.source, inst.family
    spec = RenyiOrderSpec.gallager(-s)
    base = ms.conditional_entropy(src, spec)
    log_m = math.log(fam.range_size)
    sample = seed_sample(fam)
    M = fam.range_size
    per_seed = np.array([
        _entropy_from_sample(src, SeedSample(sample.table[x:x + 1], np.ones(1), True), M, spec)
        for x in range(sample.count)
    ])
    rep = VerificationReport()
    desc = f"{inst.name}|{fam.label}|order={1 - s:g}"
    lo_x = int(np.argmin(per_seed))
    hi_x = int(np.argmax(per_seed))
    rep.add(evaluate("fehr.lower.per_seed", f"{desc}|seed={lo_x}", per_seed[lo_x], base - log_m, Relation.GE))
    rep.add(evaluate("mono.upper.per_seed", f"{desc}|seed={hi_x}", per_seed[hi_x], base, Relation.LE))
    seeded = _entropy_from_sample(src, sample, M, spec)
    rep.add(evaluate("fehr.lower.seeded", desc, seeded, base - log_m, Relation.GE))
    rep.add(evaluate("mono.upper.seeded", desc, seeded, base, Relation.LE))
    return rep


# --------------------------------------------------------------------------
# binomial moments


@dataclass(frozen=True)
class BinomialMomentQuery:
    L: int
    p: float
    s: float
    eps: float

    def __post_init__(self):
        if self.L < 1:
            raise ParameterError("L must be a positive integer")
        if not 0 < self.p <= 1:
            raise ParameterError("p must lie in (0, 1]")
        if not 0 <= self.s <= 1:
            raise ParameterError("s must lie in [0, 1]")
        if not 0 < self.eps < 1:
            raise ParameterError("eps must lie in (0, 1)")

    def describe(self) -> str:
        return f"L={self.L},p={self.p:g},s={self.s:g},eps={self.eps:g}"


def binomial_log_moment(L: int, p: float, s: float) -> float:
    """``log E[N^s]`` for ``N ~ Bin(L, p)``, exact summation with ``0^s = 0``."""
    if L > BINOMIAL_CAP:
        raise ResourceError(f"L={L} exceeds the exact-summation cap {BINOMIAL_CAP}")
    k = np.arange(1, L + 1, dtype=float)
    # binom.pmf is accurate to a few ulps; the log-domain fallback loses ~1e-13
    # relative through gammaln(L + 1) but survives underflow and overflow
    with np.errstate(over="ignore"):
        total = math.fsum(binom.pmf(k, L, p) * k**s)
    if np.isfinite(total) and total > np.finfo(float).tiny:
        return math.log(total)
    log_terms = (s * np.log(k) + gammaln(L + 1) - gammaln(k + 1) - gammaln(L - k + 1)
                 + xlogy(k, p) + xlog1py(L - k, -p))
    return float(logsumexp(log_terms))


def binomial_moment_check(q: BinomialMomentQuery) -> VerificationReport:
    """Concentration lower bound and Jensen upper bound on ``E[N^s]``."""
    moment = math.exp(binomial_log_moment(q.L, q.p, q.s))
    mean = q.L * q.p
    floor = math.floor(mean * (1.0 - q.eps))
    base = 0.0 if floor == 0 else float(floor) ** q.s  # 0^s := 0, as in the moment
    lower = base * (1.0 - math.exp(-mean * q.eps**2 / 2.0))
    rep = VerificationReport()
    rep.add(evaluate("binomial.lower", q.describe(), moment, lower, Relation.GE))
    rep.add(evaluate("binomial.jensen", q.describe(), moment, mean**q.s, Relation.LE))
    return rep
