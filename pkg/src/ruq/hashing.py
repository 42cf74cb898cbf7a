"""Seeded hash families and their exact universality certification.

A family ``{f_x : {0..|A|-1} -> {1..M}}`` is stored with 0-based buckets
internally; ``HashFamily.eval`` converts to the external ``1..M`` range.
Enumerable families expose their whole seed table, which is what every
exact check in the library consumes.
"""
from __future__ import annotations

import enum
import io
import math
from fractions import Fraction
from typing import Callable, TextIO

import numpy as np

from .errors import ParameterError, ParseError, ResourceError, UnsupportedError, ValidationError
from .gf2m import Gf2mField, clmul, poly_mod
from .probability import JointSource
from .report import Relation, VerificationReport, Verdict, evaluate, marker

EXPLICIT_SEED_CAP = 2**24
STRONG_JOINT_CAP = 2**20
TABLE_CELL_CAP = 2**26


class FamilyKind(str, enum.Enum):
    BINNING = "binning"
    GF2M_PIECE = "gf2m_piece"
    AFFINE_PRIME = "affine_prime"
    CUSTOM_TABLE = "custom_table"


class Level(str, enum.Enum):
    ALMOST_UNIVERSAL2 = "almost_universal2"
    UNIVERSAL2 = "universal2"
    STRONGLY_UNIVERSAL = "strongly_universal"


class HashFamily:
    """A finite seeded family of functions ``A -> {1..M}``.

    Args:
        domain_size: ``|A|``.
        range_size: number of buckets ``M``.
        kind: construction tag.
        seed_count: number of seeds.
        buckets: maps an int array of seeds to an ``(seeds, |A|)`` array of
            0-based buckets.
        seed_probs: explicit seed probabilities, or None for uniform seeds.
        epsilon_claim: the ``eps`` for which the family is claimed
            eps-almost universal2.
        enumerable: whether exact checks may walk every seed.
        label: short human-readable description.
    """

    def __init__(self, domain_size: int, range_size: int, kind: FamilyKind | str, seed_count: int,
                 buckets: Callable[[np.ndarray], np.ndarray], *, seed_probs=None,
                 epsilon_claim: float = 1.0, enumerable: bool = True, label: str = ""):
        if domain_size < 1 or range_size < 1 or seed_count < 1:
            raise ParameterError("domain size, range size and seed count must be positive")
        self.domain_size = int(domain_size)
        self.range_size = int(range_size)
        self.kind = FamilyKind(kind)
        self.seed_count = int(seed_count)
        self._buckets = buckets
        self.epsilon_claim = float(epsilon_claim)
        self.enumerable = enumerable
        self.label = label or self.kind.value
        if seed_probs is not None:
            w = np.asarray(seed_probs, float)
            if w.shape != (self.seed_count,) or np.any(w < 0):
                raise ValidationError("seed probabilities must be a nonnegative vector, one per seed")
            if abs(w.sum() - 1.0) > 1e-12:
                raise ValidationError(f"seed probabilities sum to {w.sum():.15g}")
            w = w.copy()
            w.setflags(write=False)
        self._seed_probs = None if seed_probs is None else w

    @property
    def uniform_seeds(self) -> bool:
        return self._seed_probs is None

    @property
    def M(self) -> int:  # noqa: N802 - matches the usual notation
        return self.range_size

    def seed_prob(self, seed: int) -> float:
        if not 0 <= seed < self.seed_count:
            raise ParameterError(f"seed {seed} outside 0..{self.seed_count - 1}")
        return 1.0 / self.seed_count if self._seed_probs is None else float(self._seed_probs[seed])

    def seed_probs(self) -> np.ndarray:
        self._require_enumerable()
        if self._seed_probs is None:
            return np.full(self.seed_count, 1.0 / self.seed_count)
        return self._seed_probs

    def eval(self, seed: int, a: int) -> int:
        """Bucket of symbol ``a`` under ``seed``, in ``1..M``."""
        if not 0 <= a < self.domain_size:
            raise ParameterError(f"symbol {a} outside 0..{self.domain_size - 1}")
        if not 0 <= seed < self.seed_count:
            raise ParameterError(f"seed {seed} outside 0..{self.seed_count - 1}")
        return int(self.bucket_row(seed)[a]) + 1

    def bucket_row(self, seed: int) -> np.ndarray:
        """0-based buckets of every symbol under one seed."""
        return self._buckets(np.array([seed], dtype=object if seed >= 2**62 else np.int64))[0]

    def table(self) -> np.ndarray:
        """``(seed_count, |A|)`` array of 0-based buckets."""
        self._require_enumerable()
        if self.seed_count * self.domain_size > TABLE_CELL_CAP:
            raise ResourceError(f"seed table of {self.seed_count} x {self.domain_size} exceeds cap")
        return np.asarray(self._buckets(np.arange(self.seed_count, dtype=np.int64)), dtype=np.int64)

    def sample_seeds(self, rng: np.random.Generator, count: int) -> list[int]:
        """Seeds drawn from the seed distribution (uniform families only when lazy)."""
        if self._seed_probs is not None:
            return [int(x) for x in rng.choice(self.seed_count, size=count, p=self._seed_probs)]
        if self.seed_count < 2**62:
            return [int(x) for x in rng.integers(0, self.seed_count, size=count)]
        # big seed spaces: draw base-M digits directly
        return [_random_digits(rng, self.range_size, self.domain_size) for _ in range(count)]

    def _require_enumerable(self):
        if not self.enumerable:
            raise UnsupportedError(f"family {self.label} is not enumerable")

    def __repr__(self) -> str:
        return (f"HashFamily({self.label}, |A|={self.domain_size}, M={self.range_size}, "
                f"seeds={self.seed_count})")


def _random_digits(rng, radix: int, n: int) -> int:
    seed = 0
    for d in rng.integers(0, radix, size=n)[::-1]:
        seed = seed * radix + int(d)
    return seed


# --------------------------------------------------------------------------
# constructions


def make_binning_family(a_size: int, M: int, *, cap: int = EXPLICIT_SEED_CAP, lazy: bool = False) -> HashFamily:
    """Random binning: every one of the ``M^|A|`` assignments equally likely.

    Seed ``x`` assigns symbol ``a`` to bucket digit ``a`` of ``x`` in base ``M``.
    With ``lazy=True`` oversized families are allowed but only sampled.
    """
    if a_size < 1 or M < 1:
        raise ParameterError("a_size and M must be positive")
    count = M**a_size
    enumerable = count <= cap
    if not enumerable and not lazy:
        raise ResourceError(f"binning family has {count} seeds, over the cap {cap}")
    powers = [M**a for a in range(a_size)]

    def buckets(seeds: np.ndarray) -> np.ndarray:
        if seeds.dtype == object or count >= 2**62:
            rows = [[(int(x) // p) % M for p in powers] for x in seeds]
            return np.array(rows, dtype=np.int64)
        s = seeds.astype(np.int64)[:, None]
        return (s // np.array(powers, dtype=np.int64)[None, :]) % M

    return HashFamily(a_size, M, FamilyKind.BINNING, count, buckets, epsilon_claim=1.0,
                      enumerable=enumerable, label=f"binning(|A|={a_size},M={M})")


def gf2m_product_table(field: Gf2mField) -> np.ndarray:
    """``table[x, a] = x * a`` in the field, for all elements."""
    n = field.order
    out = np.zeros((n, n), dtype=np.int64)
    for x in range(n):
        for a in range(x, n):
            out[x, a] = out[a, x] = poly_mod(clmul(x, a), field.reduction_poly)
    return out


def make_gf2m_family(field: Gf2mField, l: int, j: int) -> HashFamily:
    """Piece ``j`` (1-based, most significant first) of ``X * a``, ``X`` uniform nonzero.

    Symbol ``a`` is the field element with the same bit pattern; the piece is
    an ``l``-bit value read as bucket ``piece + 1``.
    """
    m = field.m
    if l < 1 or m % l:
        raise ParameterError(f"piece width l={l} must divide m={m}")
    k = m // l
    if not 1 <= j <= k:
        raise ParameterError(f"piece index j={j} outside 1..{k}")
    shift = l * (k - j)
    mask = (1 << l) - 1
    products = gf2m_product_table(field)

    def buckets(seeds: np.ndarray) -> np.ndarray:
        x = np.asarray(seeds, dtype=np.int64) + 1
        return (products[x, :] >> shift) & mask

    return HashFamily(field.order, 1 << l, FamilyKind.GF2M_PIECE, field.order - 1, buckets,
                      epsilon_claim=1.0, label=f"gf2m(m={m},l={l},j={j})")


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % d for d in range(2, math.isqrt(n) + 1))


def make_affine_prime_family(a_size: int, M: int, p: int | None = None) -> HashFamily:
    """Carter-Wegman ``((alpha a + beta) mod p) mod M`` with ``alpha != 0``.

    The exact worst-case collision bound ``(ceil(p/M) - 1)/(p - 1)`` sets the
    claimed ``eps``.
    """
    if p is None:
        p = max(a_size, M, 2)
        while not _is_prime(p):
            p += 1
    if not _is_prime(p) or p < max(a_size, M):
        raise ParameterError(f"p={p} must be a prime at least max(|A|, M)")
    eps = M * (-(-p // M) - 1) / (p - 1)
    a = np.arange(a_size, dtype=np.int64)

    def buckets(seeds: np.ndarray) -> np.ndarray:
        s = np.asarray(seeds, dtype=np.int64)
        alpha = s // p + 1
        beta = s % p
        return ((alpha[:, None] * a[None, :] + beta[:, None]) % p) % M

    return HashFamily(a_size, M, FamilyKind.AFFINE_PRIME, p * (p - 1), buckets,
                      epsilon_claim=eps, label=f"affine(p={p},M={M})")


def make_custom_family(table, M: int, seed_probs=None, *, epsilon_claim: float | None = None,
                       label: str = "custom") -> HashFamily:
    """Family given by an explicit ``(seeds, |A|)`` table of 1-based buckets.

    Without ``epsilon_claim`` the smallest valid ``eps`` (``M`` times the
    worst pairwise collision probability) is computed exactly.
    """
    tab = np.asarray(table, dtype=np.int64)
    if tab.ndim != 2 or tab.size == 0:
        raise ValidationError("custom table must be a non-empty (seeds, |A|) matrix")
    if np.any(tab < 1) or np.any(tab > M):
        raise ValidationError(f"custom table entries must lie in 1..{M}")
    zero_based = tab - 1
    zero_based.setflags(write=False)

    def buckets(seeds: np.ndarray) -> np.ndarray:
        return zero_based[np.asarray(seeds, dtype=np.int64)]

    fam = HashFamily(tab.shape[1], M, FamilyKind.CUSTOM_TABLE, tab.shape[0], buckets,
                     seed_probs=seed_probs, label=label)
    if epsilon_claim is None:
        coll = collision_matrix(fam)
        np.fill_diagonal(coll, 0.0)
        epsilon_claim = float(M * coll.max()) if fam.domain_size > 1 else 0.0
    fam.epsilon_claim = float(epsilon_claim)
    return fam


def make_constant_family(a_size: int, M: int = 1) -> HashFamily:
    """Single function sending everything to bucket 1; collision probability 1."""
    return make_custom_family(np.ones((1, a_size)), M, epsilon_claim=float(M), label=f"constant(M={M})")


def make_identity_family(a_size: int) -> HashFamily:
    """Single injective function ``a -> a + 1`` with ``M = |A|``."""
    return make_custom_family(np.arange(1, a_size + 1)[None, :], a_size, epsilon_claim=1.0,
                              label=f"identity(|A|={a_size})")


def load_custom_family(stream: TextIO | str | bytes, *, epsilon_claim: float | None = None) -> HashFamily:
    """Parse ``M=<int> seeds=<int>`` followed by ``prob b_0 ... b_{|A|-1}`` lines."""
    if isinstance(stream, bytes):
        stream = stream.decode("utf-8")
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    rows: list[tuple[int, str]] = []
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append((lineno, line))
    if not rows:
        raise ParseError("empty hash family file")
    lineno, header = rows[0]
    fields = dict(part.split("=", 1) for part in header.split() if "=" in part)
    try:
        M = int(fields["M"])
        count = int(fields["seeds"])
    except (KeyError, ValueError):
        raise ParseError("header must read 'M=<int> seeds=<int>'", lineno) from None
    body = rows[1:]
    if len(body) != count:
        raise ParseError(f"header announces {count} seeds, found {len(body)}", lineno)
    probs, table = [], []
    for lineno, line in body:
        parts = line.split()
        try:
            probs.append(float(parts[0]))
            table.append([int(b) for b in parts[1:]])
        except (ValueError, IndexError):
            raise ParseError(f"cannot parse seed line {line!r}", lineno) from None
        if len(table[-1]) != len(table[0]) or not table[-1]:
            raise ParseError("every seed line needs the same number of buckets", lineno)
    probs_arr = np.array(probs)
    if np.any(probs_arr < 0) or abs(probs_arr.sum() - 1.0) > 1e-9:
        raise ValidationError("seed probabilities must be nonnegative and sum to 1")
    return make_custom_family(table, M, probs_arr / probs_arr.sum(), epsilon_claim=epsilon_claim,
                              label="custom_table")


# --------------------------------------------------------------------------
# exact certification


def collision_matrix(fam: HashFamily, *, counts: bool = False) -> np.ndarray:
    """``C[a1, a2] = Pr_X(f_X(a1) = f_X(a2))`` for every pair, diagonal 1.

    With ``counts=True`` (uniform seeds only) returns integer seed counts.
    """
    tab = fam.table()
    S, A = tab.shape
    w = np.ones(S) if counts else fam.seed_probs()
    if counts and not fam.uniform_seeds:
        raise UnsupportedError("integer collision counts need uniform seeds")
    out = np.zeros((A, A))
    # one bucket at a time keeps memory at O(S * A)
    for b in range(fam.range_size):
        hit = (tab == b).astype(float)
        out += (hit * w[:, None]).T @ hit
    return np.rint(out) if counts else out


def collision_probability(fam: HashFamily, a1: int, a2: int) -> Fraction | float:
    """Exact ``Pr_X(f_X(a1) = f_X(a2))``: a ``Fraction`` for uniform seeds."""
    if not fam.enumerable:
        raise UnsupportedError(f"family {fam.label} is not enumerable")
    for a in (a1, a2):
        if not 0 <= a < fam.domain_size:
            raise ParameterError(f"symbol {a} outside 0..{fam.domain_size - 1}")
    tab = fam.table()
    same = tab[:, a1] == tab[:, a2]
    if fam.uniform_seeds:
        return Fraction(int(same.sum()), fam.seed_count)
    return math.fsum(fam.seed_probs()[same])


def max_collision(fam: HashFamily) -> tuple[Fraction | float, tuple[int, int]]:
    """Worst pairwise collision probability over distinct symbols, with its pair."""
    A = fam.domain_size
    if A < 2:
        return (Fraction(0) if fam.uniform_seeds else 0.0), (0, 0)
    if fam.uniform_seeds:
        c = collision_matrix(fam, counts=True)
    else:
        c = collision_matrix(fam)
    np.fill_diagonal(c, -1)
    i, j = np.unravel_index(int(np.argmax(c)), c.shape)
    val = Fraction(int(c[i, j]), fam.seed_count) if fam.uniform_seeds else float(c[i, j])
    return val, (int(i), int(j))


def verify_universality(fam: HashFamily, level: Level | str, epsilon: float | None = None) -> VerificationReport:
    """Certify a family at one level of the hash hierarchy by enumeration."""
    level = Level(level)
    rep = VerificationReport()
    inst = fam.label
    if not fam.enumerable:
        rep.add(marker(f"{level.value}", inst, Verdict.PRECONDITION_FAILED, "family not enumerable"))
        return rep
    M = fam.range_size
    if level is Level.STRONGLY_UNIVERSAL:
        return _verify_strong(fam)
    eps = 1.0 if level is Level.UNIVERSAL2 else (fam.epsilon_claim if epsilon is None else float(epsilon))
    worst, pair = max_collision(fam)
    note = f"pair={pair[0]},{pair[1]} collision={worst}"
    rep.add(evaluate(f"{level.value}.collision", f"{inst} eps={eps:g}", float(worst), eps / M,
                     Relation.LE, note=note))
    return rep


def _verify_strong(fam: HashFamily) -> VerificationReport:
    rep = VerificationReport()
    inst = fam.label
    tab = fam.table()
    w = fam.seed_probs()
    M, A = fam.range_size, fam.domain_size
    # uniform marginals
    dev = 0.0
    for a in range(A):
        marg = np.bincount(tab[:, a], weights=w, minlength=M)
        dev = max(dev, float(np.abs(marg - 1.0 / M).max()))
    rep.add(evaluate("strongly_universal.marginal", inst, dev, 0.0, Relation.LE,
                     note="max |Pr(f(a)=m) - 1/M|"))
    if M**A <= STRONG_JOINT_CAP:
        idx = np.zeros(tab.shape[0], dtype=np.int64)
        for a in range(A):
            idx = idx * M + tab[:, a]
        joint = np.bincount(idx, weights=w, minlength=M**A)
        dev = float(np.abs(joint - float(M) ** -A).max())
        rep.add(evaluate("strongly_universal.joint", inst, dev, 0.0, Relation.LE,
                         note="max |joint - M^-|A||"))
    else:
        rep.flags.add("pairwise-only")
        dev = 0.0
        for a1 in range(A):
            for a2 in range(a1 + 1, A):
                pair = np.bincount(tab[:, a1] * M + tab[:, a2], weights=w, minlength=M * M)
                dev = max(dev, float(np.abs(pair - 1.0 / (M * M)).max()))
        rep.add(evaluate("strongly_universal.pairwise", inst, dev, 0.0, Relation.LE,
                         note="pairwise-only: full joint not enumerable"))
    return rep


def verify_hierarchy(fam: HashFamily, eps_grid=(1.0, 1.5, 2.0)) -> VerificationReport:
    """Strongly universal implies universal2, which implies eps-almost for eps >= 1."""
    rep = VerificationReport()
    strong = verify_universality(fam, Level.STRONGLY_UNIVERSAL)
    uni = verify_universality(fam, Level.UNIVERSAL2)
    if strong.passed and "pairwise-only" not in strong.flags:
        rep.add(marker("hierarchy.strong_implies_u2", fam.label,
                       Verdict.PASS if uni.passed else Verdict.FAIL))
    if uni.passed:
        ok = all(verify_universality(fam, Level.ALMOST_UNIVERSAL2, e).passed for e in eps_grid)
        rep.add(marker("hierarchy.u2_implies_almost", fam.label, Verdict.PASS if ok else Verdict.FAIL))
    return rep


def expected_preimage_check(fam: HashFamily, src: JointSource, epsilon: float | None = None) -> VerificationReport:
    """Expected preimage mass chain for every ``(a, e)``.

    ``E_X sum_{a' : f(a') = f(a)} P(a'|e) <= P(a|e) + (eps/M) sum_{a' != a} P(a'|e)
    <= P(a|e) + eps/M <= 2 max(P(a|e), eps/M)``.
    """
    if fam.domain_size != src.a_size:
        raise ParameterError("family domain does not match the source alphabet")
    eps = fam.epsilon_claim if epsilon is None else float(epsilon)
    M = fam.range_size
    coll = collision_matrix(fam)
    cond = src.conditionals  # (A, active E)
    lhs = coll @ cond
    others = cond.sum(axis=0, keepdims=True) - cond
    mid1 = cond + eps / M * others
    mid2 = cond + eps / M
    top = 2.0 * np.maximum(cond, eps / M)
    rep = VerificationReport()
    inst = f"{fam.label} eps={eps:g}"
    for cid, lo, hi in (("preimage.collisions", lhs, mid1), ("preimage.mass", mid1, mid2),
                        ("preimage.max", mid2, top)):
        slack = hi - lo
        a, e = np.unravel_index(int(np.argmin(slack)), slack.shape)
        rep.add(evaluate(cid, f"{inst} a={a} e={int(src.active_e[e])}", float(lo[a, e]),
                         float(hi[a, e]), Relation.LE))
    return rep
