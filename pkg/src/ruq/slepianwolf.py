"""Finite-blocklength Slepian-Wolf coding with MAP decoding.

A system pairs an n-fold product source with one deterministic encoder on
``A^n``.  Blocks are addressed by their mixed-radix index (first coordinate
most significant), so smaller index means lexicographically smaller block.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import measures as ms
from .errors import ParameterError, ResourceError
from .hashing import HashFamily
from .probability import JointSource, ProductSource, block_index
from .report import Relation, VerificationReport, Verdict, evaluate, marker

TIE_RTOL = 1e-12
EXHAUSTIVE_CAP = 2**17


@dataclass(frozen=True, eq=False)
class SwSystem:
    """A product source and an encoder ``f_n : A^n -> {0..M-1}`` (0-based).

    Args:
        product: the n-fold product source.
        encoder: message of every block index, length ``|A|^n``.
        M: message-set size.
        label: description used in reports.
    """

    product: ProductSource
    encoder: np.ndarray
    M: int
    label: str = "sw"

    def __post_init__(self):
        enc = np.asarray(self.encoder, dtype=np.int64)
        if enc.shape != (self.product.a_blocks,):
            raise ParameterError(f"encoder must map all {self.product.a_blocks} blocks")
        if self.M < 1 or np.any(enc < 0) or np.any(enc >= self.M):
            raise ParameterError(f"encoder outputs must lie in 0..{self.M - 1}")
        enc = enc.copy()
        enc.setflags(write=False)
        object.__setattr__(self, "encoder", enc)
        joint = self.product.to_joint().joint
        object.__setattr__(self, "_joint", joint)

    @classmethod
    def from_family(cls, product: ProductSource, family: HashFamily, seed: int) -> "SwSystem":
        """Encoder = one seed of a family whose domain is the block index set."""
        if family.domain_size != product.a_blocks:
            raise ParameterError("family domain must equal the number of source blocks")
        row = family.bucket_row(seed)
        return cls(product, row, family.range_size, f"{family.label}[seed={seed}],n={product.n}")

    @property
    def n(self) -> int:
        return self.product.n

    @property
    def joint(self) -> np.ndarray:
        """``P^n(a, e)`` over block indices."""
        return self._joint

    def message_joint(self) -> np.ndarray:
        """``P(a, m, e)`` as an array of shape ``(a_blocks, M, e_blocks)``."""
        out = np.zeros((self.product.a_blocks, self.M, self.product.e_blocks))
        out[np.arange(self.product.a_blocks), self.encoder, :] = self._joint
        return out

    def enlarged_source(self) -> JointSource:
        """``A^n`` jointly with the observation ``(f(A^n), E^n)``."""
        mj = self.message_joint()
        return JointSource(mj.reshape(mj.shape[0], -1))

    @property
    def empty_messages(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.M), self.encoder)


def decoder_table(sys: SwSystem) -> np.ndarray:
    """MAP decisions ``g(m, e)`` as block indices; ``-1`` marks an empty preimage.

    Ties within a relative ``1e-12`` go to the smallest block index.
    """
    joint = sys.joint
    out = np.full((sys.M, sys.product.e_blocks), -1, dtype=np.int64)
    for m in range(sys.M):
        pre = np.flatnonzero(sys.encoder == m)
        if pre.size == 0:
            continue
        block = joint[pre, :]
        top = block.max(axis=0)
        near = block >= top[None, :] * (1.0 - TIE_RTOL)
        out[m] = pre[np.argmax(near, axis=0)]
    return out


def map_decode(sys: SwSystem, m: int, e_vec) -> tuple[int, ...] | None:
    """MAP estimate of the source block, or None when ``m`` has no preimage."""
    prod = sys.product
    if not 0 <= m < sys.M:
        raise ParameterError(f"message {m} outside 0..{sys.M - 1}")
    e_idx = _e_index(prod, e_vec)
    if sys.joint[:, e_idx].sum() <= 0:
        raise ParameterError(f"side information {tuple(e_vec)} has probability 0")
    a_idx = decoder_table(sys)[m, e_idx]
    return None if a_idx < 0 else prod.a_block(int(a_idx))


def _e_index(prod: ProductSource, e_vec) -> int:
    if len(e_vec) != prod.n or any(not 0 <= int(e) < prod.base.e_size for e in e_vec):
        raise ParameterError(f"side-information block {tuple(e_vec)} is not in E^{prod.n}")
    return block_index(e_vec, prod.base.e_size)


@dataclass(frozen=True)
class DecodingProbabilities:
    correct: float
    error: float
    empty_preimage: bool


def correct_probability(sys: SwSystem) -> DecodingProbabilities:
    """Exact ``P_c`` of the MAP decoder and ``P_e = 1 - P_c``."""
    table = decoder_table(sys)
    joint = sys.joint
    pc = 0.0
    for m in range(sys.M):
        ok = table[m] >= 0
        if not ok.any():
            continue
        # mass of (a, e) with f(a) = m and g(m, e) = a
        a = table[m, ok]
        pc += float(joint[a, np.flatnonzero(ok)].sum())
    return DecodingProbabilities(pc, 1.0 - pc, bool(sys.empty_messages.size))


def correct_probability_by_max(sys: SwSystem) -> float:
    """``sum_{m,e} max_a P(a, m, e)``; independent of any tie-breaking rule."""
    return float(sys.message_joint().max(axis=0).sum())


def exhaustive_best_correct_probability(sys: SwSystem, cap: int = EXHAUSTIVE_CAP) -> float:
    """Best ``P_c`` over every decoder table ``g : (m, e) -> A^n``, by brute force."""
    cells = sys.M * sys.product.e_blocks
    options = sys.product.a_blocks
    if options**cells > cap:
        raise ResourceError(f"{options}^{cells} decoder tables exceed the cap {cap}")
    mj = sys.message_joint().reshape(options, cells)
    best = 0.0
    cols = np.arange(cells)
    for choice in itertools.product(range(options), repeat=cells):
        best = max(best, float(mj[np.array(choice), cols].sum()))
    return best


# --------------------------------------------------------------------------
# verification


def verify_strong_converse_identity(sys: SwSystem) -> VerificationReport:
    """``-log P_c`` against ``H^up_inf(A^n | f(A^n), E^n)`` of the enlarged joint."""
    rep = VerificationReport()
    probs = correct_probability(sys)
    if probs.empty_preimage:
        rep.flags.add("empty-preimage")
    if probs.correct <= 0:
        rep.add(marker("sw.strong_converse", sys.label, Verdict.DEGENERATE, "P_c = 0",
                       math.inf, math.inf))
        return rep
    lhs = -math.log(probs.correct)
    rhs = ms.min_gallager_entropy(sys.enlarged_source())
    rep.add(evaluate("sw.strong_converse", sys.label, lhs, rhs, Relation.EQ))
    return rep


@dataclass(frozen=True)
class ConverseChainTerms:
    s: float
    neg_log_pc: float
    gallager: float
    plain: float
    error: float
    quadratic: float

    @property
    def taylor_bound(self) -> float:
        """``-log(1 - s P_e + (s(1+s)/2) * quadratic)``."""
        s = self.s
        return -math.log(1.0 - s * self.error + 0.5 * s * (1.0 + s) * self.quadratic)


def converse_chain_terms(sys: SwSystem, s: float) -> ConverseChainTerms:
    """Every quantity of the finite-n converse chain, computed exactly."""
    if s < 1:
        raise ParameterError(f"the chain is stated for s >= 1, got {s}")
    probs = correct_probability(sys)
    enlarged = sys.enlarged_source()
    # mass outside the decoded block, per (m, e)
    mj = sys.message_joint()
    table = decoder_table(sys)
    p_me = mj.sum(axis=0)
    decoded = np.zeros_like(p_me)
    m_idx, e_idx = np.nonzero(table >= 0)
    decoded[m_idx, e_idx] = mj[table[m_idx, e_idx], m_idx, e_idx]
    with np.errstate(divide="ignore", invalid="ignore"):
        miss = np.where(p_me > 0, (p_me - decoded) / p_me, 0.0)
    quadratic = float((p_me * miss**2).sum())
    return ConverseChainTerms(
        s=s,
        neg_log_pc=-math.log(probs.correct),
        gallager=ms.gallager_entropy(enlarged, s),
        plain=ms.plain_entropy(enlarged, s),
        error=probs.error,
        quadratic=quadratic,
    )


def verify_converse_chain(sys: SwSystem, s: float) -> VerificationReport:
    """``-log P_c >= (s/(1+s)) H^up_{1+s} ; s H^up_{1+s} >= s H_{1+s} >= -log(1 - s P_e + ...)``.

    The first link carries the factor ``s/(1+s)``: ``P_c`` is a sum of
    per-observation maxima, each at most the ``(1+s)``-norm.
    """
    t = converse_chain_terms(sys, s)
    desc = f"{sys.label}|s={s:g}"
    rep = VerificationReport()
    rep.add(evaluate("chain.pc_gallager", desc, t.neg_log_pc, s / (1.0 + s) * t.gallager, Relation.GE))
    rep.add(evaluate("chain.gallager_plain", desc, s * t.gallager, s * t.plain, Relation.GE))
    rep.add(evaluate("chain.plain_taylor", desc, s * t.plain, t.taylor_bound, Relation.GE))
    return rep


def error_exponent_trend(base: JointSource, rate: float, ns, rng: np.random.Generator) -> VerificationReport:
    """``-(1/n) log P_e`` for random-binning encoders with ``M_n = ceil(exp(n R))``.

    A trend report over the listed blocklengths, not a limit statement.
    """
    rep = VerificationReport()
    for n in ns:
        prod = ProductSource(base, n)
        M = int(math.ceil(math.exp(n * rate)))
        enc = rng.integers(0, M, size=prod.a_blocks)
        sys = SwSystem(prod, enc, M, f"binning-draw,n={n},M={M}")
        pe = correct_probability(sys).error
        value = -math.log(pe) / n if pe > 0 else math.inf
        rep.add(evaluate("sw.exponent_trend", sys.label, value, 0.0, Relation.GE))
    return rep
