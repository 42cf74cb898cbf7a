"""Finite-alphabet probability primitives.

Symbols are dense integers ``0..k-1``.  Joint sources are stored as an
``(a_size, e_size)`` matrix ``joint[a, e] = P_AE(a, e)``.
"""
from __future__ import annotations

import functools
import io
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, TextIO

import numpy as np

from .errors import (
    ParameterError,
    ParseError,
    ResourceError,
    UndefinedConditionalError,
    ValidationError,
)

INPUT_TOL = 1e-9
INTERNAL_TOL = 1e-12
DEFAULT_CELL_CAP = 10**7


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Pmf:
    """A probability vector over ``{0, ..., alphabet_size - 1}``."""

    probs: np.ndarray

    def __post_init__(self):
        probs = _frozen(self.probs)
        if probs.ndim != 1 or probs.size == 0:
            raise ValidationError("pmf must be a non-empty vector")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise ValidationError("pmf has a negative or non-finite entry")
        if abs(probs.sum() - 1.0) > INPUT_TOL:
            raise ValidationError(f"pmf sums to {probs.sum():.12g}, not 1")
        object.__setattr__(self, "probs", probs)

    @property
    def alphabet_size(self) -> int:
        return self.probs.size

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.probs > 0)

    def is_uniform(self, tol: float = 1e-12) -> bool:
        p = self.probs[self.probs > 0]
        return bool(np.ptp(p) <= tol) if p.size else True

    def __len__(self) -> int:
        return self.alphabet_size

    def __getitem__(self, i):
        return self.probs[i]

    def __repr__(self) -> str:
        return f"Pmf({np.array2string(self.probs, precision=6)})"


def shannon_entropy(p: Pmf | np.ndarray) -> float:
    """Shannon entropy in nats, with ``0 log 0 = 0``."""
    probs = p.probs if isinstance(p, Pmf) else np.asarray(p, dtype=float)
    q = probs[probs > 0]
    return float(-(q * np.log(q)).sum())


@dataclass(frozen=True, eq=False)
class JointSource:
    """Joint pmf ``P_AE`` on ``{0..a_size-1} x {0..e_size-1}``."""

    joint: np.ndarray

    def __post_init__(self):
        joint = _frozen(self.joint)
        if joint.ndim != 2 or joint.size == 0:
            raise ValidationError("joint must be a non-empty matrix")
        if np.any(joint < 0) or not np.all(np.isfinite(joint)):
            raise ValidationError("joint has a negative or non-finite entry")
        total = joint.sum()
        if abs(total - 1.0) > INPUT_TOL:
            raise ValidationError(f"joint mass is {total:.12g}, outside 1 +/- {INPUT_TOL:g}")
        object.__setattr__(self, "joint", joint)

    @classmethod
    def from_matrix(cls, matrix, *, normalize: bool = False) -> "JointSource":
        m = np.asarray(matrix, dtype=float)
        if normalize:
            m = m / m.sum()
        return cls(m)

    @classmethod
    def independent(cls, p_a, p_e) -> "JointSource":
        return cls(np.outer(np.asarray(p_a, float), np.asarray(p_e, float)))

    @property
    def a_size(self) -> int:
        return self.joint.shape[0]

    @property
    def e_size(self) -> int:
        return self.joint.shape[1]

    @functools.cached_property
    def p_e(self) -> np.ndarray:
        return _frozen(self.joint.sum(axis=0))

    @functools.cached_property
    def p_a(self) -> np.ndarray:
        return _frozen(self.joint.sum(axis=1))

    @functools.cached_property
    def active_e(self) -> np.ndarray:
        """Indices ``e`` with ``P_E(e) > 0``."""
        return np.flatnonzero(self.p_e > 0)

    @functools.cached_property
    def conditionals(self) -> np.ndarray:
        """Matrix of ``P_{A|E}(a|e)`` restricted to the active columns."""
        cols = self.joint[:, self.active_e]
        return _frozen(cols / cols.sum(axis=0, keepdims=True))

    def __repr__(self) -> str:
        return f"JointSource(a_size={self.a_size}, e_size={self.e_size})"


def example_source() -> JointSource:
    """The binary source with ``P_AE(0,0)=0.7`` and 0.1 elsewhere."""
    return JointSource(np.array([[0.7, 0.1], [0.1, 0.1]]))


def marginal_e(src: JointSource) -> Pmf:
    return Pmf(src.p_e)


def conditional_given_e(src: JointSource, e: int) -> Pmf:
    if not 0 <= e < src.e_size:
        raise UndefinedConditionalError(f"symbol e={e} outside 0..{src.e_size - 1}")
    pe = src.p_e[e]
    if pe <= 0:
        raise UndefinedConditionalError(f"P_E({e}) = 0; conditional undefined")
    col = src.joint[:, e] / pe
    return Pmf(col / col.sum())


def tilt(p: Pmf, t: float) -> Pmf:
    """Tilted distribution ``p(a)^(1+t) / sum_a p(a)^(1+t)``.

    Computed in log space so very large ``t`` does not underflow.
    """
    if t <= -1:
        raise ParameterError(f"tilt requires t > -1, got {t}")
    probs = p.probs
    out = np.zeros_like(probs)
    mask = probs > 0
    logw = (1.0 + t) * np.log(probs[mask])
    logw -= logw.max()
    w = np.exp(logw)
    out[mask] = w / w.sum()
    return Pmf(out / out.sum())


def log_partition(p: Pmf | np.ndarray, t: float) -> float:
    """``log sum_a p(a)^(1+t)`` over the support; equals ``-gamma(t)``."""
    probs = p.probs if isinstance(p, Pmf) else np.asarray(p, float)
    lp = np.log(probs[probs > 0])
    x = (1.0 + t) * lp
    mx = x.max()
    return float(mx + np.log(np.exp(x - mx).sum()))


# --------------------------------------------------------------------------
# i.i.d. extensions


@dataclass(frozen=True, eq=False)
class ProductSource:
    """Virtual n-fold product ``P_AE^n``.

    Blocks are indexed in mixed radix with the first coordinate most
    significant, so index order equals lexicographic order of blocks.
    """

    base: JointSource
    n: int
    cap: int = DEFAULT_CELL_CAP

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError("blocklength n must be positive")
        if self.cells > self.cap:
            raise ResourceError(
                f"{self.a_blocks} x {self.e_blocks} cells exceeds cap {self.cap}"
            )

    @property
    def a_blocks(self) -> int:
        return self.base.a_size**self.n

    @property
    def e_blocks(self) -> int:
        return self.base.e_size**self.n

    @property
    def cells(self) -> int:
        return self.a_blocks * self.e_blocks

    def prob(self, a_vec, e_vec) -> float:
        if len(a_vec) != self.n or len(e_vec) != self.n:
            raise ParameterError("block length mismatch")
        return math.prod(float(self.base.joint[a, e]) for a, e in zip(a_vec, e_vec))

    def a_index(self, a_vec) -> int:
        return block_index(a_vec, self.base.a_size)

    def a_block(self, index: int) -> tuple[int, ...]:
        return block_digits(index, self.base.a_size, self.n)

    def e_block(self, index: int) -> tuple[int, ...]:
        return block_digits(index, self.base.e_size, self.n)

    def cells_iter(self) -> Iterator[tuple[tuple[int, ...], tuple[int, ...], float]]:
        for ai in range(self.a_blocks):
            a_vec = self.a_block(ai)
            for ei in range(self.e_blocks):
                e_vec = self.e_block(ei)
                yield a_vec, e_vec, self.prob(a_vec, e_vec)

    def to_joint(self) -> JointSource:
        """Materialise the product as a ``JointSource`` over block indices."""
        m = self.base.joint
        out = m
        for _ in range(self.n - 1):
            out = np.kron(out, m)
        return JointSource(out / out.sum())


def block_index(vec, radix: int) -> int:
    idx = 0
    for v in vec:
        idx = idx * radix + int(v)
    return idx


def block_digits(index: int, radix: int, n: int) -> tuple[int, ...]:
    digits = []
    for _ in range(n):
        index, r = divmod(index, radix)
        digits.append(r)
    return tuple(reversed(digits))


def iid_extend(src: JointSource, n: int, cap: int = DEFAULT_CELL_CAP) -> ProductSource:
    return ProductSource(src, n, cap)


# --------------------------------------------------------------------------
# text format


def _parse_lines(lines: Iterable[str]) -> dict[tuple[int, int], float]:
    cells: dict[tuple[int, int], float] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(f"expected 'a e p', got {raw.strip()!r}", lineno)
        try:
            a, e = int(parts[0]), int(parts[1])
            p = float(parts[2])
        except ValueError:
            raise ParseError(f"cannot parse {raw.strip()!r}", lineno) from None
        if a < 0 or e < 0:
            raise ParseError("symbols must be nonnegative integers", lineno)
        if not math.isfinite(p):
            raise ParseError("probability must be finite", lineno)
        if p < 0:
            raise ValidationError(f"line {lineno}: negative probability {p}")
        if (a, e) in cells:
            raise ParseError(f"duplicate cell ({a}, {e})", lineno)
        cells[(a, e)] = p
    return cells


def load_source(stream: TextIO | bytes | str) -> JointSource:
    """Parse the ``a e p`` source-file format into a validated ``JointSource``.

    Accepts a text stream, raw bytes (UTF-8), or the text itself.
    """
    if isinstance(stream, bytes):
        stream = io.StringIO(stream.decode("utf-8"))
    elif isinstance(stream, str):
        stream = io.StringIO(stream)
    cells = _parse_lines(stream)
    if not cells:
        raise ParseError("no probability cells found")
    a_size = max(a for a, _ in cells) + 1
    e_size = max(e for _, e in cells) + 1
    joint = np.zeros((a_size, e_size))
    for (a, e), p in cells.items():
        joint[a, e] = p
    return JointSource(joint)


def dump_source(src: JointSource) -> str:
    rows = [
        f"{a} {e} {float(src.joint[a, e])!r}"
        for a in range(src.a_size)
        for e in range(src.e_size)
        if src.joint[a, e] > 0
    ]
    return "\n".join(rows) + "\n"


def random_source(rng: np.random.Generator, a_size: int, e_size: int, *, sparsity: float = 0.0) -> JointSource:
    """Dirichlet(1) joint source; ``sparsity`` zeroes cells at random."""
    w = rng.dirichlet(np.ones(a_size * e_size)).reshape(a_size, e_size)
    if sparsity > 0:
        keep = rng.random(w.shape) >= sparsity
        keep.flat[rng.integers(w.size)] = True
        w = w * keep
    return JointSource(w / w.sum())
