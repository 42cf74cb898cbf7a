"""Secure multipath transmission by GF(2^m) masking.

The sender multiplies the m-bit message ``A`` by a nonzero mask ``X`` and
sends the ``k = m/l`` pieces of ``X * A`` over separate paths.  An
eavesdropper on path ``j`` sees one piece, its side information ``E`` and
``X``; that is exactly the GF piece hash family, so the leakage accounting
delegates to the one-shot lab.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .bounds import BoundEvaluator, BoundKind
from .errors import InvalidMaskError, ParameterError, ResourceError
from .gf2m import Gf2mField, gf2_inv, gf2_mul, join_pieces, split_pieces
from .hashing import make_gf2m_family
from .measures import RenyiOrderSpec
from .oneshot import OneShotInstance, hashed_conditional_entropy
from .probability import JointSource, ProductSource

MAX_EAVESDROP_M = 10


@dataclass(frozen=True)
class MultipathConfig:
    m: int
    l: int
    j: int = 1
    field: Gf2mField | None = None

    def __post_init__(self):
        if self.l < 1 or self.m % self.l:
            raise ParameterError(f"path width l={self.l} must divide m={self.m}")
        if not 1 <= self.j <= self.m // self.l:
            raise ParameterError(f"tapped piece j={self.j} outside 1..{self.m // self.l}")
        if self.field is None:
            object.__setattr__(self, "field", Gf2mField.standard(self.m))
        elif self.field.m != self.m:
            raise ParameterError("field width does not match m")

    @property
    def k(self) -> int:
        return self.m // self.l


def _mask(cfg: MultipathConfig, X: int) -> int:
    if X == 0:
        raise InvalidMaskError("the mask X must be a nonzero field element")
    return cfg.field.check(X)


def encode(cfg: MultipathConfig, A: int, X: int) -> list[int]:
    """The ``k`` pieces of ``X * A``, most significant first."""
    X = _mask(cfg, X)
    return split_pieces(gf2_mul(cfg.field, X, cfg.field.check(A)), cfg.m, cfg.l)


def decode(cfg: MultipathConfig, pieces, X: int) -> int:
    """Reassemble the pieces and undo the mask."""
    X = _mask(cfg, X)
    if len(pieces) != cfg.k or any(not 0 <= p < (1 << cfg.l) for p in pieces):
        raise ParameterError(f"expected {cfg.k} pieces of {cfg.l} bits")
    return gf2_mul(cfg.field, gf2_inv(cfg.field, X), join_pieces(pieces, cfg.l))


def eavesdropper_uncertainty(cfg: MultipathConfig, src: JointSource, spec: RenyiOrderSpec) -> float:
    """Exact ``H(A | piece j of X*A, E, X)`` with ``X`` uniform over nonzero elements."""
    if cfg.m > MAX_EAVESDROP_M:
        raise ResourceError(f"m={cfg.m} exceeds the enumeration limit {MAX_EAVESDROP_M}")
    if src.a_size != cfg.field.order:
        raise ParameterError(f"source alphabet must have 2^{cfg.m} symbols")
    fam = make_gf2m_family(cfg.field, cfg.l, cfg.j)
    return hashed_conditional_entropy(OneShotInstance(src, fam, name="multipath"), spec)


def demo_line(cfg: MultipathConfig, A: int, X: int) -> str:
    pieces = encode(cfg, A, X)
    width = max(1, math.ceil(cfg.m / 4))
    pw = max(1, math.ceil(cfg.l / 4))
    hex_pieces = ",".join(f"{p:0{pw}x}" for p in pieces)
    return f"A={A:0{width}x} X={X:0{width}x} pieces={hex_pieces} decoded={decode(cfg, pieces, X):0{width}x}"


def uncertainty_envelope(cfg: MultipathConfig, base: JointSource, n: int, s: float) -> float:
    """One-shot upper envelope ``n g_minus(s, l log 2 / n) + log(2)/s`` on ``H_{1-s}``.

    Here ``A`` is an n-block of ``base`` read as one field element, so
    ``|base alphabet|^n`` must equal ``2^m``.  The envelope also bounds the
    Shannon uncertainty, which never exceeds ``H_{1-s}``.
    """
    if not 0 < s <= 1:
        raise ParameterError(f"envelope needs s in (0, 1], got {s}")
    if base.a_size**n != cfg.field.order:
        raise ParameterError(f"|A|^n = {base.a_size**n} differs from 2^{cfg.m}")
    rate = cfg.l * math.log(2) / n
    return n * BoundEvaluator(base, BoundKind.G_MINUS, s)(rate) + math.log(2) / s


def block_source(base: JointSource, n: int) -> JointSource:
    """The n-fold product as a joint over block indices."""
    return ProductSource(base, n).to_joint()
