"""Conditional Rényi information measures on finite joint sources.

All quantities are in nats.  Throughout, ``s`` is the order offset, so the
Rényi order is ``1 + s``:

* plain        ``H_{1+s}(A|E) = -(1/s) log sum_e P_E(e) sum_a P(a|e)^(1+s)``
* gallager     ``H^up_{1+s}(A|E) = -((1+s)/s) log sum_e P_E(e) ||P(.|e)||_{1+s}``
* two_param    ``H_{1+s|1+t}``, with ``H_{1+s|1+s} = H^up_{1+s}``
* min / min_gallager, the ``s -> inf`` limits.

Sums run over the support only (``0^(1+s) = 0``); large orders are
evaluated with max-shifted log-sum-exp.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, UsageError
from .probability import JointSource, Pmf

SHANNON_SWITCH = 1e-9


class Variant(str, enum.Enum):
    SHANNON = "shannon"
    PLAIN = "plain"
    GALLAGER = "gallager"
    TWO_PARAM = "two_param"
    MIN = "min"
    MIN_GALLAGER = "min_gallager"


@dataclass(frozen=True)
class RenyiOrderSpec:
    variant: Variant = Variant.SHANNON
    s: float = 0.0
    t: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.variant is Variant.TWO_PARAM and self.t is None:
            raise ParameterError("two_param variant needs t")

    @classmethod
    def shannon(cls) -> "RenyiOrderSpec":
        return cls(Variant.SHANNON)

    @classmethod
    def plain(cls, s: float) -> "RenyiOrderSpec":
        return cls(Variant.PLAIN, s)

    @classmethod
    def gallager(cls, s: float) -> "RenyiOrderSpec":
        return cls(Variant.GALLAGER, s)

    def describe(self) -> str:
        v = self.variant.value
        if self.variant in (Variant.PLAIN, Variant.GALLAGER):
            return f"{v}(s={self.s:g})"
        if self.variant is Variant.TWO_PARAM:
            return f"{v}(s={self.s:g},t={self.t:g})"
        return v


# --------------------------------------------------------------------------
# low-level log-domain helpers


def logsumexp(x, axis=None, keepdims: bool = False):
    """Max-shifted log-sum-exp; all ``-inf`` slices give ``-inf``.

    Kept local because ``scipy.special.logsumexp`` call overhead dominates
    the tiny arrays evaluated inside the 1-D optimisers.
    """
    x = np.asarray(x, float)
    m = np.max(x, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(x - m), axis=axis, keepdims=True)) + m
    if not keepdims:
        out = np.squeeze(out, axis=axis) if axis is not None else out.reshape(())
    return out


def _log_cond(src: JointSource) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(src.conditionals)


def _log_pe(src: JointSource) -> np.ndarray:
    return np.log(src.p_e[src.active_e])


def log_norms(src: JointSource, u: float) -> np.ndarray:
    """``log sum_a P(a|e)^(1+u)`` for every active ``e`` (``u >= -1``)."""
    lc = _log_cond(src)
    if 1.0 + u == 0.0:
        return np.log((src.conditionals > 0).sum(axis=0).astype(float))
    return logsumexp((1.0 + u) * lc, axis=0)


def _tilted_mean_log(src: JointSource, u: float) -> np.ndarray:
    """``sum_a P^(1+u) log P / sum_a P^(1+u)`` per active ``e``."""
    lc = _log_cond(src)
    x = (1.0 + u) * lc
    w = np.exp(x - logsumexp(x, axis=0, keepdims=True))
    safe = np.where(w > 0, lc, 0.0)
    return (w * safe).sum(axis=0)


def log_gallager_moment_grid(src: JointSource, us: np.ndarray) -> np.ndarray:
    """Vectorised ``log_gallager_moment`` over an array of orders ``us > -1``."""
    us = np.asarray(us, float)
    lc = _log_cond(src)
    norms = logsumexp((1.0 + us)[:, None, None] * lc[None, :, :], axis=1)
    return logsumexp(_log_pe(src)[None, :] + norms / (1.0 + us)[:, None], axis=1)


def log_plain_moment(src: JointSource, s: float) -> float:
    """``log sum_e P_E sum_a P(a|e)^(1+s) = -s H_{1+s}``."""
    return float(logsumexp(_log_pe(src) + log_norms(src, s)))


def log_gallager_moment(src: JointSource, s: float) -> float:
    """``log sum_e P_E (sum_a P(a|e)^(1+s))^(1/(1+s)) = -(s/(1+s)) H^up_{1+s}``."""
    return float(logsumexp(_log_pe(src) + log_norms(src, s) / (1.0 + s)))


def _shannon(src: JointSource) -> float:
    c = src.conditionals
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(c > 0, c * np.log(c), 0.0)
    return float(-(src.p_e[src.active_e] * terms.sum(axis=0)).sum())


# --------------------------------------------------------------------------
# public measures


def relative_entropy(p: Pmf | np.ndarray, q: np.ndarray) -> float:
    pp = p.probs if isinstance(p, Pmf) else np.asarray(p, float)
    qq = np.asarray(q, float)
    mask = pp > 0
    if np.any(qq[mask] <= 0):
        return float("inf")
    return float((pp[mask] * (np.log(pp[mask]) - np.log(qq[mask]))).sum())


def renyi_divergence(p: Pmf | np.ndarray, q, s: float) -> float:
    """``D_{1+s}(p||q) = (1/s) log sum p^(1+s) q^(-s)`` for a sub-distribution ``q``."""
    pp = np.ravel(p.probs if isinstance(p, Pmf) else np.asarray(p, float))
    qq = np.ravel(np.asarray(q, float))
    if pp.shape != qq.shape:
        raise ParameterError("p and q must have the same shape")
    if np.any(qq < 0):
        raise ParameterError("q must be nonnegative")
    if abs(s) < SHANNON_SWITCH:
        return relative_entropy(pp, qq)
    mask = pp > 0
    lp = np.log(pp[mask])
    qm = qq[mask]
    if s > 0 and np.any(qm == 0):
        return float("inf")
    with np.errstate(divide="ignore"):
        lq = np.log(qm)
    # q == 0 with s < 0 contributes 0^(-s) = 0
    x = np.where(qm > 0, (1 + s) * lp - s * lq, -np.inf)
    lse = logsumexp(x)
    if not np.isfinite(lse):
        return float("inf")
    return float(lse / s)


def _check_order(s: float, *, allow_minus_one: bool = False):
    lower_ok = s >= -1 if allow_minus_one else s > -1
    if not (lower_ok and np.isfinite(s)):
        raise ParameterError(f"order parameter s={s} outside the domain (-1, inf)")


def plain_entropy(src: JointSource, s: float) -> float:
    """``H_{1+s}(A|E)``; ``s = -1`` gives the conditional Hartley value ``H_0``."""
    _check_order(s, allow_minus_one=True)
    if abs(s) < SHANNON_SWITCH:
        return _shannon(src)
    return -log_plain_moment(src, s) / s


def gallager_entropy(src: JointSource, s: float) -> float:
    """``H^up_{1+s}(A|E)``; ``s = -1`` gives the limit ``log max_e |supp P(.|e)|``."""
    _check_order(s, allow_minus_one=True)
    if s == -1:
        return float(np.log((src.conditionals > 0).sum(axis=0).max()))
    if abs(s) < SHANNON_SWITCH:
        return _shannon(src)
    return -(1.0 + s) / s * log_gallager_moment(src, s)


def two_param_entropy(src: JointSource, s: float, t: float) -> float:
    """``H_{1+s|1+t}(A|E)``."""
    _check_order(s)
    _check_order(t)
    lt = log_norms(src, t)
    if abs(s) < SHANNON_SWITCH:
        # s -> 0 limit: (1+t) H(A|E) + sum_e P_E log N_e(t)
        return (1.0 + t) * _shannon(src) + float((src.p_e[src.active_e] * lt).sum())
    ls = log_norms(src, s)
    val = logsumexp(_log_pe(src) + ls - s / (1.0 + t) * lt)
    return float(-(1.0 + t) / s * val)


def min_entropy(src: JointSource) -> float:
    return float(-np.log(src.conditionals.max()))


def min_gallager_entropy(src: JointSource) -> float:
    pe = src.p_e[src.active_e]
    return float(-np.log((pe * src.conditionals.max(axis=0)).sum()))


def _relative_entropy_q(src: JointSource, spec: RenyiOrderSpec, q) -> float:
    qe = np.asarray(q.probs if isinstance(q, Pmf) else q, float)
    if qe.shape != (src.e_size,):
        raise ParameterError("relative_q must be a pmf over E")
    ref = np.broadcast_to(qe, src.joint.shape)
    if spec.variant is Variant.SHANNON:
        return -relative_entropy(src.joint.ravel(), ref.ravel())
    _check_order(spec.s)
    return -renyi_divergence(src.joint.ravel(), ref.ravel(), spec.s)


def conditional_entropy(src: JointSource, spec: RenyiOrderSpec, relative_q=None) -> float:
    """Evaluate the conditional entropy selected by ``spec`` (nats).

    With ``relative_q`` the value ``-D_{1+s}(P_AE || I_A x Q_E)`` is returned
    (only the shannon and plain variants accept it).
    """
    v = spec.variant
    if relative_q is not None:
        if v not in (Variant.SHANNON, Variant.PLAIN):
            raise UsageError(f"relative_q is not supported for variant {v.value}")
        return _relative_entropy_q(src, spec, relative_q)
    if v is Variant.SHANNON:
        return _shannon(src)
    if v is Variant.PLAIN:
        return plain_entropy(src, spec.s)
    if v is Variant.GALLAGER:
        return gallager_entropy(src, spec.s)
    if v is Variant.TWO_PARAM:
        return two_param_entropy(src, spec.s, spec.t)
    if v is Variant.MIN:
        return min_entropy(src)
    return min_gallager_entropy(src)


def gallager_phi(src: JointSource, s: float) -> float:
    """Gallager function ``log sum_e P_E (sum_a P(a|e)^(1/(1-s)))^(1-s)``, ``s < 1``."""
    if not s < 1:
        raise ParameterError(f"Gallager function needs s < 1, got {s}")
    u = 1.0 / (1.0 - s) - 1.0
    return float(logsumexp(_log_pe(src) + (1.0 - s) * log_norms(src, u)))


def optimizer_q(src: JointSource, s: float) -> Pmf:
    """The ``Q_E`` maximising ``H_{1+s}(A|E || Q_E)``."""
    if not s > -1:
        raise ParameterError(f"optimizer_q needs s > -1, got {s}")
    if abs(s) < SHANNON_SWITCH:
        raise ParameterError("s = 0: the maximiser is P_E (Shannon limit)")
    with np.errstate(divide="ignore"):
        lj = np.log(src.joint)
    logw = np.full(src.e_size, -np.inf)
    active = src.active_e
    logw[active] = logsumexp((1.0 + s) * lj[:, active], axis=0) / (1.0 + s)
    w = np.exp(logw - logw[active].max())
    return Pmf(w / w.sum())


# --------------------------------------------------------------------------
# scaled forms and critical rates


def scaled_entropy(src: JointSource, t: float) -> float:
    """``t H_{1+t}(A|E) = -log sum_e P_E sum_a P^(1+t)``; smooth through ``t = 0``."""
    return -log_plain_moment(src, t)


def scaled_two_param(src: JointSource, t: float, s: float) -> float:
    """``t H_{1+t|1+s}(A|E)``; smooth through ``t = 0``."""
    ls = log_norms(src, s)
    lt = log_norms(src, t)
    return float(-(1.0 + s) * logsumexp(_log_pe(src) + lt - t / (1.0 + s) * ls))


def scaled_entropy_grid(src: JointSource, ts) -> np.ndarray:
    """Vectorised ``scaled_entropy`` over an array of ``t > -1``."""
    ts = np.asarray(ts, float)
    lc = _log_cond(src)
    x = _log_pe(src)[None, None, :] + (1.0 + ts)[:, None, None] * lc[None, :, :]
    return -logsumexp(x.reshape(ts.size, -1), axis=1)


def scaled_two_param_grid(src: JointSource, ts, s: float) -> np.ndarray:
    """Vectorised ``scaled_two_param`` over an array of ``t > -1``."""
    ts = np.asarray(ts, float)
    lc = _log_cond(src)
    ls = log_norms(src, s)
    lt = logsumexp((1.0 + ts)[:, None, None] * lc[None, :, :], axis=1)
    x = _log_pe(src)[None, :] + lt - (ts / (1.0 + s))[:, None] * ls[None, :]
    return -(1.0 + s) * logsumexp(x, axis=1)


def d_scaled_entropy(src: JointSource, t: float) -> float:
    """Derivative of ``t -> t H_{1+t}``: mean of ``-log P(a|e)`` under the tilt."""
    x = _log_pe(src) + log_norms(src, t)
    w = np.exp(x - logsumexp(x))
    return float(-(w * _tilted_mean_log(src, t)).sum())


def d_scaled_two_param(src: JointSource, t: float, s: float) -> float:
    """Derivative of ``t -> t H_{1+t|1+s}``."""
    ls = log_norms(src, s)
    x = _log_pe(src) + log_norms(src, t) - t / (1.0 + s) * ls
    w = np.exp(x - logsumexp(x))
    inner = _tilted_mean_log(src, t) - ls / (1.0 + s)
    return float(-(1.0 + s) * (w * inner).sum())


class RateKind(str, enum.Enum):
    PLAIN = "plain"
    UP = "up"


def critical_rate(src: JointSource, s: float, kind: RateKind | str = RateKind.PLAIN) -> float:
    """Critical rate where the two clauses of the plus-order bounds meet."""
    if not s > 0:
        raise ParameterError(f"critical rate needs s > 0, got {s}")
    if RateKind(kind) is RateKind.PLAIN:
        return d_scaled_entropy(src, s)
    return d_scaled_two_param(src, s, s)
