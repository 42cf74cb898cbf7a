"""Asymptotic remaining-uncertainty bounds, rate thresholds and exponents.

Every quantity here is a closed form or a one-dimensional maximisation over
an order parameter ``t``.  Every objective is tabulated on a dense grid
and the best grid node is refined by golden-section search on its two
neighbouring cells.  For the concave objectives this matches a plain
golden search; for the exponent objectives, which are not known to be
concave, the grid guards against local maxima.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import measures as ms
from .errors import ParameterError, RangeError
from .probability import JointSource, Pmf, log_partition, shannon_entropy, tilt

GOLDEN_TOL = 1e-10
GRID_POINTS = 4097
TILT_FLOOR = -1 + 1e-9
# optimised values this small are rounding residue of an exact zero at t = 0
ZERO_FLOOR = 1e-14
_INVPHI = (math.sqrt(5) - 1) / 2


class BoundKind(str, enum.Enum):
    G_MINUS = "g_minus"
    GUP_MINUS = "gup_minus"
    G_PLUS = "g_plus"
    GUP_PLUS = "gup_plus"
    E_MINUS = "e_minus"
    EUP_MINUS = "eup_minus"
    E_PLUS = "e_plus"
    EUP_PLUS = "eup_plus"

    @property
    def is_exponent(self) -> bool:
        return self.value.startswith("e")


G_KINDS = tuple(k for k in BoundKind if not k.is_exponent)
E_KINDS = tuple(k for k in BoundKind if k.is_exponent)


@dataclass(frozen=True)
class BoundQuery:
    source: JointSource
    kind: BoundKind
    s: float
    rate: float

    def __post_init__(self):
        object.__setattr__(self, "kind", BoundKind(self.kind))


@dataclass
class BoundCurve:
    kind: BoundKind
    s: float
    rows: list[tuple[float, float]] = field(default_factory=list)

    @property
    def rates(self) -> np.ndarray:
        return np.array([r for r, _ in self.rows])

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.rows])


# --------------------------------------------------------------------------
# one-dimensional maximisation


def golden_max(f: Callable[[float], float], lo: float, hi: float, tol: float = GOLDEN_TOL) -> tuple[float, float]:
    """Maximise a unimodal ``f`` on ``[lo, hi]``; returns ``(argmax, max)``.

    The endpoints are compared against the interior optimum, so a monotone
    ``f`` returns the correct boundary value.
    """
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    best = max(((c, fc), (d, fd), (lo, f(lo)), (hi, f(hi))), key=lambda p: p[1])
    return best


def grid_max(f: Callable[[float], float], lo: float, hi: float, points: int = GRID_POINTS) -> tuple[float, float]:
    """Dense grid search refined by golden section around the best node."""
    ts = np.linspace(lo, hi, points)
    vals = np.array([f(t) for t in ts])
    i = int(np.argmax(vals))
    a = ts[max(i - 1, 0)]
    b = ts[min(i + 1, points - 1)]
    t_ref, v_ref = golden_max(f, a, b)
    if v_ref >= vals[i]:
        return t_ref, v_ref
    return float(ts[i]), float(vals[i])


# --------------------------------------------------------------------------
# bound evaluation


_S_DOMAIN = {
    BoundKind.G_MINUS: (0.0, 1.0, True),
    BoundKind.GUP_MINUS: (0.0, 0.5, True),
    BoundKind.G_PLUS: (0.0, math.inf, False),
    BoundKind.GUP_PLUS: (0.0, math.inf, False),
    BoundKind.E_MINUS: (0.0, 1.0, True),
    BoundKind.EUP_MINUS: (0.0, 0.5, True),
    BoundKind.E_PLUS: (0.0, math.inf, True),
    BoundKind.EUP_PLUS: (0.0, math.inf, True),
}


def check_s_domain(kind: BoundKind, s: float) -> None:
    lo, hi, closed_lo = _S_DOMAIN[kind]
    ok = (s >= lo if closed_lo else s > lo) and s <= hi and math.isfinite(s)
    if not ok:
        left = "[" if closed_lo else "("
        right = "]" if math.isfinite(hi) else ")"
        raise ParameterError(f"{kind.value} needs s in {left}{lo:g}, {hi:g}{right}, got {s}")


def golden_max_vec(f: Callable[[np.ndarray], np.ndarray], lo: np.ndarray, hi: np.ndarray, tol: float = GOLDEN_TOL):
    """Elementwise golden-section maximisation on brackets ``[lo_i, hi_i]``.

    ``f`` maps an array of abscissae (one per bracket) to objective values.
    Returns ``(argmax, max)`` arrays; the bracket ends are included.
    """
    a = np.array(lo, float)
    b = np.array(hi, float)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    width = float(np.max(b - a)) if a.size else 0.0
    iters = max(0, int(math.ceil(math.log(max(tol, 1e-300) / width) / math.log(_INVPHI)))) if width > tol else 0
    for _ in range(iters):
        left = fc >= fd
        # keep [a, d] where the left probe wins, [c, b] otherwise
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        nc = np.where(left, b - _INVPHI * (b - a), d)
        nd = np.where(left, c, a + _INVPHI * (b - a))
        fnew = f(np.where(left, nc, nd))
        fc, fd = np.where(left, fnew, fd), np.where(left, fc, fnew)
        c, d = nc, nd
    cand_t = np.stack([c, d, np.asarray(lo, float), np.asarray(hi, float)])
    cand_v = np.stack([fc, fd, f(cand_t[2]), f(cand_t[3])])
    k = np.argmax(cand_v, axis=0)
    idx = np.arange(a.size)
    return cand_t[k, idx], cand_v[k, idx]


class BoundEvaluator:
    """Evaluate one bound/exponent kind at fixed ``s`` for many rates.

    Each optimised kind maximises ``coef(t) * R + base(t)`` over a ``t``
    interval.  The rate-independent parts are tabulated on a dense grid once;
    each rate then takes the best grid node and is refined by golden section
    on the two neighbouring cells, all rates at a time.
    """

    def __init__(self, source: JointSource, kind: BoundKind | str, s: float):
        self.source = source
        self.kind = BoundKind(kind)
        self.s = float(s)
        check_s_domain(self.kind, self.s)
        src, s = source, self.s
        k = self.kind
        self._crit = -math.inf
        self._zero_from = math.inf
        if k is BoundKind.G_MINUS:
            self._h = ms.plain_entropy(src, -s)
        elif k is BoundKind.GUP_MINUS:
            self._h = ms.gallager_entropy(src, -s)
        elif k is BoundKind.G_PLUS:
            self._h = ms.plain_entropy(src, s)
            self._crit = ms.critical_rate(src, s, ms.RateKind.PLAIN)
            self._zero_from = ms.d_scaled_entropy(src, 0.0)
        elif k is BoundKind.GUP_PLUS:
            self._h = ms.gallager_entropy(src, s)
            self._crit = ms.critical_rate(src, s, ms.RateKind.UP)
            self._zero_from = ms.d_scaled_two_param(src, 0.0, s)
        if k in (BoundKind.G_MINUS, BoundKind.GUP_MINUS):
            return
        if k in (BoundKind.G_PLUS, BoundKind.GUP_PLUS):
            lo, hi = 0.0, s
        elif k is BoundKind.E_MINUS:
            lo, hi = s, 1.0
        elif k is BoundKind.EUP_MINUS:
            lo, hi = s, 0.5
        else:
            lo, hi = 0.0, 0.5
        self._grid = np.linspace(lo, hi, GRID_POINTS)
        self._grid_base = self._base(self._grid)
        self._grid_coef = self._coef(self._grid)

    # objective pieces ------------------------------------------------------

    def _base(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, float)
        # every base vanishes at t = 0; pin it so float residue cannot leak
        return np.where(ts == 0.0, 0.0, self._base_raw(ts))

    def _base_raw(self, ts: np.ndarray) -> np.ndarray:
        k, src, s = self.kind, self.source, self.s
        if k is BoundKind.G_PLUS:
            return ms.scaled_entropy_grid(src, ts) / s
        if k is BoundKind.GUP_PLUS:
            return ms.scaled_two_param_grid(src, ts, s) / s
        if k is BoundKind.E_MINUS:
            # t (R - H_{1-t}) = t R + (-t) H_{1-t}
            return ms.scaled_entropy_grid(src, -ts)
        # (t/(1-t)) (R - H^up_{1-t}) = t R/(1-t) - log G(-t)
        return -ms.log_gallager_moment_grid(src, -ts)

    def _coef(self, ts: np.ndarray) -> np.ndarray:
        k = self.kind
        ts = np.asarray(ts, float)
        if k in (BoundKind.G_PLUS, BoundKind.GUP_PLUS):
            return -ts / self.s
        if k is BoundKind.E_MINUS:
            return ts
        return ts / (1.0 - ts)

    def objective(self, t, rate):
        """The maximised objective at order ``t`` and rate ``rate``."""
        t = np.asarray(t, float)
        return self._coef(t) * rate + self._base(t)

    def plus_objective(self, t: float, rate: float) -> float:
        """``(t/s) (H - R)`` with ``H = H_{1+t}`` or ``H_{1+t|1+s}``."""
        return float(self.objective(np.array([t]), rate)[0])

    e_objective = plus_objective

    def maximise(self, rates: np.ndarray) -> np.ndarray:
        """Maximum of the objective over the ``t`` interval for each rate."""
        rates = np.asarray(rates, float)
        out = np.empty(rates.size)
        ts, n = self._grid, self._grid.size
        for start in range(0, rates.size, 256):
            r = rates[start:start + 256]
            vals = self._grid_coef[None, :] * r[:, None] + self._grid_base[None, :]
            i = np.argmax(vals, axis=1)
            best = vals[np.arange(r.size), i]
            lo = ts[np.maximum(i - 1, 0)]
            hi = ts[np.minimum(i + 1, n - 1)]
            _, v = golden_max_vec(lambda t, r=r: self._coef(t) * r + self._base(t), lo, hi)
            out[start:start + r.size] = np.maximum(v, best)
        return out

    def values(self, rates) -> np.ndarray:
        """Bound or exponent values at an array of rates."""
        rates = np.atleast_1d(np.asarray(rates, float))
        if np.any(rates < 0) or not np.all(np.isfinite(rates)):
            raise ParameterError("rates must be finite nonnegative numbers")
        k = self.kind
        if k in (BoundKind.G_MINUS, BoundKind.GUP_MINUS):
            return np.maximum(self._h - rates, 0.0)
        out = np.zeros(rates.size)
        if k in (BoundKind.G_PLUS, BoundKind.GUP_PLUS):
            low = rates <= self._crit
            out[low] = self._h - rates[low]
            # past the slope at t = 0 the concave objective peaks at t = 0
            mid = ~low & (rates < self._zero_from)
        else:
            mid = np.ones(rates.size, bool)
        if mid.any():
            v = self.maximise(rates[mid])
            out[mid] = np.where(v > ZERO_FLOOR, v, 0.0)
        return out

    def __call__(self, rate: float) -> float:
        if rate < 0 or not math.isfinite(rate):
            raise ParameterError(f"rate must be a finite nonnegative number, got {rate}")
        return float(self.values([rate])[0])

    def plus_clauses(self, rate: float) -> tuple[float, float]:
        """Both clauses of a plus-kind bound, regardless of which is active."""
        if self.kind not in (BoundKind.G_PLUS, BoundKind.GUP_PLUS):
            raise ParameterError("plus_clauses is defined for g_plus/gup_plus only")
        v = float(self.maximise(np.array([rate]))[0])
        return self._h - rate, max(v, 0.0)


def g_bound(q: BoundQuery) -> float:
    """Achievability upper bound on the normalised remaining uncertainty."""
    if q.kind.is_exponent:
        raise ParameterError(f"g_bound does not evaluate {q.kind.value}")
    return BoundEvaluator(q.source, q.kind, q.s)(q.rate)


def e_bound(q: BoundQuery) -> float:
    """Lower bound on the exponent of the remaining uncertainty."""
    if not q.kind.is_exponent:
        raise ParameterError(f"e_bound does not evaluate {q.kind.value}")
    return BoundEvaluator(q.source, q.kind, q.s)(q.rate)


def sample_curve(source: JointSource, kind: BoundKind | str, s: float, r_min: float, r_max: float, steps: int) -> BoundCurve:
    if not r_min < r_max:
        raise ParameterError("r_min must be smaller than r_max")
    if steps < 2:
        raise ParameterError("steps must be at least 2")
    ev = BoundEvaluator(source, kind, s)
    rates = np.linspace(r_min, r_max, steps)
    values = ev.values(rates)
    return BoundCurve(ev.kind, float(s), [(float(r), float(v)) for r, v in zip(rates, values)])


# --------------------------------------------------------------------------
# single-distribution helpers, s0 and thresholds


def renyi_entropy(p: Pmf, u: float) -> float:
    """Unconditional ``H_{1+u}(p)``, with ``u = -1`` giving ``log |supp p|``."""
    if abs(u) < ms.SHANNON_SWITCH:
        return shannon_entropy(p)
    if u == -1:
        return float(np.log(p.support.size))
    return -log_partition(p, u) / u


def s0_single(p: Pmf) -> float:
    """Largest ``s`` in ``[0, 1]`` with ``H_{1-s}(p) <= H(tilt(p, s-1))``."""
    if p.is_uniform():
        return 1.0

    def gap(s: float) -> float:
        return renyi_entropy(p, -s) - shannon_entropy(tilt(p, s - 1.0))

    lo, hi = 0.0, 1.0  # gap(0) < 0 < gap(1) for non-uniform p
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if gap(mid) <= 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def s0_joint(src: JointSource) -> float:
    return min(s0_single(Pmf(src.conditionals[:, j])) for j in range(src.active_e.size))


@dataclass(frozen=True)
class Thresholds:
    s: float
    t_minus_upper: float
    t_minus_strong_lower: float
    strong_converse_valid: bool
    t_plus: float
    t_up_minus: float
    t_up_minus_valid: bool
    t_up_plus: float


def thresholds(src: JointSource, s: float) -> Thresholds:
    """Optimal-rate thresholds for vanishing normalised remaining uncertainty."""
    if not 0 <= s <= 1:
        raise ParameterError(f"thresholds need s in [0, 1], got {s}")
    h = ms.plain_entropy(src, 0.0)
    h_minus = ms.plain_entropy(src, -s)
    return Thresholds(
        s=s,
        t_minus_upper=h_minus,
        t_minus_strong_lower=h_minus,
        strong_converse_valid=s <= s0_joint(src),
        t_plus=h,
        t_up_minus=ms.gallager_entropy(src, -s),
        t_up_minus_valid=s <= 0.5,
        t_up_plus=h,
    )


# --------------------------------------------------------------------------
# tilted-distribution exponent


def gamma(p: Pmf, t: float) -> float:
    """``gamma(t) = t H_{1+t}(p) = -log sum p^(1+t)``."""
    return -log_partition(p, t)


def gamma_prime(p: Pmf, t: float) -> float:
    """``gamma'(t)``: mean of ``-log p`` under ``tilt(p, t)``."""
    q = tilt(p, t).probs
    mask = p.probs > 0
    return float(-(q[mask] * np.log(p.probs[mask])).sum())


def t_r_solve(p: Pmf, rate: float) -> float:
    """Solve ``H(tilt(p, t)) = rate`` for ``t >= -1 + 1e-9``."""
    h_max = float(np.log(p.support.size))
    n_max = int(np.isclose(p.probs, p.probs.max(), rtol=0, atol=1e-15).sum())
    h_min = float(np.log(n_max))
    if abs(rate - h_max) <= 1e-12:
        return TILT_FLOOR
    if not (h_min < rate <= h_max):
        raise RangeError(f"rate {rate} outside the achievable interval ({h_min:.12g}, {h_max:.12g}]")

    def ent(t: float) -> float:
        return shannon_entropy(tilt(p, t))

    lo, hi = TILT_FLOOR, 1.0
    if ent(lo) < rate:
        return TILT_FLOOR
    while ent(hi) > rate:
        lo, hi = hi, 2.0 * hi + 1.0
        if hi > 1e12:
            raise RangeError(f"rate {rate} too close to the lower limit {h_min:.12g}")
    while hi - lo > 1e-10 * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        if ent(mid) > rate:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def tilted_divergence(p: Pmf, t: float) -> float:
    """``D(tilt(p, t) || p) = gamma(t) - t gamma'(t)``."""
    return gamma(p, t) - t * gamma_prime(p, t)


def lambda_exponent(p: Pmf, s: float, rate: float) -> float:
    """Exponent of the type-class sum of expectations for a strongly universal hash."""
    if not 0 <= s <= 1:
        raise ParameterError(f"lambda_exponent needs s in [0, 1], got {s}")
    t_r = t_r_solve(p, rate)
    return lambda_clauses(p, s, rate, t_r)[0 if s - 1 <= t_r else 1]


def lambda_clauses(p: Pmf, s: float, rate: float, t_r: float | None = None) -> tuple[float, float]:
    """Both branches of the exponent: ``s (R + D)`` and ``R + gamma(s - 1)``."""
    if t_r is None:
        t_r = t_r_solve(p, rate)
    first = s * (rate + tilted_divergence(p, t_r))
    second = rate + gamma(p, s - 1)
    return first, second
