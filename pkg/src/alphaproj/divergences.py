"""Renyi, Hellinger and related divergences on finite alphabets, in nats.

Zero-mass conventions: ``0**alpha == 0``; symbols with ``p == q == 0`` are
ignored; for ``alpha > 1`` a symbol with ``p > 0`` and ``q == 0`` makes the
divergence ``+inf`` (returned as ``math.inf``, not raised).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .measures import FiniteDistribution, check_same_alphabet, escort


class Regime(str, Enum):
    ZERO = "zero"
    SUB_ONE = "sub-one"
    ONE = "one"
    SUPER_ONE = "super-one"
    INFINITY = "infinity"


@dataclass(frozen=True)
class AlphaOrder:
    """Validated order ``alpha`` in [0, inf]."""

    value: float

    def __post_init__(self):
        v = float(self.value)
        if math.isnan(v) or v < 0:
            raise ValueError(f"alpha must be in [0, inf], got {self.value!r}")
        object.__setattr__(self, "value", v)

    @property
    def regime(self) -> Regime:
        v = self.value
        if v == 0:
            return Regime.ZERO
        if math.isinf(v):
            return Regime.INFINITY
        if v == 1:
            return Regime.ONE
        return Regime.SUB_ONE if v < 1 else Regime.SUPER_ONE

    @property
    def is_finite_positive(self) -> bool:
        return 0 < self.value < math.inf

    def __float__(self):
        return self.value


def as_alpha(alpha) -> AlphaOrder:
    return alpha if isinstance(alpha, AlphaOrder) else AlphaOrder(alpha)


def _require_finite_positive(alpha) -> float:
    a = as_alpha(alpha)
    if not a.is_finite_positive:
        raise ValueError(f"alpha must lie in (0, inf), got {a.value}")
    return a.value


def _power_sum_minus_one(p: np.ndarray, q: np.ndarray, a: float) -> float:
    """``sum p**a q**(1-a) - 1`` without cancellation when p is close to q.

    Uses ``sum q = 1`` to write the sum as ``sum q * expm1(a log(p/q))`` over
    the common support, minus the q-mass where p vanishes. Callers handle
    the ``alpha > 1`` absolute-continuity check first.
    """
    both = (p > 0) & (q > 0)
    log_ratio = np.log(p[both]) - np.log(q[both])
    terms = q[both] * np.expm1(a * log_ratio)
    return float(terms.sum() - q[(p == 0) & (q > 0)].sum())


def relative_entropy(P: FiniteDistribution, Q: FiniteDistribution) -> float:
    """Kullback-Leibler divergence ``D(P||Q)`` in nats."""
    check_same_alphabet(P, Q)
    p, q = P.probs, Q.probs
    if np.any((p > 0) & (q == 0)):
        return math.inf
    both = (p > 0) & (q > 0)
    # p log(p/q) - p + q is termwise non-negative and sums to the KL value;
    # the log ratio is taken as a difference so tiny q cannot overflow p/q.
    pb, qb = p[both], q[both]
    terms = pb * (np.log(pb) - np.log(qb)) - pb + qb
    return float(terms.sum() + q[(p == 0) & (q > 0)].sum())


def renyi_divergence(P: FiniteDistribution, Q: FiniteDistribution, alpha) -> float:
    """Renyi divergence of order ``alpha`` in nats, for alpha in [0, inf].

    ``alpha == 1`` is the relative entropy, ``alpha == 0`` is
    ``-log Q(Supp P)`` and ``alpha == inf`` is ``log max_{Supp P} p/q``.
    """
    check_same_alphabet(P, Q)
    a = as_alpha(alpha)
    p, q = P.probs, Q.probs
    if a.regime is Regime.ONE:
        return relative_entropy(P, Q)
    if a.regime is Regime.ZERO:
        if not np.any(q[p > 0] > 0):
            return math.inf
        off = float(q[p == 0].sum())
        if off < 0.5:
            # 1 - Q(outside Supp P) keeps full-support cases at exactly zero
            return max(0.0, -math.log1p(-off))
        return max(0.0, -math.log(float(q[p > 0].sum())))
    if a.regime is Regime.INFINITY:
        on = p > 0
        if np.any(q[on] == 0):
            return math.inf
        return max(0.0, float(np.max(np.log(p[on]) - np.log(q[on]))))
    v = a.value
    if v > 1 and np.any((p > 0) & (q == 0)):
        return math.inf
    both = (p > 0) & (q > 0)
    if not both.any():
        # alpha < 1 with disjoint supports
        return math.inf
    with np.errstate(over="ignore"):
        s1 = _power_sum_minus_one(p, q, v)
    if math.isinf(s1) or s1 < -0.5:
        # The power sum overflows or is far below 1, where the expm1 form
        # loses everything to cancellation; take its log directly.
        x = v * np.log(p[both]) + (1.0 - v) * np.log(q[both])
        top = float(x.max())
        return max(0.0, (top + math.log(float(np.exp(x - top).sum()))) / (v - 1.0))
    return max(0.0, math.log1p(s1) / (v - 1.0))


def hellinger_divergence(P: FiniteDistribution, Q: FiniteDistribution, alpha) -> float:
    """Hellinger divergence ``(sum p^a q^(1-a) - 1) / (a - 1)``; KL in nats at 1."""
    check_same_alphabet(P, Q)
    v = _require_finite_positive(alpha)
    if v == 1:
        return relative_entropy(P, Q)
    p, q = P.probs, Q.probs
    if v > 1 and np.any((p > 0) & (q == 0)):
        return math.inf
    with np.errstate(over="ignore"):
        return max(0.0, _power_sum_minus_one(p, q, v) / (v - 1.0))


def renyi_from_hellinger(h: float, alpha) -> float:
    """Map a Hellinger value to the Renyi divergence of the same order."""
    v = _require_finite_positive(alpha)
    if v == 1:
        raise ValueError("renyi_from_hellinger is undefined at alpha = 1")
    if math.isinf(h):
        return math.inf
    arg = (v - 1.0) * h
    if arg == -1.0:
        # alpha < 1 and disjoint supports: h sits at its maximum 1/(1-alpha)
        return math.inf
    if arg < -1.0:
        raise ValueError("1 + (alpha - 1) h must be non-negative")
    return math.log1p(arg) / (v - 1.0)


def relative_alpha_entropy(P: FiniteDistribution, Q: FiniteDistribution, alpha) -> float:
    """Sundaresan's relative alpha-entropy as ``D_{1/a}`` between escorts."""
    check_same_alphabet(P, Q)
    v = _require_finite_positive(alpha)
    return renyi_divergence(escort(P, v), escort(Q, v), 1.0 / v)


def tsallis_entropy(P: FiniteDistribution, alpha) -> float:
    """``(1 - sum p^a) / (a - 1)``; Shannon entropy in nats at ``a == 1``."""
    v = _require_finite_positive(alpha)
    p = P.probs[P.probs > 0]
    if v == 1:
        return float(-(p * np.log(p)).sum())
    return float((1.0 - np.power(p, v).sum()) / (v - 1.0))


def alpha_exp(x, alpha):
    """Deformed exponential ``max(1 + (1-a) x, 0) ** (1/(1-a))``.

    For ``a > 1`` the clipped branch has a negative exponent and evaluates
    to ``inf``.
    """
    v = _require_finite_positive(alpha)
    x = np.asarray(x, dtype=float)
    if v == 1:
        out = np.exp(x)
    else:
        base = np.maximum(1.0 + (1.0 - v) * x, 0.0)
        with np.errstate(divide="ignore"):
            out = np.power(base, 1.0 / (1.0 - v))
    return float(out) if out.ndim == 0 else out


def alpha_log(x, alpha):
    """Deformed logarithm ``(x**(1-a) - 1) / (1-a)`` for ``x > 0``."""
    v = _require_finite_positive(alpha)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("alpha_log needs x > 0")
    if v == 1:
        out = np.log(x)
    else:
        out = np.expm1((1.0 - v) * np.log(x)) / (1.0 - v)
    return float(out) if out.ndim == 0 else out
