"""(alpha, lambda)-mixtures and the Apollonius identity for Hellinger divergences."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .divergences import _require_finite_positive, hellinger_divergence
from .measures import FiniteDistribution, check_same_alphabet


class NotEvaluable(ArithmeticError):
    """An identity term is infinite, so the residual would be inf - inf."""


@dataclass(frozen=True)
class MixtureResult:
    mixture: FiniteDistribution
    normalizer: float


def _mixture_weights(lam: float) -> tuple[float, float]:
    # The larger weight is taken as given and the smaller one as its exact
    # complement (Sterbenz), so (P0, P1, lam) and (P1, P0, 1 - lam) produce
    # bit-identical weights.
    if lam <= 0.5:
        w0 = 1.0 - lam
        return w0, 1.0 - w0
    return 1.0 - lam, lam


def _unnormalized(p0: np.ndarray, p1: np.ndarray, a: float, lam: float) -> np.ndarray:
    w0, w1 = _mixture_weights(lam)
    return np.power(w0 * np.power(p0, a) + w1 * np.power(p1, a), 1.0 / a)


def alpha_mixture(P0: FiniteDistribution, P1: FiniteDistribution, alpha, lam: float) -> MixtureResult:
    """Normalized ``((1-lam) p0^a + lam p1^a)^(1/a)`` and its normalizer Z."""
    check_same_alphabet(P0, P1)
    a = _require_finite_positive(alpha)
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must be in [0, 1], got {lam}")
    if lam == 0.0:
        return MixtureResult(P0, 1.0)
    if lam == 1.0:
        return MixtureResult(P1, 1.0)
    s = _unnormalized(P0.probs, P1.probs, a, lam)
    z = float(s.sum())
    return MixtureResult(P0.with_probs(s / z), z)


def apollonius_lhs(P0, P1, Q, alpha, lam, S: FiniteDistribution | None = None) -> float:
    """Weighted divergence gap ``(1-lam)(H(P0|Q) - H(P0|S)) + lam(H(P1|Q) - H(P1|S))``."""
    if S is None:
        S = alpha_mixture(P0, P1, alpha, lam).mixture
    terms = [
        hellinger_divergence(P0, Q, alpha),
        hellinger_divergence(P0, S, alpha),
        hellinger_divergence(P1, Q, alpha),
        hellinger_divergence(P1, S, alpha),
    ]
    if any(math.isinf(t) for t in terms):
        raise NotEvaluable("a Hellinger term is infinite")
    w0, w1 = _mixture_weights(float(lam))
    return w0 * (terms[0] - terms[1]) + w1 * (terms[2] - terms[3])


def apollonius_residual(P0, P1, Q, alpha, lam, relative: bool = False) -> float:
    """Residual of the exact identity ``LHS = Z^a H(S||Q)``.

    At ``alpha == 1`` (Z == 1, Hellinger == KL) this is the parallelogram
    law. With ``relative=True`` the residual is divided by the largest
    intermediate term (at least 1), which is the scale round-off acts on.

    Raises
    ------
    NotEvaluable
        If any Hellinger term is infinite.
    """
    check_same_alphabet(P0, P1, Q)
    a = _require_finite_positive(alpha)
    mix = alpha_mixture(P0, P1, a, lam)
    lhs = apollonius_lhs(P0, P1, Q, a, lam, S=mix.mixture)
    h_sq = hellinger_divergence(mix.mixture, Q, a)
    if math.isinf(h_sq):
        raise NotEvaluable("H(S||Q) is infinite")
    rhs = mix.normalizer**a * h_sq
    resid = lhs - rhs
    if not relative:
        return resid
    scale = max(
        1.0,
        abs(rhs),
        hellinger_divergence(P0, Q, a),
        hellinger_divergence(P1, Q, a),
        hellinger_divergence(P0, mix.mixture, a),
        hellinger_divergence(P1, mix.mixture, a),
    )
    return resid / scale
