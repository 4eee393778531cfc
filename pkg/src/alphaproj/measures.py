"""Probability vectors over a finite, labelled alphabet.

The reference measure is counting measure on the alphabet, so densities are
just probability masses and every integral is a finite sum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

SUM_TOL = 1e-9


class AlphabetMismatch(ValueError):
    """Raised when two objects are defined over different alphabets."""


@dataclass(frozen=True, eq=False)
class FiniteDistribution:
    """Immutable probability vector ``probs`` indexed by ``alphabet``.

    Construct through :func:`make_distribution`, which validates and
    renormalizes; the raw constructor trusts its input.
    """

    alphabet: tuple[str, ...]
    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def __len__(self):
        return len(self.alphabet)

    def __repr__(self):
        body = ", ".join(f"{a}: {p:.6g}" for a, p in zip(self.alphabet, self.probs))
        return f"FiniteDistribution({{{body}}})"

    def __eq__(self, other):
        if not isinstance(other, FiniteDistribution):
            return NotImplemented
        return self.alphabet == other.alphabet and np.array_equal(self.probs, other.probs)

    __hash__ = None

    def with_probs(self, probs) -> "FiniteDistribution":
        """Same alphabet, new (already validated) masses."""
        return FiniteDistribution(self.alphabet, probs)

    def to_json(self) -> dict:
        return {"alphabet": list(self.alphabet), "probs": [float(x) for x in self.probs]}

    @classmethod
    def from_json(cls, obj: dict, normalize: bool = False) -> "FiniteDistribution":
        try:
            labels, probs = obj["alphabet"], obj["probs"]
        except (KeyError, TypeError) as exc:
            raise ValueError("distribution object needs 'alphabet' and 'probs'") from exc
        return make_distribution(labels, probs, normalize=normalize)


def make_distribution(
    labels: Sequence, weights: Iterable[float], normalize: bool = False
) -> FiniteDistribution:
    """Validate ``weights`` and return a distribution over ``labels``.

    Weights must be non-negative and sum to one within ``1e-9``; with
    ``normalize=True`` any positive total is accepted. The stored vector is
    divided by its sum either way.
    """
    alphabet = tuple(str(x) for x in labels)
    w = np.asarray(list(weights), dtype=float).ravel()
    if len(alphabet) != w.size:
        raise ValueError(f"{len(alphabet)} labels but {w.size} weights")
    if len(set(alphabet)) != len(alphabet):
        raise ValueError("alphabet labels must be distinct")
    if w.size == 0:
        raise ValueError("empty alphabet")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite")
    if np.any(w < 0):
        raise ValueError("negative weight")
    total = w.sum()
    if total <= 0:
        raise ValueError("zero total mass")
    if not normalize and abs(total - 1.0) > SUM_TOL:
        raise ValueError(f"total mass {total:.12g} differs from 1 by more than {SUM_TOL}")
    return FiniteDistribution(alphabet, w / total)


def uniform(labels: Sequence) -> FiniteDistribution:
    n = len(labels)
    return make_distribution(labels, np.full(n, 1.0 / n))


def check_same_alphabet(*dists) -> tuple[str, ...]:
    first = dists[0].alphabet
    for d in dists[1:]:
        if d.alphabet != first:
            raise AlphabetMismatch(f"alphabets differ: {first} vs {d.alphabet}")
    return first


def total_variation(P: FiniteDistribution, Q: FiniteDistribution) -> float:
    """L1 distance ``sum |p - q|``, in [0, 2]."""
    check_same_alphabet(P, Q)
    return float(np.abs(P.probs - Q.probs).sum())


def escort(P: FiniteDistribution, alpha) -> FiniteDistribution:
    """Escort measure proportional to ``p**alpha``."""
    from .divergences import as_alpha

    a = as_alpha(alpha)
    if not a.is_finite_positive:
        raise ValueError("escort needs alpha in (0, inf)")
    if a.value == 1.0:
        return P
    # 0**alpha == 0 for alpha > 0, which numpy already gives.
    w = np.power(P.probs, a.value)
    return P.with_probs(w / w.sum())


def support(P: FiniteDistribution, tol: float = 0.0) -> frozenset[str]:
    """Labels whose mass exceeds ``tol``."""
    if tol < 0:
        raise ValueError("tol must be non-negative")
    return frozenset(a for a, p in zip(P.alphabet, P.probs) if p > tol)


def support_mask(P: FiniteDistribution, tol: float = 0.0) -> np.ndarray:
    return P.probs > tol
