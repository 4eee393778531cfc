"""Random problem instances shared by the verify runner and the tests."""

from __future__ import annotations

import numpy as np

from .families import ExpFamilySpec, LinearFamilySpec
from .measures import FiniteDistribution, make_distribution


def labels(n: int) -> tuple[str, ...]:
    return tuple(str(i + 1) for i in range(n))


def random_distribution(rng: np.random.Generator, n: int, floor: float = 0.0, concentration: float = 1.0):
    """Dirichlet draw, optionally mixed with uniform so every mass is >= floor."""
    p = rng.dirichlet(np.full(n, concentration))
    if floor > 0:
        p = (1 - n * floor) * p + floor
    return make_distribution(labels(n), p, normalize=True)


def random_sparse_distribution(rng: np.random.Generator, n: int, p_zero: float = 0.3):
    p = rng.dirichlet(np.ones(n))
    p[rng.random(n) < p_zero] = 0.0
    if p.sum() == 0:
        p[rng.integers(n)] = 1.0
    return make_distribution(labels(n), p, normalize=True)


def constraints_through(rng: np.random.Generator, member: FiniteDistribution, alpha: float, m: int):
    """``m`` random constraint rows annihilating ``member^alpha``."""
    n = len(member)
    u = np.power(member.probs, alpha)
    u = u / np.linalg.norm(u)
    F = rng.standard_normal((m, n))
    F -= np.outer(F @ u, u)
    return F


def families_through(
    rng: np.random.Generator, member: FiniteDistribution, alpha: float, m: int, per_family: int = 1
) -> list[LinearFamilySpec]:
    """``m`` families whose constraint rows are jointly orthonormal.

    Orthonormal rows usually keep the intersection well conditioned and
    the linear rate of cyclic projections moderate; nearly parallel
    families still turn up now and then.
    """
    n = len(member)
    u = np.power(member.probs, alpha)
    A = np.column_stack([u / np.linalg.norm(u), rng.standard_normal((n, m * per_family))])
    Qm, _ = np.linalg.qr(A)
    rows = Qm[:, 1:].T
    return [
        LinearFamilySpec(alpha, labels(n), rows[i * per_family : (i + 1) * per_family])
        for i in range(m)
    ]


def random_family(
    rng: np.random.Generator, n: int, alpha: float, m: int = 1, member: FiniteDistribution | None = None,
    reduced_support: bool = False,
) -> tuple[LinearFamilySpec, FiniteDistribution]:
    """Non-empty family with ``m`` constraints and a known member.

    With ``reduced_support`` the member vanishes on some symbols and one
    constraint keeps those symbols out of every member, so the family's
    support is a proper subset of the alphabet.
    """
    if member is None:
        if reduced_support:
            k = int(rng.integers(1, max(2, n - m)))
            p = np.zeros(n)
            keep = rng.permutation(n)[: n - k]
            p[keep] = rng.dirichlet(np.ones(keep.size))
            member = make_distribution(labels(n), p, normalize=True)
        else:
            member = random_distribution(rng, n, floor=0.02 / n)
    F = constraints_through(rng, member, alpha, m)
    if reduced_support:
        # A non-negative row that is zero exactly on the member's support.
        off = member.probs == 0
        if off.any():
            row = np.where(off, rng.random(n) + 0.5, 0.0)
            F = np.vstack([F[: max(0, m - 1)], row]) if m > 1 else row[None, :]
    return LinearFamilySpec(alpha, labels(n), F), member


def random_exp_family(rng: np.random.Generator, n: int, alpha: float, k: int = 1):
    Q = random_distribution(rng, n, floor=0.05 / n)
    return ExpFamilySpec(alpha, Q, rng.standard_normal((k, n)))
