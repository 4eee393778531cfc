"""alpha-linear and alpha-exponential families over a finite alphabet.

An alpha-linear family is the set of distributions P with
``sum_a P(a)^alpha f_i(a) = 0`` for every constraint vector ``f_i``; the
vectors are kept orthonormalized internally. An alpha-exponential family is
indexed by ``theta`` through

    P(a) = Z^-1 * max(Q(a)^(1-alpha) + (1-alpha) * sum_i theta_i f_i(a), 0) ** (1/(1-alpha))

with ``P = Z^-1 Q exp(theta . f)`` at ``alpha == 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog

from .divergences import _require_finite_positive
from .measures import AlphabetMismatch, FiniteDistribution, check_same_alphabet

RANK_TOL = 1e-10
MEMBERSHIP_TOL = 1e-9
FIT_TOL = 1e-8
SUPPORT_BOXES = (1e12, 1e6)


class OutOfDomain(ValueError):
    """theta gives a non-positive bracket (alpha > 1) or zero total mass."""


def orthogonalize(vectors) -> np.ndarray:
    """Orthonormal rows spanning the same subspace as ``vectors``.

    Modified Gram-Schmidt with one re-orthogonalization pass. A vector is
    dropped when what survives projection is below ``1e-10`` of its
    original norm.
    """
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    if V.size == 0:
        raise ValueError("orthogonalize needs at least one vector")
    if not np.any(V):
        raise ValueError("all input vectors are zero")
    basis: list[np.ndarray] = []
    for v in V:
        norm0 = np.linalg.norm(v)
        if norm0 == 0:
            continue
        w = v.copy()
        for _ in range(2):
            for b in basis:
                w -= (b @ w) * b
        norm = np.linalg.norm(w)
        if norm < RANK_TOL * norm0:
            continue
        basis.append(w / norm)
    return np.array(basis).reshape(len(basis), V.shape[1])


def _basis_or_empty(vectors, n: int) -> np.ndarray:
    V = np.asarray(vectors, dtype=float).reshape(-1, n)
    if V.shape[0] == 0 or not np.any(V):
        return np.zeros((0, n))
    return orthogonalize(V)


def _support_lp(F: np.ndarray, box: float):
    m, n = F.shape
    c = np.concatenate([np.zeros(n), -np.ones(n)])
    A_eq = np.hstack([F, np.zeros((m, n))])
    A_ub = np.hstack([-np.eye(n), np.eye(n)])
    bounds = [(0, box)] * n + [(0, 1)] * n
    res = linprog(
        c, A_ub=A_ub, b_ub=np.zeros(n), A_eq=A_eq, b_eq=np.zeros(m), bounds=bounds, method="highs"
    )
    return res.x[n:] > 0.5 if res.status == 0 else None


def cone_support(F: np.ndarray) -> np.ndarray:
    """Boolean mask of coordinates that can be positive in ``{u >= 0 : F u = 0}``.

    Solved as one LP: maximize ``sum t`` subject to ``F u = 0`` and
    ``0 <= t <= min(u, 1)``, ``u <= box``. Any coordinate reachable by some
    cone member is reachable by the sum of such members, so optimal t is 1
    there. The large box lets coordinates that only appear at tiny ratios
    to the others (``P^alpha`` with large alpha) register; if that LP is
    too ill-conditioned for the solver a smaller box is tried.
    """
    m, n = F.shape
    if m == 0:
        return np.ones(n, dtype=bool)
    for box in SUPPORT_BOXES:
        mask = _support_lp(F, box)
        if mask is not None:
            return mask
    raise RuntimeError("support LP failed")


@dataclass(frozen=True, eq=False)
class LinearFamilySpec:
    """alpha-linear family in constraint form.

    ``constraints`` keeps the user's vectors for reporting; ``basis`` holds
    the orthonormalized rows used in every computation.
    """

    alpha: float
    alphabet: tuple[str, ...]
    constraints: np.ndarray
    basis: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "alpha", _require_finite_positive(self.alpha))
        object.__setattr__(self, "alphabet", tuple(str(a) for a in self.alphabet))
        n = len(self.alphabet)
        raw = np.asarray(self.constraints, dtype=float).reshape(-1, n)
        raw.setflags(write=False)
        object.__setattr__(self, "constraints", raw)
        B = _basis_or_empty(raw, n)
        if B.shape[0] >= n:
            raise ValueError("constraints span the whole space; the family is empty")
        B.setflags(write=False)
        object.__setattr__(self, "basis", B)

    @classmethod
    def from_generators(cls, alpha, alphabet: Sequence, generators) -> "LinearFamilySpec":
        """Family of P with ``P^alpha`` in the span of ``generators``."""
        n = len(alphabet)
        G = _basis_or_empty(generators, n)
        if G.shape[0] == 0:
            raise ValueError("need at least one non-zero generator")
        comp = null_space(G).T if G.shape[0] < n else np.zeros((0, n))
        return cls(alpha, tuple(alphabet), comp)

    @property
    def n_constraints(self) -> int:
        return self.basis.shape[0]

    def generator_basis(self) -> np.ndarray:
        """Orthonormal rows spanning the complement of the constraints."""
        n = len(self.alphabet)
        if self.n_constraints == 0:
            return np.eye(n)
        return null_space(self.basis).T

    @cached_property
    def support_mask(self) -> np.ndarray:
        m = cone_support(self.basis)
        m.setflags(write=False)
        return m

    def support(self) -> frozenset[str]:
        return frozenset(a for a, s in zip(self.alphabet, self.support_mask) if s)

    @property
    def is_empty(self) -> bool:
        return not self.support_mask.any()

    def residual(self, P: FiniteDistribution) -> np.ndarray:
        if P.alphabet != self.alphabet:
            raise AlphabetMismatch(f"alphabets differ: {self.alphabet} vs {P.alphabet}")
        return self.basis @ np.power(P.probs, self.alpha)

    def contains(self, P: FiniteDistribution, tol: float = MEMBERSHIP_TOL) -> bool:
        r = self.residual(P)
        return r.size == 0 or float(np.max(np.abs(r))) <= tol

    def theta_to_raw(self, theta) -> np.ndarray:
        """Express ``theta . basis`` as coefficients on the raw constraints."""
        theta = np.asarray(theta, dtype=float)
        if self.constraints.shape[0] == 0:
            return np.zeros(0)
        target = theta @ self.basis
        coef, *_ = np.linalg.lstsq(self.constraints.T, target, rcond=None)
        return coef

    def intersect(self, *others: "LinearFamilySpec") -> "LinearFamilySpec":
        for o in others:
            if o.alphabet != self.alphabet:
                raise ValueError("families live on different alphabets")
            if o.alpha != self.alpha:
                raise ValueError("families have different alpha")
        rows = np.vstack([self.constraints] + [o.constraints for o in others])
        return LinearFamilySpec(self.alpha, self.alphabet, rows)

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "alphabet": list(self.alphabet),
            "constraints": [[float(x) for x in row] for row in self.constraints],
        }

    @classmethod
    def from_json(cls, obj: dict, alpha=None) -> "LinearFamilySpec":
        a = obj.get("alpha", alpha) if alpha is None else alpha
        if a is None:
            raise ValueError("family needs an alpha")
        if "alpha" in obj and alpha is not None and float(obj["alpha"]) != float(alpha):
            raise ValueError(f"family alpha {obj['alpha']} conflicts with requested {alpha}")
        labels = obj["alphabet"]
        if "constraints" in obj and "generators" in obj:
            raise ValueError("give either 'constraints' or 'generators', not both")
        if "generators" in obj:
            return cls.from_generators(a, labels, obj["generators"])
        return cls(a, tuple(labels), np.asarray(obj.get("constraints", []), dtype=float))


def constraint_residual(P: FiniteDistribution, fam: LinearFamilySpec) -> np.ndarray:
    """``sum_a P(a)^alpha f_i(a)`` for each orthonormal constraint ``f_i``."""
    return fam.residual(P)


@dataclass(frozen=True, eq=False)
class ExpFamilySpec:
    """alpha-exponential family through a full-support reference ``Q``."""

    alpha: float
    reference: FiniteDistribution
    directions: np.ndarray
    basis: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "alpha", _require_finite_positive(self.alpha))
        if np.any(self.reference.probs <= 0):
            raise ValueError("reference measure must have full support")
        n = len(self.reference)
        raw = np.asarray(self.directions, dtype=float).reshape(-1, n)
        raw.setflags(write=False)
        object.__setattr__(self, "directions", raw)
        B = _basis_or_empty(raw, n)
        B.setflags(write=False)
        object.__setattr__(self, "basis", B)

    @property
    def alphabet(self) -> tuple[str, ...]:
        return self.reference.alphabet

    def _rows(self, basis: str) -> np.ndarray:
        if basis == "orthonormal":
            return self.basis
        if basis == "raw":
            return self.directions
        raise ValueError(f"unknown basis {basis!r}")

    def bracket(self, theta, basis: str = "orthonormal") -> np.ndarray:
        """``Q^(1-a) + (1-a) theta . f`` (or ``theta . f`` at ``a == 1``)."""
        rows = self._rows(basis)
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if theta.size != rows.shape[0]:
            raise ValueError(f"theta has length {theta.size}, expected {rows.shape[0]}")
        a, q = self.alpha, self.reference.probs
        lin = theta @ rows if rows.shape[0] else np.zeros_like(q)
        if a == 1:
            return lin
        return np.power(q, 1.0 - a) + (1.0 - a) * lin

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "alphabet": list(self.alphabet),
            "reference": self.reference.to_json(),
            "directions": [[float(x) for x in row] for row in self.directions],
        }

    @classmethod
    def from_json(cls, obj: dict, alpha=None) -> "ExpFamilySpec":
        a = obj.get("alpha") if alpha is None else alpha
        if a is None:
            raise ValueError("exponential family needs an alpha")
        if "alpha" in obj and alpha is not None and float(obj["alpha"]) != float(alpha):
            raise ValueError(f"family alpha {obj['alpha']} conflicts with requested {alpha}")
        ref = FiniteDistribution.from_json(obj["reference"])
        if "alphabet" in obj and tuple(str(x) for x in obj["alphabet"]) != ref.alphabet:
            raise ValueError("alphabet does not match the reference distribution")
        return cls(a, ref, np.asarray(obj.get("directions", []), dtype=float))


def odd_integer_exponent(alpha: float) -> bool:
    """True when ``1/(1-alpha)`` is an odd integer (alpha = 2, 4/3, 6/5, ...).

    For such alpha the power ``b^(1/(1-alpha))`` is real and negative for
    negative ``b``, so a bracket that is negative on every symbol still
    gives a probability vector once divided by its (negative) sum.
    """
    if alpha == 1:
        return False
    e = 1.0 / (1.0 - alpha)
    k = round(e)
    return abs(e - k) < 1e-12 and k % 2 == 1


def exp_family_member(fam: ExpFamilySpec, theta, basis: str = "orthonormal"):
    """Member at ``theta`` and its normalizer ``Z`` (sum of unnormalized masses).

    For ``alpha > 1`` the bracket must be positive everywhere, except when
    ``1/(1-alpha)`` is an odd integer and the bracket is negative
    everywhere; the formula then yields a member with ``Z < 0``.

    Raises
    ------
    OutOfDomain
        When the bracket leaves the domain above, or when every mass is
        clipped to zero.
    """
    a = fam.alpha
    b = fam.bracket(theta, basis)
    q = fam.reference.probs
    if a == 1:
        shift = b.max()
        w = q * np.exp(b - shift)
        z = float(w.sum())
        return fam.reference.with_probs(w / z), z * float(np.exp(shift))
    if a > 1:
        if np.all(b < 0) and odd_integer_exponent(a):
            w = -np.power(-b, 1.0 / (1.0 - a))
            z = float(w.sum())
            return fam.reference.with_probs(w / z), z
        if np.any(b <= 0):
            raise OutOfDomain("bracket must be positive everywhere for alpha > 1")
        w = np.power(b, 1.0 / (1.0 - a))
    else:
        w = np.power(np.maximum(b, 0.0), 1.0 / (1.0 - a))
    z = float(w.sum())
    if not np.isfinite(z) or z <= 0:
        raise OutOfDomain("member has no mass")
    return fam.reference.with_probs(w / z), z


def fit_theta(P: FiniteDistribution, fam: ExpFamilySpec, basis: str = "orthonormal"):
    """Recover ``(theta, Z)`` with ``exp_family_member(fam, theta) == P``.

    Solves the linear system ``w P^(1-a) - (1-a) theta . f = Q^(1-a)`` on
    Supp(P) in least squares, where ``w = Z^(1-a)``; at ``a == 1`` the system
    is ``theta . f - log Z = log P - log Q``. Returns ``None`` when the system
    residual or the reconstruction error exceeds ``1e-8``, or when a clipped
    symbol would carry mass. A negative ``w`` is accepted only where
    :func:`exp_family_member` admits a negative normalizer.
    """
    check_same_alphabet(P, fam.reference)
    a = fam.alpha
    rows = fam._rows(basis)
    k = rows.shape[0]
    p, q = P.probs, fam.reference.probs
    on = p > 0
    if a >= 1 and not on.all():
        return None
    if a == 1:
        A = np.hstack([rows[:, on].T, -np.ones((on.sum(), 1))])
        rhs = np.log(p[on]) - np.log(q[on])
    else:
        A = np.hstack([np.power(p[on], 1.0 - a)[:, None], -(1.0 - a) * rows[:, on].T])
        rhs = np.power(q[on], 1.0 - a)
    sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    scale = max(1.0, float(np.max(np.abs(rhs))))
    if np.max(np.abs(A @ sol - rhs)) > FIT_TOL * scale:
        return None
    if a == 1:
        theta = sol[:k]
    else:
        w, theta = sol[0], sol[1:]
        if w == 0 or (w < 0 and not (a > 1 and odd_integer_exponent(a))):
            return None
    try:
        member, z = exp_family_member(fam, theta, basis)
    except OutOfDomain:
        return None
    if np.max(np.abs(member.probs - p)) > FIT_TOL:
        return None
    return theta, z


def example_family(alpha=0.5) -> LinearFamilySpec:
    """Four-letter family with the single constraint ``f = (1, -3, -5, -6)``."""
    return LinearFamilySpec(alpha, ("1", "2", "3", "4"), np.array([[1.0, -3.0, -5.0, -6.0]]))
