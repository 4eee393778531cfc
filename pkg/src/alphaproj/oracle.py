"""Brute-force checks for the projection solver.

Nothing here imports the solver. Family members are generated in the
generator form: ``P^alpha = sum_j theta_j g_j`` for a basis ``g`` of the
complement of the constraints, so every sample satisfies the constraints to
round-off by construction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .families import ExpFamilySpec, LinearFamilySpec
from .measures import FiniteDistribution, check_same_alphabet

SAMPLE_RESIDUAL_TOL = 1e-12
MAX_ENUM_ALPHABET = 14


class SamplerFailure(RuntimeError):
    """No family member could be produced (empty or unreachable family)."""


@dataclass(frozen=True)
class OracleReport:
    best_member: FiniteDistribution
    best_value: float
    samples_used: int
    tolerance_band: float
    best_theta: np.ndarray | None = None


def _null_space(A: np.ndarray, tol: float) -> np.ndarray:
    """Null space of ``A`` with singular values below an absolute ``tol`` dropped.

    The tolerance is absolute on purpose: a column that is zero up to
    round-off (as happens after shifting a direction) must count as zero
    even when it is the only column.
    """
    if A.shape[0] == 0:
        return np.eye(A.shape[1])
    _, sv, vh = np.linalg.svd(A, full_matrices=True)
    rank = int(np.sum(sv > tol))
    return vh[rank:].T


def cone_vertices(F: np.ndarray) -> np.ndarray:
    """Extreme rays of ``{u >= 0 : F u = 0}``, each scaled to sum to one.

    Enumerates supports of size up to ``rank(F) + 1``; a support carries an
    extreme ray when the restricted null space is one-dimensional and its
    generator has constant sign.
    """
    m, n = F.shape
    if n > MAX_ENUM_ALPHABET:
        raise ValueError(f"vertex enumeration limited to {MAX_ENUM_ALPHABET} symbols")
    tol = 1e-12 * max(1.0, float(np.abs(F).max(initial=0.0)))
    rank = np.linalg.matrix_rank(F, tol=tol) if m else 0
    found: dict[tuple, np.ndarray] = {}
    for size in range(1, min(n, rank + 1) + 1):
        for idx in itertools.combinations(range(n), size):
            cols = list(idx)
            ns = _null_space(F[:, cols], tol)
            if ns.shape[1] != 1:
                continue
            v = ns[:, 0]
            if np.all(v < 0):
                v = -v
            if not np.all(v > 1e-12 * np.abs(v).max()):
                continue
            u = np.zeros(n)
            u[cols] = v / v.sum()
            found.setdefault(idx, u)
    if not found:
        return np.zeros((0, n))
    return np.array(list(found.values()))


def family_support_by_vertices(fam: LinearFamilySpec) -> np.ndarray:
    V = cone_vertices(fam.basis)
    return V.sum(axis=0) > 0 if V.size else np.zeros(len(fam.alphabet), dtype=bool)


class _MemberSampler:
    """Vectorized proposal machinery for one family."""

    def __init__(self, fam: LinearFamilySpec):
        self.fam = fam
        n = len(fam.alphabet)
        self.vertices = cone_vertices(fam.basis)
        if self.vertices.shape[0] == 0:
            raise SamplerFailure("the family has no members")
        self.support = self.vertices.sum(axis=0) > 0
        S = np.flatnonzero(self.support)
        local = _null_space(fam.basis[:, S], 1e-12 * max(1.0, float(np.abs(fam.basis).max(initial=0.0))))
        # Generator basis for members supported on S.
        G = np.zeros((local.shape[1], n))
        G[:, S] = local.T
        self.generators = G

    def propose(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Candidate ``u = P^alpha`` rows (unscaled), rejection applied."""
        k = self.generators.shape[0]
        half = size // 2
        # Isotropic coefficient draws; most land outside the cone.
        theta_iso = rng.standard_normal((half, k))
        # Coefficients of random points of the cone, sparse now and then
        # so that lower-dimensional faces get visited.
        nv = self.vertices.shape[0]
        conc = np.where(rng.random(size - half) < 0.5, 1.0, 0.2)
        W = rng.gamma(conc[:, None], 1.0, size=(size - half, nv))
        drop = rng.random(W.shape) < 0.3
        drop[np.arange(W.shape[0]), rng.integers(0, nv, W.shape[0])] = False
        W[drop] = 0.0
        theta_cone = (W @ self.vertices) @ self.generators.T
        theta = np.vstack([theta_iso, theta_cone])
        U = theta @ self.generators
        scale = np.abs(U).max(axis=1, keepdims=True)
        U[np.abs(U) <= 1e-13 * scale] = 0.0
        keep = np.all(U >= 0, axis=1) & (scale[:, 0] > 0)
        return U[keep]

    def members(self, U: np.ndarray) -> np.ndarray:
        """Rescale cone points so that ``sum u^(1/alpha) == 1``; return P rows."""
        a = self.fam.alpha
        # rows are scale-free; bring the largest entry to one before the power
        peak = U.max(axis=1, keepdims=True)
        M = np.power(U / np.where(peak > 0, peak, 1.0), 1.0 / a)
        s = M.sum(axis=1, keepdims=True)
        M = M[s[:, 0] > 0]
        return M / s[s[:, 0] > 0]


def sample_family_members(
    fam: LinearFamilySpec, n: int, seed=None, max_proposals: int = 2_000_000
) -> list[FiniteDistribution]:
    """Draw ``n`` members of ``fam``; deterministic for a fixed ``seed``.

    Raises
    ------
    SamplerFailure
        If the family is empty or every proposal is rejected.
    """
    rng = np.random.default_rng(seed)
    sampler = _MemberSampler(fam)
    out: list[np.ndarray] = []
    used = 0
    while len(out) < n:
        if used >= max_proposals:
            raise SamplerFailure("rejection rate 100% over the proposal budget")
        batch = max(64, 2 * (n - len(out)))
        used += batch
        P = sampler.members(sampler.propose(rng, batch))
        ok = np.max(np.abs(np.power(P, fam.alpha) @ fam.basis.T), axis=1, initial=0.0)
        out.extend(P[ok <= SAMPLE_RESIDUAL_TOL])
    return [FiniteDistribution(fam.alphabet, p) for p in out[:n]]


def _renyi_rows(P: np.ndarray, q: np.ndarray, a: float) -> np.ndarray:
    """Row-wise ``D_a(P_row || q)`` by the plain textbook formula."""
    with np.errstate(divide="ignore", invalid="ignore"):
        if a == 1:
            t = np.where(P > 0, P * np.log(P / q), 0.0)
            return t.sum(axis=1)
        t = np.where(P > 0, np.power(P, a) * np.power(q, 1 - a), 0.0)
        s = t.sum(axis=1)
        if a > 1:
            s = np.where(np.any((P > 0) & (q == 0), axis=1), np.inf, s)
        return np.log(s) / (a - 1)


def brute_force_forward(
    Q: FiniteDistribution, fam: LinearFamilySpec, n_samples: int = 1_000_000, seed=None,
    batch: int = 100_000,
) -> OracleReport:
    """Smallest ``D_alpha(P || Q)`` over ``n_samples`` sampled members."""
    if Q.alphabet != fam.alphabet:
        raise ValueError("alphabet mismatch between Q and family")
    rng = np.random.default_rng(seed)
    sampler = _MemberSampler(fam)
    q = Q.probs
    best_val, best_row, seen = np.inf, None, 0
    while seen < n_samples:
        take = min(batch, n_samples - seen)
        U = sampler.propose(rng, 2 * take)[:take]
        if U.shape[0] == 0:
            continue
        P = sampler.members(U)
        vals = _renyi_rows(P, q, fam.alpha)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val, best_row = float(vals[i]), P[i]
        seen += P.shape[0]
    return OracleReport(FiniteDistribution(fam.alphabet, best_row), best_val, seen, SAMPLE_RESIDUAL_TOL)


def _exp_members(fam: ExpFamilySpec, thetas: np.ndarray, clipped: bool = False):
    """Members for each row of ``thetas``; rows out of the domain are NaN.

    The domain is a positive bracket on every symbol, plus an everywhere
    negative bracket when ``1/(1-alpha)`` is an odd integer (the power is
    then real). With ``clipped`` and alpha < 1, negative brackets are
    instead clipped to zero mass.
    """
    a = fam.alpha
    q = fam.reference.probs
    lin = thetas @ fam.basis
    if a == 1:
        W = q * np.exp(lin - lin.max(axis=1, keepdims=True))
    else:
        b = np.power(q, 1 - a) + (1 - a) * lin
        e = 1.0 / (1 - a)
        odd = a > 1 and abs(e - round(e)) < 1e-12 and round(e) % 2 == 1
        with np.errstate(divide="ignore", invalid="ignore"):
            W = np.power(np.maximum(b, 0.0), e)
            neg = np.all(b < 0, axis=1) if odd else np.zeros(len(b), dtype=bool)
            W[neg] = np.power(-b[neg], e)
        if a > 1 or not clipped:
            W[np.any(b <= 0, axis=1) & ~neg] = np.nan
    Z = W.sum(axis=1, keepdims=True)
    W[(Z[:, 0] <= 0) | ~np.isfinite(Z[:, 0])] = np.nan
    return W / Z


def brute_force_reverse(
    P_hat: FiniteDistribution, fam: ExpFamilySpec, grid: int = 10_000, radius: float = 10.0,
    clipped: bool = False,
) -> OracleReport:
    """Grid search of ``D_alpha(P_hat || member(theta))`` over ``[-r, r]^dim``.

    Only full-support members (positive bracket everywhere) are searched
    unless ``clipped`` is set, which for alpha < 1 also admits members
    whose bracket is clipped to zero on some symbols.
    """
    check_same_alphabet(P_hat, fam.reference)
    dim = fam.basis.shape[0]
    if dim not in (1, 2):
        raise ValueError("grid oracle supports one or two directions")
    axis = np.array([0.0]) if grid == 1 else np.linspace(-radius, radius, grid)
    thetas = np.array(list(itertools.product(axis, repeat=dim)))
    members = _exp_members(fam, thetas, clipped)
    valid = np.all(np.isfinite(members), axis=1)
    if not valid.any():
        raise ValueError("every grid point is outside the natural parameter domain")
    p = P_hat.probs
    a = fam.alpha
    M = members[valid]
    with np.errstate(divide="ignore", invalid="ignore"):
        if a == 1:
            t = np.where(p > 0, p * (np.log(p) - np.log(M)), 0.0)
            vals = t.sum(axis=1)
        else:
            s = np.where(p > 0, np.power(p, a) * np.power(M, 1 - a), 0.0).sum(axis=1)
            if a > 1:
                s = np.where(np.any((p > 0) & (M == 0), axis=1), np.inf, s)
            vals = np.log(s) / (a - 1)
    vals = np.where(np.isnan(vals), np.inf, vals)
    i = int(np.argmin(vals))
    return OracleReport(
        FiniteDistribution(P_hat.alphabet, M[i]), float(vals[i]), int(valid.sum()), 0.0,
        best_theta=thetas[valid][i],
    )
