"""Batch property runners behind ``alphaproj verify``.

Each runner draws ``n`` random instances from one seed, checks a property
against an independent route (brute-force oracle, direct solve, closed-form
identity) and returns a :class:`VerifySummary`. The first failing instance
is kept in serialized form so it can be replayed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .divergences import hellinger_divergence, relative_entropy, renyi_divergence, renyi_from_hellinger
from .families import ExpFamilySpec, LinearFamilySpec, fit_theta
from .instances import (
    families_through,
    labels,
    random_distribution,
    random_exp_family,
    random_family,
    random_sparse_distribution,
)
from .measures import make_distribution, total_variation, uniform
from .mixtures import alpha_mixture, apollonius_lhs, apollonius_residual
from .oracle import brute_force_forward, brute_force_reverse, family_support_by_vertices, sample_family_members
from .projection import ProjectionError, SolverOptions, forward_project, iterative_project, reverse_project, tsallis_maxent

OPEN_UNIT = (float(np.nextafter(0.0, 1.0)), 1.0)
OPEN_ABOVE_ONE = (float(np.nextafter(1.0, 2.0)), 3.0)
MONOTONE_GRID = (0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 4.0, math.inf)


@dataclass
class VerifySummary:
    property: str
    instances: int
    seed: int
    passed: int = 0
    failed: int = 0
    worst_residual: float = 0.0
    failing_instance: dict | None = None
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.failed == 0 and self.passed == self.instances

    def record(self, ok: bool, residual: float, instance=None):
        self.worst_residual = max(self.worst_residual, float(residual))
        if ok:
            self.passed += 1
            return
        self.failed += 1
        if self.failing_instance is None and instance is not None:
            self.failing_instance = instance() if callable(instance) else instance

    def to_json(self) -> dict:
        out = {
            "property": self.property,
            "instances": self.instances,
            "seed": self.seed,
            "passed": self.passed,
            "failed": self.failed,
            "worst_residual": self.worst_residual,
        }
        out.update(self.details)
        if self.failing_instance is not None:
            out["failing_instance"] = self.failing_instance
        return out


def _dist(p):
    return p.to_json()


# ---------------------------------------------------------------------------
# divergence and mixture identities


def verify_apollonius(n: int, seed: int) -> VerifySummary:
    """Exact identity ``LHS = Z^a H(S||Q)`` and the regime's inequality sign."""
    rng = np.random.default_rng(seed)
    out = VerifySummary("apollonius", n, seed)
    sign_errors = 0
    for _ in range(n):
        k = int(rng.integers(2, 7))
        a = float(rng.choice([0.3, 0.5, 2.0, 3.0]))
        lam = float(rng.uniform(0.0, 1.0))
        P0, P1, Q = (random_distribution(rng, k, floor=1e-3 / k) for _ in range(3))
        resid = apollonius_residual(P0, P1, Q, a, lam)
        mix = alpha_mixture(P0, P1, a, lam)
        lhs = apollonius_lhs(P0, P1, Q, a, lam, S=mix.mixture)
        h = hellinger_divergence(mix.mixture, Q, a)
        # Z >= 1 for a > 1 and Z <= 1 for a < 1, so LHS - H(S||Q) has a fixed sign.
        slack = 1e-12 * max(1.0, abs(lhs))
        sign_ok = lhs >= h - slack if a > 1 else lhs <= h + slack
        sign_errors += not sign_ok
        out.record(
            abs(resid) <= 1e-10 and sign_ok,
            abs(resid),
            lambda: {"alpha": a, "lambda": lam, "P0": _dist(P0), "P1": _dist(P1), "Q": _dist(Q)},
        )
    out.details["sign_violations"] = sign_errors
    return out


def _random_pair(rng):
    k = int(rng.integers(2, 7))
    if rng.random() < 0.3:
        return random_sparse_distribution(rng, k), random_sparse_distribution(rng, k)
    return random_distribution(rng, k), random_distribution(rng, k)


def verify_monotonicity(n: int, seed: int) -> VerifySummary:
    """``D_alpha`` and ``H_alpha`` are non-decreasing along ``MONOTONE_GRID``."""
    rng = np.random.default_rng(seed)
    out = VerifySummary("monotonicity", n, seed)
    for _ in range(n):
        P, Q = _random_pair(rng)
        d = [renyi_divergence(P, Q, a) for a in MONOTONE_GRID]
        h = [hellinger_divergence(P, Q, a) for a in MONOTONE_GRID if 0 < a < math.inf]
        worst = 0.0
        for seq in (d, h):
            for lo, hi in zip(seq, seq[1:]):
                if math.isinf(hi):
                    continue
                worst = max(worst, lo - hi if not math.isinf(lo) else math.inf)
        out.record(worst <= 1e-12, worst, lambda: {"P": _dist(P), "Q": _dist(Q)})
    return out


def verify_pinsker(n: int, seed: int) -> VerifySummary:
    """``|P - Q|_1^2 / 2 <= D(P||Q)``; residual is the excess of the left side."""
    rng = np.random.default_rng(seed)
    out = VerifySummary("pinsker", n, seed)
    for _ in range(n):
        P, Q = _random_pair(rng)
        excess = total_variation(P, Q) ** 2 / 2 - relative_entropy(P, Q)
        out.record(excess <= 0.0, max(excess, 0.0), lambda: {"P": _dist(P), "Q": _dist(Q)})
    return out


def verify_consistency(n: int, seed: int) -> VerifySummary:
    """Renyi value recovered from the Hellinger value of the same order."""
    rng = np.random.default_rng(seed)
    out = VerifySummary("consistency", n, seed)
    for _ in range(n):
        P, Q = _random_pair(rng)
        a = float(rng.choice([0.25, 0.5, 0.75, 1.5, 2.0, 4.0]))
        d = renyi_divergence(P, Q, a)
        d2 = renyi_from_hellinger(hellinger_divergence(P, Q, a), a)
        if math.isinf(d) or math.isinf(d2):
            # both infinite, or a Hellinger value past the float range
            err = 0.0 if math.isinf(d2) else math.inf
        else:
            err = abs(d - d2)
        out.record(err <= 1e-12, err, lambda: {"alpha": a, "P": _dist(P), "Q": _dist(Q)})
    return out


def verify_tv_metric(n: int, seed: int) -> VerifySummary:
    """Identity, symmetry and the triangle inequality for total variation."""
    rng = np.random.default_rng(seed)
    out = VerifySummary("tv-metric", n, seed)
    for _ in range(n):
        k = int(rng.integers(2, 7))
        P, Q, R = (random_distribution(rng, k) for _ in range(3))
        pq, qp = total_variation(P, Q), total_variation(Q, P)
        tri = pq - total_variation(P, R) - total_variation(R, Q)
        worst = max(total_variation(P, P), abs(pq - qp), tri)
        ok = total_variation(P, P) == 0 and pq == qp and tri <= 1e-15 and pq >= 0
        out.record(ok, max(worst, 0.0), lambda: {"P": _dist(P), "Q": _dist(Q), "R": _dist(R)})
    return out


# ---------------------------------------------------------------------------
# projections


def _forward_instance(rng, alpha, reduced=False):
    k = int(rng.integers(3, 7))
    m = int(rng.integers(1, min(3, k - 1) + 1))
    fam, _ = random_family(rng, k, alpha, m, reduced_support=reduced)
    Q = random_distribution(rng, k, floor=0.05 / k)
    return Q, fam


def verify_pythagorean(
    n: int, seed: int, alpha_range: tuple[float, float] | None = None, test_points: int = 50,
    tolerance: float = 1e-7,
) -> VerifySummary:
    """Pythagorean residual of solved projections over sampled members.

    The residual is ``D(P||P*) + D(P*||Q) - D(P||Q)``; it must be at most
    ``tolerance`` always and at least ``-tolerance`` as well whenever the
    projection has the family's support (every instance with alpha > 1).
    Without ``alpha_range`` the instances alternate between (0, 1) and (1, 3).
    """
    rng = np.random.default_rng(seed)
    out = VerifySummary("pythagorean", n, seed)
    opts = SolverOptions(certify=False)
    worst_eq = 0.0
    for i in range(n):
        lo, hi = alpha_range or (OPEN_UNIT if i % 2 == 0 else OPEN_ABOVE_ONE)
        a = float(rng.uniform(lo, hi))
        Q, fam = _forward_instance(rng, a, reduced=rng.random() < 0.25)
        try:
            res = forward_project(Q, fam, opts)
        except ProjectionError:
            out.record(False, math.inf, lambda: {"alpha": a, "Q": _dist(Q), "family": fam.to_json()})
            rng.integers(2**32)
            continue
        P_star = res.minimizer
        d_star = res.divergence
        worst_up, worst_abs = -math.inf, 0.0
        for P in sample_family_members(fam, test_points, seed=int(rng.integers(2**32))):
            d_pp = renyi_divergence(P, P_star, a)
            if math.isinf(d_pp):
                continue
            r = d_pp + d_star - renyi_divergence(P, Q, a)
            worst_up = max(worst_up, r)
            worst_abs = max(worst_abs, abs(r))
        equality = a > 1 or res.support_equals_family_support
        ok = worst_up <= tolerance and (not equality or worst_abs <= tolerance)
        if a > 1:
            worst_eq = max(worst_eq, worst_abs)
        out.record(
            ok,
            worst_abs if equality else max(worst_up, 0.0),
            lambda: {"alpha": a, "Q": _dist(Q), "family": fam.to_json()},
        )
    out.details["worst_equality_residual"] = worst_eq
    return out


def verify_oracle_equivalence(
    n: int, seed: int, samples: int = 1_000_000, alphas=(0.5, 2.0), gap: float = 1e-3,
    band: float = 1e-9,
) -> VerifySummary:
    """Solver against brute-force sampling on 4-letter single-constraint families.

    Passes when the solver is no worse than the best sampled member (up to
    ``band``, the slack for sampled members that meet the constraint only
    to round-off) and the oracle gets within ``gap`` of the solver.
    """
    rng = np.random.default_rng(seed)
    out = VerifySummary("oracle-equivalence", n, seed)
    worst_gap = 0.0
    for i in range(n):
        a = float(alphas[i % len(alphas)])
        fam, _ = random_family(rng, 4, a, 1)
        Q = random_distribution(rng, 4, floor=0.05 / 4)
        d = forward_project(Q, fam, SolverOptions(certify=False)).divergence
        best = brute_force_forward(Q, fam, samples, seed=int(rng.integers(2**32))).best_value
        excess = d - best
        worst_gap = max(worst_gap, best - d)
        out.record(
            excess <= band and best - d <= gap,
            max(excess, 0.0),
            lambda: {"alpha": a, "Q": _dist(Q), "family": fam.to_json(), "solver": d, "oracle": best},
        )
    out.details["worst_oracle_gap"] = worst_gap
    return out


def verify_support_law(n: int, seed: int, test_points: int = 200) -> VerifySummary:
    """For alpha > 1 the projection's support is the union of members' supports."""
    rng = np.random.default_rng(seed)
    out = VerifySummary("support-law", n, seed)
    opts = SolverOptions(certify=False)
    for _ in range(n):
        a = float(rng.uniform(*OPEN_ABOVE_ONE))
        Q, fam = _forward_instance(rng, a, reduced=rng.random() < 0.5)
        on = forward_project(Q, fam, opts).minimizer.probs > 0
        members = sample_family_members(fam, test_points, seed=int(rng.integers(2**32)))
        union = np.any([P.probs > 0 for P in members], axis=0)
        mismatch = int(np.sum(on != union))
        out.record(mismatch == 0, mismatch, lambda: {"alpha": a, "Q": _dist(Q), "family": fam.to_json()})
    return out


def verify_iterate(n: int, seed: int, test_points: int = 4) -> VerifySummary:
    """Cyclic projections against the direct solve on the intersection.

    Checks the final iterate to 1e-6 in sup norm, a finite sum of step
    divergences, and for intersection members ``P`` (the direct solution
    and a few sampled ones) the one-step identity
    ``D(P||P_{n-1}) = D(P||P_n) + D(P_n||P_{n-1})`` to 1e-7 at every step.
    Nearly parallel families contract slowly (rates above 0.998 per cycle
    occur), so the cycle budget is large and the iteration stops once the
    estimated distance to the limit is below 1e-9.
    """
    rng = np.random.default_rng(seed)
    out = VerifySummary("iterate", n, seed)
    worst_step = 0.0
    for _ in range(n):
        a = float(rng.uniform(1.01, 2.0))
        m = int(rng.integers(2, 4))
        k = int(rng.integers(4, 7))
        member = random_distribution(rng, k, floor=0.1 / k)
        fams = families_through(rng, member, a, m)
        Q = random_distribution(rng, k, floor=0.1 / k)
        both = fams[0].intersect(*fams[1:])
        try:
            it = iterative_project(Q, fams, max_cycles=100_000, xtol=1e-9)
        except ProjectionError:
            out.record(False, math.inf, lambda: {"alpha": a, "Q": _dist(Q), "families": [f.to_json() for f in fams]})
            rng.integers(2**32)
            continue
        direct = forward_project(Q, both).minimizer
        err = float(np.max(np.abs(it.projection.minimizer.probs - direct.probs)))
        total = sum(s.step_divergence for s in it.steps)
        anchors = [direct] + sample_family_members(both, test_points, seed=int(rng.integers(2**32)))
        step_err = 0.0
        for P in anchors:
            d = [renyi_divergence(P, X, a) for X in it.iterates]
            for s, before, after in zip(it.steps, d, d[1:]):
                step_err = max(step_err, abs(before - after - s.step_divergence))
        worst_step = max(worst_step, step_err)
        ok = err <= 1e-6 and math.isfinite(total) and step_err <= 1e-7
        out.record(
            ok, max(err, step_err),
            lambda: {"alpha": a, "Q": _dist(Q), "families": [f.to_json() for f in fams]},
        )
    out.details["worst_step_identity_residual"] = worst_step
    return out


def _reduced_reverse_instance(rng, alpha):
    """Exponential family whose shifted family misses part of the alphabet.

    The direction is ``g + t Q^(1-alpha)`` with ``g >= 0`` vanishing on a set
    ``S``, and ``P_hat`` lives on ``S``; the shift then removes the ``t`` term
    and leaves ``g``, which keeps every member off the complement of ``S``.
    """
    k = 4
    Q = random_distribution(rng, k, floor=0.05 / k)
    s = int(rng.integers(1, k))
    on = np.zeros(k, dtype=bool)
    on[rng.permutation(k)[:s]] = True
    g = np.where(on, 0.0, rng.uniform(0.5, 1.5, k))
    t = float(rng.normal())
    direction = g + t * np.power(Q.probs, 1.0 - alpha)
    p = np.zeros(k)
    p[on] = rng.dirichlet(np.ones(s))
    return make_distribution(labels(k), p), ExpFamilySpec(alpha, Q, direction[None, :])


def verify_reverse(n: int, seed: int, grid: int = 10_000, radius: float = 10.0) -> VerifySummary:
    """Reverse projection against a grid search over the natural parameter.

    Also checks that ``in_closure_only`` agrees with the support computed by
    vertex enumeration and that, for alpha > 1 with a full-support shifted
    family, the projection is recovered as a member by ``fit_theta``.
    """
    rng = np.random.default_rng(seed)
    out = VerifySummary("reverse", n, seed)
    closure_cases = 0
    for i in range(n):
        a = (0.5, 2.0)[i % 2]
        if i % 5 == 4:
            P_hat, fam = _reduced_reverse_instance(rng, a)
        else:
            fam = random_exp_family(rng, 4, a, 1)
            P_hat = random_distribution(rng, 4) if rng.random() < 0.7 else random_sparse_distribution(rng, 4)
        rr = reverse_project(P_hat, fam)
        orc = brute_force_reverse(P_hat, fam, grid=grid, radius=radius)
        gap = rr.divergence_from_data - orc.best_value
        closure = not bool(family_support_by_vertices(rr.shifted_family).all())
        closure_cases += closure
        member_ok = True
        if a > 1 and not closure:
            member_ok = fit_theta(rr.projection.minimizer, fam) is not None
        ok = gap <= 1e-6 and rr.in_closure_only == closure and member_ok
        out.record(
            ok, max(gap, 0.0),
            lambda: {"alpha": a, "P_hat": _dist(P_hat), "family": fam.to_json()},
        )
    out.details["closure_instances"] = closure_cases
    return out


def verify_tsallis(n: int, seed: int) -> VerifySummary:
    """Escort-mean constraint and ``D(P*||U) = ln W + ln(1 - (a-1) S_a) / (a-1)``."""
    rng = np.random.default_rng(seed)
    out = VerifySummary("tsallis", n, seed)
    worst_mean = worst_id = 0.0
    for i in range(n):
        W = int(rng.integers(3, 7))
        a = (0.5, 2.0)[i % 2]
        eps = rng.normal(size=W) * rng.uniform(0.5, 3.0)
        target = float(rng.uniform(eps.min(), eps.max()))
        r = tsallis_maxent(eps, target, a)
        P = r.projection.minimizer
        mean_err = abs(r.escort_mean - target)
        d = renyi_divergence(P, uniform(labels(W)), a)
        id_err = abs(d - (math.log(W) + math.log(1.0 - (a - 1.0) * r.entropy) / (a - 1.0)))
        worst_mean, worst_id = max(worst_mean, mean_err), max(worst_id, id_err)
        out.record(
            mean_err <= 1e-9 and id_err <= 1e-12, max(mean_err, id_err),
            lambda: {"alpha": a, "energies": [float(x) for x in eps], "target": target},
        )
    out.details["worst_escort_mean_residual"] = worst_mean
    out.details["worst_identity_residual"] = worst_id
    return out


RUNNERS = {
    "pythagorean": verify_pythagorean,
    "apollonius": verify_apollonius,
    "monotonicity": verify_monotonicity,
    "pinsker": verify_pinsker,
    "oracle-equivalence": verify_oracle_equivalence,
    "consistency": verify_consistency,
    "tv-metric": verify_tv_metric,
    "support-law": verify_support_law,
    "iterate": verify_iterate,
    "reverse": verify_reverse,
    "tsallis": verify_tsallis,
}
