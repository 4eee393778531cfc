"""Forward and reverse D_alpha-projections on finite alphabets.

The forward projection of Q on an alpha-linear family is computed through
its dual. For the parameter vector theta write

    b(a)  = Q(a)^(1-alpha) + (1-alpha) * theta . f(a)
    w(a)  = max(b(a), 0) ** (1/(1-alpha))          (Q(a) exp(theta . f(a)) at alpha = 1)
    Z(th) = sum_a w(a)

Z is convex in theta, its gradient is ``sum_a w(a)^alpha f(a)`` (the
unnormalized constraint residual of ``P = w / Z``), and the projection is
``w / Z`` at the minimizer of Z. So the solver is a damped Newton method on
the gradient of Z, run on the support of the family, with a u-space convex
program as a fallback seed generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .divergences import _require_finite_positive, renyi_divergence, tsallis_entropy
from .families import ExpFamilySpec, LinearFamilySpec, cone_support, fit_theta, orthogonalize
from .measures import FiniteDistribution, check_same_alphabet, escort, make_distribution
from .oracle import sample_family_members

# Masses below this fraction of the bracket scale are treated as clipped
# (alpha < 1), so kinks land exactly on zero instead of 1e-30-ish dust.
CLIP_SNAP = 1e-12
KKT_TOL = 1e-9
POLISH_STEPS = 3
# Sup-norm change per cycle treated as converged outright.
ROUNDOFF_CHANGE = 1e-15


class ProjectionError(RuntimeError):
    """The solver could not produce a certified minimizer."""

    def __init__(self, message: str, trace=()):
        super().__init__(message)
        self.trace = list(trace)


class InfeasibleFamily(ProjectionError):
    """The family has no member at all."""


class CertificateFailure(ProjectionError):
    """Solver converged but the Pythagorean certificate rejected the result."""

    def __init__(self, message: str, result: "ProjectionResult"):
        super().__init__(message, result.trace)
        self.result = result


@dataclass(frozen=True)
class SolverOptions:
    tolerance: float = 1e-10
    max_iterations: int = 200
    damping_max_halvings: int = 60
    jacobian: str = "finite-difference"
    fd_step: float = 1e-7
    fallback_enabled: bool = True
    certify: bool = True
    certificate_samples: int = 32
    certificate_tolerance: float = 1e-7
    seed: int | None = 0

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1 or self.damping_max_halvings < 1:
            raise ValueError("iteration counts must be at least 1")
        if self.jacobian not in ("analytic", "finite-difference"):
            raise ValueError(f"unknown jacobian mode {self.jacobian!r}")
        if not self.fd_step > 0:
            raise ValueError("fd_step must be positive")
        if self.certificate_samples < 1:
            raise ValueError("certificate_samples must be at least 1")


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    residual_norm: float
    divergence: float


@dataclass(frozen=True)
class CertificateReport:
    """Worst Pythagorean residual ``D(P||P*) + D(P*||Q) - D(P||Q)`` over samples."""

    max_residual: float
    max_abs_residual: float
    n_samples: int
    n_infinite: int
    equality_expected: bool
    tolerance: float

    @property
    def passed(self) -> bool:
        if self.max_residual > self.tolerance:
            return False
        return not self.equality_expected or self.max_abs_residual <= self.tolerance

    def to_json(self) -> dict:
        return {
            "max_residual": self.max_residual,
            "max_abs_residual": self.max_abs_residual,
            "n_samples": self.n_samples,
            "n_infinite": self.n_infinite,
            "equality_expected": self.equality_expected,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class ProjectionResult:
    minimizer: FiniteDistribution
    theta: np.ndarray
    normalizer: float
    divergence: float
    constraint_residual_norm: float
    kkt_clipping_ok: bool
    support_equals_family_support: bool
    iterations: int
    trace: tuple = ()
    method: str = "newton"
    in_closure_only: bool = False
    certificate: CertificateReport | None = None

    def to_json(self, include_trace: bool = False) -> dict:
        out = {
            "minimizer": self.minimizer.to_json(),
            "theta": [float(x) for x in self.theta],
            "normalizer": float(self.normalizer),
            "divergence_nats": float(self.divergence),
            "residual": float(self.constraint_residual_norm),
            "iterations": int(self.iterations),
            "flags": {
                "support_equals_family_support": bool(self.support_equals_family_support),
                "kkt_clipping_ok": bool(self.kkt_clipping_ok),
                "in_closure_only": bool(self.in_closure_only),
            },
        }
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_json()
        if include_trace:
            out["trace"] = [[t.iteration, t.residual_norm, t.divergence] for t in self.trace]
        return out


# ---------------------------------------------------------------------------
# dual problem on a fixed support


class _Dual:
    """``Z(theta)`` and friends for reference masses ``q`` and rows ``F``."""

    def __init__(self, q: np.ndarray, F: np.ndarray, alpha: float):
        self.q, self.F, self.a = q, F, alpha
        self.k = F.shape[0]
        if alpha != 1:
            self.c = np.power(q, 1.0 - alpha)
            self.snap = CLIP_SNAP * float(self.c.max())
        else:
            self.logq = np.log(q)

    def lin(self, theta):
        return theta @ self.F if self.k else np.zeros_like(self.q)

    def bracket(self, theta):
        if self.a == 1:
            return self.logq + self.lin(theta)
        return self.c + (1.0 - self.a) * self.lin(theta)

    def weights(self, theta):
        """Unnormalized masses, or None outside the domain of Z."""
        b = self.bracket(theta)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            if self.a == 1:
                w = np.exp(b)
            elif self.a > 1:
                if np.any(b <= 0):
                    return None
                w = np.power(b, 1.0 / (1.0 - self.a))
            else:
                w = np.where(b > self.snap, np.power(np.maximum(b, 0.0), 1.0 / (1.0 - self.a)), 0.0)
        z = w.sum()
        if not np.isfinite(z) or z <= 0:
            return None
        return w

    def grad(self, w):
        return self.F @ np.power(w, self.a)

    def hess(self, w):
        on = w > 0
        Fa = self.F[:, on]
        return self.a * (Fa * np.power(w[on], 2.0 * self.a - 1.0)) @ Fa.T


def _fd_jacobian(dual: _Dual, theta, g0, step):
    """Central-difference Jacobian of the gradient, or None.

    None means no stencil point is usable, or the stencil crosses a clipping
    kink (the active set differs from the centre's); the caller then takes
    the Hessian of the current active set instead.
    """
    k = theta.size
    J = np.empty((k, k))
    active = dual.weights(theta) > 0
    for j in range(k):
        h = step * max(1.0, abs(theta[j]))
        e = np.zeros(k)
        e[j] = h
        wp, wm = dual.weights(theta + e), dual.weights(theta - e)
        if any(x is not None and not np.array_equal(x > 0, active) for x in (wp, wm)):
            return None
        if wp is not None and wm is not None:
            J[:, j] = (dual.grad(wp) - dual.grad(wm)) / (2 * h)
        elif wp is not None:
            J[:, j] = (dual.grad(wp) - g0) / h
        elif wm is not None:
            J[:, j] = (g0 - dual.grad(wm)) / h
        else:
            return None
    return 0.5 * (J + J.T)


@dataclass
class _Run:
    theta: np.ndarray
    w: np.ndarray | None
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)


def _newton(dual: _Dual, theta0, opts: SolverOptions, residual_fn, divergence_fn, trace_offset=0) -> _Run:
    theta = np.array(theta0, dtype=float)
    w = dual.weights(theta)
    run = _Run(theta, w, 0, False)
    if w is None:
        return run
    polish = POLISH_STEPS
    for it in range(opts.max_iterations + POLISH_STEPS + 1):
        r = residual_fn(w)
        run.trace.append(TraceEntry(trace_offset + it, r, divergence_fn(w)))
        run.theta, run.w, run.iterations = theta, w, it
        if r <= opts.tolerance:
            run.converged = True
            # A few extra steps that must reduce the residual; they pin
            # clipped coordinates of kinked solutions to exact zeros.
            if polish == 0 or r == 0.0:
                return run
            polish -= 1
        elif it >= opts.max_iterations:
            break
        g = dual.grad(w)
        z = w.sum()
        if opts.jacobian == "analytic" or run.converged:
            # Polish steps use the Hessian of the current active set: a
            # difference quotient straddling a clipping kink averages two
            # Hessians and only converges linearly.
            J = dual.hess(w)
        else:
            J = _fd_jacobian(dual, theta, g, opts.fd_step)
            if J is None:
                J = dual.hess(w)
        step, *_ = np.linalg.lstsq(J, -g, rcond=1e-13)
        slope = float(g @ step)
        t = 1.0
        accepted = False
        for _ in range(3 if run.converged else opts.damping_max_halvings):
            cand = theta + t * step
            wc = dual.weights(cand)
            if wc is not None:
                # Armijo on Z, or plain residual decrease; the latter keeps
                # progress going once Z is flat to round-off.
                rc = residual_fn(wc)
                if rc < r or (not run.converged and slope < 0 and wc.sum() <= z + 1e-4 * t * slope):
                    theta, w, accepted = cand, wc, True
                    break
            t *= 0.5
        if not accepted:
            break
    return run


# ---------------------------------------------------------------------------
# u-space fallback


def _affine_projector(A: np.ndarray, rhs: np.ndarray):
    pinv = np.linalg.pinv(A)

    def proj(x):
        return x - pinv @ (A @ x - rhs)

    return proj


def _project_polytope(x, proj_aff, sweeps=500):
    """Dykstra's alternating projection onto ``{affine} & {u >= 0}``."""
    p = np.zeros_like(x)
    qv = np.zeros_like(x)
    for _ in range(sweeps):
        y = proj_aff(x + p)
        p = x + p - y
        x_new = np.maximum(y + qv, 0.0)
        qv = y + qv - x_new
        if np.max(np.abs(x_new - x)) < 1e-15:
            return x_new
        x = x_new
    return x


def _u_objective(q, a):
    """Divergence of ``P ~ u^(1/a)`` from ``q`` and its gradient in ``u``."""
    if a == 1:
        def f(u):
            u = np.maximum(u, 1e-300)
            s = u.sum()
            p = u / s
            val = float(np.sum(p * (np.log(p) - np.log(q))))
            grad = (np.log(p) - np.log(q) - val) / s
            return val, grad
        return f

    c = np.power(q, 1.0 - a)
    beta = 1.0 / a

    def f(u):
        ue = np.maximum(u, 1e-14)
        cu = float(c @ u)
        sb = float(np.sum(np.power(ue, beta)))
        val = (math.log(cu) - a * math.log(sb)) / (a - 1.0)
        grad = (c / cu - np.power(ue, beta - 1.0) / sb) / (a - 1.0)
        return val, grad

    return f


def _u_space_seed(dual: _Dual, max_iter=3000):
    """Approximate minimizer of the primal over the polytope, as a mass vector."""
    n = dual.q.size
    A = np.vstack([dual.F, np.ones((1, n))])
    rhs = np.zeros(A.shape[0])
    rhs[-1] = 1.0
    proj_aff = _affine_projector(A, rhs)
    u = _project_polytope(dual.q / dual.q.sum(), proj_aff)
    obj = _u_objective(dual.q, dual.a)
    val, g = obj(u)
    eta = 1.0
    for _ in range(max_iter):
        while eta > 1e-16:
            cand = _project_polytope(u - eta * g, proj_aff)
            if cand.sum() <= 0:
                eta *= 0.5
                continue
            v2, g2 = obj(cand)
            d = cand - u
            if v2 <= val - 1e-4 / eta * float(d @ d):
                break
            eta *= 0.5
        else:
            break
        if np.max(np.abs(cand - u)) < 1e-13:
            u = cand
            break
        u, val, g = cand, v2, g2
        eta *= 2.0
    p = np.power(np.maximum(u, 0.0), 1.0 / dual.a)
    return p / p.sum()


def _seed_theta(dual: _Dual, p: np.ndarray, on: np.ndarray):
    """Least-squares theta for which ``w / Z`` reproduces ``p`` on ``on``."""
    a, F = dual.a, dual.F
    if dual.k == 0:
        return np.zeros(0)
    if a == 1:
        A = np.hstack([F[:, on].T, -np.ones((on.sum(), 1))])
        rhs = np.log(p[on]) - dual.logq[on]
    else:
        A = np.hstack([np.power(p[on], 1.0 - a)[:, None], -(1.0 - a) * F[:, on].T])
        rhs = dual.c[on]
    sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    return sol[:dual.k] if a == 1 else sol[1:]


def _primal_newton(dual: _Dual, p0: np.ndarray, opts: SolverOptions, residual_fn, divergence_fn, offset=0):
    """Newton on the optimality system in ``u = P^alpha`` for alpha < 1.

    Minimizes ``sum u^beta`` (``beta = 1/alpha``) subject to ``c.u = 1`` and
    ``F u = 0`` on the support of ``p0``: stationarity reads
    ``beta u^(beta-1) = lam_c c + F^T lam_F``. Unlike the theta form, where
    masses depend on the bracket through a tiny power, everything here is
    polynomial, so near-kink coordinates keep their relative precision.
    Returns ``(theta, w, trace)`` or None.
    """
    a = dual.a
    beta = 1.0 / a
    on = p0 > 0
    A = np.vstack([dual.F[:, on], dual.c[on]])
    e = np.zeros(A.shape[0])
    e[-1] = 1.0
    u = np.power(p0[on], a)
    u /= dual.c[on] @ u
    lam = np.linalg.lstsq(A.T, beta * np.power(u, beta - 1.0), rcond=None)[0]
    nS, m = u.size, A.shape[0]
    trace = []

    def kkt(u, lam):
        return np.concatenate([beta * np.power(u, beta - 1.0) - A.T @ lam, A @ u - e])

    r = kkt(u, lam)
    for it in range(opts.max_iterations):
        K = np.zeros((nS + m, nS + m))
        K[:nS, :nS] = np.diag(beta * (beta - 1.0) * np.power(u, beta - 2.0))
        K[:nS, nS:] = -A.T
        K[nS:, :nS] = A
        step = np.linalg.lstsq(K, -r, rcond=None)[0]
        du, dl = step[:nS], step[nS:]
        t = 1.0
        neg = du < 0
        if neg.any():
            t = min(1.0, 0.99 * float(np.min(-u[neg] / du[neg])))
        norm = np.linalg.norm(r)
        for _ in range(opts.damping_max_halvings):
            rc = kkt(u + t * du, lam + t * dl)
            if np.linalg.norm(rc) < norm:
                break
            t *= 0.5
        else:
            break
        u, lam, r = u + t * du, lam + t * dl, rc
        P = np.zeros_like(p0)
        P[on] = np.power(u, beta)
        P /= P.sum()
        res = residual_fn(P)
        trace.append(TraceEntry(offset + it, res, divergence_fn(P)))
        if res <= opts.tolerance and np.max(np.abs(r[:nS])) <= 1e-12 * beta * np.max(np.power(u, beta - 1.0)):
            lam_F, lam_c = lam[:-1], lam[-1]
            if not lam_c > 0:
                return None
            theta = lam_F / (lam_c * (1.0 - a))
            s = 1.0 / float(dual.c @ np.power(P, a))
            Z = (beta * s ** (beta - 1.0) / lam_c) ** (1.0 / (1.0 - a))
            return theta, Z * P, trace
    return None


def _restricted(F_rows, mask, tol: float = 1e-10):
    """Orthonormal rows spanning the constraints seen on ``mask``.

    ``F_rows`` is orthonormal, so singular values below an absolute ``tol``
    are round-off (for instance a shifted direction that vanishes on the
    support) and must not turn into constraints.
    """
    V = F_rows[:, mask]
    if V.shape[0] == 0 or V.shape[1] == 0:
        return np.zeros((0, V.shape[1]))
    _, sv, vh = np.linalg.svd(V, full_matrices=False)
    rank = int(np.sum(sv > tol))
    if rank == V.shape[0]:
        # Full rank: Gram-Schmidt keeps the rows' own orientation.
        return orthogonalize(V)
    return vh[:rank]


# ---------------------------------------------------------------------------
# forward projection


def _check_alpha_for_projection(alpha) -> float:
    return _require_finite_positive(alpha)


def _kkt_ok(dual: _Dual, theta, w) -> bool:
    if dual.a >= 1:
        return True
    b = dual.bracket(theta)
    clipped = w == 0
    return bool(np.all(b[clipped] <= KKT_TOL * float(dual.c.max())))


def forward_project(
    Q: FiniteDistribution,
    fam: LinearFamilySpec,
    opts: SolverOptions | None = None,
    theta0=None,
    *,
    allow_partial_reference: bool = False,
) -> ProjectionResult:
    """Minimize ``D_alpha(P || Q)`` over the members ``P`` of ``fam``.

    ``theta0`` optionally starts the iteration away from ``theta = 0`` (in
    the family's orthonormal basis).

    Raises
    ------
    InfeasibleFamily
        When the family has no member.
    ProjectionError
        When Newton and the fallback both fail to reach the tolerance.
    CertificateFailure
        When the Pythagorean certificate rejects the converged point.
    """
    opts = opts or SolverOptions()
    if Q.alphabet != fam.alphabet:
        raise ValueError("Q and the family are defined on different alphabets")
    a = _check_alpha_for_projection(fam.alpha)
    q = Q.probs
    n = q.size
    if not allow_partial_reference and np.any(q <= 0):
        raise ValueError("reference Q must have full support")
    F = fam.basis
    if np.any(q <= 0):
        units = np.eye(n)[q <= 0]
        support = cone_support(np.vstack([F, units]) if F.size else units)
    else:
        support = fam.support_mask
    if not support.any():
        raise InfeasibleFamily("the family is empty")

    S = support
    F_S = _restricted(F, S)
    dual = _Dual(q[S], F_S, a)
    F_check = F[:, S]

    def residual_fn(w):
        if F_check.shape[0] == 0:
            return 0.0
        p = w / w.sum()
        return float(np.max(np.abs(F_check @ np.power(p, a))))

    def full_dist(w):
        p = np.zeros(n)
        p[S] = w / w.sum()
        return Q.with_probs(p)

    q_S = q[S]

    def divergence_fn(w):
        # trace only; the reported divergence goes through renyi_divergence
        p = w / w.sum()
        with np.errstate(divide="ignore"):
            if a == 1:
                on = p > 0
                return float(p[on] @ (np.log(p[on]) - np.log(q_S[on])))
            return math.log(float(np.power(p, a) @ dual.c)) / (a - 1.0)

    if theta0 is None:
        th0 = np.zeros(dual.k)
    else:
        th0 = F_S @ (np.asarray(theta0, dtype=float) @ F[:, S]) if dual.k else np.zeros(0)

    run = _newton(dual, th0, opts, residual_fn, divergence_fn)
    method = "newton"
    trace = list(run.trace)
    theta_S, w = run.theta, run.w
    ok = run.converged and _kkt_ok(dual, theta_S, w)

    if not ok and opts.fallback_enabled:
        method = "newton+fallback"
        p_est = _u_space_seed(dual)
        on = p_est > 1e-8 * p_est.max()
        seed = _seed_theta(dual, p_est, on)
        polish = _newton(dual, seed, opts, residual_fn, divergence_fn, len(trace))
        trace += polish.trace
        if polish.converged and _kkt_ok(dual, polish.theta, polish.w):
            theta_S, w, ok = polish.theta, polish.w, True
        elif a < 1 and not on.all():
            sub = _Dual(dual.q[on], _restricted(F_S, on), a)
            sub_seed = _seed_theta(sub, p_est[on], np.ones(on.sum(), dtype=bool))

            def sub_embed(ws):
                full = np.zeros(dual.q.size)
                full[on] = ws
                return full

            sub_run = _newton(
                sub, sub_seed, opts,
                lambda ws: residual_fn(sub_embed(ws)),
                lambda ws: divergence_fn(sub_embed(ws)),
                len(trace),
            )
            trace += sub_run.trace
            if sub_run.converged:
                v = sub.lin(sub_run.theta)
                th_full = np.linalg.lstsq(F_S[:, on].T, v, rcond=None)[0] if dual.k else np.zeros(0)
                w_full = dual.weights(th_full)
                if w_full is not None and residual_fn(w_full) <= opts.tolerance and _kkt_ok(dual, th_full, w_full):
                    theta_S, w, ok = th_full, w_full, True
        if not ok and a < 1:
            # For small alpha the bracket-to-mass map is nearly a step and
            # Newton in theta cannot pin near-kink coordinates.
            primal = _primal_newton(dual, p_est, opts, residual_fn, divergence_fn, len(trace))
            if primal is not None:
                th_p, w_p, tr = primal
                trace += tr
                if _kkt_ok(dual, th_p, w_p):
                    method = "newton+primal"
                    theta_S, w, ok = th_p, w_p, True

    if not ok:
        raise ProjectionError("no minimizer within tolerance (family empty or projection nonexistent)", trace)

    P_star = full_dist(w)
    z = float(w.sum())
    v = dual.lin(theta_S)
    theta = np.linalg.lstsq(F[:, S].T, v, rcond=None)[0] if F.shape[0] else np.zeros(0)
    resid = fam.residual(P_star)
    result = ProjectionResult(
        minimizer=P_star,
        theta=theta,
        normalizer=z,
        divergence=renyi_divergence(P_star, Q, a),
        constraint_residual_norm=float(np.max(np.abs(resid))) if resid.size else 0.0,
        kkt_clipping_ok=_kkt_ok(dual, theta_S, w),
        support_equals_family_support=bool(np.array_equal(P_star.probs > 0, fam.support_mask)),
        iterations=len(trace) - 1,
        trace=tuple(trace),
        method=method,
    )
    if opts.certify:
        cert = pythagorean_certificate(
            result, Q, fam, opts.certificate_samples, opts.seed, opts.certificate_tolerance
        )
        result = replace(result, certificate=cert)
        if not cert.passed:
            raise CertificateFailure("Pythagorean certificate failed", result)
    return result


def pythagorean_certificate(
    result: ProjectionResult,
    Q: FiniteDistribution,
    fam: LinearFamilySpec,
    n_test_points: int = 32,
    seed=0,
    tolerance: float = 1e-7,
) -> CertificateReport:
    """Check ``D(P||Q) >= D(P||P*) + D(P*||Q)`` on sampled members ``P``.

    Equality is required as well when the projection's support equals the
    family's support (always the case for ``alpha > 1``). Samples with
    ``D(P||P*) = inf`` are counted in ``n_infinite`` and skipped.
    """
    a = fam.alpha
    P_star = result.minimizer
    d_star = renyi_divergence(P_star, Q, a)
    resid = []
    n_inf = 0
    for P in sample_family_members(fam, n_test_points, seed):
        d_pp = renyi_divergence(P, P_star, a)
        if math.isinf(d_pp):
            n_inf += 1
            continue
        resid.append(d_pp + d_star - renyi_divergence(P, Q, a))
    r = np.array(resid) if resid else np.zeros(1)
    return CertificateReport(
        max_residual=float(r.max()),
        max_abs_residual=float(np.abs(r).max()),
        n_samples=len(resid),
        n_infinite=n_inf,
        equality_expected=result.support_equals_family_support,
        tolerance=tolerance,
    )


# ---------------------------------------------------------------------------
# cyclic projections


@dataclass(frozen=True)
class IterationStep:
    step: int
    family_index: int
    step_divergence: float
    divergence_from_q: float


@dataclass(frozen=True)
class IterativeResult:
    projection: ProjectionResult
    steps: tuple
    iterates: tuple


def iterative_project(
    Q: FiniteDistribution,
    fams: list,
    tol: float = 1e-12,
    max_cycles: int = 1000,
    opts: SolverOptions | None = None,
    xtol: float = 1e-12,
) -> IterativeResult:
    """Cyclic forward projections onto ``fams`` (same alpha > 1).

    A cycle is one pass over all families. Iteration stops after a cycle in
    which every step has ``D(P_n || P_{n-1}) < tol`` and the iterate is
    within ``xtol`` of the limit, estimated from the sup-norm change per
    cycle ``d_k`` and the observed rate ``r = d_k / d_{k-1}`` as
    ``d_k r / (1 - r)``. A change at round-off level also ends the run,
    since the divergence itself cannot be resolved below about 1e-16. The
    last iterate is certified against the intersection.
    """
    opts = opts or SolverOptions()
    if not fams:
        raise ValueError("need at least one family")
    a = fams[0].alpha
    for f in fams:
        if f.alpha != a or f.alphabet != fams[0].alphabet:
            raise ValueError("families must share alpha and alphabet")
    if not a > 1:
        raise ValueError("cyclic projections need alpha > 1")
    if Q.alphabet != fams[0].alphabet:
        raise ValueError("Q and the families are defined on different alphabets")
    if np.any(Q.probs <= 0):
        raise ValueError("reference Q must have full support")
    m = len(fams)
    inner = replace(opts, certify=False)
    P = Q
    steps, iterates = [], [Q]
    n = 0
    prev_change = math.inf
    for _ in range(max_cycles):
        start = P
        d_max = 0.0
        for i in range(m):
            n += 1
            nxt = forward_project(P, fams[i], inner, allow_partial_reference=True).minimizer
            d = renyi_divergence(nxt, P, a)
            steps.append(IterationStep(n, i, d, renyi_divergence(nxt, Q, a)))
            iterates.append(nxt)
            d_max = max(d_max, d)
            P = nxt
        change = float(np.max(np.abs(P.probs - start.probs)))
        rate = change / prev_change if prev_change > 0 else 0.0
        prev_change = change
        if change <= ROUNDOFF_CHANGE:
            break
        if d_max < tol and rate < 1 and change * rate / (1 - rate) <= xtol:
            break
    else:
        raise ProjectionError(
            f"no convergence within {max_cycles} cycles",
            [TraceEntry(s.step, s.step_divergence, s.divergence_from_q) for s in steps],
        )

    both = fams[0].intersect(*fams[1:])
    resid = both.residual(P)
    theta, z = np.zeros(both.n_constraints), 1.0
    on = P.probs > 0
    if both.n_constraints:
        ef = ExpFamilySpec(a, Q, both.basis)
        fit = fit_theta(P, ef)
        if fit is not None:
            theta, z = fit
        else:
            dual = _Dual(Q.probs[on], both.basis[:, on], a)
            theta = np.linalg.lstsq(both.basis[:, on].T, dual.lin(_seed_theta(dual, P.probs[on], np.ones(on.sum(), bool))), rcond=None)[0]
            z = float(np.power(np.sum(np.power(P.probs, a) * np.power(Q.probs, 1 - a)), 1.0 / (1.0 - a)))
    trace = tuple(TraceEntry(s.step, s.step_divergence, s.divergence_from_q) for s in steps)
    result = ProjectionResult(
        minimizer=P,
        theta=theta,
        normalizer=z,
        divergence=renyi_divergence(P, Q, a),
        constraint_residual_norm=float(np.max(np.abs(resid))) if resid.size else 0.0,
        kkt_clipping_ok=True,
        support_equals_family_support=bool(np.array_equal(on, both.support_mask)),
        iterations=n,
        trace=trace,
        method="cyclic",
    )
    if opts.certify:
        cert = pythagorean_certificate(
            result, Q, both, opts.certificate_samples, opts.seed, opts.certificate_tolerance
        )
        result = replace(result, certificate=cert)
        if not cert.passed:
            raise CertificateFailure("Pythagorean certificate failed on the intersection", result)
    return IterativeResult(result, tuple(steps), tuple(iterates))


# ---------------------------------------------------------------------------
# reverse projection


@dataclass(frozen=True)
class ReverseResult:
    """Reverse projection and the diagnostics of its shifted-family reduction.

    ``in_closure_only`` is set exactly when the shifted family misses part
    of the alphabet. ``hypothesis_ok`` records whether the support
    conditions under which the reduction is exact hold (for alpha < 1 this
    also needs a full-support projection). ``negative_branch`` marks a
    projection whose bracket in the original family is negative on every
    symbol: it is then a member only when ``1/(1-alpha)`` is an odd integer
    (and ``normalizer_exp`` is negative), and otherwise lies outside the
    family.
    """

    projection: ProjectionResult
    eta: np.ndarray
    shifted_family: LinearFamilySpec
    in_closure_only: bool
    hypothesis_ok: bool
    negative_branch: bool
    divergence_from_data: float
    theta_exp: np.ndarray | None
    normalizer_exp: float | None


def reverse_project(
    P_hat: FiniteDistribution, fam: ExpFamilySpec, opts: SolverOptions | None = None
) -> ReverseResult:
    """Minimize ``D_alpha(P_hat || P)`` over members ``P`` of ``fam``.

    Shifts each direction by ``eta_i Q^(1-alpha)`` so that ``P_hat`` lies in
    the resulting alpha-linear family, then forward-projects ``Q`` onto it.
    """
    check_same_alphabet(P_hat, fam.reference)
    a = _check_alpha_for_projection(fam.alpha)
    q = fam.reference.probs
    pa = np.power(P_hat.probs, a)
    c = np.power(q, 1.0 - a) if a != 1 else np.ones_like(q)
    denom = float(pa @ c)
    if not denom > 0:
        raise ValueError("sum P_hat^alpha Q^(1-alpha) must be positive")
    f = fam.basis
    eta = (f @ pa) / denom if f.shape[0] else np.zeros(0)
    f_hat = f - np.outer(eta, c)
    shifted = LinearFamilySpec(a, fam.alphabet, f_hat)
    closure = not bool(shifted.support_mask.all())
    result = replace(forward_project(fam.reference, shifted, opts), in_closure_only=closure)
    full_proj = bool(np.all(result.minimizer.probs > 0))
    hypothesis_ok = not closure and (a >= 1 or full_proj)

    # In the shifted family the projection has bracket
    # c + (1-a) theta_hat . f_hat = kappa * (c + (1-a) (theta_hat / kappa) . f)
    # with kappa = 1 - (1-a) theta_hat . eta; a negative kappa flips the sign.
    theta_hat = shifted.theta_to_raw(result.theta) if shifted.n_constraints else np.zeros(0)
    kappa = 1.0 if a == 1 else 1.0 - (1.0 - a) * float(theta_hat @ eta)
    negative = kappa < 0
    fitted = fit_theta(result.minimizer, fam) if kappa != 0 else None
    return ReverseResult(
        projection=result,
        eta=eta,
        shifted_family=shifted,
        in_closure_only=closure,
        hypothesis_ok=hypothesis_ok,
        negative_branch=negative,
        divergence_from_data=renyi_divergence(P_hat, result.minimizer, a),
        theta_exp=None if fitted is None else fitted[0],
        normalizer_exp=None if fitted is None else fitted[1],
    )


# ---------------------------------------------------------------------------
# Tsallis maximum entropy


@dataclass(frozen=True)
class TsallisResult:
    projection: ProjectionResult
    entropy: float
    escort_mean: float


def tsallis_maxent(
    energies, target: float, alpha, W: int | None = None, opts: SolverOptions | None = None
) -> TsallisResult:
    """Maximize the Tsallis entropy subject to an escort-mean energy ``target``.

    Equivalent to the forward projection of the uniform distribution on the
    family ``sum_a P(a)^alpha (e_a - target) = 0``.
    """
    eps = np.asarray(energies, dtype=float).ravel()
    if W is None:
        W = eps.size
    if W != eps.size:
        raise ValueError(f"W={W} but {eps.size} energies given")
    if W < 2:
        raise ValueError("need at least two states")
    a = _check_alpha_for_projection(alpha)
    u = float(target)
    if not eps.min() < u < eps.max():
        raise ValueError("target energy must lie strictly between min and max energy")
    labels = tuple(str(i + 1) for i in range(W))
    fam = LinearFamilySpec(a, labels, (eps - u)[None, :])
    uni = make_distribution(labels, np.full(W, 1.0 / W))
    result = forward_project(uni, fam, opts)
    P = result.minimizer
    mean = float(escort(P, a).probs @ eps)
    return TsallisResult(result, tsallis_entropy(P, a), mean)
