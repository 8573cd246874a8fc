"""Maximum-likelihood estimation, standard errors, and LR-based pruning.

The likelihood is maximized over the unconstrained reparameterization
(threshold increments in log space, log-scales) with a quasi-Newton line
search method; convergence is declared when the gradient infinity-norm
falls below tolerance.  Standard errors come from a central-difference
Hessian of the log-likelihood in unconstrained space, mapped back to
natural parameters by the delta method.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np
from scipy import optimize, stats

from .dataset import Dataset
from .errors import DataError, NumericalError
from .likelihood import LikelihoodProblem, ModelSpec, ParameterSet

GRAD_TOL = 1e-5
MAX_ITER = 500

# threshold increments live in exp([-12, 12]): wide enough for any plausible
# cutpoint geometry, tight enough that cumulated thresholds never collapse to
# float ties when a top category is empty and its increment runs away
DELTA_BOUND = 12.0


@dataclass
class FitOptions:
    grad_tol: float = GRAD_TOL
    max_iter: int = MAX_ITER
    method: str = "L-BFGS-B"
    start: ParameterSet | None = None
    compute_se: bool = True


@dataclass
class EstimationResult:
    params: ParameterSet
    log_likelihood: float
    n_parameters: int
    converged: bool
    n_iterations: int
    grad_norm: float
    se: dict[str, float] = field(default_factory=dict)
    se_available: bool = True
    theta: np.ndarray | None = None
    parameter_names: tuple[str, ...] = ()
    natural_names: tuple[str, ...] = ()
    at_bounds: tuple[str, ...] = ()  # threshold increments pinned at the box

    def natural_values(self) -> dict[str, float]:
        """Estimates keyed like ``se`` (betas/gammas/ASCs/taus/log-scales)."""
        out: dict[str, float] = {}
        p = self.params
        for (cut, season), v in p.asc.items():
            out[f"asc:{cut}:{season}"] = v
        for (attr, column, cut, season), v in p.beta.items():
            name = f"b:{attr}:{column}"
            if cut:
                name += f":{cut}"
            if season:
                name += f":{season}"
            out[name] = v
        for cov, v in p.gamma.items():
            out[f"g:{cov}"] = v
        for cut, tau in p.tau.items():
            for j, v in enumerate(np.asarray(tau), start=1):
                out[f"tau:{cut}:{j}"] = float(v)
        for (cut, season), v in p.mu.items():
            out[f"mu:{cut}:{season}"] = v
        return out


def _starting_theta(problem: LikelihoodProblem, dataset: Dataset) -> np.ndarray:
    """Zeros for linear terms; threshold increments from empirical quantiles."""
    theta = np.zeros(problem.n_parameters)
    n_cats = problem.spec.n_categories
    counts = np.zeros((len(problem.cuts), n_cats))
    np.add.at(counts, (problem.cut_idx, problem.y), 1.0)
    k = problem.n_lin
    for c in range(len(problem.cuts)):
        total = counts[c].sum()
        cum = np.cumsum(counts[c])[:-1] / total
        cum = np.clip(cum, 0.5 / total, 1.0 - 0.5 / total)
        tau = np.log(cum / (1.0 - cum))
        tau -= tau[0]  # first cutpoint pinned at zero
        inc = np.maximum(np.diff(tau), 1e-3)
        theta[k + c * problem.n_delta : k + (c + 1) * problem.n_delta] = np.log(inc)
    return theta


def _check_variation(problem: LikelihoodProblem) -> None:
    spread = problem.X.max(axis=0) - problem.X.min(axis=0)
    flat = [name for name, s in zip(problem.lin_names, spread) if s == 0.0 and not name.startswith("asc")]
    if flat:
        raise DataError(f"no variation in column(s): {', '.join(flat)}")


def _delta_bounds(problem: LikelihoodProblem) -> tuple[np.ndarray, np.ndarray]:
    lower = np.full(problem.n_parameters, -np.inf)
    upper = np.full(problem.n_parameters, np.inf)
    sl = slice(problem.n_lin, problem.n_lin + len(problem.cuts) * problem.n_delta)
    lower[sl] = -DELTA_BOUND
    upper[sl] = DELTA_BOUND
    return lower, upper


def _projected_grad_norm(theta, grad, lower, upper) -> float:
    """Max |gradient| with components pushing into an active bound zeroed.

    ``grad`` is the ascent gradient of the log-likelihood.
    """
    g = grad.copy()
    at_lower = theta <= lower + 1e-9
    at_upper = theta >= upper - 1e-9
    g[at_lower & (g < 0)] = 0.0
    g[at_upper & (g > 0)] = 0.0
    return float(np.max(np.abs(g)))


def _machine_converged(problem, theta, grad, ll, lower, upper, tol) -> bool:
    """True when the attainable log-likelihood gain is below float resolution.

    An absolute gradient tolerance cannot always be reached in float64: a
    parameter with curvature c keeps gradient noise of about sqrt(2c.eps|LL|)
    even at the exact optimum.  The decisive criterion is the predicted
    quadratic gain (1/2) g' H^-1 g over the identified subspace; when it is
    smaller than the likelihood's float resolution, no optimizer step can
    improve the solution and the fit is converged for every practical
    purpose.
    """
    active = ((theta <= lower + 1e-9) & (grad < 0)) | ((theta >= upper - 1e-9) & (grad > 0))
    free = np.flatnonzero(~active)
    if free.size == 0:
        return True
    H = _fd_hessian(problem, theta, indices=free)
    eigenvalues, V = np.linalg.eigh(H)
    mag = np.abs(eigenvalues)
    flat = mag <= max(float(mag.max(initial=0.0)) * 1e-12, 1e-8)
    g_spec = V.T @ grad[free]
    if np.any(flat) and float(np.max(np.abs(g_spec[flat]), initial=0.0)) >= tol:
        return False
    gain = 0.5 * float(np.sum(g_spec[~flat] ** 2 / mag[~flat]))
    return gain < 1e-10 * (1.0 + abs(ll))


def fit(dataset: Dataset, spec: ModelSpec, options: FitOptions | None = None) -> EstimationResult:
    """Maximize the log-likelihood; returns best-so-far flagged if not converged."""
    options = options or FitOptions()
    problem = LikelihoodProblem(dataset, spec)
    _check_variation(problem)
    if options.start is not None:
        theta0 = problem.params_to_theta(options.start)
    else:
        theta0 = _starting_theta(problem, dataset)
    lower, upper = _delta_bounds(problem)
    theta0 = np.clip(theta0, lower, upper)

    def objective(theta):
        ll, grad = problem.loglik_grad(theta)
        return -ll, -grad

    theta = theta0
    iterations = 0
    # a restart with a fresh curvature estimate recovers from line searches
    # that stall on floating-point precision just above tolerance
    for attempt in range(3):
        if options.method == "L-BFGS-B":
            opt = optimize.minimize(
                objective,
                theta,
                jac=True,
                method="L-BFGS-B",
                bounds=list(zip(lower, upper)),
                options={
                    "maxiter": options.max_iter,
                    "maxfun": 50 * options.max_iter,
                    "gtol": options.grad_tol,
                    "ftol": 1e-16,
                    "maxcor": 40,
                },
            )
        else:
            opt = optimize.minimize(
                objective,
                theta,
                jac=True,
                method="BFGS",
                options={"maxiter": options.max_iter, "gtol": options.grad_tol, "norm": np.inf},
            )
            opt.x = np.clip(opt.x, lower, upper)
        theta = opt.x
        iterations += int(opt.nit)
        _, grad = problem.loglik_grad(theta)
        if (
            _projected_grad_norm(theta, grad, lower, upper) < options.grad_tol
            or iterations >= options.max_iter
        ):
            break
    ll, grad = problem.loglik_grad(theta)
    if _projected_grad_norm(theta, grad, lower, upper) >= options.grad_tol:
        # line searches can stall on float precision just above tolerance;
        # a few exact-curvature steps finish the job
        theta, ll, grad = _newton_polish(problem, theta, options.grad_tol, lower, upper)
    grad_norm = _projected_grad_norm(theta, grad, lower, upper)
    converged = grad_norm < options.grad_tol or _machine_converged(
        problem, theta, grad, ll, lower, upper, options.grad_tol
    )
    names = problem.parameter_names()
    pinned = tuple(
        names[i]
        for i in np.flatnonzero((theta <= lower + 1e-9) | (theta >= upper - 1e-9))
    )
    result = EstimationResult(
        params=problem.theta_to_params(theta),
        log_likelihood=float(ll),
        n_parameters=problem.n_parameters,
        converged=converged,
        n_iterations=iterations,
        grad_norm=grad_norm,
        theta=theta,
        parameter_names=names,
        natural_names=problem.natural_names(),
        se_available=False,
        at_bounds=pinned,
    )
    if options.compute_se and converged:
        try:
            result.se = standard_errors(result, dataset, spec)
            result.se_available = True
        except NumericalError:
            result.se = {}
            result.se_available = False
    return result


def _newton_polish(
    problem: LikelihoodProblem,
    theta: np.ndarray,
    tol: float,
    lower: np.ndarray,
    upper: np.ndarray,
    max_rounds: int = 3,
) -> tuple[np.ndarray, float, np.ndarray]:
    """Active-set trust-region finish for the last mile.

    Line-search methods stall in the shallow, weakly-coupled threshold
    subspace; an exact-Hessian trust region converges it in a few steps.
    Coordinates pinned at the threshold box (active bounds with an outward
    gradient) are frozen per round; steps leaving the box are clipped and
    re-frozen on the next round.
    """
    ll, grad = problem.loglik_grad(theta)
    for _ in range(max_rounds):
        if _projected_grad_norm(theta, grad, lower, upper) < tol:
            break
        active = ((theta <= lower + 1e-9) & (grad < 0)) | ((theta >= upper - 1e-9) & (grad > 0))
        free = np.flatnonzero(~active)
        if free.size == 0:
            break

        def embed(x):
            full = theta.copy()
            full[free] = x
            return full

        def f(x):
            with np.errstate(over="ignore", invalid="ignore"):
                ll_x, g = problem.loglik_grad(embed(x))
            return -ll_x, -g[free]

        def h(x):
            return -_fd_hessian(problem, embed(x), indices=free)

        opt = optimize.minimize(
            f,
            theta[free],
            jac=True,
            hess=h,
            method="trust-exact",
            options={"maxiter": 25, "gtol": 0.5 * tol, "max_trust_radius": 50.0},
        )
        cand = np.clip(embed(opt.x), lower, upper)
        with np.errstate(over="ignore", invalid="ignore"):
            ll_c, grad_c = problem.loglik_grad(cand)
        improved = np.isfinite(ll_c) and (
            ll_c > ll
            or _projected_grad_norm(cand, grad_c, lower, upper)
            < _projected_grad_norm(theta, grad, lower, upper)
        )
        if not improved:
            break
        theta, ll, grad = cand, ll_c, grad_c
    return theta, ll, grad


def _fd_hessian(
    problem: LikelihoodProblem, theta: np.ndarray, h: float = 1e-5, indices=None
) -> np.ndarray:
    """Central finite differences of the analytic gradient.

    With ``indices`` only that sub-block of the Hessian is formed.
    """
    idx = np.arange(len(theta)) if indices is None else np.asarray(indices)
    H = np.empty((len(idx), len(idx)))
    for col, i in enumerate(idx):
        step = h * (1.0 + abs(theta[i]))
        up = theta.copy()
        up[i] += step
        down = theta.copy()
        down[i] -= step
        diff = (problem.loglik_grad(up)[1] - problem.loglik_grad(down)[1]) / (2 * step)
        H[:, col] = diff[idx]
    return 0.5 * (H + H.T)


def standard_errors(result: EstimationResult, dataset: Dataset, spec: ModelSpec) -> dict[str, float]:
    """Delta-method standard errors in natural space.

    Uses the inverse negative Hessian of the log-likelihood in unconstrained
    space; threshold SEs account for the cumulative-exponential mapping.
    Threshold increments above the highest quantity observed for a cut carry
    no information; such directions get infinite SEs (flagged unidentified)
    through a pseudo-inverse instead of failing the whole computation.
    A singular Hessian on any substantive parameter (ASC, beta, gamma,
    log-scale) still raises.
    """
    if result.theta is None:
        raise NumericalError("result carries no unconstrained solution")
    if not result.converged:
        raise NumericalError("standard errors need a converged (non-flagged) result")
    problem = LikelihoodProblem(dataset, spec)
    H = _fd_hessian(problem, result.theta)
    try:
        eigenvalues, V = np.linalg.eigh(-H)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("Hessian eigendecomposition failed") from exc
    top = float(eigenvalues.max(initial=0.0))
    if top <= 0:
        raise NumericalError("Hessian not negative definite; standard errors unavailable")
    flat = eigenvalues <= top * 1e-10
    if np.any(eigenvalues < -top * 1e-8):
        raise NumericalError("Hessian not negative definite; standard errors unavailable")
    inv_eigenvalues = np.where(flat, 0.0, 1.0 / np.where(flat, 1.0, eigenvalues))
    cov = (V * inv_eigenvalues[None, :]) @ V.T
    # parameters loading on a flat direction are unidentified
    unidentified = (V[:, flat] ** 2).sum(axis=1) > 1e-8 if np.any(flat) else np.zeros(len(H), bool)
    diag = np.diag(cov).copy()
    diag[unidentified] = np.inf
    if np.any(diag[~unidentified] <= 0):
        raise NumericalError("Hessian not negative definite; standard errors unavailable")

    names = problem.parameter_names()
    bad_substantive = [
        names[i] for i in np.flatnonzero(unidentified) if not names[i].startswith("delta:")
    ]
    if bad_substantive:
        raise NumericalError(
            "singular Hessian on substantive parameter(s): " + ", ".join(bad_substantive[:5])
        )

    se: dict[str, float] = {}
    for i, name in enumerate(names[: problem.n_lin]):
        se[name] = float(np.sqrt(diag[i]))
    # thresholds: tau_j = sum_{k<=j} exp(delta_k); var via J Sigma J^T per cut
    n_delta = problem.n_delta
    k0 = problem.n_lin
    for c, cut in enumerate(problem.cuts):
        sl = slice(k0 + c * n_delta, k0 + (c + 1) * n_delta)
        block = cov[sl, sl]
        flagged = unidentified[sl]
        ed = np.exp(result.theta[sl])
        J = np.tril(np.ones((n_delta, n_delta))) * ed[None, :]
        tau_var = np.diag(J @ block @ J.T)
        for j, v in enumerate(tau_var, start=2):
            if np.any(flagged[: j - 1]):
                se[f"tau:{cut}:{j}"] = float("inf")
            else:
                se[f"tau:{cut}:{j}"] = float(np.sqrt(max(v, 0.0)))
    base = k0 + len(problem.cuts) * n_delta
    for s, (cut, season) in enumerate(problem.free_cells):
        se[f"mu:{cut}:{season}"] = float(np.sqrt(diag[base + s]))
    return se


def prune(
    dataset: Dataset,
    spec: ModelSpec,
    result: EstimationResult,
    alpha: float = 0.10,
) -> tuple[ModelSpec, EstimationResult]:
    """Drop insignificant betas/gammas by iterated likelihood-ratio tests.

    Each round removes the least-significant remaining candidate whose
    single-parameter LR test fails to reject zero at level ``alpha``
    (p-value >= alpha), then refits.  ASCs, thresholds and scales are never
    candidates.  alpha >= 1 is the limit case where every candidate is
    removable regardless of the statistic.
    """
    current_spec = spec
    current = result
    while True:
        candidates = [name for name in current.parameter_names if name.startswith(("b:", "g:"))]
        if not candidates:
            return current_spec, current
        if alpha < 1.0 and not current.se_available:
            raise NumericalError("pruning needs standard errors from a converged fit")
        values = current.natural_values()
        order = sorted(
            candidates,
            key=lambda n: (
                abs(values[n]) / current.se[n] if current.se.get(n) else 0.0,
                n,
            ),
        )
        removed = False
        for name in order:
            trial_spec = current_spec.drop_parameter(name)
            trial = fit(dataset, trial_spec, FitOptions(compute_se=alpha < 1.0))
            stat = max(0.0, -2.0 * (trial.log_likelihood - current.log_likelihood))
            p_value = float(stats.chi2.sf(stat, df=1))
            if alpha >= 1.0 or p_value >= alpha:
                current_spec, current = trial_spec, trial
                removed = True
                break
        if not removed:
            return current_spec, current
