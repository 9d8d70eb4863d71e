"""Damped Gauss-Newton (Levenberg-Marquardt) nonlinear least squares.

Small in-house engine used by the analysis fits; analytic Jacobians where
the model makes them cheap, numeric central differences otherwise.
Convergence: relative step below 1e-10 or 200 iterations; non-convergence
is reported through the flag, never silently.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import AnalysisError


@dataclass(frozen=True)
class FitResult:
    """Named parameters with standard errors and convergence diagnostics."""

    params: dict
    std_errors: dict
    residual_norm: float
    converged: bool
    iterations: int
    extra: dict = field(default_factory=dict)
    notes: tuple = ()

    def __getitem__(self, name: str) -> float:
        return self.params[name]

    def error(self, name: str) -> float:
        return self.std_errors[name]


def _numeric_jacobian(residual, p, scale=1e-6):
    r0 = residual(p)
    jac = np.empty((r0.size, p.size))
    for j in range(p.size):
        step = scale * max(abs(p[j]), 1.0)
        pp, pm = p.copy(), p.copy()
        pp[j] += step
        pm[j] -= step
        jac[:, j] = (residual(pp) - residual(pm)) / (2.0 * step)
    return jac


def least_squares_lm(residual, p0, jacobian=None, names=None,
                     max_iter=200, step_tol=1e-10, lm_lambda0=1e-3):
    """Minimize sum(residual(p)^2) from p0.

    residual maps parameter vector -> residual vector; jacobian (optional)
    returns d residual / d p.  Returns a FitResult; converged=False results
    keep the best parameters found plus diagnostics.
    """
    p = np.asarray(p0, dtype=float).copy()
    if names is None:
        names = [f"p{j}" for j in range(p.size)]
    jac_fn = jacobian if jacobian is not None else (
        lambda q: _numeric_jacobian(residual, q))

    r = residual(p)
    cost = float(r @ r)
    lam = lm_lambda0
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        jac = jac_fn(p)
        grad = jac.T @ r
        hess = jac.T @ jac
        diag = np.diag(hess).copy()
        diag[diag <= 0] = 1.0

        accepted = False
        for _ in range(30):
            try:
                step = np.linalg.solve(hess + lam * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            p_new = p + step
            r_new = residual(p_new)
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            break
        rel_step = np.max(np.abs(step) / np.maximum(np.abs(p_new), 1e-300))
        p, r, cost = p_new, r_new, cost_new
        lam = max(lam / 10.0, 1e-12)
        if rel_step < step_tol:
            converged = True
            break

    dof = max(r.size - p.size, 1)
    jac = jac_fn(p)
    try:
        cov = np.linalg.inv(jac.T @ jac) * (cost / dof)
        errors = np.sqrt(np.maximum(np.diag(cov), 0.0))
    except np.linalg.LinAlgError:
        errors = np.full(p.size, np.inf)

    return FitResult(
        params=dict(zip(names, p.tolist())),
        std_errors=dict(zip(names, errors.tolist())),
        residual_norm=float(np.sqrt(cost)),
        converged=converged,
        iterations=iterations,
    )


def lorentzian_curve(x, center, hwhm, depth, offset):
    """offset - depth * hwhm^2 / ((x - center)^2 + hwhm^2); a dip for
    depth > 0, a peak for depth < 0."""
    return offset - depth * hwhm**2 / ((x - center) ** 2 + hwhm**2)


def lorentzian_slope(x, center, hwhm, depth, offset=0.0):
    """Analytic d/dx of lorentzian_curve."""
    d = x - center
    return 2.0 * depth * hwhm**2 * d / (d**2 + hwhm**2) ** 2


def fit_lorentzian(x, y) -> FitResult:
    """Fit a Lorentzian dip/peak with offset.

    Initialization from the extremum position and a half-width heuristic;
    parameters: center, hwhm, depth (positive for a dip), offset.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 5:
        raise AnalysisError("Lorentzian fit needs at least 5 points")

    offset0 = float(np.median(y))
    i_ext = int(np.argmax(np.abs(y - offset0)))
    depth0 = offset0 - y[i_ext]
    center0 = float(x[i_ext])
    half = np.abs(y - (offset0 - 0.5 * depth0))
    span = np.abs(x - center0)
    crossing = span[half < 0.25 * abs(depth0) + 1e-300]
    hwhm0 = float(np.median(crossing[crossing > 0])) if np.any(crossing > 0) else (
        0.1 * (x.max() - x.min()))
    if hwhm0 <= 0:
        hwhm0 = 0.1 * (x.max() - x.min()) + 1e-300

    def residual(p):
        return lorentzian_curve(x, *p) - y

    def jacobian(p):
        center, hwhm, depth, _ = p
        d = x - center
        denom = d**2 + hwhm**2
        jac = np.empty((x.size, 4))
        jac[:, 0] = -2.0 * depth * hwhm**2 * d / denom**2
        jac[:, 1] = -2.0 * depth * hwhm * d**2 / denom**2
        jac[:, 2] = -(hwhm**2) / denom
        jac[:, 3] = 1.0
        return jac

    result = least_squares_lm(residual, [center0, hwhm0, depth0, offset0],
                              jacobian=jacobian,
                              names=["center", "hwhm", "depth", "offset"])
    if result.converged and result.params["hwhm"] < 0:
        # width enters squared; canonicalize the sign
        params = dict(result.params)
        params["hwhm"] = abs(params["hwhm"])
        result = FitResult(params, result.std_errors, result.residual_norm,
                           result.converged, result.iterations, result.extra,
                           result.notes)
    return result


def fit_exponential_decay(t, y) -> FitResult:
    """Fit y = amplitude * exp(-rate * t).

    Initialized from a log-linear regression over the positive samples.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    positive = y > 0
    if np.count_nonzero(positive) < 3:
        raise AnalysisError("exponential-decay fit needs positive samples")
    slope, intercept = np.polyfit(t[positive], np.log(y[positive]), 1)
    amp0, rate0 = math_exp_safe(intercept), -slope

    def residual(p):
        return p[0] * np.exp(-p[1] * t) - y

    def jacobian(p):
        e = np.exp(-p[1] * t)
        return np.column_stack([e, -p[0] * t * e])

    result = least_squares_lm(residual, [amp0, rate0], jacobian=jacobian,
                              names=["amplitude", "rate"])
    notes = result.notes
    rate = result.params["rate"]
    if rate <= 0 or result.std_errors["rate"] >= abs(rate):
        notes = notes + ("non-informative: decay rate not resolved",)
    return FitResult(result.params, result.std_errors, result.residual_norm,
                     result.converged, result.iterations, result.extra, notes)


def math_exp_safe(x: float) -> float:
    return float(np.exp(np.clip(x, -700, 700)))
