import logging
from typing import NamedTuple, Optional, Union

import numpy as np
import scipy.special
import scipy.stats

from config import settings
from models import CoefficientTest, LmmFit, ModelMatrices, VarianceComponents
from services.reml_solver import RemlSolver
from utils.errors import SingularSystemError

logger = logging.getLogger(__name__)


class DegreesOfFreedom(NamedTuple):
    df: float
    fallback: bool


def t_two_sided_p(t_statistic: float, df: float) -> float:
    """P(|T_df| >= |t|) through the regularized incomplete beta function I_{df/(df+t^2)}(df/2, 1/2)."""
    if df <= 0:
        raise ValueError(f"Degrees of freedom must be positive, got {df}")
    if np.isnan(t_statistic):
        return float("nan")
    if np.isinf(t_statistic):
        return 0.0
    x = df / (df + t_statistic * t_statistic)
    return float(min(max(scipy.special.betainc(df / 2.0, 0.5, x), 0.0), 1.0))


def _step(value: float, relative: float, floor: float) -> float:
    # keep value - step inside the admissible region
    return min(max(relative * value, floor), value / 2.0)


def _coefficient_index(labels, coefficient: Union[int, str]) -> int:
    return labels.index(coefficient) if isinstance(coefficient, str) else int(coefficient)


def satterthwaite_df(matrices: ModelMatrices, fit: LmmFit, coefficient: Union[int, str],
                     solver: Optional[RemlSolver] = None) -> DegreesOfFreedom:
    """
    df = 2 g^2 / (grad g' A grad g), with g the coefficient's GLS variance as a function of
    (sigma_c2, sigma_d2, sigma_e2), A = 2 H^-1 and H the Hessian of the -2 REML criterion.
    Components estimated at exactly zero are held fixed. Falls back to N - p when H is not
    positive definite or the approximation is not finite.
    """
    solver = solver or RemlSolver(matrices)
    index = _coefficient_index(fit.labels, coefficient)
    residual_df = float(fit.n_obs - fit.n_fixed)
    psi = fit.components.as_array()
    if psi[2] <= 0:
        raise ValueError("Satterthwaite df needs a positive residual variance")
    free = [i for i in range(3) if psi[i] > 0]
    floor = settings.inference.step_floor * psi[2]

    def components(point: np.ndarray) -> VarianceComponents:
        return VarianceComponents(sigma_c2=point[0], sigma_d2=point[1], sigma_e2=point[2])

    def variance_of_coefficient(point: np.ndarray) -> float:
        return float(solver.gls_fixed_effects(components(point))[1][index, index])

    def deviance(point: np.ndarray) -> float:
        return solver.reml_deviance(components(point))

    def shifted(offsets) -> np.ndarray:
        point = psi.copy()
        for i, h in offsets:
            point[i] += h
        return point

    try:
        g = variance_of_coefficient(psi)
        grad_steps = {i: _step(psi[i], settings.inference.gradient_step, floor) for i in free}
        gradient = np.array([
            (variance_of_coefficient(shifted([(i, grad_steps[i])]))
             - variance_of_coefficient(shifted([(i, -grad_steps[i])]))) / (2.0 * grad_steps[i])
            for i in free
        ])

        hess_steps = {i: _step(psi[i], settings.inference.hessian_step, floor) for i in free}
        centre = deviance(psi)
        hessian = np.zeros((len(free), len(free)))
        for a, i in enumerate(free):
            hi = hess_steps[i]
            hessian[a, a] = (deviance(shifted([(i, hi)])) - 2.0 * centre + deviance(shifted([(i, -hi)]))) / hi ** 2
            for b in range(a):
                j = free[b]
                hj = hess_steps[j]
                value = (deviance(shifted([(i, hi), (j, hj)])) - deviance(shifted([(i, hi), (j, -hj)]))
                         - deviance(shifted([(i, -hi), (j, hj)])) + deviance(shifted([(i, -hi), (j, -hj)])))
                hessian[a, b] = hessian[b, a] = value / (4.0 * hi * hj)

        np.linalg.cholesky(hessian)
        asymptotic_cov = 2.0 * np.linalg.inv(hessian)
        denominator = float(gradient @ asymptotic_cov @ gradient)
        df = 2.0 * g * g / denominator
    except (np.linalg.LinAlgError, SingularSystemError, ValueError, ZeroDivisionError) as e:
        logger.warning(f"Satterthwaite df unavailable for '{fit.labels[index]}' ({e}); using N - p = {residual_df:g}")
        return DegreesOfFreedom(residual_df, True)

    if not np.isfinite(df) or df <= 0:
        logger.warning(f"Satterthwaite df not finite for '{fit.labels[index]}'; using N - p = {residual_df:g}")
        return DegreesOfFreedom(residual_df, True)
    return DegreesOfFreedom(float(df), False)


def wald_t_test(fit: LmmFit, df: float, coefficient: Union[int, str], alpha: Optional[float] = None,
                df_fallback: bool = False) -> CoefficientTest:
    """Two-sided t-test of one coefficient against zero, with the matching confidence interval."""
    alpha = settings.inference.alpha if alpha is None else alpha
    if df <= 0:
        raise ValueError(f"Degrees of freedom must be positive, got {df}")
    index = _coefficient_index(fit.labels, coefficient)
    estimate, standard_error = fit.coefficient(fit.labels[index])
    if standard_error > 0:
        t_statistic = estimate / standard_error
    else:
        t_statistic = 0.0 if estimate == 0 else float(np.copysign(np.inf, estimate))
    p_value = t_two_sided_p(t_statistic, df)
    half_width = float(scipy.stats.t.ppf(1.0 - alpha / 2.0, df)) * standard_error
    return CoefficientTest(
        label=fit.labels[index],
        estimate=estimate,
        standard_error=standard_error,
        df=df,
        t_statistic=t_statistic,
        p_value=p_value,
        alpha=alpha,
        significant=p_value < alpha,
        ci_lower=estimate - half_width,
        ci_upper=estimate + half_width,
        df_fallback=df_fallback,
    )
