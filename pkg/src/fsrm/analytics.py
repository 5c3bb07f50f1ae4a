"""Stationary fOU analytics: variance, autocorrelation, autocovariance, minimising lag.

The autocorrelation is

    rho(s lambda) = (2 sin(pi H) / pi) * int_0^inf cos(s lambda x) x^(1-2H) / (1 + x^2) dx

which depends on s and lambda only through their product. Below SMALL_LAG the
cosine integral cancels against its own total to many digits, so 1 - rho is
integrated directly instead. From LARGE_LAG on, the asymptotic expansion in
inverse powers of s lambda replaces the oscillatory quadrature.
"""

from __future__ import annotations

import functools
import logging
import math

import numpy as np
from scipy import integrate, optimize, special

from fsrm.errors import ConfigError, NumericalError
from fsrm.models import CorrelationCurve, FouParams, LagMinResult

logger = logging.getLogger("fsrm.analytics")

DEFAULT_TOL = 1e-8
# QUADPACK error estimates are conservative; only clearly failed integrals are rejected.
ERROR_SLACK = 1e3
RHO_BOUND_SLACK = 1e-9
SMALL_LAG = 1e-3
LARGE_LAG = 50.0


def fou_variance(params: FouParams) -> float:
    """eta^2 Gamma(2H+1) / (2 lambda^(2H))."""
    h = params.hurst
    return params.eta**2 * special.gamma(2.0 * h + 1.0) / (2.0 * params.lambda_ ** (2.0 * h))


def _quad(func, a, b, tol, **kwargs) -> tuple[float, float]:
    value, abserr, _, *messages = integrate.quad(
        func, a, b, epsabs=tol, epsrel=tol, limit=200, limlst=200, full_output=1, **kwargs
    )
    # quad appends a message only when QUADPACK reports a problem.
    if messages and abserr > ERROR_SLACK * tol:
        message = messages[0]
        raise NumericalError(
            f"quadrature on [{a}, {b}] did not converge (error {abserr:.2e}): {message}"
        )
    return value, abserr


def _kernel_integral(hurst: float, omega: float, tol: float) -> float:
    """int_0^inf cos(omega x) x^(1-2H) / (1 + x^2) dx for omega > 0."""
    alpha = 1.0 - 2.0 * hurst
    x1 = math.pi / omega
    head_end = min(1.0, x1)

    # x^(1-2H) is singular at 0 when H > 1/2; the algebraic weight absorbs it.
    head, err_head = _quad(
        lambda x: math.cos(omega * x) / (1.0 + x * x),
        0.0,
        head_end,
        tol,
        weight="alg",
        wvar=(alpha, 0.0),
    )

    def envelope(x):
        return x**alpha / (1.0 + x * x)

    middle, err_mid = 0.0, 0.0
    if x1 > head_end:
        middle, err_mid = _quad(envelope, head_end, x1, tol, weight="cos", wvar=omega)

    tail, err_tail = _quad(envelope, x1, np.inf, tol, weight="cos", wvar=omega)
    logger.debug(
        "kernel integral H=%.4f omega=%.4g: head=%.3e mid=%.3e tail=%.3e err=%.1e",
        hurst,
        omega,
        head,
        middle,
        tail,
        err_head + err_mid + err_tail,
    )
    return head + middle + tail


def _small_lag_deficit(hurst: float, omega: float, tol: float) -> float:
    """1 - rho for 0 < omega < SMALL_LAG.

    With u = omega x and int_0^inf x^(1-2H) / (1 + x^2) dx = pi / (2 sin(pi H)),

        1 - rho = (2 sin(pi H) / pi) omega^(2H) J,
        J = int_0^inf (1 - cos u) u^(1-2H) / (u^2 + omega^2) du,

    and J stays of order one as omega goes to zero.
    """
    alpha = 1.0 - 2.0 * hurst
    w2 = omega * omega

    def versine(u):
        return 2.0 * math.sin(0.5 * u) ** 2

    head, _ = _quad(lambda u: versine(u) / (u * u + w2), 0.0, omega, tol, weight="alg", wvar=(alpha, 0.0))
    body, _ = _quad(lambda u: versine(u) * u**alpha / (u * u + w2), omega, 1.0, tol)

    # int_1^inf u^alpha / (u^2 + omega^2) du = sum_k (-omega^2)^k / (2k + 1 - alpha)
    plain, term, k = 0.0, 1.0, 0
    while abs(term) > tol * 1e-3:
        term = (-w2) ** k / (2 * k + 1 - alpha)
        plain += term
        k += 1
    oscillating, _ = _quad(lambda u: u**alpha / (u * u + w2), 1.0, np.inf, tol, weight="cos", wvar=1.0)

    j = head + body + plain - oscillating
    logger.debug("small-lag deficit H=%.4f omega=%.3g: J=%.6e", hurst, omega, j)
    return 2.0 * math.sin(math.pi * hurst) / math.pi * omega ** (2.0 * hurst) * j


def _large_lag_rho(hurst: float, omega: float, tol: float) -> float:
    """Asymptotic expansion of rho for omega >= LARGE_LAG.

    rho ~ -(sin(2 pi H) / pi) sum_k Gamma(2 - 2H + 2k) omega^(2H - 2 - 2k), summed
    until the terms drop below tol or start to grow; the remainder is exponentially
    small in omega.
    """
    total, previous, k = 0.0, math.inf, 0
    while True:
        term = special.gamma(2.0 - 2.0 * hurst + 2 * k) * omega ** (2.0 * hurst - 2.0 - 2 * k)
        if term >= previous:
            break
        total += term
        if term < tol * 1e-3:
            break
        previous, k = term, k + 1
    return -math.sin(2.0 * math.pi * hurst) / math.pi * total


@functools.lru_cache(maxsize=65536)
def fou_autocorrelation(hurst: float, slambda: float, tol: float = DEFAULT_TOL) -> float:
    """Autocorrelation of the stationary fOU at lag s, as a function of H and s*lambda."""
    if not 0.0 < hurst < 1.0:
        raise ConfigError(f"Hurst exponent must lie in (0, 1), got {hurst}")
    if slambda < 0:
        raise ConfigError(f"s*lambda must be nonnegative, got {slambda}")
    if slambda == 0:
        return 1.0

    if slambda < SMALL_LAG:
        deficit = _small_lag_deficit(hurst, slambda, tol)
        if not 0.0 <= deficit <= 2.0 + RHO_BOUND_SLACK:
            raise NumericalError(f"autocorrelation deficit {deficit} out of range (H={hurst}, s*lambda={slambda})")
        return float(np.clip(1.0 - deficit, -1.0, 1.0))

    if slambda >= LARGE_LAG:
        return float(np.clip(_large_lag_rho(hurst, slambda, tol), -1.0, 1.0))

    rho = 2.0 * math.sin(math.pi * hurst) / math.pi * _kernel_integral(hurst, slambda, tol)
    if abs(rho) > 1.0 + RHO_BOUND_SLACK:
        raise NumericalError(f"autocorrelation {rho} outside [-1, 1] (H={hurst}, s*lambda={slambda})")
    return float(np.clip(rho, -1.0, 1.0))


def fou_autocovariance(params: FouParams, s: float, tol: float = DEFAULT_TOL) -> float:
    return fou_variance(params) * fou_autocorrelation(params.hurst, params.lambda_ * abs(s), tol)


def correlation_curve(hurst: float, product_grid, tol: float = DEFAULT_TOL) -> CorrelationCurve:
    grid = np.asarray(product_grid, dtype=float)
    if grid.ndim != 1 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ConfigError("s*lambda grid must be positive and strictly increasing")
    rho = np.array([fou_autocorrelation(hurst, sl, tol) for sl in grid])
    return CorrelationCurve(hurst=hurst, product_grid=grid, rho=rho)


def min_autocorrelation(
    hurst: float, s_max: float = 10.0, step: float = 0.01, tol: float = DEFAULT_TOL
) -> LagMinResult:
    """Minimum of rho over s in [0, s_max] with lambda = 1.

    A grid scan at ``step`` locates the minimum, then a bounded scalar search on the
    two neighbouring grid cells refines it.
    """
    if not 0 < step < s_max:
        raise ConfigError(f"need 0 < step < s_max, got step={step}, s_max={s_max}")

    curve = correlation_curve(hurst, np.arange(1, int(round(s_max / step)) + 1) * step, tol)
    grid, rho = curve.product_grid, curve.rho
    k = int(np.argmin(rho))
    if k == 0 or k == grid.size - 1:
        return LagMinResult(s_star=float(grid[k]), rho_min=float(rho[k]))

    res = optimize.minimize_scalar(
        lambda s: fou_autocorrelation(hurst, s, tol),
        bounds=(grid[k - 1], grid[k + 1]),
        method="bounded",
        options={"xatol": step * 1e-3},
    )
    if res.success and res.fun <= rho[k]:
        return LagMinResult(s_star=float(res.x), rho_min=float(res.fun))
    return LagMinResult(s_star=float(grid[k]), rho_min=float(rho[k]))


def lag_min_table(
    hurst_grid, s_max: float = 10.0, step: float = 0.01, tol: float = DEFAULT_TOL
) -> list[tuple[float, LagMinResult]]:
    return [(float(h), min_autocorrelation(h, s_max, step, tol)) for h in hurst_grid]
