"""Closed-form phase diagram of the purity partition function at large N.

All lengths are in rescaled units lambda(x) = N * lambda_i. Between
beta_minus = -2/27 and beta_plus = 2 the eigenvalue density has the
high-temperature form (1/pi)(c/2 + beta*lam) sqrt((a - lam)/lam) on [0, a],
with c = beta * b kept instead of b because b diverges at beta = 0. Above
beta_plus the density is a semicircle on [b, a] centred at 1.

The generating function G(beta) = -(1/N^2) log <exp(-beta R)> is obtained by
integrating the mean-purity curve r(beta) = N <pi> from 0, not from the
printed free energies (their additive constants disagree); those printed
forms are kept as ``reported_*`` functions for derivative-level checks.
"""

import logging
import math
import warnings
from collections.abc import Iterable
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.integrate

from .errors import (
    BelowBetaMinus,
    DomainError,
    NumericalError,
    OutsideConvergence,
    QuadratureFailure,
    UnsupportedImbalance,
    UnsupportedOrder,
)
from .models import CumulantSet, Phase, PhaseParams, TheoryRow, TheoryTable

logger = logging.getLogger("isopurity")

BETA_MINUS_EXACT = Fraction(-2, 27)
BETA_PLUS_EXACT = Fraction(2)
BETA_MINUS = float(BETA_MINUS_EXACT)
BETA_PLUS = float(BETA_PLUS_EXACT)

SERIES_CROSSOVER = 1e-3
SERIES_TERMS = 16
QUAD_EPSABS = 1e-13
QUAD_EPSREL = 1e-12
MOMENT_TOL = 1e-8


def critical_betas() -> tuple[float, float]:
    """(beta_minus, beta_plus) = (-2/27, 2)."""
    return BETA_MINUS, BETA_PLUS


def check_domain(beta: float) -> None:
    """Raise unless beta is finite and at least beta_minus."""
    if not math.isfinite(beta):
        raise DomainError(f"beta must be finite, got {beta!r}")
    if beta < BETA_MINUS:
        raise BelowBetaMinus(
            f"beta below beta_minus=-2/27 (got {beta!r}): no real positive-density solution"
        )


# ── Right edge a(beta) ───────────────────────────────────────────────────────

@lru_cache(maxsize=None)
def series_a_coefficients(terms: int) -> tuple[Fraction, ...]:
    """Exact coefficients A_l of a(beta) = sum_l A_l beta^l for l < terms.

    The printed coefficient 4^(l+1) 3^(1-3l) (3l-1)! / ((2l+1)! (l-1)!) of
    (beta/beta_minus)^l is 0/0 at l = 0; its Gamma-function limit is 4.
    """
    coefficients = [Fraction(4)]
    ratio = 1 / BETA_MINUS_EXACT
    for l in range(1, terms):
        c = Fraction(
            4 ** (l + 1) * math.factorial(3 * l - 1),
            3 ** (3 * l - 1) * math.factorial(2 * l + 1) * math.factorial(l - 1),
        )
        coefficients.append(c * ratio**l)
    return tuple(coefficients)


def series_a(beta: float, terms: int = SERIES_TERMS) -> float:
    """Partial sum of the power series of a(beta) around beta = 0."""
    if terms < 1:
        raise ValueError("terms must be >= 1")
    if abs(beta) >= abs(BETA_MINUS):
        raise OutsideConvergence(f"|beta/beta_minus| = {abs(beta / BETA_MINUS):.3g} >= 1")
    total = 0.0
    for coefficient in reversed(series_a_coefficients(terms)):
        total = total * beta + float(coefficient)
    return total


def _right_edge(beta: float) -> float:
    """a(beta) on the high-temperature branch."""
    if abs(beta) < SERIES_CROSSOVER:
        return series_a(beta)
    x = -beta / BETA_MINUS  # = 27 beta / 2
    if beta > 0:
        delta = (math.sqrt(x) + math.sqrt(1.0 + x)) ** (1.0 / 3.0)
        return math.sqrt(8.0 / (3.0 * beta)) * (delta - 1.0 / delta)
    # Below zero Delta^3 = i sqrt(|x|) + sqrt(1 - |x|) has unit modulus.
    x = min(-x, 1.0)
    theta = math.atan2(math.sqrt(x), math.sqrt(1.0 - x))
    return 2.0 * math.sqrt(8.0 / (3.0 * abs(beta))) * math.sin(theta / 3.0)


def support_params(beta: float) -> PhaseParams:
    """Support edges and phase of the limiting density at ``beta``."""
    check_domain(beta)
    if beta > BETA_PLUS:
        s = math.sqrt(BETA_PLUS / beta)
        a, b = 1.0 + s, 1.0 - s
        return PhaseParams(beta=beta, phase=Phase.SEMICIRCLE, a=a, b=b, c=beta * b, xi_im=beta * (a - b))

    a = _right_edge(beta)
    c = 4.0 / a - beta * a / 2.0
    b = c / beta if beta != 0 else None
    return PhaseParams(beta=beta, phase=Phase.HIGH_TEMP, a=a, b=b, c=c, xi_im=beta * a - c)


# ── Densities ────────────────────────────────────────────────────────────────

def _density_from_params(p: PhaseParams, lam: np.ndarray) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    out = np.zeros_like(lam)
    if p.phase == Phase.HIGH_TEMP:
        inside = (lam > 0) & (lam <= p.a)
        li = lam[inside]
        out[inside] = (p.c / 2 + p.beta * li) * np.sqrt((p.a - li) / li) / math.pi
    else:
        inside = (lam >= p.b) & (lam <= p.a)
        li = lam[inside]
        out[inside] = p.beta / math.pi * np.sqrt((li - p.b) * (p.a - li))
    return out


def density(beta: float, lam: float) -> float:
    """Limiting density of rescaled eigenvalues at ``lam``."""
    return float(_density_from_params(support_params(beta), np.array([lam]))[0])


def density_function(beta: float):
    """Vectorised density at fixed beta (support computed once)."""
    params = support_params(beta)
    return lambda lam: _density_from_params(params, lam)


def _substitution(p: PhaseParams):
    """Lower edge, width and weight w(t) with rho(lam) dlam = w(t) dt, lam = lo + width sin^2 t."""
    if p.phase == Phase.HIGH_TEMP:
        lo, width = 0.0, p.a
        return lo, width, lambda t: 2 * p.a / math.pi * (p.c / 2 + p.beta * p.a * np.sin(t) ** 2) * np.cos(t) ** 2
    lo, width = p.b, p.a - p.b
    return lo, width, lambda t: 2 * p.beta * width**2 / math.pi * (np.sin(t) * np.cos(t)) ** 2


def _quad(fun, lo: float, hi: float, what: str) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.integrate.IntegrationWarning)
        try:
            value, error = scipy.integrate.quad(fun, lo, hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200)
        except scipy.integrate.IntegrationWarning as e:
            raise QuadratureFailure(f"{what}: {e}") from e
    if not math.isfinite(value) or error > MOMENT_TOL * max(1.0, abs(value)):
        raise QuadratureFailure(f"{what}: estimate {value!r} with error {error:.2e}")
    return value


def density_moments(beta: float) -> tuple[float, float]:
    """Normalisation and first moment of the density; both should equal 1.

    The substitution lam = lo + width * sin^2 t removes the inverse square
    root edges so adaptive quadrature sees a smooth integrand.
    """
    p = support_params(beta)
    lo, width, weight = _substitution(p)
    half_pi = math.pi / 2
    norm = _quad(weight, 0.0, half_pi, f"normalisation at beta={beta}")
    mean = _quad(lambda t: weight(t) * (lo + width * math.sin(t) ** 2), 0.0, half_pi,
                 f"first moment at beta={beta}")
    return norm, mean


def cumulative(beta: float, lam: float | np.ndarray) -> float | np.ndarray:
    """Cumulative distribution of the limiting density, in closed form.

    Integrating the substituted weight gives polynomials in t, sin 2t and
    sin 4t.
    """
    p = support_params(beta)
    lam_arr = np.asarray(lam, dtype=float)
    lo, width, _ = _substitution(p)
    u = np.clip((lam_arr - lo) / width, 0.0, 1.0)
    t = np.arcsin(np.sqrt(u))
    quartic = t / 8 - np.sin(4 * t) / 32  # integral of sin^2 cos^2
    if p.phase == Phase.HIGH_TEMP:
        quadratic = t / 2 + np.sin(2 * t) / 4  # integral of cos^2
        value = 2 * p.a / math.pi * (p.c / 2 * quadratic + p.beta * p.a * quartic)
    else:
        value = 2 * p.beta * width**2 / math.pi * quartic
    value = np.clip(value, 0.0, 1.0)
    return float(value) if np.ndim(lam) == 0 else value


# ── Mean purity and generating function ──────────────────────────────────────

def mean_purity_coeff(beta: float) -> float:
    """r(beta) = N <pi> = R / N^2."""
    p = support_params(beta)
    if p.phase == Phase.SEMICIRCLE:
        return 1.0 + 1.0 / (2.0 * beta)
    a = p.a
    return (3.0 * beta * a**4 + 16.0 * a**2) / 128.0


def mean_purity_coeff_from_edges(beta: float) -> float:
    """r(beta) = beta a^3 (5a + 4b) / 128 in terms of both edges (high temperature, beta != 0)."""
    p = support_params(beta)
    if p.phase != Phase.HIGH_TEMP or p.b is None:
        raise DomainError("edge form needs the high-temperature branch with beta != 0")
    return beta * p.a**3 * (5 * p.a + 4 * p.b) / 128.0


def log_mgf(beta: float) -> float:
    """G(beta) = integral of r from 0 to beta (thermodynamic integration, G(0) = 0)."""
    check_domain(beta)
    if beta == 0:
        return 0.0
    if beta <= BETA_PLUS:
        return _quad(mean_purity_coeff, 0.0, beta, f"G({beta})")
    # r = 1 + 1/(2 beta) above beta_plus integrates in closed form.
    return _g_beta_plus() + (beta - BETA_PLUS) + 0.5 * math.log(beta / BETA_PLUS)


@lru_cache(maxsize=1)
def _g_beta_plus() -> float:
    return _quad(mean_purity_coeff, 0.0, BETA_PLUS, "G(beta_plus)")


def entropy_rel(beta: float) -> float:
    """s(beta) - s(0) with s = S/N^2, i.e. beta r(beta) - G(beta)."""
    return beta * mean_purity_coeff(beta) - log_mgf(beta)


# ── Cumulants ────────────────────────────────────────────────────────────────

def _truncated_product(p: list[Fraction], q: list[Fraction], order: int) -> list[Fraction]:
    out = [Fraction(0)] * (order + 1)
    for i, pi in enumerate(p[: order + 1]):
        if pi == 0:
            continue
        for j, qj in enumerate(q[: order + 1 - i]):
            out[i + j] += pi * qj
    return out


def purity_taylor(order: int) -> list[Fraction]:
    """Exact Taylor coefficients t_0..t_order of r(beta) = (3 beta a^4 + 16 a^2)/128 at 0."""
    if order < 0:
        raise ValueError("order must be >= 0")
    a = list(series_a_coefficients(order + 1))
    a2 = _truncated_product(a, a, order)
    a4 = _truncated_product(a2, a2, order)
    return [(3 * (a4[k - 1] if k > 0 else 0) + 16 * a2[k]) / 128 for k in range(order + 1)]


def cumulants_from_taylor(max_order: int) -> list[Fraction]:
    """Cumulant coefficients kappa_1..kappa_max_order (of pi, times N^(3n-2)) from r's Taylor series."""
    t = purity_taylor(max_order - 1)
    return [(-1) ** (n + 1) * math.factorial(n - 1) * t[n - 1] for n in range(1, max_order + 1)]


def _balanced_cumulant(n: int) -> Fraction:
    return Fraction(2 ** (n + 1) * math.factorial(3 * n - 3), math.factorial(2 * n))


_UNBALANCED = {
    1: (1, (2, 1), 1),
    2: (2, (1,), 2),
    3: (8, (2, 1), 4),
    4: (48, (6, 6, 1), 6),
    5: (384, (22, 33, 13, 1), 8),
}


def _unbalanced_cumulant(n: int, mu: Fraction) -> Fraction:
    prefactor, poly, denominator_power = _UNBALANCED[n]
    numerator = sum(Fraction(c) * mu**k for k, c in enumerate(poly))
    return prefactor * numerator / (1 + mu) ** denominator_power


def cumulant_exact(n: int, mu: Fraction | int = 0) -> tuple[Fraction, int]:
    """n-th purity cumulant as (coefficient, power): value = coefficient / N**power."""
    mu = Fraction(mu)
    if n < 1:
        raise UnsupportedOrder(f"cumulant order must be >= 1, got {n}")
    if mu < 0:
        raise UnsupportedImbalance(f"mu must be >= 0, got {mu}")
    power = 3 * n - 2
    if mu == 0:
        return _balanced_cumulant(n), power
    if n > 5:
        raise UnsupportedOrder(f"unbalanced cumulants are known up to order 5, asked for {n}")
    return _unbalanced_cumulant(n, mu), power


def cumulant_set(mu: Fraction | int = 0, max_order: int = 5) -> CumulantSet:
    mu = Fraction(mu)
    return CumulantSet(mu=mu, entries={n: cumulant_exact(n, mu) for n in range(1, max_order + 1)})


def cumulant_value(n: int, mu: Fraction | int, size: int) -> float:
    """Cumulant of the purity for subsystem dimension ``size``."""
    coefficient, power = cumulant_exact(n, mu)
    return float(coefficient) / float(size) ** power


# ── Printed closed forms ─────────────────────────────────────────────────────

def reported_free_energy(beta: float) -> float:
    """F/N^2 as printed for each branch; absolute constants are not trusted."""
    check_domain(beta)
    if beta >= BETA_PLUS:
        return 1.0 + 3.0 / (4.0 * beta) + math.log(2.0 * beta) / (2.0 * beta)
    if beta == 0:
        raise DomainError("printed high-temperature free energy is singular at beta=0")
    a = support_params(beta).a
    return (6 - a) * a / 8 - (2 + a * math.log(a / 4)) / (a * beta) + 3 * a**4 * beta / 256


def reported_entropy(beta: float) -> float:
    """S/N^2 = beta (r - F/N^2), with the printed low-temperature form above beta_plus."""
    check_domain(beta)
    if beta >= BETA_PLUS:
        return -0.25 - 0.5 * math.log(2.0 * beta)
    return beta * (mean_purity_coeff(beta) - reported_free_energy(beta))


def reported_critical_entropy(beta: float) -> float:
    """Printed expansion of S/N^2 around beta_plus (second-order transition)."""
    d = beta - BETA_PLUS
    return -0.25 - math.log(2.0) - d / 4 + (d * d / 16 if d > 0 else 0.0)


# ── Tables ───────────────────────────────────────────────────────────────────

def beta_grid(beta_min: float, beta_max: float, steps: int) -> np.ndarray:
    """Evenly spaced grid including both endpoints (a single point at beta_min if steps == 1)."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if steps == 1:
        return np.array([beta_min], dtype=float)
    return np.linspace(beta_min, beta_max, steps)


def sweep(betas: Iterable[float], mu: Fraction | int = 0) -> TheoryTable:
    """One row of phase-diagram quantities per beta; domain errors are recorded per row."""
    mu = Fraction(mu)
    if mu != 0:
        raise UnsupportedImbalance("the analytic phase diagram is available for balanced bipartitions (mu=0) only")
    rows = []
    for beta in betas:
        beta = float(beta)
        try:
            p = support_params(beta)
            r = mean_purity_coeff(beta)
            g = log_mgf(beta)
            rows.append(TheoryRow(
                beta=beta, phase=p.phase, a=p.a, b_or_c=p.b_or_c, r=r, G=g, s_rel=beta * r - g,
            ))
        except (DomainError, NumericalError) as e:
            logger.debug("sweep row beta=%r: %s", beta, e)
            rows.append(TheoryRow(beta=beta, error=str(e)))
    return TheoryTable(mu=str(mu), rows=rows)
