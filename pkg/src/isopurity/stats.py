"""Estimators used to compare samples with the analytic results.

k-statistics with blocked jackknife errors, normalised histograms of
rescaled eigenvalues, L1 and Kolmogorov-Smirnov distances, and integrated
autocorrelation times with Madras-Sokal windowing.
"""

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
import scipy.stats

from .errors import EmptyInput, SeriesTooShort, TooFewSamples
from .models import EmpiricalDensity, KStat, SampleSummary

logger = logging.getLogger("isopurity")

MIN_BLOCKS = 20
MAX_BLOCKS = 100


# ── k-statistics ─────────────────────────────────────────────────────────────

def _k5(x: np.ndarray) -> float:
    """Fifth k-statistic from central sample moments (scipy stops at order 4)."""
    n = x.size
    d = x - x.mean()
    m2 = np.mean(d**2)
    m3 = np.mean(d**3)
    m5 = np.mean(d**5)
    return float(n**3 * ((n + 5) * m5 - 10 * (n - 1) * m2 * m3) / ((n - 1) * (n - 2) * (n - 3) * (n - 4)))


def kstat(x: np.ndarray, order: int) -> float:
    """Unbiased estimate of the cumulant of the given order (1..5)."""
    if order == 1:
        return float(np.mean(x))
    # Higher k-statistics are shift invariant; centring first avoids the
    # cancellation of raw power sums when the spread is tiny next to the mean.
    centred = x - np.mean(x)
    if order == 5:
        return _k5(centred)
    return float(scipy.stats.kstat(centred, n=order))


def jackknife_blocks(size: int, block_length: int) -> int:
    """Number of jackknife blocks used for a series of ``size`` points."""
    return min(MAX_BLOCKS, size // max(1, block_length))


def _jackknife_stderr(x: np.ndarray, order: int, block_length: int) -> float | None:
    """Delete-1 blocked jackknife standard error of ``kstat(x, order)``."""
    n_blocks = jackknife_blocks(x.size, block_length)
    if n_blocks < 2:
        return None
    usable = (x.size // n_blocks) * n_blocks
    blocks = np.split(x[:usable], n_blocks)
    # Each leave-one-out sample must still support the estimator.
    if usable - usable // n_blocks < max(2, order):
        return None
    estimates = np.array([
        kstat(np.concatenate(blocks[:i] + blocks[i + 1:]), order) for i in range(n_blocks)
    ])
    variance = np.sum((estimates - estimates.mean()) ** 2) * (n_blocks - 1) / n_blocks
    return float(np.sqrt(variance))


def k_statistics(samples: Sequence[float] | np.ndarray, max_order: int = 4,
                 block_length: int = 1) -> SampleSummary:
    """Unbiased cumulant estimates k_1..k_max_order with jackknife errors.

    ``block_length`` should be about ten autocorrelation times for Markov
    chain series; 1 for independent draws.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if not 1 <= max_order <= 5:
        raise ValueError("max_order must be between 1 and 5")
    needed = max(2, max_order)
    if x.size < needed:
        raise TooFewSamples(f"need at least {needed} samples for order {max_order}, got {x.size}")

    n_blocks = jackknife_blocks(x.size, block_length)
    if n_blocks < MIN_BLOCKS:
        logger.info("jackknife errors from only %d blocks (block length %d); treat them as rough",
                    n_blocks, block_length)

    mean = float(np.mean(x))
    k_stats: dict[int, KStat] = {}
    for order in range(1, max_order + 1):
        estimate = mean if order == 1 else kstat(x, order)
        k_stats[order] = KStat(
            estimate=estimate,
            stderr=_jackknife_stderr(x, order, block_length),
            high_variance=order == 5,
            few_blocks=n_blocks < MIN_BLOCKS,
        )
    return SampleSummary(count=int(x.size), mean=mean, k_stats=k_stats)


# ── Densities and distances ──────────────────────────────────────────────────

def empirical_density(values: Sequence[float] | np.ndarray, bins: int,
                      range: tuple[float, float]) -> EmpiricalDensity:
    """Histogram normalised over the in-range values; out-of-range values are counted."""
    lo, hi = range
    if bins < 2:
        raise ValueError("bins must be >= 2")
    if not hi > lo:
        raise ValueError(f"empty range ({lo}, {hi})")
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise EmptyInput("no values to histogram")

    inside = (x >= lo) & (x <= hi)
    counts, edges = np.histogram(x[inside], bins=bins, range=(lo, hi))
    total = int(counts.sum())
    if total == 0:
        raise EmptyInput(f"all {x.size} values fall outside ({lo}, {hi})")
    out_of_range = int(x.size - total)
    if out_of_range:
        logger.debug("%d of %d values outside histogram range", out_of_range, x.size)

    densities = counts / (total * np.diff(edges))
    return EmpiricalDensity(
        edges=edges.tolist(),
        densities=densities.tolist(),
        count=total,
        out_of_range=out_of_range,
    )


def l1_distance(empirical: EmpiricalDensity, analytic: Callable[[float], float],
                cdf: Callable[[np.ndarray], np.ndarray] | None = None) -> float:
    """L1 distance between a histogram and an analytic density.

    By default the density is evaluated at bin midpoints, which is biased
    near integrable edge singularities. With ``cdf`` the exact bin average
    (cdf(right) - cdf(left)) / width is used instead.
    """
    widths = empirical.widths
    if cdf is None:
        reference = np.array([analytic(float(m)) for m in empirical.midpoints])
    else:
        edges = np.asarray(empirical.edges)
        reference = np.diff(np.asarray(cdf(edges), dtype=float)) / widths
    return float(np.sum(np.abs(np.asarray(empirical.densities) - reference) * widths))


def ks_two_sample(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> float:
    """Two-sample Kolmogorov-Smirnov statistic (sup distance of empirical CDFs)."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise EmptyInput("both samples must be nonempty")
    return float(scipy.stats.ks_2samp(a, b).statistic)


def ks_one_sample(values: Sequence[float] | np.ndarray,
                  cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Kolmogorov-Smirnov statistic of a sample against an analytic CDF."""
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise EmptyInput("no values to test")
    return float(scipy.stats.kstest(x, cdf).statistic)


# ── Autocorrelation ──────────────────────────────────────────────────────────

@dataclass(frozen=True)
class AutocorrelationEstimate:
    tau: float
    window: int
    zero_variance: bool = False


def autocorrelation_function(series: np.ndarray) -> np.ndarray:
    """Normalised autocorrelation function via FFT."""
    x = np.asarray(series, dtype=float).ravel()
    n = x.size
    x = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    spectrum = np.fft.rfft(x, n=size)
    acov = np.fft.irfft(spectrum * np.conj(spectrum), n=size)[:n]
    if acov[0] <= 0:
        return np.ones(1)
    return acov / acov[0]


def integrated_autocorrelation(series: Sequence[float] | np.ndarray, c: float = 5.0) -> AutocorrelationEstimate:
    """Integrated autocorrelation time with the Madras-Sokal window.

    The window is the smallest W with W >= c * tau(W), where
    tau(W) = 1/2 + sum_{t=1..W} rho(t).
    """
    x = np.asarray(series, dtype=float).ravel()
    if x.size < 100:
        raise SeriesTooShort(f"need at least 100 points, got {x.size}")
    if np.ptp(x) == 0.0:
        return AutocorrelationEstimate(tau=0.5, window=0, zero_variance=True)

    rho = autocorrelation_function(x)
    partial = 0.5 + np.cumsum(rho[1:])
    windows = np.arange(1, rho.size)
    ok = windows >= c * partial
    window = int(windows[np.argmax(ok)]) if ok.any() else int(windows[-1])
    tau = float(partial[window - 1])
    if not ok.any():
        logger.warning("autocorrelation window did not converge; series too short (tau=%.1f)", tau)
    return AutocorrelationEstimate(tau=max(0.5, tau), window=window)


def autocorrelation_time(series: Sequence[float] | np.ndarray) -> float:
    """Integrated autocorrelation time (>= 0.5)."""
    return integrated_autocorrelation(series).tau


def effective_sample_size(series: Sequence[float] | np.ndarray, tau: float | None = None) -> float:
    x = np.asarray(series, dtype=float).ravel()
    if tau is None:
        tau = autocorrelation_time(x)
    return float(x.size / (2.0 * tau))
