"""Metropolis sampler for the eigenvalue (Coulomb-gas) measure on the unit simplex.

Target density of the Schmidt coefficients at inverse temperature beta and
imbalance mu:

    prod_{i<j} (l_i - l_j)^2  prod_k l_k^(mu n)  exp(-beta n^3 sum_k l_k^2)

restricted to sum_k l_k = 1. Moves transfer mass between two coordinates,
which keeps the sum fixed and makes the log-weight change O(n).
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DomainError, InvalidDims
from .haar import reduced_spectrum, sample_state
from .models import BipartitionDims, ChainDiagnostics, InitMode, PhaseParams, PurityRecord, RecordMode
from .stats import (  # noqa: F401 (autocorrelation_time is re-exported)
    autocorrelation_time,
    effective_sample_size,
    integrated_autocorrelation,
    k_statistics,
)
from .theory import BETA_MINUS, support_params
from .utils import substream, worker_count

logger = logging.getLogger("isopurity")

TARGET_ACCEPTANCE = 0.35
STEP_UP = 1.05
STEP_DOWN = 0.95
INITIAL_STEP = 0.5
RESYNC_INTERVAL = 1000  # sweeps between renormalisation and cache checks
CACHE_TOL = 1e-9
EVAPORATION_FACTOR = 2.0
METASTABLE_WARNING = "metastable branch; evaporation monitored"


def _log_vandermonde(lam: np.ndarray) -> float:
    """2 sum_{i<j} ln|l_i - l_j|, or -inf if two coordinates coincide."""
    i, j = np.triu_indices(lam.size, k=1)
    gaps = np.abs(lam[i] - lam[j])
    if np.any(gaps == 0.0):
        return -math.inf
    return 2.0 * float(np.sum(np.log(gaps)))


def log_weight(lambdas, beta: float, mu: Fraction | int, n: int) -> float:
    """Unnormalised log-density of a point on the simplex."""
    lam = np.asarray(lambdas, dtype=float)
    if np.any(lam <= 0):
        raise DomainError("log-weight needs strictly positive coordinates")
    logvdm = _log_vandermonde(lam)
    if logvdm == -math.inf:
        return -math.inf
    return logvdm + float(mu) * n * float(np.sum(np.log(lam))) - beta * n**3 * float(np.dot(lam, lam))


@dataclass
class CoulombChainState:
    lambdas: np.ndarray
    beta: float
    mu: Fraction
    n: int
    rng: np.random.Generator
    step: float = INITIAL_STEP
    cached_logvdm: float = 0.0
    cached_sumsq: float = 0.0
    cached_sumlog: float = 0.0
    accepted: int = 0
    proposed: int = 0
    sweep_index: int = 0
    adapting: bool = True
    max_renorm_correction: float = 0.0
    max_cache_drift: float = 0.0

    def refresh_caches(self) -> None:
        lam = self.lambdas
        self.cached_logvdm = _log_vandermonde(lam)
        self.cached_sumsq = float(np.dot(lam, lam))
        self.cached_sumlog = float(np.sum(np.log(lam)))

    @property
    def cached_log_weight(self) -> float:
        return (self.cached_logvdm + float(self.mu) * self.n * self.cached_sumlog
                - self.beta * self.n**3 * self.cached_sumsq)

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else 0.0


@dataclass
class ChainOutput:
    n: int
    sweeps: np.ndarray  # sweep index of each record
    purity: np.ndarray | None
    spectra: np.ndarray | None  # (records, n) raw coordinates, sorted descending
    diagnostics: ChainDiagnostics
    _series: np.ndarray = field(default=None, repr=False)

    @property
    def records(self) -> list[PurityRecord]:
        values = self.purity if self.purity is not None else self._series
        return [PurityRecord(purity=float(p), n=self.n) for p in values]

    @property
    def rescaled_spectra(self) -> np.ndarray | None:
        return None if self.spectra is None else self.n * self.spectra


def init_chain(
    n: int,
    beta: float,
    mu: Fraction | int = 0,
    seed: int = 0,
    init_mode: InitMode | str = InitMode.UNIFORM_JITTER,
    stream: int = 0,
    warn: bool = True,
) -> CoulombChainState:
    """Initial chain state; deterministic in (n, beta, mu, seed, init_mode, stream)."""
    if n < 2:
        raise InvalidDims(f"the sampler needs n >= 2, got {n}")
    mu = Fraction(mu)
    if mu < 0:
        raise InvalidDims(f"mu must be >= 0, got {mu}")
    init_mode = InitMode(init_mode)
    if warn and beta < 0:
        if beta < BETA_MINUS:
            logger.warning("beta=%r is below beta_minus=-2/27: no analytic saddle point", beta)
        logger.warning(METASTABLE_WARNING)

    rng = substream(seed, stream)
    if init_mode == InitMode.UNIFORM_JITTER:
        eps = rng.uniform(-0.01, 0.01, size=n)
        lam = (1.0 + eps) / np.sum(1.0 + eps)
    else:
        dims = BipartitionDims.from_imbalance(n, mu)
        lam = reduced_spectrum(sample_state(dims, rng)).as_array()
        if np.any(lam <= 0):
            raise DomainError("Haar draw produced a zero Schmidt coefficient; use another seed")

    state = CoulombChainState(lambdas=np.array(lam, dtype=float), beta=float(beta), mu=mu, n=n, rng=rng)
    state.refresh_caches()
    return state


def proposal_delta(state: CoulombChainState, i: int, j: int, delta: float) -> float:
    """Change in log-weight for l_i += delta, l_j -= delta, in O(n).

    Returns -inf for moves that leave the open simplex or make two
    coordinates coincide.
    """
    lam = state.lambdas
    li, lj = lam[i], lam[j]
    ni, nj = li + delta, lj - delta
    if ni <= 0.0 or nj <= 0.0:
        return -math.inf
    rest = np.delete(lam, (i, j))
    with np.errstate(divide="ignore"):
        ratio = ((ni - rest) * (nj - rest)) / ((li - rest) * (lj - rest))
        d_vdm = 2.0 * (float(np.sum(np.log(np.abs(ratio)))) + math.log(abs(ni - nj)) - math.log(abs(li - lj))
                       if ni != nj else -math.inf)
    if d_vdm == -math.inf:
        return -math.inf
    d_sumsq = 2.0 * delta * (li - lj + delta)
    d_logw = d_vdm - state.beta * state.n**3 * d_sumsq
    if state.mu:
        d_logw += float(state.mu) * state.n * (math.log(ni / li) + math.log(nj / lj))
    return d_logw


def _resync(state: CoulombChainState) -> None:
    """Renormalise the simplex sum and compare caches with fresh values."""
    total = float(state.lambdas.sum())
    correction = abs(total - 1.0)
    state.lambdas /= total
    state.max_renorm_correction = max(state.max_renorm_correction, correction)

    cached = (state.cached_logvdm, state.cached_sumsq, state.cached_sumlog)
    state.refresh_caches()
    fresh = (state.cached_logvdm, state.cached_sumsq, state.cached_sumlog)
    drift = max(abs(c - f) / max(1.0, abs(f)) for c, f in zip(cached, fresh))
    state.max_cache_drift = max(state.max_cache_drift, drift)
    if drift > CACHE_TOL:
        logger.warning("sweep %d: cached log-weight drifted by %.2e; resynchronised", state.sweep_index, drift)


def sweep_once(state: CoulombChainState) -> CoulombChainState:
    """n pair-transfer Metropolis proposals; the step adapts only while ``state.adapting``."""
    n = state.n
    rng = state.rng
    first = rng.integers(n, size=n)
    second = rng.integers(n - 1, size=n)
    second += second >= first
    deltas = (2.0 * rng.random(n) - 1.0) * state.step / n
    log_u = np.log(rng.random(n))

    lam = state.lambdas
    mu_n = float(state.mu) * n
    accepted = 0
    for k in range(n):
        i, j, delta = int(first[k]), int(second[k]), float(deltas[k])
        d_logw = proposal_delta(state, i, j, delta)
        if not log_u[k] < d_logw:
            continue
        li, lj = lam[i], lam[j]
        ni, nj = li + delta, lj - delta
        state.cached_sumsq += 2.0 * delta * (li - lj + delta)
        d_sumlog = math.log(ni / li) + math.log(nj / lj)
        state.cached_sumlog += d_sumlog
        state.cached_logvdm += d_logw - mu_n * d_sumlog + state.beta * n**3 * 2.0 * delta * (li - lj + delta)
        lam[i], lam[j] = ni, nj
        accepted += 1

    state.accepted += accepted
    state.proposed += n
    if state.adapting:
        state.step *= STEP_UP if accepted / n > TARGET_ACCEPTANCE else STEP_DOWN
    state.sweep_index += 1
    if state.sweep_index % RESYNC_INTERVAL == 0:
        _resync(state)
    return state


def evaporation_monitor(state: CoulombChainState, params: PhaseParams) -> bool:
    """True when the largest coordinate has left the analytic support by a factor 2."""
    if params.beta >= 0:
        return False
    return state.n * float(np.max(state.lambdas)) > EVAPORATION_FACTOR * params.a


def run(
    state: CoulombChainState,
    sweeps: int,
    burn_in: int = 0,
    thin: int = 1,
    record: RecordMode | str = RecordMode.PURITY,
    chain: int = 0,
) -> ChainOutput:
    """Run ``sweeps`` sweeps (burn-in included) and record every ``thin``-th production sweep."""
    if sweeps <= burn_in:
        raise ValueError(f"sweeps ({sweeps}) must exceed burn_in ({burn_in})")
    if thin < 1:
        raise ValueError("thin must be >= 1")
    record = RecordMode(record)
    keep_spectra = record in (RecordMode.SPECTRUM, RecordMode.BOTH)

    params = support_params(max(state.beta, BETA_MINUS)) if state.beta < 0 else None
    first_escape: int | None = None

    n_records = len(range(burn_in, sweeps, thin))
    indices = np.empty(n_records, dtype=np.int64)
    series = np.empty(n_records)
    spectra = np.empty((n_records, state.n)) if keep_spectra else None

    state.adapting = burn_in > 0
    k = 0
    for s in range(sweeps):
        if s == burn_in:
            state.adapting = False
            state.accepted = state.proposed = 0
        sweep_once(state)
        if params is not None and first_escape is None and evaporation_monitor(state, params):
            first_escape = state.sweep_index
            logger.warning("chain %d: largest eigenvalue escaped the support at sweep %d", chain, first_escape)
        if s >= burn_in and (s - burn_in) % thin == 0:
            lam = state.lambdas
            indices[k] = state.sweep_index
            series[k] = float(np.dot(lam, lam))
            if spectra is not None:
                spectra[k] = np.sort(lam)[::-1]
            k += 1

    diagnostics = _diagnose(state, series, sweeps, burn_in, thin, chain, first_escape)
    return ChainOutput(
        n=state.n,
        sweeps=indices,
        purity=None if record == RecordMode.SPECTRUM else series,
        spectra=spectra,
        diagnostics=diagnostics,
        _series=series,
    )


def _diagnose(state: CoulombChainState, series: np.ndarray, sweeps: int, burn_in: int, thin: int,
              chain: int, first_escape: int | None) -> ChainDiagnostics:
    tau = ess = stderr = None
    zero_variance = few_blocks = False
    block_length = 1
    if series.size >= 100:
        estimate = integrated_autocorrelation(series)
        tau, zero_variance = estimate.tau, estimate.zero_variance
        ess = effective_sample_size(series, tau)
        block_length = max(1, math.ceil(10 * tau))
    if series.size >= 2:
        summary = k_statistics(series, max_order=1, block_length=block_length)
        err = summary.k_stats[1].stderr
        few_blocks = summary.k_stats[1].few_blocks
        stderr = state.n * err if err is not None else None

    mean = float(np.mean(series))
    return ChainDiagnostics(
        chain=chain,
        n=state.n,
        beta=state.beta,
        mu=str(state.mu),
        sweeps=sweeps,
        burn_in=burn_in,
        thin=thin,
        recorded=int(series.size),
        acceptance_rate=state.acceptance_rate,
        final_step=state.step,
        mean_purity=mean,
        mean_scaled_purity=state.n * mean,
        stderr_scaled_purity=stderr,
        few_jackknife_blocks=few_blocks,
        tau=tau,
        ess=ess,
        zero_variance=zero_variance,
        evaporation_flag=first_escape is not None,
        first_escape_sweep=first_escape,
        max_renorm_correction=state.max_renorm_correction,
        max_cache_drift=state.max_cache_drift,
    )


def _run_chain(job: tuple) -> ChainOutput:
    n, beta, mu, seed, init_mode, sweeps, burn_in, thin, record, index = job
    state = init_chain(n, beta, mu, seed, init_mode, stream=index, warn=False)
    return run(state, sweeps, burn_in, thin, record, chain=index)


def run_chains(
    n: int,
    beta: float,
    mu: Fraction | int = 0,
    sweeps: int = 10_000,
    burn_in: int = 1_000,
    thin: int = 1,
    seed: int = 0,
    chains: int = 1,
    init_mode: InitMode | str = InitMode.UNIFORM_JITTER,
    record: RecordMode | str = RecordMode.PURITY,
    workers: int | None = None,
) -> list[ChainOutput]:
    """Independent chains on seeded sub-streams, returned in chain-index order."""
    if beta < 0:
        if beta < BETA_MINUS:
            logger.warning("beta=%r is below beta_minus=-2/27: no analytic saddle point", beta)
        logger.warning(METASTABLE_WARNING)
    jobs = [(n, beta, Fraction(mu), seed, InitMode(init_mode), sweeps, burn_in, thin, RecordMode(record), k)
            for k in range(chains)]
    n_workers = min(worker_count(workers), chains)
    if n_workers == 1:
        return [_run_chain(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(_run_chain, jobs))
