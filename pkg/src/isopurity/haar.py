"""Haar-random bipartite pure states, their Schmidt spectra and purity batches."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.linalg

from .core import purity, simplex_tolerance, validate_simplex
from .errors import EigensolverFailure
from .models import BipartitionDims, KStat, PurityRecord, SampleSummary, SchmidtSpectrum
from .stats import k_statistics
from .utils import split_count, substream, worker_count

logger = logging.getLogger("isopurity")

STATE_NORM_TOL = 1e-12


@dataclass(frozen=True)
class StateMatrix:
    """Coefficient matrix X (n x m) of a pure state in a product basis."""
    dims: BipartitionDims
    entries: np.ndarray

    def __post_init__(self):
        if self.entries.shape != (self.dims.n, self.dims.m):
            raise ValueError(f"entries must be {self.dims.n}x{self.dims.m}, got {self.entries.shape}")
        norm = float(np.sum(np.abs(self.entries) ** 2))
        if abs(norm - 1.0) > STATE_NORM_TOL:
            raise ValueError(f"state has squared norm {norm!r}, not 1")


@dataclass
class HaarBatch:
    """Result of a purity batch, in chain-index order."""
    dims: BipartitionDims
    records: list[PurityRecord]
    summary: SampleSummary
    spectra: np.ndarray | None = None  # (count, n) raw Schmidt coefficients

    @property
    def purities(self) -> np.ndarray:
        return np.fromiter((r.purity for r in self.records), dtype=float, count=len(self.records))


def sample_state(dims: BipartitionDims, rng: np.random.Generator) -> StateMatrix:
    """Draw a Haar-random pure state.

    iid standard complex Gaussian entries normalised once globally have the
    unitarily invariant distribution; no Haar unitary is built.
    """
    shape = (dims.n, dims.m)
    x = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    x /= np.linalg.norm(x)
    return StateMatrix(dims=dims, entries=x)


def reduced_spectrum(state: StateMatrix) -> SchmidtSpectrum:
    """Spectrum of rho_A = Tr_B |psi><psi|, i.e. of the n x n Gram matrix X X^dagger."""
    x = state.entries
    gram = x @ x.conj().T
    try:
        eigenvalues = scipy.linalg.eigh(gram, eigvals_only=True)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise EigensolverFailure(f"eigensolver did not converge: {e}") from e
    n = state.dims.n
    total = float(eigenvalues.sum())
    if not np.isfinite(total) or total <= 0:
        raise EigensolverFailure(f"Gram matrix trace is {total!r}")
    return validate_simplex(eigenvalues / total, tol=simplex_tolerance(n))


def exact_mean_purity(dims: BipartitionDims) -> Fraction:
    """Finite-size Haar average <pi> = (n + m) / (n m + 1)."""
    return Fraction(dims.n + dims.m, dims.n * dims.m + 1)


def _draw_stream(dims: BipartitionDims, count: int, seed: int, index: int, keep_spectra: bool):
    rng = substream(seed, index)
    records: list[PurityRecord] = []
    spectra = np.empty((count, dims.n)) if keep_spectra else None
    for k in range(count):
        spectrum = reduced_spectrum(sample_state(dims, rng))
        records.append(purity(spectrum))
        if spectra is not None:
            spectra[k] = spectrum.values
    return records, spectra


def purity_batch(
    dims: BipartitionDims,
    count: int,
    seed: int,
    chains: int = 1,
    max_order: int = 4,
    keep_spectra: bool = False,
    workers: int | None = None,
) -> HaarBatch:
    """Draw ``count`` independent purity records over ``chains`` seeded sub-streams.

    The output is a pure function of (dims, count, seed, chains); the worker
    count only changes wall time.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    chains = max(1, min(chains, count))
    shares = split_count(count, chains)
    n_workers = min(worker_count(workers), chains)
    logger.debug("Haar batch n=%d m=%d count=%d chains=%d workers=%d",
                 dims.n, dims.m, count, chains, n_workers)

    jobs = [(dims, share, seed, k, keep_spectra) for k, share in enumerate(shares)]
    if n_workers == 1:
        parts = [_draw_stream(*job) for job in jobs]
    else:
        # LAPACK releases the GIL, so threads overlap the eigensolves.
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            parts = list(pool.map(lambda job: _draw_stream(*job), jobs))

    records = [r for part, _ in parts for r in part]
    spectra = np.concatenate([s for _, s in parts]) if keep_spectra else None

    values = np.fromiter((r.purity for r in records), dtype=float, count=len(records))
    order = min(max_order, len(values) - 1)
    if order >= 1:
        summary = k_statistics(values, max_order=order)
    else:
        mean = float(values[0])
        summary = SampleSummary(count=1, mean=mean, k_stats={1: KStat(estimate=mean)})
    return HaarBatch(dims=dims, records=records, summary=summary, spectra=spectra)
