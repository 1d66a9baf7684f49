"""Elementary purity operations on Schmidt spectra."""

import logging
from collections.abc import Sequence

import numpy as np

from .errors import InvalidDims, NegativeEigenvalue, SpectrumInvalid, SumOutOfTolerance
from .models import BipartitionDims, PurityRecord, SchmidtSpectrum

logger = logging.getLogger("isopurity")

PURITY_SLACK = 1e-12


def simplex_tolerance(n: int) -> float:
    """Sum tolerance for an n-dimensional spectrum; eigensolver round-off grows with n."""
    return 1e-12 * n


def make_dims(n: int, m: int) -> BipartitionDims:
    """Build dimensions, raising InvalidDims instead of a validation error."""
    if n < 1 or m < n:
        raise InvalidDims(f"need 1 <= n <= m, got n={n}, m={m}")
    return BipartitionDims(n=n, m=m)


def validate_simplex(values: Sequence[float] | np.ndarray, tol: float) -> SchmidtSpectrum:
    """Check that ``values`` lie on the unit simplex and return them as a sorted spectrum.

    Negatives no smaller than ``-tol`` are clamped to zero and the vector is
    renormalised, since Hermitian eigensolvers routinely return -1e-16.
    """
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise SpectrumInvalid("empty spectrum")
    if not np.all(np.isfinite(arr)):
        raise SpectrumInvalid("spectrum contains non-finite values")

    lowest = float(arr.min())
    if lowest < -tol:
        raise NegativeEigenvalue(f"eigenvalue {lowest!r} below -{tol:g}")
    total = float(arr.sum())
    if abs(total - 1.0) > tol:
        raise SumOutOfTolerance(f"eigenvalues sum to {total!r}, outside 1 ± {tol:g}")

    if lowest < 0.0:
        arr = np.clip(arr, 0.0, None)
    arr = np.sort(arr)[::-1] / arr.sum()
    # Renormalisation can push a lone entry past 1 by an ulp.
    arr = np.minimum(arr, 1.0)
    return SchmidtSpectrum(values=tuple(float(x) for x in arr))


def purity(spectrum: SchmidtSpectrum) -> PurityRecord:
    """Tr rho_A^2 = sum of squared Schmidt coefficients."""
    values = spectrum.as_array()
    n = values.size
    if np.any(values < 0) or abs(values.sum() - 1.0) > simplex_tolerance(n):
        raise SpectrumInvalid("spectrum is not on the unit simplex")

    p = float(np.dot(values, values))
    lower = 1.0 / n
    if p < lower - PURITY_SLACK or p > 1.0 + PURITY_SLACK:
        raise SpectrumInvalid(f"purity {p!r} outside [1/{n}, 1]")
    if p < lower or p > 1.0:
        clamped = min(max(p, lower), 1.0)
        logger.warning("purity %r clamped to %r (n=%d)", p, clamped, n)
        p = clamped
    return PurityRecord(purity=p, n=n)
