from fractions import Fraction

import numpy as np
import pytest
from pydantic import ValidationError

from isopurity.core import make_dims, purity, validate_simplex
from isopurity.errors import InvalidDims, NegativeEigenvalue, SpectrumInvalid, SumOutOfTolerance
from isopurity.models import BipartitionDims, PurityRecord, SchmidtSpectrum, parse_mu


class TestPurity:
    def test_maximally_mixed(self):
        record = purity(SchmidtSpectrum(values=(0.25, 0.25, 0.25, 0.25)))
        assert record.purity == 0.25
        assert record.n == 4

    def test_separable(self):
        assert purity(SchmidtSpectrum(values=(1.0, 0.0, 0.0, 0.0))).purity == 1.0

    def test_two_level(self):
        assert purity(SchmidtSpectrum(values=(0.75, 0.25))).purity == 0.625

    def test_rescaled_is_n_cubed_times_purity(self):
        record = purity(SchmidtSpectrum(values=(0.75, 0.25)))
        assert record.rescaled == 8 * 0.625

    def test_permutation_invariant(self, rng):
        values = rng.dirichlet(np.ones(6))
        a = purity(validate_simplex(values, tol=1e-12))
        b = purity(validate_simplex(values[::-1], tol=1e-12))
        assert a.purity == b.purity

    def test_bounds_on_random_spectra(self, rng):
        for _ in range(200):
            n = int(rng.integers(1, 12))
            record = purity(validate_simplex(rng.dirichlet(np.full(n, 0.3)), tol=1e-12))
            assert 1.0 / n <= record.purity <= 1.0

    def test_rejects_off_simplex_spectrum(self):
        bad = SchmidtSpectrum.model_construct(values=(0.9, 0.3))
        with pytest.raises(SpectrumInvalid):
            purity(bad)


class TestValidateSimplex:
    def test_accepts_balanced(self):
        assert validate_simplex([0.5, 0.5], tol=1e-9).values == (0.5, 0.5)

    def test_sum_out_of_tolerance(self):
        with pytest.raises(SumOutOfTolerance):
            validate_simplex([0.7, 0.2], tol=1e-9)

    def test_clamps_tiny_negative(self):
        spectrum = validate_simplex([1.0 + 1e-15, -1e-15], tol=1e-12)
        assert spectrum.values == (1.0, 0.0)

    def test_negative_beyond_tolerance(self):
        with pytest.raises(NegativeEigenvalue):
            validate_simplex([1.1, -0.1], tol=1e-9)

    def test_sorts_descending(self):
        assert validate_simplex([0.2, 0.8], tol=1e-12).values == (0.8, 0.2)

    @pytest.mark.parametrize("values", [[], [float("nan"), 1.0]])
    def test_rejects_empty_and_nan(self, values):
        with pytest.raises(SpectrumInvalid):
            validate_simplex(values, tol=1e-12)


class TestDims:
    def test_mu(self):
        assert BipartitionDims(n=16, m=32).mu == Fraction(1)
        assert BipartitionDims(n=4, m=4).mu == 0

    def test_from_imbalance(self):
        assert BipartitionDims.from_imbalance(16, Fraction(1)).m == 32
        with pytest.raises(InvalidDims):
            BipartitionDims.from_imbalance(3, Fraction(1, 2))

    def test_make_dims_rejects_m_below_n(self):
        with pytest.raises(InvalidDims):
            make_dims(3, 2)

    def test_model_rejects_m_below_n(self):
        with pytest.raises(ValidationError):
            BipartitionDims(n=3, m=2)

    def test_parse_mu(self):
        assert parse_mu("1/2") == Fraction(1, 2)
        assert parse_mu(0.25) == Fraction(1, 4)
        with pytest.raises(InvalidDims):
            parse_mu(-1)
        with pytest.raises(InvalidDims):
            parse_mu("half")


def test_purity_record_bounds():
    with pytest.raises(ValidationError):
        PurityRecord(purity=0.2, n=4)
