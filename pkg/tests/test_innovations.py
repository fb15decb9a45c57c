import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stationary_kernel.innovations import (
    CustomDensity,
    Exponential,
    Exponential3,
    Gaussian,
    TabulatedDensity,
    Uniform,
    UnsamplableInnovation,
    absolute_moment,
    convolve_scaled,
    eval_density,
    eval_exponential3,
    validate_density,
)


def hypoexponential3_pdf(rho, x):
    """Independent oracle: hypoexponential pdf with rates 1/rho^2, 1/rho, 1."""
    lam = np.array([rho**-2, rho**-1, 1.0])
    out = np.zeros_like(np.asarray(x, dtype=float))
    for i in range(3):
        others = np.delete(lam, i)
        coeff = np.prod(others / (others - lam[i]))
        out = out + lam[i] * coeff * np.exp(-lam[i] * np.maximum(x, 0.0))
    return np.where(np.asarray(x) >= 0, out, 0.0)


class TestEvalDensity:
    def test_gaussian_at_zero(self):
        assert eval_density(Gaussian(1.0), 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-12)

    def test_uniform_outside_support(self):
        assert eval_density(Uniform(0, 1), 2.0) == 0.0

    def test_exponential_negative(self):
        assert eval_density(Exponential(1.0), -1e-9) == 0.0
        assert eval_density(Exponential(1.0), -5.0) == 0.0

    def test_nonnegative_everywhere(self):
        ys = np.linspace(-20, 20, 2001)
        for d in (Gaussian(0.7), Exponential(2.0), Uniform(-1, 3), Exponential3(0.6)):
            assert np.all(d.pdf(ys) >= 0)

    def test_validation_routine(self):
        for d in (Gaussian(1.0), Exponential(0.5), Uniform(0, 1), Exponential3(0.9)):
            assert validate_density(d) == pytest.approx(1.0, abs=1e-6)
        broken = CustomDensity(fn=lambda y: 0.5 * np.ones_like(y), support=(0.0, 1.0))
        with pytest.raises(ValueError):
            validate_density(broken)


class TestExponential3:
    def test_at_zero_and_negative(self):
        assert eval_exponential3(0.5, 0.0) == 0.0
        assert eval_exponential3(0.5, -1.0) == 0.0

    def test_closed_form_value(self):
        assert eval_exponential3(0.5, 1.0) == pytest.approx(0.464092, abs=1e-6)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            eval_exponential3(1.0, 1.0)
        with pytest.raises(ValueError):
            eval_exponential3(0.0, 1.0)

    def test_right_continuity_at_zero(self):
        assert abs(eval_exponential3(0.5, 1e-8)) <= 1e-6

    @pytest.mark.parametrize("rho", [0.3, 0.5, 0.7, 0.9])
    def test_matches_hypoexponential_oracle(self, rho):
        xs = np.linspace(0, 20, 500)
        np.testing.assert_allclose(
            eval_exponential3(rho, xs), hypoexponential3_pdf(rho, xs), atol=1e-12
        )

    def test_tail_truncation_mass(self):
        d = Exponential3(0.5)
        lo, hi = d.truncated_support(1e-8)
        assert lo == 0.0
        mass, _ = __import__("scipy.integrate", fromlist=["quad"]).quad(
            lambda t: eval_exponential3(0.5, t), 0, hi, limit=200
        )
        assert 1 - mass == pytest.approx(1e-8, rel=0.1)


class TestTabulatedDensity:
    def test_renormalizes_and_records(self):
        xs = np.linspace(0, 1, 101)
        t = TabulatedDensity(xs, 2.0 * np.ones_like(xs))
        assert t.meta["renormalized_by"] == pytest.approx(2.0)
        assert np.trapezoid(t.vals, t.xs) == pytest.approx(1.0, abs=1e-12)

    def test_zero_outside_grid(self):
        t = TabulatedDensity([0.0, 1.0], [1.0, 1.0])
        assert t.pdf(-0.1) == 0.0
        assert t.pdf(1.1) == 0.0

    def test_rejects_bad_grids(self):
        with pytest.raises(ValueError):
            TabulatedDensity([0.0, 0.0, 1.0], [1, 1, 1])
        with pytest.raises(ValueError):
            TabulatedDensity([0.0, 1.0], [-1.0, 1.0])
        with pytest.raises(ValueError):
            TabulatedDensity([0.0, 1.0], [0.0, 0.0])

    def test_not_samplable(self):
        t = TabulatedDensity([0.0, 1.0], [1.0, 1.0])
        with pytest.raises(UnsamplableInnovation):
            t.sample(np.random.default_rng(0), 10)

    def test_csv_serialization(self, tmp_path):
        xs = np.linspace(0, 1, 5)
        t = TabulatedDensity(xs, np.ones_like(xs))
        path = tmp_path / "tab.csv"
        t.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "x,value"
        assert len(lines) == 6
        # >= 12 significant digits survive a round-trip
        x0, v0 = lines[1].split(",")
        assert float(v0) == pytest.approx(t.vals[0], rel=1e-12)


class TestConvolveScaled:
    def test_gaussian_closed_form(self):
        rho = 0.5
        tab = convolve_scaled(Gaussian(1.0), [rho**2, rho, 1.0], 1e-3, (-8.0, 8.0))
        var = 1.0 + rho**2 + rho**4
        exact = np.exp(-tab.xs**2 / (2 * var)) / math.sqrt(2 * math.pi * var)
        assert np.max(np.abs(tab.vals - exact)) <= 1e-5
        assert tab.pdf(0.0) == pytest.approx(1 / math.sqrt(2 * math.pi * 1.3125), abs=1e-5)

    def test_exponential_matches_closed_form(self):
        tab = convolve_scaled(Exponential(1.0), [0.25, 0.5, 1.0], 1e-3, (0.0, 35.0))
        xs = np.linspace(0, 11, 1101)
        assert np.max(np.abs(tab.pdf(xs) - eval_exponential3(0.5, xs))) <= 1e-4

    def test_uniform_single_scale_identity(self):
        tab = convolve_scaled(Uniform(0, 1), [1.0], 1e-3, (0.0, 1.0))
        xs = np.linspace(0.01, 0.99, 99)
        np.testing.assert_allclose(tab.pdf(xs), 1.0, atol=1e-9)

    def test_mass_invariant(self):
        for base, scales, sup in [
            (Uniform(0, 1), [0.49, 0.7, 1.0], (0.0, 2.2)),
            (Gaussian(1.0), [1.0, -0.5], (-9.0, 9.0)),
        ]:
            tab = convolve_scaled(base, scales, 1e-3, sup)
            assert abs(np.trapezoid(tab.vals, tab.xs) - 1.0) <= 1e-4

    def test_support_too_small(self):
        with pytest.raises(ValueError, match="support too small"):
            convolve_scaled(Gaussian(1.0), [1.0, 1.0], 1e-3, (-1.0, 1.0))

    def test_preconditions(self):
        with pytest.raises(ValueError):
            convolve_scaled(Gaussian(1.0), [], 1e-3, (-5, 5))
        with pytest.raises(ValueError):
            convolve_scaled(Gaussian(1.0), [1.0, 0.0], 1e-3, (-5, 5))
        with pytest.raises(ValueError):
            convolve_scaled(Gaussian(1.0), [1.0], 0.5, (-5, 5))


class TestSampling:
    def test_exponential_inverse_cdf_deterministic(self):
        a = Exponential(2.0).sample(np.random.default_rng(7), 5)
        b = Exponential(2.0).sample(np.random.default_rng(7), 5)
        np.testing.assert_array_equal(a, b)
        assert np.all(a >= 0)

    def test_exponential3_mean(self):
        d = Exponential3(0.5)
        draws = d.sample(np.random.default_rng(1), 200_000)
        assert draws.mean() == pytest.approx(0.25 + 0.5 + 1.0, abs=0.01)


@given(
    lo=st.floats(-5, 5),
    width=st.floats(0.1, 10),
    y=st.floats(-20, 20),
)
def test_uniform_pdf_values(lo, width, y):
    d = Uniform(lo, lo + width)
    v = float(d.pdf(y))
    if lo <= y <= lo + width:
        assert v == pytest.approx(1.0 / width, rel=1e-12)
    else:
        assert v == 0.0


def test_absolute_moment_gaussian():
    assert absolute_moment(Gaussian(1.0), 2.0) == pytest.approx(1.0, abs=1e-8)
