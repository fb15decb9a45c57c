import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from stationary_kernel.discretize import (
    DefectNegativeWarning,
    GaussLegendre,
    Midpoint,
    assemble_matrix,
    cell_row_integrals,
    dump_matrix_csv,
    quad_nodes_weights,
)
from stationary_kernel.grid import build_partition
from stationary_kernel.innovations import Gaussian, Uniform
from stationary_kernel.kernels import Ar1Kernel, ConstantKernel, EndpointMin


def test_quadrature_weights_sum_to_cell_width():
    p = build_partition(-1, 1, 0.25)
    for quad in (GaussLegendre(5), GaussLegendre(3), Midpoint()):
        Y, w = quad_nodes_weights(quad, p)
        assert w.sum() == pytest.approx(p.delta, abs=1e-15)
        assert np.all(Y[:, 0] >= p.points[:-1]) and np.all(Y[:, -1] <= p.points[1:])


def test_gauss_legendre_validation():
    with pytest.raises(ValueError):
        GaussLegendre(1)


class TestCellRowIntegrals:
    def test_constant_uniform_rows(self):
        model = ConstantKernel(innov=Uniform(0, 1))
        p = build_partition(0, 1, 0.25)
        for i in range(p.q_max):
            m, total = cell_row_integrals(model, p, i)
            np.testing.assert_allclose(m, 0.25, atol=1e-15)
            assert total == pytest.approx(1.0, abs=1e-14)

    def test_rho_zero_rows_identical(self):
        p = build_partition(-2, 2, 0.5)
        ar = Ar1Kernel(rho=0.0, innov=Gaussian(1.0))
        const = ConstantKernel(innov=Gaussian(1.0))
        m_ar, t_ar = cell_row_integrals(ar, p, 3)
        m_c, t_c = cell_row_integrals(const, p, 5)
        np.testing.assert_allclose(m_ar, m_c, atol=1e-15)
        assert t_ar == pytest.approx(t_c, abs=1e-15)

    def test_constant_total_matches_adaptive_quadrature(self):
        # no infimum loss for x-independent kernels, so the row total is the
        # plain integral of the innovation over the window
        model = ConstantKernel(innov=Gaussian(1.0))
        p = build_partition(-3, 3, 0.05)
        _, total = cell_row_integrals(model, p, 0)
        oracle, _ = integrate.quad(lambda y: model.innov.pdf(y), -3, 3)
        assert total == pytest.approx(oracle, abs=1e-8)

    def test_ar1_totals_bounded_by_pointwise_mass(self):
        model = Ar1Kernel(rho=0.5, innov=Gaussian(1.0))
        p = build_partition(-8, 8, 0.05)
        for i in (0, 80, 160, 319):
            _, total = cell_row_integrals(model, p, i)
            oracle, _ = integrate.quad(
                lambda y: model.innov.pdf(y - 0.5 * p.points[i]), -8, 8
            )
            assert total <= oracle + 1e-12
            assert total <= 1.0 + 1e-9

    def test_index_validation(self):
        model = ConstantKernel(innov=Uniform(0, 1))
        p = build_partition(0, 1, 0.25)
        with pytest.raises(ValueError):
            cell_row_integrals(model, p, 4)


class TestAssembleMatrix:
    def test_constant_uniform_exact_rows(self):
        model = ConstantKernel(innov=Uniform(0, 1))
        p = build_partition(0, 1, 0.25)
        chain = assemble_matrix(model, p, j0=0)
        B = chain.toarray()
        expected_row = np.array([0.25, 0.25, 0.25, 0.25, 0.0])
        for i in range(4):
            np.testing.assert_allclose(B[i], expected_row, atol=1e-14)
        np.testing.assert_allclose(B[4], [1, 0, 0, 0, 0], atol=0)

    def test_truncated_gaussian_defect(self):
        model = ConstantKernel(innov=Gaussian(1.0))
        p = build_partition(-1, 1, 0.5)
        chain = assemble_matrix(model, p, j0=2)
        inside = stats.norm.cdf(1) - stats.norm.cdf(-1)
        defect = 1 - inside
        assert defect == pytest.approx(0.3173105, abs=1e-7)
        B = chain.toarray()
        base = np.array(
            [
                integrate.quad(model.innov.pdf, a, b)[0]
                for a, b in zip(p.points[:-1], p.points[1:])
            ]
        )
        for i in range(4):
            np.testing.assert_allclose(B[i, :4], base + defect * (np.arange(4) == 2), atol=1e-10)

    def test_row_sums_zero_column_unit_row(self):
        model = Ar1Kernel(rho=0.5, innov=Gaussian(1.0))
        p = build_partition(-8, 8, 0.1)
        chain = assemble_matrix(model, p)
        B = chain.toarray()
        np.testing.assert_allclose(B.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(B[:, -1] == 0.0)
        assert B[-1, chain.j0] == 1.0
        assert np.all(B >= 0)
        assert chain.j0 == 160 and chain.x0 == 0.0

    def test_default_j0_one_sided(self):
        model = Ar1Kernel(rho=0.125, innov=Gaussian(1.0))
        p = build_partition(0, 4, 0.5)
        chain = assemble_matrix(model, p)
        assert chain.j0 == 0 and chain.x0 == 0.0

    def test_default_j0_support_without_origin(self):
        model = ConstantKernel(innov=Gaussian(1.0))
        p = build_partition(2, 4, 0.5)
        chain = assemble_matrix(model, p)
        assert chain.j0 == 0

    def test_sparse_dense_agree(self):
        model = Ar1Kernel(rho=0.7, innov=Gaussian(1.0))
        p = build_partition(-4, 4, 0.1)
        dense = assemble_matrix(model, p, storage="dense")
        sparse = assemble_matrix(model, p, storage="sparse")
        assert sparse.is_sparse and not dense.is_sparse
        diff = np.abs(sparse.toarray() - dense.toarray()).max()
        assert diff <= dense.drop_tol * p.q_max
        np.testing.assert_allclose(sparse.row_sums(), 1.0, atol=1e-12)

    def test_threads_deterministic(self):
        model = Ar1Kernel(rho=0.5, innov=Gaussian(1.0))
        p = build_partition(-4, 4, 0.05)
        one = assemble_matrix(model, p, threads=1)
        two = assemble_matrix(model, p, threads=2)
        np.testing.assert_array_equal(one.toarray(), two.toarray())

    def test_defect_negative_warning(self):
        # midpoint quadrature grossly overestimates the mass of a spike
        model = ConstantKernel(innov=Gaussian(0.01))
        p = build_partition(-1, 1, 0.5)
        with pytest.warns(DefectNegativeWarning):
            assemble_matrix(model, p, quad=Midpoint())

    def test_widening_support_shrinks_defect(self):
        model = Ar1Kernel(rho=0.5, innov=Gaussian(1.0))
        defects = []
        for k in (2, 4, 6):
            p = build_partition(-k, k, 0.05)
            chain = assemble_matrix(model, p)
            defects.append(float(np.max(1.0 - chain.row_totals[:-1])))
        assert defects[0] > defects[1] > defects[2]

    def test_j0_validation(self):
        model = ConstantKernel(innov=Uniform(0, 1))
        p = build_partition(0, 1, 0.25)
        with pytest.raises(ValueError):
            assemble_matrix(model, p, j0=4)

    def test_matrix_dump(self, tmp_path):
        model = ConstantKernel(innov=Uniform(0, 1))
        p = build_partition(0, 1, 0.25)
        chain = assemble_matrix(model, p, j0=1)
        path = tmp_path / "matrix.csv"
        dump_matrix_csv(chain, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "i,j,value"
        assert len(lines) == 1 + 4 * 4 + 1


@given(
    rho=st.floats(-0.9, 0.9),
    sigma=st.floats(0.5, 2.0),
    q=st.integers(4, 50),
    k=st.integers(2, 10),
)
def test_stochasticity_randomized(rho, sigma, q, k):
    model = Ar1Kernel(rho=rho, innov=Gaussian(sigma))
    p = build_partition(-k, k, 2 * k / q)
    chain = assemble_matrix(model, p)
    B = chain.toarray()
    np.testing.assert_allclose(B.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(B[:, -1] == 0.0)
    row_last = np.zeros(q + 1)
    row_last[chain.j0] = 1.0
    np.testing.assert_array_equal(B[-1], row_last)
    assert np.all(B >= 0)
    assert np.all(chain.row_totals <= 1 + 1e-9) and np.all(chain.row_totals >= 0)
