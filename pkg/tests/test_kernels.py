import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from sketchinv.kernels import (
    GramRows,
    KernelSpec,
    cross_covariance,
    equispaced_grid,
    eval_kernel,
    gram_matrix,
    synthetic_psd,
)
from sketchinv.lowrank import jacobi_eig


def scipy_matern(r, theta1, theta2, nu):
    if r == 0:
        return theta1
    z = math.sqrt(2 * nu) * r / theta2
    return theta1 * z**nu * special.kv(nu, z) / (special.gamma(nu) * 2 ** (nu - 1))


class TestGrid:
    def test_unit_interval_grid(self):
        g = equispaced_grid(100, 0, 1)
        assert g.shape == (100, 1)
        assert g[0, 0] == 0.0 and g[99, 0] == 1.0
        assert np.allclose(np.diff(g[:, 0]), 1 / 99, rtol=0, atol=1e-15)

    def test_endpoints_only(self):
        assert equispaced_grid(2, 0, 1)[:, 0].tolist() == [0.0, 1.0]

    def test_symmetric_grid(self):
        assert equispaced_grid(5, -1, 1)[:, 0].tolist() == [-1.0, -0.5, 0.0, 0.5, 1.0]

    @pytest.mark.parametrize("n,a,b", [(1, 0, 1), (0, 0, 1), (5, 1, 1), (5, 2, 1)])
    def test_invalid(self, n, a, b):
        with pytest.raises(ValueError):
            equispaced_grid(n, a, b)


class TestKernelSpec:
    @pytest.mark.parametrize(
        "kwargs",
        [dict(kind="sqexp", theta1=0), dict(kind="sqexp", theta2=-1), dict(kind="matern", nu=0),
         dict(kind="rbf")],
    )
    def test_invalid_parameters(self, kwargs):
        with pytest.raises(ValueError):
            KernelSpec(**kwargs)

    @pytest.mark.parametrize(
        "spec",
        [KernelSpec.squared_exponential(2.5, 3.0), KernelSpec.matern(1.7, 0.4, 1.3),
         KernelSpec.matern(0.3, 2.0, 0.5)],
    )
    def test_zero_distance_gives_theta1(self, spec):
        assert eval_kernel(spec, [0.3, -1.0], [0.3, -1.0]) == spec.theta1

    def test_sqexp_formula(self):
        spec = KernelSpec.squared_exponential(1.0, 1.0)
        assert eval_kernel(spec, [0.0], [0.0]) == 1.0
        assert eval_kernel(spec, [0.0], [1.0]) == pytest.approx(math.exp(-1), rel=1e-15)

    def test_matern_half_is_exponential(self):
        spec = KernelSpec.matern(1.0, 1.0, 0.5)
        for r in [0.01, 0.3, 1.0, 4.0]:
            assert eval_kernel(spec, [0.0], [r]) == pytest.approx(math.exp(-r), rel=1e-14)

    def test_matern_half_general_bessel_path(self):
        # Nudge nu off the half-integer so the closed form is bypassed.
        near = KernelSpec.matern(1.0, 1.0, 0.5 + 1e-9)
        for r in [0.01, 0.3, 1.0, 4.0]:
            assert eval_kernel(near, [0.0], [r]) == pytest.approx(math.exp(-r), rel=1e-7)

    @pytest.mark.parametrize("nu", [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 0.8, 4.2])
    def test_matern_matches_scipy(self, nu):
        spec = KernelSpec.matern(1.3, 0.7, nu)
        for r in [1e-4, 0.05, 0.5, 1.0, 3.0]:
            assert eval_kernel(spec, [r], [0.0]) == pytest.approx(
                scipy_matern(r, 1.3, 0.7, nu), rel=1e-11
            )

    def test_large_nu_approaches_squared_exponential(self):
        # Matern(theta2=l) -> exp(-r^2 / (2 l^2)) as nu -> infinity.
        m = KernelSpec.matern(1.0, 1.0, 100.0)
        s = KernelSpec.squared_exponential(1.0, 0.5)
        a, b = eval_kernel(m, [0.0], [0.1]), eval_kernel(s, [0.0], [0.1])
        assert abs(a - b) / b < 0.05

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            eval_kernel(KernelSpec(), [0.0, 1.0], [0.0])

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(st.floats(-5, 5), min_size=2, max_size=2),
        st.lists(st.floats(-5, 5), min_size=2, max_size=2),
        st.sampled_from(["sqexp", "matern"]),
    )
    def test_symmetric_in_arguments(self, x, y, kind):
        spec = KernelSpec(kind, 1.2, 0.8, 1.3)
        assert eval_kernel(spec, x, y) == eval_kernel(spec, y, x)


class TestGram:
    def test_coincident_points(self):
        K = gram_matrix(KernelSpec.squared_exponential(2.0, 1.0), [[0.5], [0.5]])
        assert K.tolist() == [[2.0, 2.0], [2.0, 2.0]]

    def test_two_points(self):
        K = gram_matrix(KernelSpec.squared_exponential(1.0, 1.0), [[0.0], [1.0]])
        assert np.allclose(K, [[1, math.exp(-1)], [math.exp(-1), 1]], rtol=1e-15, atol=0)

    @pytest.mark.parametrize("spec", [KernelSpec.squared_exponential(1, 3), KernelSpec.matern(1, 1, 1.0)])
    def test_symmetric_psd_unit_diagonal(self, spec, rng):
        pts = rng.uniform(size=(60, 2))
        K = gram_matrix(spec, pts)
        assert np.array_equal(K, K.T)
        assert np.all(np.diag(K) == spec.theta1)
        d = jacobi_eig(K).eigenvalues
        assert d[-1] >= -1e-10 * d[0]

    def test_matches_pairwise_evaluation(self, rng):
        spec = KernelSpec.matern(1.0, 0.5, 2.0)
        pts = rng.uniform(size=(12, 3))
        K = gram_matrix(spec, pts)
        ref = np.array([[eval_kernel(spec, a, b) for b in pts] for a in pts])
        assert np.allclose(K, ref, rtol=1e-14, atol=0)

    def test_sqexp_decay_on_unit_grid(self):
        K = gram_matrix(KernelSpec.squared_exponential(1, 10), equispaced_grid(100))
        d = jacobi_eig(K).eigenvalues
        assert d[9] / d[0] < 1e-4

    def test_gram_rows_and_cross_covariance(self):
        spec = KernelSpec.squared_exponential(1, 2)
        pts = equispaced_grid(50)
        K = gram_matrix(spec, pts)
        rows = GramRows(spec, pts)
        assert rows.shape == (50, 50)
        assert np.allclose(rows.rows(10, 20), K[10:20], rtol=1e-15, atol=0)
        assert np.allclose(cross_covariance(spec, pts[:7], pts), K[:7], rtol=1e-15, atol=0)


class TestSyntheticPSD:
    def test_flat_spectrum_is_identity(self):
        K, d = synthetic_psd(4, 1.0, 0.0, seed=3)
        assert np.all(d == 1.0)
        assert np.allclose(K, np.eye(4), atol=1e-14)

    def test_planted_spectrum_recovered(self):
        K, d = synthetic_psd(100, 1.0, 0.01, seed=7)
        assert np.allclose(d, np.exp(-0.01 * np.arange(1, 101)))
        got = jacobi_eig(K).eigenvalues
        assert np.max(np.abs(got - d) / d) < 1e-8

    def test_planted_spectrum_recovered_fast_decay(self):
        K, d = synthetic_psd(256, 1.0, 0.05, seed=1)
        got = np.linalg.eigvalsh(K)[::-1]
        assert np.max(np.abs(got - d) / d) < 1e-8

    def test_deterministic(self):
        a, _ = synthetic_psd(30, 1.0, 0.1, seed=11)
        b, _ = synthetic_psd(30, 1.0, 0.1, seed=11)
        c, _ = synthetic_psd(30, 1.0, 0.1, seed=12)
        assert a.tobytes() == b.tobytes()
        assert not np.array_equal(a, c)
        assert np.array_equal(a, a.T)

    def test_invalid(self):
        with pytest.raises(ValueError):
            synthetic_psd(1, 1.0, 0.1, seed=0)
