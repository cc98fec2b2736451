import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import central_diff, max_rel_err
from meib.entropy import (
    KernelConfig,
    NormalizedGram,
    entropy_gradient_wrt_gram,
    estimate_sigma,
    gaussian_kernel,
    joint_entropy,
    mi_gradient_wrt_batch,
    mutual_information,
    normalized_gram,
    renyi_entropy,
)
from meib.errors import DimensionError, InsufficientSamplesError, NumericError, ParameterError


def oracle_entropy(a, alpha):
    w = np.linalg.eigvalsh(a)
    return math.log2(np.sum(np.maximum(w, 0.0) ** alpha)) / (1 - alpha)


def oracle_joint(ax, az, alpha):
    p = np.empty_like(ax)
    for i in range(ax.shape[0]):
        for j in range(ax.shape[1]):
            p[i, j] = ax[i, j] * az[i, j]
    return oracle_entropy(p / np.trace(p), alpha)


def random_gram(rng, n, d):
    x = rng.normal(size=(n, d))
    return normalized_gram(x, estimate_sigma(x))


# --- sigma heuristic ---------------------------------------------------------

def test_sigma_two_points():
    assert estimate_sigma(np.array([[0.0], [2.0]]), k_nn=1) == 2.0


def test_sigma_three_points_on_a_line():
    assert estimate_sigma(np.array([[0.0], [1.0], [3.0]]), k_nn=1) == pytest.approx(4 / 3, abs=1e-15)


def test_sigma_uses_all_neighbours_when_k_exceeds_n():
    x = np.array([[0.0], [1.0], [3.0]])
    # per-sample means over both neighbours: (2, 1.5, 2.5)
    assert estimate_sigma(x, k_nn=10) == pytest.approx(2.0, abs=1e-15)


def test_sigma_matches_brute_force(rng):
    x = rng.normal(size=(50, 8))
    per_sample = []
    for i in range(50):
        dists = sorted(math.dist(x[i], x[j]) for j in range(50) if j != i)
        per_sample.append(sum(dists[:10]) / 10)
    assert estimate_sigma(x, k_nn=10) == pytest.approx(sum(per_sample) / 50, rel=1e-13)


def test_sigma_floor_and_errors():
    assert estimate_sigma(np.zeros((5, 3)), sigma_floor=1e-6) == 1e-6
    with pytest.raises(InsufficientSamplesError):
        estimate_sigma(np.zeros((1, 3)))


# --- Gram construction --------------------------------------------------------

def test_gram_examples():
    np.testing.assert_array_equal(normalized_gram(np.array([[3.0, 1.0]]), 1.0).a, [[1.0]])
    g = normalized_gram(np.array([[1.0, 2.0], [1.0, 2.0]]), 0.7)
    np.testing.assert_allclose(g.a, np.full((2, 2), 0.5), atol=1e-16)
    sigma = 0.8
    g = normalized_gram(np.array([[0.0, 0.0], [2 * sigma, 0.0]]), sigma)
    assert g.a[0, 1] == pytest.approx(math.exp(-2) / 2, rel=1e-14)


def test_gram_invariants(rng):
    g = random_gram(rng, 30, 4)
    NormalizedGram.from_matrix(g.a)
    assert np.linalg.eigvalsh(g.a).min() > -1e-10


def test_gram_rejects_bad_sigma():
    with pytest.raises(ParameterError):
        normalized_gram(np.zeros((2, 2)), 0.0)


def test_from_matrix_rejects_non_normalized():
    with pytest.raises(NumericError):
        NormalizedGram.from_matrix(np.eye(3))


# --- entropies ----------------------------------------------------------------

@pytest.mark.parametrize("n", [2, 5, 16])
@pytest.mark.parametrize("alpha", [0.5, 1.01, 2.0, 3.0])
def test_uniform_and_rank_one_spectra(n, alpha):
    assert renyi_entropy(NormalizedGram.from_matrix(np.eye(n) / n), alpha) == pytest.approx(math.log2(n), abs=1e-9)
    assert abs(renyi_entropy(NormalizedGram.from_matrix(np.full((n, n), 1 / n)), alpha)) < 1e-6


def test_two_by_two_order_two():
    a = NormalizedGram.from_matrix([[0.5, 0.25], [0.25, 0.5]])
    assert renyi_entropy(a, 2.0) == pytest.approx(-math.log2(0.625), abs=1e-12)
    assert renyi_entropy(a, 2.0) == pytest.approx(0.678072, abs=1e-6)


def test_alpha_one_rejected():
    with pytest.raises(ParameterError):
        renyi_entropy(np.eye(2) / 2, 1.0)
    with pytest.raises(ParameterError):
        KernelConfig(alpha=1.0)


def test_joint_entropy_examples(rng):
    n = 6
    uniform = np.eye(n) / n
    assert joint_entropy(uniform, uniform) == pytest.approx(math.log2(n), abs=1e-9)
    gx = random_gram(rng, n, 3)
    assert joint_entropy(gx, np.full((n, n), 1 / n)) == pytest.approx(renyi_entropy(gx), abs=1e-10)
    gz = random_gram(rng, n, 2)
    for alpha in (1.01, 2.0):
        assert joint_entropy(gx, gz, alpha) == pytest.approx(oracle_joint(gx.a, gz.a, alpha), abs=1e-10)
    with pytest.raises(DimensionError):
        joint_entropy(np.eye(2) / 2, np.eye(3) / 3)


def test_joint_dominates_marginals(rng):
    for _ in range(50):
        n, d = rng.integers(4, 30), rng.integers(1, 8)
        gx, gz = random_gram(rng, n, d), random_gram(rng, n, d)
        hj = joint_entropy(gx, gz)
        assert hj >= max(renyi_entropy(gx), renyi_entropy(gz)) - 1e-6


def test_mutual_information_examples(rng):
    n = 8
    gx = random_gram(rng, n, 3)
    assert abs(mutual_information(gx, np.full((n, n), 1 / n))) < 1e-8
    uniform = np.eye(n) / n
    assert mutual_information(uniform, uniform) == pytest.approx(3.0, abs=1e-9)
    gz = random_gram(rng, n, 2)
    expected = oracle_entropy(gx.a, 1.01) + oracle_entropy(gz.a, 1.01) - oracle_joint(gx.a, gz.a, 1.01)
    assert mutual_information(gx, gz) == pytest.approx(expected, abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.integers(4, 40), st.integers(1, 10), st.integers(1, 10), st.integers(0, 2**31))
def test_mi_symmetric_and_nonnegative(n, dx, dz, seed):
    rng = np.random.default_rng(seed)
    gx, gz = random_gram(rng, n, dx), random_gram(rng, n, dz)
    i_xz = mutual_information(gx, gz)
    assert abs(i_xz - mutual_information(gz, gx)) < 1e-10
    assert i_xz >= -1e-8
    assert -1e-8 <= renyi_entropy(gx) <= math.log2(n) + 1e-8


def shannon_bits(w):
    w = w[w > 0]
    return float(-(w * np.log2(w)).sum())


def test_alpha_near_one_approximates_shannon(rng):
    # Oracle sweep over Dirichlet spectra; worst observed ratio was ~0.0033.
    worst = 0.0
    for _ in range(500):
        n = int(rng.integers(2, 65))
        w = rng.dirichlet(np.full(n, rng.uniform(0.05, 5.0)))
        h = renyi_entropy(np.diag(w), 1.01)
        worst = max(worst, abs(h - shannon_bits(w)) / math.log2(n))
    assert worst <= 0.02


# --- gradients -----------------------------------------------------------------

def test_entropy_gradient_uniform_spectrum_matches_fd():
    n = 4
    a = np.eye(n) / n
    g = entropy_gradient_wrt_gram(a, 1.01)
    fd = central_diff(lambda m: renyi_entropy(m, 1.01), a)
    assert max_rel_err(g, fd) < 1e-5
    assert np.abs(g - g.T).max() == 0.0


@pytest.mark.parametrize("alpha", [0.5, 1.01, 2.0])
def test_entropy_gradient_random_gram_matches_fd(rng, alpha):
    a = random_gram(rng, 4, 3).a
    g = entropy_gradient_wrt_gram(a, alpha)
    fd = central_diff(lambda m: renyi_entropy(m, alpha), a)
    assert max_rel_err(g, fd) < 1e-5
    np.testing.assert_allclose(g, g.T, atol=1e-14)


def fd_mi_grad(x, z, sx, sz, alpha=1.01):
    gx = normalized_gram(x, sx)
    return central_diff(lambda zz: mutual_information(gx, normalized_gram(zz, sz), alpha), z)


@pytest.mark.parametrize("seed", range(6))
def test_mi_gradient_matches_fd(seed):
    rng = np.random.default_rng(seed)
    n, d = rng.integers(8, 17), rng.integers(2, 7)
    x, z = rng.normal(size=(n, 5)), rng.normal(size=(n, d))
    sx, sz = estimate_sigma(x), estimate_sigma(z)
    res = mi_gradient_wrt_batch(x, z, KernelConfig(), sx, sz)
    assert res.d_input.shape == z.shape
    assert res.value == pytest.approx(mutual_information(normalized_gram(x, sx), normalized_gram(z, sz)), abs=1e-12)
    assert max_rel_err(res.d_input, fd_mi_grad(x, z, sx, sz)) < 1e-4


def test_mi_gradient_near_constant_latent(rng):
    x = rng.normal(size=(8, 3))
    z = np.ones((8, 2)) + 1e-3 * rng.normal(size=(8, 2))
    sx, sz = estimate_sigma(x), estimate_sigma(z)
    res = mi_gradient_wrt_batch(x, z, KernelConfig(), sx, sz)
    assert np.all(np.isfinite(res.d_input))
    assert max_rel_err(res.d_input, fd_mi_grad(x, z, sx, sz)) < 1e-4


def test_constant_latent_has_zero_information(rng):
    x = rng.normal(size=(8, 3))
    res = mi_gradient_wrt_batch(x, np.ones((8, 2)))
    assert abs(res.value) < 1e-8
    assert np.all(np.isfinite(res.d_input))


def test_mi_invariant_to_latent_scale(rng):
    x, z = rng.normal(size=(12, 4)), rng.normal(size=(12, 3))
    i1 = mi_gradient_wrt_batch(x, z).value
    i2 = mi_gradient_wrt_batch(x, 7.5 * z).value
    assert abs(i1 - i2) < 1e-8


def test_mi_gradient_errors(rng):
    with pytest.raises(InsufficientSamplesError):
        mi_gradient_wrt_batch(np.zeros((1, 2)), np.zeros((1, 2)))
    with pytest.raises(DimensionError):
        mi_gradient_wrt_batch(np.zeros((3, 2)), np.zeros((4, 2)))


def test_kernel_is_exactly_symmetric(rng):
    k = gaussian_kernel(rng.normal(size=(20, 3)), 1.3)
    assert np.array_equal(k, k.T)
    assert np.all(np.diag(k) == 1.0)
