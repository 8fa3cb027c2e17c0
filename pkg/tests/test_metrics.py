import math

import numpy as np
import pytest

from gsr import metrics, rng


def test_psnr_identical_is_inf():
    img = np.ones((4, 4))
    assert metrics.psnr(img, img) == np.inf


def test_psnr_constant_offset_matches_closed_form():
    ref = np.zeros((8, 8))
    # independent arithmetic: mse = 100, 10*log10(255^2/100)
    expected = 10.0 * math.log10(255.0**2 / 100.0)
    assert metrics.psnr(ref, ref + 10.0) == pytest.approx(expected, abs=1e-9)
    assert expected == pytest.approx(28.1308, abs=5e-5)


def test_psnr_full_scale_error_is_zero_db():
    ref = np.zeros((4, 4))
    assert metrics.psnr(ref, ref + 255.0) == pytest.approx(0.0, abs=1e-12)


def test_psnr_decreases_with_mse():
    ref = np.zeros((4, 4))
    vals = [metrics.psnr(ref, ref + d) for d in (1.0, 2.0, 5.0, 50.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_psnr_dimension_mismatch():
    with pytest.raises(ValueError):
        metrics.psnr(np.zeros((2, 2)), np.zeros((3, 2)))


def test_isnr_trivial_cases():
    ref = np.zeros((4, 4))
    degraded = ref + 5.0
    assert metrics.isnr(ref, degraded, degraded) == pytest.approx(0.0, abs=1e-12)
    assert metrics.isnr(ref, degraded, ref) == np.inf


def test_isnr_uniform_errors():
    ref = np.zeros((4, 4))
    assert metrics.isnr(ref, ref + 20.0, ref + 10.0) == pytest.approx(10 * math.log10(4), abs=1e-9)


def test_isnr_antisymmetry(rng):
    ref = rng.uniform(0, 255, (6, 6))
    a = ref + rng.normal(size=(6, 6))
    b = ref + rng.normal(size=(6, 6))
    assert metrics.isnr(ref, a, b) + metrics.isnr(ref, b, a) == pytest.approx(0.0, abs=1e-9)


def test_residual_variance_trivial():
    a = np.full((3, 3), 5.0)
    assert metrics.residual_variance(a, a) == 0.0
    assert metrics.residual_variance(a, a - 3.0) == pytest.approx(9.0, abs=1e-12)


def test_residual_variance_matches_bruteforce_sum(rng):
    a = rng.uniform(0, 255, (17, 11))
    b = rng.uniform(0, 255, (17, 11))
    # independent summation oracle
    total = 0.0
    for i in range(17):
        for j in range(11):
            total += (a[i, j] - b[i, j]) ** 2
    expected = total / (17 * 11)
    assert metrics.residual_variance(a, b) == pytest.approx(expected, rel=1e-12)


def test_noise_sigma_zero_is_identity(rng):
    img = rng.uniform(0, 255, (5, 5))
    assert np.array_equal(metrics.add_gaussian_noise(img, 0.0, 42), img)


def test_noise_is_deterministic_given_seed(rng):
    img = rng.uniform(0, 255, (16, 16))
    a = metrics.add_gaussian_noise(img, 5.0, 42)
    b = metrics.add_gaussian_noise(img, 5.0, 42)
    assert np.array_equal(a, b)
    c = metrics.add_gaussian_noise(img, 5.0, 43)
    assert not np.array_equal(a, c)


def test_noise_sample_variance_matches_sigma():
    img = np.zeros((1000, 1000))
    noisy = metrics.add_gaussian_noise(img, 5.0, 7)
    var = np.var(noisy - img)
    assert abs(var - 25.0) / 25.0 < 0.02


def test_noise_rejects_negative_sigma():
    with pytest.raises(ValueError):
        metrics.add_gaussian_noise(np.zeros((2, 2)), -1.0, 0)


def test_stream_uniforms_in_unit_interval():
    u = rng.uniforms(99, 10_000)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.02


def test_stream_words_are_pure_functions_of_seed_and_index():
    assert np.array_equal(rng.words(5, 10, offset=3), rng.words(5, 13)[3:])
    assert np.array_equal(rng.gaussians(5, 10, offset=2), rng.gaussians(5, 12)[2:])
