"""Quality metrics and synthetic noise for 8-bit-range grayscale images."""

import numpy as np

from . import rng

PEAK = 255.0  # fixed 8-bit peak regardless of actual dynamic range


def _check_same_shape(*imgs):
    shapes = {np.asarray(i).shape for i in imgs}
    if len(shapes) != 1:
        raise ValueError(f"image dimension mismatch: {sorted(shapes)}")


def add_gaussian_noise(img, sigma, seed):
    """img + i.i.d. N(0, sigma^2), drawn from the documented stream in
    :mod:`gsr.rng`. No clamping; values may leave [0, 255]."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    img = np.asarray(img, dtype=np.float64)
    if sigma == 0:
        return img.copy()
    noise = rng.gaussians(seed, img.size).reshape(img.shape)
    return img + sigma * noise


def psnr(ref, test):
    """Peak signal-to-noise ratio in dB against a 255 peak; +inf when the
    images are identical."""
    _check_same_shape(ref, test)
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    mse = np.mean((ref - test) ** 2)
    if mse == 0:
        return np.inf
    return 10.0 * np.log10(PEAK * PEAK / mse)


def isnr(ref, degraded, restored):
    """Improvement in SNR: 10 log10(||degraded-ref||^2 / ||restored-ref||^2)."""
    _check_same_shape(ref, degraded, restored)
    ref = np.asarray(ref, dtype=np.float64)
    e_deg = np.sum((np.asarray(degraded, dtype=np.float64) - ref) ** 2)
    e_res = np.sum((np.asarray(restored, dtype=np.float64) - ref) ** 2)
    if e_res == 0:
        return np.inf
    return 10.0 * np.log10(e_deg / e_res)


def residual_variance(a, b):
    """Mean squared difference (1/N) * sum((a - b)^2)."""
    _check_same_shape(a, b)
    d = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    return float(np.mean(d * d))
