"""Degradation operators (pixel mask, circular blur, block random
projections), their adjoints, and the quadratic data-term solves used by the
outer iteration.

Blur uses periodic boundary conditions so the normal equations diagonalize
in the frequency domain and the data-term solve is exact.
"""

import struct
from dataclasses import dataclass

import numpy as np

from . import pgm, rng


# ---------------------------------------------------------------------------
# mask


class MaskOperator:
    """Diagonal 0/1 operator: keeps observed pixels, kills the rest."""

    def __init__(self, keep):
        keep = np.asarray(keep, dtype=bool)
        if keep.ndim != 2:
            raise ValueError("mask must be 2-D")
        if not keep.any():
            raise ValueError("mask keeps no pixels")
        self.keep = keep

    def apply(self, img):
        self._check(img)
        return np.where(self.keep, np.asarray(img, dtype=np.float64), 0.0)

    def adjoint(self, y):
        return self.apply(y)  # diagonal, self-adjoint

    def _check(self, img):
        if np.shape(img) != self.keep.shape:
            raise ValueError("image/mask dimension mismatch")


def make_random_mask(fraction, seed, shape):
    """Bernoulli(fraction) keep mask drawn from the documented stream."""
    if not 0 < fraction <= 1:
        raise ValueError("fraction must be in (0, 1]")
    h, w = shape
    u = rng.uniforms(seed, h * w).reshape(shape)
    return MaskOperator(u < fraction)


def make_stencil_mask(stencil):
    """Keep where the stencil image is >= 128."""
    return MaskOperator(np.asarray(stencil, dtype=np.float64) >= 128.0)


def save_mask(op, path):
    pgm.save_pgm(np.where(op.keep, 255.0, 0.0), path)


def load_mask(path):
    return make_stencil_mask(pgm.load_pgm(path))


def solve_u_mask(op, y, z, mu):
    """Exact minimizer of 0.5||Hu - y||^2 + (mu/2)||u - z||^2 per pixel."""
    if mu <= 0:
        raise ValueError("mu must be > 0")
    keep = op.keep.astype(np.float64)
    return (keep * np.asarray(y, dtype=np.float64) + mu * z) / (keep + mu)


# ---------------------------------------------------------------------------
# blur


class BlurOperator:
    """Circular 2-D convolution with a normalized odd-sided kernel."""

    def __init__(self, kernel):
        kernel = np.asarray(kernel, dtype=np.float64)
        if kernel.ndim != 2 or kernel.shape[0] % 2 == 0 or kernel.shape[1] % 2 == 0:
            raise ValueError("kernel sides must be odd")
        if abs(kernel.sum() - 1.0) > 1e-12:
            raise ValueError("kernel must sum to 1")
        self.kernel = kernel
        self._freq_cache = {}

    def frequency_response(self, shape):
        if shape not in self._freq_cache:
            h, w = shape
            kh, kw = self.kernel.shape
            if kh > h or kw > w:
                raise ValueError("kernel larger than image")
            padded = np.zeros(shape)
            padded[:kh, :kw] = self.kernel
            padded = np.roll(padded, (-(kh // 2), -(kw // 2)), axis=(0, 1))
            self._freq_cache[shape] = np.fft.fft2(padded)
        return self._freq_cache[shape]

    def apply(self, img):
        img = np.asarray(img, dtype=np.float64)
        f = self.frequency_response(img.shape)
        return np.real(np.fft.ifft2(np.fft.fft2(img) * f))

    def adjoint(self, y):
        y = np.asarray(y, dtype=np.float64)
        f = self.frequency_response(y.shape)
        return np.real(np.fft.ifft2(np.fft.fft2(y) * np.conj(f)))


def make_kernel(kind, side=None, std=None, radius=7):
    """Blur kernels sampled on the integer grid centered at 0 and normalized
    to sum 1.

    kind: 'uniform' (side), 'gaussian' (side, std),
    'cauchy' (1/(1+z1^2+z2^2) on [-radius, radius]^2), or
    'binomial' (outer([1,4,6,4,1])/256).
    """
    if kind == "uniform":
        k = np.ones((side, side))
    elif kind == "gaussian":
        z = np.arange(side) - side // 2
        z1, z2 = np.meshgrid(z, z, indexing="ij")
        k = np.exp(-(z1**2 + z2**2) / (2.0 * std**2))
    elif kind == "cauchy":
        z = np.arange(-radius, radius + 1)
        z1, z2 = np.meshgrid(z, z, indexing="ij")
        k = 1.0 / (1.0 + z1**2 + z2**2)
    elif kind == "binomial":
        row = np.array([1.0, 4.0, 6.0, 4.0, 1.0])
        k = np.outer(row, row)
    else:
        raise ValueError(f"unknown kernel kind {kind!r}")
    return BlurOperator(k / k.sum())


def parse_kernel_spec(spec):
    """CLI kernel spec: 'uniform9', 'gaussian:25:1.6', 'cauchy[:R]',
    'binomial'."""
    if spec.startswith("uniform"):
        return make_kernel("uniform", side=int(spec[len("uniform") :]))
    if spec.startswith("gaussian:"):
        _, side, std = spec.split(":")
        return make_kernel("gaussian", side=int(side), std=float(std))
    if spec == "cauchy":
        return make_kernel("cauchy")
    if spec.startswith("cauchy:"):
        return make_kernel("cauchy", radius=int(spec.split(":")[1]))
    if spec == "binomial":
        return make_kernel("binomial")
    raise ValueError(f"unknown kernel spec {spec!r}")


def save_kernel(op, path):
    k = op.kernel
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{k.shape[0]} {k.shape[1]}\n")
        for row in k:
            f.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def load_kernel(path):
    with open(path, encoding="utf-8") as f:
        tokens = f.read().split()
    rows, cols = int(tokens[0]), int(tokens[1])
    vals = np.array([float(t) for t in tokens[2:]])
    if vals.size != rows * cols:
        raise ValueError("kernel file size mismatch")
    return BlurOperator(vals.reshape(rows, cols))


def solve_u_blur(op, y, z, mu):
    """Frequency-domain solve of (H^T H + mu I) u = H^T y + mu z."""
    if mu <= 0:
        raise ValueError("mu must be > 0")
    y = np.asarray(y, dtype=np.float64)
    f = op.frequency_response(y.shape)
    num = np.conj(f) * np.fft.fft2(y) + mu * np.fft.fft2(np.asarray(z, dtype=np.float64))
    return np.real(np.fft.ifft2(num / (np.abs(f) ** 2 + mu)))


# ---------------------------------------------------------------------------
# block compressive sensing


@dataclass(frozen=True)
class Measurements:
    """Per-block measurement vectors in raster block order: (blocks, M)."""

    data: np.ndarray
    block_side: int
    blocks_y: int
    blocks_x: int
    seed: int

    @property
    def m(self):
        return self.data.shape[1]

    @property
    def image_shape(self):
        return (self.blocks_y * self.block_side, self.blocks_x * self.block_side)


def _to_blocks(img, bs):
    h, w = img.shape
    return img.reshape(h // bs, bs, w // bs, bs).swapaxes(1, 2).reshape(-1, bs * bs)


def _from_blocks(blocks, shape, bs):
    h, w = shape
    return blocks.reshape(h // bs, w // bs, bs, bs).swapaxes(1, 2).reshape(h, w)


def _orthonormalize_rows(a):
    """Modified Gram-Schmidt in row order."""
    q = a.copy()
    for i in range(len(q)):
        if i:
            q[i] -= q[:i].T @ (q[:i] @ q[i])
        nrm = np.linalg.norm(q[i])
        if nrm == 0:
            raise ValueError("degenerate measurement matrix row")
        q[i] /= nrm
    return q


class BlockCSOperator:
    """One shared orthonormal-row Gaussian projection applied per block."""

    def __init__(self, phi, block_side, seed):
        self.phi = np.asarray(phi, dtype=np.float64)
        self.block_side = block_side
        self.seed = seed

    @property
    def m(self):
        return self.phi.shape[0]

    def _block_grid(self, shape):
        h, w = shape
        bs = self.block_side
        if h % bs or w % bs:
            raise ValueError(
                f"image dimensions {h}x{w} not divisible by block side {bs}; "
                "pad explicitly before measuring"
            )
        return h // bs, w // bs

    def apply(self, img):
        img = np.asarray(img, dtype=np.float64)
        by, bx = self._block_grid(img.shape)
        data = _to_blocks(img, self.block_side) @ self.phi.T
        return Measurements(data, self.block_side, by, bx, self.seed)

    def adjoint(self, meas):
        if meas.data.shape[1] != self.m or meas.block_side != self.block_side:
            raise ValueError("measurement/operator shape mismatch")
        blocks = meas.data @ self.phi
        return _from_blocks(blocks, meas.image_shape, self.block_side)


def make_block_cs(ratio, seed, shape, block_side=32):
    """Shared per-block measurement matrix: M = round(ratio * block_side^2)
    i.i.d. standard-normal rows from the documented stream, orthonormalized
    by Gram-Schmidt in row order."""
    if not 0 < ratio <= 1:
        raise ValueError("ratio must be in (0, 1]")
    n = block_side * block_side
    m = int(round(ratio * n))
    if m < 1:
        raise ValueError("ratio too small: no measurements")
    phi = rng.gaussians(seed, m * n).reshape(m, n)
    op = BlockCSOperator(_orthonormalize_rows(phi), block_side, seed)
    op._block_grid(shape)  # validate divisibility up front
    return op


def operator_from_measurements(meas):
    """Rebuild the measurement operator recorded in a GSRM file."""
    n = meas.block_side * meas.block_side
    phi = rng.gaussians(meas.seed, meas.m * n).reshape(meas.m, n)
    return BlockCSOperator(_orthonormalize_rows(phi), meas.block_side, meas.seed)


def solve_u_cs(op, meas, z, mu, u0, inner_iters=1):
    """Gradient descent with exact line search on the quadratic data term.

    Each step moves along d = H^T(Hu - y) + mu (u - z) with the step length
    that exactly minimizes the quadratic, so the objective never increases.
    """
    if mu <= 0:
        raise ValueError("mu must be > 0")
    if inner_iters < 1:
        raise ValueError("inner_iters must be >= 1")
    u = np.asarray(u0, dtype=np.float64).copy()
    hty = op.adjoint(meas)
    for _ in range(inner_iters):
        d = op.adjoint(op.apply(u)) - hty + mu * (u - z)
        dd = np.sum(d * d)
        if dd == 0:
            break
        hd = op.apply(d).data
        u -= (dd / (np.sum(hd * hd) + mu * dd)) * d
    return u


# ---------------------------------------------------------------------------
# GSRM measurement file

_GSRM_MAGIC = b"GSRM"


def save_measurements(meas, path):
    with open(path, "wb") as f:
        f.write(_GSRM_MAGIC)
        f.write(struct.pack("<IIII", meas.block_side, meas.m, meas.blocks_y, meas.blocks_x))
        f.write(struct.pack("<Q", int(meas.seed) % (1 << 64)))
        f.write(meas.data.astype("<f8").tobytes())


def load_measurements(path):
    with open(path, "rb") as f:
        if f.read(4) != _GSRM_MAGIC:
            raise pgm.FormatError("not a GSRM file")
        block_side, m, by, bx = struct.unpack("<IIII", f.read(16))
        (seed,) = struct.unpack("<Q", f.read(8))
        count = by * bx * m
        payload = f.read(count * 8)
        if len(payload) != count * 8:
            raise pgm.FormatError("truncated GSRM payload")
    data = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(by * bx, m)
    return Measurements(data, block_side, by, bx, seed)
