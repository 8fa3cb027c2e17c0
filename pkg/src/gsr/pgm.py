"""Binary PGM (P5) and raw float ("GSRF") image file I/O.

Images are 2-D float64 arrays in a nominal [0, 255] range. Quantization to
8 bits happens only on PGM save; the GSRF format keeps full precision.

GSRF layout: magic b"GSRF", uint32 LE height, uint32 LE width, then
height*width float64 LE values in row-major order.
"""

import struct

import numpy as np


class FormatError(ValueError):
    """Malformed or unsupported image file."""


def _read_token(f):
    """Next whitespace-delimited header token, skipping '#' comments."""
    tok = b""
    while True:
        ch = f.read(1)
        if ch == b"":
            raise FormatError("truncated PGM header")
        if ch == b"#":
            while ch not in (b"\n", b""):
                ch = f.read(1)
            continue
        if ch.isspace():
            if tok:
                return tok
            continue
        tok += ch


def load_pgm(path):
    """Read an 8-bit binary PGM (P5, maxval 255) as a float64 array."""
    with open(path, "rb") as f:
        magic = f.read(2)
        if magic != b"P5":
            raise FormatError(f"unsupported PNM variant {magic!r}; only binary P5 is accepted")
        width = int(_read_token(f))
        height = int(_read_token(f))
        maxval = int(_read_token(f))
        if maxval != 255:
            raise FormatError(f"unsupported maxval {maxval}; only 8-bit (255) is accepted")
        if height < 1 or width < 1:
            raise FormatError("non-positive PGM dimensions")
        payload = f.read(height * width)
        if len(payload) != height * width:
            raise FormatError("truncated PGM payload")
    data = np.frombuffer(payload, dtype=np.uint8).astype(np.float64)
    return data.reshape(height, width)


def quantize(img):
    """Round half away from zero and clamp to [0, 255] as uint8."""
    img = np.asarray(img, dtype=np.float64)
    rounded = np.sign(img) * np.floor(np.abs(img) + 0.5)
    return np.clip(rounded, 0.0, 255.0).astype(np.uint8)


def save_pgm(img, path):
    """Write a float image as binary PGM; round-trips exactly for integer
    images already inside [0, 255]."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("expected a 2-D image")
    h, w = img.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(quantize(img).tobytes())


def load_gsrf(path):
    """Read a GSRF raw float dump."""
    with open(path, "rb") as f:
        header = f.read(12)
        if len(header) != 12 or header[:4] != b"GSRF":
            raise FormatError("not a GSRF file")
        h, w = struct.unpack("<II", header[4:12])
        payload = f.read(h * w * 8)
        if len(payload) != h * w * 8:
            raise FormatError("truncated GSRF payload")
    return np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(h, w)


def save_gsrf(img, path):
    """Write a float image as a GSRF raw float dump (no quantization)."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("expected a 2-D image")
    h, w = img.shape
    with open(path, "wb") as f:
        f.write(b"GSRF" + struct.pack("<II", h, w))
        f.write(img.astype("<f8").tobytes())
