"""Binary image file formats used by the artifact.

  - PPM (P6, maxval 255): LDR color images. Values are stored as given,
    i.e. callers hand in gamma-encoded [0,1] data and get the same back.
  - PGM (P5, maxval 255): observation masks, 255 = observed.
  - PFM ('PF', scale -1.0, little-endian): HDR ground-truth radiance maps.
    Scanlines follow the PFM convention of bottom row first.
"""

from __future__ import annotations

import numpy as np

GAMMA = 2.2


def encode_gamma(linear):
    """Linear [0,1] radiance to gamma-2.2 LDR values."""
    return np.clip(linear, 0.0, 1.0) ** (1.0 / GAMMA)


def decode_gamma(encoded):
    """Gamma-2.2 LDR values back to linear radiance."""
    return np.clip(encoded, 0.0, 1.0) ** GAMMA


def _read_pnm_header(f, magic: bytes):
    if f.read(2) != magic:
        raise ValueError(f"not a {magic.decode()} file")
    fields = []
    while len(fields) < 3:
        line = f.readline()
        if not line:
            raise ValueError("truncated PNM header")
        line = line.split(b"#", 1)[0]
        fields.extend(int(tok) for tok in line.split())
    width, height, maxval = fields[:3]
    if maxval != 255:
        raise ValueError(f"only maxval 255 supported, got {maxval}")
    return width, height


def write_ppm(path, image) -> None:
    """Write an (H, W, 3) float image in [0,1] as binary PPM."""
    img = np.asarray(image, dtype=float)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError("PPM image must be (H, W, 3)")
    data = np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (img.shape[1], img.shape[0]))
        f.write(data.tobytes())


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as f:
        width, height = _read_pnm_header(f, b"P6")
        raw = f.read(width * height * 3)
    if len(raw) != width * height * 3:
        raise ValueError("truncated PPM payload")
    data = np.frombuffer(raw, dtype=np.uint8).reshape(height, width, 3)
    return data.astype(np.float64) / 255.0


def write_pgm(path, mask) -> None:
    """Write a boolean (H, W) mask as binary PGM, 255 = True."""
    m = np.asarray(mask)
    if m.ndim != 2:
        raise ValueError("PGM mask must be (H, W)")
    data = np.where(m.astype(bool), 255, 0).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (m.shape[1], m.shape[0]))
        f.write(data.tobytes())


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as f:
        width, height = _read_pnm_header(f, b"P5")
        raw = f.read(width * height)
    if len(raw) != width * height:
        raise ValueError("truncated PGM payload")
    return np.frombuffer(raw, dtype=np.uint8).reshape(height, width) >= 128


def write_pfm(path, image) -> None:
    """Write an (H, W, 3) float HDR image as little-endian color PFM."""
    img = np.asarray(image, dtype=np.float32)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError("PFM image must be (H, W, 3)")
    with open(path, "wb") as f:
        f.write(b"PF\n%d %d\n-1.0\n" % (img.shape[1], img.shape[0]))
        f.write(np.ascontiguousarray(img[::-1]).tobytes())


def read_pfm(path) -> np.ndarray:
    with open(path, "rb") as f:
        magic = f.readline().strip()
        if magic != b"PF":
            raise ValueError("only color PFM ('PF') is supported")
        dims = f.readline().split()
        width, height = int(dims[0]), int(dims[1])
        scale = float(f.readline().strip())
        count = width * height * 3
        data = np.frombuffer(f.read(count * 4), dtype="<f4" if scale < 0 else ">f4")
    if data.size != count:
        raise ValueError("truncated PFM payload")
    img = data.reshape(height, width, 3)[::-1]
    return np.ascontiguousarray(img, dtype=np.float32)
