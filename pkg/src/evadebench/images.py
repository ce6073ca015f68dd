"""8-bit images, normalized pixel space, and lossless PNG round-trips.

Conventions used throughout the package:

* an *image* is a ``uint8`` numpy array of shape ``(height, width, channels)``
  with ``channels`` 1 (grayscale) or 3 (RGB), row-major and
  channel-interleaved;
* a *normalized image* is a ``float64`` array of the same shape with values
  in ``[0, 1]``, obtained by dividing intensities by 255.

Attacks search in normalized space; anything delivered to a detector is an
8-bit image, so quantization (``from_norm``) uses a fixed round-half-up rule
to keep outputs bit-identical across platforms.
"""

from __future__ import annotations

import base64
import io

import numpy as np
from PIL import Image as PILImage

#: Default L-inf perturbation budget in normalized units (10 intensity steps).
DEFAULT_EPSILON = 10.0 / 255.0


def ensure_image(arr) -> np.ndarray:
    """Validate and canonicalize an 8-bit image to shape (H, W, C) uint8.

    Accepts 2-D grayscale input and adds the trailing channel axis. Integer
    inputs outside [0, 255] or non-integer dtypes are rejected.
    """
    a = np.asarray(arr)
    if a.ndim == 2:
        a = a[:, :, np.newaxis]
    if a.ndim != 3 or a.shape[2] not in (1, 3):
        raise ValueError(f"expected (H, W) or (H, W, 1|3) image, got shape {a.shape}")
    if a.size == 0:
        raise ValueError("empty image")
    if a.dtype != np.uint8:
        if not np.issubdtype(a.dtype, np.integer):
            raise ValueError(f"image intensities must be integers, got dtype {a.dtype}")
        if a.min() < 0 or a.max() > 255:
            raise ValueError("image intensities must lie in [0, 255]")
        a = a.astype(np.uint8)
    return a


def ensure_norm(arr) -> np.ndarray:
    """Validate a normalized image: float array, shape (H, W, C), values in [0, 1]."""
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim == 2:
        a = a[:, :, np.newaxis]
    if a.ndim != 3 or a.shape[2] not in (1, 3):
        raise ValueError(f"expected (H, W) or (H, W, 1|3) image, got shape {a.shape}")
    if a.size == 0:
        raise ValueError("empty image")
    if a.min() < 0.0 or a.max() > 1.0:
        raise ValueError("normalized intensities must lie in [0, 1]")
    return a


def to_norm(img) -> np.ndarray:
    """Map 8-bit intensities to [0, 1] by dividing by 255."""
    return ensure_image(img).astype(np.float64) / 255.0


def from_norm(nimg) -> np.ndarray:
    """Quantize a normalized image back to 8 bits.

    Uses round-half-up (0.5 rounds to the larger intensity) and clamps to
    [0, 255], so ``from_norm(to_norm(x)) == x`` exactly for every 8-bit x.
    """
    a = ensure_norm(nimg)
    q = np.floor(a * 255.0 + 0.5)
    return np.clip(q, 0, 255).astype(np.uint8)


def quantize_batch(batch: np.ndarray) -> np.ndarray:
    """Vectorized ``from_norm`` over a leading batch axis; no range validation."""
    q = np.floor(np.asarray(batch, dtype=np.float64) * 255.0 + 0.5)
    return np.clip(q, 0, 255).astype(np.uint8)


def _as_norm(arr) -> np.ndarray:
    a = np.asarray(arr)
    if np.issubdtype(a.dtype, np.integer):
        return to_norm(a)
    return ensure_norm(a)


def linf_distance(a, b) -> float:
    """Maximum absolute per-pixel difference, in normalized units.

    Accepts 8-bit images, normalized images, or a mix; 8-bit inputs are
    normalized first so the result is always on the [0, 1] scale.
    """
    na = _as_norm(a)
    nb = _as_norm(b)
    if na.shape != nb.shape:
        raise ValueError(f"shape mismatch: {na.shape} vs {nb.shape}")
    return float(np.max(np.abs(na - nb)))


# ---------------------------------------------------------------------------
# PNG I/O (8-bit grayscale or RGB, lossless)
# ---------------------------------------------------------------------------

def _from_pil(pimg: PILImage.Image) -> np.ndarray:
    if pimg.mode == "L":
        return np.asarray(pimg, dtype=np.uint8)[:, :, np.newaxis]
    if pimg.mode == "RGB":
        return np.asarray(pimg, dtype=np.uint8)
    raise ValueError(f"unsupported PNG mode {pimg.mode!r}; expected 8-bit L or RGB")


def _to_pil(img: np.ndarray) -> PILImage.Image:
    img = ensure_image(img)
    if img.shape[2] == 1:
        return PILImage.fromarray(img[:, :, 0], mode="L")
    return PILImage.fromarray(img, mode="RGB")


def load_png(path) -> np.ndarray:
    """Read an 8-bit grayscale or RGB PNG into a (H, W, C) uint8 array."""
    with PILImage.open(path) as pimg:
        return _from_pil(pimg)


def save_png(path, img) -> None:
    """Write an image as a PNG; the round-trip through ``load_png`` is lossless."""
    _to_pil(img).save(path, format="PNG")


def encode_png_bytes(img) -> bytes:
    buf = io.BytesIO()
    _to_pil(img).save(buf, format="PNG")
    return buf.getvalue()


def decode_png_bytes(data: bytes) -> np.ndarray:
    with PILImage.open(io.BytesIO(data)) as pimg:
        pimg.load()
        return _from_pil(pimg)


def encode_png_b64(img) -> str:
    """Base64-encoded PNG, the wire representation of an image."""
    return base64.b64encode(encode_png_bytes(img)).decode("ascii")


def decode_png_b64(s: str) -> np.ndarray:
    try:
        raw = base64.b64decode(s, validate=True)
    except Exception as exc:
        raise ValueError(f"invalid base64 image payload: {exc}") from exc
    return decode_png_bytes(raw)
