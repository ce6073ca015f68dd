"""Decoy-caption overlay attack.

Renders a faint file-path-like caption into a corner of the image (default:
white text at 7% opacity, 29pt, bottom-right). The caption is generated from
a template whose placeholders are filled from a seeded RNG, and is meant to
look like the on-disk path of a benign "control set" frame.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass

import numpy as np

from .font8x8 import GLYPH_SIDE, GLYPHS
from .images import ensure_image

_CORNERS = ("bottom-right", "bottom-left", "top-right", "top-left")
_IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp", ".webp")

DEFAULT_MARKERS = ("control", "real", "authentic")


@dataclass(frozen=True)
class OverlaySpec:
    """Parameters of the rendered caption box."""

    text: str
    opacity: float = 0.07
    color: tuple[int, int, int] = (255, 255, 255)
    point_size: float = 29.0
    anchor: str = "bottom-right"
    margin: int = 8
    dpi: float = 72.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.opacity <= 1.0:
            raise ValueError(f"opacity must be in [0, 1], got {self.opacity}")
        if self.point_size <= 0:
            raise ValueError(f"point_size must be positive, got {self.point_size}")
        if self.dpi <= 0:
            raise ValueError(f"dpi must be positive, got {self.dpi}")
        if self.margin < 0:
            raise ValueError(f"margin must be non-negative, got {self.margin}")
        if self.anchor not in _CORNERS:
            raise ValueError(f"anchor must be one of {_CORNERS}, got {self.anchor!r}")
        if len(self.color) != 3 or any(not 0 <= c <= 255 for c in self.color):
            raise ValueError(f"color must be three intensities in 0..255, got {self.color}")

    @property
    def cell_px(self) -> int:
        """Rendered glyph cell side in pixels (point size at the given dpi)."""
        return max(1, int(np.floor(self.point_size * self.dpi / 72.0 + 0.5)))


@dataclass(frozen=True)
class DecoyPathTemplate:
    """Template for captions shaped like dataset file paths.

    Segments are joined with "/". Placeholders: ``{root}`` (dataset-root-like
    directory), ``{marker}`` (a control-set word), ``{slug}`` (subject
    identifier), ``{index}`` (zero-padded frame number).
    """

    segments: tuple[str, ...] = ("{root}", "{marker}", "{slug}", "frame_{index}.png")
    markers: tuple[str, ...] = DEFAULT_MARKERS
    roots: tuple[str, ...] = ("data", "datasets", "val", "benchmark")

    def __post_init__(self) -> None:
        if not self.segments:
            raise ValueError("template needs at least one segment")
        if not self.markers:
            raise ValueError("template needs at least one marker word")
        if not self.roots:
            raise ValueError("template needs at least one root word")

    @property
    def has_placeholders(self) -> bool:
        return any("{" in seg for seg in self.segments)


def _validate_path(path: str) -> None:
    if path.startswith("/") or not path:
        raise ValueError(f"decoy path must be relative, got {path!r}")
    parts = path.split("/")
    if any(p in ("", ".", "..") for p in parts):
        raise ValueError(f"decoy path has empty or dot segments: {path!r}")
    if not path.lower().endswith(_IMAGE_EXTENSIONS):
        raise ValueError(f"decoy path must end in an image extension: {path!r}")
    if not re.fullmatch(r"[A-Za-z0-9_./-]+", path):
        raise ValueError(f"decoy path has non-path characters: {path!r}")


def generate_decoy_path(
    tpl: DecoyPathTemplate,
    rng: np.random.Generator,
    *,
    max_width_px: int | None = None,
    point_size: float = 29.0,
    dpi: float = 72.0,
) -> str:
    """Expand a path template with seeded placeholder values.

    With ``max_width_px`` set, raises if the rendered caption would be wider
    than that many pixels at the given size.
    """
    values = {
        "root": str(rng.choice(np.asarray(tpl.roots, dtype=object))),
        "marker": str(rng.choice(np.asarray(tpl.markers, dtype=object))),
        "slug": f"subject_{int(rng.integers(0, 1000)):03d}",
        "index": f"{int(rng.integers(0, 100000)):05d}",
    }
    try:
        path = "/".join(seg.format(**values) for seg in tpl.segments)
    except (KeyError, IndexError) as exc:
        raise ValueError(f"unknown placeholder in template: {exc}") from exc
    _validate_path(path)
    if max_width_px is not None:
        cell = max(1, int(np.floor(point_size * dpi / 72.0 + 0.5)))
        width = cell * len(path)
        if width > max_width_px:
            raise ValueError(
                f"caption {path!r} renders {width}px wide at {point_size}pt, "
                f"exceeding the {max_width_px}px limit"
            )
    return path


def render_text_mask(text: str, point_size: float = 29.0, dpi: float = 72.0) -> np.ndarray:
    """Render text to a per-pixel coverage mask in [0, 1].

    Returns an (height, width) float array; the box is one glyph cell tall and
    ``cell * len(text)`` wide, where the cell side is the point size converted
    to pixels at the given dpi (rounded half-up). Glyphs are scaled from the
    embedded 8x8 font by nearest neighbor, so coverage is binary. Characters
    without a glyph are replaced by '?' and reported via a warning.
    """
    if point_size <= 0 or dpi <= 0:
        raise ValueError("point_size and dpi must be positive")
    cell = max(1, int(np.floor(point_size * dpi / 72.0 + 0.5)))
    if not text:
        return np.zeros((cell, 0), dtype=np.float64)

    unsupported = sorted({ch for ch in text if ch not in GLYPHS})
    if unsupported:
        warnings.warn(
            f"no glyph for {unsupported!r}; substituting '?'",
            UserWarning,
            stacklevel=2,
        )
        text = "".join(ch if ch in GLYPHS else "?" for ch in text)

    idx = np.arange(cell) * GLYPH_SIDE // cell
    cells = [GLYPHS[ch][np.ix_(idx, idx)] for ch in text]
    return np.concatenate(cells, axis=1).astype(np.float64)


def composite_overlay(img: np.ndarray, spec: OverlaySpec) -> np.ndarray:
    """Blend the caption box into a corner of an 8-bit image.

    Covered pixels become round((1 - opacity*cov)*bg + opacity*cov*color);
    everything outside the box is untouched. Raises if the box plus margin
    does not fit inside the image.
    """
    img = ensure_image(img)
    height, width, channels = img.shape
    mask = render_text_mask(spec.text, spec.point_size, spec.dpi)
    box_h, box_w = mask.shape
    if box_h + spec.margin > height or box_w + spec.margin > width:
        raise ValueError(
            f"caption box {box_h}x{box_w} plus margin {spec.margin} does not fit "
            f"in a {height}x{width} image"
        )

    top = spec.margin if spec.anchor.startswith("top") else height - spec.margin - box_h
    left = spec.margin if spec.anchor.endswith("left") else width - spec.margin - box_w

    if channels == 1:
        color = np.array([float(np.mean(spec.color))])
    else:
        color = np.asarray(spec.color, dtype=np.float64)

    out = img.copy()
    region = out[top:top + box_h, left:left + box_w].astype(np.float64)
    alpha = spec.opacity * mask[:, :, np.newaxis]
    blended = (1.0 - alpha) * region + alpha * color
    out[top:top + box_h, left:left + box_w] = np.clip(
        np.floor(blended + 0.5), 0, 255
    ).astype(np.uint8)
    return out
