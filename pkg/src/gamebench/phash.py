"""64-bit perceptual hashes of game frames and hamming distances between them.

Both the average hash (cell vs. grid mean) and the difference hash (cell vs.
right neighbour) operate on an exact area-average downsample of the grayscale
frame.  All comparisons are carried out in integer arithmetic so hash values
are bit-identical across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GRID = 8  # hash grid is 8x8 (9x8 for the difference hash)

_ALGORITHMS = ("ahash", "dhash")


class HashError(Exception):
    """Base class for hashing failures."""


class FrameTooSmall(HashError):
    """Frame is smaller than the downsample grid."""


class AlgorithmMismatch(HashError):
    """Hamming distance requested between hashes of different algorithms."""


@dataclass(frozen=True)
class Frame:
    """Immutable raster snapshot of the game screen.

    ``pixels`` is a row-major RGB byte buffer of length width*height*3.
    ``captured_at_ms`` is the game-time capture timestamp.
    """

    width: int
    height: int
    pixels: bytes
    captured_at_ms: int = 0

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("frame dimensions must be positive")
        if len(self.pixels) != self.width * self.height * 3:
            raise ValueError(
                f"pixel buffer length {len(self.pixels)} != "
                f"{self.width}x{self.height}x3"
            )

    @classmethod
    def from_array(cls, rgb: np.ndarray, captured_at_ms: int = 0) -> "Frame":
        """Build a Frame from an (H, W, 3) uint8 array."""
        rgb = np.asarray(rgb, dtype=np.uint8)
        if rgb.ndim != 3 or rgb.shape[2] != 3:
            raise ValueError("expected an (H, W, 3) array")
        h, w = rgb.shape[:2]
        return cls(width=w, height=h, pixels=rgb.tobytes(), captured_at_ms=captured_at_ms)

    def to_array(self) -> np.ndarray:
        """Return the pixel data as an (H, W, 3) uint8 array."""
        arr = np.frombuffer(self.pixels, dtype=np.uint8)
        return arr.reshape(self.height, self.width, 3)


@dataclass(frozen=True)
class PerceptualHash:
    bits: int
    algorithm: str

    def __post_init__(self) -> None:
        if not 0 <= self.bits < (1 << 64):
            raise ValueError("hash must fit in 64 bits")
        if self.algorithm not in _ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")

    def __str__(self) -> str:
        return f"{self.algorithm}:{self.bits:016x}"

    @classmethod
    def parse(cls, text: str) -> "PerceptualHash":
        """Parse the ``dhash:f0e1...`` serialization."""
        algo, sep, hexpart = text.partition(":")
        if not sep or algo not in _ALGORITHMS or len(hexpart) != 16:
            raise ValueError(f"bad hash serialization {text!r}")
        return cls(bits=int(hexpart, 16), algorithm=algo)


def to_grayscale(frame: Frame) -> np.ndarray:
    """Per-pixel luminance, round(0.299 R + 0.587 G + 0.114 B), as (H, W) uint8."""
    rgb = frame.to_array().astype(np.int64)
    # Integer luma: weights scaled by 1000, round half up.
    luma = (299 * rgb[:, :, 0] + 587 * rgb[:, :, 1] + 114 * rgb[:, :, 2] + 500) // 1000
    return luma.astype(np.uint8)


def _axis_weights(length: int, cells: int) -> np.ndarray:
    """Integer overlap lengths between pixels and cells on one axis.

    Coordinates are scaled by ``cells`` so every overlap is an integer: pixel i
    covers [i*cells, (i+1)*cells), cell c covers [c*length, (c+1)*length).
    Returns a (cells, length) int64 matrix.
    """
    w = np.zeros((cells, length), dtype=np.int64)
    for c in range(cells):
        lo, hi = c * length, (c + 1) * length
        for i in range(length):
            plo, phi = i * cells, (i + 1) * cells
            overlap = min(hi, phi) - max(lo, plo)
            if overlap > 0:
                w[c, i] = overlap
    return w


def _cell_sums(frame: Frame, cols: int, rows: int) -> np.ndarray:
    """Exact area-weighted cell sums on a rows x cols grid.

    Every cell has the same total weight (width*height in scaled units), so
    sums can be compared directly in place of averages.
    """
    gray = to_grayscale(frame).astype(np.int64)
    wy = _axis_weights(frame.height, rows)
    wx = _axis_weights(frame.width, cols)
    return wy @ gray @ wx.T


def average_hash(frame: Frame) -> PerceptualHash:
    """8x8 average hash: bit set iff the cell is strictly above the grid mean.

    Bits are packed row-major with the top-left cell at the MSB.
    """
    if frame.width < GRID or frame.height < GRID:
        raise FrameTooSmall(f"need at least {GRID}x{GRID}, got {frame.width}x{frame.height}")
    sums = _cell_sums(frame, GRID, GRID)
    # cell > mean  <=>  64 * cell_sum > total_sum  (common denominator)
    above = (GRID * GRID * sums) > sums.sum()
    return PerceptualHash(bits=_pack(above.ravel()), algorithm="ahash")


def difference_hash(frame: Frame) -> PerceptualHash:
    """9x8 difference hash: bit (r, c) set iff cell (r, c+1) > cell (r, c)."""
    if frame.width < GRID + 1 or frame.height < GRID:
        raise FrameTooSmall(
            f"need at least {GRID + 1}x{GRID}, got {frame.width}x{frame.height}"
        )
    sums = _cell_sums(frame, GRID + 1, GRID)
    above = sums[:, 1:] > sums[:, :-1]
    return PerceptualHash(bits=_pack(above.ravel()), algorithm="dhash")


def hash_frame(frame: Frame, algorithm: str) -> PerceptualHash:
    """Hash with the named algorithm ("ahash" or "dhash")."""
    if algorithm == "ahash":
        return average_hash(frame)
    if algorithm == "dhash":
        return difference_hash(frame)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def hamming_distance(a: PerceptualHash, b: PerceptualHash) -> int:
    """Population count of the XOR of two equal-algorithm hashes."""
    if a.algorithm != b.algorithm:
        raise AlgorithmMismatch(f"{a.algorithm} vs {b.algorithm}")
    return (a.bits ^ b.bits).bit_count()


def _pack(bits: np.ndarray) -> int:
    value = 0
    for b in bits:
        value = (value << 1) | int(b)
    return value
