"""64-bit pixel genomes and their four-fold mirrored 16x16 metal grids.

A genome is the top-left 8x8 quadrant, row-major, bit 0 at (row 0, col 0).
The physical pattern mirrors it about both axes, so every design is symmetric
and the full grid never has to be stored.  Grids are boolean numpy arrays
with True = metal.

The etched gap, lead width and lead length are not rasterized onto the grid;
they live in GeometryMeta and enter the electrical model through its lumped
constants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GENOME_SIDE = 8
GRID_SIDE = 16
GENOME_BITS = GENOME_SIDE * GENOME_SIDE


@dataclass(frozen=True)
class GeometryMeta:
    """Physical cell geometry (SI units).  tan_delta is carried for record
    keeping only; the electrical model is lossless."""

    period: float = 25.8e-3  # element period P
    pixel_side: float = 1.5e-3  # pixel square side L
    pixel_pitch: float = 1.375e-3  # pixel center spacing
    substrate_h: float = 1.52e-3  # substrate thickness h
    eps_r: float = 3.5  # substrate relative permittivity
    tan_delta: float = 0.0018  # substrate loss tangent (metadata only)
    gap: float = 0.3e-3  # etched gap bridged by the switch
    lead_width: float = 0.7e-3  # feed lead width W
    lead_length: float = 11.125e-3  # feed lead length L1
    f0: float = 5.8e9  # design center frequency, Hz

    def __post_init__(self):
        for name in ("period", "pixel_side", "pixel_pitch", "substrate_h",
                     "eps_r", "gap", "lead_width", "lead_length", "f0"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def as_genome(bits) -> np.ndarray:
    """Coerce to a (8, 8) boolean genome; accepts (8,8) or flat 64."""
    arr = np.asarray(bits)
    if arr.size != GENOME_BITS:
        raise ValueError(f"genome needs {GENOME_BITS} bits, got {arr.size}")
    return arr.reshape(GENOME_SIDE, GENOME_SIDE).astype(bool)


def expand_genome(bits) -> np.ndarray:
    """Mirror the 8x8 genome about both axes into the (16, 16) grid.

    Bit (r, c) lands on (r, c), (r, 15-c), (15-r, c) and (15-r, 15-c).
    """
    g = as_genome(bits)
    top = np.concatenate([g, g[:, ::-1]], axis=1)
    return np.concatenate([top, top[::-1, :]], axis=0)


def metal_cell_count(bits) -> int:
    """Metal cells in the expanded grid: exactly 4x the genome popcount."""
    return 4 * int(as_genome(bits).sum())


def genome_to_u64(bits) -> int:
    """Pack row-major, bit (0,0) most significant."""
    packed = np.packbits(as_genome(bits).reshape(-1).astype(np.uint8))
    return int.from_bytes(packed.tobytes(), "big")


def genome_from_u64(word: int) -> np.ndarray:
    if not 0 <= word < (1 << 64):
        raise ValueError("genome word out of 64-bit range")
    raw = np.frombuffer(int(word).to_bytes(8, "big"), dtype=np.uint8)
    return np.unpackbits(raw).astype(bool).reshape(GENOME_SIDE, GENOME_SIDE)


def pack_genome(bits) -> str:
    """Canonical 16-digit uppercase hex, MSB first."""
    return f"{genome_to_u64(bits):016X}"


def unpack_genome(text: str) -> np.ndarray:
    """Inverse of pack_genome; accepts either case, rejects anything else."""
    s = text.strip()
    if len(s) != 16:
        raise ValueError(f"genome hex must be 16 digits, got {len(s)}")
    try:
        word = int(s, 16)
    except ValueError as exc:
        raise ValueError(f"malformed genome hex {text!r}") from exc
    return genome_from_u64(word)


def render_pbm(grid) -> str:
    """Plain PBM (P1) image of a 16x16 grid, 1 = metal."""
    arr = np.asarray(grid).astype(bool)
    if arr.shape != (GRID_SIDE, GRID_SIDE):
        raise ValueError(f"expected ({GRID_SIDE}, {GRID_SIDE}) grid, got {arr.shape}")
    rows = [" ".join("1" if v else "0" for v in row) for row in arr]
    return f"P1\n{GRID_SIDE} {GRID_SIDE}\n" + "\n".join(rows) + "\n"


def is_mirror_symmetric(grid) -> bool:
    """True when a 16x16 grid has the four-fold symmetry expand_genome makes."""
    arr = np.asarray(grid).astype(bool)
    return bool(np.array_equal(arr, arr[:, ::-1]) and np.array_equal(arr, arr[::-1, :]))
