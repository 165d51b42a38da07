"""Deterministic electrical stand-in for full-wave element simulation.

This is openly a lumped-element model, not electromagnetics: the 16x16 metal
grid is reduced to six geometry features and those features steer a fixed
one-port circuit.  It exists so the full pipeline (dataset, surrogate, GA,
validation) can run desk-scale with a reproducible ground truth that has the
right qualitative behavior: multi-resonant, strictly passive, smooth in
frequency, and factoring exactly through the features.

Circuit seen from the port (reference impedance eta = 377 ohm):

    z_series = jw*L_LEAD + 1/(jw*C_gap)        C_gap = C_GAP0 + C_GAP1*(1-rho_center)
    y1 = 1/(jw*L1 + 1/(jw*C1))                 L1 = L_A + L_B*(1-v_conn)
                                               C1 = C_A + C_B*rho + C_C*e_h
    y2 = 1/(jw*L2 + 1/(jw*C2))                 L2 = L2_0*(1+q_cb)
                                               C2 = C2_0*(1+e_v)
    y_stub = 1/(j*(eta/sqrt(eps_r))*tan(2*pi*f*sqrt(eps_r)*h/c0))
    z_in = z_series + 1/(y1 + y2 + y_stub + 1/eta)
    s22 = (z_in - eta)/(z_in + eta)

Every reactive element is lossless; the only real conductance is the 1/eta
radiation shunt, which keeps |s22| < 1 strictly.  The stub's quarter-wave
singularity sits near 26.4 GHz, far above the 2.8-8.8 GHz grid.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .netcalc import C0, FREE_SPACE_ETA
from .pattern import GRID_SIDE, GeometryMeta

FREQ_START = 2.8e9  # Hz
FREQ_STEP = 0.1e9  # Hz
N_FREQ = 61

FEATURE_NAMES = ("rho", "v_conn", "e_h", "e_v", "rho_center", "q_cb")

# Entries nearer a branch series resonance than this are re-evaluated 1 Hz up.
_POLE_EPS = 1e-15


def freq_grid() -> np.ndarray:
    """The fixed 61-point evaluation grid, 2.8 to 8.8 GHz inclusive."""
    return FREQ_START + FREQ_STEP * np.arange(N_FREQ)


@dataclass(frozen=True)
class OracleConstants:
    """Lumped constants mapping grid features to the circuit (SI units)."""

    l_lead: float = 0.15e-9
    c_gap0: float = 0.06e-12
    c_gap1: float = 0.15e-12
    c_a: float = 25e-15
    c_b: float = 180e-15
    c_c: float = 120e-15
    l_a: float = 0.8e-9
    l_b: float = 1.6e-9
    l2_0: float = 0.5e-9
    c2_0: float = 75e-15

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value <= 0:
                raise ValueError(f"{name} must be positive")


def fingerprint(consts: OracleConstants, geom: GeometryMeta) -> str:
    """16-hex digest of the constants + geometry that define the model."""
    payload = json.dumps(
        {"oracle": asdict(consts), "geometry": asdict(geom)},
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# features
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FeatureVector:
    """The six grid reductions the circuit responds to, each in [0, 1]."""

    rho: float  # overall metal fill
    v_conn: float  # mean per-column longest vertical metal run / 16
    e_h: float  # horizontally dissimilar neighbor pairs / (16*15)
    e_v: float  # vertically dissimilar neighbor pairs / (16*15)
    rho_center: float  # fill of the central 8x8 block
    q_cb: float  # |rho_center - rho_border|

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in FEATURE_NAMES])


def _check_grids(grids) -> np.ndarray:
    arr = np.asarray(grids).astype(bool)
    if arr.ndim == 2:
        arr = arr[None, :, :]
    if arr.shape[1:] != (GRID_SIDE, GRID_SIDE):
        raise ValueError(f"expected (n, {GRID_SIDE}, {GRID_SIDE}) grids, got {arr.shape}")
    return arr


def features_batch(grids) -> np.ndarray:
    """(n, 16, 16) grids -> (n, 6) feature rows in FEATURE_NAMES order."""
    g = _check_grids(grids)
    n = g.shape[0]
    rho = g.mean(axis=(1, 2))

    run = np.zeros((n, GRID_SIDE))
    best = np.zeros((n, GRID_SIDE))
    for r in range(GRID_SIDE):
        run = (run + 1.0) * g[:, r, :]
        best = np.maximum(best, run)
    v_conn = best.mean(axis=1) / GRID_SIDE

    e_h = (g[:, :, 1:] != g[:, :, :-1]).mean(axis=(1, 2))
    e_v = (g[:, 1:, :] != g[:, :-1, :]).mean(axis=(1, 2))

    center = g[:, 4:12, 4:12].mean(axis=(1, 2))
    border = (rho * GRID_SIDE**2 - center * 64.0) / (GRID_SIDE**2 - 64.0)
    q_cb = np.abs(center - border)
    return np.stack([rho, v_conn, e_h, e_v, center, q_cb], axis=1)


def extract_features(grid) -> FeatureVector:
    row = features_batch(grid)[0]
    return FeatureVector(*(float(v) for v in row))


# ---------------------------------------------------------------------------
# response
# ---------------------------------------------------------------------------


def _s22_kernel(feats: np.ndarray, freqs: np.ndarray, consts: OracleConstants,
                geom: GeometryMeta) -> np.ndarray:
    """(n, 6) features x (n, m) or (m,) freqs -> (n, m) s22, no pole guard."""
    rho = feats[:, 0:1]
    v_conn = feats[:, 1:2]
    e_h = feats[:, 2:3]
    e_v = feats[:, 3:4]
    rho_center = feats[:, 4:5]
    q_cb = feats[:, 5:6]

    w = 2.0 * math.pi * freqs
    eta = FREE_SPACE_ETA

    c_gap = consts.c_gap0 + consts.c_gap1 * (1.0 - rho_center)
    z_series = 1j * w * consts.l_lead + 1.0 / (1j * w * c_gap)

    l1 = consts.l_a + consts.l_b * (1.0 - v_conn)
    c1 = consts.c_a + consts.c_b * rho + consts.c_c * e_h
    zb1 = 1j * w * l1 + 1.0 / (1j * w * c1)

    l2 = consts.l2_0 * (1.0 + q_cb)
    c2 = consts.c2_0 * (1.0 + e_v)
    zb2 = 1j * w * l2 + 1.0 / (1j * w * c2)

    eta_s = eta / math.sqrt(geom.eps_r)
    beta_h = w * math.sqrt(geom.eps_r) * geom.substrate_h / C0
    z_stub = 1j * eta_s * np.tan(beta_h) * np.ones_like(zb1)

    singular = (np.abs(zb1) < _POLE_EPS) | (np.abs(zb2) < _POLE_EPS) | (np.abs(z_stub) < _POLE_EPS)
    if np.any(singular):
        # exact branch resonance on a sample: deterministic 1 Hz nudge
        f_adj = np.broadcast_to(freqs, singular.shape) + 1.0
        nudged = _s22_kernel(feats, np.where(singular, f_adj, freqs), consts, geom)
        with np.errstate(divide="ignore", invalid="ignore"):
            plain = _finish(z_series, zb1, zb2, z_stub, eta)
        return np.where(singular, nudged, plain)
    return _finish(z_series, zb1, zb2, z_stub, eta)


def _finish(z_series, zb1, zb2, z_stub, eta):
    y = 1.0 / zb1 + 1.0 / zb2 + 1.0 / z_stub + 1.0 / eta
    z_in = z_series + 1.0 / y
    return (z_in - eta) / (z_in + eta)


def response_batch(grids, consts: OracleConstants | None = None,
                   geom: GeometryMeta | None = None,
                   freqs: np.ndarray | None = None) -> np.ndarray:
    """(n, 16, 16) grids -> (n, m) complex s22 over the grid frequencies."""
    consts = consts or OracleConstants()
    geom = geom or GeometryMeta()
    f = freq_grid() if freqs is None else np.atleast_1d(np.asarray(freqs, dtype=float))
    if np.any(f <= 0):
        raise ValueError("frequencies must be positive")
    return _s22_kernel(features_batch(grids), f, consts, geom)


def features_response_batch(feats: np.ndarray, consts: OracleConstants | None = None,
                            geom: GeometryMeta | None = None,
                            freqs: np.ndarray | None = None) -> np.ndarray:
    """Same as response_batch but straight from (n, 6) feature rows."""
    consts = consts or OracleConstants()
    geom = geom or GeometryMeta()
    f = freq_grid() if freqs is None else np.atleast_1d(np.asarray(freqs, dtype=float))
    return _s22_kernel(np.asarray(feats, dtype=float), f, consts, geom)


def oracle_response(grid, consts: OracleConstants | None = None,
                    geom: GeometryMeta | None = None) -> np.ndarray:
    """Single grid -> (61,) complex s22 on the fixed frequency grid."""
    return response_batch(grid, consts, geom)[0]


def oracle_s22(grid, f: float, consts: OracleConstants | None = None,
               geom: GeometryMeta | None = None) -> complex:
    """Single grid, single frequency (Hz) -> complex s22."""
    return complex(response_batch(grid, consts, geom, freqs=np.array([float(f)]))[0, 0])
