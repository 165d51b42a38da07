"""Direct-summation simulator for a 1-bit coding reflectarray.

Geometry: n_x by n_y elements on a square grid in the z = 0 plane, feed above
the center radiating a cos^q_f pattern, elements radiating cos^q_e.  The
field toward direction u(theta, phi) is

    E = sum_mn [cos^q_f(theta_f,mn) / d_mn] e^{-j k d_mn} Gamma_mn
        cos^q_e(theta) e^{+j k (r_mn . u)}

with d_mn the feed-to-element distance.  Element phases are compensated with
phi_mn = +k d_mn - k (r_mn . u0) + phi_ref: the feed term cancels the
incident spherical delay, the steering term forms the beam at u0.  A plane
wave feed option removes the feed amplitude taper and delay entirely, which
turns the boresight case into the textbook uniform-aperture array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .netcalc import C0

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ArrayConfig:
    n_x: int = 16
    n_y: int = 16
    spacing: float = 25.8e-3
    feed_xyz: tuple[float, float, float] = (0.0, 0.0, 0.310)
    q_feed: float = 6.0
    q_elem: float = 1.0
    plane_wave_feed: bool = False

    def __post_init__(self):
        if self.n_x < 1 or self.n_y < 1 or self.spacing <= 0:
            raise ValueError("array dimensions must be positive")
        if self.feed_xyz[2] <= 0:
            raise ValueError("feed must sit above the array plane")
        if self.q_feed < 0 or self.q_elem < 0:
            raise ValueError("pattern exponents must be nonnegative")


@dataclass(frozen=True)
class SteerTarget:
    theta_deg: float
    phi_deg: float

    def __post_init__(self):
        if not 0.0 <= self.theta_deg < 90.0:
            raise ValueError("steer theta must lie in [0, 90)")
        if not 0.0 <= self.phi_deg < 360.0:
            raise ValueError("steer phi must lie in [0, 360)")


def element_positions(cfg: ArrayConfig) -> tuple[np.ndarray, np.ndarray]:
    """(n_y, n_x) x and y coordinates, array centered on the origin."""
    xs = (np.arange(cfg.n_x) - (cfg.n_x - 1) / 2.0) * cfg.spacing
    ys = (np.arange(cfg.n_y) - (cfg.n_y - 1) / 2.0) * cfg.spacing
    return np.meshgrid(xs, ys)


def _feed_terms(cfg: ArrayConfig, k0: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-element feed amplitude and phase (radians, delay negative)."""
    x, y = element_positions(cfg)
    if cfg.plane_wave_feed:
        one = np.ones_like(x)
        return one, np.zeros_like(x)
    fx, fy, fz = cfg.feed_xyz
    d = np.sqrt((x - fx) ** 2 + (y - fy) ** 2 + fz**2)
    amp = (fz / d) ** cfg.q_feed / d
    return amp, -k0 * d


def steer_unit(steer: SteerTarget) -> tuple[float, float, float]:
    t = math.radians(steer.theta_deg)
    p = math.radians(steer.phi_deg)
    return (math.sin(t) * math.cos(p), math.sin(t) * math.sin(p), math.cos(t))


def ideal_phase(cfg: ArrayConfig, steer: SteerTarget, f: float,
                ref_phase: float = 0.0) -> np.ndarray:
    """Continuous compensation phases, wrapped to [0, 2*pi)."""
    if f <= 0:
        raise ValueError("frequency must be positive")
    k0 = TWO_PI * f / C0
    x, y = element_positions(cfg)
    _, feed_phase = _feed_terms(cfg, k0)
    ux, uy, _ = steer_unit(steer)
    phases = -feed_phase - k0 * (x * ux + y * uy) + ref_phase
    return np.mod(phases, TWO_PI)


def quantize_1bit(phases: np.ndarray) -> np.ndarray:
    """Code 0 for phase in [0, pi), code 1 for [pi, 2*pi); pi itself is 1."""
    return (np.mod(np.asarray(phases), TWO_PI) >= math.pi).astype(np.uint8)


def gammas_from_codes(codes: np.ndarray, gamma0: complex, gamma1: complex) -> np.ndarray:
    codes = np.asarray(codes)
    return np.where(codes.astype(bool), complex(gamma1), complex(gamma0))


def far_field_gammas(cfg: ArrayConfig, gammas: np.ndarray, f: float,
                     thetas_deg: np.ndarray, phi_deg: float = 0.0) -> np.ndarray:
    """Complex field along one cut; negative theta means the phi+180 side."""
    gammas = np.asarray(gammas, dtype=complex)
    if gammas.shape != (cfg.n_y, cfg.n_x):
        raise ValueError(f"gammas must be ({cfg.n_y}, {cfg.n_x}), got {gammas.shape}")
    k0 = TWO_PI * f / C0
    x, y = element_positions(cfg)
    amp, feed_phase = _feed_terms(cfg, k0)
    excite = (amp * gammas * np.exp(1j * feed_phase)).reshape(-1)

    t = np.radians(np.asarray(thetas_deg, dtype=float))
    p = math.radians(phi_deg)
    ux = np.sin(t) * math.cos(p)
    uy = np.sin(t) * math.sin(p)
    phase = k0 * (x.reshape(-1)[None, :] * ux[:, None] + y.reshape(-1)[None, :] * uy[:, None])
    elem = np.cos(t) ** cfg.q_elem
    return (np.exp(1j * phase) @ excite) * elem


def pattern_db(cfg: ArrayConfig, gammas: np.ndarray, f: float,
               thetas_deg: np.ndarray, phi_deg: float = 0.0,
               floor_db: float = -100.0) -> np.ndarray:
    """|E|^2 along the cut, normalized so the peak sits at 0 dB."""
    e = far_field_gammas(cfg, gammas, f, thetas_deg, phi_deg)
    p = np.abs(e) ** 2
    peak = p.max()
    if peak == 0.0:
        return np.full_like(p, floor_db)
    p = np.maximum(p / peak, 10.0 ** (floor_db / 10.0))
    return 10.0 * np.log10(p)


def far_field(cfg: ArrayConfig, codes: np.ndarray, gamma0: complex, gamma1: complex,
              f: float, thetas_deg: np.ndarray, phi_deg: float = 0.0,
              floor_db: float = -100.0) -> np.ndarray:
    """Normalized 1-bit pattern for a coding matrix and two element states."""
    if abs(gamma0) > 1.0 + 1e-9 or abs(gamma1) > 1.0 + 1e-9:
        raise ValueError("element reflection magnitudes must not exceed 1")
    g = gammas_from_codes(codes, gamma0, gamma1)
    return pattern_db(cfg, g, f, thetas_deg, phi_deg, floor_db)


def default_cut(step_deg: float = 0.25) -> np.ndarray:
    n = int(round(180.0 / step_deg))
    return -90.0 + step_deg * np.arange(n + 1)


# ---------------------------------------------------------------------------
# frequency sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepResult:
    freqs: np.ndarray
    power_db: np.ndarray
    band: tuple[float, float] | None
    bandwidth_pct: float


def spectral_power_sweep(cfg: ArrayConfig, freqs: np.ndarray,
                         gamma0_spec: np.ndarray, gamma1_spec: np.ndarray,
                         steer: SteerTarget, f0: float = 5.8e9,
                         ref_phase: float = 0.0) -> SweepResult:
    """Power toward the steer direction vs frequency, codes frozen at f0.

    The coding matrix is computed once at f0 (a hardware-static pattern) and
    per frequency the two element states take the supplied reflection
    spectra.  Output is normalized to its own peak; the reported band is the
    contiguous run of grid frequencies around f0 staying within 3 dB of the
    peak, as (lo, hi) and as a percentage of the band center.
    """
    freqs = np.asarray(freqs, dtype=float)
    g0 = np.asarray(gamma0_spec, dtype=complex)
    g1 = np.asarray(gamma1_spec, dtype=complex)
    if not (len(freqs) == len(g0) == len(g1)):
        raise ValueError("freqs and reflection spectra must share one length")
    k0_idx = int(np.argmin(np.abs(freqs - f0)))
    codes = quantize_1bit(ideal_phase(cfg, steer, f0, ref_phase))

    power = np.empty(len(freqs))
    theta = np.array([steer.theta_deg])
    for k, f in enumerate(freqs):
        gammas = gammas_from_codes(codes, complex(g0[k]), complex(g1[k]))
        e = far_field_gammas(cfg, gammas, float(f), theta, steer.phi_deg)
        power[k] = float(np.abs(e[0]) ** 2)

    power_db = 10.0 * np.log10(np.maximum(power / power.max(), 1e-30))
    ok = power_db >= -3.0
    if not ok[k0_idx]:
        return SweepResult(freqs, power_db, None, 0.0)
    lo = k0_idx
    while lo > 0 and ok[lo - 1]:
        lo -= 1
    hi = k0_idx
    while hi < len(freqs) - 1 and ok[hi + 1]:
        hi += 1
    f_lo, f_hi = float(freqs[lo]), float(freqs[hi])
    center = 0.5 * (f_lo + f_hi)
    return SweepResult(freqs, power_db, (f_lo, f_hi), 100.0 * (f_hi - f_lo) / center)


# ---------------------------------------------------------------------------
# artifacts
# ---------------------------------------------------------------------------


def render_pgm(values_db: np.ndarray, floor_db: float = -40.0) -> str:
    """Plain PGM (P2) of a dB map; floor_db..0 maps to 0..255."""
    v = np.asarray(values_db, dtype=float)
    if v.ndim != 2:
        raise ValueError("PGM rendering needs a 2-D map")
    scaled = np.clip((v - floor_db) / -floor_db, 0.0, 1.0)
    pix = np.round(scaled * 255.0).astype(int)
    rows = [" ".join(str(p) for p in row) for row in pix]
    return f"P2\n{v.shape[1]} {v.shape[0]}\n255\n" + "\n".join(rows) + "\n"
