"""Two-port scattering math for switch-terminated reflective elements.

All reflection coefficients are referenced to the free-space wave impedance
ETA = 377 ohms.  The element is a lossless two-port whose port 2 is closed by
a switch impedance; the wave seen at port 1 is

    gamma1 = s11 + s12**2 * gl / (1 - s22 * gl)

with gl the load reflection coefficient.  For a unitary (lossless,
reciprocal) S the response reduces, up to the global phase exp(j*theta11), to

    gamma1_r = (a22 - z) / (1 - a22 * z),   z = exp(j*theta22) * gl

which is what the design target solver works with.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

FREE_SPACE_ETA = 377.0  # port reference impedance, ohms
C0 = 299_792_458.0  # speed of light, m/s

RESIDUAL_CONVERGED = 1e-9  # solver convergence target on |gamma1_0 + gamma1_1|
RESIDUAL_ROOT = 1e-6  # refined minima above this are not counted as roots


class SingularityError(ArithmeticError):
    """A denominator that the physical model forbids came out (near) zero."""


class NoContrastError(ValueError):
    """The two load states coincide; the target equation is degenerate."""


def wrap_angle(theta: float) -> float:
    """Wrap an angle in radians into (-pi, pi]."""
    out = math.remainder(theta, 2.0 * math.pi)
    if out <= -math.pi:
        out += 2.0 * math.pi
    return out


# ---------------------------------------------------------------------------
# switch model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RlcBranch:
    """Series RLC branch; c is None when the state has no capacitive part."""

    r: float
    l: float
    c: float | None = None


@dataclass(frozen=True)
class SwitchModel:
    """Two-state series-RLC switch termination (state bit selects the branch)."""

    state0: RlcBranch
    state1: RlcBranch

    def branch(self, state: int) -> RlcBranch:
        if state not in (0, 1):
            raise ValueError(f"switch state must be 0 or 1, got {state}")
        return self.state0 if state == 0 else self.state1


# Series-RLC fit of a C-band PIN diode: state 0 = forward bias (low loss),
# state 1 = reverse bias (capacitive).
PIN_SWITCH = SwitchModel(
    state0=RlcBranch(r=1.0, l=450e-12, c=None),
    state1=RlcBranch(r=10.0, l=450e-12, c=126e-15),
)


def switch_impedance(model: SwitchModel, state: int, f: float) -> complex:
    """Series impedance R + jwL + 1/(jwC) of the selected state at f (Hz)."""
    if f <= 0.0:
        raise ValueError(f"frequency must be positive, got {f}")
    br = model.branch(state)
    w = 2.0 * math.pi * f
    z = complex(br.r, w * br.l)
    if br.c is not None:
        z += 1.0 / complex(0.0, w * br.c)
    return z


# ---------------------------------------------------------------------------
# reflection maps
# ---------------------------------------------------------------------------


def reflection_of_load(zl: complex) -> complex:
    """Gamma = (zl - eta) / (zl + eta); |Gamma| <= 1 for Re(zl) >= 0."""
    den = zl + FREE_SPACE_ETA
    if den == 0:
        raise SingularityError("load impedance equals -eta exactly")
    return (zl - FREE_SPACE_ETA) / den


def load_of_reflection(gamma: complex) -> complex:
    """Inverse map zl = eta * (1 + Gamma) / (1 - Gamma)."""
    den = 1.0 - gamma
    if den == 0:
        raise SingularityError("gamma = 1 has no finite load impedance")
    return FREE_SPACE_ETA * (1.0 + gamma) / den


# ---------------------------------------------------------------------------
# two-port response
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TwoPortS:
    """Reciprocal two-port scattering parameters (s21 = s12)."""

    s11: complex
    s12: complex
    s22: complex


@dataclass(frozen=True)
class UnitaryParams:
    """Constructive parametrization of a lossless reciprocal two-port."""

    a22: float
    theta11: float
    theta22: float

    def __post_init__(self):
        if not 0.0 <= self.a22 <= 1.0:
            raise ValueError(f"a22 must lie in [0, 1], got {self.a22}")
        object.__setattr__(self, "theta11", wrap_angle(self.theta11))
        object.__setattr__(self, "theta22", wrap_angle(self.theta22))


def gamma1_full(s: TwoPortS, gl: complex) -> complex:
    """Port-1 reflection of a two-port closed by load reflection gl."""
    den = 1.0 - s.s22 * gl
    if abs(den) <= 1e-12:
        raise SingularityError("1 - s22*gl is (near) zero; response undefined")
    return s.s11 + s.s12 * s.s12 * gl / den


def unitary_from_params(p: UnitaryParams) -> TwoPortS:
    """Lossless reciprocal S with |s11| = |s22| = a22 and the phase closure
    theta12 = (theta11 + theta22 + pi) / 2 that makes S^H S = I exactly."""
    a = p.a22
    b = math.sqrt(max(0.0, 1.0 - a * a))
    theta12 = 0.5 * (p.theta11 + p.theta22 + math.pi)
    return TwoPortS(
        s11=a * cmath.exp(1j * p.theta11),
        s12=b * cmath.exp(1j * theta12),
        s22=a * cmath.exp(1j * p.theta22),
    )


def gamma1_reduced(a22: float, theta22: float, gl: complex) -> complex:
    """Blaschke form (a22 - z)/(1 - a22*z), z = exp(j*theta22)*gl.

    Equals exp(-j*theta11) * gamma1_full(unitary_from_params(...), gl).
    """
    z = cmath.exp(1j * theta22) * gl
    den = 1.0 - a22 * z
    if abs(den) <= 1e-12:
        raise SingularityError("1 - a22*z is (near) zero; response undefined")
    return (a22 - z) / den


# ---------------------------------------------------------------------------
# design target: solve for the element that flips the wave between states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TargetSolution:
    """Smallest-a22 root of gamma1_r(gl0) = -gamma1_r(gl1), plus alternates.

    `minima` holds every distinct refined residual minimum below 1e-6 as
    (a22, theta22, residual) sorted by a22; `converged` is False when no
    minimum reached 1e-9 and the best point found is reported instead.
    """

    a22: float
    theta22: float
    residual: float
    converged: bool
    minima: tuple[tuple[float, float, float], ...]


def _closure_residual(x, theta, gl0, gl1):
    """|gamma1_r(gl0) + gamma1_r(gl1)| on broadcastable arrays."""
    u = np.exp(1j * np.asarray(theta))
    x = np.asarray(x)
    g = 0.0
    for gl in (gl0, gl1):
        z = u * gl
        g = g + (x - z) / (1.0 - x * z)
    return np.abs(g)


def _newton_refine(x, theta, gl0, gl1, iters=60):
    """Damped Newton on h(x, theta) = gamma1_r(gl0) + gamma1_r(gl1) = 0."""
    res = float(_closure_residual(x, theta, gl0, gl1))
    for _ in range(iters):
        u = cmath.exp(1j * theta)
        h = 0.0 + 0.0j
        dhdx = 0.0 + 0.0j
        dhdt = 0.0 + 0.0j
        for gl in (gl0, gl1):
            z = u * gl
            den = 1.0 - x * z
            if abs(den) < 1e-14:
                return x, theta, res
            h += (x - z) / den
            dhdx += (1.0 - z * z) / (den * den)
            dhdt += 1j * z * (x * x - 1.0) / (den * den)
        jac = np.array([[dhdx.real, dhdt.real], [dhdx.imag, dhdt.imag]])
        rhs = -np.array([h.real, h.imag])
        try:
            step = np.linalg.solve(jac, rhs)
        except np.linalg.LinAlgError:
            return x, theta, res
        scale = 1.0
        for _ in range(40):
            xn = min(1.0, max(0.0, x + scale * step[0]))
            tn = wrap_angle(theta + scale * step[1])
            rn = float(_closure_residual(xn, tn, gl0, gl1))
            if rn < res:
                x, theta, res = xn, tn, rn
                break
            scale *= 0.5
        else:
            return x, theta, res
        if res < 1e-14:
            break
    return x, theta, res


def solve_target_s22(gl0: complex, gl1: complex, n_a: int = 200, n_theta: int = 360) -> TargetSolution:
    """Solve (a-z0)/(1-a*z0) = -(a-z1)/(1-a*z1) for a22 and theta22.

    z_s = exp(j*theta22)*gl_s.  Coarse n_a x n_theta grid over
    [0,1] x (-pi,pi], then damped Newton from every grid-local minimum of the
    closure residual |gamma1_0 + gamma1_1|.  Among refined minima below 1e-6
    the smallest-a22 root wins (product of the quadratic's roots is 1, so at
    most one root lies inside the unit interval per theta; distinct minima
    can still appear at different theta).
    """
    if abs(gl0 - gl1) <= 1e-9:
        raise NoContrastError("load states coincide; no phase contrast possible")

    xs = np.linspace(0.0, 1.0, n_a)
    thetas = np.linspace(-math.pi, math.pi, n_theta + 1)[1:]
    grid = _closure_residual(xs[:, None], thetas[None, :], gl0, gl1)

    # local minima: <= every neighbor, with wraparound in theta and clamped
    # edges in a22
    padded = np.pad(grid, ((1, 1), (0, 0)), mode="edge")
    padded = np.concatenate([padded[:, -1:], padded, padded[:, :1]], axis=1)
    neigh = np.ones_like(grid, dtype=bool)
    for di in (0, 1, 2):
        for dj in (0, 1, 2):
            if di == 1 and dj == 1:
                continue
            neigh &= grid <= padded[di : di + grid.shape[0], dj : dj + grid.shape[1]]
    cand = np.argwhere(neigh)
    order = np.argsort(grid[neigh], kind="stable")
    cand = cand[order][:64]

    refined: list[tuple[float, float, float]] = []
    for i, j in cand:
        x, t, r = _newton_refine(float(xs[i]), float(thetas[j]), gl0, gl1)
        for xo, to, _ in refined:
            if abs(x - xo) < 1e-6 and abs(wrap_angle(t - to)) < 1e-6:
                break
        else:
            refined.append((x, t, r))

    roots = sorted([m for m in refined if m[2] < RESIDUAL_ROOT])
    if roots:
        a, t, r = roots[0]
        return TargetSolution(a, t, r, converged=r < RESIDUAL_CONVERGED, minima=tuple(roots))
    best = min(refined, key=lambda m: m[2])
    return TargetSolution(best[0], best[1], best[2], converged=False, minima=())


# ---------------------------------------------------------------------------
# coding metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CodingMetrics:
    """Per-state reflection loss (dB, >= 0) and state phase difference (deg)."""

    loss0_db: float
    loss1_db: float
    phase_diff_deg: float


def coding_metrics(g0: complex, g1: complex) -> CodingMetrics:
    """loss = -20*log10|gamma| per state; phase diff arg(g0)-arg(g1) in [0,360)."""
    for name, g in (("g0", g0), ("g1", g1)):
        mag = abs(g)
        if mag == 0.0 or mag > 1.0 + 1e-9:
            raise ValueError(f"|{name}| = {mag} outside (0, 1]")
    loss0 = max(0.0, -20.0 * math.log10(abs(g0)))
    loss1 = max(0.0, -20.0 * math.log10(abs(g1)))
    diff = math.degrees(cmath.phase(g0) - cmath.phase(g1)) % 360.0
    return CodingMetrics(loss0, loss1, diff)
