"""Design targets, genetic search over pixel genomes, and design validation.

The flow: build_target turns a frequency band plus a switch model into the
required reflection spectrum (solving the anti-phase condition per frequency),
ga_run searches genome space against any pure evaluator for it, and
validate_design re-checks the winner against the electrical model with the
switch loaded, reporting the usable operating band.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import netcalc as nc
from .netcalc import PIN_SWITCH, SwitchModel
from .oracle import (
    FREQ_START,
    FREQ_STEP,
    GeometryMeta,
    OracleConstants,
    freq_grid,
    response_batch,
)
from .rng import CounterRng, bits_to_u64, u64_to_bits

FITNESS_EPS = 1e-6
MISMATCH_THRESHOLD = 0.1
PHASE_WINDOW_DEG = 45.0
LOSS_LIMIT_DB = 1.5


class NoSolutionError(RuntimeError):
    """The anti-phase condition has no root at a requested frequency."""


# ---------------------------------------------------------------------------
# targets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TargetSpec:
    """Required reflection per grid frequency; weight 0 marks don't-care."""

    freqs: np.ndarray
    re: np.ndarray
    im: np.ndarray
    weight: np.ndarray

    def __post_init__(self):
        for name in ("freqs", "re", "im", "weight"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        n = len(self.freqs)
        if not (len(self.re) == len(self.im) == len(self.weight) == n):
            raise ValueError("target arrays must share one length")
        if not (self.weight >= 0).all():
            raise ValueError("weights must be nonnegative")
        if not (self.weight > 0).any():
            raise ValueError("target needs at least one nonzero weight")
        live = self.weight > 0
        if np.abs(self.re[live]).max() > 1.0 or np.abs(self.im[live]).max() > 1.0:
            raise ValueError("required values must lie in [-1, 1]")

    def to_json(self) -> dict:
        return {
            "freqs": self.freqs.tolist(),
            "re": self.re.tolist(),
            "im": self.im.tolist(),
            "weight": self.weight.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TargetSpec":
        return cls(
            np.asarray(obj["freqs"], dtype=float),
            np.asarray(obj["re"], dtype=float),
            np.asarray(obj["im"], dtype=float),
            np.asarray(obj["weight"], dtype=float),
        )


def _grid_index(f: float) -> int:
    """Nearest grid index; an exact half step rounds toward lower frequency."""
    idx = math.ceil((f - FREQ_START) / FREQ_STEP - 0.5)
    if not 0 <= idx < len(freq_grid()):
        raise ValueError(f"frequency {f} Hz is off the evaluation grid")
    return idx


def build_target(f_lo: float, f_hi: float, switch: SwitchModel = PIN_SWITCH,
                 anchors=(), w_out: float = 1.0) -> TargetSpec:
    """Solve the anti-phase condition over [f_lo, f_hi] on the grid.

    Each in-band grid frequency gets the solved required response at weight 1,
    the switch impedances being re-evaluated per frequency.  Anchors are
    explicit (f, re, im) rows at weight w_out, snapped to the nearest grid
    frequency; an anchor landing on an in-band row is refused rather than
    silently replacing the solved value.
    """
    if f_lo > f_hi:
        raise ValueError("f_lo must not exceed f_hi")
    freqs = freq_grid()
    in_band = (freqs >= f_lo) & (freqs <= f_hi)
    if not in_band.any() and not anchors:
        raise ValueError("band contains no grid frequency and no anchors given")

    re = np.zeros_like(freqs)
    im = np.zeros_like(freqs)
    weight = np.zeros_like(freqs)
    for k in np.flatnonzero(in_band):
        f = float(freqs[k])
        gl0 = nc.reflection_of_load(nc.switch_impedance(switch, 0, f))
        gl1 = nc.reflection_of_load(nc.switch_impedance(switch, 1, f))
        sol = nc.solve_target_s22(gl0, gl1)
        if not sol.converged:
            raise NoSolutionError(
                f"anti-phase condition unsolved at {f} Hz (residual {sol.residual:.3e})"
            )
        s22 = sol.a22 * complex(math.cos(sol.theta22), math.sin(sol.theta22))
        re[k], im[k], weight[k] = s22.real, s22.imag, 1.0
    for f, a_re, a_im in anchors:
        k = _grid_index(float(f))
        if in_band[k]:
            raise ValueError(
                f"anchor at {f} Hz snaps to in-band grid frequency {freqs[k]} Hz"
            )
        re[k], im[k], weight[k] = float(a_re), float(a_im), float(w_out)
    return TargetSpec(freqs, re, im, weight)


# ---------------------------------------------------------------------------
# fitness
# ---------------------------------------------------------------------------


def target_error(s22: np.ndarray, target: TargetSpec) -> np.ndarray:
    """Weighted mean of (|dRe| + |dIm|)/2 over nonzero-weight frequencies."""
    s22 = np.atleast_2d(np.asarray(s22))
    if s22.shape[1] != len(target.freqs):
        raise ValueError(f"response has {s22.shape[1]} points, target {len(target.freqs)}")
    err = 0.5 * (np.abs(s22.real - target.re) + np.abs(s22.imag - target.im))
    return (err * target.weight).sum(axis=1) / target.weight.sum()


def fitness_of(s22: np.ndarray, target: TargetSpec) -> np.ndarray:
    return 1.0 / (target_error(s22, target) + FITNESS_EPS)


# ---------------------------------------------------------------------------
# evaluators
# ---------------------------------------------------------------------------


def bits_to_grids(bits: np.ndarray) -> np.ndarray:
    """(k, 64) genome bits -> (k, 16, 16) mirrored boolean grids."""
    g8 = np.asarray(bits).reshape(-1, 8, 8).astype(bool)
    top = np.concatenate([g8, g8[:, :, ::-1]], axis=2)
    return np.concatenate([top, top[:, ::-1, :]], axis=1)


def oracle_evaluator(consts: OracleConstants | None = None,
                     geom: GeometryMeta | None = None):
    """Evaluator mapping (k, 64) genome bits to (k, 61) complex responses."""
    consts = consts or OracleConstants()
    geom = geom or GeometryMeta()

    def evaluate(bits: np.ndarray) -> np.ndarray:
        return response_batch(bits_to_grids(bits), consts, geom)

    return evaluate


def surrogate_evaluator(mlp):
    """Same contract as oracle_evaluator, backed by a trained network."""
    from .surrogate import predict_s22

    def evaluate(bits: np.ndarray) -> np.ndarray:
        return predict_s22(mlp, bits_to_u64(np.asarray(bits, dtype=np.uint8)))

    return evaluate


# ---------------------------------------------------------------------------
# genetic search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GAConfig:
    population: int = 1000
    generations: int = 300
    tournament: int = 4
    crossover_p: float = 0.5
    mutation_p: float = 1.0 / 64.0
    elitism: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be at least 2")
        if not 0 < self.crossover_p <= 1 or not 0 < self.mutation_p <= 1:
            raise ValueError("probabilities must lie in (0, 1]")
        if self.tournament < 1 or self.generations < 0:
            raise ValueError("tournament and generations must be positive")
        if not 0 <= self.elitism < self.population:
            raise ValueError("elitism must be smaller than the population")


@dataclass
class GaResult:
    best_word: int
    best_bits: np.ndarray
    best_fitness: float
    history_best: np.ndarray = field(repr=False)
    history_median: np.ndarray = field(repr=False)


def ga_run(cfg: GAConfig, evaluator, target: TargetSpec,
           seed_genomes=None) -> GaResult:
    """Tournament GA with elitism over 64-bit genomes, exactly reproducible.

    history_* hold one entry for the initial population and one per
    generation; elitism makes history_best nondecreasing.
    """
    rng = CounterRng(cfg.seed)
    pop = u64_to_bits(rng.u64(cfg.population))
    if seed_genomes is not None:
        planted = np.atleast_2d(np.asarray(seed_genomes, dtype=np.uint8))
        if planted.shape[0] > cfg.population or planted.shape[1] != 64:
            raise ValueError("seed genomes must be (k <= population, 64) bits")
        pop[: planted.shape[0]] = planted

    fit = fitness_of(evaluator(pop), target)
    hist_best = [float(fit.max())]
    hist_median = [float(np.median(fit))]

    n_children = cfg.population - cfg.elitism
    for _ in range(cfg.generations):
        order = np.argsort(-fit, kind="stable")
        elites = pop[order[: cfg.elitism]].copy()

        draws = rng.integers(n_children * 2 * cfg.tournament, cfg.population)
        contest = draws.reshape(n_children, 2, cfg.tournament)
        winners = contest[
            np.arange(n_children)[:, None], [0, 1], np.argmax(fit[contest], axis=2)
        ]
        take_a = rng.random(n_children * 64).reshape(n_children, 64) < cfg.crossover_p
        children = np.where(take_a, pop[winners[:, 0]], pop[winners[:, 1]])
        flips = rng.random(n_children * 64).reshape(n_children, 64) < cfg.mutation_p
        children = children ^ flips.astype(np.uint8)

        pop = np.concatenate([elites, children])
        fit = fitness_of(evaluator(pop), target)
        hist_best.append(float(fit.max()))
        hist_median.append(float(np.median(fit)))

    k = int(np.argmax(fit))
    return GaResult(
        best_word=int(bits_to_u64(pop[k : k + 1])[0]),
        best_bits=pop[k].copy(),
        best_fitness=float(fit[k]),
        history_best=np.array(hist_best),
        history_median=np.array(hist_median),
    )


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


@dataclass
class DesignReport:
    """Everything needed to judge a finished design against the model."""

    genome_word: int
    freqs: np.ndarray
    oracle_s22: np.ndarray
    gamma1_state0: np.ndarray
    gamma1_state1: np.ndarray
    loss0_db: np.ndarray
    loss1_db: np.ndarray
    phase_diff_deg: np.ndarray
    band_mask: np.ndarray
    band_segments: tuple[tuple[float, float], ...]
    predicted_s22: np.ndarray | None = None
    mismatch: np.ndarray | None = None
    history_best: np.ndarray | None = None
    history_median: np.ndarray | None = None

    @property
    def genome_hex(self) -> str:
        return f"{self.genome_word:016X}"


def _segments(freqs: np.ndarray, mask: np.ndarray) -> tuple[tuple[float, float], ...]:
    out = []
    start = None
    for k, ok in enumerate(mask):
        if ok and start is None:
            start = k
        elif not ok and start is not None:
            out.append((float(freqs[start]), float(freqs[k - 1])))
            start = None
    if start is not None:
        out.append((float(freqs[start]), float(freqs[-1])))
    return tuple(out)


def validate_design(genome_bits, switch: SwitchModel = PIN_SWITCH,
                    consts: OracleConstants | None = None,
                    geom: GeometryMeta | None = None,
                    predicted: np.ndarray | None = None,
                    history_best=None, history_median=None) -> DesignReport:
    """Re-evaluate a genome under the electrical model with the switch loaded.

    Per frequency the model response is split into magnitude and phase, the
    loaded reflection is computed for both switch states, and the operating
    band collects contiguous grid frequencies with the state phase difference
    within 45 degrees of anti-phase and both losses at most 1.5 dB.
    """
    bits = np.asarray(genome_bits, dtype=np.uint8).reshape(1, 64)
    freqs = freq_grid()
    s22 = response_batch(bits_to_grids(bits), consts, geom)[0]

    n = len(freqs)
    g0 = np.empty(n, dtype=complex)
    g1 = np.empty(n, dtype=complex)
    loss0 = np.empty(n)
    loss1 = np.empty(n)
    dphi = np.empty(n)
    for k, f in enumerate(freqs):
        a = float(np.abs(s22[k]))
        theta = float(np.angle(s22[k]))
        gl0 = nc.reflection_of_load(nc.switch_impedance(switch, 0, float(f)))
        gl1 = nc.reflection_of_load(nc.switch_impedance(switch, 1, float(f)))
        g0[k] = nc.gamma1_reduced(a, theta, gl0)
        g1[k] = nc.gamma1_reduced(a, theta, gl1)
        m = nc.coding_metrics(complex(g0[k]), complex(g1[k]))
        loss0[k], loss1[k], dphi[k] = m.loss0_db, m.loss1_db, m.phase_diff_deg

    mask = (
        (np.abs(dphi - 180.0) <= PHASE_WINDOW_DEG)
        & (loss0 <= LOSS_LIMIT_DB)
        & (loss1 <= LOSS_LIMIT_DB)
    )
    mismatch = None
    if predicted is not None:
        predicted = np.asarray(predicted)
        mismatch = np.abs(predicted - s22) > MISMATCH_THRESHOLD

    return DesignReport(
        genome_word=int(bits_to_u64(bits)[0]),
        freqs=freqs,
        oracle_s22=s22,
        gamma1_state0=g0,
        gamma1_state1=g1,
        loss0_db=loss0,
        loss1_db=loss1,
        phase_diff_deg=dphi,
        band_mask=mask,
        band_segments=_segments(freqs, mask),
        predicted_s22=predicted,
        mismatch=mismatch,
        history_best=None if history_best is None else np.asarray(history_best),
        history_median=None if history_median is None else np.asarray(history_median),
    )


def report_csv(report: DesignReport, target: TargetSpec | None = None) -> str:
    """Spectra table: frequency, target, predicted, model, loaded states."""
    cols = ["f_hz", "target_re", "target_im", "pred_re", "pred_im",
            "oracle_re", "oracle_im", "g1_state0_re", "g1_state0_im",
            "g1_state1_re", "g1_state1_im", "loss0_db", "loss1_db",
            "phase_diff_deg", "in_band"]
    lines = [",".join(cols)]
    for k, f in enumerate(report.freqs):
        t_re = t_im = ""
        if target is not None and target.weight[k] > 0:
            t_re, t_im = f"{target.re[k]:.6f}", f"{target.im[k]:.6f}"
        p_re = p_im = ""
        if report.predicted_s22 is not None:
            p_re = f"{report.predicted_s22[k].real:.6f}"
            p_im = f"{report.predicted_s22[k].imag:.6f}"
        lines.append(",".join([
            f"{f:.0f}", t_re, t_im, p_re, p_im,
            f"{report.oracle_s22[k].real:.6f}", f"{report.oracle_s22[k].imag:.6f}",
            f"{report.gamma1_state0[k].real:.6f}", f"{report.gamma1_state0[k].imag:.6f}",
            f"{report.gamma1_state1[k].real:.6f}", f"{report.gamma1_state1[k].imag:.6f}",
            f"{report.loss0_db[k]:.4f}", f"{report.loss1_db[k]:.4f}",
            f"{report.phase_diff_deg[k]:.3f}", str(int(report.band_mask[k])),
        ]))
    return "\n".join(lines) + "\n"


def report_summary(report: DesignReport) -> str:
    lines = [f"genome {report.genome_hex}"]
    if report.band_segments:
        for lo, hi in report.band_segments:
            lines.append(f"operating band {lo / 1e9:.1f}-{hi / 1e9:.1f} GHz")
    else:
        lines.append("operating band empty")
    if report.history_best is not None and len(report.history_best):
        lines.append(f"final fitness {report.history_best[-1]:.3f}")
    return "\n".join(lines) + "\n"
