"""Dense ReLU surrogate of the electrical model, float64 numpy throughout.

The network maps the 64 genome bits (encoded as -1/+1) to the 122 response
values, laid out as the 61 real parts followed by the 61 imaginary parts.
Training is plain minibatch Adam on mean absolute error with a
reduce-on-plateau schedule; every random draw (init, shuffles, coordinate
picks) comes from CounterRng so runs are exactly repeatable.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .dataset import RESP_WIDTH
from .oracle import N_FREQ
from .rng import CounterRng, u64_to_bits

DEFAULT_HIDDEN = (256, 256, 256)
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

CHECKPOINT_FORMAT = "mlp-f64"


@dataclass
class Mlp:
    """Fully connected ReLU net; weights[k] has shape (fan_in, fan_out)."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple([self.weights[0].shape[0]] + [w.shape[1] for w in self.weights])

    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "Mlp":
        return Mlp([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def forward(self, x: np.ndarray) -> list[np.ndarray]:
        """All layer activations, input first, linear output last."""
        acts = [np.asarray(x, dtype=np.float64)]
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = acts[-1] @ w + b
            acts.append(z if k == last else np.maximum(z, 0.0))
        return acts

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[-1]

    def loss_and_grads(self, x: np.ndarray, y: np.ndarray):
        """Mean absolute error and its gradients for every weight and bias."""
        acts = self.forward(x)
        err = acts[-1] - y
        loss = float(np.abs(err).mean())
        delta = np.sign(err) / err.size
        gws, gbs = [None] * len(self.weights), [None] * len(self.biases)
        for k in range(len(self.weights) - 1, -1, -1):
            gws[k] = acts[k].T @ delta
            gbs[k] = delta.sum(axis=0)
            if k:
                delta = (delta @ self.weights[k].T) * (acts[k] > 0.0)
        return loss, gws, gbs


def init_mlp(seed: int, hidden: tuple[int, ...] = DEFAULT_HIDDEN,
             n_in: int = 64, n_out: int = RESP_WIDTH) -> Mlp:
    """He-uniform weights, zero biases, drawn layer by layer from one seed."""
    sizes = (n_in, *hidden, n_out)
    rng = CounterRng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        bound = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(fan_in * fan_out, -bound, bound).reshape(fan_in, fan_out))
        biases.append(np.zeros(fan_out))
    return Mlp(weights, biases)


# ---------------------------------------------------------------------------
# data plumbing
# ---------------------------------------------------------------------------


def encode_bits(words: np.ndarray) -> np.ndarray:
    """Genome words -> (n, 64) float64 inputs in {-1, +1}."""
    bits = u64_to_bits(np.asarray(words, dtype=np.uint64))
    return bits.astype(np.float64) * 2.0 - 1.0


def targets_from_resp(resp: np.ndarray) -> np.ndarray:
    """Interleaved (n, 122) records -> network layout (61 Re then 61 Im)."""
    resp = np.asarray(resp)
    return np.concatenate([resp[:, 0::2], resp[:, 1::2]], axis=1)


def records_to_xy(records: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return encode_bits(records["genome"]), targets_from_resp(records["resp"])


def predict_s22(mlp: Mlp, words: np.ndarray, batch: int = 4096) -> np.ndarray:
    """Genome words -> (n, 61) complex response under the surrogate."""
    x = encode_bits(words)
    outs = [mlp.predict(x[i : i + batch]) for i in range(0, len(x), batch)]
    out = np.concatenate(outs) if outs else np.empty((0, RESP_WIDTH))
    return out[:, :N_FREQ] + 1j * out[:, N_FREQ:]


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


@dataclass
class TrainResult:
    best_val_mae: float
    best_epoch: int
    epochs_run: int
    stop_reason: str
    history: list[tuple[int, float, float, float]] = field(repr=False, default_factory=list)


class _Adam:
    def __init__(self, mlp: Mlp):
        self.m = [np.zeros_like(w) for w in mlp.weights] + [np.zeros_like(b) for b in mlp.biases]
        self.v = [np.zeros_like(p) for p in self.m]
        self.t = 0

    def step(self, mlp: Mlp, gws, gbs, lr: float):
        self.t += 1
        params = mlp.weights + mlp.biases
        grads = gws + gbs
        c1 = 1.0 - ADAM_BETA1**self.t
        c2 = 1.0 - ADAM_BETA2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * g * g
            p -= lr * (m / c1) / (np.sqrt(v / c2) + ADAM_EPS)


def mae(mlp: Mlp, x: np.ndarray, y: np.ndarray, batch: int = 8192) -> float:
    total = 0.0
    for i in range(0, len(x), batch):
        xb, yb = x[i : i + batch], y[i : i + batch]
        total += float(np.abs(mlp.predict(xb) - yb).sum())
    return total / y.size


def train(mlp: Mlp, x_train: np.ndarray, y_train: np.ndarray,
          x_val: np.ndarray, y_val: np.ndarray, *, seed: int,
          batch_size: int = 64, lr0: float = 1e-3, max_epochs: int = 150,
          patience: int = 10, min_delta: float = 1e-4, lr_drops: int = 2,
          log=None) -> TrainResult:
    """Adam + reduce-on-plateau, in place on `mlp`.

    Plateau events fire when the best validation error has not improved by
    min_delta for `patience` straight epochs; the first `lr_drops` events
    divide the rate by 10, the next one stops training.  The weights left in
    `mlp` are the best-validation ones, not the last ones.
    """
    rng = CounterRng(seed)
    opt = _Adam(mlp)
    best = Mlp([w.copy() for w in mlp.weights], [b.copy() for b in mlp.biases])
    best_val = np.inf
    best_epoch = 0
    lr = lr0
    bad = 0
    events = 0
    history: list[tuple[int, float, float, float]] = []
    stop_reason = "max_epochs"

    n = len(x_train)
    epochs_run = 0
    for epoch in range(1, max_epochs + 1):
        epochs_run = epoch
        order = rng.permutation(n)
        running = 0.0
        for i in range(0, n, batch_size):
            idx = order[i : i + batch_size]
            loss, gws, gbs = mlp.loss_and_grads(x_train[idx], y_train[idx])
            opt.step(mlp, gws, gbs, lr)
            running += loss * len(idx)
        train_mae = running / n
        val_mae = mae(mlp, x_val, y_val)
        history.append((epoch, train_mae, val_mae, lr))
        if log is not None:
            log(f"epoch {epoch:4d}  train {train_mae:.5f}  val {val_mae:.5f}  lr {lr:g}")

        if val_mae < best_val - min_delta:
            best_val = val_mae
            best_epoch = epoch
            for bw, w in zip(best.weights, mlp.weights):
                np.copyto(bw, w)
            for bb, b in zip(best.biases, mlp.biases):
                np.copyto(bb, b)
            bad = 0
        else:
            bad += 1
            if bad >= patience:
                events += 1
                bad = 0
                if events > lr_drops:
                    stop_reason = "plateau"
                    break
                lr /= 10.0

    for w, bw in zip(mlp.weights, best.weights):
        np.copyto(w, bw)
    for b, bb in zip(mlp.biases, best.biases):
        np.copyto(b, bb)
    if not np.isfinite(best_val):
        best_val = history[-1][2] if history else float("nan")
        best_epoch = epochs_run
    return TrainResult(float(best_val), best_epoch, epochs_run, stop_reason, history)


def save_history(path: str, history) -> None:
    with open(path, "w") as fh:
        fh.write("epoch,train_mae,val_mae,lr\n")
        for epoch, tr, va, lr in history:
            fh.write(f"{epoch},{tr:.8f},{va:.8f},{lr:g}\n")


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def save_checkpoint(path: str, mlp: Mlp, meta: dict | None = None) -> None:
    """One JSON line (format, sizes, meta), then per layer the raw little
    endian float64 weight block followed by the bias block."""
    header = {
        "format": CHECKPOINT_FORMAT,
        "version": 1,
        "sizes": list(mlp.sizes),
        "meta": meta or {},
    }
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        for w, b in zip(mlp.weights, mlp.biases):
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())
    os.replace(tmp, path)


def load_checkpoint(path: str) -> tuple[Mlp, dict]:
    with open(path, "rb") as fh:
        line = fh.readline()
        body = fh.read()
    try:
        header = json.loads(line.decode())
    except ValueError as exc:
        raise ValueError(f"{path}: not a checkpoint file") from exc
    if header.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: unknown checkpoint format {header.get('format')!r}")
    sizes = header["sizes"]
    weights, biases = [], []
    off = 0
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        nw, nb = fan_in * fan_out, fan_out
        need = (nw + nb) * 8
        if off + need > len(body):
            raise ValueError(f"{path}: checkpoint truncated")
        weights.append(np.frombuffer(body, "<f8", nw, off).reshape(fan_in, fan_out).copy())
        off += nw * 8
        biases.append(np.frombuffer(body, "<f8", nb, off).copy())
        off += nb * 8
    if off != len(body):
        raise ValueError(f"{path}: {len(body) - off} trailing bytes in checkpoint")
    return Mlp(weights, biases), header.get("meta", {})


# ---------------------------------------------------------------------------
# gradient verification
# ---------------------------------------------------------------------------


def grad_check(mlp: Mlp, x: np.ndarray, y: np.ndarray, *, n_coords: int = 120,
               eps: float = 1e-5, seed: int = 0,
               grad_fn=None) -> tuple[float, int, int]:
    """Central-difference audit of the analytic gradient.

    Checks n_coords randomly chosen weight/bias coordinates and returns
    (max relative error, checked, skipped).  A coordinate is skipped when the
    +/- eps evaluations disagree on any ReLU gate or error sign, since the
    difference quotient straddles a kink there and says nothing about the
    gradient.  `grad_fn(mlp, x, y) -> (loss, gws, gbs)` substitutes the
    gradient implementation under audit; default is the network's own.
    """
    loss_grads = grad_fn or (lambda m, a, b: m.loss_and_grads(a, b))
    _, gws, gbs = loss_grads(mlp, x, y)
    analytic = gws + gbs
    params = mlp.weights + mlp.biases

    def signature_and_loss(pert_k, pert_idx, delta):
        flat = params[pert_k].reshape(-1)
        keep = flat[pert_idx]
        flat[pert_idx] = keep + delta
        acts = mlp.forward(x)
        flat[pert_idx] = keep
        err = acts[-1] - y
        gates = [a > 0.0 for a in acts[1:-1]]
        return float(np.abs(err).mean()), gates, np.sign(err)

    rng = CounterRng(seed)
    sizes = np.array([p.size for p in params])
    cum = np.cumsum(sizes)
    picks = rng.integers(n_coords, int(cum[-1]))

    max_rel = 0.0
    checked = skipped = 0
    for flat_idx in picks:
        k = int(np.searchsorted(cum, flat_idx, side="right"))
        idx = int(flat_idx - (cum[k - 1] if k else 0))
        lp, gates_p, signs_p = signature_and_loss(k, idx, +eps)
        lm, gates_m, signs_m = signature_and_loss(k, idx, -eps)
        same = np.array_equal(signs_p, signs_m) and all(
            np.array_equal(a, b) for a, b in zip(gates_p, gates_m)
        )
        if not same:
            skipped += 1
            continue
        fd = (lp - lm) / (2.0 * eps)
        ga = float(analytic[k].reshape(-1)[idx])
        rel = abs(ga - fd) / max(abs(ga), abs(fd), 1e-12)
        max_rel = max(max_rel, rel)
        checked += 1
    return max_rel, checked, skipped
