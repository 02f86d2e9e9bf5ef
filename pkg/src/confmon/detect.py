"""One-class detectors over diagnoses rows.

All detectors train on normal traces only and share the same protocol: learn
on the training rows, score the validation rows, and set the decision
threshold at a configurable percentile (default 95) of those validation
scores. A row is classified anomalous when its score is strictly above the
threshold. Higher scores mean more anomalous.

  ft      score = 1 - fitness; no learned state beyond the threshold
  dbscan  density model: core points of the training rows; score = Euclidean
          distance to the nearest core point
  ae      autoencoder: small tanh multilayer perceptron trained to reconstruct
          training rows; score = mean squared reconstruction error

Feature rows are min-max normalized per column with statistics learned on the
training rows (a constant column maps its training values to 0, and deviating
values keep their offset), then clamped to [-0.5, 1.5]. ft ignores the
normalization and reads the fitness column directly.
"""

from __future__ import annotations

import math

import numpy as np

from .diagnoses import DiagnosesMatrix, DiagRow
from .errors import DetectError

DETECTOR_KINDS = ("ft", "dbscan", "ae")

_MAGIC = "confmon-detector v1"

DBSCAN_MIN_PTS = 4
DBSCAN_EPS_QUANTILE = 90.0
AE_LEARNING_RATE = 1e-3
AE_EPOCHS = 500
MIN_TRAIN_ROWS = 5


class Detector:
    """Trained detector: kind, feature schema, normalization, model state,
    and the decision threshold."""

    def __init__(self, kind, columns, mins, maxs, threshold, quantile, seed, model_id,
                 state=None):
        self.kind = kind
        self.columns = tuple(columns)
        self.mins = np.asarray(mins, dtype=float)
        self.maxs = np.asarray(maxs, dtype=float)
        self.threshold = float(threshold)
        self.quantile = float(quantile)
        self.seed = int(seed)
        self.model_id = model_id
        self.state = state or {}


def _normalize(mins: np.ndarray, maxs: np.ndarray, x: np.ndarray) -> np.ndarray:
    ranges = np.where(maxs > mins, maxs - mins, 1.0)
    return np.clip((x - mins) / ranges, -0.5, 1.5)


def _row_vector(det: Detector, row: DiagRow) -> np.ndarray:
    expected = set(det.columns) - {"fitness"}
    if set(row.counts) != expected:
        raise DetectError(
            f"row columns {sorted(row.counts)} do not match detector columns {sorted(expected)}")
    return np.asarray(row.vector(det.columns), dtype=float)


def default_ae_layers(d: int) -> tuple[int, ...]:
    """Symmetric bottleneck: d, d/2, d/4 (min 2), d/2, d, halves rounded up."""
    half = math.ceil(d / 2)
    quarter = max(2, math.ceil(d / 4))
    return (d, half, quarter, half, d)


# -- autoencoder ------------------------------------------------------------


def _ae_init(layers, rng) -> tuple[list, list]:
    weights = []
    biases = []
    for fan_in, fan_out in zip(layers[:-1], layers[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def _ae_forward(weights, biases, x: np.ndarray) -> list:
    """Returns the list of layer activations, input first, output last.
    Hidden layers apply tanh; the output layer is linear."""
    acts = [x]
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        z = acts[-1] @ w + b
        acts.append(z if i == last else np.tanh(z))
    return acts


def _ae_loss_and_grads(weights, biases, x: np.ndarray):
    """Mean squared reconstruction error and its gradients w.r.t. all
    weights and biases (loss averaged over every matrix entry)."""
    acts = _ae_forward(weights, biases, x)
    out = acts[-1]
    diff = out - x
    loss = float(np.mean(diff * diff))
    delta = 2.0 * diff / diff.size
    grads_w = [None] * len(weights)
    grads_b = [None] * len(biases)
    for i in range(len(weights) - 1, -1, -1):
        grads_w[i] = acts[i].T @ delta
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ weights[i].T) * (1.0 - acts[i] * acts[i])
    return loss, grads_w, grads_b


def _ae_errors(weights, biases, x: np.ndarray) -> np.ndarray:
    out = _ae_forward(weights, biases, x)[-1]
    return np.mean((out - x) ** 2, axis=1)


def _train_ae(x: np.ndarray, layers, lr: float, epochs: int, seed: int):
    rng = np.random.default_rng(seed)
    weights, biases = _ae_init(layers, rng)
    mw = [np.zeros_like(w) for w in weights]
    vw = [np.zeros_like(w) for w in weights]
    mb = [np.zeros_like(b) for b in biases]
    vb = [np.zeros_like(b) for b in biases]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    history = []
    for step in range(1, epochs + 1):
        loss, gw, gb = _ae_loss_and_grads(weights, biases, x)
        if not math.isfinite(loss):
            raise DetectError(
                "autoencoder training diverged (non-finite loss); lower the learning rate")
        history.append(loss)
        c1 = 1.0 - beta1 ** step
        c2 = 1.0 - beta2 ** step
        for i in range(len(weights)):
            mw[i] = beta1 * mw[i] + (1 - beta1) * gw[i]
            vw[i] = beta2 * vw[i] + (1 - beta2) * gw[i] * gw[i]
            weights[i] = weights[i] - lr * (mw[i] / c1) / (np.sqrt(vw[i] / c2) + eps)
            mb[i] = beta1 * mb[i] + (1 - beta1) * gb[i]
            vb[i] = beta2 * vb[i] + (1 - beta2) * gb[i] * gb[i]
            biases[i] = biases[i] - lr * (mb[i] / c1) / (np.sqrt(vb[i] / c2) + eps)
    return weights, biases, tuple(history)


def ae_gradient_check(layer_sizes, seed: int = 0, step: float = 1e-5) -> float:
    """Max relative error between analytic and central finite-difference
    gradients on random parameters and inputs. Small (< 1e-4) when the
    backpropagation is implemented correctly."""
    layers = tuple(int(s) for s in layer_sizes)
    if len(layers) < 2:
        raise DetectError("layer_sizes needs at least input and output sizes")
    rng = np.random.default_rng(seed)
    weights, biases = _ae_init(layers, rng)
    x = rng.uniform(0.0, 1.0, size=(3, layers[0]))
    _, gw, gb = _ae_loss_and_grads(weights, biases, x)

    def loss_at() -> float:
        return _ae_loss_and_grads(weights, biases, x)[0]

    worst = 0.0
    for params, grads in ((weights, gw), (biases, gb)):
        for arr, grad in zip(params, grads):
            flat = arr.reshape(-1)
            gflat = grad.reshape(-1)
            for j in range(flat.size):
                orig = flat[j]
                flat[j] = orig + step
                hi = loss_at()
                flat[j] = orig - step
                lo = loss_at()
                flat[j] = orig
                fd = (hi - lo) / (2.0 * step)
                rel = abs(gflat[j] - fd) / max(abs(gflat[j]), abs(fd), 1e-6)
                worst = max(worst, rel)
    return worst


# -- dbscan -----------------------------------------------------------------


def _pairwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = a[:, None, :] - b[None, :, :]
    return np.sqrt((d * d).sum(axis=2))


def _fit_dbscan(x: np.ndarray, min_pts: int, eps):
    n = x.shape[0]
    dist = _pairwise(x, x)
    if eps is None:
        if n <= min_pts:
            raise DetectError(
                f"need more than {min_pts} training rows to estimate epsilon, got {n}")
        # distance to the min_pts-th nearest other row, 90th percentile
        kdist = np.sort(dist + np.diag([np.inf] * n), axis=1)[:, min_pts - 1]
        eps = float(np.percentile(kdist, DBSCAN_EPS_QUANTILE))
    neighbor_counts = (dist <= eps).sum(axis=1)  # self included
    core_mask = neighbor_counts >= min_pts
    if not core_mask.any():
        raise DetectError(
            f"dbscan found no core points (eps={eps:g}, min_pts={min_pts}); increase epsilon")
    cores = x[core_mask]
    # cluster count: connected components of the core-to-core eps graph
    core_dist = dist[np.ix_(core_mask, core_mask)]
    m = cores.shape[0]
    labels = [-1] * m
    n_clusters = 0
    for i in range(m):
        if labels[i] != -1:
            continue
        stack = [i]
        labels[i] = n_clusters
        while stack:
            cur = stack.pop()
            for j in np.nonzero(core_dist[cur] <= eps)[0]:
                if labels[j] == -1:
                    labels[j] = n_clusters
                    stack.append(j)
        n_clusters += 1
    return float(eps), cores, n_clusters


# -- training / scoring ------------------------------------------------------


def train(kind: str, train_d: DiagnosesMatrix, val_d: DiagnosesMatrix,
          params: dict | None = None, *, quantile: float = 95.0,
          seed: int = 0) -> Detector:
    """Fit a detector on training diagnoses and set its threshold at the
    given percentile of the validation scores."""
    if kind not in DETECTOR_KINDS:
        raise DetectError(f"unknown detector kind {kind!r}; expected one of {DETECTOR_KINDS}")
    if train_d.columns != val_d.columns:
        raise DetectError("training and validation diagnoses have different columns")
    if len(train_d) < MIN_TRAIN_ROWS:
        raise DetectError(f"need at least {MIN_TRAIN_ROWS} training rows, got {len(train_d)}")
    if len(val_d) == 0:
        raise DetectError("validation diagnoses are empty")
    if not 0.0 <= quantile <= 100.0:
        raise DetectError(f"quantile must be in [0, 100], got {quantile}")
    params = dict(params or {})

    x_train = train_d.to_array()
    mins = x_train.min(axis=0)
    maxs = x_train.max(axis=0)

    state: dict = {}
    if kind == "dbscan":
        min_pts = int(params.pop("min_pts", DBSCAN_MIN_PTS))
        eps = params.pop("eps", None)
        xn = _normalize(mins, maxs, x_train)
        eps, cores, n_clusters = _fit_dbscan(xn, min_pts, eps)
        state = {"eps": eps, "min_pts": min_pts, "cores": cores, "n_clusters": n_clusters}
    elif kind == "ae":
        layers = tuple(params.pop("layers", default_ae_layers(len(train_d.columns))))
        if layers[0] != len(train_d.columns) or layers[-1] != len(train_d.columns):
            raise DetectError(f"autoencoder layers {layers} do not match "
                              f"{len(train_d.columns)} feature columns")
        lr = float(params.pop("lr", AE_LEARNING_RATE))
        epochs = int(params.pop("epochs", AE_EPOCHS))
        xn = _normalize(mins, maxs, x_train)
        weights, biases, history = _train_ae(xn, layers, lr, epochs, seed)
        state = {"layers": layers, "weights": weights, "biases": biases,
                 "loss_history": history}
    if params:
        raise DetectError(f"unknown {kind} parameters: {sorted(params)}")

    det = Detector(kind, train_d.columns, mins, maxs, 0.0, quantile, seed,
                   train_d.model_id, state)
    val_scores = np.array([score(det, row) for row in val_d.rows])
    det.threshold = float(np.percentile(val_scores, quantile))
    return det


def score(det: Detector, row: DiagRow) -> float:
    """Anomaly score of a diagnoses row; higher means more anomalous."""
    if det.kind == "ft":
        fit = float(_row_vector(det, row)[det.columns.index("fitness")])
        return 1.0 - fit
    vec = _normalize(det.mins, det.maxs, _row_vector(det, row))
    if det.kind == "dbscan":
        diffs = det.state["cores"] - vec
        return float(np.sqrt((diffs * diffs).sum(axis=1)).min())
    errs = _ae_errors(det.state["weights"], det.state["biases"], vec[None, :])
    return float(errs[0])


def classify(det: Detector, row: DiagRow) -> str:
    """"anomalous" when the score is strictly above the threshold."""
    return "anomalous" if score(det, row) > det.threshold else "normal"


def score_matrix(det: Detector, diag: DiagnosesMatrix) -> np.ndarray:
    if diag.columns != det.columns:
        raise DetectError("diagnoses columns do not match detector columns")
    return np.array([score(det, row) for row in diag.rows])


# -- serialization -----------------------------------------------------------


def _fmt_floats(values) -> str:
    return ",".join(repr(float(v)) for v in np.asarray(values).reshape(-1))


def _parse_floats(text: str) -> np.ndarray:
    if not text:
        return np.array([])
    return np.array([float(v) for v in text.split(",")])


def save_detector(det: Detector) -> str:
    """Text serialization; load_detector restores a detector with identical
    scores (float values are written with full round-trip precision)."""
    lines = [_MAGIC,
             f"kind={det.kind}",
             f"model={det.model_id}",
             f"seed={det.seed}",
             f"quantile={repr(det.quantile)}",
             f"threshold={repr(det.threshold)}",
             f"columns={','.join(det.columns)}",
             f"mins={_fmt_floats(det.mins)}",
             f"maxs={_fmt_floats(det.maxs)}"]
    if det.kind == "dbscan":
        cores = det.state["cores"]
        lines.append(f"eps={repr(float(det.state['eps']))}")
        lines.append(f"min_pts={det.state['min_pts']}")
        lines.append(f"n_clusters={det.state['n_clusters']}")
        lines.append(f"cores_shape={cores.shape[0]}x{cores.shape[1]}")
        for i in range(cores.shape[0]):
            lines.append(f"core{i}={_fmt_floats(cores[i])}")
    elif det.kind == "ae":
        lines.append(f"layers={','.join(str(s) for s in det.state['layers'])}")
        for i, (w, b) in enumerate(zip(det.state["weights"], det.state["biases"])):
            lines.append(f"w{i}={_fmt_floats(w)}")
            lines.append(f"b{i}={_fmt_floats(b)}")
    return "\n".join(lines) + "\n"


def load_detector(text: str) -> Detector:
    """Parse a detector saved by save_detector. Rejects unknown versions and
    incomplete files."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != _MAGIC:
        raise DetectError(f"not a detector file (expected header {_MAGIC!r})")
    fields: dict[str, str] = {}
    for ln in lines[1:]:
        if "=" not in ln:
            raise DetectError(f"malformed detector line: {ln!r}")
        k, v = ln.split("=", 1)
        fields[k] = v
    try:
        kind = fields["kind"]
        if kind not in DETECTOR_KINDS:
            raise DetectError(f"unknown detector kind {kind!r}")
        columns = tuple(fields["columns"].split(","))
        det = Detector(kind, columns,
                       _parse_floats(fields["mins"]), _parse_floats(fields["maxs"]),
                       float(fields["threshold"]), float(fields["quantile"]),
                       int(fields["seed"]), fields["model"])
        if len(det.mins) != len(columns) or len(det.maxs) != len(columns):
            raise DetectError("normalization vectors do not match the column count")
        if kind == "dbscan":
            rows, cols = (int(v) for v in fields["cores_shape"].split("x"))
            cores = np.array([_parse_floats(fields[f"core{i}"]) for i in range(rows)])
            cores = cores.reshape(rows, cols)
            det.state = {"eps": float(fields["eps"]), "min_pts": int(fields["min_pts"]),
                         "n_clusters": int(fields["n_clusters"]), "cores": cores}
        elif kind == "ae":
            layers = tuple(int(s) for s in fields["layers"].split(","))
            weights = []
            biases = []
            for i, (fan_in, fan_out) in enumerate(zip(layers[:-1], layers[1:])):
                weights.append(_parse_floats(fields[f"w{i}"]).reshape(fan_in, fan_out))
                biases.append(_parse_floats(fields[f"b{i}"]))
            det.state = {"layers": layers, "weights": weights, "biases": biases,
                         "loss_history": ()}
    except KeyError as exc:
        raise DetectError(f"detector file is missing field {exc.args[0]!r}") from exc
    except ValueError as exc:
        raise DetectError(f"detector file has a malformed value: {exc}") from exc
    return det
