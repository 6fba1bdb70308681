"""The three CNNs: declarative specs, construction, training, evaluation.

Every architecture is a chain of pooling blocks followed by a dense
head. A block is convs (each Conv -> ReLU), then MaxPool -> BatchNorm ->
Dropout(0.25). Convolutions are distributed front-loaded across blocks,
and filter counts double every cascaded pair starting at 32 (so a
six-conv model runs 32,32,64,64,128,128). The head is
Flatten -> Dense(256) -> ReLU -> Dropout(0.5) -> Dense(n), with Softmax
on classification heads only.
"""

from dataclasses import dataclass, replace

import numpy as np

from .data import AGE_MAX, AGE_MIN
from .metrics import classification_metrics, regression_metrics
from .nn import layers as L
from .nn import losses, ops, optim

INPUT_SIZE = 48
BLOCK_DROPOUT = 0.25
HEAD_DROPOUT = 0.5
HEAD_WIDTH = 256
BASE_FILTERS = 32

EMOTION_CLASSES = 4
ETHNICITY_CLASSES = 5


class ArchitectureError(ValueError):
    """Layer sequence cannot produce a legal network on this input size."""


class TrainingError(ValueError):
    """Dataset unusable for this model (empty, or labels mismatch the head)."""


@dataclass(frozen=True)
class ModelSpec:
    name: str
    n_conv: int
    n_pool: int
    head: str               # "classification" | "regression"
    n_classes: int = None   # classification only
    loss: str = "cce"       # "cce" | "mse"
    input_size: int = INPUT_SIZE

    def __post_init__(self):
        if self.head not in ("classification", "regression"):
            raise ValueError(f"unknown head {self.head!r}")
        if self.head == "classification":
            if not self.n_classes or self.n_classes < 2:
                raise ValueError("classification head needs n_classes >= 2")
            if self.loss != "cce":
                raise ValueError("classification head requires cce loss")
        else:
            if self.loss != "mse":
                raise ValueError("regression head requires mse loss")
        if self.n_conv < 1 or self.n_pool < 1:
            raise ValueError("need at least one conv and one pool layer")


CANONICAL_SPECS = {
    "CNN-Emotion": ModelSpec("CNN-Emotion", 6, 3, "classification", EMOTION_CLASSES, "cce"),
    "CNN-Age": ModelSpec("CNN-Age", 6, 4, "regression", None, "mse"),
    "CNN-Ethnicity": ModelSpec("CNN-Ethnicity", 3, 3, "classification", ETHNICITY_CLASSES, "cce"),
}


def make_spec(name, n_conv=None, n_pool=None):
    """Canonical spec for a model name, optionally with sweep overrides."""
    if name not in CANONICAL_SPECS:
        raise ValueError(f"unknown model name {name!r}; expected one of {sorted(CANONICAL_SPECS)}")
    spec = CANONICAL_SPECS[name]
    if n_conv is not None or n_pool is not None:
        spec = replace(
            spec,
            n_conv=spec.n_conv if n_conv is None else n_conv,
            n_pool=spec.n_pool if n_pool is None else n_pool,
        )
    return spec


def conv_distribution(n_conv, n_pool):
    """Convs per block, front-loaded: (6,4) -> [2,2,1,1]."""
    base, extra = divmod(n_conv, n_pool)
    return [base + (1 if i < extra else 0) for i in range(n_pool)]


def conv_filters(n_conv):
    """Filter count by conv index: doubles every cascaded pair from 32."""
    return [BASE_FILTERS * 2 ** (i // 2) for i in range(n_conv)]


def plan_layers(spec):
    """ModelSpec -> ordered list of layer descriptor dicts.

    Raises ArchitectureError when pooling would drive the spatial size
    below 1 (on 48x48 that caps the pool count at 5).
    """
    plan = []
    filters = conv_filters(spec.n_conv)
    per_block = conv_distribution(spec.n_conv, spec.n_pool)
    size = spec.input_size
    channels = 1
    conv_idx = 0
    for block_convs in per_block:
        for _ in range(block_convs):
            plan.append({"kind": "conv2d", "out_channels": filters[conv_idx]})
            plan.append({"kind": "relu"})
            channels = filters[conv_idx]
            conv_idx += 1
        if size // 2 < 1:
            raise ArchitectureError(
                f"{spec.n_pool} pool layers reduce a {spec.input_size}x{spec.input_size} "
                f"input below 1x1"
            )
        size //= 2
        plan.append({"kind": "maxpool2d"})
        plan.append({"kind": "batchnorm2d", "channels": channels})
        plan.append({"kind": "dropout", "rate": BLOCK_DROPOUT})
    plan.append({"kind": "flatten"})
    plan.append({"kind": "dense", "out_features": HEAD_WIDTH, "in_features": channels * size * size})
    plan.append({"kind": "relu"})
    plan.append({"kind": "dropout", "rate": HEAD_DROPOUT})
    out = spec.n_classes if spec.head == "classification" else 1
    plan.append({"kind": "dense", "out_features": out, "in_features": HEAD_WIDTH})
    if spec.head == "classification":
        plan.append({"kind": "softmax"})
    return plan


def _build_layer(desc, in_channels, rng, dtype):
    kind = desc["kind"]
    if kind == "conv2d":
        return L.Conv2D(in_channels, desc["out_channels"], rng, dtype)
    if kind == "relu":
        return L.ReLU()
    if kind == "maxpool2d":
        return L.MaxPool2D()
    if kind == "batchnorm2d":
        return L.BatchNorm2D(desc["channels"], dtype=dtype)
    if kind == "dropout":
        return L.Dropout(desc["rate"])
    if kind == "flatten":
        return L.Flatten()
    if kind == "dense":
        return L.Dense(desc["in_features"], desc["out_features"], rng, dtype)
    if kind == "softmax":
        return L.Softmax()
    raise ValueError(f"unknown layer kind {kind!r}")


def _fold_seed(*parts):
    """Deterministic child seed from integer parts."""
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


class Model:
    """A built network: spec, layer stack, forward/backward, prediction."""

    def __init__(self, spec, rng_seed, dtype=np.float32):
        self.spec = spec
        self.rng_seed = rng_seed
        plan = plan_layers(spec)
        self.layers = []
        channels = 1
        for i, desc in enumerate(plan):
            rng = np.random.default_rng(_fold_seed(rng_seed, i))
            layer = _build_layer(desc, channels, rng, dtype)
            if desc["kind"] == "conv2d":
                channels = desc["out_channels"]
            self.layers.append(layer)
        self.plan = plan

    def forward(self, x, train=False, step_seed=None):
        for i, layer in enumerate(self.layers):
            salt = None if step_seed is None else _fold_seed(step_seed, i)
            x = layer.forward(x, train=train, step_seed=salt)
        return x

    def backward(self, d_out):
        for i in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[i]
            if i == 0 and isinstance(layer, L.Conv2D):
                # nothing consumes the gradient w.r.t. the image itself
                layer.backward(d_out, need_input_grad=False)
                return None
            d_out = layer.backward(d_out)
        return d_out

    def parameters(self):
        out = {}
        for i, layer in enumerate(self.layers):
            for name, arr in layer.params.items():
                out[f"{i}.{name}"] = arr
        return out

    def gradients(self):
        out = {}
        for i, layer in enumerate(self.layers):
            for name in layer.params:
                out[f"{i}.{name}"] = layer.grads[name]
        return out

    def loss_and_gradients(self, x, y, step_seed):
        """One training step's loss; leaves layer grads populated.

        The head output of the step stays on last_outputs so the training
        loop can fold batch metrics into the history without a second pass.
        """
        out = self.forward(x, train=True, step_seed=step_seed)
        if self.spec.head == "classification":
            targets = losses.one_hot(y, self.spec.n_classes)
            loss = losses.categorical_cross_entropy(out, targets)
            d_out = losses.categorical_cross_entropy_grad(out, targets)
        else:
            targets = np.asarray(y, dtype=out.dtype).reshape(-1, 1)
            loss = losses.mse(out, targets)
            d_out = losses.mse_grad(out, targets)
        self.last_outputs = out
        self.backward(d_out.astype(out.dtype))
        return loss

    def recalibrate_batchnorm(self, x, batch_size=64):
        """Reset batchnorm running stats to dropout-off activation moments.

        Running estimates collected during training see dropout-scaled
        activations, so they drift from what inference-mode passes
        actually produce; this sweep normalizes each batch by its own
        moments (training behavior) with dropout disabled, accumulates
        exact population statistics, and installs them.
        """
        bn_positions = [
            i for i, layer in enumerate(self.layers) if isinstance(layer, L.BatchNorm2D)
        ]
        if not bn_positions:
            return
        totals = {i: None for i in bn_positions}
        for start in range(0, x.shape[0], batch_size):
            h = x[start : start + batch_size]
            if h.shape[0] < 2:
                continue  # batch moments need at least 2 samples
            for i, layer in enumerate(self.layers[: bn_positions[-1] + 1]):
                if not isinstance(layer, L.BatchNorm2D):
                    h = layer.forward(h, train=False)  # dropout is a no-op here
                    continue
                mean = h.mean(axis=(0, 2, 3), dtype=np.float64)
                sq = np.mean(
                    np.square(h, dtype=np.float64), axis=(0, 2, 3), dtype=np.float64
                )
                count = h.shape[0] * h.shape[2] * h.shape[3]
                prev = totals[i]
                if prev is None:
                    totals[i] = [mean * count, sq * count, count]
                else:
                    prev[0] += mean * count
                    prev[1] += sq * count
                    prev[2] += count
                h = ops.batchnorm2d_infer(
                    h,
                    layer.params["gamma"].astype(h.dtype),
                    layer.params["beta"].astype(h.dtype),
                    mean.astype(h.dtype),
                    np.maximum(sq - mean**2, 0.0).astype(h.dtype),
                    layer.eps,
                )
        for i in bn_positions:
            if totals[i] is None:
                return  # nothing collected; keep the running estimates
            s, sq, count = totals[i]
            mean = s / count
            layer = self.layers[i]
            layer.running_mean = mean
            layer.running_var = np.maximum(sq / count - mean**2, 0.0)

    def predict(self, x, batch_size=128):
        """Inference output: class probabilities, or clamped ages (N,)."""
        chunks = []
        for start in range(0, x.shape[0], batch_size):
            chunks.append(self.forward(x[start : start + batch_size], train=False))
        out = np.concatenate(chunks, axis=0)
        if self.spec.head == "regression":
            return np.clip(out.reshape(-1), AGE_MIN, AGE_MAX)
        return out

    def predict_classes(self, x, batch_size=128):
        return np.argmax(self.predict(x, batch_size), axis=1)


def build_model(spec, rng_seed, dtype=np.float32):
    return Model(spec, rng_seed, dtype)


@dataclass(frozen=True)
class TrainConfig:
    rng_seed: int
    epochs: int = 30
    batch_size: int = 64
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    val_fraction: float = 0.1
    compute_dtype: str = "float32"

    def __post_init__(self):
        if self.rng_seed is None:
            raise ValueError("rng_seed is mandatory")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be nonnegative")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ValueError("val_fraction must be in [0, 1)")
        if self.compute_dtype not in ("float32", "float64"):
            raise ValueError(f"unsupported compute_dtype {self.compute_dtype!r}")


def _check_labels(model, dataset):
    if len(dataset) == 0:
        raise TrainingError("dataset is empty")
    y = np.asarray(dataset.y)
    if model.spec.head == "classification":
        if not np.issubdtype(y.dtype, np.integer):
            raise TrainingError("classification head needs integer class labels")
        if y.min() < 0 or y.max() >= model.spec.n_classes:
            raise TrainingError(
                f"labels outside [0, {model.spec.n_classes}) for {model.spec.name}"
            )
    else:
        if np.issubdtype(y.dtype, np.integer):
            return  # integer ages are fine for regression
        if not np.issubdtype(y.dtype, np.floating):
            raise TrainingError("regression head needs numeric targets")


def _epoch_metric(model, x, y, batch_size=128):
    if model.spec.head == "classification":
        return "accuracy", float(np.mean(model.predict_classes(x, batch_size) == y))
    return "mae", float(np.mean(np.abs(model.predict(x, batch_size) - y)))


# per-epoch stats recalibration runs over at most this many samples; the
# final pass after the last epoch always uses the full training split
RECAL_SUBSET = 512


def train(model, dataset, config, stop_when=None):
    """Train in place; returns per-epoch history.

    stop_when(history_entry) -> bool allows early exit (used by smoke
    tests that only need a target reached, never by default).
    """
    _check_labels(model, dataset)
    dtype = np.dtype(config.compute_dtype)
    x_all = np.ascontiguousarray(dataset.x, dtype=dtype)
    y_all = np.asarray(dataset.y)

    n = x_all.shape[0]
    if config.val_fraction > 0 and n >= 2:
        order = np.random.default_rng(_fold_seed(config.rng_seed, 13)).permutation(n)
        n_val = min(max(int(round(n * config.val_fraction)), 1), n - 1)
        val_idx, train_idx = order[:n_val], order[n_val:]
        x_val, y_val = x_all[val_idx], y_all[val_idx]
        x_tr, y_tr = x_all[train_idx], y_all[train_idx]
    else:
        x_val = y_val = None
        x_tr, y_tr = x_all, y_all

    classification = model.spec.head == "classification"
    opt = optim.make_optimizer(config.optimizer, config.learning_rate)
    for layer in model.layers:
        layer.scratch = True
    try:
        history = _run_epochs(
            model, config, opt, x_tr, y_tr, x_val, y_val, classification, stop_when
        )
    finally:
        for layer in model.layers:
            layer.scratch = False
    return history


def _run_epochs(model, config, opt, x_tr, y_tr, x_val, y_val, classification, stop_when):
    history = []
    for epoch in range(config.epochs):
        order = np.random.default_rng(_fold_seed(config.rng_seed, 1, epoch)).permutation(
            x_tr.shape[0]
        )
        epoch_losses = []
        hits = 0
        abs_err = 0.0
        seen = 0
        for step, start in enumerate(range(0, x_tr.shape[0], config.batch_size)):
            idx = order[start : start + config.batch_size]
            if idx.size < 2:
                continue  # batchnorm needs at least 2 samples
            step_seed = _fold_seed(config.rng_seed, 2, epoch, step)
            yb = y_tr[idx]
            loss = model.loss_and_gradients(x_tr[idx], yb, step_seed)
            opt.step(model.parameters(), model.gradients())
            epoch_losses.append(loss)
            out = model.last_outputs
            if classification:
                hits += int(np.sum(np.argmax(out, axis=1) == yb))
            else:
                ages = np.clip(out.reshape(-1), AGE_MIN, AGE_MAX)
                abs_err += float(np.sum(np.abs(ages - yb)))
            seen += idx.size
        if not epoch_losses:
            raise TrainingError(
                "no trainable batch: every batch had fewer than 2 samples"
            )
        entry = {"epoch": epoch, "train_loss": float(np.mean(epoch_losses))}
        if classification:
            entry["train_accuracy"] = hits / seen
        else:
            entry["train_mae"] = abs_err / seen
        if x_val is not None:
            model.recalibrate_batchnorm(x_tr[:RECAL_SUBSET], config.batch_size)
            metric_name, metric_value = _epoch_metric(model, x_val, y_val, config.batch_size)
            entry[f"val_{metric_name}"] = metric_value
        history.append(entry)
        if stop_when is not None and stop_when(entry):
            break
    model.recalibrate_batchnorm(x_tr, config.batch_size)
    return history


def evaluate(model, dataset):
    """Inference-mode metrics; pure given a model and dataset."""
    _check_labels(model, dataset)
    x = np.ascontiguousarray(dataset.x, dtype=np.float32)
    y = np.asarray(dataset.y)
    if model.spec.head == "classification":
        return classification_metrics(y, model.predict_classes(x), model.spec.n_classes)
    return regression_metrics(y.astype(np.float64), model.predict(x))
