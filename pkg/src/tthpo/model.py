"""Desk-scale classification heads: classical and hybrid variants.

Two architectures over a fixed-width feature input (512 by default):

* classical: ``dense(512->n) -> tanh -> dense(n->m) -> tanh -> dense(m->k)``
* hybrid:    ``dense(512->n) -> quantum layer(n qubits, q blocks) -> dense(n->k)``

The hybrid variant feeds the first layer's raw pre-activations straight
into the quantum layer as rotation angles (the quantum expectations are
already bounded, so no squashing is needed on either side of it).  Every
dense layer carries a bias, which is where the ``513·n`` in the parameter
accounting comes from.

Training is plain softmax cross-entropy under an adaptive-moment
optimizer with decoupled weight decay, global-norm gradient clipping, and
a stepped learning-rate schedule (``alpha0 * alpha_factor**(epoch //
alpha_step)``).  Classical parameters get backpropagated gradients; the
variational angles and the encoding inputs get exact parameter-shift
derivatives from :mod:`tthpo.quantum`, chained into the same backward
pass.  Given a seed, training is fully deterministic.

:func:`make_accuracy_objective` adapts a (variant, dataset) pair into the
``GridPoint -> float`` objective the optimizers consume, resolving the
five tuned hyperparameters by axis name.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .data import Dataset
from .quantum import MAX_QUBITS, QuantumLayerSpec, forward_batch, gradient_batch
from .report import ObjectiveFailure
from .space import GridPoint, SearchSpace

PROB_FLOOR = 1e-12

HYBRID_AXES = ("n", "q", "alpha0", "alpha_step", "alpha_factor")
CLASSICAL_AXES = ("n", "nq", "alpha0", "alpha_step", "alpha_factor")


class SpecInvalid(ValueError):
    """A model specification violates its variant's field contract."""


class NonFiniteLoss(RuntimeError):
    """Training produced a NaN/inf loss; aborts with diagnostics."""


class _ClampCounter:
    """Counts how often a true-class probability hit the log floor."""

    __slots__ = ("count",)

    def __init__(self) -> None:
        self.count = 0

    def reset(self) -> None:
        self.count = 0


clamp_events = _ClampCounter()


@dataclass(frozen=True)
class ModelSpec:
    """Architecture description; ``q`` is hybrid-only, ``m`` classical-only."""

    variant: str
    n: int
    q: int | None = None
    m: int | None = None
    classes: int = 2
    input_dim: int = 512

    def __post_init__(self) -> None:
        if self.variant not in ("classical", "hybrid"):
            raise SpecInvalid(f"unknown variant {self.variant!r}")
        if self.input_dim < 1:
            raise SpecInvalid(f"input_dim must be >= 1, got {self.input_dim}")
        if self.classes < 2:
            raise SpecInvalid(f"classes must be >= 2, got {self.classes}")
        if self.n < 1:
            raise SpecInvalid(f"n must be >= 1, got {self.n}")
        if self.variant == "hybrid":
            if self.q is None or self.q < 1:
                raise SpecInvalid("hybrid variant requires q >= 1")
            if self.n > MAX_QUBITS:
                raise SpecInvalid(
                    f"hybrid n={self.n} exceeds the {MAX_QUBITS}-qubit cap"
                )
        else:
            if self.m is None or self.m < 1:
                raise SpecInvalid("classical variant requires m >= 1")

    @property
    def param_count(self) -> int:
        """Total trainable scalars, biases included."""
        first = (self.input_dim + 1) * self.n
        if self.variant == "hybrid":
            return first + self.variational_count + (self.n + 1) * self.classes
        return first + (self.n + 1) * self.m + (self.m + 1) * self.classes

    @property
    def variational_count(self) -> int:
        """Quantum rotation angles (zero for the classical variant)."""
        return self.n * self.q if self.variant == "hybrid" else 0

    def quantum_layer(self) -> QuantumLayerSpec:
        if self.variant != "hybrid":
            raise SpecInvalid("classical models have no quantum layer")
        return QuantumLayerSpec(qubits=self.n, depth=self.q)


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and schedule knobs.

    ``alpha0`` is the initial learning rate, decayed by ``alpha_factor``
    every ``alpha_step`` epochs.  ``epochs=0`` is the sanctioned no-op:
    empty history, untouched model.
    """

    epochs: int = 10
    alpha0: float = 5e-4
    alpha_step: int = 8
    alpha_factor: float = 0.1
    weight_decay: float = 1e-4
    grad_clip: float = 1.0
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.alpha0 <= 0:
            raise ValueError(f"alpha0 must be positive, got {self.alpha0}")
        if self.alpha_step < 1:
            raise ValueError(f"alpha_step must be >= 1, got {self.alpha_step}")
        if not (0 < self.alpha_factor <= 1):
            raise ValueError(
                f"alpha_factor must lie in (0, 1], got {self.alpha_factor}"
            )
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be non-negative")
        if self.grad_clip <= 0:
            raise ValueError("grad_clip must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


class EpochRecord(NamedTuple):
    epoch: int
    train_loss: float
    test_accuracy: float


class Model:
    """A bag of named parameter arrays plus the forward pass."""

    def __init__(self, spec: ModelSpec, params: dict[str, np.ndarray]):
        self.spec = spec
        self.params = params

    def param_names(self) -> list[str]:
        return list(self.params)

    def param_count(self) -> int:
        return sum(p.size for p in self.params.values())

    def copy(self) -> "Model":
        return Model(self.spec, {k: v.copy() for k, v in self.params.items()})

    def logits(self, features: np.ndarray) -> np.ndarray:
        return self._forward(features)[-1]

    def _forward(self, features: np.ndarray) -> tuple[np.ndarray, ...]:
        """Return every intermediate the backward pass needs, logits last."""
        x = np.asarray(features, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.spec.input_dim:
            raise ValueError(
                f"features must be (rows, {self.spec.input_dim}), got {x.shape}"
            )
        p = self.params
        z1 = x @ p["w1"].T + p["b1"]
        if self.spec.variant == "hybrid":
            expect = forward_batch(self.spec.quantum_layer(), z1, p["theta"])
            logits = expect @ p["w2"].T + p["b2"]
            return x, z1, expect, logits
        h1 = np.tanh(z1)
        z2 = h1 @ p["w2"].T + p["b2"]
        h2 = np.tanh(z2)
        logits = h2 @ p["w3"].T + p["b3"]
        return x, h1, h2, logits


def build(spec: ModelSpec, seed: int = 0) -> Model:
    """Initialize a model: dense layers U(±1/sqrt(fan_in)), angles U(±pi)."""
    rng = np.random.default_rng(seed)

    def dense(out_dim: int, in_dim: int) -> tuple[np.ndarray, np.ndarray]:
        bound = 1.0 / math.sqrt(in_dim)
        return (
            rng.uniform(-bound, bound, size=(out_dim, in_dim)),
            rng.uniform(-bound, bound, size=out_dim),
        )

    params: dict[str, np.ndarray] = {}
    params["w1"], params["b1"] = dense(spec.n, spec.input_dim)
    if spec.variant == "hybrid":
        params["theta"] = rng.uniform(-math.pi, math.pi, size=spec.variational_count)
        params["w2"], params["b2"] = dense(spec.classes, spec.n)
    else:
        params["w2"], params["b2"] = dense(spec.m, spec.n)
        params["w3"], params["b3"] = dense(spec.classes, spec.m)
    model = Model(spec, params)
    assert model.param_count() == spec.param_count
    return model


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, shift-stabilized."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(probs: np.ndarray, label: int) -> float:
    """One-hot cross-entropy ``-log p_label`` for a single prediction.

    A true-class probability below ``PROB_FLOOR`` is clamped to the floor
    rather than letting the log blow up; each clamp bumps
    ``clamp_events.count``.
    """
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError(f"probs must be a vector, got shape {p.shape}")
    if not 0 <= label < p.size:
        raise ValueError(f"label {label} outside [0, {p.size})")
    if p.min() < -1e-9 or abs(p.sum() - 1.0) > 1e-6:
        raise ValueError(f"probs must be a distribution, got {p!r}")
    p_true = float(p[label])
    if p_true < PROB_FLOOR:
        clamp_events.count += 1
        p_true = PROB_FLOOR
    return -math.log(p_true)


def _batch_loss(probs: np.ndarray, labels: np.ndarray) -> float:
    p_true = probs[np.arange(labels.size), labels]
    clamped = p_true < PROB_FLOOR
    if clamped.any():
        clamp_events.count += int(clamped.sum())
        p_true = np.maximum(p_true, PROB_FLOOR)
    return float(-np.log(p_true).mean())


def loss_and_gradients(
    model: Model, features: np.ndarray, labels: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy over the batch and its gradient per parameter."""
    spec = model.spec
    p = model.params
    labels = np.asarray(labels, dtype=np.int64)
    acts = model._forward(features)
    probs = softmax(acts[-1])
    loss = _batch_loss(probs, labels)

    rows = labels.size
    d_logits = probs.copy()
    d_logits[np.arange(rows), labels] -= 1.0
    d_logits /= rows

    grads: dict[str, np.ndarray] = {}
    if spec.variant == "hybrid":
        x, z1, expect, _ = acts
        grads["w2"] = d_logits.T @ expect
        grads["b2"] = d_logits.sum(axis=0)
        d_expect = d_logits @ p["w2"]
        jac_theta, jac_x = gradient_batch(spec.quantum_layer(), z1, p["theta"])
        grads["theta"] = np.einsum("bj,bjt->t", d_expect, jac_theta)
        d_z1 = np.einsum("bj,bji->bi", d_expect, jac_x)
    else:
        x, h1, h2, _ = acts
        grads["w3"] = d_logits.T @ h2
        grads["b3"] = d_logits.sum(axis=0)
        d_h2 = (d_logits @ p["w3"]) * (1.0 - h2 * h2)
        grads["w2"] = d_h2.T @ h1
        grads["b2"] = d_h2.sum(axis=0)
        d_z1 = (d_h2 @ p["w2"]) * (1.0 - h1 * h1)
    grads["w1"] = d_z1.T @ x
    grads["b1"] = d_z1.sum(axis=0)
    return loss, grads


def accuracy(model: Model, data: Dataset) -> float:
    """Fraction of rows whose argmax logit matches the label."""
    predicted = model.logits(data.features).argmax(axis=1)
    return float((predicted == data.labels).mean())


def _clip_global_norm(grads: dict[str, np.ndarray], limit: float) -> None:
    total = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total > limit:
        scale = limit / total
        for g in grads.values():
            g *= scale


class _Adam:
    """Adaptive-moment step with decoupled weight decay."""

    def __init__(self, params: dict[str, np.ndarray], weight_decay: float):
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0
        self.weight_decay = weight_decay
        self.beta1, self.beta2, self.eps = 0.9, 0.999, 1e-8

    def step(
        self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray], lr: float
    ) -> None:
        self.t += 1
        correct1 = 1.0 - self.beta1**self.t
        correct2 = 1.0 - self.beta2**self.t
        for key, grad in grads.items():
            m = self.m[key]
            v = self.v[key]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            update = (m / correct1) / (np.sqrt(v / correct2) + self.eps)
            params[key] -= lr * (update + self.weight_decay * params[key])


def train(
    model: Model,
    train_data: Dataset,
    test_data: Dataset,
    cfg: TrainConfig = TrainConfig(),
) -> list[EpochRecord]:
    """Fit in place; one history row per epoch.

    Mini-batches are drawn in a seeded shuffle each epoch, so identical
    (model, data, cfg) inputs yield an identical history and final model.
    """
    for name, data in (("train", train_data), ("test", test_data)):
        if data.input_dim != model.spec.input_dim:
            raise ValueError(
                f"{name} data is {data.input_dim}-wide, model expects "
                f"{model.spec.input_dim}"
            )
        if data.labels.max() >= model.spec.classes:
            raise ValueError(
                f"{name} data has label {data.labels.max()}, model has "
                f"{model.spec.classes} classes"
            )

    rng = np.random.default_rng(cfg.seed)
    optimizer = _Adam(model.params, cfg.weight_decay)
    history: list[EpochRecord] = []
    for epoch in range(cfg.epochs):
        lr = cfg.alpha0 * cfg.alpha_factor ** (epoch // cfg.alpha_step)
        order = rng.permutation(train_data.rows)
        losses = []
        for start in range(0, train_data.rows, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            loss, grads = loss_and_gradients(
                model, train_data.features[batch], train_data.labels[batch]
            )
            if not math.isfinite(loss):
                raise NonFiniteLoss(
                    f"loss={loss} at epoch {epoch}, batch offset {start}, "
                    f"lr={lr}, variant={model.spec.variant}"
                )
            _clip_global_norm(grads, cfg.grad_clip)
            optimizer.step(model.params, grads, lr)
            losses.append(loss)
        history.append(
            EpochRecord(epoch, float(np.mean(losses)), accuracy(model, test_data))
        )
    return history


# ------------------------------------------------------------- checkpoints


def save_checkpoint(model: Model, path: str) -> None:
    """One self-describing JSON file: shape manifest + flat value array."""
    spec = model.spec
    manifest = {
        "format": "tthpo-model/1",
        "spec": {
            "variant": spec.variant,
            "n": spec.n,
            "q": spec.q,
            "m": spec.m,
            "classes": spec.classes,
            "input_dim": spec.input_dim,
        },
        "shapes": {k: list(v.shape) for k, v in model.params.items()},
        "flat": np.concatenate([v.ravel() for v in model.params.values()]).tolist(),
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(manifest, fh)


def load_checkpoint(path: str) -> Model:
    with open(path, "r", encoding="ascii") as fh:
        manifest = json.load(fh)
    if manifest.get("format") != "tthpo-model/1":
        raise ValueError(f"{path}: not a model checkpoint")
    spec = ModelSpec(**manifest["spec"])
    flat = np.asarray(manifest["flat"], dtype=np.float64)
    params: dict[str, np.ndarray] = {}
    offset = 0
    for name, shape in manifest["shapes"].items():
        size = int(np.prod(shape)) if shape else 1
        params[name] = flat[offset : offset + size].reshape(shape)
        offset += size
    if offset != flat.size:
        raise ValueError(f"{path}: flat array has {flat.size} values, used {offset}")
    model = Model(spec, params)
    if model.param_count() != spec.param_count:
        raise ValueError(f"{path}: parameter count mismatch")
    return model


# ------------------------------------------------------- HPO objective glue


def make_accuracy_objective(
    variant: str,
    space: SearchSpace,
    train_data: Dataset,
    test_data: Dataset,
    epochs: int = 10,
    classes: int = 2,
    build_seed: int = 0,
    weight_decay: float = 1e-4,
    grad_clip: float = 1.0,
    batch_size: int = 32,
) -> Callable[[GridPoint], float]:
    """Close over everything but the grid point; returns test accuracy.

    The space must name the five tuned axes: ``n``, ``q`` (hybrid) or
    ``nq`` (classical hidden width), ``alpha0``, ``alpha_step``,
    ``alpha_factor``.  Training failures surface as
    :class:`~tthpo.report.ObjectiveFailure` so the optimizers' accounting
    sees them uniformly.
    """
    axes = HYBRID_AXES if variant == "hybrid" else CLASSICAL_AXES
    missing = sorted(set(axes) - {a.name for a in space.axes})
    if variant not in ("classical", "hybrid"):
        raise SpecInvalid(f"unknown variant {variant!r}")
    if missing:
        raise SpecInvalid(f"space is missing required axes {missing}")

    def objective(point: GridPoint) -> float:
        named = point.named(space)
        if variant == "hybrid":
            spec = ModelSpec(
                variant, n=int(named["n"]), q=int(named["q"]),
                classes=classes, input_dim=train_data.input_dim,
            )
        else:
            spec = ModelSpec(
                variant, n=int(named["n"]), m=int(named["nq"]),
                classes=classes, input_dim=train_data.input_dim,
            )
        cfg = TrainConfig(
            epochs=epochs,
            alpha0=float(named["alpha0"]),
            alpha_step=int(named["alpha_step"]),
            alpha_factor=float(named["alpha_factor"]),
            weight_decay=weight_decay,
            grad_clip=grad_clip,
            batch_size=batch_size,
            seed=build_seed,
        )
        model = build(spec, seed=build_seed)
        try:
            train(model, train_data, test_data, cfg)
        except NonFiniteLoss as exc:
            raise ObjectiveFailure(point, float("nan")) from exc
        return accuracy(model, test_data)

    return objective
