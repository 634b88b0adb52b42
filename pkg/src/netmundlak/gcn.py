"""Two-layer graph convolutional network trained with Adam.

Written directly against numpy/scipy: the forward pass, the analytic
gradients, and the optimizer are all explicit, which keeps every fit
deterministic under a seed and lets the finite-difference checker audit
the backprop end to end.

Architecture: H1 = ReLU(A_hat X W1 + b1) with inverted dropout in training
mode, then out = A_hat H1 W2 + b2 where A_hat is the symmetrically
normalized adjacency with self-loops. Regression heads return the linear
output; binary heads return a sigmoid. The binary loss is evaluated on
pre-sigmoid logits in log-sum-exp form, so probabilities never saturate
the arithmetic.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .balance import GroupData
from .errors import DivergenceError, EstimationError, MissingLevelError
from .exposure import ExposureAssignment
from .graphs import Graph

TASKS = ("regression", "binary")

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class GcnConfig:
    """Hyperparameters for one fit.

    hidden/dropout/learning_rate follow the option sets 16 or 32, 0.1 or
    0.2, and 0.001 or 0.005; any positive values are accepted so the knobs
    stay tunable.
    """

    hidden: int = 16
    dropout: float = 0.1
    learning_rate: float = 0.001
    epochs: int = 300
    task: str = "regression"
    seed: int = 0
    weight_init_scale: float = 1.0

    def __post_init__(self):
        if self.hidden < 1:
            raise ValueError("hidden must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}")
        if self.weight_init_scale <= 0:
            raise ValueError("weight_init_scale must be positive")


@dataclass
class GcnModel:
    """Trained parameters; W1 is f x h, b1 is h, W2 is h, b2 scalar."""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: float
    task: str


@dataclass(frozen=True)
class NormalizedAdjacency:
    """Message-passing operator D^-1/2 (A + I) D^-1/2 in CSR form."""

    matrix: sp.csr_matrix

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def normalize_adjacency(graph: Graph) -> NormalizedAdjacency:
    """Symmetric normalization with self-loops.

    Self-loops keep each node's own features flowing through the layers;
    they also guarantee every normalizing degree is >= 1.
    """
    n = graph.n_nodes
    a_hat = graph.adjacency_matrix() + sp.identity(n, format="csr")
    inv_sqrt = 1.0 / np.sqrt(np.asarray(a_hat.sum(axis=1)).ravel())
    d = sp.diags(inv_sqrt)
    return NormalizedAdjacency((d @ a_hat @ d).tocsr())


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def forward(
    model: GcnModel,
    adj: NormalizedAdjacency,
    features: np.ndarray,
    dropout: tuple[float, np.random.Generator] | None = None,
) -> np.ndarray:
    """Model output for every node.

    ``dropout=None`` is evaluation mode and is fully deterministic;
    passing (rate, rng) applies an inverted-dropout mask to the hidden
    layer, as during training.
    """
    if features.shape[1] != model.W1.shape[0]:
        raise ValueError(
            f"feature width {features.shape[1]} does not match W1 rows {model.W1.shape[0]}"
        )
    h1 = np.maximum(adj.matrix @ features @ model.W1 + model.b1, 0.0)
    if dropout is not None:
        rate, rng = dropout
        if rate > 0:
            keep = rng.random(h1.shape) >= rate
            h1 = h1 * keep / (1.0 - rate)
    z = adj.matrix @ h1 @ model.W2 + model.b2
    if model.task == "binary":
        return _sigmoid(z)
    return z


def _loss_and_grads(params, task, adj_matrix, smoothed, targets, mask, drop_scale):
    """Mean loss over masked-in units and its analytic gradients.

    ``smoothed`` is the precomputed A_hat @ features (constant across
    epochs); ``drop_scale`` is the inverted-dropout multiplier matrix or
    None. Used both by the training loop and the gradient checker.

    The second-layer propagation is folded into vector form: with the
    symmetric A_hat, out = A_hat (H1d w2) + b2 and the upstream gradient
    pulls back as (A_hat g) w2^T, so both sparse products act on vectors
    rather than N x h matrices.
    """
    w1, b1, w2, b2 = params
    n_in = int(mask.sum())
    p1 = smoothed @ w1
    p1 += b1
    h1 = np.maximum(p1, 0.0)
    h1d = h1 if drop_scale is None else h1 * drop_scale
    z = adj_matrix @ (h1d @ w2) + b2

    g = np.zeros_like(z)
    if task == "regression":
        resid = z[mask] - targets[mask]
        loss = 0.5 * np.mean(resid**2)
        g[mask] = resid / n_in
    else:
        zm = z[mask]
        loss = np.mean(np.logaddexp(0.0, zm) - targets[mask] * zm)
        g[mask] = (_sigmoid(zm) - targets[mask]) / n_in

    ag = adj_matrix @ g
    d_w2 = h1d.T @ ag
    d_b2 = g.sum()
    d_h1 = ag[:, None] * w2
    if drop_scale is not None:
        d_h1 *= drop_scale
    d_h1 *= p1 > 0
    d_w1 = smoothed.T @ d_h1
    d_b1 = d_h1.sum(axis=0)
    return float(loss), (d_w1, d_b1, d_w2, d_b2)


def _init_params(config: GcnConfig, n_features: int, targets, mask, rng):
    h = config.hidden
    s1 = math.sqrt(6.0 / (n_features + h)) * config.weight_init_scale
    s2 = math.sqrt(6.0 / (h + 1)) * config.weight_init_scale
    w1 = rng.uniform(-s1, s1, size=(n_features, h))
    b1 = np.zeros(h)
    w2 = rng.uniform(-s2, s2, size=h)
    # Output bias starts at the target's masked mean (or its logit), so the
    # head does not spend hundreds of epochs drifting toward the base rate.
    if config.task == "regression":
        b2 = float(targets[mask].mean())
    else:
        rate = float(np.clip(targets[mask].mean(), 0.01, 0.99))
        b2 = math.log(rate / (1.0 - rate))
    return [w1, b1, w2, b2]


def train(
    config: GcnConfig,
    adj: NormalizedAdjacency,
    features: np.ndarray,
    targets: np.ndarray,
    mask: np.ndarray | None = None,
) -> GcnModel:
    """Full-batch Adam on the mean loss over masked-in units.

    Deterministic given config.seed. Raises EstimationError when the mask
    excludes everything, DivergenceError (reporting the epoch) when the
    loss goes non-finite. Returns the parameters of the final epoch.
    """
    targets = np.asarray(targets, dtype=float)
    n = adj.n
    if features.shape[0] != n or targets.shape[0] != n:
        raise ValueError("features/targets length does not match the graph")
    if mask is None:
        mask = np.ones(n, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise EstimationError("training mask excludes every unit")
    if config.task == "binary" and not np.isin(targets, (0.0, 1.0)).all():
        raise ValueError("binary task requires targets in {0, 1}")

    rng = np.random.default_rng(config.seed)
    params = _init_params(config, features.shape[1], targets, mask, rng)
    smoothed = adj.matrix @ features
    m = [np.zeros_like(p) if isinstance(p, np.ndarray) else 0.0 for p in params]
    v = [np.zeros_like(p) if isinstance(p, np.ndarray) else 0.0 for p in params]

    for epoch in range(1, config.epochs + 1):
        drop_scale = None
        if config.dropout > 0:
            keep = rng.random((n, config.hidden)) >= config.dropout
            drop_scale = keep / (1.0 - config.dropout)
        loss, grads = _loss_and_grads(
            params, config.task, adj.matrix, smoothed, targets, mask, drop_scale
        )
        if not np.isfinite(loss):
            raise DivergenceError(epoch, loss)
        bc1 = 1.0 - ADAM_BETA1**epoch
        bc2 = 1.0 - ADAM_BETA2**epoch
        for idx, grad in enumerate(grads):
            m[idx] = ADAM_BETA1 * m[idx] + (1.0 - ADAM_BETA1) * grad
            v[idx] = ADAM_BETA2 * v[idx] + (1.0 - ADAM_BETA2) * grad**2
            step = config.learning_rate * (m[idx] / bc1) / (np.sqrt(v[idx] / bc2) + ADAM_EPS)
            params[idx] = params[idx] - step

    return GcnModel(params[0], params[1], params[2], float(params[3]), config.task)


def fit_propensity(
    group: GroupData,
    features: np.ndarray,
    assignment: ExposureAssignment,
    t: int,
    config: GcnConfig,
) -> np.ndarray:
    """Generalized propensity for level t: a binary fit of 1{T_i = t} on
    all units, returned as sigmoid probabilities strictly inside (0, 1).

    One-vs-rest across levels; no cross-level renormalization here.
    """
    targets = (assignment.levels == t).astype(float)
    if targets.sum() == 0:
        warnings.warn(
            f"exposure level {t} absent from group {group.group_id!r}; "
            "propensity fit is degenerate",
            stacklevel=2,
        )
    adj = normalize_adjacency(group.graph)
    model = train(replace(config, task="binary"), adj, features, targets)
    return forward(model, adj, features)


def fit_outcome(
    group: GroupData,
    features: np.ndarray,
    assignment: ExposureAssignment,
    t: int,
    config: GcnConfig,
) -> np.ndarray:
    """Outcome regression for level t: squared loss restricted to units
    with T_i = t, predictions imputed for all units."""
    mask = assignment.levels == t
    if not mask.any():
        raise MissingLevelError(
            f"no unit at exposure level {t} in group {group.group_id!r}"
        )
    adj = normalize_adjacency(group.graph)
    model = train(replace(config, task="regression"), adj, features, group.Y, mask)
    return forward(model, adj, features)


def gradient_check(
    n_instances: int = 20,
    seed: int = 0,
    step: float = 1e-5,
    max_nodes: int = 12,
    max_features: int = 4,
    max_hidden: int = 8,
) -> float:
    """Compare analytic gradients with central finite differences.

    Random small instances alternate between the two loss types; returns
    the worst relative error over all parameters of all instances.
    Relative error uses max(|analytic|, |numeric|, 1e-8) as denominator.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for trial in range(n_instances):
        n = int(rng.integers(4, max_nodes + 1))
        f = int(rng.integers(1, max_features + 1))
        h = int(rng.integers(2, max_hidden + 1))
        task = TASKS[trial % 2]
        edges = {
            (i, j)
            for i in range(n)
            for j in range(i + 1, n)
            if rng.random() < 0.4
        }
        graph = Graph(n, edges)
        adj = normalize_adjacency(graph)
        features = rng.normal(size=(n, f))
        targets = (
            rng.normal(size=n)
            if task == "regression"
            else rng.integers(0, 2, size=n).astype(float)
        )
        mask = rng.random(n) < 0.8
        if not mask.any():
            mask[0] = True
        params = [
            rng.normal(scale=0.8, size=(f, h)),
            rng.normal(scale=0.5, size=h),
            rng.normal(scale=0.8, size=h),
            float(rng.normal()),
        ]
        smoothed = adj.matrix @ features
        _, grads = _loss_and_grads(params, task, adj.matrix, smoothed, targets, mask, None)

        def loss_with(idx, pos, value):
            perturbed = [np.array(p, copy=True) if np.ndim(p) else p for p in params]
            if np.ndim(perturbed[idx]):
                perturbed[idx].flat[pos] = value
            else:
                perturbed[idx] = value
            loss, _ = _loss_and_grads(
                perturbed, task, adj.matrix, smoothed, targets, mask, None
            )
            return loss

        for idx, grad in enumerate(grads):
            grad = np.atleast_1d(np.asarray(grad, dtype=float))
            values = np.atleast_1d(np.asarray(params[idx], dtype=float))
            for pos in range(values.size):
                original = values.flat[pos]
                numeric = (
                    loss_with(idx, pos, original + step)
                    - loss_with(idx, pos, original - step)
                ) / (2.0 * step)
                analytic = grad.flat[pos]
                denom = max(abs(analytic), abs(numeric), 1e-8)
                worst = max(worst, abs(analytic - numeric) / denom)
    return worst


def dump_model(model: GcnModel, path) -> None:
    """Write parameters as flat text with shape headers, one array per block."""
    blocks = [
        ("W1", np.asarray(model.W1)),
        ("b1", np.asarray(model.b1)),
        ("W2", np.asarray(model.W2)),
        ("b2", np.asarray([model.b2])),
    ]
    lines = [f"task {model.task}"]
    for name, arr in blocks:
        lines.append(f"{name} " + " ".join(str(s) for s in arr.shape))
        for row in np.atleast_2d(arr):
            lines.append(" ".join(f"{value:.17g}" for value in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
