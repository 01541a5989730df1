"""Desk-scale benchmark objectives with analytic gradients.

Each problem exposes loss_and_grad(theta, indices, rng): data-driven
problems average the loss over the given example indices (all examples when
indices is None); the noisy quadratic ignores indices and perturbs its
gradient with Gaussian noise drawn from the supplied generator. With no
generator every problem is deterministic, which is the mode the
finite-difference oracle checks against.
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib.resources import files
from typing import Callable

import numpy as np

from .numerics import BlockLayout, ParamVector, Rng, single_block

EvalFn = Callable[[np.ndarray, "np.ndarray | None", "Rng | None", int], tuple[float, np.ndarray]]


@dataclass(frozen=True)
class Dataset:
    inputs: np.ndarray   # (n_examples, n_features)
    targets: np.ndarray  # (n_examples,) integer labels
    seed: int

    def __post_init__(self) -> None:
        if len(self.inputs) != len(self.targets) or len(self.inputs) < 1:
            raise ValueError("inputs and targets must be non-empty and aligned")

    def __len__(self) -> int:
        return len(self.targets)


@dataclass(frozen=True)
class Problem:
    name: str
    dim: int
    layout: BlockLayout
    dataset: Dataset | None
    _eval: EvalFn

    def loss_and_grad(
        self,
        theta: ParamVector,
        indices: np.ndarray | None = None,
        rng: Rng | None = None,
        batch_size: int = 1,
    ) -> tuple[float, ParamVector]:
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.dim,):
            raise ValueError(f"theta has shape {theta.shape}, problem dim is {self.dim}")
        loss, grad = self._eval(theta, indices, rng, batch_size)
        return float(loss), grad

    def minibatch_loss_and_grad(self, theta: ParamVector, rng: Rng, batch_size: int) -> tuple[float, ParamVector]:
        """One stochastic evaluation: data problems average over batch_size
        sampled examples, noise-model problems average batch_size noisy
        gradient draws."""
        indices = self.sample_minibatch(rng, batch_size)
        return self.loss_and_grad(theta, indices=indices, rng=rng, batch_size=batch_size)

    def sample_minibatch(self, rng: Rng, batch_size: int) -> np.ndarray | None:
        """Example indices for one stochastic step; None for problems whose
        stochasticity is a noise model rather than subsampling."""
        if self.dataset is None:
            return None
        n = len(self.dataset)
        return rng.choice(n, size=min(batch_size, n), replace=False)


# --- Analytic test surfaces ---------------------------------------------------


def quadratic_problem(h_diag, noise_std: float = 0.0) -> Problem:
    """f(theta) = 0.5 * sum(h_i * theta_i^2), minimum 0 at the origin.

    Each stochastic gradient sample adds independent N(0, noise_std^2) per
    coordinate; a minibatch evaluation averages batch_size such samples, so
    its noise shrinks like 1/sqrt(batch_size). The loss itself stays exact.
    """
    h = np.asarray(h_diag, dtype=np.float64)
    if h.ndim != 1 or len(h) < 1:
        raise ValueError("h_diag must be a non-empty 1-D sequence")
    if np.any(h <= 0):
        raise ValueError("all curvatures must be positive")
    if noise_std < 0:
        raise ValueError("noise_std must be >= 0")

    def _eval(theta, indices, rng, batch_size):
        loss = 0.5 * float(np.sum(h * np.square(theta)))
        grad = h * theta
        if rng is not None and noise_std > 0:
            samples = rng.normal(0.0, noise_std, size=(max(1, batch_size), len(h)))
            grad = grad + samples.mean(axis=0)
        return loss, grad

    return Problem("quadratic", len(h), single_block(len(h), "theta"), None, _eval)


def rosenbrock_problem(dim: int) -> Problem:
    """Chained Rosenbrock valley; minimum 0 at the all-ones point."""
    if dim < 2:
        raise ValueError(f"rosenbrock needs dim >= 2, got {dim}")

    def _eval(theta, indices, rng, batch_size):
        x = theta
        head, tail = x[:-1], x[1:]
        loss = float(np.sum(100.0 * np.square(tail - np.square(head)) + np.square(1.0 - head)))
        grad = np.zeros_like(x)
        grad[:-1] += -400.0 * head * (tail - np.square(head)) - 2.0 * (1.0 - head)
        grad[1:] += 200.0 * (tail - np.square(head))
        return loss, grad

    return Problem("rosenbrock", dim, single_block(dim, "x"), None, _eval)


# --- Data-driven objectives ----------------------------------------------------


def _stable_sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logistic_problem(dataset: Dataset) -> Problem:
    """Binary logistic regression, blocks ("w", n_features) and ("b", 1)."""
    labels = np.unique(dataset.targets)
    if not np.all(np.isin(labels, [0, 1])):
        raise ValueError(f"logistic regression needs 0/1 targets, got labels {labels}")
    n_features = dataset.inputs.shape[1]
    layout = BlockLayout.from_sizes([("w", n_features), ("b", 1)])

    def _eval(theta, indices, rng, batch_size):
        x = dataset.inputs if indices is None else dataset.inputs[indices]
        y = dataset.targets if indices is None else dataset.targets[indices]
        w, b = theta[:n_features], theta[n_features]
        z = x @ w + b
        loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
        dz = (_stable_sigmoid(z) - y) / len(y)
        grad = np.concatenate([x.T @ dz, [np.sum(dz)]])
        return loss, grad

    return Problem("logistic", n_features + 1, layout, dataset, _eval)


_ACTIVATIONS: dict[str, tuple[Callable, Callable]] = {
    "tanh": (np.tanh, lambda z: 1.0 - np.square(np.tanh(z))),
    "relu": (lambda z: np.maximum(0.0, z), lambda z: (z > 0).astype(np.float64)),
    "sigmoid": (_stable_sigmoid, lambda z: _stable_sigmoid(z) * (1.0 - _stable_sigmoid(z))),
}


def mlp_problem(arch: list[int], activation: str, dataset: Dataset) -> Problem:
    """Fully connected softmax classifier; one block per weight matrix
    ("w0", "w1", ...) and per bias vector ("b0", ...), weights row-major."""
    if len(arch) < 2:
        raise ValueError("arch needs at least input and output widths")
    if arch[0] != dataset.inputs.shape[1]:
        raise ValueError(f"arch input width {arch[0]} != data features {dataset.inputs.shape[1]}")
    n_classes = int(np.max(dataset.targets)) + 1
    if arch[-1] < n_classes:
        raise ValueError(f"arch output width {arch[-1]} < {n_classes} classes")
    if activation not in _ACTIVATIONS:
        raise ValueError(f"unknown activation {activation!r}; have {sorted(_ACTIVATIONS)}")
    act, act_deriv = _ACTIVATIONS[activation]

    sizes = []
    for l in range(len(arch) - 1):
        sizes.append((f"w{l}", arch[l] * arch[l + 1]))
        sizes.append((f"b{l}", arch[l + 1]))
    layout = BlockLayout.from_sizes(sizes)
    n_layers = len(arch) - 1

    def _unpack(theta):
        weights, biases = [], []
        for l in range(n_layers):
            w = theta[layout.slice_of(f"w{l}")].reshape(arch[l], arch[l + 1])
            weights.append(w)
            biases.append(theta[layout.slice_of(f"b{l}")])
        return weights, biases

    def _eval(theta, indices, rng, batch_size):
        x = dataset.inputs if indices is None else dataset.inputs[indices]
        y = dataset.targets if indices is None else dataset.targets[indices]
        weights, biases = _unpack(theta)

        activations = [x]
        pre_acts = []
        for l in range(n_layers):
            z = activations[-1] @ weights[l] + biases[l]
            pre_acts.append(z)
            activations.append(act(z) if l < n_layers - 1 else z)

        logits = activations[-1]
        shifted = logits - logits.max(axis=1, keepdims=True)
        log_norm = np.log(np.sum(np.exp(shifted), axis=1))
        loss = float(np.mean(log_norm - shifted[np.arange(len(y)), y]))

        probs = np.exp(shifted) / np.sum(np.exp(shifted), axis=1, keepdims=True)
        dz = probs
        dz[np.arange(len(y)), y] -= 1.0
        dz /= len(y)

        grad = np.zeros_like(theta)
        for l in reversed(range(n_layers)):
            grad[layout.slice_of(f"w{l}")] = (activations[l].T @ dz).ravel()
            grad[layout.slice_of(f"b{l}")] = dz.sum(axis=0)
            if l > 0:
                dz = (dz @ weights[l].T) * act_deriv(pre_acts[l - 1])
        return loss, grad

    return Problem("mlp", layout.n, layout, dataset, _eval)


# --- Verification oracle --------------------------------------------------------


def finite_diff_grad(problem: Problem, theta: ParamVector, h: float = 1e-5) -> ParamVector:
    """Central-difference gradient of the full-batch loss; second-order
    accurate, deterministic."""
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.zeros_like(theta)
    for i in range(len(theta)):
        bumped = theta.copy()
        bumped[i] = theta[i] + h
        up, _ = problem.loss_and_grad(bumped)
        bumped[i] = theta[i] - h
        down, _ = problem.loss_and_grad(bumped)
        grad[i] = (up - down) / (2.0 * h)
    return grad


# --- Synthetic datasets ----------------------------------------------------------


def two_moons_data(seed: int, n: int, noise_std: float) -> Dataset:
    """Two interleaved half-circle arcs: class 0 on (cos t, sin t) and class 1
    on (1 - cos t, 0.5 - sin t), t uniform in [0, pi], plus isotropic noise.
    Class counts differ by at most one."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if noise_std < 0:
        raise ValueError("noise_std must be >= 0")
    from .numerics import make_rng

    rng = make_rng(seed)
    n0 = n // 2
    n1 = n - n0
    t0 = rng.uniform(0.0, np.pi, size=n0)
    t1 = rng.uniform(0.0, np.pi, size=n1)
    pts0 = np.stack([np.cos(t0), np.sin(t0)], axis=1)
    pts1 = np.stack([1.0 - np.cos(t1), 0.5 - np.sin(t1)], axis=1)
    inputs = np.concatenate([pts0, pts1], axis=0)
    inputs = inputs + rng.normal(0.0, noise_std, size=inputs.shape)
    targets = np.concatenate([np.zeros(n0, dtype=np.int64), np.ones(n1, dtype=np.int64)])
    return Dataset(inputs, targets, seed)


_DIGITS_CACHE: np.ndarray | None = None


def _load_digits_bundle() -> np.ndarray:
    """The bundled 8x8 digit array: one example per row, 64 pixel intensities
    (0..16) followed by the class label. The file carries its own
    rows/cols/dtype header; see data/digits8x8.txt."""
    global _DIGITS_CACHE
    if _DIGITS_CACHE is None:
        text = files("adasecant").joinpath("data/digits8x8.txt").read_text()
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        rows, cols, dtype = lines[0].split()
        data = np.array([[int(tok) for tok in ln.split()] for ln in lines[1:]], dtype=dtype)
        if data.shape != (int(rows), int(cols)):
            raise ValueError(f"digit bundle shape {data.shape} disagrees with header {(rows, cols)}")
        _DIGITS_CACHE = data
    return _DIGITS_CACHE


def digits8x8_subset(seed: int, n_per_class: int) -> Dataset:
    """Seeded balanced subsample of the bundled 8x8 digits; pixel values are
    rescaled to [0, 1]."""
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    from .numerics import make_rng

    bundle = _load_digits_bundle()
    pixels, labels = bundle[:, :-1], bundle[:, -1]
    rng = make_rng(seed)
    chosen = []
    for cls in range(10):
        rows = np.flatnonzero(labels == cls)
        if n_per_class > len(rows):
            raise ValueError(f"class {cls} has only {len(rows)} bundled examples, asked for {n_per_class}")
        chosen.append(rng.permutation(rows)[:n_per_class])
    order = np.concatenate(chosen)
    inputs = pixels[order].astype(np.float64) / 16.0
    targets = labels[order].astype(np.int64)
    return Dataset(inputs, targets, seed)

