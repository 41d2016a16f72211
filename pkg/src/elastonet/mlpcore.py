"""Minimal dense feed-forward network engine.

Shared by the material-property and spatial networks: forward evaluation,
analytic input Jacobian, full-batch backpropagation, and two optimizers --
resilient backpropagation (sign-based, no weight backtracking) and Adam.
Networks are small value objects; training never mutates its input network.

Conventions
-----------
* Layer l maps a_{l-1} (n_in,) to  act_l(W_l a_{l-1} + b_l)  with W_l of
  shape (n_out, n_in).  Batched inputs are row-stacked, shape (N, n_in).
* The loss is the mean over samples of 0.5*||y - yhat||^2.
* Biases start at zero for every initializer, so an all-tanh network maps
  zero input to zero output at initialization.
"""

import io

import numpy as np

from .errors import (DimensionMismatchError, InvalidParameterError,
                     TrainingDivergedError)

ACTIVATIONS = ("tanh", "logistic", "linear")


def _act(name, z):
    if name == "tanh":
        return np.tanh(z)
    if name == "logistic":
        return 1.0 / (1.0 + np.exp(-z))
    if name == "linear":
        return z
    raise InvalidParameterError(f"unknown activation {name!r}")


def _act_prime_from_value(name, a):
    """Derivative of the activation expressed through its output value."""
    if name == "tanh":
        return 1.0 - a * a
    if name == "logistic":
        return a * (1.0 - a)
    if name == "linear":
        return np.ones_like(a)
    raise InvalidParameterError(f"unknown activation {name!r}")


class MlpNet:
    """A dense feed-forward network.

    Parameters
    ----------
    layer_sizes : sequence of int
        Node counts per layer, input first (e.g. [3, 6, 6, 3]).
    activations : sequence of str
        One activation name per weight layer; length len(layer_sizes)-1.
    weights, biases : lists of arrays
        W_l has shape (layer_sizes[l+1], layer_sizes[l]); b_l matches W_l rows.
    rng_seed : int
        Seed the weights were drawn from (bookkeeping only).
    """

    def __init__(self, layer_sizes, activations, weights, biases, rng_seed=0):
        layer_sizes = [int(n) for n in layer_sizes]
        activations = list(activations)
        if len(layer_sizes) < 2:
            raise InvalidParameterError(
                "a network needs an input and an output layer")
        if any(n < 1 for n in layer_sizes):
            raise InvalidParameterError("layer sizes must be positive")
        if len(activations) != len(layer_sizes) - 1:
            raise DimensionMismatchError(
                f"{len(activations)} activations for {len(layer_sizes)} layers")
        for name in activations:
            if name not in ACTIVATIONS:
                raise InvalidParameterError(f"unknown activation {name!r}")
        for l, (w, b) in enumerate(zip(weights, biases)):
            if w.shape != (layer_sizes[l + 1], layer_sizes[l]):
                raise DimensionMismatchError(
                    f"weight {l} has shape {w.shape}, expected "
                    f"{(layer_sizes[l + 1], layer_sizes[l])}")
            if b.shape != (layer_sizes[l + 1],):
                raise DimensionMismatchError(
                    f"bias {l} has shape {b.shape}")
        self.layer_sizes = layer_sizes
        self.activations = activations
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]
        self.rng_seed = int(rng_seed)

    @property
    def n_inputs(self):
        return self.layer_sizes[0]

    @property
    def n_outputs(self):
        return self.layer_sizes[-1]

    def copy(self):
        return MlpNet(self.layer_sizes, self.activations,
                      [w.copy() for w in self.weights],
                      [b.copy() for b in self.biases], self.rng_seed)


def make_net(layer_sizes, activations, init="he", init_range=0.2, seed=0):
    """Create a network with freshly initialized weights and zero biases.

    init='he' draws weights from N(0, 2/fan_in); init='uniform' draws from
    U(-init_range, +init_range).
    """
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        if init == "he":
            w = rng.normal(0.0, np.sqrt(2.0 / n_in), size=(n_out, n_in))
        elif init == "uniform":
            w = rng.uniform(-init_range, init_range, size=(n_out, n_in))
        else:
            raise InvalidParameterError(f"unknown initializer {init!r}")
        weights.append(w)
        biases.append(np.zeros(n_out))
    return MlpNet(layer_sizes, activations, weights, biases, seed)


def forward(net, x):
    """Evaluate the network on a single vector (d,) or a batch (N, d)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    a = x[None, :] if single else x
    if a.shape[1] != net.n_inputs:
        raise DimensionMismatchError(
            f"input width {a.shape[1]}, network expects {net.n_inputs}")
    for w, b, name in zip(net.weights, net.biases, net.activations):
        a = _act(name, a @ w.T + b)
    return a[0] if single else a


def forward_trace(net, x):
    """Forward pass over a batch returning all layer activations.

    Returns the list [a_0, a_1, ..., a_L] with a_0 the input batch.
    """
    a = np.asarray(x, dtype=float)
    trace = [a]
    for w, b, name in zip(net.weights, net.biases, net.activations):
        a = _act(name, a @ w.T + b)
        trace.append(a)
    return trace


def jacobian(net, x):
    """Analytic d(output)/d(input) at a single input point, via chain rule."""
    x = np.asarray(x, dtype=float)
    if x.shape != (net.n_inputs,):
        raise DimensionMismatchError(
            f"input shape {x.shape}, network expects ({net.n_inputs},)")
    a = x
    jac = np.eye(net.n_inputs)
    for w, b, name in zip(net.weights, net.biases, net.activations):
        a = _act(name, w @ a + b)
        jac = (_act_prime_from_value(name, a)[:, None] * w) @ jac
    return jac


def _gradients(net, x, y):
    """Full-batch gradient of the mean 0.5*||y - yhat||^2 loss.

    Returns (loss, [dW...], [db...]).
    """
    n = x.shape[0]
    trace = forward_trace(net, x)
    out = trace[-1]
    diff = out - y
    loss = 0.5 * float(np.sum(diff * diff)) / n
    delta = diff / n
    grads_w = [None] * len(net.weights)
    grads_b = [None] * len(net.weights)
    for l in range(len(net.weights) - 1, -1, -1):
        dz = delta * _act_prime_from_value(net.activations[l], trace[l + 1])
        grads_w[l] = dz.T @ trace[l]
        grads_b[l] = dz.sum(axis=0)
        if l > 0:
            delta = dz @ net.weights[l]
    return loss, grads_w, grads_b


class TrainConfig:
    """Training hyperparameters for either optimizer.

    The effective number of epochs is iterations * epochs: the outer
    iteration loop re-enters training with optimizer state carried over, so
    for a fixed dataset it is equivalent to one long run (the iteration
    structure exists to mirror staged training protocols).  epochs=0 is
    allowed and returns the initial network unchanged.
    """

    def __init__(self, optimizer="rprop", epochs=1, iterations=1,
                 learning_rate=0.03, adam_beta1=0.9, adam_beta2=0.999,
                 adam_eps=1e-8, rprop_eta_plus=1.2, rprop_eta_minus=0.5,
                 rprop_delta0=0.1, rprop_delta_min=1e-6, rprop_delta_max=50.0,
                 freeze_biases=False):
        if optimizer not in ("rprop", "adam"):
            raise InvalidParameterError(f"unknown optimizer {optimizer!r}")
        if epochs < 0 or iterations < 1:
            raise InvalidParameterError("epochs must be >= 0, iterations >= 1")
        self.optimizer = optimizer
        self.epochs = int(epochs)
        self.iterations = int(iterations)
        self.learning_rate = float(learning_rate)
        self.adam_beta1 = float(adam_beta1)
        self.adam_beta2 = float(adam_beta2)
        self.adam_eps = float(adam_eps)
        self.rprop_eta_plus = float(rprop_eta_plus)
        self.rprop_eta_minus = float(rprop_eta_minus)
        self.rprop_delta0 = float(rprop_delta0)
        self.rprop_delta_min = float(rprop_delta_min)
        self.rprop_delta_max = float(rprop_delta_max)
        self.freeze_biases = bool(freeze_biases)


def train(net, x, y, cfg):
    """Train a copy of `net` on (x, y) and return (trained_net, loss_trace).

    Full-batch deterministic training; the loss trace has one entry per
    epoch (iterations * epochs entries in total) recorded before each
    parameter update.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 2 or y.ndim != 2 or x.shape[0] != y.shape[0]:
        raise DimensionMismatchError("x and y must be 2-D with equal rows")
    if x.shape[0] == 0:
        raise InvalidParameterError("empty training set")
    if x.shape[1] != net.n_inputs or y.shape[1] != net.n_outputs:
        raise DimensionMismatchError(
            f"data widths {x.shape[1]}/{y.shape[1]} do not match network "
            f"{net.n_inputs}/{net.n_outputs}")

    out = net.copy()
    params = out.weights + ([] if cfg.freeze_biases else out.biases)
    total = cfg.iterations * cfg.epochs
    losses = []
    if total == 0:
        return out, losses

    if cfg.optimizer == "rprop":
        step = [np.full_like(p, cfg.rprop_delta0) for p in params]
        prev = [np.zeros_like(p) for p in params]
    else:
        m = [np.zeros_like(p) for p in params]
        v = [np.zeros_like(p) for p in params]
        t = 0

    n_w = len(out.weights)
    for _ in range(total):
        loss, gw, gb = _gradients(out, x, y)
        if not np.isfinite(loss):
            raise TrainingDivergedError(
                f"non-finite loss at epoch {len(losses)}")
        losses.append(loss)
        grads = gw + ([] if cfg.freeze_biases else gb)
        if cfg.optimizer == "rprop":
            for p, g, d, gp in zip(params, grads, step, prev):
                sign_change = g * gp
                d *= np.where(sign_change > 0, cfg.rprop_eta_plus,
                              np.where(sign_change < 0, cfg.rprop_eta_minus,
                                       1.0))
                np.clip(d, cfg.rprop_delta_min, cfg.rprop_delta_max, out=d)
                p -= np.sign(g) * d
                gp[...] = g
        else:
            t += 1
            b1, b2 = cfg.adam_beta1, cfg.adam_beta2
            for p, g, mi, vi in zip(params, grads, m, v):
                mi *= b1
                mi += (1 - b1) * g
                vi *= b2
                vi += (1 - b2) * g * g
                mhat = mi / (1 - b1 ** t)
                vhat = vi / (1 - b2 ** t)
                p -= cfg.learning_rate * mhat / (np.sqrt(vhat) + cfg.adam_eps)
    return out, losses


# ---------------------------------------------------------------------------
# serialization: versioned text block, bit-exact round trip via float repr
# ---------------------------------------------------------------------------

def _fmt_row(values):
    return " ".join(repr(float(v)) for v in values)


def dump_net(net, fh):
    """Write the network as a versioned text block to a file object."""
    fh.write("mlpnet 1\n")
    fh.write(f"seed {net.rng_seed}\n")
    fh.write("layers " + " ".join(str(n) for n in net.layer_sizes) + "\n")
    fh.write("activations " + " ".join(net.activations) + "\n")
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        fh.write(f"W {l} {w.shape[0]} {w.shape[1]}\n")
        for row in w:
            fh.write(_fmt_row(row) + "\n")
        fh.write(f"b {l} {b.shape[0]}\n")
        fh.write(_fmt_row(b) + "\n")
    fh.write("end mlpnet\n")


def parse_net(lines):
    """Parse a network from an iterator of lines positioned at 'mlpnet 1'."""
    header = next(lines).split()
    if header[:2] != ["mlpnet", "1"]:
        raise InvalidParameterError(f"bad network header: {header}")
    seed = int(next(lines).split()[1])
    sizes = [int(v) for v in next(lines).split()[1:]]
    acts = next(lines).split()[1:]
    weights, biases = [], []
    for l in range(len(sizes) - 1):
        tag, li, rows, cols = next(lines).split()
        assert tag == "W" and int(li) == l
        w = np.array([[float(v) for v in next(lines).split()]
                      for _ in range(int(rows))])
        assert w.shape == (int(rows), int(cols))
        tag, li, n = next(lines).split()
        assert tag == "b" and int(li) == l
        b = np.array([float(v) for v in next(lines).split()])
        assert b.shape == (int(n),)
        weights.append(w)
        biases.append(b)
    trailer = next(lines).strip()
    if trailer != "end mlpnet":
        raise InvalidParameterError(f"bad network trailer: {trailer!r}")
    return MlpNet(sizes, acts, weights, biases, seed)


def save_net(net, path):
    with open(path, "w") as fh:
        dump_net(net, fh)


def load_net(path):
    with open(path) as fh:
        return parse_net(iter(fh))


def net_to_text(net):
    buf = io.StringIO()
    dump_net(net, buf)
    return buf.getvalue()


def net_from_text(text):
    return parse_net(iter(text.splitlines()))
