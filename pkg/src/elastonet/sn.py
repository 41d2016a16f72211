"""Spatial network: a smooth map from coordinates to strain-scale vectors.

The scaling field produced by per-point descent is a scattered table of
3-vectors S at element centroids.  The spatial network generalizes that
table to the whole domain: mesh coordinates are normalized to the
centered [-1, 1]^2 square, fed through a five-hidden-layer MLP whose
logistic output layer keeps raw outputs in (0, 1), and decoded through a
per-component affine map.  Training compresses each scale component so
its minimum lands at ``target_lo`` and its maximum at ``target_hi``
(0.1-0.8 by default); the stored affine is the inverse of that map, so

    S(p) = offset + gain * net(normalize(p))

recovers physical scale units.  A component with zero spread across the
field is degenerate: its target is the fixed midpoint 0.45, its gain is
zero, and decoding returns the constant exactly.
"""

import numpy as np

from .errors import (DataFormatError, InvalidParameterError,
                     OutOfDomainError)
from .femesh import normalize_coord
from .mlpcore import (TrainConfig, forward, make_net, net_from_text,
                      net_to_text, train)

SN_LAYERS = (2, 25, 25, 25, 25, 25, 3)
SN_ACTIVATIONS = ("logistic", "tanh", "tanh", "tanh", "tanh", "logistic")
DEFAULT_TARGET_LO = 0.1
DEFAULT_TARGET_HI = 0.8
DEGENERATE_TARGET = 0.45
DEFAULT_LEARNING_RATE = 0.03
SCALE_FLOOR = 1e-3


class SnTrainSpec:
    """Training protocol for the spatial network.

    The outer ``iterations`` loop re-enters the optimizer with weights
    carried over, so the effective schedule is iterations * epochs
    full-batch Adam updates with one concatenated loss trace.
    """

    def __init__(self, iterations, epochs,
                 learning_rate=DEFAULT_LEARNING_RATE,
                 target_lo=DEFAULT_TARGET_LO, target_hi=DEFAULT_TARGET_HI,
                 seed=0):
        if iterations < 1 or epochs < 1:
            raise InvalidParameterError(
                "iterations and epochs must be positive")
        if not 0.0 < target_lo < target_hi < 1.0:
            raise InvalidParameterError(
                "targets must satisfy 0 < lo < hi < 1")
        if learning_rate <= 0:
            raise InvalidParameterError("learning rate must be positive")
        self.iterations = int(iterations)
        self.epochs = int(epochs)
        self.learning_rate = float(learning_rate)
        self.target_lo = float(target_lo)
        self.target_hi = float(target_hi)
        self.seed = int(seed)


def train_spec(preset, seed=0):
    """Named training protocols: the short and long reconstruction runs."""
    if preset == "test1":
        return SnTrainSpec(iterations=10, epochs=300, seed=seed)
    if preset == "test2":
        return SnTrainSpec(iterations=30, epochs=600, seed=seed)
    raise InvalidParameterError(
        f"unknown spatial-network preset {preset!r}; "
        "expected 'test1' or 'test2'")


class SpatialNet:
    """Trained coordinate-to-scale map with its decoding affine.

    ``gain`` and ``offset`` are 3-vectors decoding the network's (0, 1)
    outputs back to scale units; ``center`` and ``half_extent`` record
    the coordinate normalization of the training mesh so a loaded
    network is usable without it.
    """

    def __init__(self, net, gain, offset, center, half_extent):
        if tuple(net.layer_sizes) != SN_LAYERS:
            raise InvalidParameterError(
                f"spatial network must have layers {SN_LAYERS}, "
                f"got {tuple(net.layer_sizes)}")
        if tuple(net.activations) != SN_ACTIVATIONS:
            raise InvalidParameterError(
                f"spatial network must use activations {SN_ACTIVATIONS}, "
                f"got {tuple(net.activations)}")
        gain = np.asarray(gain, dtype=float)
        offset = np.asarray(offset, dtype=float)
        center = np.asarray(center, dtype=float)
        half_extent = np.asarray(half_extent, dtype=float)
        if gain.shape != (3,) or offset.shape != (3,):
            raise InvalidParameterError(
                "decoding gain and offset must be 3-vectors")
        if np.any(gain < 0.0) or not np.all(np.isfinite(gain)) \
                or not np.all(np.isfinite(offset)):
            raise InvalidParameterError(
                "decoding affine must be finite with nonnegative gain")
        if center.shape != (2,) or half_extent.shape != (2,) \
                or np.any(half_extent <= 0.0):
            raise InvalidParameterError(
                "mesh normalization needs a 2-vector center and a "
                "positive 2-vector half extent")
        self.net = net
        self.gain = gain
        self.offset = offset
        self.center = center
        self.half_extent = half_extent

    def copy(self):
        return SpatialNet(self.net.copy(), self.gain.copy(),
                          self.offset.copy(), self.center.copy(),
                          self.half_extent.copy())

    def decode(self, raw):
        """Map raw network outputs in (0, 1) to scale units.

        Decoded values are clamped at a small positive floor so extreme
        extrapolation can never produce a nonpositive scale.
        """
        return np.maximum(self.offset + self.gain * np.asarray(raw),
                          SCALE_FLOOR)

    # -- serialization ----------------------------------------------------
    def to_text(self):
        def row(name, values):
            return name + " " + " ".join(repr(float(v)) for v in values) \
                + "\n"

        return ("snfile 1\n"
                + row("center", self.center)
                + row("half_extent", self.half_extent)
                + row("gain", self.gain)
                + row("offset", self.offset)
                + net_to_text(self.net)
                + "end snfile\n")

    @classmethod
    def from_text(cls, text):
        lines = text.splitlines()
        if not lines or lines[0].split() != ["snfile", "1"]:
            raise DataFormatError("not a version-1 spatial network file")
        meta = {}
        widths = {"center": 2, "half_extent": 2, "gain": 3, "offset": 3}
        body_start = 1
        for i, line in enumerate(lines[1:], start=1):
            parts = line.split()
            if parts and parts[0] in widths:
                if len(parts) != widths[parts[0]] + 1:
                    raise DataFormatError(
                        f"spatial network field {parts[0]!r} needs "
                        f"{widths[parts[0]]} values")
                meta[parts[0]] = [float(v) for v in parts[1:]]
                body_start = i + 1
            else:
                break
        missing = sorted(set(widths) - set(meta))
        if missing:
            raise DataFormatError(
                f"spatial network file lacks fields: {', '.join(missing)}")
        body = lines[body_start:]
        if not body or body[-1].strip() != "end snfile":
            raise DataFormatError(
                "spatial network file lacks its end marker")
        net = net_from_text("\n".join(body[:-1]) + "\n")
        return cls(net, meta["gain"], meta["offset"], meta["center"],
                   meta["half_extent"])

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_text(fh.read())


def compress_targets(scales, target_lo=DEFAULT_TARGET_LO,
                     target_hi=DEFAULT_TARGET_HI):
    """Affinely map each scale component into [target_lo, target_hi].

    Returns (targets, gain, offset) with the inverse map stored as
    S = offset + gain * target.  A constant component maps to the fixed
    midpoint with zero gain so decoding returns the constant.
    """
    scales = np.asarray(scales, dtype=float)
    if scales.ndim != 2 or scales.shape[1] != 3:
        raise InvalidParameterError("scale table must have shape (P, 3)")
    lo = scales.min(axis=0)
    hi = scales.max(axis=0)
    span = hi - lo
    gain = np.zeros(3)
    offset = np.zeros(3)
    targets = np.empty_like(scales)
    for k in range(3):
        if span[k] > 0.0:
            gain[k] = span[k] / (target_hi - target_lo)
            offset[k] = lo[k] - target_lo * gain[k]
            targets[:, k] = target_lo \
                + (scales[:, k] - lo[k]) / gain[k]
        else:
            gain[k] = 0.0
            offset[k] = lo[k]
            targets[:, k] = DEGENERATE_TARGET
    return targets, gain, offset


def fit(field, mesh, spec):
    """Train a spatial network on a scaling field over a mesh.

    Returns (SpatialNet, loss_trace).  Coordinates outside the mesh
    bounding box raise OutOfDomainError; a NaN loss aborts training with
    TrainingDivergedError.
    """
    if field.xy_mm.shape[0] < 1:
        raise InvalidParameterError("scaling field is empty")
    inputs = normalize_coord(mesh, field.xy_mm)
    targets, gain, offset = compress_targets(field.scales, spec.target_lo,
                                             spec.target_hi)
    net = make_net(SN_LAYERS, SN_ACTIVATIONS, init="he", seed=spec.seed)
    cfg = TrainConfig(optimizer="adam", epochs=spec.epochs,
                      iterations=spec.iterations,
                      learning_rate=spec.learning_rate)
    trained, trace = train(net, inputs, targets, cfg)
    sn = SpatialNet(trained, gain, offset, mesh.center, mesh.half_extent)
    return sn, trace


def predict_scale(sn, mesh, p):
    """Evaluate the scale vector(s) at mm coordinates.

    ``p`` is a single (x, y) pair or an (N, 2) batch.  ``mesh`` supplies
    the coordinate normalization and domain check; pass None to use the
    normalization stored in the network (same bounding-box check).
    """
    if mesh is not None:
        q = normalize_coord(mesh, p)
    else:
        q = _stored_normalize(sn, p)
    return sn.decode(forward(sn.net, q))


def _stored_normalize(sn, p):
    p = np.asarray(p, dtype=float)
    single = p.ndim == 1
    pts = p[None, :] if single else p
    lo = sn.center - sn.half_extent
    hi = sn.center + sn.half_extent
    tol = 1e-9
    if ((pts < lo - tol) | (pts > hi + tol)).any():
        bad = pts[((pts < lo - tol) | (pts > hi + tol)).any(axis=1)][0]
        raise OutOfDomainError(
            f"point ({bad[0]}, {bad[1]}) outside stored domain {lo}..{hi}")
    out = (pts - sn.center) / sn.half_extent
    return out[0] if single else out


def field_recall(sn, mesh, field):
    """Relative per-component recall error of the network on its field.

    Returns an (P, 3) array |S_pred - S_field| / max(|S_field|, floor),
    a quick fidelity diagnostic for a freshly trained network.
    """
    pred = predict_scale(sn, mesh, field.xy_mm)
    denom = np.maximum(np.abs(field.scales), SCALE_FLOOR)
    return np.abs(pred - field.scales) / denom
