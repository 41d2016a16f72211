"""Material property network: the learned reference constitutive model.

A small all-tanh network maps scaled strain vectors to scaled stress
vectors (Voigt order [11, 22, 12]).  Data flow for a physical prediction:

    epsilon -> epsilon / S_eps -> net -> * S_sigma -> stress (training units)

with the per-location strain scale S_eps supplied by the caller and a
global scalar stress scale S_sigma (1.0 by default).  Stresses inside the
network live in training units of `stress_unit_pa` Pa per unit (default
1e4), which keeps every pretraining target below 0.8 in magnitude.
"""

import numpy as np

from .errors import (DataFormatError, InvalidParameterError,
                     InvalidScaleError, UnitMismatchError)
from .fesolve import (DEFAULT_POISSON, STRESS_UNIT_PA, elasticity_matrix)
from .mlpcore import (TrainConfig, forward, jacobian, make_net,
                      net_from_text, net_to_text, train)

MPN_LAYERS = (3, 6, 6, 3)
MPN_ACTIVATIONS = ("tanh", "tanh", "tanh")
DEFAULT_PRETRAIN_EPOCHS = 400
DEFAULT_REFERENCE_YOUNG_PA = 10e3

_SWAP = np.array([[0.0, 1.0, 0.0],
                  [1.0, 0.0, 0.0],
                  [0.0, 0.0, 1.0]])


def _check_scale(scale):
    if scale is None:
        return np.ones(3)
    scale = np.asarray(scale, dtype=float)
    if scale.shape != (3,):
        raise InvalidScaleError("strain scale must be a 3-vector")
    if np.any(scale <= 0.0) or not np.all(np.isfinite(scale)):
        raise InvalidScaleError(
            "strain-scale components must be positive and finite")
    return scale


class MaterialPropertyNet:
    """Wrapper pairing the core MLP with its scaling conventions."""

    def __init__(self, net, stress_scale=1.0, stress_unit_pa=STRESS_UNIT_PA):
        if tuple(net.layer_sizes) != MPN_LAYERS:
            raise InvalidParameterError(
                f"material network must have layers {MPN_LAYERS}, "
                f"got {tuple(net.layer_sizes)}")
        if stress_scale <= 0:
            raise InvalidParameterError("stress scale must be positive")
        self.net = net
        self.stress_scale = float(stress_scale)
        self.stress_unit_pa = float(stress_unit_pa)
        self.default_strain_scale = np.ones(3)

    def copy(self):
        return MaterialPropertyNet(self.net.copy(), self.stress_scale,
                                   self.stress_unit_pa)

    def predict_scaled(self, strain, strain_scale=None):
        """Stress in training units: S_sigma * net(strain / S_eps)."""
        scale = _check_scale(strain_scale)
        strain = np.asarray(strain, dtype=float)
        return self.stress_scale * forward(self.net, strain / scale)

    def predict_stress(self, strain, strain_scale=None):
        """Physical stress in Pa."""
        return self.predict_scaled(strain, strain_scale) * self.stress_unit_pa

    def masked_predict(self, strain, strain_scale, keep_component):
        """Raw net output with all scaled-input components except
        `keep_component` (1-based) zeroed; NOT multiplied by the stress
        scale — this is the masked prediction used by the approximate
        scaling-update rule."""
        k = int(keep_component)
        if k not in (1, 2, 3):
            raise InvalidParameterError(
                f"keep_component must be 1, 2, or 3, got {keep_component}")
        scale = _check_scale(strain_scale)
        strain = np.asarray(strain, dtype=float)
        scaled = strain / scale
        masked = np.zeros_like(scaled)
        masked[..., k - 1] = scaled[..., k - 1]
        return forward(self.net, masked)

    def tangent_stiffness(self, strain, strain_scale=None):
        """D_ij = d sigma_i / d epsilon_j in training units:
        S_sigma * J(strain / S_eps) * diag(1 / S_eps)."""
        scale = _check_scale(strain_scale)
        strain = np.asarray(strain, dtype=float)
        if strain.shape != (3,):
            raise InvalidParameterError(
                "tangent_stiffness expects a single 3-vector strain")
        jac = jacobian(self.net, strain / scale)
        return self.stress_scale * jac / scale[None, :]

    def tangent_stiffness_pa(self, strain, strain_scale=None):
        return self.tangent_stiffness(strain, strain_scale) \
            * self.stress_unit_pa

    # -- serialization ----------------------------------------------------
    def to_text(self):
        return ("mpnfile 1\n"
                f"stress_unit_pa {self.stress_unit_pa!r}\n"
                f"stress_scale {self.stress_scale!r}\n"
                + net_to_text(self.net)
                + "end mpnfile\n")

    @classmethod
    def from_text(cls, text, expect_stress_unit_pa=None):
        lines = text.splitlines()
        if not lines or lines[0].split() != ["mpnfile", "1"]:
            raise DataFormatError("not a version-1 material network file")
        meta = {}
        body_start = 1
        for i, line in enumerate(lines[1:], start=1):
            parts = line.split()
            if parts and parts[0] in ("stress_unit_pa", "stress_scale"):
                meta[parts[0]] = float(parts[1])
                body_start = i + 1
            else:
                break
        if "stress_unit_pa" not in meta or "stress_scale" not in meta:
            raise DataFormatError(
                "material network file lacks stress metadata")
        if expect_stress_unit_pa is not None and not np.isclose(
                meta["stress_unit_pa"], expect_stress_unit_pa):
            raise UnitMismatchError(
                f"network stress unit {meta['stress_unit_pa']} Pa does not "
                f"match expected {expect_stress_unit_pa} Pa")
        body = lines[body_start:]
        if not body or body[-1].strip() != "end mpnfile":
            raise DataFormatError(
                "material network file lacks its end marker")
        net = net_from_text("\n".join(body[:-1]) + "\n")
        return cls(net, meta["stress_scale"], meta["stress_unit_pa"])

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path, expect_stress_unit_pa=None):
        with open(path) as fh:
            return cls.from_text(fh.read(), expect_stress_unit_pa)


def pretraining_pairs(reference_young_pa=DEFAULT_REFERENCE_YOUNG_PA,
                      poisson=DEFAULT_POISSON, n_samples=5000,
                      strain_range=0.2, seed=0,
                      stress_unit_pa=STRESS_UNIT_PA):
    """Synthetic linear-elastic training pairs, axis-swap doubled.

    Strains are uniform per component in [-strain_range, strain_range];
    targets are C(E_ref, nu) . strain expressed in training units.
    """
    if n_samples < 1:
        raise InvalidParameterError("need at least one pretraining sample")
    if strain_range <= 0:
        raise InvalidParameterError("strain range must be positive")
    rng = np.random.default_rng(seed)
    strains = rng.uniform(-strain_range, strain_range, size=(n_samples, 3))
    c_ref = elasticity_matrix(reference_young_pa, poisson)
    targets = strains @ c_ref.T / stress_unit_pa
    strains = np.vstack([strains, strains @ _SWAP.T])
    targets = np.vstack([targets, targets @ _SWAP.T])
    return strains, targets


def pretrain(reference_young_pa=DEFAULT_REFERENCE_YOUNG_PA,
             poisson=DEFAULT_POISSON, n_samples=5000, strain_range=0.2,
             cfg=None, seed=0, stress_scale=None,
             stress_unit_pa=STRESS_UNIT_PA):
    """Train a fresh material network on synthetic reference-material data.

    The strain scale during pretraining is 1; the stress scale defaults to
    1 and is raised automatically to 1.25 * max |target| if any target
    magnitude reaches 0.8.  Post-scaling targets at or beyond 1.0 (outside
    the tanh range) raise a configuration error.
    """
    strains, targets = pretraining_pairs(reference_young_pa, poisson,
                                         n_samples, strain_range, seed,
                                         stress_unit_pa)
    peak = float(np.abs(targets).max())
    if stress_scale is None:
        stress_scale = 1.0
        if peak >= 0.8:
            stress_scale = 1.25 * peak
    else:
        stress_scale = float(stress_scale)
        if stress_scale <= 0:
            raise InvalidParameterError("stress scale must be positive")
    scaled_targets = targets / stress_scale
    if np.abs(scaled_targets).max() >= 1.0:
        raise InvalidParameterError(
            "pretraining targets saturate the output activation; "
            "raise the stress scale or shrink the strain range")
    if cfg is None:
        cfg = TrainConfig(optimizer="rprop", epochs=DEFAULT_PRETRAIN_EPOCHS,
                          iterations=1, freeze_biases=True)
    net = make_net(MPN_LAYERS, MPN_ACTIVATIONS, init="uniform",
                   init_range=0.2, seed=seed)
    net, _ = train(net, strains, scaled_targets, cfg)
    return MaterialPropertyNet(net, stress_scale, stress_unit_pa)
