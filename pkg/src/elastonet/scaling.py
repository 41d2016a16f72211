"""Per-point gradient descent for the spatial strain-scaling field.

Every sample coordinate x carries a scale vector S_x (3 components, one
per Voigt strain component).  Starting from S = (1, 1, 1), each outer
iteration sweeps the components sequentially: the update for component k
accumulates, over the samples at x,

    delta_k = -(eta / M) * sum_m  e_m . shat_m(k)

where e_m = sigma_t_m - sigma_nn_m is the stress misfit in training units
and shat_m(k) is the network output with every scaled-input component
except k zeroed (the masked prediction).  The minus sign makes the sweep a
descent on the squared stress misfit; the same rule with a positive sign
ascends and diverges.  The exact variant replaces e . shat(k) with the
tangent-stiffness inner product e . D[:, k] * scaled_strain_k, which is
the analytic gradient up to the positive factor dropped by the masked
approximation.

Components are clamped at a positive floor; per-iteration (min, max,
mean) RMS misfit curves across coordinates are recorded for convergence
reporting.

A per-point backtracking guard protects the sweep against step-size
overshoot: when an iteration increases a point's own RMS misfit, that
point's sweep is retried from its pre-iteration state with the step size
halved (up to `max_backtracks` times; the step is skipped outright if no
halving helps).  Without the guard, a large step through the saturating
region of the network can catapult a scale component onto the flat
far-field plateau of the misfit surface, stranding that point at a huge
scale value that then wrecks the spatial network's target compression.
The guard never alters update directions or fixed points, only step
acceptance; `max_backtracks=0` disables it.
"""

import time

import numpy as np

from .errors import (DataFormatError, InvalidParameterError,
                     InvalidScaleError, TrainingDivergedError,
                     UnitMismatchError)
from .mlpcore import forward

_FIELD_HEADER = "x_mm,y_mm,S1,S2,S3"
_CURVE_HEADER = "iter,min_rms,max_rms,mean_rms"


class GdConfig:
    """Gradient-descent settings for the scaling field."""

    def __init__(self, n_iterations=150, eta=2.5, s_floor=1e-3,
                 use_exact_gradient=False, max_backtracks=6):
        if n_iterations < 1:
            raise InvalidParameterError("need at least one iteration")
        if eta <= 0:
            raise InvalidParameterError("step size eta must be positive")
        if s_floor <= 0:
            raise InvalidParameterError("scale floor must be positive")
        if max_backtracks < 0:
            raise InvalidParameterError("max_backtracks must be >= 0")
        self.n_iterations = int(n_iterations)
        self.eta = float(eta)
        self.s_floor = float(s_floor)
        self.use_exact_gradient = bool(use_exact_gradient)
        self.max_backtracks = int(max_backtracks)


class ScalingField:
    """Scale vectors at sample coordinates plus convergence curves."""

    def __init__(self, xy_mm, scales, iteration_errors=None, config=None):
        self.xy_mm = np.asarray(xy_mm, dtype=float).reshape(-1, 2)
        self.scales = np.asarray(scales, dtype=float).reshape(-1, 3)
        if self.xy_mm.shape[0] != self.scales.shape[0]:
            raise InvalidParameterError(
                "coordinate and scale counts disagree")
        if np.any(self.scales <= 0):
            raise InvalidScaleError("scale components must be positive")
        self.iteration_errors = None if iteration_errors is None \
            else np.asarray(iteration_errors, dtype=float).reshape(-1, 3)
        self.config = config
        self._index = None

    @property
    def n_points(self):
        return self.xy_mm.shape[0]

    def scale_at(self, x, y):
        """Scale vector at an exact sample coordinate."""
        if self._index is None:
            self._index = {(float(px), float(py)): i
                           for i, (px, py) in enumerate(self.xy_mm)}
        key = (float(x), float(y))
        if key not in self._index:
            raise InvalidParameterError(
                f"no scaling entry at coordinate ({x}, {y})")
        return self.scales[self._index[key]].copy()

    def save_csv(self, path):
        with open(path, "w") as fh:
            fh.write(_FIELD_HEADER + "\n")
            for (x, y), s in zip(self.xy_mm, self.scales):
                fh.write(",".join(repr(float(v))
                                  for v in (x, y, s[0], s[1], s[2])) + "\n")

    @classmethod
    def load_csv(cls, path):
        rows = _read_csv_rows(path, _FIELD_HEADER, 5)
        return cls(rows[:, 0:2], rows[:, 2:5])

    def save_error_curves(self, path):
        if self.iteration_errors is None:
            raise InvalidParameterError("field carries no error curves")
        with open(path, "w") as fh:
            fh.write(_CURVE_HEADER + "\n")
            for i, row in enumerate(self.iteration_errors, start=1):
                fh.write(f"{i}," + ",".join(repr(float(v))
                                            for v in row) + "\n")

    @staticmethod
    def load_error_curves(path):
        rows = _read_csv_rows(path, _CURVE_HEADER, 4)
        return rows[:, 1:4]


def _read_csv_rows(path, header, n_cols):
    rows = []
    header_seen = False
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if not header_seen:
                if line != header:
                    raise DataFormatError(
                        f"{path}: unexpected header {line!r}")
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != n_cols:
                raise DataFormatError(
                    f"{path}: expected {n_cols} columns, got {len(parts)}")
            rows.append([float(v) for v in parts])
    if not header_seen:
        raise DataFormatError(f"{path}: missing header")
    return np.asarray(rows, dtype=float).reshape(-1, n_cols)


def _group_samples(samples):
    """Group sample rows by coordinate in first-appearance order.

    Returns (xy (P,2), stress (P,M,3), strain (P,M,3), mask (P,M)) with
    groups zero-padded to the largest group size; stress in training units.
    """
    order = {}
    for i in range(samples.n_samples):
        key = (samples.xy_mm[i, 0], samples.xy_mm[i, 1])
        order.setdefault(key, []).append(i)
    keys = list(order)
    sizes = [len(order[k]) for k in keys]
    p, m = len(keys), max(sizes)
    xy = np.array(keys, dtype=float).reshape(p, 2)
    stress = np.zeros((p, m, 3))
    strain = np.zeros((p, m, 3))
    mask = np.zeros((p, m))
    scaled = samples.scaled_stress()
    for gi, k in enumerate(keys):
        idx = order[k]
        stress[gi, :len(idx)] = scaled[idx]
        strain[gi, :len(idx)] = samples.strain[idx]
        mask[gi, :len(idx)] = 1.0
    return xy, stress, strain, mask


def _sweep(mpn_model, stress, strain, mask, counts, s, eta, s_floor):
    """One sequential k-sweep of the masked-prediction update on padded
    (P, M, 3) groups; returns the updated scales (input untouched)."""
    net = mpn_model.net
    p, m = mask.shape
    s = s.copy()
    for k in (0, 1, 2):
        scaled_in = strain / s[:, None, :]
        pred = mpn_model.stress_scale \
            * forward(net, scaled_in.reshape(p * m, 3)).reshape(p, m, 3)
        err = stress - pred
        masked = np.zeros((p * m, 3))
        masked[:, k] = scaled_in[:, :, k].ravel()
        shat = forward(net, masked).reshape(p, m, 3)
        acc = np.einsum("pmi,pmi,pm->p", err, shat, mask)
        s[:, k] -= eta * acc / counts
        np.maximum(s[:, k], s_floor, out=s[:, k])
    return s


def _point_rms(mpn_model, stress, strain, mask, counts, s):
    """Per-point RMS stress misfit (training units) at scales `s`."""
    p, m = mask.shape
    err = stress - mpn_model.stress_scale \
        * forward(mpn_model.net,
                  (strain / s[:, None, :]).reshape(p * m, 3)).reshape(p, m, 3)
    sq = np.einsum("pmi,pmi,pm->p", err, err, mask)
    return np.sqrt(sq / counts)


def _descent(mpn_model, xy, stress, strain, mask, s0, cfg):
    """Run the masked-prediction descent on padded (P, M, 3) groups.

    Returns (scales (P,3), iteration_errors (N,3)).
    """
    counts = mask.sum(axis=1)
    if np.any(counts < 1):
        raise InvalidParameterError("every coordinate needs a sample")
    s = np.array(s0, dtype=float).reshape(-1, 3).copy()
    errors = np.empty((cfg.n_iterations, 3))
    rms_cur = _point_rms(mpn_model, stress, strain, mask, counts, s) \
        if cfg.max_backtracks else None
    for n in range(cfg.n_iterations):
        if cfg.max_backtracks == 0:
            s = _sweep(mpn_model, stress, strain, mask, counts, s,
                       cfg.eta, cfg.s_floor)
            if not np.all(np.isfinite(s)):
                bad = np.argwhere(~np.isfinite(s))[0, 0]
                raise TrainingDivergedError(
                    f"scale update diverged at point "
                    f"({xy[bad, 0]}, {xy[bad, 1]}) on iteration {n + 1}")
            rms_cur = _point_rms(mpn_model, stress, strain, mask, counts, s)
        else:
            todo = np.arange(s.shape[0])
            eta = cfg.eta
            for _ in range(cfg.max_backtracks + 1):
                cand = _sweep(mpn_model, stress[todo], strain[todo],
                              mask[todo], counts[todo], s[todo], eta,
                              cfg.s_floor)
                rms_new = _point_rms(mpn_model, stress[todo], strain[todo],
                                     mask[todo], counts[todo], cand)
                ok = rms_new <= rms_cur[todo]
                keep = todo[ok]
                s[keep] = cand[ok]
                rms_cur[keep] = rms_new[ok]
                todo = todo[~ok]
                if todo.size == 0:
                    break
                eta /= 2.0
            # points left in `todo` found no improving step: skipped
        errors[n] = (rms_cur.min(), rms_cur.max(), rms_cur.mean())
    return s, errors


def _unzip_samples(samples_at_x):
    pairs = list(samples_at_x)
    if not pairs:
        raise InvalidParameterError("need at least one sample at the point")
    stress = np.asarray([p[0] for p in pairs], dtype=float).reshape(-1, 3)
    strain = np.asarray([p[1] for p in pairs], dtype=float).reshape(-1, 3)
    return stress, strain


def update_point(mpn_model, samples_at_x, s_current=None, cfg=None):
    """Descend the scale vector of one coordinate.

    `samples_at_x` is a sequence of (stress, strain) pairs with stress in
    training units.  Returns (scale vector, final RMS misfit).
    """
    if cfg is None:
        cfg = GdConfig()
    stress, strain = _unzip_samples(samples_at_x)
    s0 = np.ones(3) if s_current is None \
        else np.asarray(s_current, dtype=float)
    if s0.shape != (3,) or np.any(s0 <= 0):
        raise InvalidScaleError("current scale must be a positive 3-vector")
    mask = np.ones((1, stress.shape[0]))
    s, errors = _descent(mpn_model, np.zeros((1, 2)), stress[None],
                         strain[None], mask, s0[None], cfg)
    return s[0], float(errors[-1, 2])


def update_point_exact(mpn_model, samples_at_x, s_current=None, cfg=None):
    """Like update_point but with the analytic tangent-stiffness gradient.

    Evaluates one network Jacobian per sample per component per iteration,
    which is what the masked approximation avoids.
    """
    if cfg is None:
        cfg = GdConfig()
    stress, strain = _unzip_samples(samples_at_x)
    s = np.ones(3) if s_current is None \
        else np.asarray(s_current, dtype=float).copy()
    if s.shape != (3,) or np.any(s <= 0):
        raise InvalidScaleError("current scale must be a positive 3-vector")
    m = stress.shape[0]

    def sweep(s_in, eta):
        out = s_in.copy()
        for k in range(3):
            acc = 0.0
            for i in range(m):
                err = stress[i] - mpn_model.predict_scaled(strain[i], out)
                d = mpn_model.tangent_stiffness(strain[i], out)
                acc += (err @ d[:, k]) * (strain[i, k] / out[k])
            out[k] -= eta * acc / m
            out[k] = max(out[k], cfg.s_floor)
        return out

    def rms(sc):
        sq = [float(np.sum((stress[i]
                            - mpn_model.predict_scaled(strain[i], sc)) ** 2))
              for i in range(m)]
        return float(np.sqrt(np.mean(sq)))

    rms_cur = rms(s)
    for n in range(cfg.n_iterations):
        if cfg.max_backtracks == 0:
            s = sweep(s, cfg.eta)
            if not np.all(np.isfinite(s)):
                raise TrainingDivergedError(
                    f"exact scale update diverged on iteration {n + 1}")
            continue
        eta = cfg.eta
        for _ in range(cfg.max_backtracks + 1):
            cand = sweep(s, eta)
            rms_new = rms(cand)
            if rms_new <= rms_cur:
                s, rms_cur = cand, rms_new
                break
            eta /= 2.0
    return s


def compute_field(mpn_model, samples, cfg=None):
    """Gradient-descend a scale vector at every sample coordinate.

    Points are independent; the per-iteration error rows aggregate the
    RMS stress misfit (training units) across coordinates.
    """
    if cfg is None:
        cfg = GdConfig()
    if not np.isclose(samples.stress_unit_pa, mpn_model.stress_unit_pa):
        raise UnitMismatchError(
            f"dataset stress unit {samples.stress_unit_pa} Pa does not "
            f"match network unit {mpn_model.stress_unit_pa} Pa")
    xy, stress, strain, mask = _group_samples(samples)
    if cfg.use_exact_gradient:
        scales = np.empty((xy.shape[0], 3))
        for p in range(xy.shape[0]):
            rows = mask[p] > 0
            pairs = list(zip(stress[p][rows], strain[p][rows]))
            scales[p] = update_point_exact(mpn_model, pairs, None, cfg)
        errors = _misfit_errors(mpn_model, stress, strain, mask, scales)
        return ScalingField(xy, scales, errors, cfg)
    s0 = np.ones((xy.shape[0], 3))
    scales, errors = _descent(mpn_model, xy, stress, strain, mask, s0, cfg)
    return ScalingField(xy, scales, errors, cfg)


def _misfit_errors(mpn_model, stress, strain, mask, scales):
    """Single (min, max, mean) RMS row for a finished field."""
    p, m = mask.shape
    err = stress - mpn_model.stress_scale \
        * forward(mpn_model.net,
                  (strain / scales[:, None, :]).reshape(p * m, 3)) \
        .reshape(p, m, 3)
    sq = np.einsum("pmi,pmi,pm->p", err, err, mask)
    rms = np.sqrt(sq / mask.sum(axis=1))
    return np.array([[rms.min(), rms.max(), rms.mean()]])


def compare_update_rules(mpn_model, samples, cfg=None, n_points=100,
                         timing_points=8, rng_seed=0):
    """Measure agreement and relative cost of the two update rules.

    Cosine similarity compares the first-iteration update directions from
    S = (1,1,1) at up to `n_points` sampled coordinates; wall-clock timing
    runs both rules to full iteration count on `timing_points` coordinates.
    Returns a dict with the cosines, their mean, and the timings.
    """
    if cfg is None:
        cfg = GdConfig()
    xy, stress, strain, mask = _group_samples(samples)
    rng = np.random.default_rng(rng_seed)
    n_points = min(n_points, xy.shape[0])
    pick = rng.choice(xy.shape[0], size=n_points, replace=False)

    one_iter = GdConfig(1, cfg.eta, cfg.s_floor)
    cosines = np.empty(n_points)
    for j, p in enumerate(pick):
        rows = mask[p] > 0
        pairs = list(zip(stress[p][rows], strain[p][rows]))
        s_approx, _ = update_point(mpn_model, pairs, None, one_iter)
        s_exact = update_point_exact(mpn_model, pairs, None, one_iter)
        da = s_approx - 1.0
        de = s_exact - 1.0
        denom = np.linalg.norm(da) * np.linalg.norm(de)
        cosines[j] = 1.0 if denom == 0.0 else float(da @ de) / denom

    timing_points = min(timing_points, n_points)
    approx_s = exact_s = 0.0
    for p in pick[:timing_points]:
        rows = mask[p] > 0
        pairs = list(zip(stress[p][rows], strain[p][rows]))
        t0 = time.perf_counter()
        update_point(mpn_model, pairs, None, cfg)
        approx_s += time.perf_counter() - t0
        t0 = time.perf_counter()
        update_point_exact(mpn_model, pairs, None, cfg)
        exact_s += time.perf_counter() - t0
    return {"cosines": cosines,
            "mean_cosine": float(cosines.mean()),
            "approx_seconds": approx_s,
            "exact_seconds": exact_s,
            "speedup": exact_s / approx_s if approx_s > 0 else np.inf}
