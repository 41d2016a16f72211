"""Experiment presets and staged end-to-end runs.

A run walks the full chain inside one output directory:

    phantom -> mesh -> forward solve -> reference material network
            -> per-point scaling descent -> spatial network
            -> modulus image -> score

Every stage reads and writes files, so deleting intermediates and
re-running reproduces them bit-exactly under fixed seeds.  The numeric
outcome lands in ``score.json`` (deterministic: identical bytes for
identical seeds); wall-clock timings and artifact paths land in
``report.json``; ``summary.txt`` is the human-readable digest.

The thirteen presets mirror the study design: four phantom models under
the short (test1) and long (test2) spatial-network protocols, the
conforming-mesh variant of model 2, and the 10%/30% noise variants of
model 3.
"""

import json
import os
import sys
import time

import numpy as np

from . import recon as recon_mod
from . import scaling as scaling_mod
from . import sn as sn_mod
from .errors import InvalidParameterError
from .femesh import (load_conforming, load_fixture_mesh, make_rectilinear,
                     save_mesh)
from .fesolve import (DEFAULT_TOTAL_FORCE_N, STRESS_UNIT_PA, LoadProgram,
                      augment_frame_invariance, make_dataset,
                      make_noisy_dataset)
from .mpn import DEFAULT_PRETRAIN_EPOCHS, MaterialPropertyNet, pretrain
from .phantom import field_from_config, save_phantom_config, write_grid_text

DEFAULT_ETA = 250.0
DEFAULT_GD_ITERATIONS = 150
MESH1_NODES_PER_EDGE = 35

_MODEL_PHANTOMS = {
    1: {"kind": "gaussian_inclusion"},
    2: {"kind": "three_inclusion"},
    3: {"kind": "region_labeled"},
    4: {"kind": "image_derived"},
}


class ExperimentConfig:
    """Declarative description of one end-to-end run.

    Stage sub-configs are plain JSON-serializable dicts interpreted by
    the stage builders; unknown keys are rejected there.  ``noise`` is
    None for clean runs or {"relative_magnitude", "rng_seed"} for the
    dual-solve corrupted datasets.
    """

    def __init__(self, name, phantom, mesh, load=None, noise=None,
                 mpn=None, gd=None, sn=None, recon=None, augment=True,
                 poisson=0.5, out_dir=None):
        if not name or not str(name).strip():
            raise InvalidParameterError("experiment needs a nonempty name")
        self.name = str(name)
        self.phantom = dict(phantom)
        self.mesh = dict(mesh)
        self.load = dict(load) if load else {}
        self.noise = dict(noise) if noise else None
        self.mpn = dict(mpn) if mpn else {}
        self.gd = dict(gd) if gd else {}
        self.sn = dict(sn) if sn else {}
        self.recon = dict(recon) if recon else {}
        self.augment = bool(augment)
        self.poisson = float(poisson)
        self.out_dir = out_dir

    def to_dict(self):
        return {
            "name": self.name,
            "phantom": self.phantom,
            "mesh": self.mesh,
            "load": self.load,
            "noise": self.noise,
            "mpn": self.mpn,
            "gd": self.gd,
            "sn": self.sn,
            "recon": self.recon,
            "augment": self.augment,
            "poisson": self.poisson,
            "out_dir": self.out_dir,
        }

    @classmethod
    def from_dict(cls, d):
        known = {"name", "phantom", "mesh", "load", "noise", "mpn", "gd",
                 "sn", "recon", "augment", "poisson", "out_dir"}
        extra = set(d) - known
        if extra:
            raise InvalidParameterError(
                f"unknown experiment-config fields: {sorted(extra)}")
        if "name" not in d or "phantom" not in d or "mesh" not in d:
            raise InvalidParameterError(
                "experiment config needs name, phantom, and mesh")
        return cls(**d)

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def apply_seed(self, seed):
        """Retarget every stochastic stage at one master seed."""
        seed = int(seed)
        self.mpn["seed"] = seed
        self.sn["seed"] = seed
        if self.noise is not None:
            self.noise["rng_seed"] = seed
        return self

    def seeds(self):
        return {
            "mpn": int(self.mpn.get("seed", 0)),
            "sn": int(self.sn.get("seed", 0)),
            "noise": (int(self.noise.get("rng_seed", 0))
                      if self.noise is not None else None),
        }


def list_presets():
    """The thirteen named experiment rows."""
    names = []
    for model in (1, 2):
        names += [f"model{model}_test1", f"model{model}_test2"]
    names.append("model2_mesh2_test1")
    names += ["model3_test1", "model3_test2"]
    for level in (10, 30):
        names += [f"model3_noise{level}_test1", f"model3_noise{level}_test2"]
    names += ["model4_test1", "model4_test2"]
    return names


def preset_config(name, out_dir=None):
    """Build the ExperimentConfig for a named preset."""
    if name not in list_presets():
        raise InvalidParameterError(
            f"unknown preset {name!r}; known: {', '.join(list_presets())}")
    parts = name.split("_")
    model = int(parts[0][len("model"):])
    test = parts[-1]
    use_fixture = "mesh2" in parts
    noise = None
    for p in parts:
        if p.startswith("noise"):
            noise = {"relative_magnitude": int(p[len("noise"):]) / 100.0,
                     "rng_seed": 1}
    if use_fixture:
        mesh = {"kind": "fixture"}
    else:
        mesh = {"kind": "rectilinear", "width_mm": 50.0, "height_mm": 50.0,
                "nodes_per_edge": MESH1_NODES_PER_EDGE}
    return ExperimentConfig(
        name=name,
        phantom=dict(_MODEL_PHANTOMS[model]),
        mesh=mesh,
        load={"total_force_n": DEFAULT_TOTAL_FORCE_N, "n_steps": 4},
        noise=noise,
        mpn={"seed": 0},
        gd={"n_iterations": DEFAULT_GD_ITERATIONS, "eta": DEFAULT_ETA},
        sn={"preset": test, "seed": 0},
        recon={},
        out_dir=out_dir or os.path.join("runs", name),
    )


# ---------------------------------------------------------------------------
# stage builders
# ---------------------------------------------------------------------------

def _build_mesh(cfg, base_dir="."):
    kind = cfg.get("kind", "rectilinear")
    if kind == "rectilinear":
        return make_rectilinear(cfg.get("width_mm", 50.0),
                                cfg.get("height_mm", 50.0),
                                cfg.get("nodes_per_edge",
                                        MESH1_NODES_PER_EDGE))
    if kind == "fixture":
        return load_fixture_mesh()
    if kind == "file":
        return load_conforming(os.path.join(base_dir, cfg["path"]))
    raise InvalidParameterError(f"unknown mesh kind {kind!r}")


_LOAD_KEYS = {"total_force_n", "n_steps", "probe_width_mm", "load_kind",
              "bottom_bc", "thickness_mm"}


def _load_program(cfg):
    extra = set(cfg) - _LOAD_KEYS
    if extra:
        raise InvalidParameterError(
            f"unknown load-program fields: {sorted(extra)}")
    kwargs = dict(cfg)
    kwargs.setdefault("total_force_n", DEFAULT_TOTAL_FORCE_N)
    return LoadProgram(**kwargs)


def _gd_config(cfg):
    return scaling_mod.GdConfig(
        n_iterations=cfg.get("n_iterations", DEFAULT_GD_ITERATIONS),
        eta=cfg.get("eta", DEFAULT_ETA),
        s_floor=cfg.get("s_floor", 1e-3),
        use_exact_gradient=cfg.get("use_exact_gradient", False),
        max_backtracks=cfg.get("max_backtracks", 6))


def _sn_spec(cfg):
    seed = int(cfg.get("seed", 0))
    if "preset" in cfg:
        return sn_mod.train_spec(cfg["preset"], seed=seed)
    return sn_mod.SnTrainSpec(
        iterations=cfg.get("iterations", 10),
        epochs=cfg.get("epochs", 300),
        learning_rate=cfg.get("learning_rate", sn_mod.DEFAULT_LEARNING_RATE),
        target_lo=cfg.get("target_lo", sn_mod.DEFAULT_TARGET_LO),
        target_hi=cfg.get("target_hi", sn_mod.DEFAULT_TARGET_HI),
        seed=seed)


def ensure_reference_mpn(mpn_cfg, cache_dir, poisson=0.5):
    """Load the cached reference material network or pretrain and cache it.

    Pretraining depends only on the reference material and the seed, so
    one cached network is shared by every preset with the same settings.
    """
    seed = int(mpn_cfg.get("seed", 0))
    epochs = int(mpn_cfg.get("epochs", DEFAULT_PRETRAIN_EPOCHS))
    young = float(mpn_cfg.get("reference_young_pa", 10e3))
    key = f"reference_E{young:g}_seed{seed}_ep{epochs}.mpnfile"
    path = os.path.join(cache_dir, key)
    if os.path.exists(path):
        return MaterialPropertyNet.load(
            path, expect_stress_unit_pa=STRESS_UNIT_PA), path
    os.makedirs(cache_dir, exist_ok=True)
    model = pretrain(reference_young_pa=young, poisson=poisson, seed=seed,
                     cfg=None if epochs == DEFAULT_PRETRAIN_EPOCHS
                     else _pretrain_cfg(epochs))
    model.save(path)
    return model, path


def _pretrain_cfg(epochs):
    from .mlpcore import TrainConfig
    return TrainConfig(optimizer="rprop", epochs=epochs, iterations=1,
                       freeze_biases=True)


# ---------------------------------------------------------------------------
# the run itself
# ---------------------------------------------------------------------------

def _note_stage(exc, stage, out_dir):
    message = (f"pipeline stage {stage!r} failed; artifacts under "
               f"{out_dir} are preserved")
    if hasattr(exc, "add_note"):
        exc.add_note(message)
    else:
        print(message, file=sys.stderr)


def run_experiment(cfg, cache_dir=None):
    """Execute one configured experiment; returns the report dict.

    Artifacts are written under ``cfg.out_dir``.  Any stage failure
    propagates with the stage name attached; artifacts already written
    stay on disk.
    """
    out_dir = cfg.out_dir or os.path.join("runs", cfg.name)
    os.makedirs(out_dir, exist_ok=True)
    if cache_dir is None:
        cache_dir = os.path.join(os.path.dirname(os.path.abspath(out_dir)),
                                 "mpn_cache")
    cfg.save(os.path.join(out_dir, "config.json"))
    timings = {}
    stage = "phantom"
    try:
        t0 = time.perf_counter()
        field = field_from_config(cfg.phantom, base_dir=out_dir)
        save_phantom_config(cfg.phantom, os.path.join(out_dir,
                                                      "phantom.json"))
        timings[stage] = time.perf_counter() - t0

        stage = "mesh"
        t0 = time.perf_counter()
        mesh = _build_mesh(cfg.mesh, base_dir=out_dir)
        save_mesh(mesh, os.path.join(out_dir, "mesh.txt"))
        timings[stage] = time.perf_counter() - t0

        stage = "fea"
        t0 = time.perf_counter()
        program = _load_program(cfg.load)
        if cfg.noise is not None:
            samples, sol, _sol2 = make_noisy_dataset(
                mesh, field, cfg.noise["relative_magnitude"],
                rng_seed=int(cfg.noise.get("rng_seed", 0)),
                program=program, poisson=cfg.poisson, augment=False)
        else:
            samples, sol = make_dataset(mesh, field, program,
                                        poisson=cfg.poisson, augment=False)
        samples.save_csv(os.path.join(out_dir, "dataset.csv"))
        probe_disp = [float(v) for v in sol.probe_displacements_mm()]
        timings[stage] = time.perf_counter() - t0

        stage = "mpn"
        t0 = time.perf_counter()
        model, cached_path = ensure_reference_mpn(cfg.mpn, cache_dir,
                                                  cfg.poisson)
        model.save(os.path.join(out_dir, recon_mod.MPN_FILENAME))
        timings[stage] = time.perf_counter() - t0

        stage = "scale"
        t0 = time.perf_counter()
        train_samples = augment_frame_invariance(samples) if cfg.augment \
            else samples
        gd = _gd_config(cfg.gd)
        sfield = scaling_mod.compute_field(model, train_samples, gd)
        sfield.save_csv(os.path.join(out_dir, "field.csv"))
        sfield.save_error_curves(os.path.join(out_dir, "curves.csv"))
        timings[stage] = time.perf_counter() - t0

        stage = "sn"
        t0 = time.perf_counter()
        spec = _sn_spec(cfg.sn)
        snet, sn_trace = sn_mod.fit(sfield, mesh, spec)
        snet.save(os.path.join(out_dir, recon_mod.SN_FILENAME))
        _save_loss_trace(sn_trace, os.path.join(out_dir, "sn_loss.csv"))
        timings[stage] = time.perf_counter() - t0

        stage = "recon"
        t0 = time.perf_counter()
        cann = recon_mod.Cann(model, snet)
        image = recon_mod.reconstruct(
            cann,
            grid_rows=int(cfg.recon.get("grid_rows",
                                        recon_mod.DEFAULT_GRID_ROWS)),
            grid_cols=int(cfg.recon.get("grid_cols",
                                        recon_mod.DEFAULT_GRID_COLS)),
            probe_strain=cfg.recon.get("probe_strain",
                                       recon_mod.DEFAULT_PROBE_STRAIN),
            poisson=cfg.poisson)
        recon_mod.render(image, os.path.join(out_dir, "image"))
        timings[stage] = time.perf_counter() - t0

        stage = "score"
        t0 = time.perf_counter()
        mean_err, std_err, error_map = recon_mod.score(image, field)
        write_grid_text(error_map, os.path.join(out_dir, "error_map.csv"))
        timings[stage] = time.perf_counter() - t0
    except Exception as exc:
        _note_stage(exc, stage, out_dir)
        raise

    score = {
        "case": cfg.name,
        "mean_error": mean_err,
        "std_error": std_err,
        "stress_unit_pa": samples.stress_unit_pa,
        "seeds": cfg.seeds(),
        "gd": {"n_iterations": gd.n_iterations, "eta": gd.eta,
               "s_floor": gd.s_floor,
               "use_exact_gradient": gd.use_exact_gradient},
        "sn": {"iterations": spec.iterations, "epochs": spec.epochs,
               "learning_rate": spec.learning_rate,
               "target_lo": spec.target_lo, "target_hi": spec.target_hi},
        "probe_strain": [float(v) for v in image.probe_strain],
        "dataset_records": int(samples.xy_mm.shape[0]),
        "training_records": int(train_samples.xy_mm.shape[0]),
        "field_points": int(sfield.xy_mm.shape[0]),
        "scaling_final_mean_rms": float(sfield.iteration_errors[-1, 2]),
        "sn_final_loss": float(sn_trace[-1]),
        "nonpositive_pixels": image.n_nonpositive,
    }
    _dump_json(score, os.path.join(out_dir, "score.json"))

    report = dict(score)
    report["timings_s"] = {k: round(v, 3) for k, v in timings.items()}
    report["total_s"] = round(sum(timings.values()), 3)
    report["probe_displacements_mm"] = probe_disp
    report["mpn_cache_file"] = cached_path
    report["out_dir"] = out_dir
    _dump_json(report, os.path.join(out_dir, "report.json"))
    _write_summary(report, os.path.join(out_dir, "summary.txt"))
    return report


def _dump_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _save_loss_trace(trace, path):
    with open(path, "w") as fh:
        fh.write("epoch,loss\n")
        for i, v in enumerate(trace):
            fh.write(f"{i},{float(v)!r}\n")


def _write_summary(report, path):
    lines = [
        f"case:            {report['case']}",
        f"modulus error:   {report['mean_error']:.4f} "
        f"+- {report['std_error']:.4f}",
        f"dataset records: {report['dataset_records']} "
        f"(training: {report['training_records']})",
        f"field points:    {report['field_points']}",
        f"final scaling mean RMS: {report['scaling_final_mean_rms']:.3e}",
        f"final SN loss:          {report['sn_final_loss']:.3e}",
        "probe displacement per step (mm): "
        + " ".join(f"{v:.4f}" for v in report["probe_displacements_mm"]),
        "stage seconds:   "
        + "  ".join(f"{k}={v}" for k, v in report["timings_s"].items()),
        f"total seconds:   {report['total_s']}",
    ]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_report(out_dir):
    """Read back the report of a finished run."""
    with open(os.path.join(out_dir, "report.json")) as fh:
        return json.load(fh)
