"""Command-line interface: stage verbs plus whole-experiment runs.

Verbs mirror the pipeline stages: ``phantom`` ``mesh`` ``fea`` ``mpn``
``scale`` ``sn`` ``recon`` operate on explicit files; ``run`` executes a
named preset or a stored experiment config end to end; ``report`` prints
the digest of a finished run.  Exit codes: 0 success, 2 configuration
error, 3 numeric failure.
"""

import argparse
import json
import sys

from . import pipeline, recon, scaling, sn
from .errors import ConfigError, NumericError
from .femesh import (load_conforming, load_fixture_mesh, make_rectilinear,
                     save_mesh)
from .fesolve import (DEFAULT_PROBE_WIDTH_MM, DEFAULT_TOTAL_FORCE_N,
                      SampleSet, STRESS_UNIT_PA,
                      LoadProgram, augment_frame_invariance, make_dataset,
                      make_noisy_dataset)
from .mpn import DEFAULT_PRETRAIN_EPOCHS, MaterialPropertyNet, pretrain
from .phantom import load_phantom_config, write_grid_text, write_pgm


def _build_parser():
    top = argparse.ArgumentParser(
        prog="elastonet",
        description="Data-driven elasticity imaging pipeline.")
    top.add_argument("--seed", type=int, default=None, dest="master_seed",
                     help="master seed overriding per-stage seeds")
    top.add_argument("--out-dir", default=None,
                     help="output directory for run artifacts")
    top.add_argument("--config", default=None,
                     help="experiment config JSON (for the run verb)")
    verbs = top.add_subparsers(dest="verb", required=True)

    p = verbs.add_parser("phantom", help="evaluate a phantom config")
    ps = p.add_subparsers(dest="action", required=True)
    b = ps.add_parser("build", help="sample a phantom onto a pixel grid")
    b.add_argument("--config", required=True, dest="phantom_config")
    b.add_argument("--rows", type=int, default=101)
    b.add_argument("--cols", type=int, default=101)
    b.add_argument("--out", required=True,
                   help="grid text output (.pgm writes an 8-bit image)")

    p = verbs.add_parser("mesh", help="create or check meshes")
    ps = p.add_subparsers(dest="action", required=True)
    mr = ps.add_parser("make-rect", help="rectilinear quad mesh")
    mr.add_argument("--width", type=float, default=50.0)
    mr.add_argument("--height", type=float, default=50.0)
    mr.add_argument("--nodes", type=int,
                    default=pipeline.MESH1_NODES_PER_EDGE)
    mr.add_argument("--out", default="mesh.txt")
    mv = ps.add_parser("validate", help="load and validate a mesh file")
    mv.add_argument("file")
    mf = ps.add_parser("fixture", help="write the conforming fixture mesh")
    mf.add_argument("--out", default="mesh2.txt")

    p = verbs.add_parser("fea", help="forward solve and dataset extraction")
    ps = p.add_subparsers(dest="action", required=True)
    fr = ps.add_parser("run")
    fr.add_argument("--mesh", required=True)
    fr.add_argument("--phantom", required=True, dest="phantom_config")
    fr.add_argument("--force", type=float, default=DEFAULT_TOTAL_FORCE_N)
    fr.add_argument("--steps", type=int, default=4)
    fr.add_argument("--probe-width", type=float,
                    default=DEFAULT_PROBE_WIDTH_MM)
    fr.add_argument("--noise", type=float, default=0.0,
                    help="relative phantom noise magnitude")
    fr.add_argument("--noise-seed", type=int, default=0)
    fr.add_argument("--augment", action="store_true",
                    help="store axis-swap augmented records too")
    fr.add_argument("--out", required=True)

    p = verbs.add_parser("mpn", help="reference material network")
    ps = p.add_subparsers(dest="action", required=True)
    mp = ps.add_parser("pretrain")
    mp.add_argument("--out", required=True)
    mp.add_argument("--seed", type=int, default=0)
    mp.add_argument("--epochs", type=int, default=DEFAULT_PRETRAIN_EPOCHS)

    p = verbs.add_parser("scale", help="per-point scaling descent")
    ps = p.add_subparsers(dest="action", required=True)
    sc = ps.add_parser("compute")
    sc.add_argument("--mpn", required=True, dest="mpn_file")
    sc.add_argument("--data", required=True)
    sc.add_argument("--iters", type=int, default=150)
    sc.add_argument("--eta", type=float, default=pipeline.DEFAULT_ETA)
    sc.add_argument("--no-augment", action="store_true",
                    help="train on the dataset exactly as stored")
    sc.add_argument("--out", default="field.csv")
    sc.add_argument("--curves", default="curves.csv")

    p = verbs.add_parser("sn", help="spatial network")
    ps = p.add_subparsers(dest="action", required=True)
    sf = ps.add_parser("fit")
    sf.add_argument("--field", required=True)
    sf.add_argument("--mesh", required=True)
    sf.add_argument("--preset", required=True, choices=("test1", "test2"))
    sf.add_argument("--seed", type=int, default=0)
    sf.add_argument("--out", default="spatial.snfile")

    p = verbs.add_parser("recon", help="modulus image reconstruction")
    ps = p.add_subparsers(dest="action", required=True)
    rr = ps.add_parser("run")
    rr.add_argument("--cann", required=True,
                    help="directory holding the two network files")
    rr.add_argument("--grid", type=int, default=recon.DEFAULT_GRID_ROWS)
    rr.add_argument("--out", required=True)
    rr.add_argument("--render", action="store_true",
                    help="also write PGM + window sidecar")
    rs = ps.add_parser("score")
    rs.add_argument("--image", required=True)
    rs.add_argument("--phantom", required=True, dest="phantom_config")

    p = verbs.add_parser("run", help="execute a full experiment")
    p.add_argument("--preset", default=None,
                   choices=pipeline.list_presets())
    p.add_argument("--list", action="store_true", dest="list_presets",
                   help="list preset names and exit")
    p.add_argument("--mpn-cache", default=None)
    p.add_argument("--config", default=argparse.SUPPRESS,
                   help="experiment config JSON")
    p.add_argument("--out-dir", default=argparse.SUPPRESS)
    p.add_argument("--seed", type=int, dest="master_seed",
                   default=argparse.SUPPRESS)

    p = verbs.add_parser("report", help="print a finished run's digest")
    p.add_argument("run_dir")
    return top


def _cmd_phantom(args):
    field = load_phantom_config(args.phantom_config)
    grid = field.eval_grid(args.rows, args.cols)
    if args.out.endswith(".pgm"):
        window = write_pgm(grid, args.out)
        print(f"wrote {args.out} (window {window[0]:.1f}..{window[1]:.1f} "
              "Pa)")
    else:
        write_grid_text(grid, args.out)
        print(f"wrote {args.out} ({args.rows}x{args.cols} Pa grid)")
    return 0


def _cmd_mesh(args):
    if args.action == "make-rect":
        mesh = make_rectilinear(args.width, args.height, args.nodes)
        save_mesh(mesh, args.out)
        print(f"wrote {args.out}: {mesh.n_nodes} nodes, "
              f"{mesh.n_elements} elements")
    elif args.action == "fixture":
        mesh = load_fixture_mesh()
        save_mesh(mesh, args.out)
        print(f"wrote {args.out}: {mesh.n_nodes} nodes, "
              f"{mesh.n_elements} elements")
    else:
        mesh = load_conforming(args.file)
        print(f"{args.file}: valid ({mesh.n_nodes} nodes, "
              f"{mesh.n_elements} elements)")
    return 0


def _cmd_fea(args):
    mesh = load_conforming(args.mesh)
    field = load_phantom_config(args.phantom_config)
    program = LoadProgram(total_force_n=args.force, n_steps=args.steps,
                          probe_width_mm=args.probe_width)
    if args.noise > 0.0:
        samples, sol, _ = make_noisy_dataset(
            mesh, field, args.noise, rng_seed=args.noise_seed,
            program=program, augment=args.augment)
    else:
        samples, sol = make_dataset(mesh, field, program,
                                    augment=args.augment)
    samples.save_csv(args.out)
    disp = " ".join(f"{v:.4f}" for v in sol.probe_displacements_mm())
    print(f"wrote {args.out}: {samples.xy_mm.shape[0]} records; "
          f"probe displacement per step (mm): {disp}")
    return 0


def _cmd_mpn(args):
    seed = args.seed if args.master_seed is None else args.master_seed
    model = pretrain(seed=seed,
                     cfg=None if args.epochs == DEFAULT_PRETRAIN_EPOCHS
                     else pipeline._pretrain_cfg(args.epochs))
    model.save(args.out)
    print(f"wrote {args.out} (seed {seed}, "
          f"stress unit {model.stress_unit_pa:g} Pa)")
    return 0


def _cmd_scale(args):
    model = MaterialPropertyNet.load(
        args.mpn_file, expect_stress_unit_pa=STRESS_UNIT_PA)
    samples = SampleSet.load_csv(
        args.data, expect_stress_unit_pa=STRESS_UNIT_PA)
    if not args.no_augment:
        samples = augment_frame_invariance(samples)
    cfg = scaling.GdConfig(n_iterations=args.iters, eta=args.eta)
    field = scaling.compute_field(model, samples, cfg)
    field.save_csv(args.out)
    field.save_error_curves(args.curves)
    final = field.iteration_errors[-1]
    print(f"wrote {args.out} and {args.curves}: "
          f"{field.xy_mm.shape[0]} points, final mean RMS {final[2]:.3e}")
    return 0


def _cmd_sn(args):
    field = scaling.ScalingField.load_csv(args.field)
    mesh = load_conforming(args.mesh)
    seed = args.seed if args.master_seed is None else args.master_seed
    spec = sn.train_spec(args.preset, seed=seed)
    snet, trace = sn.fit(field, mesh, spec)
    snet.save(args.out)
    print(f"wrote {args.out}: final loss {trace[-1]:.3e} "
          f"({spec.iterations}x{spec.epochs} epochs)")
    return 0


def _cmd_recon(args):
    if args.action == "run":
        cann = recon.Cann.load(args.cann,
                               expect_stress_unit_pa=STRESS_UNIT_PA)
        image = recon.reconstruct(cann, args.grid, args.grid)
        if args.render:
            base = args.out[:-4] if args.out.endswith(".csv") else args.out
            paths = recon.render(image, base)
            print("wrote " + ", ".join(paths))
        else:
            image.save_csv(args.out)
            print(f"wrote {args.out} ({args.grid}x{args.grid}, "
                  f"E {image.grid.min():.0f}..{image.grid.max():.0f} Pa)")
    else:
        image = recon.ModulusImage.load_csv(args.image)
        field = load_phantom_config(args.phantom_config)
        mean, std, _ = recon.score(image, field)
        print(f"mean_error {mean:.6f}  std_error {std:.6f}")
    return 0


def _cmd_run(args):
    if args.list_presets:
        for name in pipeline.list_presets():
            print(name)
        return 0
    if args.config:
        cfg = pipeline.ExperimentConfig.load(args.config)
    elif args.preset:
        cfg = pipeline.preset_config(args.preset)
    else:
        raise ConfigError("run needs --preset or --config")
    if args.out_dir:
        cfg.out_dir = args.out_dir
    if args.master_seed is not None:
        cfg.apply_seed(args.master_seed)
    report = pipeline.run_experiment(cfg, cache_dir=args.mpn_cache)
    print(f"{report['case']}: modulus error {report['mean_error']:.4f} "
          f"+- {report['std_error']:.4f} in {report['total_s']:.1f}s "
          f"-> {report['out_dir']}")
    return 0


def _cmd_report(args):
    pipeline.load_report(args.run_dir)
    with open(f"{args.run_dir}/summary.txt") as fh:
        sys.stdout.write(fh.read())
    return 0


_DISPATCH = {
    "phantom": _cmd_phantom,
    "mesh": _cmd_mesh,
    "fea": _cmd_fea,
    "mpn": _cmd_mpn,
    "scale": _cmd_scale,
    "sn": _cmd_sn,
    "recon": _cmd_recon,
    "run": _cmd_run,
    "report": _cmd_report,
}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return _DISPATCH[args.verb](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, IsADirectoryError,
            json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
