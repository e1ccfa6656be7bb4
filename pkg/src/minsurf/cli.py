"""Command-line front end.

Exit codes: 0 success, 1 configuration/usage problems, 2 runtime or
numeric failures. Every failure prints one machine-parsable line to
stderr: ``error[config]: ...`` or ``error[runtime]: ...``. The
MINSURF_OUT environment variable supplies the default output directory.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import pde
from .boundary import eval_g, list_boundaries, lookup_builtin
from .errors import (CheckpointError, ConfigurationError, EvaluationError,
                     NumericalError, ParseError, StructuralError,
                     TrainingDiverged)
from .fdm import compare_model_to_grid, solve_fdm
from .models import NetworkModel, scherk_solution
from .network import canonical_layers, init_network
from .sampling import BoxDomain, check_corner_consistency, sample_interior
from .slices import (SliceSpec, evaluate_slice, export_history_json,
                     export_slice_csv, export_slice_svg)
from .training import (config_hash, load_checkpoint, load_preset,
                       read_config, run_training, save_checkpoint)

__all__ = ["run_command", "main"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); usage problems are code 1
        raise _UsageError(message)


def _out_dir(flag_value) -> Path:
    if flag_value:
        return Path(flag_value)
    return Path(os.environ.get("MINSURF_OUT", "."))


def _parse_domain_flag(text: str) -> BoxDomain:
    if ".." not in text:
        raise ConfigurationError(f"--domain expects LO..HI, got {text!r}")
    lo_s, hi_s = text.split("..", 1)
    try:
        lo, hi = float(lo_s), float(hi_s)
    except ValueError:
        raise ConfigurationError(f"--domain expects numeric bounds, got {text!r}") from None
    return BoxDomain.cube(lo, hi, 2)


def _load_boundary(args):
    if getattr(args, "boundary", None):
        return lookup_builtin(args.boundary)
    if getattr(args, "config", None):
        return read_config(args.config).boundary
    raise ConfigurationError("give --boundary NAME or --config FILE")


def _parse_fix(items, domain: BoxDomain) -> dict[int, float]:
    fixed = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigurationError(f"--fix expects xK=VALUE, got {item!r}")
        var, val = item.split("=", 1)
        if not (var.startswith("x") and var[1:].isdigit()):
            raise ConfigurationError(f"--fix axis must be x1..x{domain.dim}, got {var!r}")
        axis = int(var[1:]) - 1
        try:
            fixed[axis] = float(val)
        except ValueError:
            raise ConfigurationError(f"--fix value {val!r} is not a number") from None
    return fixed


def _build_parser() -> _Parser:
    p = _Parser(prog="minsurf",
                description="train and inspect minimal-surface networks")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")

    t = sub.add_parser("train", help="run a preset or config file")
    t.add_argument("--preset", help="named preset, e.g. 2d-1 (see --list)")
    t.add_argument("--config", help="configuration file path")
    t.add_argument("--resume", help="checkpoint file to continue from")
    t.add_argument("--epochs", type=int, help="override the configured epoch count")
    t.add_argument("--seed", type=int, help="override the configured seed")
    t.add_argument("--out", help="output directory (default $MINSURF_OUT or .)")
    t.add_argument("--quiet", action="store_true", help="suppress progress lines")

    s = sub.add_parser("slice", help="export a fixed-coordinate slice of a checkpoint")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--fix", action="append", metavar="xK=VALUE",
                   help="pin an axis (repeat until two are left free)")
    s.add_argument("--resolution", type=int, default=50)
    s.add_argument("--out", help="CSV path, or a directory for the derived name")
    s.add_argument("--svg", help="also write a grayscale heatmap here")

    r = sub.add_parser("residual-check", help="residual statistics on fresh samples")
    r.add_argument("--checkpoint")
    r.add_argument("--analytic", choices=["scherk"],
                   help="check a closed-form solution instead of a checkpoint")
    r.add_argument("--n", type=int, default=1000)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--domain", help="LO..HI square override (2-D)")

    g = sub.add_parser("grad-check", help="derivatives vs central finite differences")
    g.add_argument("--d", type=int, default=2, choices=[2, 3, 4])
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--points", type=int, default=20)
    g.add_argument("--step", type=float, default=1e-4)
    g.add_argument("--tol", type=float, default=1e-4)
    g.add_argument("--param-sample", type=int, default=0,
                   help="check only this many randomly chosen parameters (0 = all)")

    o = sub.add_parser("oracle-compare", help="trained model vs the 2-D grid solver")
    o.add_argument("--checkpoint", required=True)
    o.add_argument("--n", type=int, default=65)
    o.add_argument("--domain", help="LO..HI square override")
    o.add_argument("--out", help="also export the oracle grid as slice CSV")

    c = sub.add_parser("corners", help="boundary consistency at the box corners")
    c.add_argument("--boundary", help="builtin boundary name")
    c.add_argument("--config", help="configuration file path")
    c.add_argument("--tol", type=float, default=1e-9)

    sub.add_parser("list-boundaries", help="show the builtin boundary registry")

    e = sub.add_parser("eval-g", help="print g at one boundary point")
    e.add_argument("--boundary", help="builtin boundary name")
    e.add_argument("--config", help="configuration file path")
    e.add_argument("--point", required=True, help="comma-separated coordinates")
    return p


def _cmd_train(args) -> int:
    if bool(args.preset) == bool(args.config):
        raise ConfigurationError("give exactly one of --preset or --config")
    if args.preset:
        config = load_preset(args.preset)
        name = args.preset
    else:
        config = read_config(args.config)
        name = Path(args.config).stem
    if args.epochs is not None:
        config = replace(config, epochs=args.epochs)
    if args.seed is not None:
        config = replace(config, seed=args.seed)

    start = None
    if args.resume:
        start = load_checkpoint(args.resume)
        if args.epochs is None:
            config = replace(config, epochs=start.config.epochs)

    out = _out_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def on_log(rec):
        if not args.quiet:
            print(f"epoch {rec.epoch:6d}  interior {rec.interior:.6f}  "
                  f"boundary {rec.boundary:.6f}  total {rec.total:.6f}  "
                  f"({rec.seconds:.1f}s)")

    try:
        run = run_training(config, start=start, on_log=on_log)
    except TrainingDiverged as exc:
        if exc.checkpoint is not None:
            rescue = out / f"{name}-diverged-checkpoint.txt"
            save_checkpoint(rescue, exc.checkpoint)
            print(f"error[runtime]: {exc} (last finite state: {rescue})", file=sys.stderr)
            return 2
        raise
    ckpt_path = out / f"{name}-checkpoint.txt"
    hist_path = out / f"{name}-history.json"
    save_checkpoint(ckpt_path, run.checkpoint())
    export_history_json(run.history, hist_path)
    fin = run.history.final
    print(f"trained {name}: {run.epoch} epochs, final total {fin.total:.6f} "
          f"(interior {fin.interior:.6f}, boundary {fin.boundary:.6f})")
    print(f"wrote {ckpt_path}")
    print(f"wrote {hist_path}")
    return 0


def _cmd_slice(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    model = NetworkModel(ckpt.params)
    domain = ckpt.config.domain
    fixed = _parse_fix(args.fix, domain)
    spec = SliceSpec(domain=domain, fixed=fixed, resolution=args.resolution)
    grid = evaluate_slice(model, spec,
                          provenance={"config": config_hash(ckpt.config),
                                      "epoch": ckpt.epoch})
    tag = "-".join(f"x{a + 1}_{v:g}" for a, v in sorted(fixed.items()))
    stem = Path(args.checkpoint).stem + ("-" + tag if tag else "") + "-slice.csv"
    if args.out and not (args.out.endswith(os.sep) or Path(args.out).is_dir()):
        csv_path = Path(args.out)
    else:
        out = _out_dir(args.out)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / stem
    export_slice_csv(grid, csv_path)
    print(f"wrote {csv_path}")
    if args.svg:
        export_slice_svg(grid, args.svg)
        print(f"wrote {args.svg}")
    return 0


def _cmd_residual_check(args) -> int:
    if bool(args.checkpoint) == bool(args.analytic):
        raise ConfigurationError("give exactly one of --checkpoint or --analytic")
    if args.analytic:
        model = scherk_solution()
        domain = _parse_domain_flag(args.domain) if args.domain else BoxDomain.cube(-1.3, 1.3, 2)
        label = "analytic scherk"
        f = 0.0
    else:
        ckpt = load_checkpoint(args.checkpoint)
        model = NetworkModel(ckpt.params)
        domain = ckpt.config.domain
        if args.domain:
            if domain.dim != 2:
                raise ConfigurationError("--domain override is 2-D only")
            domain = _parse_domain_flag(args.domain)
        label = f"checkpoint {args.checkpoint} (epoch {ckpt.epoch})"
        f = ckpt.config.f
    points = sample_interior(domain, args.n, seed=args.seed)
    stats = pde.residual_statistics(points, model, f=f)
    print(f"residuals of {label} on {stats['count']} interior samples:")
    print(f"  max |r|  = {stats['max_abs']:.6e}")
    print(f"  mean |r| = {stats['mean_abs']:.6e}")
    print(f"  rms      = {stats['rms']:.6e}")
    return 0


def _cmd_grad_check(args) -> int:
    from .autodiff import check_derivatives
    from .network import build_graph
    from .pde import loss_and_parameter_gradients
    from .sampling import sample_boundary

    params = init_network(args.d, canonical_layers(), seed=args.seed)
    rng = np.random.default_rng(args.seed + 1)
    domain = BoxDomain.unit(args.d)
    pts = sample_interior(domain, args.points, rng)

    worst_g = worst_h = 0.0
    kinks = 0
    for x in pts:
        rep = check_derivatives(lambda xs: build_graph(params, xs[0].tape, xs)[0],
                                x, step=args.step)
        worst_g = max(worst_g, rep.gradient_max_rel_error)
        worst_h = max(worst_h, rep.hessian_max_rel_error)
        kinks += len(rep.nondifferentiable_nodes)
    print(f"input derivatives at {args.points} points (step {args.step:g}):")
    print(f"  gradient max rel err = {worst_g:.3e}")
    print(f"  hessian  max rel err = {worst_h:.3e}")
    if kinks:
        print(f"  note: {kinks} evaluations near non-differentiable kinks")

    bpts = sample_boundary(domain, "wireframe", 4, rng)
    gvals = np.zeros(bpts.shape[0])
    w_pde, w_bdry = 1.0, 1.0

    # forward-only loss for the FD loop; the backward pass would double the
    # cost and the difference quotient never looks at it
    def loss_of(p):
        model = NetworkModel(p)
        return pde.total_loss(pde.interior_loss(pts, model, f=0.0),
                              pde.boundary_loss(bpts, gvals, model),
                              w_pde, w_bdry).total

    from .network import NetworkParams
    _, dW, dB = loss_and_parameter_gradients(params, pts, bpts, gvals,
                                             f=0.0, w_pde=w_pde, w_bdry=w_bdry)
    flat = []
    for li in range(len(params.weights)):
        for pos in np.ndindex(params.weights[li].shape):
            flat.append(("w", li, pos, dW[li][pos]))
        for pos in np.ndindex(params.biases[li].shape):
            flat.append(("b", li, pos, dB[li][pos]))
    if args.param_sample and args.param_sample < len(flat):
        chosen = rng.choice(len(flat), size=args.param_sample, replace=False)
        flat = [flat[i] for i in sorted(chosen)]
    worst_p = 0.0
    for kind, li, pos, analytic in flat:
        ws = [w.copy() for w in params.weights]
        bs = [b.copy() for b in params.biases]
        target = ws[li] if kind == "w" else bs[li]
        target[pos] += args.step
        up = loss_of(NetworkParams(args.d, params.layer_specs, ws, bs))
        target[pos] -= 2 * args.step
        down = loss_of(NetworkParams(args.d, params.layer_specs, ws, bs))
        fd = (up - down) / (2 * args.step)
        err = abs(fd - analytic) / max(abs(fd), abs(analytic), 1.0)
        worst_p = max(worst_p, err)
    print(f"loss parameter gradient vs central differences ({len(flat)} entries):")
    print(f"  max rel err = {worst_p:.3e}")

    if max(worst_g, worst_h, worst_p) > args.tol:
        raise NumericalError(
            f"derivative mismatch exceeds tolerance {args.tol:g} "
            f"(gradient {worst_g:.3e}, hessian {worst_h:.3e}, parameters {worst_p:.3e})")
    print(f"all checks below tolerance {args.tol:g}")
    return 0


def _cmd_oracle_compare(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    if ckpt.config.d != 2:
        raise ConfigurationError("the grid oracle is 2-D only")
    domain = _parse_domain_flag(args.domain) if args.domain else ckpt.config.domain
    boundary = ckpt.config.boundary
    if domain != boundary.domain:
        boundary = boundary.on_domain(domain)
    grid = solve_fdm(boundary, domain, args.n, f=ckpt.config.f.value)
    if not grid.converged:
        raise NumericalError(
            f"grid solver did not converge in {grid.iterations} iterations "
            f"(last update {grid.final_update:.3e})")
    stats = compare_model_to_grid(NetworkModel(ckpt.params), grid)
    print(f"checkpoint vs {args.n}x{args.n} grid on "
          f"[{domain.lower[0]:g}, {domain.upper[0]:g}]^2 "
          f"({grid.iterations} iterations):")
    print(f"  max abs  = {stats.max_abs:.6e}")
    print(f"  mean abs = {stats.mean_abs:.6e}")
    print(f"  rms      = {stats.rms:.6e}")
    if args.out:
        from .slices import SliceGrid
        sg = SliceGrid(axes=("x1", "x2"),
                       coords=(grid.axis_nodes(0), grid.axis_nodes(1)),
                       values=grid.values)
        export_slice_csv(sg, args.out)
        print(f"wrote {args.out}")
    return 0


def _cmd_corners(args) -> int:
    boundary = _load_boundary(args)
    report = check_corner_consistency(boundary, boundary.domain, tol=args.tol)
    for entry in report.entries:
        corner = "(" + ", ".join(f"{c:g}" for c in entry.corner) + ")"
        pieces = ", ".join(f"{label} -> {value:.6g}" for label, value in entry.values)
        status = "MISMATCH" if entry.mismatch > args.tol else "ok"
        print(f"corner {corner}: {pieces}  [{status}, spread {entry.mismatch:.6g}]")
    bad = report.mismatched
    if bad:
        print(f"{len(bad)} of {len(report.entries)} corners mismatched "
              f"(max spread {report.max_mismatch:.6g})")
    else:
        print(f"all {len(report.entries)} corners consistent (tol {args.tol:g})")
    return 0


def _cmd_list_boundaries(args) -> int:
    rows = list_boundaries()
    width = max(len(name) for name, _, _ in rows)
    for name, dim, description in rows:
        print(f"{name:<{width}}  {dim}d  {description}")
    return 0


def _cmd_eval_g(args) -> int:
    boundary = _load_boundary(args)
    try:
        point = [float(p) for p in args.point.split(",")]
    except ValueError:
        raise ConfigurationError(f"--point expects comma-separated numbers, got {args.point!r}") from None
    if len(point) != boundary.dim:
        raise ConfigurationError(
            f"boundary is {boundary.dim}-dimensional, point has {len(point)} coordinates")
    print(repr(eval_g(boundary, point)))
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "slice": _cmd_slice,
    "residual-check": _cmd_residual_check,
    "grad-check": _cmd_grad_check,
    "oracle-compare": _cmd_oracle_compare,
    "corners": _cmd_corners,
    "list-boundaries": _cmd_list_boundaries,
    "eval-g": _cmd_eval_g,
}


def run_command(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            print("error[config]: no command given", file=sys.stderr)
            return 1
        return _COMMANDS[args.command](args)
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)
    except _UsageError as exc:
        print(f"error[config]: {exc}", file=sys.stderr)
        return 1
    except ParseError as exc:
        print(f"error[config]: {exc} (offset {exc.offset})", file=sys.stderr)
        return 1
    except (ConfigurationError, CheckpointError) as exc:
        print(f"error[config]: {exc}", file=sys.stderr)
        return 1
    except TrainingDiverged as exc:
        print(f"error[runtime]: {exc}", file=sys.stderr)
        return 2
    except (EvaluationError, NumericalError, StructuralError) as exc:
        print(f"error[runtime]: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error[runtime]: {exc}", file=sys.stderr)
        return 2


def main() -> int:
    return run_command(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
