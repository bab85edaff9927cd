"""Command line entry point: ``tldakit <train|eval|cv|product|cmc|gen> [flags]``.

Every subcommand accepts ``--config FILE``, a flat ``key = value`` text file
whose keys are flag names (``per-class`` or ``per_class``). Explicit flags
override the config file, which overrides the built-in defaults.

Failures exit with status 1 after writing one JSON line
``{"error": ..., "type": ...}`` to stderr.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import formats, pipeline, tlda
from .data import generate_synthetic
from .errors import DimensionError, TldaError
from .evaluation import cmc_curve, nearest_neighbor
from .pipeline import MethodConfig, resolve_transform
from .transforms import l_product

COMMANDS = ("train", "eval", "cv", "product", "cmc", "gen")
EVAL_COLUMNS = ("method", "transform", "acc_mean", "acc_std", "time_mean", "time_std", "dim")


class ConfigError(TldaError, ValueError):
    pass


def _format(value):
    if isinstance(value, (float, np.floating)):
        return "{:.6g}".format(float(value))
    return str(value)


def write_csv(path, columns, rows):
    """Write rows (dicts) with a fixed column order, 6 significant digits and LF endings."""
    lines = [",".join(columns)]
    lines += [",".join(_format(row[c]) for c in columns) for row in rows]
    text = "\n".join(lines) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def default_threads():
    env = os.environ.get("TLDAKIT_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"TLDAKIT_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise ConfigError(f"TLDAKIT_THREADS must be positive, got {n}")
        return n
    return os.cpu_count() or 1


def read_config(path):
    """Parse a ``key = value`` file; blank lines and ``#`` comments are ignored."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}, line {lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _int_list(text):
    return tuple(int(v) for v in str(text).split(",") if v.strip())


def _bool(text):
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _add_method_flags(p):
    p.add_argument("--method", choices=pipeline.METHODS, default="tlda-tr")
    p.add_argument("--transform", default=None, help="t, c or custom:<path to n3 x n3 matrix>")
    p.add_argument("--k", type=int, default=None, help="target dimension K")
    p.add_argument("--gamma", type=float, default=None, help="ratio-trace regularization (tlda-rt only)")
    p.add_argument("--ridge", type=float, default=0.0, help="ridge added to the within-class scatter")
    p.add_argument("--dims", type=_int_list, default=None, help="mda-alt target dims, e.g. 4,2")
    p.add_argument("--weight-between", type=_bool, default=False,
                   help="weight between-class terms by class size")
    p.add_argument("--pca-var", type=float, default=None, help="PCA variance kept before lda")
    p.add_argument("--metric", choices=("frobenius", "mad"), default="frobenius")


def build_parser():
    parser = argparse.ArgumentParser(prog="tldakit", description="Transform-domain tensor LDA toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("--config", default=None, help="key=value file of flag defaults")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: $TLDAKIT_THREADS or all cores)")
        return p

    p = command("gen", "Generate a synthetic Gaussian-class dataset.")
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--per-class", type=int, default=50)
    p.add_argument("--n1", type=int, default=16)
    p.add_argument("--n3", type=int, default=4)
    p.add_argument("--separation", type=float, default=5.0)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = command("train", "Train a model on a labelled dataset and write a model file.")
    p.add_argument("--data", required=True)
    _add_method_flags(p)
    p.add_argument("--out", required=True)

    p = command("eval", "Repeated stratified hold-out evaluation, or one model on gallery/probes.")
    p.add_argument("--data", default=None)
    _add_method_flags(p)
    p.add_argument("--repetitions", type=int, default=30)
    p.add_argument("--test-fraction", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model", default=None)
    p.add_argument("--gallery", default=None)
    p.add_argument("--probes", default=None)
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")

    p = command("cv", "k-fold cross-validation over gamma (tlda-rt), K (tlda-tr, lda) or m (mda-alt).")
    p.add_argument("--data", required=True)
    _add_method_flags(p)
    p.add_argument("--grid", required=True, help="comma-separated values")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="per-fold CSV path")

    p = command("product", "Tensor-tensor product a *_L b.")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--transform", default="t")
    p.add_argument("--out", required=True)

    p = command("cmc", "Cumulative match characteristic of a model on gallery/probes.")
    p.add_argument("--model", required=True)
    p.add_argument("--gallery", required=True)
    p.add_argument("--probes", required=True)
    p.add_argument("--metric", choices=("frobenius", "mad"), default="frobenius")
    p.add_argument("--max-rank", type=int, default=None)
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    return parser, sub.choices


def _config_flag(argv):
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def parse_args(argv):
    parser, subparsers = build_parser()
    argv = list(argv)
    config = _config_flag(argv)
    command = next((tok for tok in argv if tok in subparsers), None)
    if config and command:
        sub = subparsers[command]
        actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
        values = {}
        for key, raw in read_config(config).items():
            if key not in actions:
                raise ConfigError(f"{config}: unknown key {key!r} for {command}")
            action = actions[key]
            try:
                value = action.type(raw) if action.type else raw
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise ConfigError(f"{config}: bad value for {key}: {exc}") from None
            if action.choices is not None and value not in action.choices:
                raise ConfigError(f"{config}: {key} must be one of {list(action.choices)}")
            values[key] = value
            # satisfied by the config file; an explicit flag still wins
            action.required = False
        sub.set_defaults(**values)
    args = parser.parse_args(argv)
    if getattr(args, "threads", None) is None:
        args.threads = default_threads()
    if args.threads < 1:
        raise ConfigError(f"--threads must be positive, got {args.threads}")
    return args


def _method_config(args):
    cfg = MethodConfig(method=args.method, transform=args.transform, k=args.k, gamma=args.gamma,
                       ridge=args.ridge, dims=args.dims, weight_between=args.weight_between,
                       pca_var=args.pca_var, threads=args.threads, metric=args.metric)
    return cfg.validate()


def _dataset(path):
    bundle = formats.load_bundle(path)
    return tlda.LabeledTensorDataset(bundle.data, bundle.labels)


def _method_name(model):
    if model.vectorized:
        return "lda"
    return "tlda-tr" if model.objective == tlda.TRACE_RATIO else "tlda-rt"


def _project_gallery_probes(model, args):
    gallery, probes = _dataset(args.gallery), _dataset(args.probes)
    missing = sorted(set(probes.classes.tolist()) - set(gallery.classes.tolist()))
    if missing:
        raise DimensionError(f"probe classes missing from the gallery: {missing}")
    return (tlda.project(model, gallery.X), gallery.labels,
            tlda.project(model, probes.X), probes.labels)


def cmd_gen(args):
    bundle = generate_synthetic(args.classes, args.per_class, args.n1, args.n3,
                                args.separation, args.noise, args.seed)
    formats.save_bundle(args.out, bundle)
    print(f"wrote {args.out}: {bundle.data.shape[0]} x {bundle.data.shape[1]} x {bundle.data.shape[2]}, "
          f"{args.classes} classes")


def cmd_train(args):
    cfg = _method_config(args)
    if cfg.method == "mda-alt":
        raise ConfigError("mda-alt models cannot be saved; use eval or cv for the baseline")
    model = pipeline.fit(cfg, _dataset(args.data))
    formats.save_model(args.out, model)
    for i, (rho, its) in enumerate(zip(model.rho, model.iterations)):
        if np.isnan(rho):
            print(f"slice={i} iterations={its}")
        else:
            print(f"slice={i} rho={_format(rho)} iterations={its}")
    print(f"wrote {args.out}: K={model.K} dim={model.output_dim}")


def cmd_eval(args):
    if args.model:
        if not (args.gallery and args.probes):
            raise ConfigError("--model needs --gallery and --probes")
        model = formats.load_model(args.model)
        G, gl, P, pl = _project_gallery_probes(model, args)
        preds, _ = nearest_neighbor(G, gl, P, args.metric)
        row = {"method": _method_name(model),
               "transform": "none" if model.vectorized else model.transform.name,
               "acc_mean": 100.0 * float(np.mean(preds == pl)), "acc_std": 0.0,
               "time_mean": 0.0, "time_std": 0.0, "dim": model.output_dim}
        write_csv(args.out, EVAL_COLUMNS, [row])
        return
    if not args.data:
        raise ConfigError("eval needs --data, or --model with --gallery and --probes")
    if args.repetitions < 1:
        raise ConfigError(f"--repetitions must be positive, got {args.repetitions}")
    summary = pipeline.repeated_holdout(_method_config(args), _dataset(args.data),
                                        args.repetitions, args.test_fraction, args.seed)
    write_csv(args.out, EVAL_COLUMNS, [summary.row()])


def cmd_cv(args):
    param = pipeline.GRID_PARAM[args.method]
    cast = float if param == "gamma" else int
    try:
        grid = [cast(v) for v in args.grid.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad --grid {args.grid!r}") from None
    if not grid:
        raise ConfigError("--grid is empty")
    cfg = MethodConfig(method=args.method, transform=args.transform, k=args.k, gamma=args.gamma,
                       ridge=args.ridge, dims=args.dims, weight_between=args.weight_between,
                       pca_var=args.pca_var, threads=args.threads, metric=args.metric)
    # the grid supplies the searched parameter
    cfg.with_param(param, grid[0]).validate()
    result = pipeline.cross_validate(cfg, _dataset(args.data), grid, args.folds, args.seed)
    if args.out:
        write_csv(args.out, ("param", "value", "fold", "accuracy", "error"), result.rows)
    best_mean = result.means[result.best]
    print(json.dumps({"param": result.param, "best": result.best,
                      "mean_accuracy": float(_format(best_mean))}))


def cmd_product(args):
    a, b = formats.load_tns3(args.a), formats.load_tns3(args.b)
    if a.shape[2] != b.shape[2] or a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply tensors of shapes {a.shape} and {b.shape}")
    formats.save_tns3(args.out, l_product(a, b, resolve_transform(args.transform, a.shape[2])))
    print(f"wrote {args.out}")


def cmd_cmc(args):
    model = formats.load_model(args.model)
    G, gl, P, pl = _project_gallery_probes(model, args)
    _, ranked = nearest_neighbor(G, gl, P, args.metric)
    rates = cmc_curve(ranked, pl, args.max_rank)
    write_csv(args.out, ("rank", "rate"), [{"rank": k + 1, "rate": float(r)} for k, r in enumerate(rates)])


HANDLERS = {"gen": cmd_gen, "train": cmd_train, "eval": cmd_eval, "cv": cmd_cv,
            "product": cmd_product, "cmc": cmd_cmc}


def main(argv=None):
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
        HANDLERS[args.command](args)
    except (TldaError, OSError, ValueError, ArithmeticError) as exc:
        sys.stderr.write(json.dumps({"error": str(exc), "type": type(exc).__name__}) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
