"""Command-line interface: ``gtenn generate | run | sweep | eval``.

Options may also come from a flat YAML file passed with ``--config``; keys
are option names (``mu``, ``epochs``, ``som_alpha`` ...). Flags given on
the command line win over file values.

Exit codes: 0 success, 1 validation error, 2 runtime or numeric error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml

from .clustering import SomConfig
from .errors import GtennError, ValidationError
from .graph import read_partitions, write_network, write_partitions
from .lfr import PRESETS, LfrConfig, generate_dynamic_lfr
from .metrics import METRICS, evaluate_sequence, write_metrics_csv
from .model import ABLATIONS, ModelConfig
from .pipeline import METHODS, ExperimentConfig, run_experiment, write_manifest, write_run
from .trainer import TrainConfig

log = logging.getLogger("gtenn")

SWEEP_AXES = ("mu", "size", "method", "ablation")
SWEEP_DEFAULTS = {
    "mu": "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8",
    "size": "200,500,1000",
    "method": ",".join(METHODS),
    "ablation": ",".join(ABLATIONS),
}

# option name -> (type, default, help)
LFR_OPTIONS = {
    "preset": (str, None, f"LFR preset ({', '.join(PRESETS)})"),
    "n": (int, None, "node count (default 1000)"),
    "snapshots": (int, None, "snapshot count (default 9)"),
    "mu": (float, None, "mixing parameter in [0, 1] (default 0.1)"),
    "avg_degree": (float, None, "average degree (default 15)"),
    "max_degree": (int, None, "maximum degree (default 30)"),
    "min_community": (int, None, "smallest community size (default 10)"),
    "max_community": (int, None, "largest community size (default 50)"),
    "gamma": (float, None, "degree power-law exponent (default 2.5)"),
    "beta": (float, None, "community-size power-law exponent (default 1.5)"),
    "churn": (float, None, "fraction of nodes changing community per snapshot (default 0.1)"),
}
MODEL_OPTIONS = {
    "network": (str, None, "network file (instead of generating LFR data)"),
    "truth": (str, None, "ground-truth file for --network"),
    "dim": (int, 32, "embedding width of every layer"),
    "layers": (int, 2, "GCN layers"),
    "ablation": (str, "full", f"model variant ({', '.join(ABLATIONS)})"),
    "feature_summary": (int, 1, "1 to feed node-feature summaries to the weight GRU, 0 to disable"),
    "epochs": (int, 300, "training epochs"),
    "lr": (float, 1e-3, "learning rate"),
    "margin": (float, 1.0, "ranking-loss margin m"),
    "negatives": (int, 5, "negative samples Q per positive pair"),
    "batch_size": (int, None, "positive pairs per step (default: full batch)"),
    "optimizer": (str, "adam", "adam or sgd"),
    "method": (str, "som", "clustering method (som or kmeans)"),
    "k": (int, None, "K-means cluster count (default: ground-truth community count)"),
    "grid_rows": (int, None, "SOM grid rows (default ceil(sqrt(2 sqrt n)))"),
    "grid_cols": (int, None, "SOM grid columns (default ceil(sqrt(2 sqrt n)))"),
    "som_alpha": (float, 0.5, "SOM initial learning rate"),
    "som_sigma": (float, None, "SOM initial radius (default: half the grid diagonal)"),
    "som_iterations": (int, None, "SOM online steps (default 50 n)"),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


def _add_options(parser, options) -> None:
    for name, (typ, _, help_) in options.items():
        parser.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None, help=help_)


def _common(parser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="seed for every random stream (default 0)")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--config", default=None, help="YAML file of option values")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gtenn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("generate", help="write a dynamic LFR benchmark")
    _add_options(gen, LFR_OPTIONS)
    _common(gen)

    run = sub.add_parser("run", help="train, cluster every snapshot and score")
    _add_options(run, LFR_OPTIONS)
    _add_options(run, MODEL_OPTIONS)
    _common(run)

    sweep = sub.add_parser("sweep", help="repeat runs along one axis and aggregate")
    _add_options(sweep, LFR_OPTIONS)
    _add_options(sweep, MODEL_OPTIONS)
    sweep.add_argument("--axis", choices=SWEEP_AXES, default=None, help="swept quantity")
    sweep.add_argument("--values", default=None, help="comma-separated axis values")
    sweep.add_argument("--seeds", default=None, help="comma-separated seeds (default: seed, seed+1, seed+2)")
    sweep.add_argument("--jobs", type=int, default=None, help="parallel worker processes (default 1)")
    _common(sweep)

    ev = sub.add_parser("eval", help="score a partition file against ground truth")
    ev.add_argument("--pred", default=None, help="predicted partition file")
    ev.add_argument("--truth", default=None, help="ground-truth file")
    _common(ev)
    return parser


def _resolve(args: argparse.Namespace) -> dict:
    """Merge built-in defaults, config-file values and explicit flags."""
    values = {}
    for options in (LFR_OPTIONS, MODEL_OPTIONS):
        for name, (_, default, _) in options.items():
            values[name] = default
    values.update({"seed": 0, "out": None, "axis": None, "values": None, "seeds": None, "jobs": 1})
    if args.config:
        try:
            loaded = yaml.safe_load(Path(args.config).read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise ValidationError(f"config {args.config} must be a flat key: value mapping")
        for key, val in loaded.items():
            key = str(key).replace("-", "_")
            if key not in values and not hasattr(args, key):
                raise ValidationError(f"config {args.config}: unknown option {key!r}")
            values[key] = val
    for key, val in vars(args).items():
        if val is not None and key not in ("command", "config", "verbose"):
            values[key] = val
    return values


def _lfr_config(v: dict) -> LfrConfig | None:
    keys = [k for k in LFR_OPTIONS if v.get(k) is not None]
    if not keys:
        return None
    overrides = {
        "n": v.get("n"),
        "snapshots": v.get("snapshots"),
        "mu": v.get("mu"),
        "avg_degree": v.get("avg_degree"),
        "max_degree": v.get("max_degree"),
        "min_community": v.get("min_community"),
        "max_community": v.get("max_community"),
        "gamma": v.get("gamma"),
        "beta": v.get("beta"),
        "churn_fraction": v.get("churn"),
    }
    overrides = {k: val for k, val in overrides.items() if val is not None}
    overrides["seed"] = int(v["seed"])
    if v.get("preset"):
        from .lfr import preset

        cfg = preset(v["preset"], **overrides)
    else:
        cfg = replace(LfrConfig(), **overrides)
    return cfg.validate()


def _experiment(v: dict) -> ExperimentConfig:
    lfr = _lfr_config(v)
    if v.get("network") and lfr is not None:
        raise ValidationError("give either --network or LFR parameters, not both")
    if not v.get("network") and lfr is None:
        raise ValidationError("no dataset: pass --network FILE or LFR parameters such as --preset lfr2")
    seed = int(v["seed"])
    cfg = ExperimentConfig(
        lfr=lfr,
        network_path=v.get("network"),
        truth_path=v.get("truth"),
        model=ModelConfig(
            dim=int(v["dim"]),
            layers=int(v["layers"]),
            ablation=str(v["ablation"]),
            use_feature_summary=bool(int(v["feature_summary"])),
        ),
        train=TrainConfig(
            margin=float(v["margin"]),
            negatives=int(v["negatives"]),
            epochs=int(v["epochs"]),
            lr=float(v["lr"]),
            batch_size=None if v.get("batch_size") is None else int(v["batch_size"]),
            seed=seed,
            optimizer=str(v["optimizer"]),
        ),
        method=str(v["method"]),
        som=SomConfig(
            grid_rows=v.get("grid_rows"),
            grid_cols=v.get("grid_cols"),
            alpha0=float(v["som_alpha"]),
            sigma0=v.get("som_sigma"),
            iterations=v.get("som_iterations"),
            seed=seed,
        ),
        k=v.get("k"),
        seed=seed,
    )
    return cfg.validate()


def _out_dir(v: dict, default: str) -> Path:
    out = Path(v.get("out") or default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_generate(v: dict, argv) -> int:
    cfg = _lfr_config(v)
    if cfg is None:
        cfg = replace(LfrConfig(), seed=int(v["seed"]))
    out = _out_dir(v, "data")
    network = generate_dynamic_lfr(cfg)
    write_network(out / "network.txt", network)
    write_partitions(out / "truth.txt", network.ground_truth)
    write_manifest(out / "manifest.json", "generate", argv, cfg.as_dict())
    print(f"wrote {network.T} snapshots of {network.n} nodes (mu={cfg.mu}) to {out}")
    return 0


def _print_report(report) -> None:
    print("t\t" + "\t".join(METRICS))
    for t, row in enumerate(report.per_snapshot, start=1):
        print(f"{t}\t" + "\t".join(f"{row[m]:.4f}" for m in METRICS))
    means = report.means
    print("mean\t" + "\t".join(f"{means[m]:.4f}" for m in METRICS))


def cmd_run(v: dict, argv) -> int:
    cfg = _experiment(v)
    out = _out_dir(v, "run")
    output = run_experiment(cfg)
    write_run(out, output, cfg, argv)
    if output.report is not None:
        _print_report(output.report)
    else:
        print("no ground truth available: metrics skipped")
    print(f"outputs in {out}")
    return 0


def _sweep_point(job):
    cfg, out = job
    output = run_experiment(cfg)
    write_run(out, output, cfg)
    return None if output.report is None else output.report.means


def _axis_config(base: ExperimentConfig, axis: str, value: str) -> ExperimentConfig:
    if axis in ("mu", "size"):
        lfr = base.lfr or LfrConfig()
        field_ = "mu" if axis == "mu" else "n"
        cast = float if axis == "mu" else int
        return replace(base, lfr=replace(lfr, **{field_: cast(value)}), network_path=None, truth_path=None)
    if axis == "method":
        return replace(base, method=value)
    return replace(base, model=replace(base.model, ablation=value))


def cmd_sweep(v: dict, argv) -> int:
    axis = v.get("axis")
    if axis not in SWEEP_AXES:
        raise ValidationError(f"--axis must be one of {', '.join(SWEEP_AXES)}")
    values = [s.strip() for s in str(v.get("values") or SWEEP_DEFAULTS[axis]).split(",") if s.strip()]
    seed = int(v["seed"])
    seeds = [int(s) for s in str(v["seeds"]).split(",")] if v.get("seeds") else [seed, seed + 1, seed + 2]
    if axis in ("mu", "size") and not any(v.get(k) is not None for k in LFR_OPTIONS):
        v = dict(v, mu=v.get("mu") or 0.1)
    base = _experiment(v)
    out = _out_dir(v, "sweep")

    jobs = []
    for value in values:
        for s in seeds:
            cfg = _axis_config(base, axis, value).with_seed(s).validate()
            jobs.append((cfg, out / f"{axis}={value}" / f"seed={s}"))
    workers = int(v.get("jobs") or 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(job) for job in jobs]
    if any(r is None for r in results):
        raise ValidationError("sweep needs ground truth for every point")

    header = [axis, "seeds"]
    for m in METRICS:
        header += [f"{m}_mean", f"{m}_std"]
    rows = []
    for i, value in enumerate(values):
        chunk = results[i * len(seeds) : (i + 1) * len(seeds)]
        row = [value, len(seeds)]
        for m in METRICS:
            vals = np.array([r[m] for r in chunk])
            row += [repr(float(vals.mean())), repr(float(vals.std()))]
        rows.append(row)
    with open(out / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    write_manifest(out / "manifest.json", "sweep", argv, {"axis": axis, "values": values, "seeds": seeds, "base": base.as_dict()})
    for row in rows:
        print(f"{axis}={row[0]}\tnmi={float(row[4]):.4f}\tpurity={float(row[2]):.4f}")
    print(f"wrote {out / 'sweep.csv'}")
    return 0


def cmd_eval(v: dict, argv) -> int:
    if not v.get("pred") or not v.get("truth"):
        raise ValidationError("eval needs --pred and --truth")
    truths = read_partitions(v["truth"])
    preds = read_partitions(v["pred"])
    if len(preds) != len(truths):
        raise ValidationError(f"{v['pred']} has {len(preds)} snapshots but {v['truth']} has {len(truths)}")
    for t, (p, g) in enumerate(zip(preds, truths), start=1):
        if len(p) != len(g):
            raise ValidationError(f"snapshot {t}: {len(p)} predicted nodes but {len(g)} ground-truth nodes")
    report = evaluate_sequence(preds, truths)
    _print_report(report)
    if v.get("out"):
        out = _out_dir(v, "eval")
        write_metrics_csv(out / "metrics.csv", report)
        write_manifest(out / "manifest.json", "eval", argv, {"pred": v["pred"], "truth": v["truth"]})
    return 0


COMMANDS = {"generate": cmd_generate, "run": cmd_run, "sweep": cmd_sweep, "eval": cmd_eval}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
        )
        return COMMANDS[args.command](_resolve(args), argv)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (GtennError, OSError, ArithmeticError, RuntimeError) as exc:
        print(f"error: {type(exc).__module__}.{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
