"""Command-line entry point.

Subcommands: synth (generate synthetic multi-domain CSVs), fit (train one
model and dump diagnostics), eval (cross-validate one task), bench (a suite
of tasks and methods), sweep (hyper-parameter sensitivity curve). Numeric
outputs are CSV files; bench and sweep also render a figure next to them.

Exit codes: 0 success, 1 usage error, 2 data/schema error, 3 solver failure.
"""

import argparse
import csv
import dataclasses
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import baselines, bench, model
from .dataio import SchemaError, read_dataset, write_dataset
from .datagen import SynthConfig, generate_synthetic
from .domain import encode_domains, recode_labels
from .kernels import LINEAR, POLYNOMIAL, RBF, KernelSpec
from .plots import render_bench, render_sweep
from .qp import QpError

_KERNEL_NAMES = {"linear": LINEAR, "rbf": RBF, "poly": POLYNOMIAL}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="disvm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=Path, help="JSON config file; flags override it")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", type=Path, help="output directory")

    p = sub.add_parser("synth", help="generate synthetic multi-domain datasets")
    common(p)
    for name in ("d", "experiments", "subjects-per-experiment",
                 "samples-per-subject-per-class"):
        p.add_argument(f"--{name}", type=int)
    for name in ("class-signal-strength", "subject-shift-strength",
                 "experiment-shift-strength", "noise-std"):
        p.add_argument(f"--{name}", type=float)

    def model_opts(p):
        p.add_argument("--method", choices=bench.BUILTIN_METHODS)
        p.add_argument("--kernel", choices=sorted(_KERNEL_NAMES))
        p.add_argument("--gamma", type=float)
        p.add_argument("--c", type=float)
        p.add_argument("--lambda", dest="lam", type=float)
        p.add_argument("--h", type=int)
        p.add_argument("--tol", type=float)

    p = sub.add_parser("fit", help="train one model on a dataset CSV")
    common(p)
    model_opts(p)
    p.add_argument("--data", type=Path, action="append", required=True)

    def protocol_opts(p):
        p.add_argument("--repeats", type=int)
        p.add_argument("--folds", type=int)
        p.add_argument("--inner-splits", type=int)
        p.add_argument("--no-transductive", action="store_true")

    p = sub.add_parser("eval", help="cross-validate one transfer task")
    common(p)
    model_opts(p)
    protocol_opts(p)
    p.add_argument("--data", type=Path, action="append", required=True)
    p.add_argument("--task", required=True, help='e.g. "A->B" or "A&B->C"')

    p = sub.add_parser("bench", help="run a suite of tasks and methods")
    common(p)
    model_opts(p)
    protocol_opts(p)
    p.add_argument("--data", type=Path, action="append", required=True)
    p.add_argument("--tasks", default="pairs",
                   help='"pairs", "multi-source", or comma-separated task names')
    p.add_argument("--methods", default="svm,disvm", help="comma-separated method names")

    p = sub.add_parser("sweep", help="hyper-parameter sensitivity curve")
    common(p)
    model_opts(p)
    protocol_opts(p)
    p.add_argument("--data", type=Path, action="append", required=True)
    p.add_argument("--task", required=True)
    p.add_argument("--param", choices=("c", "lambda"), required=True)
    return parser


def _resolve(args) -> dict:
    """Merge defaults < config file < explicit flags into one config dict."""
    cfg = {}
    if args.config is not None:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
    for key, value in vars(args).items():
        if key in ("config",):
            continue
        if value is not None and value is not False:
            cfg[key] = value
    cfg.setdefault("seed", 0)
    cfg.setdefault("out", "out")
    return cfg


def _config_hash(cfg: dict) -> str:
    text = json.dumps({k: str(v) for k, v in sorted(cfg.items())}, sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def _jsonable(v):
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _write_resolved(cfg: dict, outdir: Path) -> str:
    digest = _config_hash(cfg)
    payload = {k: _jsonable(v) for k, v in cfg.items()}
    payload["config_hash"] = digest
    (outdir / "resolved_config.json").write_text(json.dumps(payload, indent=2) + "\n")
    return digest


def _stamp(fh, cfg: dict, digest: str):
    fh.write(f"# seed={cfg['seed']}\n# config={digest}\n")


def _kernel_from(cfg: dict) -> KernelSpec:
    family = _KERNEL_NAMES[cfg.get("kernel", "linear")]
    kwargs = {}
    if family == RBF:
        kwargs["gamma"] = cfg.get("gamma", 1.0)
    return KernelSpec(family, **kwargs)


def _protocol_from(cfg: dict) -> bench.Protocol:
    return bench.Protocol(
        outer_repeats=cfg.get("repeats", 10),
        outer_folds=cfg.get("folds", 5),
        inner_splits=cfg.get("inner_splits", 20),
        seed=cfg["seed"],
        transductive=not cfg.get("no_transductive", False),
    )


def _load_datasets(paths) -> dict:
    return {Path(p).stem: read_dataset(p) for p in paths}


def _cmd_synth(cfg: dict, outdir: Path, digest: str) -> None:
    fields = {f.name for f in dataclasses.fields(SynthConfig)}
    kwargs = {k: v for k, v in cfg.items() if k in fields}
    kwargs["seed"] = cfg["seed"]
    datasets = generate_synthetic(SynthConfig(**kwargs))
    for name, ds in datasets.items():
        write_dataset(ds, outdir / f"{name}.csv")
    print(f"wrote {len(datasets)} datasets to {outdir}")


def _cmd_fit(cfg: dict, outdir: Path, digest: str) -> None:
    datasets = _load_datasets(cfg["data"])
    from .domain import concat

    ds = concat(datasets.values()) if len(datasets) > 1 else next(iter(datasets.values()))
    method = cfg.get("method", "disvm")
    spec = _kernel_from(cfg)
    C = cfg.get("c", 1.0)
    lam = cfg.get("lam", 1.0)
    tol = cfg.get("tol", 1e-6)
    report: dict = {"method": method, "kernel": spec.family, "n": ds.n, "d": ds.d}
    if method == "disvm":
        m = model.fit(ds, spec, C=C, lam=lam, tol=tol)
        report.update(
            objective=m.diagnostics["objective"],
            simplified_hsic=m.diagnostics["simplified_hsic"],
            slack_sum=m.diagnostics["slack_sum"],
            beta_norm=float(np.linalg.norm(m.beta)),
            **{f"kkt_{k}": v for k, v in m.diagnostics["kkt"].items()},
        )
    elif method == "svm":
        lab = ds.labels != 0
        m = baselines.fit_svm(ds.features[:, lab], ds.labels[lab], spec, C, tol)
        report.update(
            objective=m.diagnostics["objective"],
            slack_sum=m.diagnostics["slack_sum"],
            beta_norm=float(np.linalg.norm(m.beta)),
            **{f"kkt_{k}": v for k, v in m.diagnostics["kkt"].items()},
        )
    else:
        h = cfg.get("h", min(ds.d, ds.n, 20))
        if method == "pca-t" or method == "pca-st":
            proj = baselines.fit_pca(ds.features, h)
        elif method == "mida":
            proj = baselines.fit_mida(ds.features, encode_domains(ds), h)
        else:
            proj = baselines.fit_smida(ds.features, encode_domains(ds),
                                       recode_labels(ds), h)
        ortho = float(np.max(np.abs(proj.W.T @ proj.W - np.eye(h))))
        report.update(h=h, orthonormality_residual=ortho,
                      top_eigenvalues=",".join(f"{v:.6g}" for v in proj.eigenvalues))
    path = outdir / "diagnostics.txt"
    with path.open("w") as fh:
        _stamp(fh, cfg, digest)
        for k, v in report.items():
            fh.write(f"{k}={v}\n")
    print(f"wrote {path}")


def _method_from(name: str, cfg: dict) -> bench.Method:
    return bench.Method(name=name, kernel=_kernel_from(cfg))


def _cmd_eval(cfg: dict, outdir: Path, digest: str) -> None:
    datasets = _load_datasets(cfg["data"])
    tasks = bench.make_tasks(datasets, [cfg["task"]])
    protocol = _protocol_from(cfg)
    method = _method_from(cfg.get("method", "disvm"), cfg)
    report = bench.cross_validate(tasks[0], method, protocol)
    path = outdir / "cv_report.csv"
    with path.open("w", newline="") as fh:
        _stamp(fh, cfg, digest)
        writer = csv.writer(fh)
        writer.writerow(["split", "accuracy", "chosen"])
        for i, (acc, chosen) in enumerate(zip(report.accuracies, report.chosen)):
            writer.writerow([i, repr(acc), json.dumps(chosen, sort_keys=True)])
        writer.writerow(["mean", repr(report.mean), ""])
        writer.writerow(["std", repr(report.std), ""])
    print(f"{cfg['task']} {method.name}: {100 * report.mean:.1f} +- {100 * report.std:.1f}")
    print(f"wrote {path}")


def _cmd_bench(cfg: dict, outdir: Path, digest: str) -> None:
    datasets = _load_datasets(cfg["data"])
    task_spec = cfg.get("tasks", "pairs")
    if task_spec not in ("pairs", "multi-source"):
        task_spec = [t.strip() for t in task_spec.split(",")]
    tasks = bench.make_tasks(datasets, task_spec)
    if not tasks:
        raise UsageError("no tasks to run")
    protocol = _protocol_from(cfg)
    methods = [m.strip() for m in cfg.get("methods", "svm,disvm").split(",")]
    results: dict = {}
    for name in methods:
        method = _method_from(name, cfg)
        results[name] = {}
        for task in tasks:
            report = bench.cross_validate(task, method, protocol)
            results[name][task.name] = (report.mean, report.std)
            print(f"{name} {task.name}: {100 * report.mean:.1f} +- {100 * report.std:.1f}")
    path = outdir / "results.csv"
    with path.open("w", newline="") as fh:
        _stamp(fh, cfg, digest)
        writer = csv.writer(fh)
        task_names = [t.name for t in tasks]
        writer.writerow(["method"] + task_names)
        for name in methods:
            writer.writerow([name] + [
                f"{100 * results[name][t][0]:.1f}±{100 * results[name][t][1]:.1f}"
                for t in task_names
            ])
    render_bench(results, outdir / "results.png")
    print(f"wrote {path} and results.png")


def _cmd_sweep(cfg: dict, outdir: Path, digest: str) -> None:
    datasets = _load_datasets(cfg["data"])
    tasks = bench.make_tasks(datasets, [cfg["task"]])
    protocol = _protocol_from(cfg)
    param = "C" if cfg["param"] == "c" else "lambda"
    grid = bench.C_GRID if param == "C" else bench.LAMBDA_SWEEP_GRID
    points = bench.sensitivity_sweep(tasks[0], param, grid, protocol,
                                     kernel=_kernel_from(cfg))
    path = outdir / f"sweep_{cfg['param']}.csv"
    with path.open("w", newline="") as fh:
        _stamp(fh, cfg, digest)
        writer = csv.writer(fh)
        writer.writerow([param, "mean_accuracy", "std"])
        for pt in points:
            writer.writerow([f"{pt.value:g}", repr(pt.mean), repr(pt.std)])
    render_sweep(points, param, outdir / f"sweep_{cfg['param']}.png")
    print(f"wrote {path} and sweep_{cfg['param']}.png")


_COMMANDS = {
    "synth": _cmd_synth,
    "fit": _cmd_fit,
    "eval": _cmd_eval,
    "bench": _cmd_bench,
    "sweep": _cmd_sweep,
}


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        cfg = _resolve(args)
        outdir = Path(cfg["out"])
        outdir.mkdir(parents=True, exist_ok=True)
        digest = _write_resolved(cfg, outdir)
        _COMMANDS[args.command](cfg, outdir, digest)
        return 0
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except QpError as exc:
        print(f"error: solver failed: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
