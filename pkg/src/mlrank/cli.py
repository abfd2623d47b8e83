"""Command-line harness: ``generate``, ``train``, ``eval``, ``verify``, ``curve``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 verification failure.
The worker count for ``curve`` comes from the ``MLRANK_WORKERS`` variable.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import verify
from .dataio import DataFormatError, read_sparse, write_sparse
from .experiments import (
    DEFAULT_GRIDS,
    HYPER_NAME,
    METHODS,
    CurveConfig,
    check_config,
    fit_with_selection,
    load_model,
    run_curve,
    save_model,
    weight_from_name,
)
from .synthdata import sample_dataset, sample_model
from .wbr import evaluate, ranking

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v]


def _provenance(args) -> dict:
    d = {k: v for k, v in vars(args).items() if k != "func"}
    return {"command": args.command, **{k: (str(v) if isinstance(v, Path) else v) for k, v in d.items()}}


def _write_csv(path, fieldnames, rows, provenance: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# {json.dumps(provenance, sort_keys=True)}\n")
        w = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def _fmt(v):
    return f"{v:.6f}" if isinstance(v, float) else v


def cmd_generate(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = sample_model(args.m, args.dependent, args.model_seed, args.noise_sd)
    train = sample_dataset(model, args.n_train, args.data_seed)
    # the test stream is derived from the data seed so one flag pins both files
    test = sample_dataset(model, args.n_test, args.data_seed + 1_000_003)
    prov = _provenance(args)
    for data, name in ((train, "train"), (test, "test")):
        data.header.append(f"# provenance {json.dumps(prov, sort_keys=True)}")
        write_sparse(data, out / f"{name}.txt")
    manifest = {"model": model.to_dict(), "provenance": prov, "files": {"train": "train.txt", "test": "test.txt"}}
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"wrote {out / 'train.txt'} ({args.n_train}), {out / 'test.txt'} ({args.n_test}), manifest M={model.to_dict()['M_mode']}")
    return EXIT_OK


def cmd_train(args) -> int:
    if args.grid is not None:
        grid = _float_list(args.grid) if args.method == "wbr-logreg" else _int_list(args.grid)
    else:
        grid = list(DEFAULT_GRIDS[args.method])
    try:
        check_config(args.method, grid)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    data = read_sparse(args.train)
    spec = weight_from_name(args.weight)
    sel = fit_with_selection(args.method, data, spec, grid, seed=args.seed, fraction=args.fraction)
    prov = _provenance(args)
    prov["selected"] = sel.value
    save_model(sel.model, args.model_out, prov)
    trace_path = args.trace_out or f"{args.model_out}.tuning.csv"
    name = HYPER_NAME[args.method]
    _write_csv(trace_path, ["method", name, "holdout_rank_loss"], [{k: _fmt(v) for k, v in r.items()} for r in sel.trace], prov)
    print(f"selected {name}={sel.value}; model written to {args.model_out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    model = load_model(args.model)
    data = read_sparse(args.data)
    if data.d != model.d or data.m != model.m:
        raise DataFormatError(f"model expects m={model.m}, d={model.d}; data has m={data.m}, d={data.d}")
    spec = weight_from_name(args.weight) if args.weight else getattr(model, "weight_spec", getattr(model, "spec", None))
    res = evaluate(model, data, spec)
    print(f"mean rank loss: {res.mean:.6f}")
    if args.out:
        fields = ["index", "rank_loss"]
        rows = [{"index": k, "rank_loss": f"{v:.6f}"} for k, v in enumerate(res.per_instance)]
        if args.rankings:
            fields += ["ranking", "tie_broken"]
            S = model.scores(data.X)
            for row, s in zip(rows, S):
                order, tied = ranking(s)
                row["ranking"] = " ".join(map(str, order))
                row["tie_broken"] = int(tied)
        _write_csv(args.out, fields, rows, _provenance(args))
    return EXIT_OK


def cmd_verify(args) -> int:
    ms = _int_list(args.m)
    if args.suite == "inconsistency" and ms == [2, 3, 4, 5]:
        ms = [3]
    report = verify.run_suite(args.suite, args.trials, ms, args.seed)
    for line in report.lines():
        print(line)
    summary = report.to_json()
    if args.json:
        Path(args.json).write_text(summary + "\n", encoding="utf-8")
    else:
        print(summary)
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_curve(args) -> int:
    methods = tuple(args.method or ["wbr-logreg"])
    for meth in methods:
        if meth not in METHODS:
            raise UsageError(f"unknown method {meth!r}")
    cfg = CurveConfig(
        m=args.m,
        dependent=args.dependent,
        methods=methods,
        sizes=tuple(_int_list(args.sizes)),
        repeats=args.repeats,
        n_test=args.n_test,
        weight=args.weight,
        model_seed=args.model_seed,
        seed=args.seed,
        bayes_points=args.bayes_points,
        bayes_reps=args.bayes_reps,
        noise_sd=args.noise_sd,
    )
    workers = int(os.environ.get("MLRANK_WORKERS", "1"))
    rows, bayes, se = run_curve(cfg, workers)
    prov = _provenance(args)
    prov["mc_bayes_risk_se"] = se
    _write_csv(
        args.out,
        ["method", "n", "repeat", "rank_loss", "mc_bayes_risk"],
        [{k: _fmt(r[k]) for k in ("method", "n", "repeat", "rank_loss", "mc_bayes_risk")} for r in rows],
        prov,
    )
    print(f"{len(rows)} rows written to {args.out}; MC Bayes risk {bayes:.6f} +/- {se:.6f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mlrank", description="Multilabel rank-loss experiments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write synthetic train/test files and a model manifest")
    g.add_argument("--m", type=int, default=5)
    g.add_argument("--n-train", type=int, required=True)
    g.add_argument("--n-test", type=int, default=50_000)
    g.add_argument("--dependent", action="store_true")
    g.add_argument("--noise-sd", type=float, default=0.5)
    g.add_argument("--model-seed", type=int, default=0)
    g.add_argument("--data-seed", type=int, default=0)
    g.add_argument("--out-dir", required=True)
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="select a hyperparameter on a held-out split, refit, save")
    t.add_argument("--method", choices=METHODS, required=True)
    t.add_argument("--weight", choices=("uniform", "normalized"), default="normalized")
    t.add_argument("--grid", help="comma-separated hyperparameter values (default: the standard grid)")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--fraction", type=float, default=0.75)
    t.add_argument("--train", required=True)
    t.add_argument("--model-out", required=True)
    t.add_argument("--trace-out")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="mean rank loss of a saved model on a dataset")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--weight", choices=("uniform", "normalized"))
    e.add_argument("--out", help="per-instance CSV")
    e.add_argument("--rankings", action="store_true", help="add strict label rankings to the CSV")
    e.set_defaults(func=cmd_eval)

    v = sub.add_parser("verify", help="run an oracle verification suite")
    v.add_argument("--suite", choices=verify.SUITES, required=True)
    v.add_argument("--trials", type=int, default=10_000)
    v.add_argument("--m", default="2,3,4,5", help="comma-separated label counts")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--json", help="write the JSON summary here instead of stdout")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("curve", help="learning curves on one synthetic model")
    c.add_argument("--method", action="append", choices=METHODS)
    c.add_argument("--m", type=int, default=5)
    c.add_argument("--dependent", action="store_true")
    c.add_argument("--noise-sd", type=float, default=0.5)
    c.add_argument("--sizes", default="100,400,1600,4000")
    c.add_argument("--repeats", type=int, default=10)
    c.add_argument("--n-test", type=int, default=50_000)
    c.add_argument("--weight", choices=("uniform", "normalized"), default="normalized")
    c.add_argument("--model-seed", type=int, default=0)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--bayes-points", type=int, default=2_000)
    c.add_argument("--bayes-reps", type=int, default=10_000)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_curve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"mlrank: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, OSError) as exc:
        print(f"mlrank: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"mlrank: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
