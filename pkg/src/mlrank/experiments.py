"""Method registry, held-out hyperparameter selection and learning curves."""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dataio import MultilabelDataset, split
from .learners import PairwiseLinearModel, PairwiseStumpModel, train_pairwise_linear, train_pairwise_stumps
from .losses import WeightSpec
from .synthdata import mc_bayes_risk, sample_dataset, sample_model
from .wbr import WbrModel, evaluate, train_wbr

METHODS = ("wbr-ada", "wbr-logreg", "pairwise-log", "pairwise-stumps")

_ITER_GRID = (10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10_000, 20_000)
DEFAULT_GRIDS = {
    "wbr-ada": (10, 20, 50, 100, 200),
    "wbr-logreg": tuple(10.0**k for k in range(-3, 4)),
    "pairwise-log": _ITER_GRID,
    "pairwise-stumps": _ITER_GRID,
}
HYPER_NAME = {"wbr-ada": "T", "wbr-logreg": "lam", "pairwise-log": "iterations", "pairwise-stumps": "T_total"}


def weight_from_name(name: str) -> WeightSpec:
    if name == "uniform":
        return WeightSpec.constant(1.0)
    if name == "normalized":
        return WeightSpec.normalized()
    raise ValueError(f"unknown weight {name!r}; expected 'uniform' or 'normalized'")


def capacity_order(method: str, grid) -> list:
    """Grid values from smallest to largest model capacity."""
    return sorted(grid, reverse=(method == "wbr-logreg"))


def check_config(method: str, grid) -> None:
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if len(grid) == 0:
        raise ValueError("empty hyperparameter grid")
    for v in grid:
        if method == "wbr-logreg":
            if not (np.isfinite(v) and v >= 0):
                raise ValueError(f"regularization must be finite and nonnegative, got {v}")
        elif int(v) != v or v < 1:
            raise ValueError(f"{HYPER_NAME[method]} must be a positive integer, got {v}")


def fit_path(method: str, data: MultilabelDataset, spec: WeightSpec, grid) -> dict:
    """Models for every grid value; iterative methods are trained once and checkpointed."""
    if method == "wbr-logreg":
        return {lam: train_wbr(data, spec, "logreg", {"lam": float(lam)}) for lam in grid}
    top = int(max(grid))
    if method == "wbr-ada":
        full = train_wbr(data, spec, "ada", {"T": top})
        return {T: full.truncate(int(T)) for T in grid}
    if method == "pairwise-log":
        _, saved = train_pairwise_linear(data.X, data.Y, "log", spec, max_iter=top, checkpoints=[int(g) for g in grid])
        return {g: saved[int(g)] for g in grid}
    if method == "pairwise-stumps":
        full = train_pairwise_stumps(data.X, data.Y, spec, max(top, data.m))
        return {g: full.truncate(int(g)) for g in grid}
    raise ValueError(f"unknown method {method!r}")


def fit_single(method: str, data: MultilabelDataset, spec: WeightSpec, value):
    return fit_path(method, data, spec, [value])[value]


@dataclass
class Selection:
    model: object
    value: object
    trace: list[dict] = field(default_factory=list)


def fit_with_selection(
    method: str, data: MultilabelDataset, spec: WeightSpec, grid=None, seed: int = 0, fraction: float = 0.75
) -> Selection:
    """Pick the grid value with the lowest held-out rank loss, then refit on all data.

    Ties go to the smaller-capacity value.  A one-point grid is fitted directly.
    """
    grid = list(DEFAULT_GRIDS[method] if grid is None else grid)
    check_config(method, grid)
    if len(grid) == 1:
        return Selection(fit_single(method, data, spec, grid[0]), grid[0], [])
    train, hold = split(data, fraction, seed)
    models = fit_path(method, train, spec, grid)
    trace = []
    best = None
    for v in capacity_order(method, grid):
        loss = evaluate(models[v], hold, spec).mean
        trace.append({"method": method, HYPER_NAME[method]: v, "holdout_rank_loss": loss})
        if best is None or loss < best[1]:
            best = (v, loss)
    return Selection(fit_single(method, data, spec, best[0]), best[0], trace)


def model_to_dict(model) -> dict:
    return {"format": "mlrank-model", "version": 1, "model": model.to_dict()}


def model_from_dict(d: dict):
    if d.get("format") != "mlrank-model":
        raise ValueError("not an mlrank model file")
    if d.get("version") != 1:
        raise ValueError(f"unsupported model version {d.get('version')}")
    body = d["model"]
    kinds = {"wbr": WbrModel, "pairwise-linear": PairwiseLinearModel, "pairwise-stumps": PairwiseStumpModel}
    return kinds[body["type"]].from_dict(body)


def save_model(model, path, provenance: dict | None = None) -> None:
    d = model_to_dict(model)
    if provenance:
        d["provenance"] = provenance
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(d, fh, indent=1)
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))


@dataclass(frozen=True)
class CurveConfig:
    m: int = 5
    dependent: bool = False
    methods: tuple[str, ...] = ("wbr-logreg",)
    sizes: tuple[int, ...] = (100, 400, 1600, 4000)
    repeats: int = 10
    n_test: int = 10_000
    weight: str = "normalized"
    model_seed: int = 0
    seed: int = 0
    bayes_points: int = 2_000
    bayes_reps: int = 10_000
    grids: dict | None = None
    noise_sd: float = 0.5


def data_seed(seed: int, n: int, repeat: int) -> int:
    """Seed of training set ``repeat`` at size ``n``; distinct streams per (n, repeat)."""
    return int(np.random.SeedSequence([seed, n, repeat]).generate_state(1, np.uint64)[0])


def _curve_unit(args):
    cfg, method, n, rep, test = args
    model = sample_model(cfg.m, cfg.dependent, cfg.model_seed, cfg.noise_sd)
    spec = weight_from_name(cfg.weight)
    train = sample_dataset(model, n, data_seed(cfg.seed, n, rep))
    grid = None if cfg.grids is None else cfg.grids.get(method)
    sel = fit_with_selection(method, train, spec, grid, seed=data_seed(cfg.seed, n, rep) % 2**32)
    return method, n, rep, evaluate(sel.model, test, spec).mean, sel.value


def run_curve(cfg: CurveConfig, workers: int = 1) -> tuple[list[dict], float, float]:
    """Learning-curve rows plus the Monte-Carlo Bayes risk (mean, standard error).

    One synthetic model, one shared test set, fresh training data per
    (size, repeat).  Rows come back sorted by (method, n, repeat).
    """
    for method in cfg.methods:
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}")
    model = sample_model(cfg.m, cfg.dependent, cfg.model_seed, cfg.noise_sd)
    spec = weight_from_name(cfg.weight)
    test = sample_dataset(model, cfg.n_test, data_seed(cfg.seed, 0, 0))  # n=0 is never a training size
    bayes = mc_bayes_risk(model, spec, cfg.bayes_points, cfg.bayes_reps, seed=cfg.seed)
    units = [(cfg, meth, n, r, test) for meth in cfg.methods for n in cfg.sizes for r in range(cfg.repeats)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_curve_unit, units))
    else:
        results = [_curve_unit(u) for u in units]
    results.sort(key=lambda r: (r[0], r[1], r[2]))
    rows = [
        {"method": meth, "n": n, "repeat": rep, "rank_loss": loss, "selected": sel, "mc_bayes_risk": bayes.mean}
        for meth, n, rep, loss, sel in results
    ]
    return rows, bayes.mean, bayes.se
