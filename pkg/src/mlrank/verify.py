"""Monte-Carlo verification suites over random conditional distributions.

Each suite draws ``trials`` random instances per label count from an
independent stream ``default_rng([seed, m])`` and reports the number of
violations and the worst violation seen.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import oracle as orc
from .losses import WeightSpec

SUITES = ("identities", "lemma31", "reduction", "theorem32", "consistency", "inconsistency")


@dataclass
class SuiteReport:
    suite: str
    trials: int
    violations: int
    max_violation: float
    tolerance: float
    elapsed: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        if self.suite == "inconsistency":
            # a witness for every surrogate searched is the success condition
            return self.details.get("witnesses_found", 0) == 2 and self.violations == 0
        return self.violations == 0

    def lines(self) -> list[str]:
        status = "PASS" if self.passed else "FAIL"
        out = [
            f"[{status}] {self.suite}: {self.trials} trials, {self.violations} violations, "
            f"max violation {self.max_violation:.3e} (tolerance {self.tolerance:g}), {self.elapsed:.1f}s"
        ]
        for k, v in self.details.items():
            if not isinstance(v, (dict, list)):
                out.append(f"    {k}: {v}")
        return out

    def to_json(self) -> str:
        d = asdict(self)
        d["passed"] = self.passed
        return json.dumps(d, indent=2, sort_keys=True)


def _streams(seed: int, ms):
    for m in ms:
        yield m, np.random.default_rng([seed, m])


def identities(trials: int = 10_000, ms=(2, 3, 4, 5), seed: int = 0, tol: float = 1e-12) -> SuiteReport:
    """Pair-mass symmetry, normalization to W, single-mass normalization, and the marginal identity."""
    t0 = time.perf_counter()
    bad = 0
    worst = 0.0
    per_check = dict.fromkeys(("symmetry", "pair_sum", "single_sum", "marginal_identity"), 0.0)
    for m, rng in _streams(seed, ms):
        i, j = np.nonzero(~np.eye(m, dtype=bool))
        for _ in range(trials):
            t = orc.compute_deltas(orc.random_distribution(rng, m), orc.random_weight_spec(rng, m))
            P = t.pair[i, j]
            errs = {
                "symmetry": np.max(np.abs(t.pair - t.pair.transpose(1, 0, 3, 2))[i, j]),
                "pair_sum": np.max(np.abs(P.sum(axis=(1, 2)) - t.W)),
                "single_sum": np.max(np.abs(t.single.sum(axis=1) - t.W)),
                "marginal_identity": np.max(np.abs((t.d1[i] - t.d1[j]) - (P[:, 1, 0] - P[:, 0, 1]))),
            }
            e = max(errs.values())
            for k, v in errs.items():
                per_check[k] = max(per_check[k], float(v))
            worst = max(worst, float(e))
            bad += e > tol
    return SuiteReport("identities", trials * len(ms), int(bad), worst, tol, time.perf_counter() - t0, per_check)


def lemma31(trials: int = 10_000, ms=(2, 3, 4, 5), seed: int = 0, tol: float = 1e-12) -> SuiteReport:
    """Regret from single-label masses equals risk minus Bayes risk from pair masses."""
    t0 = time.perf_counter()
    bad = 0
    worst = 0.0
    neg = 0
    for m, rng in _streams(seed, ms):
        for _ in range(trials):
            t = orc.compute_deltas(orc.random_distribution(rng, m), orc.random_weight_spec(rng, m))
            h = orc.random_scores(rng, m)
            reg = orc.regret_conditional(t, h)
            e = abs(reg - (orc.conditional_rank_risk(t, h) - orc.bayes_rank_risk(t)))
            neg += reg < -tol
            worst = max(worst, e)
            bad += (e > tol) or (reg < -tol)
    return SuiteReport("lemma31", trials * len(ms), int(bad), worst, tol, time.perf_counter() - t0, {"negative_regrets": int(neg)})


def reduction(trials: int = 10_000, ms=(2, 3, 4, 5), seed: int = 0, tol: float = 1e-12) -> SuiteReport:
    """Scaled bipartite regret dominates rank regret, with equality when nothing is tied."""
    t0 = time.perf_counter()
    bad = 0
    worst = 0.0
    n_eq = 0
    for m, rng in _streams(seed, ms):
        for _ in range(trials):
            t = orc.compute_deltas(orc.random_distribution(rng, m), orc.random_weight_spec(rng, m))
            h = orc.random_scores(rng, m)
            reg = orc.regret_conditional(t, h)
            scaled = orc.bipartite_regret(orc.reduce_to_bipartite(t), h) * t.W * m**2 / 2
            e = max(reg - scaled, 0.0)
            untied = np.unique(h).size == m and np.unique(t.d1).size == m
            if untied:
                n_eq += 1
                e = max(e, abs(reg - scaled))
            worst = max(worst, e)
            bad += e > tol
    return SuiteReport("reduction", trials * len(ms), int(bad), worst, tol, time.perf_counter() - t0, {"equality_checked": n_eq})


def theorem32(trials: int = 10_000, ms=(2, 3, 4, 5), seed: int = 0, slack: float = 1e-9) -> SuiteReport:
    """Rank regret against both square-root surrogate bounds with ``C = m sqrt(m W)``."""
    t0 = time.perf_counter()
    bad = {"exp": 0, "log": 0}
    worst = -np.inf
    min_ratio = {"exp": np.inf, "log": np.inf}
    for m, rng in _streams(seed, ms):
        for _ in range(trials):
            spec = orc.random_weight_spec(rng, m)
            t = orc.compute_deltas(orc.random_distribution(rng, m), spec)
            h = orc.random_scores(rng, m) * rng.uniform(0.1, 3.0)
            for kind in ("exp", "log"):
                r = orc.check_regret_bound(kind, t, h, w_max=spec.w_max, slack=slack)
                worst = max(worst, r.lhs - r.rhs)
                bad[kind] += not r.holds
                if r.lhs > 0:
                    min_ratio[kind] = min(min_ratio[kind], r.rhs / r.lhs)
    details = {
        "violations_exp": bad["exp"],
        "violations_log": bad["log"],
        "tightest_rhs_over_lhs_exp": float(min_ratio["exp"]),
        "tightest_rhs_over_lhs_log": float(min_ratio["log"]),
    }
    return SuiteReport(
        "theorem32", trials * len(ms), bad["exp"] + bad["log"], float(max(worst, 0.0)), slack, time.perf_counter() - t0, details
    )


def consistency(trials: int = 1_000, ms=(2, 3, 4, 5), seed: int = 0) -> SuiteReport:
    """Pointwise univariate minimizers order labels exactly as the Bayes ranker does."""
    t0 = time.perf_counter()
    bad = 0
    for m, rng in _streams(seed, ms):
        for _ in range(trials):
            t = orc.compute_deltas(orc.random_distribution(rng, m), orc.random_weight_spec(rng, m))
            star = orc.bayes_ranker(t)
            for kind in ("exp", "log"):
                h = orc.univariate_minimizer(kind, t)
                bad += bool(orc.ordering_violations(t, h)) or not np.array_equal(
                    np.argsort(-h, kind="stable"), np.argsort(-star, kind="stable")
                )
    return SuiteReport("consistency", trials * len(ms), int(bad), 0.0, 0.0, time.perf_counter() - t0)


def inconsistency(budget: int = 10_000, m: int = 3, seed: int = 0) -> SuiteReport:
    """Search for pairwise-surrogate inconsistency witnesses for both surrogates.

    ``violations`` counts univariate-minimizer misorderings seen during the
    search; a witness for each surrogate is the success condition.
    """
    t0 = time.perf_counter()
    details = {}
    uni_bad = 0
    tried = 0
    for kind in ("exp", "log"):
        res = orc.find_inconsistency_witness(kind, m, budget, seed, WeightSpec.constant(1.0))
        tried += res.tried
        uni_bad += res.univariate_violations
        details[f"{kind}_tried"] = res.tried
        details[f"{kind}_skipped"] = res.skipped
        if res.witness is None:
            details[f"{kind}_witness"] = None
        else:
            w = res.witness.to_dict()
            details[f"{kind}_witness"] = w
            details[f"{kind}_violated_pair"] = tuple(w["violated_pair"])
            details[f"{kind}_sign_delta"] = w["sign_delta"]
            details[f"{kind}_sign_h"] = w["sign_h"]
    details["witnesses_found"] = sum(details[f"{k}_witness"] is not None for k in ("exp", "log"))
    return SuiteReport("inconsistency", tried, uni_bad, 0.0, 0.0, time.perf_counter() - t0, details)


def run_suite(name: str, trials: int, ms, seed: int) -> SuiteReport:
    if name == "inconsistency":
        return inconsistency(trials, max(ms) if len(ms) == 1 else 3, seed)
    fn = {"identities": identities, "lemma31": lemma31, "reduction": reduction, "theorem32": theorem32, "consistency": consistency}
    try:
        return fn[name](trials, tuple(ms), seed)
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; expected one of {SUITES}") from None
