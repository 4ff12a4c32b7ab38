"""Run-time search, campaigns and success-probability studies.

Every instance is identified by its graph seed; workers regenerate the graph
from the seed, so tasks are tiny to ship and results do not depend on the
schedule. Records can be persisted in an append-only JSONL store, which is
what makes long campaigns resumable.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import stats

from . import __version__
from .errors import AdiaCliqueError
from .evolve import EvolutionConfig, evolve
from .graph import Graph, derived_seed_stream, generate_random_graph, sample_until
from .hamiltonian import SubspaceHamiltonian

TARGET_P = 0.125
TARGET_TOL = 0.0025
RESULTS_HEADER = "seed,n,k,unique,T_found,p_at_T,probes,steps,norm_drift"


@dataclass(frozen=True)
class SearchConfig:
    target: float = TARGET_P
    tol: float = TARGET_TOL
    rel_tol: float = 1e-9
    abs_tol: float = 1e-9
    T0: float = 1.0
    growth: float = 1.5
    T_cap: float = 1e4
    max_bisections: int = 60

    def evolution(self, T: float) -> EvolutionConfig:
        return EvolutionConfig(T, rel_tol=self.rel_tol, abs_tol=self.abs_tol)


@dataclass
class RunRecord:
    """Outcome of one run-time search.

    ``status`` is ``ok`` (target hit within tolerance), ``trivial`` (the
    uniform state already meets the target, ``T_found = 0``), ``hard`` (bracket
    exceeded ``T_cap``) or ``failed`` (bisection or integrator gave up).
    ``steps`` and ``norm_drift`` describe the evolution at ``T_found``.
    """

    seed: int
    n: int
    k: int
    unique: bool
    T_found: float
    p_at_T: float
    probes: int
    steps: int
    norm_drift: float
    status: str = "ok"

    @property
    def succeeded(self) -> bool:
        return self.status == "ok"

    def csv_row(self) -> str:
        return ",".join(
            [
                str(self.seed),
                str(self.n),
                str(self.k),
                str(int(self.unique)),
                repr(float(self.T_found)),
                repr(float(self.p_at_T)),
                str(self.probes),
                str(self.steps),
                repr(float(self.norm_drift)),
            ]
        )


def find_runtime(
    graph: Graph,
    k: int,
    search: SearchConfig = SearchConfig(),
    unique: bool | None = None,
) -> RunRecord:
    """Smallest-first search for the run time where p(T) first reaches the target.

    Geometric bracketing from ``T0`` by ``growth`` until ``p(T) >= target``,
    then bisection of the last bracket until ``|p(T) - target| <= tol``.
    Dips of p(T) inside the bracket are not examined.
    """
    h = SubspaceHamiltonian(graph, k)
    if unique is None:
        unique = len(h.clique_indices()) == 1
    probes = 0

    def run(T: float):
        nonlocal probes
        probes += 1
        return evolve(h, search.evolution(T))

    def record(T: float, res, status: str) -> RunRecord:
        return RunRecord(graph.seed, graph.n, k, unique, T, res.success_probability, probes,
                         res.steps_accepted, res.norm_drift, status)

    base = run(0.0)
    if base.success_probability >= search.target:
        return record(0.0, base, "trivial")

    lo, T, res = 0.0, search.T0, base
    while True:
        if T > search.T_cap:
            return record(lo, res, "hard")
        res = run(T)
        if res.failed:
            return record(T, res, "failed")
        if res.success_probability >= search.target:
            break
        lo, T = T, T * search.growth
    hi, best = T, res
    for _ in range(search.max_bisections):
        if abs(best.success_probability - search.target) <= search.tol:
            return record(hi, best, "ok")
        mid = 0.5 * (lo + hi)
        res = run(mid)
        if res.failed:
            return record(mid, res, "failed")
        if res.success_probability >= search.target:
            hi, best = mid, res
        else:
            lo = mid
            if abs(res.success_probability - search.target) <= search.tol:
                return record(mid, res, "ok")
    return record(hi, best, "failed")


def crossing_times(
    graph: Graph, k: int, T_max: float, points: int = 40, search: SearchConfig = SearchConfig()
) -> list[tuple[float, float]]:
    """All upward crossings of the target on a uniform run-time grid.

    Returns ``(T, p)`` pairs refined by bisection inside each grid cell where
    p(T) passes from below to at-or-above the target.
    """
    h = SubspaceHamiltonian(graph, k)

    def p(T):
        return evolve(h, search.evolution(T)).success_probability

    grid = np.linspace(0.0, T_max, points + 1)
    values = [p(float(T)) for T in grid]
    out = []
    for i in range(points):
        if values[i] < search.target <= values[i + 1]:
            lo, hi, p_hi = float(grid[i]), float(grid[i + 1]), values[i + 1]
            for _ in range(search.max_bisections):
                if abs(p_hi - search.target) <= search.tol:
                    break
                mid = 0.5 * (lo + hi)
                pm = p(mid)
                if pm >= search.target:
                    hi, p_hi = mid, pm
                else:
                    lo = mid
            out.append((hi, p_hi))
    return out


# --- instance sampling -----------------------------------------------------


@dataclass(frozen=True)
class Instance:
    seed: int
    n: int
    k: int
    unique: bool
    attempts: int


def draw_instances(
    n: int,
    count: int,
    campaign_seed: int,
    k_filter: int | None = None,
    unique_required: bool = True,
    max_attempts: int = 100_000,
) -> list[Instance]:
    """First ``count`` graphs passing the filters in the campaign's seed stream.

    The stream for (campaign_seed, n, k_filter, unique_required) is fixed, so
    the instance set is reproducible and independent of anything else run in
    the same campaign.
    """
    stream = derived_seed_stream(campaign_seed, n, k_filter or 0, int(unique_required))
    out = []
    for _ in range(count):
        sample = sample_until(n, k_filter, unique_required, stream, max_attempts)
        c = sample.classification
        out.append(Instance(sample.graph.seed, n, c.max_clique_size, c.is_unique, len(sample.seeds_consumed)))
    return out


# --- persistence and parallel execution -------------------------------------


def task_key(kind: str, payload: dict) -> str:
    blob = json.dumps({"kind": kind, "version": __version__, **payload}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:32]


class RecordStore:
    """Append-only JSONL map from task key to result dict."""

    def __init__(self, path):
        self.path = Path(path)
        self._data: dict[str, dict] = {}
        if self.path.exists():
            with open(self.path) as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        entry = json.loads(line)
                    except json.JSONDecodeError:
                        # torn final line from an interrupted run
                        continue
                    self._data[entry["key"]] = entry["value"]

    def __contains__(self, key: str) -> bool:
        return key in self._data

    def __len__(self) -> int:
        return len(self._data)

    def get(self, key: str):
        return self._data.get(key)

    def put(self, key: str, value: dict) -> None:
        self._data[key] = value
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a") as fh:
            fh.write(json.dumps({"key": key, "value": value}, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())


def _run_tasks(fn: Callable, tasks: Sequence, jobs: int, store: RecordStore | None, keys: Sequence[str]):
    """Evaluate ``fn`` over ``tasks`` in order, reusing and filling ``store``."""
    results: list = [None] * len(tasks)
    todo = []
    for i, key in enumerate(keys):
        if store is not None and key in store:
            results[i] = store.get(key)
        else:
            todo.append(i)
    if not todo:
        return results

    def done(i, value):
        results[i] = value
        if store is not None:
            store.put(keys[i], value)

    if jobs <= 1:
        for i in todo:
            done(i, fn(tasks[i]))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for i, value in zip(todo, pool.map(fn, [tasks[i] for i in todo], chunksize=1)):
                done(i, value)
    return results


def _search_task(task) -> dict:
    seed, n, k, unique, search = task
    rec = find_runtime(generate_random_graph(n, seed), k, search, unique)
    return asdict(rec)


def _probability_task(task) -> dict:
    seed, n, k, T, rel_tol, abs_tol = task
    h = SubspaceHamiltonian(generate_random_graph(n, seed), k)
    res = evolve(h, EvolutionConfig(T, rel_tol=rel_tol, abs_tol=abs_tol))
    return {
        "seed": seed,
        "p": res.success_probability,
        "steps": res.steps_accepted,
        "norm_drift": res.norm_drift,
        "failed": res.failed,
    }


def run_searches(
    instances: Sequence[Instance],
    search: SearchConfig = SearchConfig(),
    jobs: int = 1,
    store: RecordStore | None = None,
) -> list[RunRecord]:
    tasks = [(inst.seed, inst.n, inst.k, inst.unique, search) for inst in instances]
    keys = [
        task_key("search", {"seed": inst.seed, "n": inst.n, "k": inst.k, "search": asdict(search)})
        for inst in instances
    ]
    return [RunRecord(**d) for d in _run_tasks(_search_task, tasks, jobs, store, keys)]


# --- statistics -----------------------------------------------------------


@dataclass
class MedianCI:
    median: float
    lower: float
    upper: float
    lower_rank: int
    upper_rank: int
    count: int


def median_ci(values: Iterable[float], confidence: float = 0.95) -> MedianCI:
    """Sample median with a distribution-free order-statistic interval.

    The bounds are the order statistics (1-based) at the ``(1 - c)/2`` and
    ``(1 + c)/2`` quantiles of Binomial(N, 1/2), clamped to ``1..N``.
    """
    x = np.sort(np.asarray(list(values), dtype=float))
    if x.size == 0:
        raise ValueError("median of an empty sample")
    N = x.size
    alpha = 1.0 - confidence
    lo = int(min(max(stats.binom.ppf(alpha / 2, N, 0.5), 1), N))
    hi = int(min(max(stats.binom.ppf(1 - alpha / 2, N, 0.5), 1), N))
    return MedianCI(float(np.median(x)), float(x[lo - 1]), float(x[hi - 1]), lo, hi, N)


@dataclass
class FitResult:
    a: float
    b: float
    c: float
    ns: list[int]
    medians: list[float]
    residuals: list[float]

    def __call__(self, n):
        return self.a * np.asarray(n) ** 2 + self.b * np.asarray(n) + self.c


def fit_quadratic(ns: Sequence[float], medians: Sequence[float]) -> FitResult:
    """Unweighted least-squares T(n) = a n^2 + b n + c."""
    ns_arr = np.asarray(ns, dtype=float)
    y = np.asarray(medians, dtype=float)
    if ns_arr.size < 3:
        raise ValueError("quadratic fit needs at least three points")
    design = np.vander(ns_arr, 3)
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return FitResult(float(coef[0]), float(coef[1]), float(coef[2]),
                     [int(n) for n in ns], y.tolist(), resid.tolist())


@dataclass
class Histogram:
    edges: list[float]
    counts: list[int]

    def rows(self):
        return [(self.edges[i], self.edges[i + 1], c) for i, c in enumerate(self.counts)]


def histogram(values: Sequence[float], bins: int | None = None, bin_width: float | None = None,
              value_range: tuple[float, float] | None = None) -> Histogram:
    """Left-closed, right-open bins; the last bin also holds its right edge."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise ValueError("histogram of an empty sample")
    lo, hi = value_range if value_range is not None else (float(x.min()), float(x.max()))
    if x.min() < lo or x.max() > hi:
        raise ValueError("values fall outside the histogram range")
    if bin_width is not None:
        nbins = max(1, math.ceil((hi - lo) / bin_width))
        edges = lo + bin_width * np.arange(nbins + 1)
    else:
        if hi == lo:
            hi = lo + 1.0
        edges = np.linspace(lo, hi, (bins or 10) + 1)
    counts, _ = np.histogram(x, bins=edges)
    return Histogram(edges.tolist(), counts.tolist())


# --- campaigns --------------------------------------------------------------


@dataclass
class ScalingResult:
    records: dict[int, list[RunRecord]]
    medians: dict[int, MedianCI]
    fit: FitResult | None
    excluded: dict[int, list[RunRecord]] = field(default_factory=dict)


def summarize_records(records: dict[int, list[RunRecord]]) -> ScalingResult:
    medians, excluded = {}, {}
    for n, recs in sorted(records.items()):
        good = [r.T_found for r in recs if r.status in ("ok", "trivial")]
        excluded[n] = [r for r in recs if r.status not in ("ok", "trivial")]
        if good:
            medians[n] = median_ci(good)
    fit = None
    if len(medians) >= 3:
        ns = sorted(medians)
        fit = fit_quadratic(ns, [medians[n].median for n in ns])
    return ScalingResult(records, medians, fit, excluded)


def campaign_scaling(
    n_range: Iterable[int],
    instances_per_n: int,
    seed_base: int,
    search: SearchConfig = SearchConfig(),
    k_filter: int | None = None,
    unique_required: bool = True,
    jobs: int = 1,
    store: RecordStore | None = None,
) -> ScalingResult:
    """Per-n median run times over filtered random graphs and their quadratic fit.

    With ``k_filter=None`` each graph is searched at its own maximum clique
    size, so the medians mix clique sizes by their natural frequency.
    """
    records = {}
    for n in n_range:
        instances = draw_instances(n, instances_per_n, seed_base, k_filter, unique_required)
        records[n] = run_searches(instances, search, jobs, store)
    return summarize_records(records)


@dataclass
class ProbabilityStudy:
    n: int
    k: int
    T: float
    unique_required: bool
    seeds: list[int]
    probabilities: list[float]
    max_norm_drift: float

    @property
    def median(self) -> float:
        return float(np.median(self.probabilities))

    @property
    def minimum(self) -> float:
        return float(np.min(self.probabilities))

    def histogram(self, bins: int = 20) -> Histogram:
        return histogram(self.probabilities, bins=bins, value_range=(0.0, 1.0))


def probability_study(
    n: int,
    k: int,
    T_fixed: float,
    instances: Sequence[Instance] | int,
    unique_required: bool = True,
    seed_base: int = 1,
    rel_tol: float = 1e-9,
    abs_tol: float = 1e-9,
    jobs: int = 1,
    store: RecordStore | None = None,
) -> ProbabilityStudy:
    """Success probability of every instance evolved for exactly ``T_fixed``."""
    if not T_fixed > 0:
        raise ValueError("T_fixed must be positive")
    if isinstance(instances, int):
        instances = draw_instances(n, instances, seed_base, k, unique_required)
    tasks = [(inst.seed, n, k, float(T_fixed), rel_tol, abs_tol) for inst in instances]
    keys = [
        task_key("probability", {"seed": t[0], "n": n, "k": k, "T": t[3], "rel_tol": rel_tol, "abs_tol": abs_tol})
        for t in tasks
    ]
    out = _run_tasks(_probability_task, tasks, jobs, store, keys)
    failed = [d["seed"] for d in out if d["failed"]]
    if failed:
        raise AdiaCliqueError(f"evolution hit the step cap for seeds {failed}")
    return ProbabilityStudy(n, k, float(T_fixed), unique_required, [d["seed"] for d in out],
                            [d["p"] for d in out], max(d["norm_drift"] for d in out))


# --- output formats ---------------------------------------------------------


def write_results_csv(path, records: Iterable[RunRecord], comments: Sequence[str] = ()) -> None:
    lines = [f"# {c}" for c in comments] + [RESULTS_HEADER] + [r.csv_row() for r in records]
    Path(path).write_text("\n".join(lines) + "\n")


def read_results_csv(path) -> list[RunRecord]:
    rows = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    if rows[0] != RESULTS_HEADER:
        raise ValueError(f"unexpected results header {rows[0]!r}")
    out = []
    for ln in rows[1:]:
        seed, n, k, unique, T, p, probes, steps, drift = ln.split(",")
        out.append(RunRecord(int(seed), int(n), int(k), bool(int(unique)), float(T), float(p),
                             int(probes), int(steps), float(drift)))
    return out


def scaling_summary(result: ScalingResult, config: dict) -> dict:
    per_n = {}
    for n, recs in sorted(result.records.items()):
        ci = result.medians.get(n)
        per_n[str(n)] = {
            "records": [asdict(r) for r in recs],
            "median": ci.median if ci else None,
            "ci_lower": ci.lower if ci else None,
            "ci_upper": ci.upper if ci else None,
            "ci_ranks": [ci.lower_rank, ci.upper_rank] if ci else None,
            "excluded_seeds": [r.seed for r in result.excluded.get(n, [])],
        }
    fit = None
    if result.fit is not None:
        fit = {"a": result.fit.a, "b": result.fit.b, "c": result.fit.c, "residuals": result.fit.residuals}
    return {"tool": "adiaclique", "version": __version__, "config": config, "per_n": per_n, "fit": fit}


def dump_json(obj, path=None) -> str:
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
