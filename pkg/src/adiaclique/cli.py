"""Command-line front end.

Exit codes: 0 success, 2 usage or invalid input, 3 resource or attempt cap
refused, 4 numerical failure, 1 any other package error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__
from .errors import AdiaCliqueError, IntegrationError, ResourceCapError
from .evolve import EvolutionConfig, evolve, write_state_csv
from .experiment import (
    SearchConfig,
    RecordStore,
    campaign_scaling,
    draw_instances,
    dump_json,
    find_runtime,
    fit_quadratic,
    histogram,
    median_ci,
    probability_study,
    read_results_csv,
    scaling_summary,
    write_results_csv,
)
from .graph import Graph, classify, generate_random_graph, mask_vertices, sample_until
from .hamiltonian import SubspaceHamiltonian
from .spectrum import gap_scan
from .stateprep import biased_prep_probability, biased_prep_sample, symmetric_prep_gap

EXIT_USAGE = 2
EXIT_CAP = 3
EXIT_NUMERIC = 4

# flags that control execution but never change results
_RUNTIME_ONLY = {"jobs", "out", "csv", "checkpoint", "state_out", "config", "func", "command"}


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def n_range(text: str) -> list[int]:
    """``7..12``, ``7,9,11`` or a single ``15``."""
    if ".." in text:
        lo, hi = (int(t) for t in text.split("..", 1))
        values = list(range(lo, hi + 1))
    else:
        values = [int(t) for t in text.split(",")]
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"bad vertex-count range {text!r}")
    return values


def read_config_file(path) -> dict:
    """``key=value`` lines; ``#`` starts a comment; dashes in keys become underscores."""
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"config line {raw!r} is not key=value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _RUNTIME_ONLY}


def _envelope(args, **payload) -> dict:
    return {"tool": "adiaclique", "version": __version__, "command": args.command, "config": _config(args), **payload}


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _search_config(args) -> SearchConfig:
    return SearchConfig(target=args.target_p, tol=args.target_tol, rel_tol=args.rel_tol, abs_tol=args.abs_tol)


def _resolve_k(g: Graph, k):
    return classify(g).max_clique_size if k is None else k


# --- commands ---------------------------------------------------------------


def cmd_gen(args) -> int:
    if args.k is None and not args.unique:
        g = generate_random_graph(args.n, args.seed)
    else:
        g = sample_until(args.n, args.k, args.unique, args.seed, args.max_attempts).graph
    _emit(g.to_text(), args.out)
    return 0


def cmd_classify(args) -> int:
    g = Graph.read(args.graph)
    c = classify(g)
    payload = {"n": g.n, "seed": g.seed, "max_clique_size": c.max_clique_size, "unique": c.is_unique,
               "cliques": [list(mask_vertices(m)) for m in c.cliques_at_max]}
    _emit(json.dumps(_envelope(args, **payload), sort_keys=True) + "\n", args.out)
    return 0


def cmd_evolve(args) -> int:
    g = Graph.read(args.graph)
    k = _resolve_k(g, args.k)
    h = SubspaceHamiltonian(g, k)
    res = evolve(h, EvolutionConfig(args.T, rel_tol=args.rel_tol, abs_tol=args.abs_tol))
    if args.state_out:
        write_state_csv(args.state_out, h.basis, res.final_state)
    payload = {"n": g.n, "seed": g.seed, "k": k, "T": args.T, "p": res.success_probability,
               "norm_drift": res.norm_drift, "steps_accepted": res.steps_accepted,
               "steps_rejected": res.steps_rejected, "failed": res.failed}
    _emit(json.dumps(_envelope(args, **payload), sort_keys=True) + "\n", args.out)
    return EXIT_NUMERIC if res.failed else 0


def cmd_find_t(args) -> int:
    from dataclasses import asdict

    g = Graph.read(args.graph)
    k = _resolve_k(g, args.k)
    rec = find_runtime(g, k, _search_config(args))
    _emit(json.dumps(_envelope(args, record=asdict(rec)), sort_keys=True) + "\n", args.out)
    return EXIT_NUMERIC if rec.status == "failed" else 0


def cmd_campaign(args) -> int:
    store = RecordStore(args.checkpoint) if args.checkpoint else None
    result = campaign_scaling(args.n, args.count, args.seed, _search_config(args), args.k, args.unique,
                              args.jobs, store)
    summary = scaling_summary(result, _config(args))
    if args.csv:
        records = [r for n in sorted(result.records) for r in result.records[n]]
        write_results_csv(args.csv, records, [f"adiaclique {__version__}",
                                              "config " + json.dumps(_config(args), sort_keys=True)])
    _emit(dump_json(summary), args.out)
    return 0


def cmd_study(args) -> int:
    store = RecordStore(args.checkpoint) if args.checkpoint else None
    instances = draw_instances(args.n, args.count, args.seed, args.k, args.unique)
    study = probability_study(args.n, args.k, args.T, instances, args.unique, args.seed,
                              args.rel_tol, args.abs_tol, args.jobs, store)
    hist = study.histogram(args.bins)
    payload = {"median": study.median, "minimum": study.minimum, "max_norm_drift": study.max_norm_drift,
               "seeds": study.seeds, "probabilities": study.probabilities,
               "histogram": {"edges": hist.edges, "counts": hist.counts}}
    _emit(dump_json(_envelope(args, **payload)), args.out)
    return 0


def _gap_payload(report) -> dict:
    return {"g": report.g, "s_star": report.s_star, "E_script": report.E_script,
            "bound": report.bound if math.isfinite(report.bound) else None,
            "degenerate": report.degenerate}


def cmd_gap(args) -> int:
    g = Graph.read(args.graph)
    k = _resolve_k(g, args.k)
    report = gap_scan(SubspaceHamiltonian(g, k), args.grid, args.refine, args.levels)
    comments = [f"adiaclique {__version__}", "config " + json.dumps(_config(args), sort_keys=True)]
    if args.out:
        report.write_csv(args.out, comments)
    sys.stdout.write(json.dumps(_envelope(args, k=k, **_gap_payload(report)), sort_keys=True) + "\n")
    return 0


def cmd_prep(args) -> int:
    p = biased_prep_probability(args.n, args.k)
    freq = biased_prep_sample(args.n, args.k, args.seed, args.trials)
    stderr = math.sqrt(p * (1 - p) / args.trials)
    payload = {"p_closed_form": p, "frequency": freq, "standard_error": stderr,
               "z": (freq - p) / stderr if stderr else 0.0, "expected_repetitions": 1 / p,
               "reference_sqrt_2_over_n_pi": math.sqrt(2 / (args.n * math.pi))}
    _emit(json.dumps(_envelope(args, **payload), sort_keys=True) + "\n", args.out)
    return 0


def cmd_prep_gap(args) -> int:
    k = args.n // 2 if args.k is None else args.k
    report = symmetric_prep_gap(args.n, k, args.grid, args.refine, args.levels)
    comments = [f"adiaclique {__version__}", "config " + json.dumps(_config(args), sort_keys=True)]
    if args.out:
        report.write_csv(args.out, comments)
    sys.stdout.write(json.dumps(_envelope(args, k=k, **_gap_payload(report)), sort_keys=True) + "\n")
    return 0


def cmd_fit(args) -> int:
    path = Path(args.input)
    if path.suffix == ".json":
        summary = json.loads(path.read_text())
        medians = {int(n): d["median"] for n, d in summary["per_n"].items() if d["median"] is not None}
    else:
        by_n: dict[int, list[float]] = {}
        for r in read_results_csv(path):
            if r.status == "ok" and math.isfinite(r.T_found):
                by_n.setdefault(r.n, []).append(r.T_found)
        medians = {n: median_ci(v).median for n, v in by_n.items()}
    ns = sorted(medians)
    fit = fit_quadratic(ns, [medians[n] for n in ns])
    payload = {"a": fit.a, "b": fit.b, "c": fit.c, "ns": fit.ns, "medians": fit.medians, "residuals": fit.residuals}
    _emit(json.dumps(_envelope(args, **payload), sort_keys=True) + "\n", args.out)
    return 0


def cmd_hist(args) -> int:
    path = Path(args.input)
    data = json.loads(path.read_text())
    if "probabilities" in data:
        values = data["probabilities"]
    else:
        values = [r["T_found"] for d in data["per_n"].values() for r in d["records"] if r["status"] == "ok"]
    hist = histogram(values, bins=args.bins, bin_width=args.bin_width)
    lines = ["left,right,count"] + [f"{a!r},{b!r},{c}" for a, b, c in hist.rows()]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


# --- parser -----------------------------------------------------------------


def _add_tolerances(p):
    p.add_argument("--rel-tol", type=float, default=1e-9, help="integrator relative tolerance (default 1e-9)")
    p.add_argument("--abs-tol", type=float, default=1e-9, help="integrator absolute tolerance (default 1e-9)")


def _add_target(p):
    p.add_argument("--target-p", type=float, default=0.125, help="target success probability (default 0.125)")
    p.add_argument("--target-tol", type=float, default=0.0025, help="accepted |p - target| (default 0.0025)")


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="adiaclique", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"adiaclique {__version__}")
    parser.add_argument("--config", help="key=value file supplying defaults for the subcommand")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    def add(name, func, help):
        p = sub.add_parser(name, help=help, formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        p.set_defaults(func=func)
        subs[name] = p
        return p

    p = add("gen", cmd_gen, "generate a random graph, optionally filtered")
    p.add_argument("--n", type=positive_int, required=True)
    p.add_argument("--seed", type=int, default=1, help="graph seed, or first seed tried when filtering")
    p.add_argument("--k", type=int, default=None, help="require this maximum clique size")
    p.add_argument("--unique", action="store_true", help="require a unique maximum clique")
    p.add_argument("--max-attempts", type=positive_int, default=100_000)
    p.add_argument("--out")

    p = add("classify", cmd_classify, "exact maximum cliques of a graph file")
    p.add_argument("--graph", required=True)
    p.add_argument("--out")

    p = add("evolve", cmd_evolve, "evolve one graph for run time T")
    p.add_argument("--graph", required=True)
    p.add_argument("--k", type=int, default=None, help="clique size (default: maximum clique size)")
    p.add_argument("--T", type=float, required=True)
    _add_tolerances(p)
    p.add_argument("--state-out", help="write the final state as CSV")
    p.add_argument("--out")

    p = add("find-t", cmd_find_t, "search the run time reaching the target probability")
    p.add_argument("--graph", required=True)
    p.add_argument("--k", type=int, default=None)
    _add_target(p)
    _add_tolerances(p)
    p.add_argument("--out")

    p = add("campaign", cmd_campaign, "median run times over n and quadratic fit")
    p.add_argument("--n", type=n_range, required=True, help="e.g. 7..13")
    p.add_argument("--count", type=positive_int, default=100, help="instances per n")
    p.add_argument("--seed", type=int, default=1, help="campaign seed")
    p.add_argument("--k", type=int, default=None, help="restrict to this maximum clique size")
    p.add_argument("--unique", action=argparse.BooleanOptionalAction, default=True)
    _add_target(p)
    _add_tolerances(p)
    p.add_argument("--jobs", type=positive_int, default=1)
    p.add_argument("--checkpoint", help="JSONL record store for resuming")
    p.add_argument("--csv", help="also write per-instance results CSV")
    p.add_argument("--out")

    p = add("study", cmd_study, "success probabilities at a fixed run time")
    p.add_argument("--n", type=positive_int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--count", type=positive_int, default=100)
    p.add_argument("--seed", type=int, default=1, help="campaign seed")
    p.add_argument("--unique", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--bins", type=positive_int, default=20)
    _add_tolerances(p)
    p.add_argument("--jobs", type=positive_int, default=1)
    p.add_argument("--checkpoint")
    p.add_argument("--out")

    p = add("gap", cmd_gap, "spectral gap scan of one instance")
    p.add_argument("--graph", required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--grid", type=positive_int, default=101)
    p.add_argument("--levels", type=positive_int, default=2)
    p.add_argument("--refine", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--out", help="CSV of the scanned points")

    p = add("prep", cmd_prep, "biased-Hadamard preparation statistics")
    p.add_argument("--n", type=positive_int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--trials", type=positive_int, default=1_000_000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out")

    p = add("prep-gap", cmd_prep_gap, "gap of the symmetric-subspace preparation Hamiltonian")
    p.add_argument("--n", type=positive_int, required=True)
    p.add_argument("--k", type=int, default=None, help="default n // 2")
    p.add_argument("--grid", type=positive_int, default=101)
    p.add_argument("--levels", type=positive_int, default=4)
    p.add_argument("--refine", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--out", help="CSV of the scanned points")

    p = add("fit", cmd_fit, "quadratic fit of medians from a summary JSON or results CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")

    p = add("hist", cmd_hist, "histogram of run times or probabilities from a JSON output")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--bins", type=positive_int, default=None)
    p.add_argument("--bin-width", type=float, default=None)
    p.add_argument("--out")
    return parser, subs


def parse_args(argv=None) -> argparse.Namespace:
    parser, subs = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    command = next((tok for tok in rest if tok in subs), None)
    if known.config and command is not None:
        sp = subs[command]
        values = read_config_file(known.config)
        for action in sp._actions:
            if action.dest not in values:
                continue
            raw = values[action.dest]
            if isinstance(action, (argparse._StoreTrueAction, argparse.BooleanOptionalAction)):
                values[action.dest] = raw.lower() in ("1", "true", "yes", "on")
            elif action.type is not None:
                values[action.dest] = action.type(raw)
            action.required = False
        unknown = set(values) - {a.dest for a in sp._actions}
        if unknown:
            raise ValueError(f"unknown config keys for {command}: {sorted(unknown)}")
        sp.set_defaults(**values)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except (ValueError, OSError) as exc:
        print(f"adiaclique: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except ResourceCapError as exc:
        print(f"adiaclique: {exc}", file=sys.stderr)
        return EXIT_CAP
    except IntegrationError as exc:
        print(f"adiaclique: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except AdiaCliqueError as exc:
        print(f"adiaclique: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"adiaclique: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
