"""Command-line entry point: ``compart measure|simulate|sweep|polarize|selftest``.

Exit codes: 0 success, 2 input error, 3 infeasible configuration,
4 internal invariant breach.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from importlib import resources
from pathlib import Path

from . import experiments, fileio, genmodel, metrics, polarization
from .errors import (
    AlignmentError,
    CompartError,
    ConfigError,
    DegenerateInputError,
    DomainError,
    GraphValidationError,
    ParseError,
)
from .graph import Membership, possible_dyads

EXIT_OK, EXIT_INPUT, EXIT_CONFIG, EXIT_INTERNAL = 0, 2, 3, 4


class SpecError(CompartError, ValueError):
    """Sweep spec file with missing, unknown or mistyped keys."""


def _dumps(obj) -> str:
    def clean(v):
        if isinstance(v, float) and (math.isnan(v) or math.isinf(v)):
            return None
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, list):
            return [clean(x) for x in v]
        return v

    return json.dumps(clean(obj), indent=2) + "\n"


def _table(pairs) -> str:
    width = max(len(k) for k, _ in pairs)
    lines = []
    for k, v in pairs:
        if v is None:
            shown = "undefined"
        elif isinstance(v, float):
            shown = f"{v:.6f}"
        else:
            shown = str(v)
        lines.append(f"{k.ljust(width)}  {shown}")
    return "\n".join(lines) + "\n"


def _measure_report(graph, membership) -> dict:
    summary = metrics.summarize(graph, membership)
    return {
        "n": graph.n,
        "edges": graph.n_edges,
        "directed": graph.directed,
        "weighted": graph.is_weighted,
        "groups": membership.n_groups,
        **summary.to_dict(),
    }


def cmd_measure(args) -> int:
    graph, membership, _ = fileio.load_graph(args.edges, args.membership, args.directed, args.weighted)
    report = _measure_report(graph, membership)
    text = _dumps(report)
    if args.out:
        fileio.atomic_write(args.out, text)
    if args.format == "json":
        sys.stdout.write(text)
    else:
        labels = [
            ("nodes", "n"), ("edges", "edges"), ("groups", "groups"),
            ("within fraction F", "F"), ("density D", "D"), ("max within density D_M", "D_M"),
            ("upsilon", "upsilon"), ("upsilon (degree-normalized)", "upsilon_tilde"),
            ("modularity Q", "modularity"),
        ]
        sys.stdout.write(_table([(name, report[key]) for name, key in labels]))
    return EXIT_OK


SIM_KEYS = {"n", "groups", "k", "density", "rho", "seed", "directed"}


def _sim_settings(args) -> dict:
    settings = {}
    if args.config:
        try:
            settings = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", args.config, exc.lineno) from None
        if not isinstance(settings, dict):
            raise SpecError("simulation config must be a JSON object")
        unknown = sorted(set(settings) - SIM_KEYS)
        if unknown:
            raise SpecError(f"unknown simulation keys: {', '.join(unknown)}")
    for key in SIM_KEYS:
        val = getattr(args, key, None)
        if val is not None and val is not False:
            settings[key] = val
    return settings


def _parse_groups(groups, n):
    if groups is None:
        if n is None:
            raise ConfigError("give --n, --groups, or both")
        return genmodel.equal_blocks(n, 2 if n >= 2 else 1).group_sizes.tolist()
    if isinstance(groups, str):
        try:
            groups = [int(x) for x in groups.split(",") if x.strip()]
        except ValueError:
            raise ConfigError(f"--groups must be comma-separated sizes, got {groups!r}") from None
    return [int(g) for g in groups]


def cmd_simulate(args) -> int:
    s = _sim_settings(args)
    n = s.get("n")
    sizes = _parse_groups(s.get("groups"), n)
    if any(x <= 0 for x in sizes):
        raise ConfigError("group sizes must be positive")
    if n is None:
        n = sum(sizes)
    if sum(sizes) != n:
        raise ConfigError(f"group sizes sum to {sum(sizes)} but n={n}")
    directed = bool(s.get("directed", False))
    if "k" in s and "density" in s:
        raise ConfigError("give either k or density, not both")
    if "k" in s:
        k = int(s["k"])
    elif "density" in s:
        k = round(float(s["density"]) * possible_dyads(n, directed))
    else:
        raise ConfigError("edge budget missing: give --k or --density")
    if "rho" not in s:
        raise ConfigError("preference missing: give --rho")
    membership = Membership.from_sizes(sizes)
    cfg = genmodel.GenConfig(membership, k, float(s["rho"]), directed, int(s.get("seed", 0)))
    graph = genmodel.simulate(cfg)

    report = _measure_report(graph, membership)
    report.update({"rho": cfg.rho, "seed": cfg.seed, "k": cfg.k, "group_sizes": sizes})
    out = Path(args.out_dir)
    fileio.atomic_write(out / "edges.csv", fileio.write_edge_list(graph))
    fileio.atomic_write(out / "membership.csv", fileio.write_membership(membership))
    fileio.atomic_write(out / "metrics.json", _dumps(report))
    sys.stdout.write(_dumps(report))
    return EXIT_OK


GRID_KEYS = {
    "required": {"rho_values": list, "dm_grid": list, "d_grid": list, "n": int, "replicates": int},
    "optional": {"seed_base": int, "metrics": list, "style": str, "directed": bool, "kind": str},
}
ORDERING_KEYS = {
    "required": {"n": int, "group_sizes": list, "d_grid": list, "rho_values": list, "replicates": int},
    "optional": {"seed_base": int, "metrics": list, "directed": bool, "kind": str},
}


def load_sweep_spec(source) -> dict:
    """Read a sweep spec from a path or a bundled name ("fig3", "fig4") and check its keys."""
    path = Path(source)
    if not path.exists() and str(source) in ("fig3", "fig4"):
        text = resources.files("compart.data").joinpath(f"{source}.json").read_text(encoding="utf-8")
    else:
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ParseError(f"cannot read spec ({exc.strerror})", source) from None
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", source, exc.lineno) from None
    if not isinstance(spec, dict):
        raise SpecError("sweep spec must be a JSON object")
    kind = spec.get("kind", "grid")
    if kind not in ("grid", "ordering"):
        raise SpecError(f"offending keys: kind (must be 'grid' or 'ordering', got {kind!r})")
    schema = GRID_KEYS if kind == "grid" else ORDERING_KEYS
    problems = []
    for key in sorted(schema["required"]):
        if key not in spec:
            problems.append(f"{key} (missing)")
    allowed = {**schema["required"], **schema["optional"]}
    for key in sorted(spec):
        if key not in allowed:
            problems.append(f"{key} (unknown)")
            continue
        want = allowed[key]
        val = spec[key]
        ok = isinstance(val, want) and not (want is int and isinstance(val, bool))
        if want is list and ok:
            inner = str if key == "metrics" else (int if key == "group_sizes" else (int, float))
            ok = all(isinstance(x, inner) and not isinstance(x, bool) for x in val)
        if not ok:
            problems.append(f"{key} (expected {want.__name__})")
    if problems:
        raise SpecError("offending keys: " + ", ".join(problems))
    spec["kind"] = kind
    return spec


def run_sweep_spec(spec: dict, workers: int = 1):
    spec = dict(spec)
    kind = spec.pop("kind")
    try:
        if kind == "grid":
            return experiments.run_grid_sweep(experiments.SweepSpec(**spec), workers=workers)
        return experiments.run_ordering_experiment(workers=workers, **spec)
    except ValueError as exc:
        if isinstance(exc, CompartError):
            raise
        raise ConfigError(str(exc)) from None


def cmd_sweep(args) -> int:
    spec = load_sweep_spec(args.spec)
    if args.replicates is not None:
        spec["replicates"] = args.replicates
    if args.seed is not None:
        spec["seed_base"] = args.seed
    workers = args.workers or experiments.default_workers()
    print(f"running {spec['kind']} sweep with {spec['replicates']} replicates per cell "
          f"on {workers} worker(s)", file=sys.stderr)
    result = run_sweep_spec(spec, workers)
    prefix = Path(args.out)
    fileio.atomic_write(prefix.with_suffix(".csv"), result.to_csv())
    fileio.atomic_write(prefix.with_suffix(".json"), result.to_json())
    skipped = sum(1 for r in result.rows if r.skipped)
    print(f"wrote {len(result.rows)} rows ({skipped} skipped) to {prefix}.csv/.json", file=sys.stderr)
    return EXIT_OK


def _bundled_polarization(name: str) -> Path:
    return Path(str(resources.files("compart.data").joinpath("polarization", name)))


def cmd_polarize(args) -> int:
    if args.example:
        paths = [_bundled_polarization(f) for f in ("ties.csv", "membership.csv", "ground_truth.csv")]
    else:
        paths = [args.actor_items, args.membership, args.ground_truth]
        if any(p is None for p in paths):
            raise ParseError("polarize needs ACTOR_ITEMS MEMBERSHIP GROUND_TRUTH (or --example)")
    ties = fileio.read_actor_items(paths[0])
    members = fileio.read_period_membership(paths[1])
    truth = fileio.read_ground_truth(paths[2])
    report = polarization.analyze_periods(ties, members, truth)
    payload = _dumps(report.to_dict())
    if args.out_dir:
        out = Path(args.out_dir)
        fileio.atomic_write(out / "period_metrics.csv", report.to_csv())
        fileio.atomic_write(out / "comparison.json", payload)
    sys.stdout.write(payload)
    return EXIT_OK


def selftest_checks():
    """Quick end-to-end checks; yields (name, passed, detail)."""
    two = Membership.from_sizes([20, 20])
    cap_in = 2 * 190
    ups = [
        metrics.upsilon_of_graph(genmodel.simulate(genmodel.GenConfig(two, cap_in, 1.0, seed=s)), two)
        for s in range(10)
    ]
    yield "rho=1 at within capacity gives upsilon=1", all(abs(u - 1) < 1e-12 for u in ups), f"min {min(ups)!r}"
    ups = [
        metrics.upsilon_of_graph(genmodel.simulate(genmodel.GenConfig(two, 400, 0.0, seed=s)), two)
        for s in range(10)
    ]
    yield "rho=0 at between capacity gives upsilon=-1", all(abs(u + 1) < 1e-12 for u in ups), f"max {max(ups)!r}"
    dF, dD = metrics.upsilon_partials(0.9, 0.4, 0.5)
    h = 1e-6
    fd = (metrics.upsilon(0.9 + h, 0.4, 0.5) - metrics.upsilon(0.9 - h, 0.4, 0.5)) / (2 * h)
    yield "analytic dF matches finite difference", abs(fd - dF) < 1e-6, f"{dF!r} vs {fd!r}"
    g = genmodel.gamma_from_counts(20, 25, 0.7)
    yield "gamma from pool counts", abs(g - 14 / 21.5) < 1e-15, repr(g)
    res = polarization.hotelling_compare([1, 2, 3, 4, 5], [1, 2, 3, 4, 5], [2, 1, 4, 3, 5])
    yield "identical predictors give t=0, p=1", res.t == 0 and res.p == 1.0, repr(res.t)


def cmd_selftest(args) -> int:
    failed = 0
    for name, passed, detail in selftest_checks():
        failed += not passed
        print(f"[{'PASS' if passed else 'FAIL'}] {name} ({detail})")
    return EXIT_OK if not failed else EXIT_INTERNAL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="compart", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("measure", help="F, D, D_M, upsilon, upsilon-tilde and Q for a graph")
    p.add_argument("edges", help="edge list CSV/TSV: source,target[,weight]")
    p.add_argument("membership", help="membership CSV/TSV: node_id,community")
    p.add_argument("--directed", action="store_true")
    p.add_argument("--weighted", action="store_true", help="read a third weight column")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.add_argument("--out", help="also write the JSON report here")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("simulate", help="draw a graph from the preference block model")
    p.add_argument("--config", help="JSON file with n, groups, k|density, rho, seed, directed")
    p.add_argument("--n", type=int)
    p.add_argument("--groups", help="comma-separated group sizes, e.g. 10,10")
    p.add_argument("--k", type=int, help="number of edges")
    p.add_argument("--density", type=float, help="target density (alternative to --k)")
    p.add_argument("--rho", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--directed", action="store_true", default=None)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="Monte Carlo grid or rho-ordering sweep")
    p.add_argument("spec", help="sweep spec JSON, or the bundled name fig3 / fig4")
    p.add_argument("--out", required=True, help="output prefix; writes PREFIX.csv and PREFIX.json")
    p.add_argument("--replicates", type=int, help="override replicates per cell")
    p.add_argument("--seed", type=int, help="override seed_base")
    p.add_argument("--workers", type=int, help="worker processes (default: COMPART_THREADS or all cores)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("polarize", help="per-period upsilon/Q and Hotelling comparison")
    p.add_argument("actor_items", nargs="?", help="CSV: period,actor_id,item_id")
    p.add_argument("membership", nargs="?", help="CSV: period,actor_id,group")
    p.add_argument("ground_truth", nargs="?", help="CSV: period,value")
    p.add_argument("--example", action="store_true", help="use the bundled synthetic 13-period fixture")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_polarize)

    p = sub.add_parser("selftest", help="run quick built-in checks")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, GraphValidationError, AlignmentError, DegenerateInputError, SpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CompartError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
