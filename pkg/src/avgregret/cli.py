"""Command line entry point: ``avgregret {gen,select,dp2d,brute,eval,compare}``.

Exit codes: 0 success, 2 invalid input or configuration, 3 an engine was
asked for something outside its domain.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field

from . import dp2d as dp
from .core import Population, PreconditionError, ValidationError, make_solution
from .distributions import (
    RNG_INFO,
    SamplingParams,
    UniformBox,
    draw_samples,
    sample_size,
)
from .greedy import greedy_shrink, steepness
from .io import (
    RunReport,
    file_sha256,
    generate_synthetic,
    load_dataset,
    load_gmm,
    load_utility_matrix,
    write_dataset,
)
from .oracle import DEFAULT_LIMIT, brute_force_optimal

logger = logging.getLogger("avgregret")

COMMANDS = ("gen", "select", "dp2d", "brute", "eval", "compare")
RECHECK_TOL = 1e-12
EXIT_OK, EXIT_INVALID, EXIT_PRECONDITION = 0, 2, 3


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    utilities: str | None = None
    dist: str | None = None
    k: int | None = None
    epsilon: float = 0.05
    sigma: float = 0.1
    seed: int = 0
    samples: int | None = None
    lazy: bool = True
    percentiles: list[float] = field(default_factory=lambda: [50.0, 90.0, 99.0, 100.0])
    threads: int | None = None
    output: str | None = None
    limit: int = DEFAULT_LIMIT
    solution: list[int] | None = None
    with_steepness: bool = False
    n: int | None = None
    d: int | None = None
    kind: str = "uniform"

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}")
        if self.command == "gen":
            if not self.n or not self.d or self.n < 1 or self.d < 1:
                raise ValidationError("gen needs --n >= 1 and --d >= 1")
            return
        if not self.input:
            raise ValidationError("--input is required")
        if self.command != "eval" and (self.k is None or self.k < 1):
            raise ValidationError("--k must be >= 1")
        SamplingParams(self.epsilon, self.sigma)
        if self.samples is not None and self.samples < 1:
            raise ValidationError("--samples must be >= 1")
        for q in self.percentiles:
            if not 0 <= q <= 100:
                raise ValidationError(f"percentile {q} outside [0, 100]")
        if self.command == "eval" and self.solution is None:
            raise ValidationError("eval needs --solution")

    def echo(self) -> dict:
        out = asdict(self)
        out.pop("output")
        return out


@dataclass
class _Problem:
    dataset: object
    pop: Population
    evaluation: str
    sample_size: int | None
    dist: str
    preprocess_seconds: float
    warnings: list


def _resolve_dist(cfg: RunConfig) -> str:
    if cfg.dist:
        return cfg.dist
    return "table" if cfg.utilities else "uniform-linear"


def _prepare(cfg: RunConfig) -> _Problem:
    t0 = time.perf_counter()
    D = load_dataset(cfg.input)
    warnings = [f"row {r + 2} duplicates an earlier point and was dropped" for r in D.dropped]
    dist = _resolve_dist(cfg)
    if dist == "table":
        if not cfg.utilities:
            raise ValidationError("--dist table needs --utilities")
        pop = load_utility_matrix(cfg.utilities, D).population(D)
        evaluation, N = "exact-discrete", None
    elif dist == "uniform-linear" or dist.startswith("gmm:"):
        spec = UniformBox(D.dim) if dist == "uniform-linear" else load_gmm(dist[4:])
        N = cfg.samples or sample_size(SamplingParams(cfg.epsilon, cfg.sigma))
        pop = draw_samples(spec, N, cfg.seed, D)
        evaluation = "sampled"
    else:
        raise ValidationError(f"--dist must be uniform-linear, gmm:<file> or table, got {dist!r}")
    return _Problem(D, pop, evaluation, N, dist, time.perf_counter() - t0, warnings)


def _q_key(q: float) -> str:
    return f"{q:g}"


def _describe(pop: Population, S, qs) -> dict:
    vrr = pop.vrr(S)
    return {
        "arr": pop.arr(S),
        "vrr": vrr,
        "stddev": math.sqrt(vrr),
        "percentiles": {_q_key(q): v for q, v in zip(qs, pop.percentiles(S, qs))},
    }


def _revalidate(reported: float, recomputed: float, what: str) -> None:
    if abs(reported - recomputed) > RECHECK_TOL:
        raise RuntimeError(f"{what}: reported arr {reported!r} != recomputed {recomputed!r}")


def _base_report(cfg: RunConfig, prob: _Problem, algorithm: str) -> RunReport:
    rep = RunReport(command=cfg.command, algorithm=algorithm, config=cfg.echo())
    rep.evaluation = prob.evaluation
    rep.sample_size = prob.sample_size
    rep.warnings = list(prob.warnings)
    if prob.evaluation == "sampled":
        rep.rng = dict(RNG_INFO, seed=cfg.seed)
    rep.extra["n"] = prob.dataset.n
    rep.extra["d"] = prob.dataset.dim
    rep.extra["dist"] = prob.dist
    return rep


def _fill(rep: RunReport, prob: _Problem, S, qs) -> None:
    D = prob.dataset
    rep.solution = list(S)
    rep.solution_labels = [D.label(i) for i in S]
    desc = _describe(prob.pop, S, qs)
    rep.arr, rep.vrr, rep.stddev, rep.percentiles = desc["arr"], desc["vrr"], desc["stddev"], desc["percentiles"]


def _run_greedy(cfg, prob, lazy):
    t0 = time.perf_counter()
    res = greedy_shrink(prob.pop, cfg.k, lazy=lazy, threads=cfg.threads)
    elapsed = time.perf_counter() - t0
    _revalidate(res.arr, prob.pop.arr(res.solution), "greedy")
    counters = {
        "iterations": len(res.trace),
        "evaluations": res.evaluations,
        "rescanned_fraction": res.rescanned_fraction,
        "reevaluated_fraction": res.reevaluated_fraction,
        "trace": [[p, v] for p, v in res.trace],
    }
    return res, counters, elapsed


def _run_dp(cfg, prob):
    if prob.dataset.dim != 2:
        raise PreconditionError("dp2d needs a 2-dimensional dataset")
    if prob.dist != "uniform-linear":
        raise PreconditionError("dp2d supports only --dist uniform-linear")
    t0 = time.perf_counter()
    res = dp.dp_solve(prob.dataset, cfg.k)
    elapsed = time.perf_counter() - t0
    _revalidate(res.arr, dp.arr_uniform(res.solution, prob.dataset), "dp2d")
    return res, elapsed


def _cmd_gen(cfg: RunConfig) -> RunReport:
    D = generate_synthetic(cfg.n, cfg.d, cfg.kind, cfg.seed)
    rep = RunReport(command="gen", algorithm=f"synthetic-{cfg.kind}", config=cfg.echo())
    rep.rng = dict(RNG_INFO, seed=cfg.seed)
    rep.extra = {"n": D.n, "d": D.dim, "kind": cfg.kind}
    if cfg.output:
        write_dataset(D, cfg.output)
        rep.extra["sha256"] = file_sha256(cfg.output)
    return rep


def _cmd_select(cfg, prob) -> RunReport:
    res, counters, elapsed = _run_greedy(cfg, prob, cfg.lazy)
    rep = _base_report(cfg, prob, "greedy-shrink" + ("" if cfg.lazy else "-eager"))
    _fill(rep, prob, res.solution, cfg.percentiles)
    rep.counters = counters
    if cfg.with_steepness:
        rep.steepness, rep.bound = steepness(prob.pop)
    rep.timing["query_seconds"] = elapsed
    return rep


def _cmd_brute(cfg, prob) -> RunReport:
    t0 = time.perf_counter()
    res = brute_force_optimal(prob.pop, cfg.k, cfg.limit)
    elapsed = time.perf_counter() - t0
    rep = _base_report(cfg, prob, "brute-force")
    _fill(rep, prob, res.solution, cfg.percentiles)
    _revalidate(res.optimal_arr, rep.arr, "brute")
    rep.optimal = True
    rep.counters = {"evaluations": res.evaluations, "best_subsets": [list(s) for s in res.best_subsets]}
    rep.timing["query_seconds"] = elapsed
    return rep


def _cmd_dp2d(cfg, prob) -> RunReport:
    res, elapsed = _run_dp(cfg, prob)
    rep = _base_report(cfg, prob, "dp2d")
    _fill(rep, prob, res.solution, cfg.percentiles)
    # arr is the exact integral; the sampled value stays alongside as a diagnostic
    rep.extra["sampled_arr"] = rep.arr
    rep.arr = res.arr
    rep.evaluation = "exact-integral"
    rep.optimal = True
    rep.counters = {"skyline": list(res.skyline), "cells": res.cells, "truncated": res.truncated}
    rep.timing["query_seconds"] = elapsed
    return rep


def _cmd_eval(cfg, prob) -> RunReport:
    S = make_solution(cfg.solution, prob.dataset.n)
    rep = _base_report(cfg, prob, "eval")
    t0 = time.perf_counter()
    _fill(rep, prob, S, cfg.percentiles)
    rep.timing["query_seconds"] = time.perf_counter() - t0
    return rep


def _engine_row(name, prob, S, qs, elapsed, **more) -> dict:
    row = {"engine": name, "solution": list(S), "query_seconds": elapsed}
    row.update(_describe(prob.pop, S, qs))
    row.update(more)
    return row


def _cmd_compare(cfg, prob) -> RunReport:
    rep = _base_report(cfg, prob, "compare")
    qs = cfg.percentiles
    res, counters, elapsed = _run_greedy(cfg, prob, lazy=True)
    rows = [_engine_row("greedy-shrink", prob, res.solution, qs, elapsed,
                        evaluations=res.evaluations)]
    if prob.dataset.n <= 200:
        res_e, _, elapsed_e = _run_greedy(cfg, prob, lazy=False)
        rows.append(_engine_row("greedy-shrink-eager", prob, res_e.solution, qs, elapsed_e,
                                evaluations=res_e.evaluations))
    if math.comb(prob.dataset.n, cfg.k) <= cfg.limit:
        t0 = time.perf_counter()
        br = brute_force_optimal(prob.pop, cfg.k, cfg.limit)
        rows.append(_engine_row("brute-force", prob, br.solution, qs, time.perf_counter() - t0))
    if prob.dataset.dim == 2 and prob.dist == "uniform-linear":
        dres, elapsed_d = _run_dp(cfg, prob)
        rows.append(_engine_row("dp2d", prob, dres.solution, qs, elapsed_d, exact_arr=dres.arr))
    rep.engines = rows
    best = min(rows, key=lambda r: (r["arr"], r["engine"]))
    _fill(rep, prob, best["solution"], qs)
    rep.extra["best_engine"] = best["engine"]
    rep.timing["query_seconds"] = {r["engine"]: r["query_seconds"] for r in rows}
    for r in rows:
        r.pop("query_seconds")
    return rep


_DISPATCH = {
    "select": _cmd_select,
    "brute": _cmd_brute,
    "dp2d": _cmd_dp2d,
    "eval": _cmd_eval,
    "compare": _cmd_compare,
}


def run(cfg: RunConfig) -> RunReport:
    cfg.validate()
    if cfg.command == "gen":
        return _cmd_gen(cfg)
    prob = _prepare(cfg)
    rep = _DISPATCH[cfg.command](cfg, prob)
    rep.timing["preprocess_seconds"] = prob.preprocess_seconds
    return rep


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated ids, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="avgregret", description="Average-regret-minimising representative sets.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="write a synthetic dataset CSV")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--d", type=int, required=True)
    gen.add_argument("--kind", choices=("uniform", "correlated", "anticorrelated"), default="uniform")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--output", help="dataset CSV path (report goes to stdout)")

    for name, text in [
        ("select", "greedy shrinking (lazy by default)"),
        ("dp2d", "exact dynamic program, 2D uniform linear utilities"),
        ("brute", "exhaustive optimum"),
        ("eval", "evaluate a given solution"),
        ("compare", "run every applicable engine on one instance"),
    ]:
        p = sub.add_parser(name, help=text)
        p.add_argument("--input", required=True, help="dataset CSV: id,x1,...,xd")
        p.add_argument("--utilities", help="user utility CSV: prob,u1,...,un")
        p.add_argument("--dist", help="uniform-linear | gmm:<file.json> | table")
        p.add_argument("--k", type=int, required=name != "eval")
        p.add_argument("--epsilon", type=float, default=0.05)
        p.add_argument("--sigma", type=float, default=0.1)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--samples", type=int, help="override the Chernoff sample size")
        p.add_argument("--no-lazy", dest="lazy", action="store_false")
        p.add_argument("--percentiles", type=_float_list, default=[50.0, 90.0, 99.0, 100.0])
        p.add_argument("--threads", type=int, default=None, help="default: all cores")
        p.add_argument("--output", help="report path (default stdout)")
        p.add_argument("--limit", type=int, default=DEFAULT_LIMIT)
        p.add_argument("--steepness", dest="with_steepness", action="store_true")
        if name == "eval":
            p.add_argument("--solution", type=_int_list, required=True, help="comma-separated point ids")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    opts = vars(args)
    opts.pop("verbose")
    if opts.get("threads") is None and opts["command"] != "gen":
        opts["threads"] = os.cpu_count() or 1
    cfg = RunConfig(**opts)
    try:
        rep = run(cfg)
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    text = rep.to_json()
    if cfg.output and cfg.command != "gen":
        rep.write(cfg.output)
    else:
        sys.stdout.write(text)
    if cfg.command == "compare":
        for row in rep.engines:
            print(f"{row['engine']:<22} arr={row['arr']:.6g} std={row['stddev']:.4g} S={row['solution']}",
                  file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
