"""Batch command-line entry point: ``elimq {gen,train,solve,bench}``.

Exit codes: 0 success, 2 usage or input error, 3 numeric failure.
Log level comes from the ``ELIMQ_LOG`` environment variable.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .driver import FamilySpec, generate_named_corpus, run_solver, scheduling_dag, summary_csv
from .errors import EmptyCorpus, InputError, NumericError
from .ordering import ORDERING_ACTIONS, adaptive_order, greedy_order
from .pivoting import PIVOT_ACTIONS, factorize
from .qlearning import DOMAINS, Policy, TabularMDP, TrainConfig, load_qtable, save_qtable, train_offline
from .scheduling import SCHEDULER_ACTIONS, MachineModel, RewardWeights, simulate
from .sparse import read_matrix_market, write_matrix_market

log = logging.getLogger("elimq")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
FIXED_ACTIONS = {"ordering": ORDERING_ACTIONS, "pivoting": PIVOT_ACTIONS, "scheduling": SCHEDULER_ACTIONS}


class UsageError(InputError):
    pass


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment. Keys use flag names."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.lstrip("-").replace("-", "_")] = value
    return out


def _family_specs(tokens: list[str]) -> list[FamilySpec]:
    """Accept ``path:5`` as well as ``path 5`` / ``grid2d 3 3`` / ``random 10 0.3``."""
    groups: list[list[str]] = []
    for tok in tokens:
        if ":" in tok or not groups or not _is_number(tok):
            groups.append([tok])
        else:
            groups[-1].append(tok)
    specs = []
    for g in groups:
        if len(g) == 1:
            specs.append(FamilySpec.parse(g[0]))
        elif g[0].lower() == "grid2d":
            specs.append(FamilySpec.parse(f"grid2d:{g[1]}x{g[2] if len(g) > 2 else g[1]}"))
        else:
            specs.append(FamilySpec.parse(":".join(g)))
    return specs


def _is_number(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


def _machine(args) -> MachineModel:
    speeds = [float(s) for s in args.workers.split(",")]
    return MachineModel.from_speeds(speeds, float(args.comm))


def _weights(args) -> RewardWeights:
    return RewardWeights.parse(args.weights)


def _write(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n") as fh:
            fh.write(text)


def load_corpus(path) -> list[tuple[str, object]]:
    """Matrix Market files of a directory (sorted by name) or a single file."""
    p = Path(path)
    if not p.exists():
        raise UsageError(f"corpus path {path} does not exist")
    files = sorted(p.glob("*.mtx")) if p.is_dir() else [p]
    return [(f.stem, read_matrix_market(f)) for f in files]


def _read_policy(path) -> Policy:
    with open(path) as fh:
        table = load_qtable(fh.read())
    return Policy(table)


# -- commands -----------------------------------------------------------------

def cmd_gen(args) -> int:
    specs = _family_specs(args.specs)
    corpus = generate_named_corpus(specs, args.seed, dominant=not args.no_dominant)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"seed": args.seed, "specs": [s.name for s in specs], "files": []}
    for name, m in corpus:
        fname = f"{name}.mtx"
        write_matrix_market(out / fname, m, comment=f"elimq gen seed={args.seed} {name}")
        manifest["files"].append({"file": fname, "name": name, "n": m.n, "nnz": m.nnz})
    _write(str(out / "manifest.json"), json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    log.info("wrote %d matrices to %s", len(corpus), out)
    return EXIT_OK


def _toy_sources(path) -> list[TabularMDP]:
    with open(path) as fh:
        doc = json.load(fh)
    docs = doc if isinstance(doc, list) else [doc]
    return [TabularMDP.from_dict(d) for d in docs]


def cmd_train(args) -> int:
    if not Path(args.corpus).exists():
        raise UsageError(f"corpus path {args.corpus} does not exist")
    cfg = TrainConfig(alpha=args.alpha, gamma=args.gamma, epsilon_start=args.epsilon_start,
                      epsilon_end=args.epsilon_end, episodes=args.episodes, seed=args.seed)
    if args.jobs > 1:
        log.info("training runs sequentially; --jobs ignored")
    curve: list = []
    if args.domain == "toy":
        sources = _toy_sources(args.corpus)
        table = train_offline(sources, sources[0].domain if sources else "toy", cfg, curve=curve)
    else:
        corpus = [m for _, m in load_corpus(args.corpus)]
        if not corpus:
            raise EmptyCorpus(f"no matrices found in {args.corpus}")
        kw = {}
        if args.domain == "scheduling":
            kw = {"machine": _machine(args), "weights": _weights(args)}
        actions = args.actions.split(",") if args.actions else None
        table = train_offline(corpus, args.domain, cfg, actions=actions, curve=curve, **kw)
    out = args.qtable or f"qtable-{args.domain}.json"
    _write(out, save_qtable(table))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["episode", "return", "epsilon"])
    for ep, ret, eps in curve:
        w.writerow([ep, repr(float(ret)), repr(float(eps))])
    curve_path = args.curve or str(Path(out).with_suffix(".curve.csv"))
    _write(curve_path, buf.getvalue())
    return EXIT_OK


def _phase_strategies(args) -> dict:
    strategies = {"ordering": args.order, "pivoting": args.pivot, "scheduling": args.sched}
    for path in args.qtable or []:
        pol = _read_policy(path)
        if pol.domain not in strategies:
            raise UsageError(f"q-table {path} has unsupported domain {pol.domain!r}")
        strategies[pol.domain] = pol
    for dom, s in strategies.items():
        if isinstance(s, str) and s not in FIXED_ACTIONS[dom]:
            raise UsageError(f"unknown {dom} action {s!r}; choose from {FIXED_ACTIONS[dom]}")
    return strategies


def _rhs(spec: str, a: np.ndarray) -> np.ndarray:
    if spec == "A1":
        return a @ np.ones(a.shape[0])
    if spec == "ones":
        return np.ones(a.shape[0])
    return np.loadtxt(spec, ndmin=1)


def cmd_solve(args) -> int:
    path = Path(args.matrix)
    if not path.exists():
        raise UsageError(f"matrix file {path} does not exist")
    m = read_matrix_market(path)
    s = _phase_strategies(args)
    run = run_solver(m, s["ordering"], s["pivoting"], s["scheduling"], weights=_weights(args),
                     b=_rhs(args.b, m.toarray()), machine=_machine(args), input_id=path.stem)
    report = run.to_dict()
    report["seed"] = args.seed
    _write(args.out, json.dumps(report, indent=1, sort_keys=True) + "\n")
    if args.csv:
        _write(args.csv, summary_csv([run]))
    return EXIT_OK


def _bench_one(job) -> list:
    name, m, domain, strategies, machine = job
    row = [name, m.n, m.nnz]
    for _, strat in strategies:
        if domain == "ordering":
            res = greedy_order(m.pattern, strat) if isinstance(strat, str) else adaptive_order(m.pattern, strat)
            row.append(res.total_fill)
        elif domain == "pivoting":
            row.append(factorize(m, strat).rho)
        else:
            row.append(simulate(scheduling_dag(m), machine, strat).metrics.makespan)
    return row


def cmd_bench(args) -> int:
    corpus = load_corpus(args.corpus)
    if not corpus:
        raise EmptyCorpus(f"no matrices found in {args.corpus}")
    strategies: list[tuple[str, object]] = []
    for s in (args.strategies.split(",") if args.strategies else []):
        if s not in FIXED_ACTIONS[args.domain]:
            raise UsageError(f"unknown {args.domain} action {s!r}")
        strategies.append((s, s))
    for path in args.qtable or []:
        pol = _read_policy(path)
        if pol.domain != args.domain:
            raise UsageError(f"q-table {path} is for {pol.domain!r}, not {args.domain!r}")
        strategies.append((f"learned:{Path(path).stem}", pol))
    if not strategies:
        raise UsageError("no strategies given")
    machine = _machine(args)
    jobs = [(name, m, args.domain, strategies, machine) for name, m in corpus]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            rows = list(ex.map(_bench_one, jobs))
    else:
        rows = [_bench_one(j) for j in jobs]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["matrix", "n", "nnz", *(name for name, _ in strategies)])
    for r in rows:
        w.writerow(r)
    means = [repr(float(np.mean([r[3 + i] for r in rows]))) for i in range(len(strategies))]
    w.writerow(["mean", "", "", *means])
    _write(args.out, buf.getvalue())
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value file; flags override it")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output path (default: stdout or per-command default)")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers across corpus members")


def _machine_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--workers", default="1,1", help="comma-separated worker speeds")
    p.add_argument("--comm", type=float, default=0.0, help="per-edge cross-worker delay")
    p.add_argument("--weights", default="1,0,0,0", help="reward weights a,b,g,d")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="elimq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic Matrix Market corpus")
    _common(g)
    g.add_argument("specs", nargs="+", help="family specs, e.g. 'path 5', grid2d:3x3, random:10:0.3")
    g.add_argument("--no-dominant", action="store_true", help="do not force diagonal dominance")
    g.set_defaults(func=cmd_gen, out="corpus")

    t = sub.add_parser("train", help="offline Q-learning over a corpus")
    _common(t)
    _machine_flags(t)
    t.add_argument("--domain", choices=[*DOMAINS, "toy"], required=True)
    t.add_argument("--corpus", required=True, help="directory of .mtx files (toy: MDP JSON file)")
    t.add_argument("--episodes", type=int, default=1000)
    t.add_argument("--alpha", type=float, default=0.1)
    t.add_argument("--gamma", type=float, default=None)
    t.add_argument("--epsilon-start", type=float, default=0.3)
    t.add_argument("--epsilon-end", type=float, default=0.0)
    t.add_argument("--actions", help="restrict the action set, comma-separated")
    t.add_argument("--qtable", help="output q-table path")
    t.add_argument("--curve", help="training-curve CSV path")
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("solve", help="order, factorize, schedule and solve one matrix")
    _common(s)
    _machine_flags(s)
    s.add_argument("matrix")
    s.add_argument("--order", default="MD")
    s.add_argument("--pivot", default="PP")
    s.add_argument("--sched", default="TIME")
    s.add_argument("--qtable", action="append", help="learned policy; overrides the fixed action of its domain")
    s.add_argument("--b", default="A1", help="'A1' (A @ ones), 'ones', or a text file")
    s.add_argument("--csv", help="also write a one-row CSV summary")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="compare strategies across a corpus (CSV)")
    _common(b)
    _machine_flags(b)
    b.add_argument("--corpus", required=True)
    b.add_argument("--domain", choices=DOMAINS, default="ordering")
    b.add_argument("--strategies", default="", help="fixed actions, comma-separated")
    b.add_argument("--qtable", action="append", help="learned policy to include")
    b.set_defaults(func=cmd_bench)
    parser.subcommands = {"gen": g, "train": t, "solve": s, "bench": b}
    return parser


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            conf = read_config(args.config)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        sub = parser.subcommands[args.command]
        known = {a.dest: a for a in sub._actions}
        unknown = set(conf) - set(known)
        if unknown:
            raise UsageError(f"unknown config keys {sorted(unknown)}")
        typed = {}
        for key, value in conf.items():
            act = known[key]
            if isinstance(act, argparse._StoreTrueAction):
                typed[key] = value.lower() in ("1", "true", "yes", "on")
            else:
                typed[key] = act.type(value) if act.type else value
        sub.set_defaults(**typed)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    level = os.environ.get("ELIMQ_LOG", "WARNING").upper()
    if not isinstance(logging.getLevelName(level), int):
        level = "WARNING"
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT
    except NumericError as exc:
        print(f"elimq: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, OSError, ValueError) as exc:
        print(f"elimq: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
