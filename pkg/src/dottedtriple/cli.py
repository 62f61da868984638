"""Command-line front end: ``build``, ``run`` and ``sweep``.

Every output file carries the config hash (SHA-256 of the canonical config
and the contents of every input file) and the root seed.  Trial ``i`` of a
command uses child ``i`` of ``np.random.SeedSequence(seed)``, so outputs are
identical for any ``--jobs``.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .adversary import AttackSpec, load_attack
from .analysis import CSV_HEADER, evasion_report, reports_to_json
from .coloring import DOT_FILL, sample_copy_roles, sample_trap_colouring
from .errors import InputError, ResourceLimitError
from .graph_core import Graph, LocatedGraph, dot, dotted_triple, load_base_graph, three_dotted_copies
from .mbqc import MeasurementPattern, load_pattern
from .protocol import (
    HonestProver,
    Job,
    PauliAttackProver,
    repetition_driver,
    run_protocol,
    sample_secrets,
    split_seed,
    three_copies_driver,
)

EXIT_OK, EXIT_INPUT, EXIT_RESOURCE = 0, 2, 3
VARIANTS = ("dtg", "three-copies")


def _read(path: str | None) -> str:
    if path is None:
        return ""
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc


def config_hash(config: dict, files: Sequence[str | None]) -> str:
    h = hashlib.sha256(json.dumps(config, sort_keys=True).encode())
    for path in files:
        h.update(b"\0")
        h.update(_read(path).encode())
    return h.hexdigest()


def _resource(base: Graph, variant: str) -> LocatedGraph:
    if variant == "dtg":
        return dotted_triple(base)
    if variant == "three-copies":
        return three_dotted_copies(base)
    if variant == "dot":
        return dot(base)
    raise InputError(f"unknown variant {variant!r}")


def _pmap(fn: Callable, items: list, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(jobs) as pool:
        return list(pool.map(fn, items))


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def cmd_build(args) -> int:
    base = load_base_graph(args.graph)
    variant = args.variant
    res = _resource(base, variant)
    tag = {"seed": args.seed, "config_hash": config_hash({"cmd": "build", "variant": variant, "seed": args.seed}, [args.graph])}
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    colours = None
    if args.seed is not None and variant in VARIANTS:
        col = sample_trap_colouring(res, args.seed) if variant == "dtg" else sample_copy_roles(res, args.seed)
        colours = {v: DOT_FILL[c] for v, c in enumerate(col.colours)}
        tag["colouring"] = col.to_json()
    (out / f"{variant}.json").write_text(json.dumps({**tag, **res.to_json()}, indent=1, sort_keys=True) + "\n")
    comment = f"config_hash={tag['config_hash']} seed={args.seed}"
    (out / f"{variant}.dot").write_text(res.to_dot(variant.replace("-", "_"), colours=colours, comment=comment))
    print(f"{variant}: {len(res.vertices)} vertices, {len(res.edges)} edges")
    return EXIT_OK


def _load_inputs(args) -> tuple[Graph, MeasurementPattern, LocatedGraph]:
    base = load_base_graph(args.graph)
    pattern = load_pattern(args.pattern, base)
    if args.variant not in VARIANTS:
        raise InputError(f"variant must be one of {VARIANTS}")
    return base, pattern, _resource(base, args.variant)


def _single_run(task) -> tuple[dict, str]:
    resource, pattern, attack, child, extra = task
    secret_seed, prover_seed = child.spawn(2)
    secrets = sample_secrets(resource, pattern, np.random.default_rng(secret_seed))
    prover = PauliAttackProver(attack) if attack.ops else HonestProver()
    t = run_protocol(resource, pattern, secrets, prover, np.random.default_rng(prover_seed))
    return {"accept": t.accept, "output": t.output_json(), "trap_failures": list(t.trap_failures)}, t.to_jsonl(extra)


def _driver_run(task) -> tuple[list[dict], str]:
    base, pattern, attack, variant, epsilon, child, extra = task
    job = Job(base, pattern, (lambda i: PauliAttackProver(attack)) if attack.ops else None)
    driver = repetition_driver if variant == "dtg" else three_copies_driver
    res = driver(job, epsilon, child)
    rows = [
        {"sub_run": i, "accept": t.accept, "output": t.output_json(), "trap_failures": list(t.trap_failures)}
        for i, t in enumerate(res.runs)
    ]
    rows.append({"sub_run": "overall", "accept": res.accept, "output": list(res.output or []), "trap_failures": []})
    lines = "".join(t.to_jsonl({**extra, "sub_run": i}) for i, t in enumerate(res.runs))
    return rows, lines


def cmd_run(args) -> int:
    base, pattern, resource = _load_inputs(args)
    attack = load_attack(args.attack) if args.attack else AttackSpec()
    attack.check(resource)
    config = {
        "cmd": "run",
        "variant": args.variant,
        "trials": args.trials,
        "epsilon": args.epsilon,
        "seed": args.seed,
    }
    chash = config_hash(config, [args.graph, args.pattern, args.attack])
    seeds = split_seed(args.seed, args.trials)
    header = ["config_hash", "seed", "run", "sub_run", "accept", "output", "trap_failures"]
    rows, jsonl = [], []
    if args.epsilon is None:
        tasks = [(resource, pattern, attack, c, {"run": i}) for i, c in enumerate(seeds)]
        for i, (rec, lines) in enumerate(_pmap(_single_run, tasks, args.jobs)):
            rows.append([chash, args.seed, i, "", rec["accept"], json.dumps(rec["output"]), json.dumps(rec["trap_failures"])])
            jsonl.append(lines)
    else:
        tasks = [(base, pattern, attack, args.variant, args.epsilon, c, {"run": i}) for i, c in enumerate(seeds)]
        for i, (recs, lines) in enumerate(_pmap(_driver_run, tasks, args.jobs)):
            for rec in recs:
                rows.append(
                    [chash, args.seed, i, rec["sub_run"], rec["accept"], json.dumps(rec["output"]), json.dumps(rec["trap_failures"])]
                )
            jsonl.append(lines)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.csv").write_text(_csv(header, rows))
    head = json.dumps({"config_hash": chash, "seed": args.seed, "config": config}, sort_keys=True) + "\n"
    (out / "transcripts.jsonl").write_text(head + "".join(jsonl))
    overall = [r for r in rows if r[3] in ("", "overall")]
    accepted = sum(1 for r in overall if r[4])
    subs = len(rows) - len(overall)
    extra = f" ({subs} sub-runs)" if args.epsilon is not None else ""
    print(f"{accepted}/{len(overall)} accepted{extra}")
    return EXIT_OK


def _sweep_attacks(spec: str, resource: LocatedGraph) -> list[AttackSpec]:
    if spec.startswith("single-"):
        paulis = "XYZ" if spec == "single-all" else spec[len("single-") :]
        if not paulis or set(paulis) - set("XYZ"):
            raise InputError(f"bad sweep descriptor {spec!r}")
        return [AttackSpec.single(v, p) for p in paulis for v in resource.vertices]
    data = json.loads(_read(spec) or "null")
    if not isinstance(data, list):
        raise InputError("sweep file must be a JSON list of attack objects")
    return [AttackSpec.from_json(a, name=f"attack{i}") for i, a in enumerate(data)]


def _sweep_row(task):
    resource, pattern, attack, trials, child = task
    return evasion_report(resource, pattern, attack, trials, child)


def cmd_sweep(args) -> int:
    base, pattern, resource = _load_inputs(args)
    attacks = _sweep_attacks(args.sweep, resource)
    for a in attacks:
        a.check(resource)
    config = {"cmd": "sweep", "variant": args.variant, "sweep": args.sweep, "trials": args.trials, "seed": args.seed}
    sweep_file = args.sweep if not args.sweep.startswith("single-") else None
    chash = config_hash(config, [args.graph, args.pattern, sweep_file])
    seeds = split_seed(args.seed, len(attacks))
    tasks = [(resource, pattern, a, args.trials, c) for a, c in zip(attacks, seeds)]
    reports = _pmap(_sweep_row, tasks, args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = [[chash, args.seed, *r.row()] for r in reports]
    (out / "evasion.csv").write_text(_csv(["config_hash", "seed", *CSV_HEADER], rows))
    (out / "evasion.json").write_text(
        json.dumps({"config_hash": chash, "seed": args.seed, "reports": json.loads(reports_to_json(reports))}, indent=1, sort_keys=True)
        + "\n"
    )
    exact = [r.exact for r in reports if r.exact is not None and not r.harmless]
    top = max(exact) if exact else None
    print(f"{len(reports)} attacks; max exact evasion over contributing attacks {top}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dottedtriple", description="Dotted triple-graph verification toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, pattern: bool = True):
        p.add_argument("--graph", required=True, help="base graph JSON file")
        if pattern:
            p.add_argument("--pattern", required=True, help="measurement pattern JSON file")
        p.add_argument("--variant", default="dtg", choices=("dtg", "three-copies", "dot") if not pattern else VARIANTS)
        p.add_argument("--seed", type=int, default=None if not pattern else 0)
        p.add_argument("--out", default="out")

    b = sub.add_parser("build", help="construct and export a resource graph")
    common(b, pattern=False)
    b.set_defaults(func=cmd_build)

    r = sub.add_parser("run", help="run the protocol")
    common(r)
    r.add_argument("--attack", help="attack JSON file {vertex: Pauli}")
    r.add_argument("--trials", type=int, default=1)
    r.add_argument("--epsilon", type=float, default=None, help="amplify to this failure bound")
    r.add_argument("--jobs", type=int, default=1)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="evasion report for a family of attacks")
    common(s)
    s.add_argument("--sweep", required=True, help="single-X|single-Y|single-Z|single-all or a JSON list of attacks")
    s.add_argument("--trials", type=int, default=0, help="Monte-Carlo trials per attack (0: exact only)")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if getattr(args, "trials", 1) < 0:
            raise InputError("--trials must be non-negative")
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
