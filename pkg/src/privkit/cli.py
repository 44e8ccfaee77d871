"""Command-line entry point.

Structured JSON goes to stdout, human-readable logs to stderr. Exit codes:
0 success, 1 usage error, 2 data/validation error. Every randomized
subcommand takes an explicit ``--seed``, so identical invocations produce
byte-identical output. Output files are written to a temp file and renamed,
never left half-written.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import random
import sys
import tempfile
from typing import Callable, Mapping, Optional, Sequence

from . import anonymize as anon
from . import assoc, dpcheck, rappor, smc
from .dataset import Dataset, Schema, fixture_table1, load_csv, render_cell, write_csv
from .errors import ConfigError, DomainError, PrivkitError, UsageError

log = logging.getLogger("privkit")

OUTPUT_VERSION = 1

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems instead of exiting the process."""

    def error(self, message):
        raise UsageError(message)


def main(argv: Optional[Sequence[str]] = None) -> int:
    level = _LOG_LEVELS.get(os.environ.get("PRIVKIT_LOG", "error"), logging.ERROR)
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "threads", 1) < 1:
            raise UsageError("--threads must be >= 1")
        handler: Callable = args.handler
        result = handler(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (PrivkitError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _emit(result)
    return 0


def _emit(result: dict) -> None:
    result = {"version": OUTPUT_VERSION, **result}
    print(json.dumps(result, sort_keys=True))


def _write_atomic(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".privkit-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _load_json_arg(text: str):
    """Inline JSON, or @path to read it from a file."""
    if text.startswith("@"):
        with open(text[1:], "r", encoding="utf-8") as fh:
            text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"not valid JSON: {exc}") from exc


def _load_dataset(input_path: str, schema_path: str) -> Dataset:
    with open(schema_path, "r", encoding="utf-8") as fh:
        schema = Schema.from_json(fh.read())
    with open(input_path, "rb") as fh:
        return load_csv(fh, schema)


def _comma_names(text: str) -> list[str]:
    names = [n for n in text.split(",") if n]
    if not names:
        raise UsageError(f"expected a comma-separated name list, got {text!r}")
    return names


def _comma_ints(text: str) -> list[int]:
    try:
        return [int(n) for n in text.split(",") if n != ""]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


# --- fixtures ---------------------------------------------------------------

_TABLE2_RULES = [
    anon.GeneralizationRule("Age", anon.NumericBins(width=10, origin=0)),
    anon.GeneralizationRule("ZIP", anon.TextPrefix(keep=2)),
]


def table2_fixture() -> Dataset:
    """The medical-record fixture after suppression and generalization."""
    return anon.generalize(anon.suppress(fixture_table1(), ["Name"]), _TABLE2_RULES)


def _cmd_fixtures_export(args) -> dict:
    dataset = {"table1": fixture_table1, "table2": table2_fixture}[args.name]()
    _write_atomic(args.output, write_csv(dataset))
    written = [args.output]
    if args.schema_output:
        _write_atomic(args.schema_output, dataset.schema.to_json().encode("utf-8"))
        written.append(args.schema_output)
    return {"fixture": args.name, "records": len(dataset), "written": written}


# --- anonymize pipeline -----------------------------------------------------

_RANDOMIZED_OPS = {"add_noise", "swap_values", "rank_swap"}


def _parse_rule(obj: Mapping) -> anon.GeneralizationRule:
    strategy_name = obj.get("strategy")
    if strategy_name == "numeric_bins":
        strategy = anon.NumericBins(int(obj["width"]), int(obj.get("origin", 0)))
    elif strategy_name == "text_prefix":
        strategy = anon.TextPrefix(int(obj["keep"]))
    elif strategy_name == "suppress":
        strategy = anon.SuppressAll()
    else:
        raise ConfigError(f"unknown generalization strategy {strategy_name!r}")
    return anon.GeneralizationRule(obj["attribute"], strategy)


def _compile_step(step: Mapping, schema: Schema, stepno: int) -> Callable[[Dataset], Dataset]:
    """Validate one pipeline step against the schema and return its action."""
    op = step.get("op")
    try:
        if op in _RANDOMIZED_OPS and "seed" not in step:
            raise ConfigError(f"randomized op {op!r} requires a seed")
        if op == "suppress":
            names = list(step["attributes"])
            for n in names:
                schema.index(n)
            return lambda d: anon.suppress(d, names)
        if op == "generalize":
            rules = [_parse_rule(r) for r in step["rules"]]
            for r in rules:
                schema.index(r.attribute)
            return lambda d: anon.generalize(d, rules)
        if op == "add_noise":
            spec = anon.NoiseSpec({int(k): float(v) for k, v in step["deltas"].items()})
            name, seed = step["attribute"], int(step["seed"])
            schema.index(name)
            return lambda d: anon.add_noise(d, name, spec, random.Random(seed))
        if op == "swap_values":
            name, n_swaps, seed = step["attribute"], int(step["n_swaps"]), int(step["seed"])
            schema.index(name)
            if n_swaps < 0:
                raise ConfigError(f"step {stepno}: n_swaps must be >= 0")
            return lambda d: anon.swap_values(d, name, n_swaps, random.Random(seed))
        if op == "rank_swap":
            name, p, seed = step["attribute"], int(step["p"]), int(step["seed"])
            schema.index(name)
            if p < 1:
                raise ConfigError(f"step {stepno}: p must be >= 1")
            return lambda d: anon.rank_swap(d, name, p, random.Random(seed))
        if op == "microaggregate_univariate":
            name, k = step["attribute"], int(step["k"])
            schema.index(name)
            if k < 2:
                raise ConfigError(f"step {stepno}: k must be >= 2")
            return lambda d: anon.microaggregate_univariate(d, name, k)
        if op == "microaggregate_multivariate":
            names, k = list(step["attributes"]), int(step["k"])
            for n in names:
                schema.index(n)
            if k < 2:
                raise ConfigError(f"step {stepno}: k must be >= 2")
            return lambda d: anon.microaggregate_multivariate(d, names, k)
    except KeyError as exc:
        raise ConfigError(f"step {stepno} ({op}): missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"step {stepno} ({op}): {exc}") from exc
    raise ConfigError(f"step {stepno}: unknown op {op!r}")


def _cmd_anonymize(args) -> dict:
    config = _load_json_arg("@" + args.config)
    base = os.path.dirname(os.path.abspath(args.config))

    def resolve(p):
        return p if os.path.isabs(p) else os.path.join(base, p)

    try:
        input_path = resolve(config["input"])
        schema_path = resolve(config["schema"])
        output_path = resolve(config["output"])
        steps = config["steps"]
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"pipeline config missing field {exc}") from exc
    with open(schema_path, "r", encoding="utf-8") as fh:
        schema = Schema.from_json(fh.read())
    actions = [
        _compile_step(step, schema, i) for i, step in enumerate(steps)
    ]  # fail fast: every step validated before any runs
    dataset = _load_dataset(input_path, schema_path)
    for i, action in enumerate(actions):
        log.info("step %d: %s", i, steps[i].get("op"))
        dataset = action(dataset)
    _write_atomic(output_path, write_csv(dataset))
    return {
        "output": output_path,
        "records": len(dataset),
        "steps": [s.get("op") for s in steps],
    }


def _cmd_metrics(args) -> dict:
    dataset = _load_dataset(args.input, args.schema)
    qi = _comma_names(args.qi)
    partition = anon.equivalence_classes(dataset, qi)
    out = {
        "records": len(dataset),
        "qi": qi,
        "k": anon.k_anonymity(dataset, qi),
        "classes": [
            {"key": [render_cell(c) for c in cls.key], "size": cls.size}
            for cls in partition.classes
        ],
    }
    if args.sensitive:
        out["l"] = anon.l_diversity(dataset, qi, args.sensitive)
        out["sensitive"] = args.sensitive
    return out


# --- rappor -----------------------------------------------------------------

def _params_from_arg(text: str) -> rappor.RapporParams:
    return rappor.RapporParams.from_json(_load_json_arg(text))


def _cmd_rappor_encode(args) -> dict:
    params = _params_from_arg(args.params)
    filter = rappor.bloom_encode(args.value, params)
    return {
        "value": args.value,
        "indices": sorted(rappor.bloom_indices(args.value, params)),
        "filter_hex": rappor.Report(filter.bits).to_hex(),
        "params_digest": params.digest(),
    }


def _cmd_rappor_report(args) -> dict:
    params = _params_from_arg(args.params)
    report = rappor.make_report(
        args.value, args.secret.encode("utf-8"), params, random.Random(args.seed)
    )
    return report.envelope(params)


def _cmd_rappor_epsilon(args) -> dict:
    params = _params_from_arg(args.params)
    q_star, p_star = rappor.lemma1(params)
    out = {"q_star": q_star, "p_star": p_star, "params_digest": params.digest()}
    try:
        out["epsilon_infinity"] = rappor.epsilon_infinity(params)
    except PrivkitError:
        out["epsilon_infinity"] = None
    try:
        out["epsilon_one"] = rappor.epsilon_one(params)
    except PrivkitError:
        out["epsilon_one"] = None
    return out


def _cmd_rappor_simulate(args) -> dict:
    params = _params_from_arg(args.params)
    dist = _load_json_arg("@" + args.dist)
    if not isinstance(dist, dict):
        raise ConfigError("distribution file must map value -> share")
    counts = rappor.allocate_counts(dist, args.clients)
    reports = rappor.simulate_reports(counts, params, args.seed)
    lines = "".join(
        json.dumps(r.envelope(params), sort_keys=True) + "\n" for r in reports
    )
    _write_atomic(args.output, lines.encode("utf-8"))
    return {
        "clients": args.clients,
        "true_counts": counts,
        "output": args.output,
        "params_digest": params.digest(),
    }


def _cmd_rappor_estimate(args) -> dict:
    params = _params_from_arg(args.params)
    candidates = _load_json_arg("@" + args.candidates)
    if not isinstance(candidates, list):
        raise ConfigError("candidates file must be a JSON array of strings")
    reports = []
    with open(args.reports, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                envelope = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"reports line {lineno}: {exc}") from exc
            reports.append(rappor.Report.from_envelope(envelope, params))
    estimates = rappor.estimate_counts(reports, candidates, params)
    return {"reports": len(reports), "estimates": estimates}


# --- dpcheck ----------------------------------------------------------------

def _cmd_dpcheck(args) -> dict:
    params = _params_from_arg(args.params)
    b1 = rappor.BloomFilter.from_indices(params.k, _comma_ints(args.bits1))
    b2 = rappor.BloomFilter.from_indices(params.k, _comma_ints(args.bits2))
    if args.mode == "prr":
        d1, d2 = dpcheck.prr_distribution(b1, params), dpcheck.prr_distribution(b2, params)
    else:
        d1, d2 = dpcheck.report_distribution(b1, params), dpcheck.report_distribution(b2, params)
    try:
        if args.mode == "prr":
            closed = rappor.epsilon_infinity(params)
        else:
            closed = rappor.epsilon_one(params)
    except DomainError:
        closed = None
    exact = dpcheck.exact_epsilon(d1, d2)
    return {
        "mode": args.mode,
        "bits1": sorted(b1.set_indices),
        "bits2": sorted(b2.set_indices),
        "exact_epsilon": "infinity" if math.isinf(exact) else exact,
        "closed_form": closed,
    }


# --- smc --------------------------------------------------------------------

def _cmd_smc_demo(args) -> dict:
    votes = _comma_ints(args.votes)
    transcript = smc.secret_sum_transcript(
        votes, args.modulus, random.Random(args.seed)
    )
    return {
        "modulus": transcript.modulus,
        "votes": list(transcript.votes),
        "shares": [list(row) for row in transcript.shares],
        "aggregated": list(transcript.aggregated),
        "sum": transcript.total,
    }


# --- assoc ------------------------------------------------------------------

def _cmd_assoc_mine(args) -> dict:
    if args.input_csv:
        if not args.schema:
            raise UsageError("--input-csv requires --schema")
        dataset = _load_dataset(args.input_csv, args.schema)
        include_qi = _comma_names(args.include_qi) if args.include_qi else ()
        transactions = assoc.transactions_from_dataset(dataset, include_qi)
    else:
        raw = _load_json_arg("@" + args.input)
        if isinstance(raw, dict):
            transactions = assoc.TransactionSet.from_iterables(
                raw.get("transactions", []), raw.get("items")
            )
        elif isinstance(raw, list):
            transactions = assoc.TransactionSet.from_iterables(raw)
        else:
            raise ConfigError("transactions file must be a list or an object")
    rules = assoc.solid_rules(
        transactions,
        min_support=args.min_support,
        min_certainty=args.min_certainty,
        max_itemset=args.max_itemset,
    )
    return {
        "transactions": len(transactions),
        "rules": [
            {
                "antecedent": sorted(r.antecedent),
                "consequent": sorted(r.consequent),
                "support": r.support,
                "certainty": r.certainty,
            }
            for r in rules
        ],
    }


# --- parser -----------------------------------------------------------------

def _build_parser() -> _Parser:
    parser = _Parser(prog="privkit", description=__doc__)
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for parallelizable stages")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    fixtures = sub.add_parser("fixtures", help="bundled example data")
    fix_sub = fixtures.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    export = fix_sub.add_parser("export", help="write a fixture as CSV")
    export.add_argument("--name", choices=["table1", "table2"], required=True)
    export.add_argument("--output", required=True)
    export.add_argument("--schema-output")
    export.set_defaults(handler=_cmd_fixtures_export)

    anonymize = sub.add_parser("anonymize", help="run a transform pipeline from JSON config")
    anonymize.add_argument("--config", required=True)
    anonymize.set_defaults(handler=_cmd_anonymize)

    metrics = sub.add_parser("metrics", help="k-anonymity / l-diversity of a CSV")
    metrics.add_argument("--input", required=True)
    metrics.add_argument("--schema", required=True)
    metrics.add_argument("--qi", required=True, help="comma-separated quasi-identifiers")
    metrics.add_argument("--sensitive")
    metrics.set_defaults(handler=_cmd_metrics)

    rap = sub.add_parser("rappor", help="randomized-response reporting pipeline")
    rap_sub = rap.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    enc = rap_sub.add_parser("encode")
    enc.add_argument("--params", required=True, help='JSON {k,h,f,p,q,hash_seed} or @file')
    enc.add_argument("--value", required=True)
    enc.set_defaults(handler=_cmd_rappor_encode)
    rep = rap_sub.add_parser("report")
    rep.add_argument("--params", required=True)
    rep.add_argument("--value", required=True)
    rep.add_argument("--secret", required=True)
    rep.add_argument("--seed", type=int, required=True)
    rep.set_defaults(handler=_cmd_rappor_report)
    eps = rap_sub.add_parser("epsilon")
    eps.add_argument("--params", required=True)
    eps.set_defaults(handler=_cmd_rappor_epsilon)
    sim = rap_sub.add_parser("simulate")
    sim.add_argument("--params", required=True)
    sim.add_argument("--clients", type=int, required=True)
    sim.add_argument("--dist", required=True, help="JSON file: value -> share")
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--output", required=True)
    sim.set_defaults(handler=_cmd_rappor_simulate)
    est = rap_sub.add_parser("estimate")
    est.add_argument("--params", required=True)
    est.add_argument("--reports", required=True)
    est.add_argument("--candidates", required=True)
    est.set_defaults(handler=_cmd_rappor_estimate)

    dp = sub.add_parser("dpcheck", help="exact epsilon vs closed form")
    dp.add_argument("--params", required=True)
    dp.add_argument("--mode", choices=["prr", "report"], required=True)
    dp.add_argument("--bits1", required=True, help="set bit indices of the first filter")
    dp.add_argument("--bits2", required=True, help="set bit indices of the second filter")
    dp.set_defaults(handler=_cmd_dpcheck)

    smc_cmd = sub.add_parser("smc", help="secret-sum protocol")
    smc_sub = smc_cmd.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    demo = smc_sub.add_parser("demo")
    demo.add_argument("--votes", required=True, help="comma-separated votes")
    demo.add_argument("--modulus", type=int, default=smc.DEFAULT_MODULUS)
    demo.add_argument("--seed", type=int, required=True)
    demo.set_defaults(handler=_cmd_smc_demo)

    mine = sub.add_parser("assoc", help="association rule mining")
    mine_sub = mine.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    m = mine_sub.add_parser("mine")
    source = m.add_mutually_exclusive_group(required=True)
    source.add_argument("--input", help="JSON transactions file")
    source.add_argument("--input-csv", help="derive transactions from a dataset CSV")
    m.add_argument("--schema", help="schema JSON, required with --input-csv")
    m.add_argument("--include-qi",
                   help="quasi-identifiers to add as items alongside sensitive values")
    m.add_argument("--min-support", type=float, default=0.35)
    m.add_argument("--min-certainty", type=float, default=0.60)
    m.add_argument("--max-itemset", type=int, default=3)
    m.set_defaults(handler=_cmd_assoc_mine)

    return parser


if __name__ == "__main__":
    sys.exit(main())
