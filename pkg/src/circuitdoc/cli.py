"""``circuitdoc`` command line.

Every subcommand prints one JSON document on stdout; prose and diagnostics go
to stderr.  Exit codes: 0 ok, 2 input, 3 generator, 4 topology, 5 optimizer
budget spent without convergence.

A ``--config`` JSON file may supply any flag (dashes become underscores, e.g.
``{"min_domain_ratio": 0.05}``) plus a ``budget`` object for ``optimize``;
flags given on the command line win.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from .errors import CircuitDocError, ConfigError, GeneratorError, InputError, NotFoundError, TopologyError
from .extract import (
    Corpus,
    Query,
    SubprocessGenerator,
    TranscriptGenerator,
    collect_by_priority,
    iro_run,
    parse_param_text,
    po_search,
)
from .layout import BlockCategory, LayoutBlock, PriorityTable, parse_layout
from .optimizer import BudgetConfig, ism_run
from .simmodels import get_model, load_model
from .store import DocumentRow, LayoutRow, ParameterRow, Store, TopologyRow, store_lock
from .topology import emit_netlist, recover_graph
from .vision import DEFAULT_MARGIN, DEFAULT_MIN_DOMAIN_RATIO, load_boxes, load_image

log = logging.getLogger("circuitdoc")

EXIT_OK, EXIT_INPUT, EXIT_GENERATOR, EXIT_TOPOLOGY, EXIT_BUDGET = 0, 2, 3, 4, 5
DEFAULT_SEED = 0
DEFAULT_DB = "circuitdoc.store"


def _emit(payload) -> None:
    sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n")


def _timestamp() -> str:
    # reproducible by default; SOURCE_DATE_EPOCH overrides
    epoch = int(os.environ.get("SOURCE_DATE_EPOCH", "0"))
    return datetime.fromtimestamp(epoch, tz=timezone.utc).isoformat()


def _read(path: str | None, what: str) -> str:
    if not path:
        raise ConfigError(f"{what} is required")
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {what} {path}: {exc.strerror}") from None


def _open_store(args) -> Store:
    return Store(args.db or DEFAULT_DB)


def _priority_table(args) -> PriorityTable:
    return PriorityTable.load(args.priority_table) if args.priority_table else PriorityTable.default()


# --------------------------------------------------------------- commands

def cmd_ingest(args) -> int:
    blocks = parse_layout(_read(args.layout, "--layout"))
    if not blocks:
        raise InputError("layout file has no blocks")
    doc_id = blocks[0].doc_id
    with store_lock(args.db or DEFAULT_DB), _open_store(args) as store:
        fresh = {f"{doc_id}:{b.block_id}" for b in blocks}
        store.put(DocumentRow(doc_id, source=str(args.layout), parsing_status="parsed", ingested_at=_timestamp()))
        for old in sorted(r.layout_id for r in store.layouts_for(doc_id)):
            if old not in fresh:
                store.delete("layouts", old)
        for b in blocks:
            store.put(LayoutRow(f"{doc_id}:{b.block_id}", doc_id, b.category.value, b.page, b.bbox,
                                b.block_id, b.section_label, b.text))
    print(f"{len(blocks)} blocks ingested for {doc_id}", file=sys.stderr)
    _emit({"doc_id": doc_id, "blocks": len(blocks)})
    return EXIT_OK


def _stored_blocks(store: Store, doc_id: str) -> list[LayoutBlock]:
    if store.get("documents", doc_id) is None:
        raise NotFoundError(f"document {doc_id!r} has not been ingested")
    rows = sorted(store.layouts_for(doc_id), key=lambda r: (r.page, r.bbox[1], r.bbox[0], r.block_id))
    return [LayoutBlock(r.block_id, doc_id, r.page, r.bbox, BlockCategory(r.category), r.text, r.section_label)
            for r in rows]


def _generator(args):
    if args.transcript:
        return TranscriptGenerator.load(args.transcript)
    if args.generator_cmd:
        return SubprocessGenerator(args.generator_cmd.split(), seed=args.seed)
    return None


def cmd_extract(args) -> int:
    if not args.doc:
        raise ConfigError("--doc is required")
    table = _priority_table(args)
    with store_lock(args.db or DEFAULT_DB), _open_store(args) as store:
        blocks = _stored_blocks(store, args.doc)
        payload: dict = {"doc_id": args.doc}
        if args.target:
            found = po_search(blocks, table, args.target)
            records = [found.record] if found.record else []
            payload["probes"] = found.probes
            if args.verbosity >= 2:
                for block_id, rank in found.visited:
                    print(f"probe {block_id} rank {rank}", file=sys.stderr)
        else:
            records = collect_by_priority(blocks, table)
        gen = _generator(args)
        if gen is not None:
            corpus = Corpus.from_pairs((b.block_id, b.text) for b in blocks if b.text)
            state = iro_run(Query(args.query), corpus, gen, args.iterations, args.k)
            known = {r.name for r in records}
            extra = [r for r in parse_param_text(state.answer, source_block="generator") if r.name not in known]
            records = records + extra
            payload["answer"] = state.answer
            if args.verbosity >= 2:
                for step in state.transcript():
                    print(json.dumps(step, ensure_ascii=False), file=sys.stderr)
        for r in records:
            store.put(ParameterRow(f"{args.doc}:{r.name}", args.doc, r.name, r.value, r.unit,
                                   r.source_block, r.angle_deg))
    payload["parameters"] = [r.to_dict() for r in records]
    print(f"{len(records)} parameters extracted", file=sys.stderr)
    _emit(payload)
    return EXIT_OK


def cmd_image2netlist(args) -> int:
    image = load_image(args.image) if args.image else None
    if image is None:
        raise ConfigError("--image is required")
    boxes = load_boxes(_read(args.boxes, "--boxes"))
    if not boxes:
        raise TopologyError("no components detected")
    rec = recover_graph(image, boxes, args.min_domain_ratio, args.margin, args.ratio_base)
    params = {}
    if args.doc:
        with _open_store(args) as store:
            params = {r.name: r.value for r in store.query_params(args.doc)}
    netlist = emit_netlist(rec.graph, params, source=Path(args.image).name)
    diagnostics = list(dict.fromkeys(rec.diagnostics + rec.graph.diagnostics + netlist.diagnostics))
    for d in diagnostics:
        print(d, file=sys.stderr)
    if args.out:
        Path(args.out).write_text(netlist.text, encoding="utf-8")
    graph = rec.graph
    if args.doc:
        topo = TopologyRow(
            f"{args.doc}:{Path(args.image).stem}", args.doc, tuple(graph.nets),
            tuple((c.refdes, c.class_label) for c in graph.components),
            tuple((c.refdes, i, n) for c in graph.components for i, n in enumerate(c.pins)),
            netlist.text,
        )
        with store_lock(args.db or DEFAULT_DB), _open_store(args) as store:
            store.put(topo)
    _emit({
        "netlist": netlist.text,
        "components": [[c.refdes, c.class_label, list(c.pins)] for c in graph.components],
        "nets": list(graph.nets),
        "diagnostics": diagnostics,
    })
    return EXIT_OK


def _budget(args, config: dict) -> BudgetConfig:
    data = dict(config.get("budget", {}))
    if args.budget_fine is not None:
        data["max_outer_iters"] = args.budget_fine
    data["seed"] = args.seed
    return BudgetConfig.from_dict(data)


def cmd_optimize(args, config: dict) -> int:
    budget = _budget(args, config)
    if not args.model:
        raise ConfigError("--model is required (built-in id or model JSON file)")
    pair = load_model(args.model) if Path(args.model).suffix == ".json" else get_model(args.model)
    design, report = ism_run(pair, budget)
    payload = {"model": pair.model_id, "design": design.as_dict(), "report": report.to_dict()}
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _emit(payload)
    if not report.converged:
        print(f"not converged after {report.fine_eval_count} fine evaluations", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


def cmd_db_export(args) -> int:
    if not args.doc:
        raise ConfigError("--doc is required")
    with _open_store(args) as store:
        data = store.export_training_view(args.doc)
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.write(data.decode("utf-8"))
    return EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--db", help=f"store file (default {DEFAULT_DB})")
    common.add_argument("--config", help="JSON file with flag defaults")
    common.add_argument("--seed", type=int, help=f"random seed (default {DEFAULT_SEED})")
    common.add_argument("--verbosity", type=int, help="0 quiet, 1 info, 2 debug (default 1)")
    common.add_argument("--out", help="also write the main result to this file")

    parser = argparse.ArgumentParser(prog="circuitdoc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="store a layout file")
    p.add_argument("--layout")

    p = sub.add_parser("extract", parents=[common], help="extract parameters from an ingested document")
    p.add_argument("--doc")
    p.add_argument("--query", default="all component values")
    p.add_argument("--target", help="glob of a single parameter to find by priority search")
    p.add_argument("--priority-table")
    p.add_argument("--transcript", help="generator transcript to replay")
    p.add_argument("--generator-cmd", help="command speaking the generator JSON contract")
    p.add_argument("--iterations", type=int, default=3)
    p.add_argument("-k", type=int, default=4)

    p = sub.add_parser("image2netlist", parents=[common], help="convert a schematic image to a netlist")
    p.add_argument("--image")
    p.add_argument("--boxes")
    p.add_argument("--doc", help="attach the topology to this stored document")
    p.add_argument("--min-domain-ratio", type=float)
    p.add_argument("--ratio-base", choices=("foreground", "image"))
    p.add_argument("--margin", type=int)

    p = sub.add_parser("optimize", parents=[common], help="space-mapping optimization of a model pair")
    p.add_argument("--model")
    p.add_argument("--budget-fine", type=int, help="maximum fine evaluations (outer iterations)")

    p = sub.add_parser("db-export", parents=[common], help="export one document's rows")
    p.add_argument("--doc")
    return parser


DEFAULTS = {
    "seed": DEFAULT_SEED,
    "verbosity": 1,
    "min_domain_ratio": DEFAULT_MIN_DOMAIN_RATIO,
    "ratio_base": "foreground",
    "margin": DEFAULT_MARGIN,
}


def _apply_config(args) -> dict:
    config: dict = {}
    if args.config:
        try:
            config = json.loads(_read(args.config, "--config"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {args.config}: {exc.msg} (line {exc.lineno})") from None
        if not isinstance(config, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = sorted(set(config) - set(vars(args)) - {"budget"})
        if unknown:
            raise ConfigError(f"config file {args.config}: unknown keys {unknown}")
    for key, value in vars(args).items():
        if value is None:
            if key in config and key != "budget":
                setattr(args, key, config[key])
            elif key in DEFAULTS:
                setattr(args, key, DEFAULTS[key])
    return config


COMMANDS = {
    "ingest": cmd_ingest,
    "extract": cmd_extract,
    "image2netlist": cmd_image2netlist,
    "db-export": cmd_db_export,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        config = _apply_config(args)
        level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbosity, logging.DEBUG)
        logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
        if args.command == "optimize":
            return cmd_optimize(args, config)
        return COMMANDS[args.command](args)
    except GeneratorError as exc:
        print(f"error: generator: {exc}", file=sys.stderr)
        return EXIT_GENERATOR
    except TopologyError as exc:
        print(f"error: topology: {exc}", file=sys.stderr)
        return EXIT_TOPOLOGY
    except CircuitDocError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
