"""Command-line entry points: probe, catalog, run, report."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import catalog as kb
from . import probe
from .config import BackendConfig, SearchConfig, load_run_config, load_task
from .errors import WeaveError
from .orchestrator import emit_report, run_from_config
from .tree import NodeStatus, replay_journal

logger = logging.getLogger(__name__)


def _cmd_probe(args) -> int:
    inventory = probe.scan_directory(args.data_dir)
    cv = probe.extract_constraints(inventory, sample_budget=args.sample_budget)
    out = Path(args.out) if args.out else Path("constraints.json")
    probe.write_descriptor(cv, out)
    print(probe.render_descriptor(cv))
    return 0


def _cmd_catalog(args) -> int:
    cat = kb.load_catalog(args.path)
    if args.catalog_cmd == "validate":
        print(
            f"catalog {cat.version}: {len(cat.cards)} cards,"
            f" taxonomy {list(cat.taxonomy)}"
        )
        return 0
    picks = kb.select_candidates(args.goal, cat)
    for card in picks:
        print(f"[{card.category}] {card.name} (tags: {', '.join(card.suitable_tasks)})")
    return 0


def _cmd_run(args) -> int:
    task = load_task(args.task)
    run_config = load_run_config(args.config)
    if args.mock:
        run_config = replace(
            run_config, backend=BackendConfig(mode="mock", playbook=Path(args.mock))
        )
    report = run_from_config(task, run_config, args.workdir)
    if report.best_node_id is None:
        print("run finished: no candidate executed successfully")
        return 1
    print(
        f"run finished: best node {report.best_node_id}"
        f" total {report.best_reward.total:.4f}"
        f" performance {report.best_reward.performance:.4f}"
        f" over {report.iterations_used} iterations"
    )
    return 0


def _cmd_report(args) -> int:
    workdir = Path(args.workdir)
    journal_path = workdir / "tree.journal"
    if not journal_path.exists():
        print(f"no journal at {journal_path}", file=sys.stderr)
        return 2
    tree = replay_journal(journal_path)
    config_path = workdir / "run_config.json"
    config = SearchConfig()
    if config_path.exists():
        saved = json.loads(config_path.read_text(encoding="utf-8"))
        config = SearchConfig(
            iteration_budget=saved.get("iteration_budget", 200),
            parallelism=saved.get("parallelism", 3),
            tau_max=saved.get("tau_max", 300.0),
        )
    paths = emit_report(tree, config, workdir)
    for name, path in paths.items():
        print(f"{name}: {path}")
    has_success = any(n.status is NodeStatus.EXECUTED for n in tree.nodes.values())
    return 0 if has_success else 1


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="weave",
        description="Evolutionary search over EEG analysis-pipeline scripts.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_probe = sub.add_parser("probe", help="extract the data-constraint descriptor")
    p_probe.add_argument("data_dir")
    p_probe.add_argument("--sample-budget", type=int, default=probe.DEFAULT_SAMPLE_BUDGET)
    p_probe.add_argument("--out", default=None)
    p_probe.set_defaults(fn=_cmd_probe)

    p_cat = sub.add_parser("catalog", help="inspect a model-card catalog")
    cat_sub = p_cat.add_subparsers(dest="catalog_cmd", required=True)
    p_val = cat_sub.add_parser("validate")
    p_val.add_argument("path")
    p_sel = cat_sub.add_parser("select")
    p_sel.add_argument("path")
    p_sel.add_argument("--goal", required=True)
    p_cat.set_defaults(fn=_cmd_catalog)

    p_run = sub.add_parser("run", help="run the full search loop")
    p_run.add_argument("--task", required=True)
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--workdir", required=True)
    p_run.add_argument("--mock", default=None, help="playbook path (forces mock backend)")
    p_run.set_defaults(fn=_cmd_run)

    p_rep = sub.add_parser("report", help="re-emit reports from a run journal")
    p_rep.add_argument("--workdir", required=True)
    p_rep.set_defaults(fn=_cmd_report)

    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.fn(args)
    except WeaveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
