"""Closed-loop search over the solution tree.

One coordinator owns the tree and the journal; a pool of P workers runs
generate -> validate -> execute -> score jobs. Completed jobs are applied
in submission order, which makes a seeded run with a mock backend fully
deterministic (byte-identical journal) while still overlapping up to P
executions.
"""

from __future__ import annotations

import csv
import json
import logging
import os
from collections import deque
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

import numpy as np

from . import catalog as kb
from . import probe
from .config import RunConfig, SearchConfig
from .errors import (
    GenerationEmptyError,
    NoExpandableNodesError,
    NodeUnscoredError,
    ProbeFailedError,
    RootGenerationFailedError,
    WeaveError,
)
from .gateway import (
    CallLog,
    MockBackend,
    PromptContext,
    RemoteBackend,
    Role,
    TaskSpec,
    generate,
    make_novelty_judge,
)
from .reward import (
    PERFORMANCE_ONLY,
    RewardBreakdown,
    compose_reward,
    novelty_term,
)
from .sandbox import (
    ExecOptions,
    ExecStatus,
    ExecutionOutcome,
    validate_environment,
    execute,
)
from .tree import (
    LineageTrace,
    NodeStatus,
    Origin,
    SolutionNode,
    SolutionTree,
    TreeJournal,
)

logger = logging.getLogger(__name__)

MAX_REDRAFTS = 2
ROOT_ATTEMPTS = 3
MAX_CONSECUTIVE_EMPTY = 5


class Action(str, Enum):
    REFINE = "REFINE"
    DEBUG = "DEBUG"
    TERMINAL = "TERMINAL"


@dataclass(frozen=True)
class RunReport:
    best_node_id: str | None
    best_reward: RewardBreakdown | None
    best_script: str | None
    lineage: LineageTrace | None
    iterations_used: int
    failures_count: int
    tree_topology: dict
    best_so_far: tuple[tuple[int, float | None], ...]


# --- selection and routing ---------------------------------------------------


def debug_chain_length(tree: SolutionTree, node: SolutionNode) -> int:
    """Consecutive debug-origin nodes on the path suffix ending at `node`."""
    count = 0
    cursor: SolutionNode | None = node
    while cursor is not None and cursor.origin is Origin.DEBUG:
        count += 1
        cursor = tree.nodes.get(cursor.parent_id) if cursor.parent_id else None
    return count


def route_action(tree: SolutionTree, node: SolutionNode, config: SearchConfig) -> Action:
    """REFINE functional nodes, DEBUG broken ones, close exhausted chains.

    A timed-out script still ran, so it is refined (toward something
    cheaper) rather than debugged.
    """
    if node.outcome is None:
        raise NodeUnscoredError(f"node {node.id} has no execution outcome")
    status = node.outcome.status
    if status in (ExecStatus.SUCCESS, ExecStatus.TIMEOUT):
        return Action.REFINE
    if debug_chain_length(tree, node) < config.debug_retry_cap:
        return Action.DEBUG
    return Action.TERMINAL


def expandable_nodes(tree: SolutionTree, config: SearchConfig) -> list[SolutionNode]:
    nodes = [
        n
        for n in tree.nodes_in_order()
        if n.reward is not None
        and n.status in (NodeStatus.EXECUTED, NodeStatus.FAILED)
        and n.id not in tree.in_flight
        and route_action(tree, n, config) is not Action.TERMINAL
    ]
    if config.ablation.disable_moeo:
        # greedy chain: only the newest node is ever extended
        newest = tree.nodes_in_order()[-1] if tree.nodes else None
        nodes = [n for n in nodes if newest is not None and n.id == newest.id]
    return nodes


def select_expansion(
    tree: SolutionTree, config: SearchConfig, rng: np.random.Generator
) -> SolutionNode:
    """Sample the next node to expand, softmax-weighted by reward total.

    The chosen node is claimed in-flight so no other worker expands it
    concurrently.
    """
    nodes = expandable_nodes(tree, config)
    if not nodes:
        raise NoExpandableNodesError("no scored, non-terminal, free nodes")
    if config.ablation.disable_moeo or len(nodes) == 1:
        node = nodes[-1]
    else:
        totals = np.array([n.reward.total for n in nodes], dtype=float)
        z = totals / config.selection_temperature
        z -= z.max()
        p = np.exp(z)
        p /= p.sum()
        node = nodes[int(rng.choice(len(nodes), p=p))]
    tree.claim(node.id)
    return node


# --- feedback rendering -------------------------------------------------------


def _refine_feedback(node: SolutionNode, tau_max: float) -> str:
    om = node.outcome
    lines = [f"status: {om.status.value}"]
    if om.status is ExecStatus.TIMEOUT:
        lines.append(
            f"execution hit the timeout and was killed after {om.tau_s:.1f}s"
            f" (budget {tau_max:g}s); make the pipeline cheaper"
        )
    if om.metrics is not None:
        lines.append(f"primary_metric ({om.metrics.metric_name}): {om.metrics.primary_metric}")
        for name, value in om.metrics.auxiliary.items():
            lines.append(f"auxiliary {name}: {value}")
    lines.append(f"wall seconds: {om.tau_s:g}")
    if node.reward is not None:
        r = node.reward
        lines.append(
            f"reward: total={r.total:.4f} performance={r.performance:.4f}"
            f" improvement={r.improvement:.4f} novelty={r.novelty:.4f}"
            f" efficiency={r.efficiency:.4f} executable={r.debug:g}"
        )
    return "\n".join(lines)


def _debug_feedback(node: SolutionNode) -> str:
    om = node.outcome
    text = om.stderr_tail or om.stdout_tail or f"(no output; status {om.status.value})"
    return text


# --- the search loop ----------------------------------------------------------


@dataclass(frozen=True)
class _JobSpec:
    parent_id: str | None  # claimed parent (None for root/redraft)
    attach_to: str | None  # node the child hangs off (None only for the root)
    origin: Origin
    ctx: PromptContext
    parent_performance: float | None
    archive: tuple[tuple[str, str], ...]


@dataclass(frozen=True)
class _JobResult:
    script: str | None  # None when generation produced no code
    rationale: str
    outcome: ExecutionOutcome | None
    reward: RewardBreakdown | None
    error: str | None = None


class _Searcher:
    def __init__(
        self,
        task: TaskSpec,
        config: SearchConfig,
        backend,
        workdir: Path,
        exec_options: ExecOptions,
        catalog: kb.Catalog | None,
        sample_budget: int,
    ):
        self.task = task
        self.config = config
        self.backend = backend
        self.workdir = workdir
        self.exec_options = replace(
            exec_options,
            scratch_root=exec_options.scratch_root or workdir / "scratch",
        )
        self.exec_options.scratch_root.mkdir(parents=True, exist_ok=True)
        self.catalog = catalog
        self.sample_budget = sample_budget

        self.weights = (
            PERFORMANCE_ONLY if config.ablation.disable_moeo else config.weights
        )
        self.journal = TreeJournal(workdir / "tree.journal")
        self.tree = SolutionTree(self.journal)
        self.call_log = CallLog(workdir / "llm_log")
        self.rng = np.random.default_rng(config.random_seed)
        self.judge = (
            make_novelty_judge(backend, task, self.call_log)
            if self.weights.novelty > 0
            else None
        )
        self.constraints_text: str | None = None
        self.priors_text: str | None = None
        self.allow = tuple(sorted(self.exec_options.allow_list))

    # -- initialization phases

    def probe_data(self):
        try:
            inventory = probe.scan_directory(self.task.data_dir)
            cv = probe.extract_constraints(inventory, self.sample_budget)
        except WeaveError as exc:
            raise ProbeFailedError(f"probing {self.task.data_dir} failed: {exc}") from exc
        probe.write_descriptor(cv, self.workdir / "constraints.json")
        self.constraints_text = probe.render_descriptor(cv)

    def retrieve_priors(self):
        cat = self.catalog or kb.default_catalog()
        cards = kb.select_candidates(self.task.goal, cat)
        digest = kb.summarize_priors(cards, None, catalog_version=cat.version)
        self.priors_text = kb.render_digest(digest)

    # -- job construction (coordinator side, deterministic)

    def _archive_snapshot(self) -> tuple[tuple[str, str], ...]:
        return tuple((n.script, n.rationale) for n in self.tree.nodes_in_order())

    def _root_spec(self, origin: Origin = Origin.ROOT, note: str | None = None) -> _JobSpec:
        unconditioned = self.config.ablation.disable_domain_init
        ctx = PromptContext(
            role=Role.DRAFT_ROOT,
            task=self.task,
            constraints=self.constraints_text,
            priors=self.priors_text,
            allow_list=self.allow,
            note=note,
            unconditioned=unconditioned,
        )
        attach = None
        if origin is Origin.REDRAFT:
            if self.config.ablation.disable_moeo:
                attach = self.tree.nodes_in_order()[-1].id
            else:
                attach = self.tree.root_id
        return _JobSpec(
            parent_id=None,
            attach_to=attach,
            origin=origin,
            ctx=ctx,
            parent_performance=None,
            archive=self._archive_snapshot(),
        )

    def _expand_spec(self, parent: SolutionNode, action: Action) -> _JobSpec:
        if action is Action.REFINE:
            ctx = PromptContext(
                role=Role.REFINE,
                task=self.task,
                constraints=self.constraints_text,
                priors=self.priors_text,
                parent_script=parent.script,
                parent_feedback=_refine_feedback(parent, self.config.tau_max),
                allow_list=self.allow,
            )
            origin = Origin.REFINE
            parent_perf = parent.reward.performance
        else:
            ctx = PromptContext(
                role=Role.DEBUG,
                task=self.task,
                constraints=self.constraints_text,
                parent_script=parent.script,
                parent_feedback=_debug_feedback(parent),
                allow_list=self.allow,
            )
            origin = Origin.DEBUG
            parent_perf = parent.reward.performance
        return _JobSpec(
            parent_id=parent.id,
            attach_to=parent.id,
            origin=origin,
            ctx=ctx,
            parent_performance=parent_perf,
            archive=self._archive_snapshot(),
        )

    # -- worker side

    def _run_job(self, spec: _JobSpec) -> _JobResult:
        try:
            gen = generate(spec.ctx, self.backend, call_log=self.call_log)
        except GenerationEmptyError as exc:
            return _JobResult(None, "", None, None, error=str(exc))
        findings = validate_environment(
            gen.script, self.exec_options.interpreter_cmd, self.exec_options.allow_list
        )
        if findings:
            rendering = "\n".join(f.render() for f in findings)
            outcome = ExecutionOutcome(
                status=ExecStatus.VALIDATION_ERROR,
                exit_code=None,
                tau_s=0.0,
                stdout_tail="",
                stderr_tail=f"environment validation failed:\n{rendering}",
                metrics=None,
            )
        else:
            outcome = execute(
                gen.script, self.task.data_dir, self.config.tau_max, self.exec_options
            )
        novelty = novelty_term(gen.script, list(spec.archive), self.judge)
        reward = compose_reward(
            outcome.metrics,
            spec.parent_performance,
            outcome,
            novelty,
            self.weights,
            self.config.tau_max,
        )
        return _JobResult(gen.script, gen.rationale, outcome, reward)

    # -- coordinator loop

    def run(self) -> SolutionTree:
        config = self.config
        budget = config.iteration_budget

        submitted = 0
        applied_nodes = 0
        redrafts = 0
        empty_streak = 0
        best_total: float | None = None
        unimproved = 0
        converged = False
        root_failures = 0

        pending: deque[tuple[Future, _JobSpec]] = deque()

        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:

            def submit(spec: _JobSpec):
                nonlocal submitted
                pending.append((pool.submit(self._run_job, spec), spec))
                submitted += 1

            def try_submit_next() -> bool:
                """Queue one more job if state allows; False when none fits."""
                nonlocal redrafts
                if converged or submitted >= budget or len(pending) >= config.parallelism:
                    return False
                try:
                    parent = select_expansion(self.tree, config, self.rng)
                except NoExpandableNodesError:
                    if pending:
                        return False  # running jobs may free new parents
                    if len(self.tree) > 0 and redrafts < MAX_REDRAFTS:
                        redrafts += 1
                        submit(
                            self._root_spec(
                                origin=Origin.REDRAFT,
                                note=(
                                    "all earlier candidate lineages ended in"
                                    " failure; take a different approach"
                                ),
                            )
                        )
                        return True
                    return False
                action = route_action(self.tree, parent, config)
                submit(self._expand_spec(parent, action))
                return True

            submit(self._root_spec())

            while True:
                while try_submit_next():
                    pass
                if not pending:
                    break
                future, spec = pending.popleft()
                result = future.result()

                if spec.parent_id is not None:
                    self.tree.release(spec.parent_id)

                if result.script is None:
                    # generation produced no code: no node, maybe retry roots
                    empty_streak += 1
                    if spec.origin is Origin.ROOT:
                        root_failures += 1
                        if root_failures >= ROOT_ATTEMPTS:
                            raise RootGenerationFailedError(
                                f"root generation failed {ROOT_ATTEMPTS} times:"
                                f" {result.error}"
                            )
                        submit(self._root_spec())
                    elif empty_streak >= MAX_CONSECUTIVE_EMPTY:
                        logger.warning(
                            "%d consecutive empty generations; converging",
                            empty_streak,
                        )
                        converged = True
                    continue

                empty_streak = 0
                node = SolutionNode(
                    id=f"n{applied_nodes:04d}",
                    parent_id=spec.attach_to,
                    script=result.script,
                    rationale=result.rationale,
                    status=(
                        NodeStatus.EXECUTED
                        if result.outcome.status is ExecStatus.SUCCESS
                        else NodeStatus.FAILED
                    ),
                    outcome=result.outcome,
                    reward=result.reward,
                    origin=spec.origin,
                )
                self.tree.insert_node(node)
                applied_nodes += 1

                if node.status is NodeStatus.EXECUTED:
                    total = node.reward.total
                    if best_total is None or total > best_total:
                        best_total = total
                        unimproved = 0
                    else:
                        unimproved += 1
                else:
                    unimproved += 1
                if unimproved >= config.patience:
                    converged = True

        return self.tree


def run_search(
    task: TaskSpec,
    config: SearchConfig,
    backend,
    catalog: kb.Catalog | None = None,
    workdir: str | os.PathLike = "weave-run",
    exec_options: ExecOptions = ExecOptions(),
    sample_budget: int = probe.DEFAULT_SAMPLE_BUDGET,
) -> RunReport:
    """Run the full loop and emit the report into `workdir`.

    Probing and prior retrieval are skipped when the domain-initialization
    ablation is set; the root prompt is then unconditioned.
    """
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    (workdir / "run_config.json").write_text(
        json.dumps(
            {
                "iteration_budget": config.iteration_budget,
                "parallelism": config.parallelism,
                "tau_max": config.tau_max,
                "weights": config.weights.as_tuple(),
                "selection_temperature": config.selection_temperature,
                "debug_retry_cap": config.debug_retry_cap,
                "patience": config.patience,
                "random_seed": config.random_seed,
                "ablation": {
                    "disable_domain_init": config.ablation.disable_domain_init,
                    "disable_moeo": config.ablation.disable_moeo,
                },
            },
            indent=2,
        ),
        encoding="utf-8",
    )
    searcher = _Searcher(
        task, config, backend, workdir, exec_options, catalog, sample_budget
    )
    if not config.ablation.disable_domain_init:
        searcher.probe_data()
        searcher.retrieve_priors()
    try:
        tree = searcher.run()
    finally:
        searcher.journal.close()
    report = build_report(tree)
    emit_report(tree, config, workdir, task=task)
    return report


def build_report(tree: SolutionTree) -> RunReport:
    series = tuple(
        (i + 1, total) for i, total in enumerate(tree.best_so_far_series())
    )
    failures = sum(1 for n in tree.nodes.values() if n.status is NodeStatus.FAILED)
    try:
        best = tree.best_node()
    except WeaveError:
        best = None
    return RunReport(
        best_node_id=best.id if best else None,
        best_reward=best.reward if best else None,
        best_script=best.script if best else None,
        lineage=tree.lineage(best.id) if best else None,
        iterations_used=len(tree),
        failures_count=failures,
        tree_topology=tree.topology(),
        best_so_far=series,
    )


def emit_report(
    tree: SolutionTree,
    config: SearchConfig,
    out_dir: str | os.PathLike,
    task: TaskSpec | None = None,
) -> dict[str, Path]:
    """Write report.md, topology.json, best_solution.py and trajectory.csv."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = build_report(tree)
    paths: dict[str, Path] = {}

    topology_path = out_dir / "topology.json"
    topology_path.write_text(json.dumps(report.tree_topology, indent=2), encoding="utf-8")
    paths["topology"] = topology_path

    trajectory_path = out_dir / "trajectory.csv"
    with open(trajectory_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "best_so_far"])
        for iteration, total in report.best_so_far:
            writer.writerow([iteration, "" if total is None else f"{total:.6f}"])
    paths["trajectory"] = trajectory_path

    if report.best_script is not None:
        best_path = out_dir / "best_solution.py"
        best_path.write_text(report.best_script, encoding="utf-8")
        paths["best_solution"] = best_path

    lines = ["# Search report", ""]
    if task is not None:
        lines += [f"- goal: {task.goal}", f"- evaluation: {task.evaluation_criteria}",
                  f"- data: {task.data_dir}", ""]
    lines += [
        f"- iterations used: {report.iterations_used}",
        f"- failed candidates: {report.failures_count}",
        f"- budget: {config.iteration_budget}, parallelism: {config.parallelism},"
        f" tau_max: {config.tau_max:g}s",
        "",
    ]
    constraints_path = out_dir / "constraints.json"
    if constraints_path.exists():
        lines += ["## Data constraints", "```json",
                  constraints_path.read_text(encoding="utf-8").rstrip(), "```", ""]
    if report.best_node_id is not None:
        r = report.best_reward
        lines += [
            "## Best pipeline",
            f"- node: {report.best_node_id}",
            f"- reward total: {r.total:.4f} (performance {r.performance:.4f},"
            f" improvement {r.improvement:.4f}, novelty {r.novelty:.4f},"
            f" efficiency {r.efficiency:.4f}, executable {r.debug:g})",
            "- script: best_solution.py",
            "",
        ]
        lineage = report.lineage
    elif tree.nodes:
        lines += ["## Best pipeline", "- no candidate executed successfully", ""]
        deepest = max(tree.nodes.values(), key=lambda n: (n.depth, -n.created_at))
        lineage = tree.lineage(deepest.id)
    else:
        lines += ["## Best pipeline", "- the tree is empty", ""]
        lineage = None

    if lineage is not None:
        lines += ["## Lineage", "",
                  "| step | node | origin | status | performance | total |",
                  "|---|---|---|---|---|---|"]
        for step, node_id in enumerate(lineage.node_ids):
            node = tree.nodes[node_id]
            perf = f"{node.reward.performance:.4f}" if node.reward else "-"
            total = f"{node.reward.total:.4f}" if node.reward else "-"
            lines.append(
                f"| {step} | {node_id} | {node.origin.value} | {node.status.value}"
                f" | {perf} | {total} |"
            )
        lines.append("")

    report_path = out_dir / "report.md"
    report_path.write_text("\n".join(lines), encoding="utf-8")
    paths["report"] = report_path
    return paths


def run_from_config(
    task: TaskSpec, run_config: RunConfig, workdir: str | os.PathLike,
    backend=None,
) -> RunReport:
    """Convenience wrapper resolving backend and catalog from a RunConfig."""
    if backend is None:
        if run_config.backend.mode == "mock":
            if run_config.backend.playbook is None:
                raise WeaveError("mock backend requires a playbook path")
            backend = MockBackend.from_file(run_config.backend.playbook)
        elif run_config.backend.mode == "remote":
            if not run_config.backend.endpoint or not run_config.backend.model:
                raise WeaveError("remote backend requires endpoint and model")
            backend = RemoteBackend(run_config.backend.endpoint, run_config.backend.model)
        else:
            raise WeaveError(f"unknown backend mode {run_config.backend.mode!r}")
    catalog = (
        kb.load_catalog(run_config.catalog_path) if run_config.catalog_path else None
    )
    return run_search(
        task,
        run_config.search,
        backend,
        catalog=catalog,
        workdir=workdir,
        exec_options=run_config.exec_options,
        sample_budget=run_config.sample_budget,
    )
