from __future__ import annotations

import json

import numpy as np
import pytest

from weave.config import AblationFlags, SearchConfig
from weave.errors import (
    BackendUnreachableError,
    NoExpandableNodesError,
    NodeUnscoredError,
    ProbeFailedError,
    RootGenerationFailedError,
    TransportError,
)
from weave.gateway import MockBackend, TaskSpec
from weave.orchestrator import (
    Action,
    debug_chain_length,
    emit_report,
    route_action,
    run_search,
    select_expansion,
)
from weave.reward import RewardBreakdown
from weave.sandbox import ExecOptions, ExecStatus, ExecutionOutcome, MetricReport
from weave.tree import NodeStatus, Origin, SolutionNode, SolutionTree, replay_journal

from helpers import (
    BROKEN_SCRIPT,
    fenced,
    metrics_script,
    ridge_playbook,
)


def reward(total):
    return RewardBreakdown(total, 0.0, 1.0, 1.0, 1.0, total)


def outcome(status, tau=0.1):
    metrics = (
        MetricReport(primary_metric=0.5, metric_name="acc")
        if status is ExecStatus.SUCCESS
        else None
    )
    return ExecutionOutcome(status=status, exit_code=0, tau_s=tau, metrics=metrics)


def scored_node(nid, parent=None, status=ExecStatus.SUCCESS, total=0.5,
                origin=Origin.REFINE):
    return SolutionNode(
        id=nid,
        parent_id=parent,
        script=f"s {nid}",
        rationale="r",
        status=NodeStatus.EXECUTED if status is ExecStatus.SUCCESS else NodeStatus.FAILED,
        outcome=outcome(status),
        reward=reward(total),
        origin=Origin.ROOT if parent is None else origin,
    )


@pytest.fixture()
def task(sine_data_dir):
    return TaskSpec(
        goal="classify synthetic rhythms",
        evaluation_criteria="ridge_peak score in [0,1]",
        data_dir=sine_data_dir,
    )


def fast_exec(tmp_path) -> ExecOptions:
    return ExecOptions(scratch_root=tmp_path / "scratch", timing_mode="reported")


# --- routing -----------------------------------------------------------------------


def test_route_success_refines():
    tree = SolutionTree()
    tree.insert_node(scored_node("a"))
    assert route_action(tree, tree.nodes["a"], SearchConfig()) is Action.REFINE


def test_route_timeout_refines():
    tree = SolutionTree()
    tree.insert_node(scored_node("a", status=ExecStatus.TIMEOUT))
    assert route_action(tree, tree.nodes["a"], SearchConfig()) is Action.REFINE


def test_route_failure_debugs_until_cap():
    tree = SolutionTree()
    tree.insert_node(scored_node("a", status=ExecStatus.RUNTIME_ERROR))
    config = SearchConfig(debug_retry_cap=3)
    assert route_action(tree, tree.nodes["a"], config) is Action.DEBUG
    # build a chain of debug children, all failing
    parent = "a"
    for i, nid in enumerate(["d1", "d2", "d3"]):
        tree.insert_node(
            scored_node(nid, parent=parent, status=ExecStatus.RUNTIME_ERROR,
                        origin=Origin.DEBUG)
        )
        parent = nid
    assert debug_chain_length(tree, tree.nodes["d3"]) == 3
    assert route_action(tree, tree.nodes["d2"], config) is Action.DEBUG
    assert route_action(tree, tree.nodes["d3"], config) is Action.TERMINAL


def test_route_unscored_raises():
    tree = SolutionTree()
    drafted = SolutionNode(
        id="a", parent_id=None, script="s", rationale="r",
        status=NodeStatus.DRAFTED, origin=Origin.ROOT,
    )
    tree.insert_node(drafted)
    with pytest.raises(NodeUnscoredError):
        route_action(tree, tree.nodes["a"], SearchConfig())


def test_debug_chain_resets_after_success():
    tree = SolutionTree()
    tree.insert_node(scored_node("a", status=ExecStatus.RUNTIME_ERROR))
    tree.insert_node(scored_node("d1", parent="a", origin=Origin.DEBUG))  # fixed it
    tree.insert_node(
        scored_node("r1", parent="d1", status=ExecStatus.RUNTIME_ERROR,
                    origin=Origin.REFINE)
    )
    assert debug_chain_length(tree, tree.nodes["r1"]) == 0
    assert route_action(tree, tree.nodes["r1"], SearchConfig()) is Action.DEBUG


# --- selection ---------------------------------------------------------------------


def test_single_node_selected_with_probability_one():
    tree = SolutionTree()
    tree.insert_node(scored_node("a"))
    rng = np.random.default_rng(0)
    node = select_expansion(tree, SearchConfig(), rng)
    assert node.id == "a"
    assert "a" in tree.in_flight


def test_in_flight_nodes_not_selectable():
    tree = SolutionTree()
    tree.insert_node(scored_node("a"))
    rng = np.random.default_rng(0)
    select_expansion(tree, SearchConfig(), rng)
    with pytest.raises(NoExpandableNodesError):
        select_expansion(tree, SearchConfig(), rng)


def test_softmax_frequencies_match_closed_form():
    config = SearchConfig(selection_temperature=0.25)
    tree = SolutionTree()
    tree.insert_node(scored_node("hi", total=1.0))
    tree.insert_node(scored_node("lo", parent="hi", total=0.0))
    rng = np.random.default_rng(1234)
    wins = 0
    n = 10000
    for _ in range(n):
        node = select_expansion(tree, config, rng)
        wins += node.id == "hi"
        tree.release(node.id)
    expected = np.exp(4) / (np.exp(4) + 1)  # e^4/(e^4+1) ~ 0.982
    assert wins / n == pytest.approx(expected, abs=0.01)


def test_huge_temperature_is_uniform():
    config = SearchConfig(selection_temperature=1e6)
    tree = SolutionTree()
    tree.insert_node(scored_node("a", total=1.0))
    tree.insert_node(scored_node("b", parent="a", total=0.0))
    tree.insert_node(scored_node("c", parent="a", total=0.5))
    rng = np.random.default_rng(99)
    counts = {"a": 0, "b": 0, "c": 0}
    n = 10000
    for _ in range(n):
        node = select_expansion(tree, config, rng)
        counts[node.id] += 1
        tree.release(node.id)
    for nid in counts:
        assert counts[nid] / n == pytest.approx(1 / 3, abs=0.02)


# --- full runs ----------------------------------------------------------------------


def test_refinement_improves_over_root(task, tmp_path):
    backend = MockBackend(ridge_playbook())
    config = SearchConfig(iteration_budget=10, parallelism=2, tau_max=5.0,
                          random_seed=3, patience=50)
    report = run_search(task, config, backend, workdir=tmp_path / "run",
                        exec_options=fast_exec(tmp_path))
    assert report.best_reward.performance >= 0.8  # root scores 0.4
    assert report.iterations_used <= 10
    # the refine response must outperform the root quickly
    series = [t for _, t in report.best_so_far if t is not None]
    assert series[0] < series[-1]


def test_fixed_score_playbook_beats_root_within_three_iterations(task, tmp_path):
    # root scores 0.5, every refinement scores 0.8
    playbook = [
        {"role": "DRAFT_ROOT", "pattern": ".*",
         "response": fenced(metrics_script(0.3, h_star=0.8))},   # 1-|0.3-0.8|=0.5
        {"role": "REFINE", "pattern": ".*",
         "response": fenced(metrics_script(0.6, h_star=0.8))},   # 1-|0.6-0.8|=0.8
    ]
    config = SearchConfig(iteration_budget=10, parallelism=1, tau_max=5.0,
                          random_seed=0, patience=50)
    report = run_search(task, config, MockBackend(playbook),
                        workdir=tmp_path / "run", exec_options=fast_exec(tmp_path))
    tree = replay_journal(tmp_path / "run" / "tree.journal")
    first_three = tree.nodes_in_order()[:3]
    assert any(
        n.reward is not None and n.reward.performance >= 0.8 - 1e-9
        for n in first_three
    )
    assert report.best_reward.performance >= 0.8 - 1e-9


def test_timeout_feedback_mentions_timeout():
    from weave.orchestrator import _refine_feedback

    tree = SolutionTree()
    tree.insert_node(scored_node("t", status=ExecStatus.TIMEOUT))
    text = _refine_feedback(tree.nodes["t"], tau_max=5.0)
    assert "timeout" in text.lower()


def test_budget_one_is_root_only(task, tmp_path):
    backend = MockBackend(ridge_playbook())
    config = SearchConfig(iteration_budget=1, parallelism=3, tau_max=5.0, random_seed=0)
    report = run_search(task, config, backend, workdir=tmp_path / "run",
                        exec_options=fast_exec(tmp_path))
    assert report.iterations_used == 1
    assert len(report.lineage.node_ids) == 1


def test_debug_rescues_broken_root(task, tmp_path):
    playbook = [
        {"role": "DRAFT_ROOT", "pattern": ".*", "response": fenced(BROKEN_SCRIPT)},
        {"role": "DEBUG", "pattern": ".*", "response": fenced(metrics_script(0.6))},
    ]
    backend = MockBackend(playbook)
    config = SearchConfig(iteration_budget=4, parallelism=1, tau_max=5.0,
                          random_seed=0, patience=10)
    report = run_search(task, config, backend, workdir=tmp_path / "run",
                        exec_options=fast_exec(tmp_path))
    tree = replay_journal(tmp_path / "run" / "tree.journal")
    root = tree.nodes[tree.root_id]
    assert root.status is NodeStatus.FAILED
    assert root.outcome.status is ExecStatus.VALIDATION_ERROR
    debug_children = [n for n in tree.nodes.values() if n.origin is Origin.DEBUG]
    assert debug_children
    assert any(n.status is NodeStatus.EXECUTED for n in debug_children)
    assert report.best_node_id is not None


def test_always_broken_debug_terminates_chain(task, tmp_path):
    playbook = [
        {"role": "DRAFT_ROOT", "pattern": ".*", "response": fenced(BROKEN_SCRIPT)},
        {"role": "DEBUG", "pattern": ".*", "response": fenced(BROKEN_SCRIPT)},
    ]
    backend = MockBackend(playbook)
    config = SearchConfig(iteration_budget=12, parallelism=1, tau_max=5.0,
                          random_seed=0, debug_retry_cap=3, patience=30)
    report = run_search(task, config, backend, workdir=tmp_path / "run",
                        exec_options=fast_exec(tmp_path))
    tree = replay_journal(tmp_path / "run" / "tree.journal")
    assert report.best_node_id is None
    # no path may carry more than debug_retry_cap consecutive debug nodes
    assert max(debug_chain_length(tree, n) for n in tree.nodes.values()) == 3
    # the report still exists
    assert (tmp_path / "run" / "report.md").exists()
    assert (tmp_path / "run" / "trajectory.csv").exists()


def test_journal_byte_identical_across_runs(task, tmp_path):
    config = SearchConfig(iteration_budget=8, parallelism=3, tau_max=5.0,
                          random_seed=7, patience=50)
    journals = []
    for k in range(2):
        backend = MockBackend(ridge_playbook())
        run_search(task, config, backend, workdir=tmp_path / f"run{k}",
                   exec_options=fast_exec(tmp_path))
        journals.append((tmp_path / f"run{k}" / "tree.journal").read_bytes())
    assert journals[0] == journals[1]


def test_replayed_tree_matches_emitted_topology(task, tmp_path):
    backend = MockBackend(ridge_playbook())
    config = SearchConfig(iteration_budget=6, parallelism=2, tau_max=5.0,
                          random_seed=5, patience=50)
    run_search(task, config, backend, workdir=tmp_path / "run",
               exec_options=fast_exec(tmp_path))
    tree = replay_journal(tmp_path / "run" / "tree.journal")
    topo = json.loads((tmp_path / "run" / "topology.json").read_text())
    assert len(topo["nodes"]) == len(tree)


def test_disable_moeo_builds_pure_chain(task, tmp_path):
    backend = MockBackend(ridge_playbook())
    config = SearchConfig(
        iteration_budget=6, parallelism=3, tau_max=5.0, random_seed=1, patience=50,
        ablation=AblationFlags(disable_moeo=True),
    )
    run_search(task, config, backend, workdir=tmp_path / "run",
               exec_options=fast_exec(tmp_path))
    tree = replay_journal(tmp_path / "run" / "tree.journal")
    child_counts = {}
    for n in tree.nodes.values():
        if n.parent_id is not None:
            child_counts[n.parent_id] = child_counts.get(n.parent_id, 0) + 1
    assert all(c <= 1 for c in child_counts.values())
    # performance-only weights: totals equal the metric
    for n in tree.nodes.values():
        if n.status is NodeStatus.EXECUTED:
            assert n.reward.total == pytest.approx(n.reward.performance)


def test_disable_domain_init_unconditions_root(task, tmp_path):
    backend = MockBackend(ridge_playbook())
    config = SearchConfig(
        iteration_budget=2, parallelism=1, tau_max=5.0, random_seed=0, patience=50,
        ablation=AblationFlags(disable_domain_init=True),
    )
    run_search(task, config, backend, workdir=tmp_path / "run",
               exec_options=fast_exec(tmp_path))
    root_logs = sorted((tmp_path / "run" / "llm_log").glob("*draft_root*"))
    assert root_logs
    doc = json.loads(root_logs[0].read_text())
    text = "\n".join(m["content"] for m in doc["messages"])
    assert "## Data constraints" not in text
    assert "## Architectural priors" not in text
    assert not (tmp_path / "run" / "constraints.json").exists()


def test_conditioned_root_embeds_descriptor(task, tmp_path):
    backend = MockBackend(ridge_playbook())
    config = SearchConfig(iteration_budget=2, parallelism=1, tau_max=5.0,
                          random_seed=0, patience=50)
    run_search(task, config, backend, workdir=tmp_path / "run",
               exec_options=fast_exec(tmp_path))
    root_log = sorted((tmp_path / "run" / "llm_log").glob("*draft_root*"))[0]
    doc = json.loads(root_log.read_text())
    text = "\n".join(m["content"] for m in doc["messages"])
    assert "sampling_rate_hz" in text
    assert "FP1" in text
    assert (tmp_path / "run" / "constraints.json").exists()


def test_trajectory_csv_monotone(task, tmp_path):
    backend = MockBackend(ridge_playbook())
    config = SearchConfig(iteration_budget=10, parallelism=3, tau_max=5.0,
                          random_seed=11, patience=50)
    run_search(task, config, backend, workdir=tmp_path / "run",
               exec_options=fast_exec(tmp_path))
    rows = (tmp_path / "run" / "trajectory.csv").read_text().strip().split("\n")[1:]
    values = [float(r.split(",")[1]) for r in rows if r.split(",")[1]]
    assert values
    assert all(a <= b for a, b in zip(values, values[1:]))


def test_emit_report_single_node(tmp_path):
    tree = SolutionTree()
    tree.insert_node(scored_node("a", total=0.4))
    paths = emit_report(tree, SearchConfig(), tmp_path / "out")
    table_lines = [
        line
        for line in paths["report"].read_text().splitlines()
        if line.startswith("| ") and "step" not in line and "---" not in line
    ]
    assert len(table_lines) == 1


def test_redraft_after_exhausted_chain_under_moeo_ablation(task, tmp_path):
    # greedy chain: once the debug chain dies, only a fresh root-style draft
    # can continue; it must attach to the newest node (chain preserved)
    playbook = [
        {"role": "DRAFT_ROOT", "pattern": "different approach",
         "response": fenced(metrics_script(0.7))},
        {"role": "DRAFT_ROOT", "pattern": ".*", "response": fenced(BROKEN_SCRIPT)},
        {"role": "DEBUG", "pattern": ".*", "response": fenced(BROKEN_SCRIPT)},
    ]
    config = SearchConfig(
        iteration_budget=8, parallelism=1, tau_max=5.0, random_seed=0,
        debug_retry_cap=3, patience=30,
        ablation=AblationFlags(disable_moeo=True),
    )
    report = run_search(task, config, MockBackend(playbook),
                        workdir=tmp_path / "run", exec_options=fast_exec(tmp_path))
    tree = replay_journal(tmp_path / "run" / "tree.journal")
    redrafts = [n for n in tree.nodes.values() if n.origin is Origin.REDRAFT]
    assert redrafts
    assert any(n.status is NodeStatus.EXECUTED for n in redrafts)
    # chain shape survives: every node still has at most one child
    children: dict[str, int] = {}
    for n in tree.nodes.values():
        if n.parent_id is not None:
            children[n.parent_id] = children.get(n.parent_id, 0) + 1
    assert all(c <= 1 for c in children.values())
    assert report.best_node_id is not None


def test_root_generation_failure_aborts(task, tmp_path):
    playbook = [{"role": "DRAFT_ROOT", "pattern": ".*", "response": "prose, no code"}]
    config = SearchConfig(iteration_budget=5, parallelism=1, tau_max=5.0,
                          random_seed=0)
    with pytest.raises(RootGenerationFailedError):
        run_search(task, config, MockBackend(playbook), workdir=tmp_path / "run",
                   exec_options=fast_exec(tmp_path))


def test_probe_failure_without_recordings(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    task = TaskSpec(goal="g", evaluation_criteria="e", data_dir=empty)
    config = SearchConfig(iteration_budget=2, parallelism=1, tau_max=5.0)
    with pytest.raises(ProbeFailedError):
        run_search(task, config, MockBackend([]), workdir=tmp_path / "run",
                   exec_options=fast_exec(tmp_path))


class DownBackend:
    backend_id = "down"

    def complete(self, messages, role, temperature):
        raise TransportError("connection refused")


def test_backend_unreachable_propagates(task, tmp_path, monkeypatch):
    import weave.gateway as gw

    monkeypatch.setattr(gw, "RETRY_DELAYS", (0.0, 0.0, 0.0))
    config = SearchConfig(iteration_budget=2, parallelism=1, tau_max=5.0)
    with pytest.raises(BackendUnreachableError):
        run_search(task, config, DownBackend(), workdir=tmp_path / "run",
                   exec_options=fast_exec(tmp_path))


def test_null_interpreter_end_to_end(task, tmp_path):
    # any configured interpreter command works; here /bin/sh copies canned
    # metrics, proving the loop needs nothing python-specific in candidates
    canned = tmp_path / "canned.json"
    canned.write_text(json.dumps({
        "metric_name": "fixed", "primary_metric": 0.5, "wall_seconds": 0.1,
    }))
    shell_script = f'cp "{canned}" "$4/metrics.json"\n'
    playbook = [{"role": None, "pattern": ".*",
                 "response": f"copy\n```sh\n{shell_script}```"}]
    options = ExecOptions(
        interpreter_cmd=("/bin/sh",),
        scratch_root=tmp_path / "scratch",
        script_filename="candidate.sh",
        timing_mode="reported",
    )
    config = SearchConfig(iteration_budget=4, parallelism=2, tau_max=5.0,
                          random_seed=0, patience=10)
    report = run_search(task, config, MockBackend(playbook),
                        workdir=tmp_path / "run", exec_options=options)
    assert report.best_node_id is not None
    assert report.best_reward.performance == 0.5


def test_tree_rejects_reward_status_mismatch():
    tree = SolutionTree()
    bad = SolutionNode(
        id="a", parent_id=None, script="s", rationale="r",
        status=NodeStatus.DRAFTED, reward=reward(0.5), origin=Origin.ROOT,
    )
    with pytest.raises(ValueError):
        tree.insert_node(bad)
    missing = SolutionNode(
        id="b", parent_id=None, script="s", rationale="r",
        status=NodeStatus.EXECUTED, outcome=outcome(ExecStatus.SUCCESS),
        origin=Origin.ROOT,
    )
    with pytest.raises(ValueError):
        tree.insert_node(missing)


def test_in_flight_markers_bounded_by_parallelism(task, tmp_path):
    backend = MockBackend(ridge_playbook())
    config = SearchConfig(iteration_budget=12, parallelism=3, tau_max=5.0,
                          random_seed=2, patience=50)
    run_search(task, config, backend, workdir=tmp_path / "run",
               exec_options=fast_exec(tmp_path))
    level = 0
    held: set[str] = set()
    for line in (tmp_path / "run" / "tree.journal").read_text().splitlines()[1:]:
        record = json.loads(line)
        if record["k"] == "claim":
            level += 1
            assert record["id"] not in held  # never expanded by two workers
            held.add(record["id"])
        elif record["k"] == "release":
            level -= 1
            held.discard(record["id"])
        assert level <= 3
    assert level == 0
    assert not held
