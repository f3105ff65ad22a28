"""Solution tree: candidate scripts, lineage, rewards, and the run journal.

The tree is the single source of truth for a run. Every mutation appends a
line-delimited JSON record to the journal before the mutating call returns,
so a crashed run can be reconstructed exactly by replay.
"""

from __future__ import annotations

import io
import json
import logging
import os
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

from .errors import (
    CorruptRecordError,
    DuplicateIdError,
    NoScoredNodesError,
    SecondRootError,
    UnknownNodeError,
    UnknownParentError,
    VersionMismatchError,
)
from .reward import RewardBreakdown
from .sandbox import ExecutionOutcome

logger = logging.getLogger(__name__)

JOURNAL_FORMAT = "weave-tree-journal"
JOURNAL_VERSION = 1


class NodeStatus(str, Enum):
    DRAFTED = "DRAFTED"
    VALIDATED = "VALIDATED"
    EXECUTED = "EXECUTED"
    FAILED = "FAILED"
    DEBUG_CHILD = "DEBUG_CHILD"


class Origin(str, Enum):
    """How a node's script came to exist (persistent provenance)."""

    ROOT = "root"
    REFINE = "refine"
    DEBUG = "debug"
    REDRAFT = "redraft"


@dataclass
class SolutionNode:
    id: str
    parent_id: str | None
    script: str
    rationale: str
    status: NodeStatus
    outcome: ExecutionOutcome | None = None
    reward: RewardBreakdown | None = None
    depth: int = 0
    created_at: int | None = None
    origin: Origin = Origin.ROOT

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "parent_id": self.parent_id,
            "script": self.script,
            "rationale": self.rationale,
            "status": self.status.value,
            "outcome": self.outcome.to_dict() if self.outcome else None,
            "reward": self.reward.to_dict() if self.reward else None,
            "depth": self.depth,
            "created_at": self.created_at,
            "origin": self.origin.value,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "SolutionNode":
        return cls(
            id=raw["id"],
            parent_id=raw["parent_id"],
            script=raw["script"],
            rationale=raw["rationale"],
            status=NodeStatus(raw["status"]),
            outcome=ExecutionOutcome.from_dict(raw["outcome"]) if raw.get("outcome") else None,
            reward=RewardBreakdown.from_dict(raw["reward"]) if raw.get("reward") else None,
            depth=raw["depth"],
            created_at=raw["created_at"],
            origin=Origin(raw.get("origin", "root")),
        )


@dataclass(frozen=True)
class LineageTrace:
    node_ids: tuple[str, ...]
    rewards_along_path: tuple[float | None, ...]


class TreeJournal:
    """Append-only, line-delimited record sink with a version header."""

    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        new = not self.path.exists() or self.path.stat().st_size == 0
        self._fh: io.TextIOWrapper = open(self.path, "a", encoding="utf-8")
        if new:
            self.append({"format": JOURNAL_FORMAT, "version": JOURNAL_VERSION})

    def append(self, record: dict):
        self._fh.write(json.dumps(record, separators=(",", ":")) + "\n")
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class SolutionTree:
    """Single-writer tree of candidate pipeline scripts."""

    def __init__(self, journal: TreeJournal | None = None):
        self.nodes: dict[str, SolutionNode] = {}
        self.root_id: str | None = None
        self.in_flight: set[str] = set()
        self.journal = journal
        self._next_seq = 0

    # --- mutations ---------------------------------------------------------

    @staticmethod
    def _check_reward_status(node_id: str, status: NodeStatus, reward) -> None:
        scored_status = status in (NodeStatus.EXECUTED, NodeStatus.FAILED)
        if (reward is not None) != scored_status:
            raise ValueError(
                f"node {node_id!r}: reward must be present exactly for"
                f" EXECUTED/FAILED nodes (status {status.value})"
            )

    def insert_node(self, node: SolutionNode) -> SolutionNode:
        if node.id in self.nodes:
            raise DuplicateIdError(f"node id {node.id!r} already present")
        self._check_reward_status(node.id, node.status, node.reward)
        if node.parent_id is None:
            if self.root_id is not None:
                raise SecondRootError(f"tree already has root {self.root_id!r}")
            if node.depth != 0:
                node = replace(node, depth=0)
        else:
            if node.parent_id not in self.nodes:
                raise UnknownParentError(f"unknown parent {node.parent_id!r}")
            node = replace(node, depth=self.nodes[node.parent_id].depth + 1)
        if node.created_at is None:
            node = replace(node, created_at=self._next_seq)
        elif node.created_at < self._next_seq:
            raise ValueError(
                f"created_at {node.created_at} not increasing (next is {self._next_seq})"
            )
        self._next_seq = node.created_at + 1
        self.nodes[node.id] = node
        if node.parent_id is None:
            self.root_id = node.id
        if self.journal:
            self.journal.append({"k": "insert", "node": node.to_dict()})
        return node

    def set_result(
        self,
        node_id: str,
        status: NodeStatus,
        outcome: ExecutionOutcome | None,
        reward: RewardBreakdown | None,
    ) -> SolutionNode:
        if node_id not in self.nodes:
            raise UnknownNodeError(f"unknown node {node_id!r}")
        self._check_reward_status(node_id, status, reward)
        node = self.nodes[node_id]
        node.status = status
        node.outcome = outcome
        node.reward = reward
        if self.journal:
            self.journal.append(
                {
                    "k": "result",
                    "id": node_id,
                    "status": status.value,
                    "outcome": outcome.to_dict() if outcome else None,
                    "reward": reward.to_dict() if reward else None,
                }
            )
        return node

    def claim(self, node_id: str):
        if node_id not in self.nodes:
            raise UnknownNodeError(f"unknown node {node_id!r}")
        self.in_flight.add(node_id)
        if self.journal:
            self.journal.append({"k": "claim", "id": node_id})

    def release(self, node_id: str):
        self.in_flight.discard(node_id)
        if self.journal:
            self.journal.append({"k": "release", "id": node_id})

    # --- queries -----------------------------------------------------------

    def __len__(self) -> int:
        return len(self.nodes)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SolutionTree):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and self.root_id == other.root_id
            and self.in_flight == other.in_flight
        )

    def nodes_in_order(self) -> list[SolutionNode]:
        return sorted(self.nodes.values(), key=lambda n: n.created_at)

    def children(self, node_id: str) -> list[SolutionNode]:
        return [n for n in self.nodes_in_order() if n.parent_id == node_id]

    def best_node(self) -> SolutionNode:
        """Highest-reward EXECUTED node; earliest created wins ties."""
        scored = [
            n
            for n in self.nodes.values()
            if n.status is NodeStatus.EXECUTED and n.reward is not None
        ]
        if not scored:
            raise NoScoredNodesError("no executed, scored nodes in tree")
        return min(scored, key=lambda n: (-n.reward.total, n.created_at))

    def lineage(self, node_id: str) -> LineageTrace:
        if node_id not in self.nodes:
            raise UnknownNodeError(f"unknown node {node_id!r}")
        path: list[SolutionNode] = []
        cursor: str | None = node_id
        while cursor is not None:
            node = self.nodes[cursor]
            path.append(node)
            cursor = node.parent_id
        path.reverse()
        return LineageTrace(
            node_ids=tuple(n.id for n in path),
            rewards_along_path=tuple(
                n.reward.total if n.reward is not None else None for n in path
            ),
        )

    def best_so_far_series(self) -> list[float | None]:
        """Running max of executed totals, in insertion order."""
        series: list[float | None] = []
        best: float | None = None
        for node in self.nodes_in_order():
            if node.status is NodeStatus.EXECUTED and node.reward is not None:
                best = node.reward.total if best is None else max(best, node.reward.total)
            series.append(best)
        return series

    def topology(self) -> dict:
        """Exportable nodes/edges/rewards document for reports."""
        return {
            "nodes": [
                {
                    "id": n.id,
                    "parent_id": n.parent_id,
                    "status": n.status.value,
                    "origin": n.origin.value,
                    "depth": n.depth,
                    "created_at": n.created_at,
                    "reward_total": n.reward.total if n.reward else None,
                    "performance": n.reward.performance if n.reward else None,
                }
                for n in self.nodes_in_order()
            ],
            "edges": [
                {"from": n.parent_id, "to": n.id}
                for n in self.nodes_in_order()
                if n.parent_id is not None
            ],
        }


def replay_journal(path: str | os.PathLike) -> SolutionTree:
    """Rebuild a tree from its journal.

    A partial trailing record is discarded with a warning; a corrupt record
    anywhere else raises CorruptRecordError.
    """
    path = Path(path)
    lines = path.read_text(encoding="utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise CorruptRecordError(f"{path}: empty journal")

    def parse(line: str, lineno: int, trailing: bool) -> dict | None:
        try:
            record = json.loads(line)
            if not isinstance(record, dict) or "k" not in record and lineno > 0:
                raise ValueError("record is not an object with a kind")
            return record
        except ValueError as exc:
            if trailing:
                logger.warning("%s: discarding partial trailing record: %s", path, exc)
                return None
            raise CorruptRecordError(f"{path}:{lineno + 1}: {exc}") from None

    header = parse(lines[0], 0, trailing=len(lines) == 1)
    if header is None or header.get("format") != JOURNAL_FORMAT:
        raise CorruptRecordError(f"{path}: missing journal header")
    if header.get("version") != JOURNAL_VERSION:
        raise VersionMismatchError(
            f"{path}: journal version {header.get('version')}, expected {JOURNAL_VERSION}"
        )

    tree = SolutionTree(journal=None)
    for i, line in enumerate(lines[1:], start=1):
        record = parse(line, i, trailing=(i == len(lines) - 1))
        if record is None:
            break
        try:
            kind = record["k"]
            if kind == "insert":
                tree.insert_node(SolutionNode.from_dict(record["node"]))
            elif kind == "result":
                tree.set_result(
                    record["id"],
                    NodeStatus(record["status"]),
                    ExecutionOutcome.from_dict(record["outcome"]) if record.get("outcome") else None,
                    RewardBreakdown.from_dict(record["reward"]) if record.get("reward") else None,
                )
            elif kind == "claim":
                tree.claim(record["id"])
            elif kind == "release":
                tree.release(record["id"])
            else:
                raise ValueError(f"unknown record kind {kind!r}")
        except (KeyError, ValueError, TypeError) as exc:
            if i == len(lines) - 1:
                logger.warning("%s: discarding partial trailing record: %s", path, exc)
                break
            raise CorruptRecordError(f"{path}:{i + 1}: {exc}") from None
    return tree
