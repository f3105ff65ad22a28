"""Local model-card catalog and architectural-prior retrieval.

A catalog is a versioned set of hand-authored cards describing candidate
network architectures, grouped under a small taxonomy (by default
Convolution / Attention / Recurrent). Retrieval picks one representative
card per category for a task goal and distills the picks into a textual
prior digest for prompt conditioning.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable

from .errors import (
    CatalogNotFoundError,
    DuplicateCardError,
    EmptyCatalogError,
    UnknownCategoryError,
)

DEFAULT_TAXONOMY = ("Convolution", "Attention", "Recurrent")
SUMMARY_MAX_CHARS = 1200

_TOKEN_RE = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class InputConstraints:
    min_channels: int
    max_channels: int
    expected_sample_length: int | str = "flexible"


@dataclass(frozen=True)
class ModelCard:
    name: str
    category: str
    summary: str
    input_constraints: InputConstraints
    param_estimate: int
    suitable_tasks: tuple[str, ...]


@dataclass(frozen=True)
class Catalog:
    version: str
    taxonomy: tuple[str, ...]
    cards: tuple[ModelCard, ...]

    def by_category(self, category: str) -> list[ModelCard]:
        return [c for c in self.cards if c.category == category]


@dataclass(frozen=True)
class PriorDigest:
    """Distilled architecture summaries, at most one entry per category."""

    entries: tuple[tuple[str, str, str], ...]  # (model name, category, summary)
    provenance: str


def _card_from_dict(raw: dict, taxonomy: tuple[str, ...], source: str) -> ModelCard:
    try:
        ic = raw.get("input_constraints", {})
        card = ModelCard(
            name=raw["name"],
            category=raw["category"],
            summary=raw["summary"],
            input_constraints=InputConstraints(
                min_channels=int(ic.get("min_channels", 1)),
                max_channels=int(ic.get("max_channels", 512)),
                expected_sample_length=ic.get("expected_sample_length", "flexible"),
            ),
            param_estimate=int(raw.get("param_estimate", 0)),
            suitable_tasks=tuple(raw.get("suitable_tasks", ())),
        )
    except KeyError as exc:
        raise CatalogNotFoundError(f"{source}: card missing field {exc}") from None
    if not card.summary:
        raise CatalogNotFoundError(f"{source}: card {card.name!r} has empty summary")
    if card.category not in taxonomy:
        raise UnknownCategoryError(
            f"{source}: card {card.name!r} has category {card.category!r},"
            f" taxonomy is {list(taxonomy)}"
        )
    return card


def _build(version: str, taxonomy: list[str], card_dicts: list[tuple[dict, str]]) -> Catalog:
    taxonomy_t = tuple(taxonomy)
    if len(set(taxonomy_t)) != len(taxonomy_t):
        raise UnknownCategoryError(f"taxonomy has duplicate categories: {taxonomy}")
    cards: list[ModelCard] = []
    seen: set[str] = set()
    for raw, source in card_dicts:
        card = _card_from_dict(raw, taxonomy_t, source)
        if card.name in seen:
            raise DuplicateCardError(f"duplicate card name {card.name!r}")
        seen.add(card.name)
        cards.append(card)
    return Catalog(version=version, taxonomy=taxonomy_t, cards=tuple(cards))


def load_catalog(path: str | os.PathLike) -> Catalog:
    """Load a catalog from a directory (manifest.json + one JSON per card)
    or from a single JSON document with a `cards` array."""
    path = Path(path)
    if not path.exists():
        raise CatalogNotFoundError(f"no catalog at {path}")
    if path.is_dir():
        manifest_path = path / "manifest.json"
        if not manifest_path.exists():
            raise CatalogNotFoundError(f"missing manifest.json in {path}")
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        card_files = sorted(p for p in path.glob("*.json") if p.name != "manifest.json")
        card_dicts = [
            (json.loads(p.read_text(encoding="utf-8")), p.name) for p in card_files
        ]
        return _build(
            str(manifest.get("version", "unversioned")),
            list(manifest.get("taxonomy", DEFAULT_TAXONOMY)),
            card_dicts,
        )
    doc = json.loads(path.read_text(encoding="utf-8"))
    return _build(
        str(doc.get("version", "unversioned")),
        list(doc.get("taxonomy", DEFAULT_TAXONOMY)),
        [(raw, path.name) for raw in doc.get("cards", [])],
    )


def default_catalog() -> Catalog:
    """The catalog shipped with the package."""
    root = resources.files("weave").joinpath("cards")
    manifest = json.loads(root.joinpath("manifest.json").read_text(encoding="utf-8"))
    card_dicts = []
    for entry in sorted(r.name for r in root.iterdir() if r.name.endswith(".json")):
        if entry == "manifest.json":
            continue
        card_dicts.append(
            (json.loads(root.joinpath(entry).read_text(encoding="utf-8")), entry)
        )
    return _build(str(manifest["version"]), list(manifest["taxonomy"]), card_dicts)


def _tokens(text: str) -> set[str]:
    return set(_TOKEN_RE.findall(text.lower()))


def select_candidates(task_goal: str, catalog: Catalog) -> list[ModelCard]:
    """One representative card per non-empty category.

    Relevance = overlap between the card's task-tag tokens and the goal's
    tokens; ties break to the lexicographically smallest card name. Output
    follows taxonomy order, so selection is fully deterministic.
    """
    if not catalog.cards:
        raise EmptyCatalogError("catalog has no cards")
    goal_tokens = _tokens(task_goal)
    picks: list[ModelCard] = []
    for category in catalog.taxonomy:
        group = catalog.by_category(category)
        if not group:
            continue
        scored = sorted(
            group,
            key=lambda c: (-len(_tokens(" ".join(c.suitable_tasks)) & goal_tokens), c.name),
        )
        picks.append(scored[0])
    return picks


def summarize_priors(
    candidates: list[ModelCard],
    summarizer: Callable[[ModelCard], str] | None = None,
    catalog_version: str = "unversioned",
) -> PriorDigest:
    """Distill candidate cards into the prior digest.

    With no summarizer the card summaries pass through verbatim. A
    summarizer failure falls back to verbatim and is noted in provenance.
    """
    if not candidates:
        raise EmptyCatalogError("no candidate cards to summarize")
    entries: list[tuple[str, str, str]] = []
    mode = "verbatim" if summarizer is None else "generative"
    for card in candidates:
        text = card.summary
        if summarizer is not None:
            try:
                text = summarizer(card)
            except Exception:
                text = card.summary
                mode = "verbatim-fallback"
        entries.append((card.name, card.category, text[:SUMMARY_MAX_CHARS]))
    return PriorDigest(
        entries=tuple(entries),
        provenance=f"catalog {catalog_version}; summaries={mode}",
    )


def render_digest(digest: PriorDigest) -> str:
    """Plain-text digest block for prompt embedding."""
    lines = [f"({digest.provenance})"]
    for name, category, summary in digest.entries:
        lines.append(f"[{category}] {name}: {summary}")
    return "\n".join(lines)
