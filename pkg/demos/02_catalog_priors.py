"""Select architectural priors from the shipped model-card catalog.

Retrieval picks one representative card per taxonomy category by matching
the cards' task tags against the goal text, then distills the picks into
the prior digest that conditions root drafts.
"""

from weave import default_catalog, select_candidates, summarize_priors
from weave.catalog import render_digest

catalog = default_catalog()
print(f"catalog {catalog.version}: {len(catalog.cards)} cards in"
      f" categories {list(catalog.taxonomy)}\n")

for goal in (
    "sleep staging from overnight polysomnography",
    "motor imagery decoding for a brain-computer interface",
):
    print(f"goal: {goal}")
    picks = select_candidates(goal, catalog)
    for card in picks:
        print(f"  [{card.category:11s}] {card.name:16s} tags: {', '.join(card.suitable_tasks)}")
    print()

picks = select_candidates("sleep staging", catalog)
digest = summarize_priors(picks, None, catalog_version=catalog.version)
print("prior digest (verbatim path), as embedded in the root prompt:")
print(render_digest(digest)[:600] + " ...")
