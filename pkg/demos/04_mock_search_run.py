"""A full hermetic search run against a mock playbook.

The playbook's root draft declares hyperparameter h = 0.2 on a synthetic
"ridge-peak" objective with hidden optimum 0.8; every refinement response
moves h halfway toward the peak. Watching the best-so-far series climb is
the desk-scale version of the optimization trajectory: consistent
improvement with search depth, fully deterministic under a fixed seed.
"""

import json
import re
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))
from _fixtures import write_demo_corpus

from weave import MockBackend, SearchConfig, TaskSpec, run_search
from weave.sandbox import ExecOptions
from weave.tree import replay_journal

H0, H_STAR = 0.2, 0.8

SCRIPT = '''\
import argparse, json
H = {h}
p = argparse.ArgumentParser()
p.add_argument("--data-dir"); p.add_argument("--output-dir")
a = p.parse_args()
json.dump({{"metric_name": "ridge_peak", "primary_metric": 1 - min(1, abs(H - {h_star})),
           "auxiliary": {{"h": H}}, "wall_seconds": 0.3}},
          open(a.output_dir + "/metrics.json", "w"))
'''


def entry(role, pattern, h):
    return {"role": role, "pattern": pattern,
            "response": f"Move h.\n```python\n{SCRIPT.format(h=h, h_star=H_STAR)}\n```"}


playbook = [entry("DRAFT_ROOT", ".*", H0)]
h = H0
for _ in range(10):
    nxt = (h + H_STAR) / 2
    playbook.append(entry("REFINE", re.escape(f"auxiliary h: {h}") + r"\n", nxt))
    h = nxt

workdir = Path(tempfile.mkdtemp(prefix="demo_run_"))
data_dir = workdir / "data"
write_demo_corpus(data_dir)

task = TaskSpec(
    goal="maximize the ridge-peak score on the synthetic task",
    evaluation_criteria="ridge_peak in [0,1]",
    data_dir=data_dir,
)
config = SearchConfig(iteration_budget=14, parallelism=3, tau_max=5.0,
                      selection_temperature=0.1, random_seed=13, patience=50)

print(f"running a mock search (budget {config.iteration_budget},"
      f" parallelism {config.parallelism}) in {workdir}")
report = run_search(
    task, config, MockBackend(playbook), workdir=workdir / "run",
    exec_options=ExecOptions(scratch_root=workdir / "scratch",
                             timing_mode="reported"),
)

print("\nbest-so-far trajectory (iteration, total reward):")
for iteration, total in report.best_so_far:
    if total is not None:
        print(f"  {iteration:3d}  {total:.4f}  " + "#" * int(40 * total))

tree = replay_journal(workdir / "run" / "tree.journal")
print(f"\nbest node {report.best_node_id}:"
      f" performance {report.best_reward.performance:.4f}")
print("lineage performance column (root to best):")
for nid in report.lineage.node_ids:
    node = tree.nodes[nid]
    print(f"  {nid} [{node.origin.value:7s}] M={node.reward.performance:.4f}")

print(f"\nartifacts: {sorted(p.name for p in (workdir / 'run').iterdir())}")
print("replaying the journal reproduces the final tree exactly:",
      replay_journal(workdir / "run" / "tree.journal") == tree)
