"""Walk the composite reward: efficiency curve, novelty, and composition.

The total is w_m*M + w_i*delta + w_n*omega + w_e*gamma + w_fix*phi with every
term normalized. The efficiency term 1 - sqrt(min(1, tau/tau_max)) falls
steeply at first, so shaving latency off a fast pipeline pays more than the
same absolute saving on a slow one.
"""

from weave import RewardWeights, compose_reward, efficiency_term, lexical_novelty
from weave.sandbox import ExecStatus, ExecutionOutcome, MetricReport

TAU_MAX = 60.0

print("efficiency term over execution latency (tau_max = 60 s):")
for tau in (0, 5, 15, 30, 45, 60, 90):
    bar = "#" * int(40 * efficiency_term(tau, TAU_MAX))
    print(f"  tau={tau:3d}s  gamma={efficiency_term(tau, TAU_MAX):.3f}  {bar}")

print("\nlexical novelty against a one-script archive:")
base = " ".join(f"tok{i}" for i in range(40))
for overlap in (0, 10, 20, 30, 40):
    cand = " ".join(f"tok{i}" for i in range(overlap)) + " " + " ".join(
        f"new{i}" for i in range(40 - overlap)
    )
    print(f"  {overlap}/40 shared tokens -> novelty {lexical_novelty(cand, [base]):.3f}")

print("\ncomposing a full breakdown (success, modest improvement):")
weights = RewardWeights()  # (0.6, 0.1, 0.1, 0.1, 0.1)
outcome = ExecutionOutcome(
    status=ExecStatus.SUCCESS, exit_code=0, tau_s=15.0,
    metrics=MetricReport(primary_metric=0.74, metric_name="balanced_accuracy"),
)
b = compose_reward(outcome.metrics, 0.68, outcome, novelty=0.8,
                   weights=weights, tau_max=TAU_MAX)
print(f"  performance={b.performance:.3f} improvement={b.improvement:+.3f}"
      f" novelty={b.novelty:.3f} efficiency={b.efficiency:.3f} phi={b.debug:g}")
print(f"  total = {b.total:.4f}")

print("\nand the same pipeline crashing (phi and performance zero out):")
failed = ExecutionOutcome(status=ExecStatus.RUNTIME_ERROR, exit_code=1, tau_s=3.0)
b = compose_reward(None, 0.68, failed, novelty=0.8, weights=weights, tau_max=TAU_MAX)
print(f"  total = {b.total:.4f} (improvement {b.improvement:+.3f} drags it down)")
