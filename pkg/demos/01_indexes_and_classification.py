"""Indexes, thresholds, and the ranking order, on a tiny field of proposals.

Each proposal accumulates three counters: approvals, disapprovals, and
exhibitions (how often it was shown). Everything else derives from them.
"""

from contivote import (
    ResolvedThresholds,
    Tally,
    ThresholdPolicy,
    classify,
    compute_indexes,
    dynamic_thresholds,
    evaluate,
)

# -- the index pair ---------------------------------------------------------

tally = Tally("bike-lane", v_plus=3, v_minus=1, eta=4)
idx = compute_indexes(tally)
print(f"{tally.proposal_id}: alpha={idx.alpha} gamma={idx.gamma} "
      f"(v+={tally.v_plus}, v-={tally.v_minus}, eta={tally.eta})")

unseen = compute_indexes(Tally("never-shown"))
print(f"never-shown: defined={unseen.defined} (no exhibitions, no estimate)")

# -- the threshold cascade --------------------------------------------------

bars = ResolvedThresholds(eta_bar=50, gamma_bar=0.5, alpha_bar=0.5)
for vp, vm, eta in [(80, 10, 100), (40, 35, 100), (0, 8, 10)]:
    t = Tally("x", v_plus=vp, v_minus=vm, eta=eta)
    c = classify(compute_indexes(t), t, bars)
    print(f"({vp:>3},{vm:>3},{eta:>4}) -> sampled={c.sampled} relevant={c.relevant} "
          f"verdict={c.verdict.value} prioritized={c.prioritized}")

# -- per-proposal (dynamic) bars, an optional mode, off by default ----------

busy = Tally("busy", v_plus=10, v_minus=5, eta=90)
dyn = dynamic_thresholds(busy, max_eta=100)
print(f"dynamic bars for a well-exposed proposal: gamma_bar={dyn.gamma_bar:.2f} "
      f"alpha_bar={dyn.alpha_bar:.2f}")

# -- a whole snapshot, classified and ranked --------------------------------

snapshot = {
    "a": Tally("a", v_plus=70, v_minus=10, eta=100),
    "b": Tally("b", v_plus=40, v_minus=35, eta=100),
    "c": Tally("c", v_plus=9, v_minus=0, eta=10),
    "d": Tally("d"),
}
rows = evaluate(snapshot, ThresholdPolicy(eta_bar=50, sampling_fraction=None))
print("\nrank  proposal  alpha   verdict       prioritized")
for i, row in enumerate(rows, start=1):
    alpha = "-" if row.alpha is None else f"{row.alpha:.2f}"
    print(f"{i:>4}  {row.proposal_id:<8}  {alpha:>5}   {row.verdict:<12}  {row.prioritized}")
