"""Alignments, fitness, and diagnoses.

Aligns a handful of hand-picked traces against the bundled fn1 net, renders
the two-row alignment pictures, and shows how misalignment counters and
fitness condense into the diagnoses matrix. Run from the repository root:

    python3 demos/02_alignments_and_diagnoses.py
"""

from confmon import (EventLog, Trace, build_diagnoses, coverage,
                     bundled_model, misalignments, optimal_alignment,
                     trace_fitness, write_diagnoses)

net = bundled_model("fn1")

cases = [
    ("conforming, one loop pass", ("t1", "t2", "t4", "t5", "t3", "t4", "t5", "t6")),
    ("t5 fired too early", ("t1", "t5", "t2", "t4", "t6")),
    ("an activity the model does not know", ("t1", "x9", "t3", "t4", "t5", "t6")),
    ("truncated run", ("t1", "t2")),
]

for title, events in cases:
    alignment = optimal_alignment(net, events)
    fitness = trace_fitness(net, events)
    print(f"{title}: cost={alignment.cost:g} fitness={fitness:.3f}")
    print(alignment.render())
    counters = misalignments(alignment, net.visible_labels)
    hot = {k: v for k, v in counters.items() if v}
    print(f"  misalignment counters: {hot or 'none'}\n")

log = EventLog([Trace(f"c{i}", events) for i, (_, events) in enumerate(cases, start=1)])
print(f"coverage over the four traces: {coverage(net, log):.4f}")

print("\ndiagnoses matrix (one row per trace, counters plus fitness):")
print(write_diagnoses(build_diagnoses(net, log)))
