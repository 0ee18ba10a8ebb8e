"""
====================================
Return-to-full-capacity probe at work
====================================

``cheater_downshift`` drops to a 30 % capacity state whenever it expects the
reduced and idle phases. A single full-rate burst at a random instant
exposes it. A compliant device passes the same probe.
"""

from greenbench import Device, VlTestPlan, WeightProfile, load_device, run_variable_load_test
from greenbench.metrics import MetricKind, metric_from_set

plan = VlTestPlan(
    WeightProfile(0.25, 0.5, 0.25, reduced_load_fraction=0.3),
    (60.0, 60.0, 60.0),
    packet_size_bytes=1518,
)

for name in ("table2_router", "cheater_downshift"):
    mset = run_variable_load_test(Device(load_device(name)), 100.0, plan, orchestrator_seed=42)
    print(name)
    for p in mset.provenance["probes"]:
        print(f"  probe t={p['at_s']:.1f} s delivered {p['delivered']:.1f} Gbps passed={p['passed']}")
    if mset.valid:
        print("  EER-VL", round(metric_from_set(mset, MetricKind.EER_VL).value, 5))
    else:
        print("  invalid:", mset.invalidation_reason)
