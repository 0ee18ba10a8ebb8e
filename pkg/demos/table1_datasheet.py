"""
=======================================
A decade of core routers in one table
=======================================

Four fixture devices run the peak procedure; the comparison table marks
the leader (lowest W/Gbps) and exports to CSV.
"""

from greenbench import export, load_scenario, render_comparison, run_scenario
from greenbench.metrics import MetricKind

reports = [
    run_scenario(load_scenario(f"scenario_table1_{n}.json")).report
    for n in ("t640", "t1600", "t4000", "ptx")
]
table = render_comparison(reports, MetricKind.ECR)
print(table.render_text())
print(export(table, "csv").decode())

first, last = table.rows[0].value, table.rows[-1].value
print(f"{first / last:.1f}x less power per Gbps over ten years")
