"""
=================
The warm-up loophole
=================

A cold chassis draws about 5 % less at first. Measure before it settles
and the datasheet number looks better than reality.
"""

from greenbench import Device, load_device, measure_peak_energy, warmup_until_stable

model = load_device("table2_router_cold")
print("warm-up model:", model.warmup)

cold = Device(model)
print("peak power, no warm-up:", round(measure_peak_energy(cold, 100.0, 1518, 1.0), 2), "W")

warm = Device(model)
t = warmup_until_stable(warm)
print(f"stable after {t:.0f} s")
print("peak power, warmed:   ", round(measure_peak_energy(warm, 100.0, 1518, 60.0), 2), "W")
