"""
=============================
Load-dependent power of a DUT
=============================

The ``table2_router`` fixture draws 768 W idle and 863 W flat out. Between
the measured loads the curve is linear, so the knots come back exactly.
"""

import numpy as np

from greenbench import Device, load_device

dev = Device(load_device("table2_router"))

for load in (0.0, 0.1, 0.3, 0.5, 0.8, 1.0):
    print(f"{load:4.0%}  {dev.instantaneous_power(load):6.1f} W")

# between knots
loads = np.linspace(0, 1, 11)
watts = np.array([dev.instantaneous_power(x) for x in loads])
print("dynamic range:", watts.max() - watts.min(), "W")
print("idle share of peak:", round(watts[0] / watts[-1], 3))

# offering traffic drives the same curve and advances the clock
s = dev.offer_load(30.0, 1518, 60.0)
print(s.power, "W at", s.delivered, "Gbps; clock now", dev.now_s, "s")
