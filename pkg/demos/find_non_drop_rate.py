"""
=========================
Searching the non-drop rate
=========================

A 100 Gbps port that only forwards 40 Gbps of 64-byte frames. Bisection
finds the rate in a dozen trials; an exhaustive sweep needs a thousand.
"""

from greenbench import Device, NdrSearchConfig, find_ndr, load_device

model = load_device("table2_router")
print("declared NDR by size:", model.ndr_by_packet_size)

for size in (64, 1518):
    dev = Device(model)
    ndr = find_ndr(dev, NdrSearchConfig(size, resolution=0.001, trial_duration_s=1.0))
    print(f"{size:5d} B  NDR {ndr:8.3f} Gbps  (simulated {dev.now_s:.0f} s of trials)")

# tolerate 1 % loss and the search is allowed past the strict NDR
dev = Device(model)
print("with 1% loss:", round(find_ndr(dev, NdrSearchConfig(64, loss_tolerance=0.01, trial_duration_s=1.0)), 3))
