"""
==============================
Three ways to score one router
==============================

Same device, same powers, different answers. ATIS TEER divides peak
throughput by a weighted power that is below peak, which flatters the device.
"""

from greenbench import (
    WeightProfile,
    compute_ecr,
    compute_eer_vl,
    compute_teeer,
    compute_teer_atis,
)

idle, half, full = 768.0, 816.0, 863.0
T = 100.0  # Gbps

ecr = compute_ecr(full, T)
print("ECR      ", round(ecr.value, 4), ecr.units, "-> 1/ECR =", round(1 / ecr.value, 5))

verizon = WeightProfile.verizon()
print("TEEER    ", round(compute_teeer(idle, half, full, T, verizon).value, 4))
print("ATIS TEER", round(compute_teer_atis(idle, half, full, T, verizon).value, 5), "Gbps/W")

# variable load: full 100 Gbps, reduced 30 Gbps at 801 W, idle 768 W
w = WeightProfile(0.25, 0.5, 0.25, reduced_load_fraction=0.3)
vl = compute_eer_vl(100.0, 30.0, 863.0, 801.0, 768.0, w)
print("EER-VL   ", round(vl.value, 5), vl.units)
print("EER-VL never beats 1/ECR here:", vl.value <= 1 / ecr.value)
