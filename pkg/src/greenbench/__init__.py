"""Energy-efficiency metrics and test procedures for packet network equipment."""

from .device import CheatBehavior, Device, DeviceModel, PowerCurve, PowerState, WarmupModel
from .metrics import (
    AllowanceTable,
    MeasurementSample,
    MeasurementSet,
    MetricKind,
    MetricResult,
    PacketSizeWeights,
    WeightProfile,
    allowance_budget,
    compute_ecr,
    compute_eer_ex,
    compute_eer_vl,
    compute_teeer,
    compute_teer_atis,
    metric_from_set,
    weighted_peak_throughput,
)
from .orchestrator import (
    ExTestPlan,
    NdrSearchConfig,
    ProbeConfig,
    VlTestPlan,
    find_ndr,
    measure_peak_energy,
    run_extended_idle_test,
    run_peak,
    run_peak_suite,
    run_variable_load_test,
    warmup_until_stable,
)
from .reporting import ComparisonTable, DeviceReport, export, render_comparison
from .scenario import fixture_dir, load_device, load_scenario, run_scenario

__version__ = "0.1.0"
