from forecaster.eval.bench import bench, compare_fusion  # noqa: F401
from forecaster.eval.metrics import compute_metrics, evaluate  # noqa: F401
from forecaster.eval.robustness import perturb_scenario, robustness_sweep  # noqa: F401
