from .metrics import MetricSeries, metric_value_stability  # noqa: F401
from .compare import (PERTURBATION_MODES, ComparisonResult,  # noqa: F401
                      run_block_comparison)
from .casestudy import crowd_size_scenario, evacuation_scenario  # noqa: F401
