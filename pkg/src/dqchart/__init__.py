"""Hotelling T-squared data-quality chart for panel data with missing observations."""

__version__ = "0.1.0"

from .chart import ChartPoint, ChartSeries, reduce_dimensions, run_chart, t_squared  # noqa: E402
from .diagnostics import acf, bartlett_sphericity, mardia_test  # noqa: E402
from .generator import FaultSpec, ScenarioConfig, generate_study, missing_fraction  # noqa: E402
from .ingest import (DEFAULT_SIGNS, PlausibilityRanges, StudyDataset, clean,  # noqa: E402
                     daily_summary, parse_long_csv, write_long_csv)
from .myt import MytReport, myt_decompose  # noqa: E402
from .robust import (RobustEstimates, complete_case_matrix, ogk_estimate,  # noqa: E402
                     robust_scale)
from .ucl_sim import UclConfig, UclTable, mvn_sample, n_bar, simulate_ucl, ucl_table  # noqa: E402
from .weighting import DaySummary, WeightMatrix, scaled_covariance, weight_matrix  # noqa: E402
