from typing import Dict, Tuple

# Detection Defaults
DEFAULT_K: int = 10
DEFAULT_ALPHA: float = 0.01
DEFAULT_SEARCH_METHOD: str = "brute"
DEFAULT_NORMALIZE: str = "unitize"
DEFAULT_START_PROPORTION: float = 0.5
DEFAULT_TAIL_COUNT: int = 50
DEFAULT_EPS: float = 0.0

SEARCH_METHODS: Tuple[str, ...] = ("brute", "kdtree")
NORMALIZE_METHODS: Tuple[str, ...] = ("unitize", "none")

# Threshold Estimation
MIN_THRESHOLD_SAMPLE: int = 10

# Spatial Index
LEAF_CAPACITY: int = 16
# Relative slack on box lower bounds so rounding never prunes an exact tie
PRUNE_SLACK: float = 1e-12
# Query rows processed per distance block in brute force
BRUTE_BLOCK_ROWS: int = 128

# HDoutliers Baseline
LEADER_RADIUS_SCALE: float = 0.1
BASELINE_ALPHA: float = 0.05
MIN_EXEMPLARS: int = 10

# Streaming
TS_FEATURES: Tuple[str, ...] = (
    "mean",
    "variance",
    "acf1",
    "trend",
    "spike",
    "level_shift",
    "lumpiness",
)
MIN_SERIES_LENGTH: int = 4

# Null Experiments & Timing
NULL_ALPHA: float = 0.05
NULL_K: int = 10
NULL_N_VALUES: Tuple[int, ...] = (100, 250, 500, 1000, 2500, 5000, 10000)
NULL_D_VALUES: Tuple[int, ...] = (1, 10, 100)
NULL_METHODS: Tuple[str, ...] = ("stray_brute", "stray_kdtree", "hd_v1", "hd_v2")
# Baseline threshold variant for null and timing runs
NULL_FLAWED_THRESHOLD: bool = False
TIMING_REPEATS: int = 3
DEFAULT_SEED: int = 2020

# CLI Exit Codes
EXIT_OK: int = 0
EXIT_ANOMALY: int = 1
EXIT_USAGE: int = 2
EXIT_DATA: int = 3

# Scenario Generators
# Every scenario is 2-D. Typical classes are isotropic Gaussians; planted rows
# are appended after the typical rows so the Leader pass meets them last.
# Centres keep the bounding box close to square so unitize scales both axes
# alike. Minimum separation between a planted row and its nearest class
# centre is listed per scenario.

# (a) one Gaussian class + one global outlier; separation ~ 8.5 sd
SCENARIO_A_TYPICAL: int = 1000
SCENARIO_A_CENTRE: Tuple[float, float] = (0.0, 0.0)
SCENARIO_A_SD: float = 1.0
SCENARIO_A_OUTLIER: Tuple[float, float] = (6.0, 6.0)

# (b) two typical classes + top-centred micro cluster of 3; separation ~ 11 sd
SCENARIO_B_TYPICAL: int = 500
SCENARIO_B_CENTRES: Tuple[Tuple[float, float], ...] = ((-5.0, 0.0), (5.0, 0.0))
SCENARIO_B_SD: float = 1.0
SCENARIO_B_MICRO_CENTRE: Tuple[float, float] = (0.0, 10.0)
SCENARIO_B_MICRO_SIZE: int = 3
SCENARIO_B_MICRO_SD: float = 0.1

# (c) one class + five points on a short diagonal near the upper-right corner.
# The step sits below the Leader radius and twice the step above it, so the
# Leader pass splits the five into three neighbouring clusters; ~ 8.5 sd
SCENARIO_C_TYPICAL: int = 1000
SCENARIO_C_CENTRE: Tuple[float, float] = (0.0, 0.0)
SCENARIO_C_SD: float = 1.0
SCENARIO_C_MICRO_START: Tuple[float, float] = (6.0, 6.0)
SCENARIO_C_MICRO_SIZE: int = 5
SCENARIO_C_MICRO_STEP: float = 0.25

# (d) two diagonal classes + two adjacent inliers at the midpoint; ~ 7 sd
SCENARIO_D_TYPICAL: int = 500
SCENARIO_D_CENTRES: Tuple[Tuple[float, float], ...] = ((-5.0, -5.0), (5.0, 5.0))
SCENARIO_D_SD: float = 1.0
SCENARIO_D_INLIERS: Tuple[Tuple[float, float], ...] = ((-0.1, 0.1), (0.1, -0.1))

# (e) diffuse class upper-left, compact class far lower-right, inlier between.
# The compact class falls inside one Leader radius; its exemplar sits far
# from every other exemplar.
SCENARIO_E_TYPICAL: int = 1000
SCENARIO_E_DIFFUSE_CENTRE: Tuple[float, float] = (0.0, 6.0)
SCENARIO_E_DIFFUSE_SD: float = 1.0
SCENARIO_E_COMPACT_CENTRE: Tuple[float, float] = (10.0, 0.0)
SCENARIO_E_COMPACT_SD: float = 0.01
SCENARIO_E_INLIER: Tuple[float, float] = (3.0, 3.0)

# (f) compact class upper-left + one outlier far lower-right; ~ 212 sd.
# Unitized, one Leader radius is ~ 5.8 sd: the class yields fewer than
# MIN_EXEMPLARS - 1 exemplars.
SCENARIO_F_TYPICAL: int = 1000
SCENARIO_F_CENTRE: Tuple[float, float] = (0.0, 150.0)
SCENARIO_F_SD: float = 1.0
SCENARIO_F_OUTLIER: Tuple[float, float] = (150.0, 0.0)

# Singleton and micro-cluster variants around a single anomaly position
PLACED_TYPICAL: int = 499
PLACED_CENTRE: Tuple[float, float] = (0.0, 0.0)
PLACED_SD: float = 2.0
PLACED_ANOMALY: Tuple[float, float] = (15.0, 16.5)
PLACED_MICRO_OFFSETS: Tuple[Tuple[float, float], ...] = ((0.0, 0.0), (0.7, 0.0), (0.35, 0.6))

SCENARIO_NAMES: Tuple[str, ...] = ("a", "b", "c", "d", "e", "f", "fig3_single", "fig3_micro")

SCENARIO_SUMMARY: Dict[str, str] = {
    "a": "one Gaussian class and one global outlier",
    "b": "two typical classes and a top-centred micro cluster of three",
    "c": "one typical class and a five-point micro cluster near a corner",
    "d": "two typical classes and two adjacent inliers between them",
    "e": "diffuse class, compact 1000-point class and one inlier (2,001 rows)",
    "f": "compact 1000-point class and one outlier (1,001 rows)",
    "fig3_single": "tight class of 499 and one anomaly at (15, 16.5)",
    "fig3_micro": "tight class of 499 and three anomalies around (15, 16.5)",
}
