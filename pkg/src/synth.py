"""
Seeded data generators and experiment harnesses.

Scenarios are the 2-D counterexamples used to compare stray with HDoutliers;
every geometric constant lives in src/config.py. Random draws come from a
PCG64 generator, so a (name, seed) pair regenerates the same bits on every
platform.
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import stats
from tqdm import tqdm

from src import config as C
from src.baseline import hdoutliers_detect
from src.core import StrayConfig, detect
from src.detection.matrix import DataMatrix
from src.errors import ConfigError, InsufficientDataError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """A generated matrix and the 0-based ids of its planted anomalous rows."""
    data: DataMatrix
    planted_anomaly_rows: np.ndarray
    scenario_name: str
    seed: int

    @property
    def labels(self) -> np.ndarray:
        out = np.zeros(self.data.n, dtype=bool)
        out[self.planted_anomaly_rows] = True
        return out

    def to_csv(self, data_path: Union[str, Path], labels_path: Optional[Union[str, Path]] = None) -> Path:
        """Write the data CSV (header x1..xd) and the companion label CSV (row_id, is_planted)."""
        data_path = Path(data_path)
        if labels_path is None:
            labels_path = data_path.with_name(f"{data_path.stem}_labels.csv")
        columns = [f"x{j + 1}" for j in range(self.data.d)]
        pd.DataFrame(self.data.values, columns=columns).to_csv(data_path, index=False, float_format="%.17g")
        pd.DataFrame({"row_id": np.arange(self.data.n), "is_planted": self.labels.astype(int)}).to_csv(
            labels_path, index=False
        )
        return Path(labels_path)


def _gaussian(rng: np.random.Generator, centre: Sequence[float], sd: float, size: int) -> np.ndarray:
    return rng.normal(loc=centre, scale=sd, size=(size, len(centre)))


def _assemble(typical: List[np.ndarray], planted: np.ndarray, name: str, seed: int) -> LabeledDataset:
    base = np.vstack(typical)
    values = np.vstack([base, planted])
    rows = np.arange(base.shape[0], values.shape[0])
    return LabeledDataset(DataMatrix(values), rows, name, seed)


def _scenario_a(rng: np.random.Generator) -> Tuple[List[np.ndarray], np.ndarray]:
    typical = [_gaussian(rng, C.SCENARIO_A_CENTRE, C.SCENARIO_A_SD, C.SCENARIO_A_TYPICAL)]
    return typical, np.array([C.SCENARIO_A_OUTLIER])


def _scenario_b(rng: np.random.Generator) -> Tuple[List[np.ndarray], np.ndarray]:
    typical = [_gaussian(rng, c, C.SCENARIO_B_SD, C.SCENARIO_B_TYPICAL) for c in C.SCENARIO_B_CENTRES]
    micro = _gaussian(rng, C.SCENARIO_B_MICRO_CENTRE, C.SCENARIO_B_MICRO_SD, C.SCENARIO_B_MICRO_SIZE)
    return typical, micro


def _scenario_c(rng: np.random.Generator) -> Tuple[List[np.ndarray], np.ndarray]:
    typical = [_gaussian(rng, C.SCENARIO_C_CENTRE, C.SCENARIO_C_SD, C.SCENARIO_C_TYPICAL)]
    direction = np.array([1.0, 1.0]) / np.sqrt(2.0)
    steps = np.arange(C.SCENARIO_C_MICRO_SIZE, dtype=np.float64)[:, None] * C.SCENARIO_C_MICRO_STEP
    micro = np.asarray(C.SCENARIO_C_MICRO_START) + steps * direction
    return typical, micro


def _scenario_d(rng: np.random.Generator) -> Tuple[List[np.ndarray], np.ndarray]:
    typical = [_gaussian(rng, c, C.SCENARIO_D_SD, C.SCENARIO_D_TYPICAL) for c in C.SCENARIO_D_CENTRES]
    return typical, np.array(C.SCENARIO_D_INLIERS)


def _scenario_e(rng: np.random.Generator) -> Tuple[List[np.ndarray], np.ndarray]:
    typical = [
        _gaussian(rng, C.SCENARIO_E_DIFFUSE_CENTRE, C.SCENARIO_E_DIFFUSE_SD, C.SCENARIO_E_TYPICAL),
        _gaussian(rng, C.SCENARIO_E_COMPACT_CENTRE, C.SCENARIO_E_COMPACT_SD, C.SCENARIO_E_TYPICAL),
    ]
    return typical, np.array([C.SCENARIO_E_INLIER])


def _scenario_f(rng: np.random.Generator) -> Tuple[List[np.ndarray], np.ndarray]:
    typical = [_gaussian(rng, C.SCENARIO_F_CENTRE, C.SCENARIO_F_SD, C.SCENARIO_F_TYPICAL)]
    return typical, np.array([C.SCENARIO_F_OUTLIER])


def _placed_single(rng: np.random.Generator) -> Tuple[List[np.ndarray], np.ndarray]:
    typical = [_gaussian(rng, C.PLACED_CENTRE, C.PLACED_SD, C.PLACED_TYPICAL)]
    return typical, np.array([C.PLACED_ANOMALY])


def _placed_micro(rng: np.random.Generator) -> Tuple[List[np.ndarray], np.ndarray]:
    typical = [_gaussian(rng, C.PLACED_CENTRE, C.PLACED_SD, C.PLACED_TYPICAL)]
    return typical, np.asarray(C.PLACED_ANOMALY) + np.array(C.PLACED_MICRO_OFFSETS)


_BUILDERS: Dict[str, Callable[[np.random.Generator], Tuple[List[np.ndarray], np.ndarray]]] = {
    "a": _scenario_a,
    "b": _scenario_b,
    "c": _scenario_c,
    "d": _scenario_d,
    "e": _scenario_e,
    "f": _scenario_f,
    "fig3_single": _placed_single,
    "fig3_micro": _placed_micro,
}


def scenario(name: str, seed: int = C.DEFAULT_SEED) -> LabeledDataset:
    """Generate one named counterexample dataset; see config.SCENARIO_SUMMARY."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ConfigError(f"unknown scenario {name!r}; expected one of {C.SCENARIO_NAMES}") from None
    rng = np.random.Generator(np.random.PCG64(seed))
    typical, planted = builder(rng)
    return _assemble(typical, planted, name, seed)


def recall_and_fpr(flags: np.ndarray, planted: np.ndarray) -> Tuple[float, float, int]:
    """(recall on planted rows, false-positive rate on the rest, false-positive count)."""
    flags = np.asarray(flags, dtype=bool)
    is_planted = np.zeros(flags.size, dtype=bool)
    is_planted[np.asarray(planted, dtype=np.intp)] = True
    recall = float(flags[is_planted].mean()) if is_planted.any() else 1.0
    false_pos = int(np.sum(flags & ~is_planted))
    typical = int(np.sum(~is_planted))
    return recall, (false_pos / typical if typical else 0.0), false_pos


def _run_method(method: str, data: np.ndarray, alpha: float, k: int,
                flawed_threshold: bool = C.NULL_FLAWED_THRESHOLD) -> np.ndarray:
    if method == "stray_brute":
        return detect(data, StrayConfig(k=k, alpha=alpha, search_method="brute")).flags
    if method == "stray_kdtree":
        return detect(data, StrayConfig(k=k, alpha=alpha, search_method="kdtree")).flags
    if method == "hd_v1":
        return hdoutliers_detect(data, alpha=alpha, use_clustering=False,
                                 flawed_threshold=flawed_threshold).flags
    if method == "hd_v2":
        return hdoutliers_detect(data, alpha=alpha, use_clustering=True,
                                 flawed_threshold=flawed_threshold).flags
    raise ConfigError(f"unknown method {method!r}; expected one of {C.NULL_METHODS}")


@dataclass(frozen=True, eq=False)
class NullResult:
    method: str
    n: int
    d: int
    rates: np.ndarray

    @property
    def mean(self) -> float:
        return float(self.rates.mean())

    @property
    def stderr(self) -> float:
        if self.rates.size < 2:
            return 0.0
        return float(self.rates.std(ddof=1) / np.sqrt(self.rates.size))


def null_experiment(n: int, d: int, iters: int, alpha: float = C.NULL_ALPHA, k: int = C.NULL_K,
                    method: str = "stray_brute", seed: int = C.DEFAULT_SEED,
                    max_workers: int = 1, progress: bool = False,
                    flawed_threshold: bool = C.NULL_FLAWED_THRESHOLD) -> NullResult:
    """
    False-positive rate on anomaly-free standard-normal n x d data: the
    flagged fraction per iteration, collected over `iters` iterations. Each
    iteration draws from its own child of SeedSequence(seed), so the result
    does not depend on max_workers. flawed_threshold selects the HDoutliers
    threshold variant and is ignored by the stray methods.
    """
    if iters < 1:
        raise ConfigError(f"iters must be >= 1, got {iters}")
    if method not in C.NULL_METHODS:
        raise ConfigError(f"unknown method {method!r}; expected one of {C.NULL_METHODS}")
    children = np.random.SeedSequence(seed).spawn(iters)

    def one(child: np.random.SeedSequence) -> float:
        rng = np.random.Generator(np.random.PCG64(child))
        data = rng.standard_normal((n, d))
        return float(_run_method(method, data, alpha, k, flawed_threshold).sum()) / n

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rates = list(tqdm(pool.map(one, children), total=iters, disable=not progress, desc=method))
    else:
        rates = [one(c) for c in tqdm(children, disable=not progress, desc=method)]

    result = NullResult(method=method, n=n, d=d, rates=np.asarray(rates))
    logger.info("null experiment %s n=%d d=%d iters=%d: mean FPR %.4f (se %.4f)",
                method, n, d, iters, result.mean, result.stderr)
    return result


def fpr_table(n_values: Iterable[int], d_values: Iterable[int], methods: Iterable[str], iters: int,
              alpha: float = C.NULL_ALPHA, k: int = C.NULL_K, seed: int = C.DEFAULT_SEED,
              max_workers: int = 1, progress: bool = False,
              flawed_threshold: bool = C.NULL_FLAWED_THRESHOLD) -> pd.DataFrame:
    """Mean FPR for every (method, d, n); long format, one row per cell."""
    records = []
    for method in methods:
        for d in d_values:
            for n in n_values:
                res = null_experiment(n, d, iters, alpha=alpha, k=k, method=method, seed=seed,
                                      max_workers=max_workers, progress=progress,
                                      flawed_threshold=flawed_threshold)
                records.append({"method": method, "d": d, "n": n, "iters": iters,
                                "mean_fpr": res.mean, "stderr": res.stderr})
    return pd.DataFrame.from_records(records)


def timing_grid(n_values: Sequence[int], d_values: Sequence[int], methods: Sequence[str],
                repeats: int = C.TIMING_REPEATS, k: int = C.NULL_K, alpha: float = C.NULL_ALPHA,
                seed: int = C.DEFAULT_SEED, progress: bool = False,
                flawed_threshold: bool = C.NULL_FLAWED_THRESHOLD) -> pd.DataFrame:
    """Median wall-clock seconds over `repeats` runs for every (n, d, method)."""
    if not n_values or not d_values or not methods:
        raise ConfigError("timing grid needs at least one n, one d and one method")
    for method in methods:
        if method not in C.NULL_METHODS:
            raise ConfigError(f"unknown method {method!r}; expected one of {C.NULL_METHODS}")

    cells = [(n, d, m) for d in d_values for n in n_values for m in methods]
    records = []
    for n, d, method in tqdm(cells, disable=not progress, desc="timing"):
        rng = np.random.Generator(np.random.PCG64(seed))
        data = rng.standard_normal((n, d))
        samples = []
        for _ in range(repeats):
            started = time.perf_counter()
            _run_method(method, data, alpha, k, flawed_threshold)
            samples.append(time.perf_counter() - started)
        records.append({"n": n, "d": d, "method": method, "seconds": float(np.median(samples))})
        logger.info("timing n=%d d=%d %s: %.4fs", n, d, method, records[-1]["seconds"])
    return pd.DataFrame.from_records(records)


def loglog_slopes(table: pd.DataFrame) -> pd.DataFrame:
    """Slope of log(seconds) against log(n) for every (d, method) with two or more n values."""
    records = []
    for (d, method), group in table.groupby(["d", "method"], sort=True):
        if group["n"].nunique() < 2:
            continue
        fit = stats.linregress(np.log(group["n"].to_numpy(float)), np.log(group["seconds"].to_numpy(float)))
        records.append({"d": d, "method": method, "slope": float(fit.slope)})
    return pd.DataFrame.from_records(records, columns=["d", "method", "slope"])


def scenario_suite(names: Sequence[str], seeds: Iterable[int], k: int = C.DEFAULT_K,
                   alpha: float = C.DEFAULT_ALPHA, progress: bool = False,
                   flawed_threshold: bool = True) -> pd.DataFrame:
    """
    Recall and false positives of stray and both HDoutliers versions per scenario and seed.
    The baseline runs with its original threshold unless flawed_threshold=False.
    """
    records = []
    seeds = list(seeds)
    if not seeds:
        raise InsufficientDataError("scenario suite needs at least one seed")
    cfg = StrayConfig(k=k, alpha=alpha)
    for name in names:
        for seed in tqdm(seeds, disable=not progress, desc=f"scenario {name}"):
            ds = scenario(name, seed)
            runs = {
                "stray": detect(ds.data, cfg).flags,
                "hd_v1": hdoutliers_detect(ds.data, alpha=alpha, use_clustering=False,
                                           flawed_threshold=flawed_threshold).flags,
                "hd_v2": hdoutliers_detect(ds.data, alpha=alpha, use_clustering=True,
                                           flawed_threshold=flawed_threshold).flags,
            }
            for method, flags in runs.items():
                recall, fpr, fp = recall_and_fpr(flags, ds.planted_anomaly_rows)
                records.append({"scenario": name, "seed": seed, "method": method,
                                "recall": recall, "fpr": fpr, "false_positives": fp})
    return pd.DataFrame.from_records(records)
