import argparse
import io
import json
import logging
import os
import sys
from pathlib import Path
from typing import IO, Iterator, Optional, Sequence, TextIO

import numpy as np
import pandas as pd

from src import config as C
from src.core import AnomalyReport, StrayConfig, detect
from src.detection.matrix import DataMatrix
from src.detection.threshold import spacing_goodness_of_fit, standardized_spacings
from src.errors import ConfigError, DataValidationError, InsufficientDataError, StrayError
from src.streaming import WindowReport, WindowSpec, detect_stream
from src.synth import fpr_table, loglog_slopes, scenario, timing_grid

logger = logging.getLogger(__name__)


class UsageError(Exception):
    """Raised by the argument parser instead of exiting."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        raise UsageError(f"{self.prog}: {message}")


# --- Input ---

def _is_numeric(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_numeric_csv(source: TextIO) -> DataMatrix:
    """
    Comma-separated numbers, one observation per line. A first line with any
    non-numeric cell is taken as a header; blank lines are skipped. Errors
    name the file line and the 1-based column of the offending cell.
    """
    try:
        frame = pd.read_csv(source, header=None, dtype=str, keep_default_na=False,
                            skip_blank_lines=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise DataValidationError("input contains no data") from None
    except pd.errors.ParserError as exc:
        raise DataValidationError(f"ragged rows: {exc}") from None

    cells = frame.apply(lambda col: col.str.strip())
    blank = (cells.isna() | cells.eq("")).all(axis=1)
    cells = cells[~blank]
    # 1-based line of every remaining row in the source
    lines = cells.index.to_numpy() + 1

    if len(cells) and not all(_is_numeric(str(c)) for c in cells.iloc[0]):
        cells, lines = cells.iloc[1:], lines[1:]
    if cells.empty:
        raise DataValidationError("input contains a header but no data rows")

    missing = cells.isna().to_numpy()
    if missing.any():
        r, c = np.argwhere(missing)[0]
        raise DataValidationError(f"ragged rows: line {lines[r]} has no value in column {c + 1}",
                                  row=int(r), column=int(c))

    numeric = cells.apply(lambda col: col.map(_is_numeric)).to_numpy()
    if not numeric.all():
        r, c = np.argwhere(~numeric)[0]
        raise DataValidationError(
            f"non-numeric cell at line {lines[r]}, column {c + 1}: {cells.iat[r, c]!r}",
            row=int(r), column=int(c),
        )
    values = cells.to_numpy(dtype=str).astype(np.float64)
    finite = np.isfinite(values)
    if not finite.all():
        r, c = np.argwhere(~finite)[0]
        raise DataValidationError(
            f"non-finite cell at line {lines[r]}, column {c + 1}: {cells.iat[r, c]!r}",
            row=int(r), column=int(c),
        )
    return DataMatrix(values)


def _open_input(path: Optional[str]) -> TextIO:
    if path in (None, "-"):
        return sys.stdin
    return open(path, "r", encoding="utf-8", newline="")


def _stream_rows(source: TextIO) -> Iterator[np.ndarray]:
    """Yield numeric rows from newline-delimited text as they arrive."""
    width = None
    for lineno, line in enumerate(source, start=1):
        text = line.strip()
        if not text:
            continue
        cells = [c.strip() for c in text.split(",")]
        if lineno == 1 and not all(_is_numeric(c) for c in cells):
            continue
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise DataValidationError(f"ragged rows: line {lineno} has {len(cells)} fields, expected {width}",
                                      row=lineno - 1)
        for col, cell in enumerate(cells):
            if not _is_numeric(cell):
                raise DataValidationError(f"non-numeric cell at line {lineno}, column {col + 1}: {cell!r}",
                                          row=lineno - 1, column=col)
        row = np.array([float(c) for c in cells])
        if not np.all(np.isfinite(row)):
            raise DataValidationError(f"non-finite entry at line {lineno}", row=lineno - 1)
        yield row


# --- Output ---

def _emit_table(frame: pd.DataFrame, out: IO[str], fmt: str, header: Optional[dict] = None) -> None:
    if fmt == "json":
        payload = {"header": header, "rows": json.loads(frame.to_json(orient="records"))}
        if header is None:
            payload.pop("header")
        out.write(json.dumps(payload) + "\n")
        return
    if header is not None:
        out.write("# " + ",".join(f"{k}={_fmt_value(v)}" for k, v in header.items()) + "\n")
    frame.to_csv(out, index=False, float_format="%.17g", lineterminator="\n")


def _fmt_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _report_frame(report: AnomalyReport, row_ids: Optional[np.ndarray] = None) -> pd.DataFrame:
    frame = report.to_frame(row_ids)
    frame["flag"] = frame["flag"].astype(int)
    return frame


def _emit_window(win: WindowReport, out: IO[str], fmt: str) -> None:
    header = {"window": win.window_id, "start": win.start, "end": win.end, **win.report.header()}
    _emit_table(_report_frame(win.report, win.rows), out, fmt, header)
    out.flush()


# --- Subcommands ---

def _config_from(args: argparse.Namespace) -> StrayConfig:
    return StrayConfig(
        k=args.k,
        alpha=args.alpha,
        search_method=args.method,
        normalize="none" if args.no_normalize else "unitize",
        start_proportion=args.p,
        tail_count=args.tn,
        eps=args.eps,
    )


def _cmd_detect(args: argparse.Namespace, out: IO[str]) -> int:
    cfg = _config_from(args)
    source = _open_input(args.input)
    try:
        data = read_numeric_csv(source)
    finally:
        if source is not sys.stdin:
            source.close()
    report = detect(data, cfg)
    _emit_table(_report_frame(report), out, args.format, report.header())
    if args.fail_on_anomaly and report.n_flagged:
        return C.EXIT_ANOMALY
    return C.EXIT_OK


def _cmd_stream(args: argparse.Namespace, out: IO[str]) -> int:
    cfg = _config_from(args)
    spec = WindowSpec(width=args.window, step=args.step or args.window)
    source = _open_input(args.input)
    flagged = 0
    try:
        for win in detect_stream(_stream_rows(source), cfg, spec):
            flagged += win.report.n_flagged
            _emit_window(win, out, args.format)
    finally:
        if source is not sys.stdin:
            source.close()
    if args.fail_on_anomaly and flagged:
        return C.EXIT_ANOMALY
    return C.EXIT_OK


def _cmd_scenario(args: argparse.Namespace, out: IO[str]) -> int:
    ds = scenario(args.name, args.seed)
    if args.output:
        labels = ds.to_csv(args.output, args.labels)
        logger.info("scenario %s (seed %d): %d rows -> %s, labels -> %s",
                    args.name, args.seed, ds.data.n, args.output, labels)
        return C.EXIT_OK
    columns = [f"x{j + 1}" for j in range(ds.data.d)]
    pd.DataFrame(ds.data.values, columns=columns).to_csv(out, index=False, float_format="%.17g",
                                                         lineterminator="\n")
    if args.labels:
        pd.DataFrame({"row_id": np.arange(ds.data.n), "is_planted": ds.labels.astype(int)}).to_csv(
            args.labels, index=False)
    return C.EXIT_OK


def _cmd_fpr(args: argparse.Namespace, out: IO[str]) -> int:
    table = fpr_table(args.n, args.d, args.method, args.iters, alpha=args.alpha, k=args.k,
                      seed=args.seed, max_workers=args.workers, progress=args.progress,
                      flawed_threshold=args.flawed_threshold)
    _emit_table(table, out, args.format, {"alpha": args.alpha, "k": args.k, "iters": args.iters,
                                          "seed": args.seed, "flawed_threshold": args.flawed_threshold})
    return C.EXIT_OK


def _cmd_bench(args: argparse.Namespace, out: IO[str]) -> int:
    table = timing_grid(args.n, args.d, args.method, repeats=args.repeats, k=args.k, seed=args.seed,
                        progress=args.progress, flawed_threshold=args.flawed_threshold)
    slopes = loglog_slopes(table)
    merged = table.merge(slopes, on=["d", "method"], how="left")
    _emit_table(merged, out, args.format, {"repeats": args.repeats, "k": args.k, "seed": args.seed})
    return C.EXIT_OK


def _cmd_spacings(args: argparse.Namespace, out: IO[str]) -> int:
    if args.input:
        source = _open_input(args.input)
        try:
            data = read_numeric_csv(source)
        finally:
            if source is not sys.stdin:
                source.close()
        if data.d != 1:
            raise DataValidationError(f"spacings expects a single column, got {data.d}")
        samples = [data.values[:, 0]]
    else:
        rng = np.random.Generator(np.random.PCG64(args.seed))
        samples = (rng.standard_normal(args.n) for _ in range(args.replicates))

    diagnostics = [standardized_spacings(s, args.kmax) for s in samples]
    rows = []
    for rep, diag in enumerate(diagnostics):
        for i in range(args.kmax):
            rows.append({"replicate": rep, "rank": i + 1, "order_stat": diag.order_stats[i],
                         "spacing": diag.spacings[i], "standardized": diag.standardized[i]})
    fit = spacing_goodness_of_fit(diagnostics)
    header = {"replicates": len(diagnostics), "kmax": args.kmax, "ks_statistic": fit.statistic,
              "p_value": fit.p_value, "pooled_mean": fit.pooled_mean,
              "max_relative_deviation": fit.max_relative_deviation()}
    _emit_table(pd.DataFrame.from_records(rows), out, args.format, header)
    return C.EXIT_OK


# --- Parser ---

def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return value


def _add_detection_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", nargs="?", default=None, help="CSV file (default: standard input)")
    p.add_argument("--k", type=_positive_int, default=C.DEFAULT_K)
    p.add_argument("--alpha", type=float, default=C.DEFAULT_ALPHA)
    p.add_argument("--method", choices=C.SEARCH_METHODS, default=C.DEFAULT_SEARCH_METHOD)
    p.add_argument("--eps", type=float, default=C.DEFAULT_EPS)
    p.add_argument("--no-normalize", action="store_true")
    p.add_argument("--p", type=float, default=C.DEFAULT_START_PROPORTION)
    p.add_argument("--tn", type=int, default=C.DEFAULT_TAIL_COUNT)
    p.add_argument("--fail-on-anomaly", action="store_true")


def _add_output_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", "-o", default=None, help="output path (default: standard output)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stray", description="k-NN max-gap anomaly detection with an EVT threshold")
    parser.add_argument("--verbose", "-v", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("detect", help="score and flag the rows of a CSV file")
    _add_detection_flags(p)
    _add_output_flags(p)

    p = sub.add_parser("stream", help="sliding-window detection over newline-delimited rows")
    _add_detection_flags(p)
    _add_output_flags(p)
    p.add_argument("--window", type=_positive_int, required=True)
    p.add_argument("--step", type=_positive_int, default=None)

    p = sub.add_parser("scenario", help="write a generated counterexample dataset")
    p.add_argument("name", choices=C.SCENARIO_NAMES)
    p.add_argument("--seed", type=int, default=C.DEFAULT_SEED)
    p.add_argument("--output", "-o", default=None, help="data CSV path (labels go next to it)")
    p.add_argument("--labels", default=None, help="label CSV path")

    p = sub.add_parser("fpr", help="false-positive rate on anomaly-free normal data")
    p.add_argument("--n", type=_positive_int, nargs="+", default=[100])
    p.add_argument("--d", type=_positive_int, nargs="+", default=[1])
    p.add_argument("--alpha", type=float, default=C.NULL_ALPHA)
    p.add_argument("--k", type=_positive_int, default=C.NULL_K)
    p.add_argument("--iters", type=_positive_int, default=1000)
    p.add_argument("--method", choices=C.NULL_METHODS, nargs="+", default=["stray_brute"])
    p.add_argument("--seed", type=int, default=C.DEFAULT_SEED)
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--progress", action="store_true")
    p.add_argument("--flawed-threshold", action="store_true",
                   help="run HDoutliers with its original shifted-window threshold")
    _add_output_flags(p)

    p = sub.add_parser("bench", help="median-of-3 running times over an (n, d, method) grid")
    p.add_argument("--n", type=_positive_int, nargs="+", default=[1000, 2000, 4000])
    p.add_argument("--d", type=_positive_int, nargs="+", default=[10])
    p.add_argument("--method", choices=C.NULL_METHODS, nargs="+", default=["stray_brute"])
    p.add_argument("--repeats", type=_positive_int, default=C.TIMING_REPEATS)
    p.add_argument("--k", type=_positive_int, default=C.NULL_K)
    p.add_argument("--seed", type=int, default=C.DEFAULT_SEED)
    p.add_argument("--progress", action="store_true")
    p.add_argument("--flawed-threshold", action="store_true")
    _add_output_flags(p)

    p = sub.add_parser("spacings", help="standardised spacings of upper order statistics")
    p.add_argument("input", nargs="?", default=None, help="single-column CSV (default: normal draws)")
    p.add_argument("--n", type=_positive_int, default=20000)
    p.add_argument("--replicates", type=_positive_int, default=200)
    p.add_argument("--kmax", type=_positive_int, default=10)
    p.add_argument("--seed", type=int, default=C.DEFAULT_SEED)
    _add_output_flags(p)

    return parser


_COMMANDS = {
    "detect": _cmd_detect,
    "stream": _cmd_stream,
    "scenario": _cmd_scenario,
    "fpr": _cmd_fpr,
    "bench": _cmd_bench,
    "spacings": _cmd_spacings,
}


def _configure_logging(verbose: bool) -> None:
    level = logging.INFO if verbose else os.environ.get("STRAY_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=level, stream=sys.stderr, format="[%(levelname)s] %(name)s: %(message)s")


def run_cli(argv: Optional[Sequence[str]] = None, stdout: Optional[IO[str]] = None) -> int:
    """Parse `argv`, run one subcommand and return the process exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return C.EXIT_USAGE
    except SystemExit as exc:
        # --help
        return C.EXIT_OK if exc.code in (0, None) else C.EXIT_USAGE

    _configure_logging(args.verbose)
    out_path = getattr(args, "output", None) if args.command != "scenario" else None
    out: IO[str] = stdout or sys.stdout
    buffer = io.StringIO() if out_path else None

    try:
        status = _COMMANDS[args.command](args, buffer or out)
    except ConfigError as exc:
        sys.stderr.write(f"stray {args.command}: {exc}\n")
        return C.EXIT_USAGE
    except (DataValidationError, InsufficientDataError, OSError) as exc:
        sys.stderr.write(f"stray {args.command}: {exc}\n")
        return C.EXIT_DATA
    except StrayError as exc:
        cause = exc.__cause__
        sys.stderr.write(f"stray {args.command}: {exc}\n")
        return C.EXIT_USAGE if isinstance(cause, ConfigError) else C.EXIT_DATA

    if buffer is not None:
        Path(out_path).write_text(buffer.getvalue(), encoding="utf-8")
    return status
