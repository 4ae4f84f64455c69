"""Performance laws for sizing a cloud burst.

Two model families drive every sizing decision:

* A log-linear scaling law per environment. Strong-scaling timings of the
  full application fit ``log10(elapsed) = intercept - slope * ln(cores)``,
  which captures the observed sub-linear speedup of synchronized
  timestep codes on both the on-premise cluster and the cloud.
* A linear split law. Small test jobs that run only a vertical slice of
  the domain fit ``elapsed = slope * columns + intercept``, which converts
  a projected overrun in seconds into the number of element columns that
  must migrate off the cluster.

Inversions of these laws (cores for a deadline, columns for a surplus)
return integer ceilings: allocations are whole cores and whole columns,
and rounding up is the conservative direction for a deadline.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

from .errors import CsvFormatError, InsufficientDataError, ModelFormatError

LOG_LAW_LABELS = ("cluster", "cloud")
SPLIT_LABEL = "split"

# Absolute guard for integer ceilings of float expressions. Keeps exact
# analytic boundaries (e.g. a surplus that maps to a whole column count)
# from rounding up one unit on float noise.
_CEIL_EPS = 1e-9


def _ceil_int(value: float) -> int:
    return math.ceil(value - _CEIL_EPS)


@dataclass(frozen=True)
class LogLawModel:
    """Fitted log-law coefficients for one environment."""

    slope: float
    intercept: float
    label: str

    def __post_init__(self):
        if not (self.slope > 0.0) or not math.isfinite(self.slope):
            raise ValueError(f"log law slope must be positive and finite, got {self.slope}")
        if not math.isfinite(self.intercept):
            raise ValueError(f"log law intercept must be finite, got {self.intercept}")
        if self.label not in LOG_LAW_LABELS:
            raise ValueError(f"log law label must be one of {LOG_LAW_LABELS}, got {self.label!r}")


@dataclass(frozen=True)
class SplitModel:
    """Fitted linear cost of running a partial domain, seconds per column."""

    slope: float
    intercept: float
    label: str = SPLIT_LABEL

    def __post_init__(self):
        if not (self.slope > 0.0) or not math.isfinite(self.slope):
            raise ValueError(f"split model slope must be positive and finite, got {self.slope}")
        if not math.isfinite(self.intercept):
            raise ValueError(f"split model intercept must be finite, got {self.intercept}")


@dataclass(frozen=True)
class CalibrationSample:
    """One timing observation: a size (cores or columns) and its elapsed seconds."""

    size: int
    elapsed_seconds: float

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"sample size must be a positive integer, got {self.size}")
        if not (self.elapsed_seconds > 0.0) or not math.isfinite(self.elapsed_seconds):
            raise ValueError(f"elapsed seconds must be positive, got {self.elapsed_seconds}")


def eval_log_law(model: LogLawModel, cores: int) -> float:
    """Predicted log10 of elapsed seconds when running on ``cores`` cores."""
    if cores < 1:
        raise ValueError(f"core count must be >= 1, got {cores}")
    return -model.slope * math.log(cores) + model.intercept


def predicted_seconds(model: LogLawModel, cores: int) -> float:
    """Predicted elapsed seconds, the log law mapped back to linear time."""
    return 10.0 ** eval_log_law(model, cores)


def correction_factor(cloud: LogLawModel, cluster: LogLawModel, cores: int) -> float:
    """Ratio of the two environments' log-times at the same core count.

    Scales a core deficit measured against the cluster law into cloud
    cores, compensating for the cloud's slower per-core performance.
    """
    denominator = eval_log_law(cluster, cores)
    if denominator == 0.0:
        raise ZeroDivisionError(
            f"cluster log law evaluates to zero at {cores} cores; correction factor undefined"
        )
    return eval_log_law(cloud, cores) / denominator


def required_cores(cluster: LogLawModel, deadline_seconds: float) -> int:
    """Smallest core count whose predicted elapsed time fits the deadline.

    Inverts the log law analytically and rounds up; clamped below at one
    core because the law is only meaningful for a live allocation.
    """
    if not (deadline_seconds > 0.0) or not math.isfinite(deadline_seconds):
        raise ValueError(f"deadline must be positive and finite, got {deadline_seconds}")
    exact = math.exp((cluster.intercept - math.log10(deadline_seconds)) / cluster.slope)
    return max(1, _ceil_int(exact))


def cloud_cores(required: int, cluster_cores: int, factor: float) -> int:
    """Cloud cores covering the deficit between required and on-premise cores.

    The deficit is scaled by the correction factor and rounded up; a
    non-positive deficit means the cluster alone suffices, giving zero.
    """
    if cluster_cores < 0:
        raise ValueError(f"cluster core count must be >= 0, got {cluster_cores}")
    if not (factor > 0.0) or not math.isfinite(factor):
        raise ValueError(f"correction factor must be positive and finite, got {factor}")
    deficit = (required - cluster_cores) * factor
    return max(0, _ceil_int(deficit))


def gamma_for_time(model: SplitModel, surplus_seconds: float) -> int:
    """Columns to migrate so the projected overrun is absorbed.

    Inverts the linear split law at ``surplus_seconds`` and rounds up,
    clamped below at zero when the surplus is within the intercept.
    """
    if not math.isfinite(surplus_seconds):
        raise ValueError(f"surplus must be finite, got {surplus_seconds}")
    return max(0, _ceil_int((surplus_seconds - model.intercept) / model.slope))


def _least_squares(points: list[tuple[float, float]]) -> tuple[float, float]:
    """Ordinary least squares through the normal equations: slope, offset."""
    n = len(points)
    mean_x = sum(x for x, _ in points) / n
    mean_y = sum(y for _, y in points) / n
    sxx = sum((x - mean_x) ** 2 for x, _ in points)
    sxy = sum((x - mean_x) * (y - mean_y) for x, y in points)
    slope = sxy / sxx
    return slope, mean_y - slope * mean_x


def _require_spread(samples: list[CalibrationSample]):
    if len({s.size for s in samples}) < 2:
        raise InsufficientDataError(
            f"need at least 2 distinct sizes to fit, got {len(samples)} sample(s) "
            f"over {len({s.size for s in samples})} distinct size(s)"
        )


def fit_log_law(samples: list[CalibrationSample], label: str) -> LogLawModel:
    """Fit the log law to (cores, elapsed) timings.

    The fit is ordinary least squares in the transformed coordinates
    (ln cores, log10 elapsed), so collinear inputs are recovered exactly
    up to float precision.
    """
    _require_spread(samples)
    points = [(math.log(s.size), math.log10(s.elapsed_seconds)) for s in samples]
    gradient, offset = _least_squares(points)
    return LogLawModel(slope=-gradient, intercept=offset, label=label)


def fit_split_model(samples: list[CalibrationSample]) -> SplitModel:
    """Fit the linear split law to (columns, elapsed) timings."""
    _require_spread(samples)
    points = [(float(s.size), s.elapsed_seconds) for s in samples]
    slope, offset = _least_squares(points)
    return SplitModel(slope=slope, intercept=offset)


# --- calibration CSV ingestion -------------------------------------------

_CSV_HEADERS = {
    "loglaw": ("cores", "elapsed_seconds"),
    "split": ("gamma", "elapsed_seconds"),
}


def read_calibration_csv(path: str | os.PathLike, kind: str) -> list[CalibrationSample]:
    """Read timing samples from a two-column CSV.

    ``kind`` selects the expected header: ``loglaw`` wants
    ``cores,elapsed_seconds`` and ``split`` wants ``gamma,elapsed_seconds``.
    Parse failures report the 1-based line number.
    """
    if kind not in _CSV_HEADERS:
        raise ValueError(f"unknown calibration kind {kind!r}")
    expected = _CSV_HEADERS[kind]
    samples = []
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError("empty calibration CSV", line_number=1) from None
        if tuple(cell.strip() for cell in header) != expected:
            raise CsvFormatError(
                f"expected header {','.join(expected)!r} on line 1, got {','.join(header)!r}",
                line_number=1,
            )
        for line_number, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise CsvFormatError(
                    f"expected 2 cells on line {line_number}, got {len(row)}",
                    line_number=line_number,
                )
            try:
                size = int(row[0])
                elapsed = float(row[1])
            except ValueError:
                raise CsvFormatError(
                    f"non-numeric cell on line {line_number}: {row!r}",
                    line_number=line_number,
                ) from None
            try:
                samples.append(CalibrationSample(size=size, elapsed_seconds=elapsed))
            except ValueError as exc:
                raise CsvFormatError(
                    f"bad sample on line {line_number}: {exc}", line_number=line_number
                ) from None
    return samples


# --- model file serialization --------------------------------------------


def format_model(model: LogLawModel | SplitModel) -> str:
    """Serialize a fitted model to the flat key=value block."""
    return (
        f"slope={model.slope!r}\n"
        f"intercept={model.intercept!r}\n"
        f"label={model.label}\n"
    )


def parse_model(text: str) -> LogLawModel | SplitModel:
    """Parse the flat key=value block back into a model.

    The label decides the type: ``split`` yields a SplitModel, the
    environment labels yield a LogLawModel.
    """
    fields = {}
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if "=" not in line:
            raise ModelFormatError(f"expected key=value on line {line_number}, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in ("slope", "intercept", "label"):
            raise ModelFormatError(f"unknown model key {key!r} on line {line_number}")
        if key in fields:
            raise ModelFormatError(f"duplicate model key {key!r} on line {line_number}")
        fields[key] = value.strip()
    missing = {"slope", "intercept", "label"} - set(fields)
    if missing:
        raise ModelFormatError(f"model file missing key(s): {', '.join(sorted(missing))}")
    try:
        slope = float(fields["slope"])
        intercept = float(fields["intercept"])
    except ValueError as exc:
        raise ModelFormatError(f"non-numeric model coefficient: {exc}") from None
    label = fields["label"]
    try:
        if label == SPLIT_LABEL:
            return SplitModel(slope=slope, intercept=intercept)
        if label in LOG_LAW_LABELS:
            return LogLawModel(slope=slope, intercept=intercept, label=label)
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from None
    raise ModelFormatError(f"unknown model label {label!r}")


def save_model(model: LogLawModel | SplitModel, path: str | os.PathLike):
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(format_model(model))


def load_model(path: str | os.PathLike) -> LogLawModel | SplitModel:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_model(handle.read())
