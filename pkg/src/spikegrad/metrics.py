"""Run metrics accumulation, CSV emission, and the computational-cost metric."""

import warnings
from dataclasses import dataclass, field

CSV_HEADER = "iteration,epoch,batch_loss,batch_accuracy,test_accuracy,wall_ms"


@dataclass
class MetricsRow:
    iteration: int
    epoch: int
    batch_loss: float
    batch_accuracy: float
    test_accuracy: float = None  # None when no evaluation ran at this iteration
    wall_ms: float = 0.0


@dataclass
class RunMetrics:
    """Per-iteration training records, iteration indices strictly increasing."""

    rows: list = field(default_factory=list)

    def append(self, row):
        if self.rows and row.iteration <= self.rows[-1].iteration:
            raise ValueError(
                f"iteration {row.iteration} not greater than previous {self.rows[-1].iteration}"
            )
        if not (0.0 <= row.batch_accuracy <= 1.0):
            raise ValueError(f"batch accuracy {row.batch_accuracy} outside [0, 1]")
        if row.test_accuracy is not None and not (0.0 <= row.test_accuracy <= 1.0):
            raise ValueError(f"test accuracy {row.test_accuracy} outside [0, 1]")
        self.rows.append(row)


@dataclass(frozen=True)
class ComplexityModel:
    """Input / hidden / output neuron counts of a two-layer network."""

    l: int
    m: int
    n: int

    def __post_init__(self):
        if min(self.l, self.m, self.n) <= 0:
            raise ValueError(f"neuron counts must be positive, got {self}")


def epoch_complexity(model):
    """Per-epoch operation count: forward l*m + m*n plus feedback n*m + m*l."""
    return model.l * model.m + model.m * model.n + model.n * model.m + model.m * model.l


def first_attainment_epochs(error_trajectory, err_levels):
    """1-based epoch at which each error level is first reached (<=), else None.

    Exact equality of a real-valued trajectory with a level is measure-zero,
    so attainment means first crossing at or below the level.
    """
    epochs = []
    for level in err_levels:
        hit = None
        for i, err in enumerate(error_trajectory):
            if err <= level:
                hit = i + 1
                break
        epochs.append(hit)
    return epochs


def computational_cost(error_trajectory, err_levels, complexity):
    """Mean first-attainment epoch across reachable levels, times complexity.

    Levels the trajectory never reaches are excluded with a warning; if no
    level is ever reached the cost is undefined and a ValueError is raised.
    """
    error_trajectory = list(error_trajectory)
    err_levels = list(err_levels)
    if not error_trajectory:
        raise ValueError("error trajectory is empty")
    if not err_levels:
        raise ValueError("no error levels given")
    epochs = first_attainment_epochs(error_trajectory, err_levels)
    reached = [e for e in epochs if e is not None]
    if not reached:
        raise ValueError(f"none of the error levels {err_levels} is ever reached")
    unreached = len(epochs) - len(reached)
    if unreached:
        warnings.warn(
            f"{unreached} error level(s) never reached; excluded from the cost mean",
            stacklevel=2,
        )
    return (sum(reached) / len(reached)) * complexity


def _fmt(x):
    return f"{x:.17g}"


def emit_csv(metrics, sink):
    """Write the metrics table: header then one row per record.

    Reals carry 17 significant digits so a parse round-trips exactly; an
    absent test accuracy becomes an empty field. UTF-8 text, LF endings.
    """
    sink.write(CSV_HEADER + "\n")
    for row in metrics.rows:
        test = "" if row.test_accuracy is None else _fmt(row.test_accuracy)
        sink.write(
            f"{row.iteration},{row.epoch},{_fmt(row.batch_loss)},"
            f"{_fmt(row.batch_accuracy)},{test},{_fmt(row.wall_ms)}\n"
        )


def parse_csv(lines):
    """Inverse of emit_csv: iterable of lines -> RunMetrics."""
    from .errors import DataFormatError

    it = iter(lines)
    try:
        header = next(it).rstrip("\n")
    except StopIteration:
        raise DataFormatError("metrics CSV is empty") from None
    if header != CSV_HEADER:
        raise DataFormatError(f"unexpected metrics CSV header: {header!r}")
    metrics = RunMetrics()
    for lineno, line in enumerate(it, start=2):
        line = line.rstrip("\n")
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise DataFormatError(f"metrics CSV line {lineno}: expected 6 fields, got {len(parts)}")
        try:
            metrics.append(
                MetricsRow(
                    iteration=int(parts[0]),
                    epoch=int(parts[1]),
                    batch_loss=float(parts[2]),
                    batch_accuracy=float(parts[3]),
                    test_accuracy=None if parts[4] == "" else float(parts[4]),
                    wall_ms=float(parts[5]),
                )
            )
        except ValueError as exc:
            raise DataFormatError(f"metrics CSV line {lineno}: {exc}") from None
    return metrics
