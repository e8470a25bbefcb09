"""KPI computation, recipe validation and one-way ANOVA.

Production rate is counted over fixed windows of product-completion events.
Recipe validation compares measured KPIs against their targets as a weighted
ratio; a candidate recipe is accepted when the ratio meets the acceptance
threshold. The ANOVA p-value comes from the F-distribution survival function,
evaluated through the regularized incomplete beta function with a modified
Lentz continued fraction.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .errors import InvalidParameterError, UndefinedStatisticError

SHORT_TERM = "short_term"
LONG_TERM = "long_term"

# Long-term evaluation extends the configured window by this factor.
LONG_TERM_MULTIPLE = 3


@dataclass(frozen=True)
class KpiSeries:
    """Timestamped samples of one metric, e.g. production rate in prod/min."""

    metric: str
    samples: tuple[tuple[float, float], ...]  # (timestamp seconds, value)
    window_minutes: float

    def __post_init__(self):
        if self.window_minutes <= 0:
            raise InvalidParameterError("window must be positive")
        timestamps = [t for t, _ in self.samples]
        if any(b <= a for a, b in zip(timestamps, timestamps[1:])):
            raise InvalidParameterError("sample timestamps must be strictly increasing")

    def values(self) -> list[float]:
        return [v for _, v in self.samples]


def production_rate(
    events: Sequence[float],
    window_minutes: float,
    start: float = 0.0,
    end: Optional[float] = None,
) -> KpiSeries:
    """Per-window production rate from completion timestamps (seconds).

    Each sample is the event count in one window divided by the window length
    in minutes; an empty window reads as zero production, not as a gap. The
    sample timestamp is the window end.
    """
    if window_minutes <= 0:
        raise InvalidParameterError("window must be positive")
    events = sorted(events)
    if end is None:
        end = events[-1] if events else start
    span = max(0.0, end - start)
    window_s = window_minutes * 60.0
    count = max(1, math.ceil((span - 1e-9) / window_s)) if span > 0 else 1
    samples = []
    for i in range(count):
        lo = start + i * window_s
        hi = lo + window_s
        in_window = sum(1 for t in events if lo < t <= hi or (i == 0 and t == lo))
        samples.append((hi, in_window / window_minutes))
    return KpiSeries(metric="production_rate", samples=tuple(samples), window_minutes=window_minutes)


def moving_average(series: KpiSeries, n: int) -> KpiSeries:
    """Trailing mean over the last min(n, available) samples, same timestamps."""
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise InvalidParameterError(f"moving average span must be an integer >= 1, got {n!r}")
    values = series.values()
    smoothed = []
    for i, (timestamp, _) in enumerate(series.samples):
        window = values[max(0, i - n + 1): i + 1]
        smoothed.append((timestamp, sum(window) / len(window)))
    return KpiSeries(
        metric=f"{series.metric}_ma{n}",
        samples=tuple(smoothed),
        window_minutes=series.window_minutes,
    )


@dataclass(frozen=True)
class ValidationVerdict:
    k_v: float
    threshold: float
    accepted: bool
    horizon: str = SHORT_TERM

    def __post_init__(self):
        if self.horizon not in (SHORT_TERM, LONG_TERM):
            raise InvalidParameterError(f"unknown horizon {self.horizon!r}")
        if self.accepted != (self.k_v >= self.threshold):
            raise InvalidParameterError("verdict flag contradicts its own numbers")


def validate_rule(
    current: Sequence[float],
    targets: Sequence[float],
    kpi_weights: Optional[Sequence[float]] = None,
    threshold: float = 1.0,
    horizon: str = SHORT_TERM,
) -> ValidationVerdict:
    """Weighted KPI-to-target ratio; accepted when it reaches the threshold.

    The default threshold of 1.0 reads as "meets the estimation".
    """
    current = list(current)
    targets = list(targets)
    weights = list(kpi_weights) if kpi_weights is not None else [1.0] * len(current)
    if not current:
        raise InvalidParameterError("at least one KPI is required")
    if len(current) != len(targets) or len(current) != len(weights):
        raise InvalidParameterError(
            f"misaligned inputs: {len(current)} KPIs, {len(targets)} targets, "
            f"{len(weights)} weights"
        )
    for target in targets:
        if target <= 0:
            raise InvalidParameterError(f"KPI target must be positive, got {target!r}")
    for weight in weights:
        if not 0.0 <= weight <= 1.0:
            raise InvalidParameterError(f"KPI weight must be in [0, 1], got {weight!r}")
    k_v = sum(c * w / t for c, w, t in zip(current, weights, targets)) / len(current)
    return ValidationVerdict(k_v=k_v, threshold=threshold, accepted=k_v >= threshold, horizon=horizon)


# ---------------------------------------------------------------------------
# CSV import/export: `timestamp,value` per line, header included.
# For completion-event traces the value column is the cumulative product count.

def write_events_csv(events: Sequence[float], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["timestamp", "value"])
        for index, timestamp in enumerate(sorted(events), start=1):
            writer.writerow([repr(float(timestamp)), index])


def read_events_csv(path) -> list[float]:
    return [timestamp for timestamp, _ in _read_timestamp_value(path)]


def write_series_csv(series: KpiSeries, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["timestamp", "value"])
        for timestamp, value in series.samples:
            writer.writerow([repr(float(timestamp)), repr(float(value))])


def read_series_csv(path, metric: str = "production_rate", window_minutes: float = 1.0) -> KpiSeries:
    samples = tuple(_read_timestamp_value(path))
    return KpiSeries(metric=metric, samples=samples, window_minutes=window_minutes)


def _read_timestamp_value(path) -> list[tuple[float, float]]:
    path = Path(path)
    rows: list[tuple[float, float]] = []
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["timestamp", "value"]:
            raise InvalidParameterError(
                f"{path}: expected header 'timestamp,value', got {header!r}"
            )
        for number, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError) as err:
                raise InvalidParameterError(f"{path}:{number}: bad sample row: {err}") from err
    return rows


# ---------------------------------------------------------------------------
# F distribution via the regularized incomplete beta function

_BETACF_MAX_ITER = 500
_BETACF_EPS = 1e-14
_FPMIN = 1e-300


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function, modified Lentz scheme."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _BETACF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _BETACF_EPS:
            return h
    raise UndefinedStatisticError(
        f"incomplete beta continued fraction did not converge for a={a}, b={b}, x={x}"
    )


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) with relative error well below 1e-10.

    Uses the symmetric identity I_x(a,b) = 1 - I_(1-x)(b,a) when x lies past
    (a+1)/(a+b+2), where the continued fraction converges poorly.
    """
    if a <= 0 or b <= 0:
        raise InvalidParameterError(f"beta parameters must be positive, got a={a}, b={b}")
    if x < 0.0 or x > 1.0:
        raise InvalidParameterError(f"x must be in [0, 1], got {x!r}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def f_survival(f_stat: float, df_between: float, df_within: float) -> float:
    """P(F >= f_stat) for an F(df_between, df_within) distribution."""
    if df_between <= 0 or df_within <= 0:
        raise InvalidParameterError("degrees of freedom must be positive")
    if f_stat < 0:
        raise InvalidParameterError(f"F statistic must be non-negative, got {f_stat!r}")
    if f_stat == 0.0:
        return 1.0
    x = df_within / (df_within + df_between * f_stat)
    return regularized_incomplete_beta(df_within / 2.0, df_between / 2.0, x)


@dataclass(frozen=True)
class AnovaResult:
    f_stat: float
    p_value: float
    df_between: int
    df_within: int


def anova_one_way(groups: Sequence[Sequence[float]]) -> AnovaResult:
    """Classical one-way ANOVA over two or more sample groups."""
    groups = [list(g) for g in groups]
    if len(groups) < 2:
        raise InvalidParameterError("ANOVA needs at least two groups")
    for i, group in enumerate(groups):
        if len(group) < 2:
            raise InvalidParameterError(f"group {i} needs at least two samples")
    all_values = [v for group in groups for v in group]
    n_total = len(all_values)
    grand_mean = sum(all_values) / n_total
    if all(v == all_values[0] for v in all_values):
        raise UndefinedStatisticError("all samples identical: F statistic is undefined")
    ss_between = sum(
        len(group) * (sum(group) / len(group) - grand_mean) ** 2 for group in groups
    )
    ss_within = sum(
        (v - sum(group) / len(group)) ** 2 for group in groups for v in group
    )
    df_between = len(groups) - 1
    df_within = n_total - len(groups)
    if ss_within == 0.0:
        raise UndefinedStatisticError("zero within-group variance: F statistic is undefined")
    f_stat = (ss_between / df_between) / (ss_within / df_within)
    return AnovaResult(
        f_stat=f_stat,
        p_value=f_survival(f_stat, df_between, df_within),
        df_between=df_between,
        df_within=df_within,
    )
