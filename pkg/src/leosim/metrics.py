"""Per-slot evaluation metrics, smoothing, aggregation across seeds, and CSV output."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .flow import SlotOutcome, network_cost, per_sat_costs

CSV_HEADER = ("slot", "utc_s", "router", "seed", "cost_s", "drop_rate", "throughput_bps",
              "generated_bps", "avg_hops", "avg_delay_s")


@dataclass(frozen=True)
class MetricsRecord:
    slot: int
    cost_s: float
    drop_rate: float
    throughput_bps: float
    generated_bps: float
    avg_hops: float
    avg_delivered_delay_s: float
    utc_s: float = 0.0


def slot_metrics(outcome: SlotOutcome, slot: int = 0, utc_s: float = 0.0,
                 costs: np.ndarray | None = None) -> MetricsRecord:
    """Reduce a slot ledger to its headline numbers.

    ``avg_hops`` counts the links a delivered stream used up to the ground,
    so a direct satellite-to-ground delivery is one hop; the fiber link to the
    internet is not counted.
    """
    generated = float(outcome.generated.sum())
    throughput = 0.0
    hop_sum = 0.0
    delay_sum = 0.0
    for _, rate, delay, hops in outcome.delivered:
        throughput += rate
        hop_sum += rate * (hops - 1)
        delay_sum += rate * delay
    if generated > 0:
        drop_rate = min(max(1.0 - throughput / generated, 0.0), 1.0)
    else:
        drop_rate, throughput = 0.0, 0.0
    if throughput > 0:
        avg_hops = hop_sum / throughput
        avg_delay = delay_sum / throughput
    else:
        avg_hops = avg_delay = 0.0
    if costs is None:
        costs = per_sat_costs(outcome)
    return MetricsRecord(slot, network_cost(outcome, costs), drop_rate, throughput, generated,
                         avg_hops, avg_delay, utc_s)


def running_mean(series: Sequence[float], window_slots: int) -> np.ndarray:
    """Trailing mean over the last ``min(window, i + 1)`` values at each index i."""
    if window_slots < 1:
        raise ValueError("window must be at least one slot")
    x = np.asarray(series, dtype=float)
    c = np.concatenate([[0.0], np.cumsum(x)])
    i = np.arange(1, len(x) + 1)
    lo = np.maximum(i - window_slots, 0)
    return (c[i] - c[lo]) / (i - lo)


def running_mean_start(window_slots: int) -> int:
    """First index worth plotting: half a window must have elapsed."""
    return window_slots // 2


def half_day_window(slot_duration_s: float) -> int:
    return max(1, int(math.floor(43_200.0 / slot_duration_s)))


def aggregate_runs(records: Sequence[Sequence[float]]) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise mean and sample standard deviation across equal-length runs."""
    if not records:
        raise ValueError("no runs to aggregate")
    lengths = {len(r) for r in records}
    if len(lengths) != 1:
        raise ValueError(f"runs have different lengths: {sorted(lengths)}")
    arr = np.asarray(records, dtype=float)
    mean = arr.mean(axis=0)
    std = arr.std(axis=0, ddof=1) if len(arr) > 1 else np.zeros(arr.shape[1])
    return mean, std


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def metrics_csv(rows: Iterable[tuple[str, int, MetricsRecord]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for router, seed, r in rows:
        w.writerow([r.slot, _fmt(r.utc_s), router, seed, _fmt(r.cost_s), _fmt(r.drop_rate),
                    _fmt(r.throughput_bps), _fmt(r.generated_bps), _fmt(r.avg_hops),
                    _fmt(r.avg_delivered_delay_s)])
    return buf.getvalue()


def write_metrics_csv(path, rows: Iterable[tuple[str, int, MetricsRecord]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(metrics_csv(rows))


def read_metrics_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def run_summary(records: Sequence[MetricsRecord], slot_duration_s: float) -> dict:
    if not records:
        return {"slots": 0}
    return {
        "slots": len(records),
        "mean_cost_s": float(np.mean([r.cost_s for r in records])),
        "mean_drop_rate": float(np.mean([r.drop_rate for r in records])),
        "mean_throughput_bps": float(np.mean([r.throughput_bps for r in records])),
        "total_delivered_bits": float(sum(r.throughput_bps for r in records) * slot_duration_s),
        "mean_avg_hops": float(np.mean([r.avg_hops for r in records])),
    }


def relative_reduction(ours: float, theirs: float) -> float:
    """Percent by which ``ours`` is below ``theirs`` (0 when both are zero)."""
    if theirs == 0:
        return 0.0
    return 100.0 * (theirs - ours) / theirs


def comparison_ratios(summaries: dict[str, dict]) -> dict[str, dict[str, dict[str, float]]]:
    """Pairwise cost/drop reductions and throughput gains, in percent, for every router pair."""
    out: dict = {}
    for a, sa in summaries.items():
        for b, sb in summaries.items():
            out.setdefault(a, {})[b] = {
                "cost_reduction_pct": relative_reduction(sa["mean_cost_s"], sb["mean_cost_s"]),
                "drop_reduction_pct": relative_reduction(sa["mean_drop_rate"], sb["mean_drop_rate"]),
                "throughput_gain_pct": -relative_reduction(sa["mean_throughput_bps"], sb["mean_throughput_bps"]),
            }
    return out
