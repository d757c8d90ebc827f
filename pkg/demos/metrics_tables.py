"""Recompute precision, recall, F1 and average detection time from raw counts.

All arithmetic is exact until the final half-up rounding to one decimal place.

    python demos/metrics_tables.py
"""

from ckgdetect.evaluation import ConfusionCounts, aggregate_metrics, timing_from_totals

COUNTS = {
    "configuration A": (276, 223, 180),
    "configuration B": (314, 197, 134),
    "configuration C": (348, 128, 105),
}
TOTALS = {
    "configuration A": (6248, 553),
    "configuration B": (7442, 553),
    "configuration C": (8754, 553),
}


def main() -> None:
    print(f"{'':18}{'TP':>5}{'FP':>5}{'FN':>5}{'P':>7}{'R':>7}{'F1':>7}")
    for label, (tp, fp, fn) in COUNTS.items():
        m = aggregate_metrics(ConfusionCounts(tp, fp, fn))
        print(f"{label:18}{tp:>5}{fp:>5}{fn:>5}{m.precision:>7}{m.recall:>7}{m.f1:>7}")
    print()
    print(f"{'':18}{'total(s)':>10}{'contracts':>11}{'ADT(s)':>8}")
    for label, (total, n) in TOTALS.items():
        t = timing_from_totals(total, n)
        print(f"{label:18}{total:>10}{n:>11}{t.adt_seconds:>8}")
    # Degenerate denominators are reported rather than divided by zero.
    print("\nno predictions:", aggregate_metrics(ConfusionCounts(0, 0, 5)))


if __name__ == "__main__":
    main()
