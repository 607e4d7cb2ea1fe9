"""Which slope c in G = c x gives the most negative certificate?

Scans the linear gauge family for the Leighton target at k = 1.672 and
writes the (c, value, err) table to gauge_scan.csv for plotting.
"""

import csv

from sturmcomp.search import leighton_problem, linear_gauge_scan

prob, sin = leighton_problem(1.672, 0.0)
result = linear_gauge_scan(prob.tilde, prob.target, sin, (0.0, 1.5), steps=31, workers=4)

with open("gauge_scan.csv", "w", newline="") as fh:
    w = csv.writer(fh)
    w.writerow(result.CSV_FIELDS)
    w.writerows(result.csv_rows())

print(f"best c = {result.best_c:.6f}, certificate {result.best.value:.4e} ({result.best.verdict})")
print(f"{len(result.table)} rows written to gauge_scan.csv")
