"""Rank-then-aggregate scoring across solutions, cases, regions and metrics.

For every (case, region, metric) key the solutions are ranked 1..P (DSC
descending, HD95 ascending, ties averaged); a solution's final score is the
mean normalized rank over all keys, 0 best and 1 worst.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

from scipy.stats import rankdata

from .errors import ValidationError
from .regions import REGIONS

METRICS = ("DSC", "HD95")


@dataclass(frozen=True)
class MetricTable:
    solutions: list[str]
    cases: list[str]
    entries: dict  # (solution, case, region_name, metric) -> float

    def keys(self):
        for case in self.cases:
            for region in REGIONS:
                for metric in METRICS:
                    yield case, region.value, metric

    def validate(self):
        missing = []
        for case, region, metric in self.keys():
            for sol in self.solutions:
                key = (sol, case, region, metric)
                if key not in self.entries:
                    missing.append(key)
                elif math.isnan(self.entries[key]):
                    raise ValidationError(f"NaN entry at {key}")
        if missing:
            raise ValidationError(f"incomplete table, missing entries: {missing[:10]}"
                                  + ("..." if len(missing) > 10 else ""))


@dataclass(frozen=True)
class RankingResult:
    normalized_rank: dict  # solution -> [0, 1]
    per_key_ranks: dict  # (solution, case, region, metric) -> fractional rank


def rank_solutions(table: MetricTable, normalization: str = "minus_one") -> RankingResult:
    """Aggregate fractional ranks into a normalized score per solution.

    normalization: "minus_one" -> (rank - 1) / (P - 1) so best is exactly 0 and
    worst exactly 1; "rank_over_p" -> rank / P.
    """
    if normalization not in ("minus_one", "rank_over_p"):
        raise ValueError(f"unknown normalization {normalization!r}")
    if not table.solutions:
        raise ValidationError("need at least one solution")
    table.validate()
    p = len(table.solutions)
    per_key_ranks = {}
    totals = {sol: 0.0 for sol in table.solutions}
    n_keys = 0
    for case, region, metric in table.keys():
        values = [table.entries[(sol, case, region, metric)] for sol in table.solutions]
        # lower rank is better: negate DSC so higher DSC ranks first
        keyed = [-v for v in values] if metric == "DSC" else values
        ranks = rankdata(keyed, method="average")
        n_keys += 1
        for sol, rank in zip(table.solutions, ranks):
            per_key_ranks[(sol, case, region, metric)] = float(rank)
            if normalization == "minus_one":
                totals[sol] += 0.0 if p == 1 else (rank - 1.0) / (p - 1.0)
            else:
                totals[sol] += rank / p
    normalized = {sol: totals[sol] / n_keys for sol in table.solutions}
    return RankingResult(normalized, per_key_ranks)


def load_metrics_csv(path, solution_id):
    """Read one solution's metrics CSV (module metrics schema) into table entries."""
    entries = {}
    cases = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            case = row["case_id"]
            if case not in cases:
                cases.append(case)
            region = row["region"]
            entries[(solution_id, case, region, "DSC")] = float(row["dsc"])
            entries[(solution_id, case, region, "HD95")] = float(row["hd95"])
    return cases, entries


def build_table(csv_paths_by_solution: dict) -> MetricTable:
    entries = {}
    all_cases = None
    solutions = sorted(csv_paths_by_solution)
    for sol in solutions:
        cases, sol_entries = load_metrics_csv(csv_paths_by_solution[sol], sol)
        entries.update(sol_entries)
        if all_cases is None:
            all_cases = cases
        elif set(all_cases) != set(cases):
            raise ValidationError(f"solution {sol} covers a different case set")
    return MetricTable(solutions, sorted(all_cases or []), entries)


def write_ranking_csv(path, table: MetricTable, result: RankingResult):
    """Leaderboard CSV: solution_id, normalized_rank, mean_dsc, mean_hd95."""
    rows = []
    for sol in table.solutions:
        dscs = [table.entries[(sol, c, r, "DSC")] for c, r, m in table.keys() if m == "DSC"]
        hds = [table.entries[(sol, c, r, "HD95")] for c, r, m in table.keys() if m == "HD95"]
        rows.append((sol, result.normalized_rank[sol],
                     sum(dscs) / len(dscs), sum(hds) / len(hds)))
    rows.sort(key=lambda r: (r[1], r[0]))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["solution_id", "normalized_rank", "mean_dsc", "mean_hd95"])
        for sol, nr, md, mh in rows:
            writer.writerow([sol, f"{nr:.6f}", f"{md:.6f}", f"{mh:.6f}"])
