"""Netlist-level scoring: NED, batch reports, and histograms.

NED normalizes the graph edit distance by the golden circuit's total count
of devices, nets, and ports (ports counted per binding, before any
indistinguishable-port renaming). That denominator is the cost of building
the golden graph from nothing, so an empty candidate scores exactly 1.0.
A case counts as a success only when the solver proves a distance of zero.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from .ged import GedResult, ged
from .graph import netlist_to_graph
from .netlist import Netlist


def max_error_count(golden: Netlist) -> int:
    """Devices + nets + port bindings of the golden netlist."""
    return len(golden.devices) + len(golden.net_names()) + golden.port_count()


def ned(golden: Netlist, candidate: Netlist, budget: float = 60.0) -> tuple[Fraction, GedResult]:
    """Normalized edit distance of candidate against golden.

    Exact as a Fraction; the paired GedResult carries the raw cost and
    whether the search proved optimality within budget.
    """
    denom = max_error_count(golden)
    if denom == 0:
        raise ValueError("golden netlist is empty; NED undefined")
    result = ged(netlist_to_graph(candidate), netlist_to_graph(golden), budget=budget)
    return Fraction(result.cost, denom), result


@dataclass(frozen=True)
class EvalCase:
    case_id: str
    cost: int
    optimal: bool
    ned: Fraction
    elapsed: float

    @property
    def success(self) -> bool:
        return self.cost == 0 and self.optimal


@dataclass(frozen=True)
class EvalReport:
    cases: tuple[EvalCase, ...]
    bucket_width: float = 0.1

    @property
    def mean_ned(self) -> float:
        return float(sum(c.ned for c in self.cases) / len(self.cases))

    @property
    def success_rate(self) -> float:
        return sum(c.success for c in self.cases) / len(self.cases)

    def histogram(self) -> list[tuple[float, float, int]]:
        """Buckets [0], (0, w], (w, 2w], ..., (1-w, 1], (1, inf)."""
        w = Fraction(self.bucket_width).limit_denominator(1000)
        n = int(1 / w)
        edges = [w * i for i in range(n + 1)]
        counts = [0] * (n + 2)
        for case in self.cases:
            if case.ned == 0:
                counts[0] += 1
            elif case.ned > 1:
                counts[-1] += 1
            else:
                for k in range(1, n + 1):
                    if case.ned <= edges[k]:
                        counts[k] += 1
                        break
        rows = [(0.0, 0.0, counts[0])]
        rows += [(float(edges[k - 1]), float(edges[k]), counts[k]) for k in range(1, n + 1)]
        rows.append((1.0, float("inf"), counts[-1]))
        return rows

    def to_json(self) -> str:
        doc = {
            "cases": [
                {
                    "id": c.case_id,
                    "cost": c.cost,
                    "optimal": c.optimal,
                    "ned": float(c.ned),
                    "elapsed_ms": round(c.elapsed * 1000.0, 3),
                }
                for c in self.cases
            ],
            "mean_ned": self.mean_ned,
            "success_rate": self.success_rate,
        }
        return json.dumps(doc, indent=2) + "\n"

    def histogram_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["bucket_lo", "bucket_hi", "count"])
        for lo, hi, count in self.histogram():
            writer.writerow([lo, "inf" if hi == float("inf") else hi, count])
        return buf.getvalue()


def _eval_one(args: tuple[str, Netlist, Netlist, float]) -> EvalCase:
    case_id, golden, candidate, budget = args
    value, result = ned(golden, candidate, budget=budget)
    return EvalCase(case_id, result.cost, result.optimal, value, result.elapsed)


def batch_evaluate(cases, budget: float = 60.0, workers: int = 1,
                   ids: list[str] | None = None, bucket_width: float = 0.1) -> EvalReport:
    """Score a batch of (golden, candidate) pairs.

    Results are ordered by case index regardless of worker count, so the
    report is deterministic up to timing fields.
    """
    cases = list(cases)
    if not cases:
        raise ValueError("no cases to evaluate")
    if ids is None:
        ids = [f"case{i:04d}" for i in range(len(cases))]
    jobs = [(ids[i], golden, candidate, budget) for i, (golden, candidate) in enumerate(cases)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_eval_one, jobs))
    else:
        results = [_eval_one(job) for job in jobs]
    return EvalReport(tuple(results), bucket_width=bucket_width)
