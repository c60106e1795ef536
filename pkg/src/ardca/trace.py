"""Per-pass measurements and their CSV form."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import astuple, dataclass, fields

import numpy as np

from .dual import DualModel, dual_value, primal_value_and_residuals, residual_norms

HEADER = ("solver", "seed", "pass", "primal_obj", "dual_obj", "primal_gap",
          "dual_gap", "eq_violation", "ineq_violation", "wall_ms", "status")


@dataclass(frozen=True)
class TraceRecord:
    solver: str
    seed: int
    passes: float
    primal_obj: float
    dual_obj: float
    primal_gap: float
    dual_gap: float
    eq_violation: float
    ineq_violation: float
    wall_ms: float
    status: str = "ok"

    def replace(self, **kw) -> "TraceRecord":
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.update(kw)
        return TraceRecord(**d)


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def format_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for r in records:
        w.writerow([_fmt(v) for v in astuple(r)])
    return buf.getvalue()


def write_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(format_csv(records))


def read_csv(path) -> list[TraceRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != HEADER:
            raise ValueError(f"{path}: unexpected trace header {header!r}")
        out = []
        for row in reader:
            if len(row) != len(HEADER):
                raise ValueError(f"{path}: malformed row {row!r}")
            out.append(TraceRecord(row[0], int(row[1]), *map(float, row[2:10]), row[10]))
    return out


class Tracer:
    """Collects one :class:`TraceRecord` per measurement.

    Gaps are measured against ``reference = (F_star, D_star)`` when given and
    are NaN otherwise.  Time spent measuring is excluded from ``wall_ms``;
    with ``timing=False`` the column is written as 0 so that traces replay
    byte for byte.  ``primal`` selects which primal point the main records
    describe: the averaged one or the last ``x*(v^k)``.
    """

    def __init__(self, model: DualModel, solver: str, seed: int = 0, reference=None,
                 timing: bool = True, last_solver: str | None = None, primal: str = "avg"):
        if primal not in ("avg", "last"):
            raise ValueError("primal must be 'avg' or 'last'")
        self.model = model
        self.solver = solver
        self.seed = int(seed)
        self.reference = reference
        self.timing = timing
        self.last_solver = last_solver
        self.primal = primal
        self.records: list[TraceRecord] = []
        self.records_last: list[TraceRecord] = []
        self.frozen_primal = None
        self._t0 = time.perf_counter()
        self._excluded = 0.0

    def elapsed_ms(self) -> float:
        if not self.timing:
            return 0.0
        return (time.perf_counter() - self._t0 - self._excluded) * 1e3

    def measure(self, solver, passes, x, u, status="ok") -> TraceRecord:
        F, eq_res, ineq_res = primal_value_and_residuals(self.model.spec, x)
        eq, ineq = residual_norms(self.model, eq_res, ineq_res)
        D = dual_value(self.model, u)
        if self.reference is not None:
            F_star, D_star = self.reference
            pg, dg = F - F_star, D - D_star
        else:
            pg = dg = math.nan
        return TraceRecord(solver, self.seed, float(passes), F, D, pg, dg, eq, ineq,
                           self.elapsed_ms(), status)

    def record(self, passes, x_avg, x_last, u, status="ok"):
        t0 = time.perf_counter()
        x = x_avg if self.primal == "avg" else x_last
        if self.frozen_primal is not None:
            x = self.frozen_primal
        self.records.append(self.measure(self.solver, passes, x, u, status))
        if self.last_solver is not None:
            self.records_last.append(self.measure(self.last_solver, passes, x_last, u, status))
        self._excluded += time.perf_counter() - t0

    def mark_status(self, status: str):
        """Tag the final record(s) with an abort status."""
        for lst in (self.records, self.records_last):
            if lst:
                lst[-1] = lst[-1].replace(status=status)
