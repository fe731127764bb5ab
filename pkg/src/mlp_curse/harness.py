"""Dimension sweeps, verification runs and bound tables for the CLI."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import bounds, engine, model, verify
from .verify import CheckResult

__all__ = [
    "CSV_HEADER",
    "MODES",
    "SUITES",
    "SweepConfig",
    "SweepRow",
    "parse_point",
    "run_sweep",
    "check_rows",
    "rows_to_csv",
    "run_verify",
    "print_bounds",
]

CSV_HEADER = [
    "d",
    "n",
    "m",
    "reps",
    "estimate",
    "std_error",
    "lower_bound",
    "upper_bound",
    "feasible",
    "nodes",
    "gaussians",
    "wall_ms",
]
MODES = ("error", "moment-fV", "growth")
SUITES = ("variance", "kernel", "density", "control", "pde", "mirror")


def parse_point(text: str) -> tuple[float, Optional[tuple[float, ...]]]:
    """``origin``, ``T@origin`` or ``T@x1,x2,...`` (missing coordinates are 0)."""
    text = text.strip()
    if text == "origin":
        return 0.0, None
    if "@" not in text:
        raise ValueError(f"bad point {text!r}; use 'origin', 'T@origin' or 'T@x1,x2,...'")
    t_text, x_text = text.split("@", 1)
    t = float(t_text)
    if not 0.0 <= t < 1.0:
        raise ValueError(f"point time must lie in [0, 1), got {t}")
    if x_text.strip() == "origin":
        return t, None
    return t, tuple(float(v) for v in x_text.split(","))


@dataclass
class SweepConfig:
    dims: list[int]
    n: int
    m: int = 1
    couple: bool = False
    reps: int = 1000
    seed: int = 0
    t: float = 0.0
    x: Optional[tuple[float, ...]] = None
    mode: str = "error"
    p: float = 0.25
    out: Optional[Path] = None
    threads: Optional[int] = None
    timing: bool = True
    backend: str = "auto"

    def __post_init__(self) -> None:
        if not self.dims:
            raise ValueError("dims must be nonempty")
        if any(d < 1 for d in self.dims):
            raise ValueError("dimensions must be >= 1")
        if any(b <= a for a, b in zip(self.dims, self.dims[1:])):
            raise ValueError("dims must be strictly increasing")
        if self.reps < 2:
            raise ValueError("reps must be >= 2")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.couple:
            if self.n < 1:
                raise ValueError("--couple needs n >= 1")
            self.m = self.n
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.x is not None and len(self.x) > self.dims[0]:
            raise ValueError("explicit point has more coordinates than the smallest dimension")
        # validates n, m and the sample-count guard before any work
        engine.MlpParams(self.n, self.m, master_seed=self.seed)

    def point(self, d: int) -> np.ndarray:
        x = np.zeros(d)
        if self.x is not None:
            x[: len(self.x)] = self.x
        return x


@dataclass
class SweepRow:
    d: int
    n: int
    m: int
    reps: int
    estimate: float
    std_error: float
    lower_bound: Optional[float]
    upper_bound: Optional[float]
    feasible: bool
    nodes: int
    gaussians: int
    wall_ms: Optional[float]
    ratio: Optional[float] = field(default=None)

    def cells(self) -> list[str]:
        def num(v: Optional[float]) -> str:
            return "" if v is None else repr(float(v))

        cells = [
            str(self.d),
            str(self.n),
            str(self.m),
            str(self.reps),
            num(self.estimate),
            num(self.std_error),
            num(self.lower_bound),
            num(self.upper_bound),
            "true" if self.feasible else "false",
            str(self.nodes),
            str(self.gaussians),
            "" if self.wall_ms is None else f"{self.wall_ms:.1f}",
        ]
        if self.ratio is not None:
            cells.append(num(self.ratio))
        return cells


def _bounds_for(mode: str, d: int, n: int, m: int) -> tuple[Optional[float], Optional[float], bool]:
    if n < 1:
        # the estimator is identically zero; no bound applies
        return None, None, False
    if mode == "moment-fV":
        lower = bounds.lower_moment_fV(d, n, m)
        upper = bounds.upper_moment_fV(d, n)
    else:
        lower = bounds.lower_error(d, n, m)
        upper = bounds.upper_error(d, n)
    return lower, upper, lower is not None


def run_sweep(config: SweepConfig) -> list[SweepRow]:
    rows = []
    for d in config.dims:
        spec = model.counterexample(d)
        params = engine.MlpParams(config.n, config.m, master_seed=config.seed)
        x = config.point(d)
        if config.mode == "moment-fV":
            est = engine.second_moment_fV(
                spec, params, config.reps, config.t, x, threads=config.threads, backend=config.backend
            )
        else:
            est = engine.error_l2(
                spec, params, config.reps, config.t, x, threads=config.threads, backend=config.backend
            )
        lower, upper, feasible = _bounds_for(config.mode, d, config.n, config.m)
        rows.append(
            SweepRow(
                d=d,
                n=config.n,
                m=config.m,
                reps=config.reps,
                estimate=est.estimate,
                std_error=est.std_error,
                lower_bound=lower,
                upper_bound=upper,
                feasible=feasible,
                nodes=est.nodes,
                gaussians=est.gaussians,
                wall_ms=est.wall_ms if config.timing else None,
                ratio=est.estimate / d**config.p if config.mode == "growth" else None,
            )
        )
    if config.out is not None:
        path = Path(config.out)
        try:
            path.write_text(rows_to_csv(rows, growth=config.mode == "growth"), newline="")
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
    return rows


def rows_to_csv(rows: Sequence[SweepRow], growth: bool = False) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER + (["ratio"] if growth else []))
    for row in rows:
        writer.writerow(row.cells())
    return buf.getvalue()


def check_rows(config: SweepConfig, rows: Sequence[SweepRow], sigmas: float = 4.0) -> list[str]:
    """Messages for every failed post-run assertion; empty means all pass."""
    failures = []
    for row in rows:
        if row.feasible and row.lower_bound - sigmas * row.std_error > row.estimate:
            failures.append(
                f"d={row.d}: estimate {row.estimate:.6g} below lower bound {row.lower_bound:.6g} "
                f"- {sigmas:g} std errors"
            )
        if row.upper_bound is not None and row.estimate > row.upper_bound:
            failures.append(f"d={row.d}: estimate {row.estimate:.6g} above upper bound {row.upper_bound:.6g}")
    if config.mode == "growth":
        ratios = [row.ratio for row in rows]
        for (d0, r0), (d1, r1) in zip(zip(config.dims, ratios), zip(config.dims[1:], ratios[1:])):
            if not r1 > r0:
                failures.append(f"ratio estimate/d^{config.p} not increasing from d={d0} to d={d1}")
    return failures


def _kernel_check() -> CheckResult:
    worst = math.inf
    notes = []
    for t0 in (0.0, 0.3, 0.9):
        dev = abs(verify.kernel_integral(t0, 1) - 2.0 * (1.0 - t0))
        worst = min(worst, 1e-6 - dev)
    for k in (2, 3):
        coarse = verify.kernel_integral(0.0, k, 48)
        fine = verify.kernel_integral(0.0, k, 96)
        worst = min(worst, 2.0**k + 1e-6 - fine, 1e-4 - abs(fine - coarse))
        notes.append(f"I{k}(0)={fine:.8f}")
    return CheckResult("kernel", worst > 0, worst, " ".join(notes))


def run_verify(suites: Sequence[str] = SUITES, seed: int = 0) -> list[CheckResult]:
    unknown = set(suites) - set(SUITES)
    if unknown:
        raise ValueError(f"unknown suites: {sorted(unknown)}")
    results = []
    for name in SUITES:
        if name not in suites:
            continue
        if name == "variance":
            results.append(verify.check_variance_lemma(seed=seed))
        elif name == "kernel":
            results.append(_kernel_check())
        elif name == "density":
            for j, t in enumerate((0.0, 0.5, 0.9)):
                results.append(verify.check_r_density(t, seed=seed, replication=j))
        elif name == "control":
            results.append(verify.check_control(seed=seed))
        elif name == "pde":
            results.append(verify.check_pde_residuals(seed=seed))
        elif name == "mirror":
            results.append(verify.check_mirror(seed=seed))
    return results


def print_bounds(d: int, n: int, m: int, as_json: bool = False) -> str:
    report = bounds.bound_report(d, n, m)
    fields = report.as_dict()
    if as_json:
        import json

        return json.dumps({k: (None if isinstance(v, float) and math.isinf(v) else v) for k, v in fields.items()})
    return "\n".join(f"{k:<16}{'' if v is None else v}" for k, v in fields.items())
