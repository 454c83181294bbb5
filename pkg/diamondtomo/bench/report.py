# SPDX-FileCopyrightText: Magenta ApS <https://magenta.dk>
# SPDX-License-Identifier: MPL-2.0
"""Scaling-law reports for sweep results."""
import csv
import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pydantic  # noqa: E402
import structlog  # noqa: E402
from more_itertools import bucket  # noqa: E402
from scipy import stats  # noqa: E402

from ..exceptions import MalformedResultsError  # noqa: E402
from ..exceptions import PreconditionError  # noqa: E402
from .experiment import CSV_COLUMNS  # noqa: E402
from .experiment import ResultRow  # noqa: E402

logger = structlog.get_logger()

QUANTILES = (0.1, 0.9)


class SweepPoint(pydantic.BaseModel):
    n_copies: int
    trials: int
    median_error: float
    lower_quantile: float
    upper_quantile: float
    success_frequency: float


class SweepReport(pydantic.BaseModel):
    points: list[SweepPoint]
    slope: float
    slope_stderr: float
    intercept: float

    def text(self) -> str:
        lines = [
            "N\ttrials\tmedian\tq10\tq90\tsuccess",
            *(
                f"{p.n_copies}\t{p.trials}\t{p.median_error:.6g}\t{p.lower_quantile:.6g}"
                f"\t{p.upper_quantile:.6g}\t{p.success_frequency:.3f}"
                for p in self.points
            ),
            f"slope = {self.slope:.4f} +/- {self.slope_stderr:.4f}",
        ]
        return "\n".join(lines) + "\n"


def read_results(path: Path) -> list[ResultRow]:
    """Parse a results CSV. Row numbers in errors count the header as row 1."""
    with path.open(newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames or []
        missing = [c for c in CSV_COLUMNS if c not in header]
        if missing:
            raise MalformedResultsError(f"missing columns {missing}", row=1)
        rows = []
        for number, raw in enumerate(reader, start=2):
            if None in raw or any(value is None for value in raw.values()):
                raise MalformedResultsError("wrong number of fields", row=number)
            try:
                rows.append(ResultRow.parse_obj(raw))
            except pydantic.ValidationError as error:
                raise MalformedResultsError(str(error), row=number) from error
    if not rows:
        raise MalformedResultsError("no data rows", row=2)
    return rows


def sweep_report(rows: list[ResultRow]) -> SweepReport:
    """Per-N error statistics and the log-log slope of the median half-diamond error."""
    points = []
    by_n = bucket(rows, key=lambda row: row.n_copies)
    for n in sorted(by_n):
        at_n = list(by_n[n])
        errors = np.array([row.diamond_error_final / 2 for row in at_n])
        lower, upper = np.quantile(errors, QUANTILES)
        points.append(
            SweepPoint(
                n_copies=n,
                trials=errors.size,
                median_error=float(np.median(errors)),
                lower_quantile=float(lower),
                upper_quantile=float(upper),
                success_frequency=float(
                    np.mean([row.success for row in at_n])
                ),
            )
        )

    fitted = [p for p in points if p.median_error > 0]
    if len(fitted) < 2:
        raise PreconditionError("need at least two grid points with a positive median error")
    fit = stats.linregress(
        [math.log(p.n_copies) for p in fitted], [math.log(p.median_error) for p in fitted]
    )
    return SweepReport(
        points=points,
        slope=float(fit.slope),
        slope_stderr=float(fit.stderr),
        intercept=float(fit.intercept),
    )


def plot_report(report: SweepReport, path: Path) -> None:
    n = np.array([p.n_copies for p in report.points], dtype=float)
    median = np.array([p.median_error for p in report.points])
    spread = np.array(
        [
            [p.median_error - p.lower_quantile for p in report.points],
            [p.upper_quantile - p.median_error for p in report.points],
        ]
    )

    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.errorbar(n, median, yerr=spread, fmt="o", capsize=3, label="median, 10-90% band")
    ax.plot(
        n,
        np.exp(report.intercept) * n**report.slope,
        "--",
        label=f"fit: slope {report.slope:.3f} +/- {report.slope_stderr:.3f}",
    )
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("N (channel uses)")
    ax.set_ylabel("half diamond error")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    # No timestamp in the SVG
    fig.savefig(path, format="svg", bbox_inches="tight", metadata={"Date": None})
    plt.close(fig)


def write_report(csv_path: Path, out_dir: Path) -> SweepReport:
    report = sweep_report(read_results(csv_path))
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.txt").write_text(report.text())
    (out_dir / "report.json").write_text(json.dumps(json.loads(report.json()), indent=2) + "\n")
    plot_report(report, out_dir / "scaling.svg")
    logger.info(
        "Wrote sweep report",
        out_dir=str(out_dir),
        slope=report.slope,
        slope_stderr=report.slope_stderr,
    )
    return report
