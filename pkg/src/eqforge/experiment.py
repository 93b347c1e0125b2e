"""Batch execution of the (subject x condition x delay) grid and report emission."""

from __future__ import annotations

import dataclasses
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .cohort import EarDataset
from .conditions import (
    ConditionSpec,
    RtfCache,
    average_rtfs,
    condition_named,
    individual_rtfs,
    run_condition,
)
from .design import EqDesignConfig, filter_to_json
from .metrics import EVALUATION_BAND_HZ, ConditionReport, rank_conditions
from .signals import DEFAULT_N_FFT

log = logging.getLogger("eqforge.experiment")

DEFAULT_DELAYS = (0, 1, 16, 96)


@dataclass(frozen=True)
class RunFailure:
    subject_id: str
    condition: str
    device_delay: int
    error: str


@dataclass
class ExperimentResult:
    reports: list[ConditionReport] = field(default_factory=list)
    failures: list[RunFailure] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def _run_name(subject_id: str, condition: str, delay: int) -> str:
    return f"{subject_id}__{condition}__dG{delay}"


def _write_response_csv(report: ConditionReport, path: Path) -> None:
    lines = ["frequency_hz,desired_db,aided_db,occluded_db"]
    freqs = report.desired.frequencies_hz
    for i in range(freqs.size):
        lines.append(
            f"{format(freqs[i], '.17g')},{format(report.desired.magnitude_db[i], '.17g')},"
            f"{format(report.aided.magnitude_db[i], '.17g')},"
            f"{format(report.occluded.magnitude_db[i], '.17g')}"
        )
    path.write_text("\n".join(lines) + "\n")


def _write_run_report(report: ConditionReport, out_dir: Path) -> None:
    name = _run_name(report.subject_id, report.condition, report.device_delay)
    _write_response_csv(report, out_dir / f"{name}.csv")
    payload = {
        "subject": report.subject_id,
        "condition": report.condition,
        "d_G": report.device_delay,
        "lsd_db": report.lsd_db,
        "band_errors_db": {format(c, "g"): v for c, v in report.band_errors_db.items()},
        "responses_csv": f"runs/{name}.csv",
        "filter": filter_to_json(report.eq_filter) if report.eq_filter else None,
    }
    (out_dir / f"{name}.json").write_text(json.dumps(payload, indent=2) + "\n")


def _summarize(result: ExperimentResult, delays: list[int]) -> list[dict]:
    rows: list[dict] = []
    for delay in delays:
        subset = [r for r in result.reports if r.device_delay == delay]
        if not subset:
            continue
        for summary in sorted(rank_conditions(subset), key=lambda s: s.condition):
            rows.append(
                {
                    "condition": summary.condition,
                    "d_G": delay,
                    "mean_lsd_db": summary.mean_lsd_db,
                    "sd_lsd_db": summary.sd_lsd_db,
                    "n_subjects": summary.n_subjects,
                }
            )
    return rows


def _write_summaries(
    result: ExperimentResult, delays: list[int], out_dir: Path
) -> None:
    rows = _summarize(result, delays)
    csv_lines = ["condition,d_G,mean_lsd_db,sd_lsd_db,n_subjects"]
    for row in rows:
        csv_lines.append(
            f"{row['condition']},{row['d_G']},{format(row['mean_lsd_db'], '.17g')},"
            f"{format(row['sd_lsd_db'], '.17g')},{row['n_subjects']}"
        )
    (out_dir / "summary.csv").write_text("\n".join(csv_lines) + "\n")

    payload = {
        "rows": rows,
        "per_subject": [
            {
                "subject": r.subject_id,
                "condition": r.condition,
                "d_G": r.device_delay,
                "lsd_db": r.lsd_db,
            }
            for r in result.reports
        ],
        "failures": [dataclasses.asdict(f) for f in result.failures],
    }
    (out_dir / "summary.json").write_text(json.dumps(payload, indent=2) + "\n")

    ranking_lines = ["d_G,rank,condition,mean_lsd_db,sd_lsd_db"]
    for delay in delays:
        subset = [r for r in result.reports if r.device_delay == delay]
        if not subset:
            continue
        for rank, summary in enumerate(rank_conditions(subset), start=1):
            ranking_lines.append(
                f"{delay},{rank},{summary.condition},"
                f"{format(summary.mean_lsd_db, '.17g')},{format(summary.sd_lsd_db, '.17g')}"
            )
    (out_dir / "ranking.csv").write_text("\n".join(ranking_lines) + "\n")


def run_experiment(
    cohort: list[EarDataset],
    conditions: list[str],
    delays: list[int],
    design: EqDesignConfig,
    out_dir: str | Path,
    *,
    dummy: EarDataset | None = None,
    workers: int = 1,
    n_fft: int = DEFAULT_N_FFT,
    band: tuple[float, float] = EVALUATION_BAND_HZ,
) -> ExperimentResult:
    """Run every (subject, condition, delay) cell and write all report files.

    Individual cell failures are recorded and do not abort the grid. Output
    is a pure function of the inputs: rerunning overwrites every file with
    identical bytes.
    """
    if not conditions or not delays:
        raise ValueError("need at least one condition and one delay")
    specs = [condition_named(name) for name in conditions]
    out_dir = Path(out_dir)
    runs_dir = out_dir / "runs"
    runs_dir.mkdir(parents=True, exist_ok=True)

    cache = RtfCache(acausal_lead=design.acausal_lead)
    grid: list[tuple[EarDataset, ConditionSpec, int]] = [
        (ear, spec, delay) for ear in cohort for spec in specs for delay in delays
    ]

    def _one(cell: tuple[EarDataset, ConditionSpec, int]):
        ear, spec, delay = cell
        cfg = dataclasses.replace(design, device_delay=delay)
        return run_condition(
            cohort, ear.subject_id, spec, cfg,
            dummy=dummy, cache=cache, n_fft=n_fft, band=band,
        )

    # The RTF cache is shared across cells, so populate it before dispatching
    # concurrent work; afterwards it is only read. Estimation failures are
    # swallowed here and resurface inside the affected runs.
    if workers > 1:
        ears = list(cohort) + ([dummy] if dummy is not None else [])
        pooled = any(s.name in ("GenericAV", "PracticalModelBased", "PracticalOptimal")
                     for s in specs)
        for ear in ears:
            try:
                individual_rtfs(ear, design.acausal_lead, cache)
            except Exception:
                pass
        for ear in cohort if pooled else []:
            try:
                average_rtfs(cohort, ear.subject_id, design.acausal_lead, cache)
            except Exception:
                pass

    result = ExperimentResult()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_guarded(_one), grid))
    else:
        outcomes = [_guarded(_one)(cell) for cell in grid]

    for outcome in outcomes:
        if isinstance(outcome, RunFailure):
            log.warning(
                "run failed: %s/%s/dG=%s: %s",
                outcome.subject_id, outcome.condition, outcome.device_delay, outcome.error,
            )
            result.failures.append(outcome)
        else:
            result.reports.append(outcome)

    for report in result.reports:
        _write_run_report(report, runs_dir)
    _write_summaries(result, list(delays), out_dir)
    log.info(
        "experiment finished: %d runs, %d failures",
        len(result.reports), len(result.failures),
    )
    return result


def _guarded(fn):
    def wrapper(cell):
        ear, spec, delay = cell
        try:
            return fn(cell)
        except Exception as exc:
            return RunFailure(ear.subject_id, spec.name, delay, f"{type(exc).__name__}: {exc}")

    return wrapper
