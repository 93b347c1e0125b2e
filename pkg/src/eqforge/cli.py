"""Command-line front-end: cohort synthesis, filter design, experiments, evaluation.

Value precedence everywhere: explicit flags override config-file entries,
which override built-in defaults. `EQFORGE_LOG` (debug/info/warning/error)
sets verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any

from . import cohort as cohort_mod
from .conditions import (
    CONDITION_NAMES,
    condition_named,
    design_for_condition,
    device_gain,
    aided_response,
    desired_response,
)
from .design import EqDesignConfig, config_from_json, config_to_json, filter_from_json, filter_to_json
from .experiment import DEFAULT_DELAYS, run_experiment
from .metrics import band_error_profile, log_spectral_distance
from .signals import magnitude_response
from .solvers import SingularSystemError

log = logging.getLogger("eqforge")


class CliError(Exception):
    """User-facing failure; the message is printed and the exit code is 1."""


def _setup_logging() -> None:
    level_name = os.environ.get("EQFORGE_LOG", "warning").lower()
    level = {"debug": logging.DEBUG, "info": logging.INFO,
             "warning": logging.WARNING, "error": logging.ERROR}.get(level_name)
    if level is None:
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _load_config(path: str | None) -> dict[str, Any]:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise CliError(f"config file not found: {p}")
    return json.loads(p.read_text())


def _pick(flag: Any, config_value: Any, default: Any) -> Any:
    if flag is not None:
        return flag
    if config_value is not None:
        return config_value
    return default


def _design_config(args: argparse.Namespace, config: dict[str, Any]) -> EqDesignConfig:
    design_cfg = dict(config.get("design", {}))
    base = config_from_json(design_cfg)
    return EqDesignConfig(
        filter_length=int(_pick(args.filter_length, design_cfg.get("L_a"), base.filter_length)),
        lam=float(_pick(args.lam, design_cfg.get("lambda"), base.lam)),
        acausal_lead=int(_pick(args.lead, design_cfg.get("L_d"), base.acausal_lead)),
        device_delay=base.device_delay,
        weighting=base.weighting,
    )


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _str_list(text: str) -> list[str]:
    return [tok.strip() for tok in text.split(",") if tok.strip()]


def _synth_params(args: argparse.Namespace, config: dict[str, Any]) -> cohort_mod.SynthCohortParams:
    data: dict[str, Any] = {}
    if "rate" in config:
        data["sample_rate_hz"] = int(config["rate"])
    cohort_cfg = config.get("cohort", {})
    if isinstance(cohort_cfg, dict) and "synth" in cohort_cfg:
        data.update(cohort_cfg["synth"])
    params_path = getattr(args, "params", None)
    if params_path:
        p = Path(params_path)
        if not p.exists():
            raise CliError(f"synth params file not found: {p}")
        data.update(json.loads(p.read_text()))
    if args.seed is not None:
        data["seed"] = args.seed
    try:
        return cohort_mod.params_from_json(data)
    except (TypeError, ValueError) as exc:
        raise CliError(f"invalid synth parameters: {exc}") from exc


def _load_cohort(args: argparse.Namespace, config: dict[str, Any]) -> cohort_mod.CohortData:
    manifest = getattr(args, "manifest", None)
    cohort_cfg = config.get("cohort", {})
    if manifest is None and isinstance(cohort_cfg, dict):
        manifest = cohort_cfg.get("manifest")
    if manifest is not None:
        path = Path(manifest)
        if not path.exists():
            raise CliError(f"manifest not found: {path}")
        return cohort_mod.load_manifest(path)
    params = _synth_params(args, config)
    ears = cohort_mod.synth_cohort(params)
    dummy = cohort_mod.synth_dummy_ear(params)
    return cohort_mod.CohortData(ears=ears, dummy=dummy, sample_rate_hz=params.sample_rate_hz)


def _apply_exclusion(data: cohort_mod.CohortData, exclude: str | None) -> cohort_mod.CohortData:
    if not exclude:
        return data
    kept = [e for e in data.ears if e.subject_id != exclude]
    if len(kept) == len(data.ears):
        raise CliError(f"--exclude-subject {exclude!r}: no such subject in the cohort")
    return cohort_mod.CohortData(ears=kept, dummy=data.dummy, sample_rate_hz=data.sample_rate_hz)


def cmd_synth(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    params = _synth_params(args, config)
    out_dir = Path(_pick(args.out, config.get("out"), None) or _fail_out())
    ears = cohort_mod.synth_cohort(params)
    dummy = cohort_mod.synth_dummy_ear(params)
    try:
        manifest = cohort_mod.save_cohort(ears, out_dir, dummy=dummy, params=params)
    except OSError as exc:
        raise CliError(f"cannot write cohort under {out_dir}: {exc}") from exc
    print(manifest)
    return 0


def _fail_out() -> str:
    raise CliError("--out is required (or set \"out\" in the config file)")


def cmd_design(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    data = _apply_exclusion(_load_cohort(args, config), args.exclude_subject)
    cfg = _design_config(args, config)
    delay = int(_pick(args.delay, None, cfg.device_delay))
    cfg = EqDesignConfig(
        filter_length=cfg.filter_length, lam=cfg.lam,
        acausal_lead=cfg.acausal_lead, device_delay=delay, weighting=cfg.weighting,
    )
    spec = condition_named(args.condition)
    try:
        filt = design_for_condition(
            data.ears, args.subject, spec, cfg, dummy=data.dummy
        )
    except SingularSystemError as exc:
        raise CliError(f"condition {spec.name}: singular design system: {exc}") from exc
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    out = Path(_pick(args.out, config.get("out"), None) or _fail_out())
    payload = filter_to_json(filt)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(payload, indent=2) + "\n")
    print(out)
    return 0


def cmd_experiment(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    data = _apply_exclusion(_load_cohort(args, config), args.exclude_subject)
    cfg = _design_config(args, config)
    conditions = _pick(args.conditions, config.get("conditions"), list(CONDITION_NAMES))
    delays = _pick(args.delays, config.get("delays"), list(DEFAULT_DELAYS))
    workers = int(_pick(args.workers, config.get("workers"), 1))
    out_dir = Path(_pick(args.out, config.get("out"), None) or _fail_out())
    try:
        result = run_experiment(
            data.ears, list(conditions), list(delays), cfg, out_dir,
            dummy=data.dummy, workers=workers,
        )
    except OSError as exc:
        raise CliError(f"cannot write reports under {out_dir}: {exc}") from exc
    print(f"{len(result.reports)} runs ok, {len(result.failures)} failed -> {out_dir}")
    return 0 if result.ok else 1


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    data = _apply_exclusion(_load_cohort(args, config), args.exclude_subject)
    filter_path = Path(args.filter)
    if not filter_path.exists():
        raise CliError(f"filter file not found: {filter_path}")
    payload = json.loads(filter_path.read_text())
    filt = filter_from_json(payload)
    ears = {e.subject_id: e for e in data.ears}
    if data.dummy is not None:
        ears.setdefault(data.dummy.subject_id, data.dummy)
    if args.subject not in ears:
        raise CliError(f"subject {args.subject!r} is not in the cohort")
    ear = ears[args.subject]
    g = device_gain(filt.config.device_delay, ear.sample_rate_hz)
    aided = magnitude_response(aided_response(ear, g, filt))
    desired = magnitude_response(desired_response(ear, g))
    occluded = magnitude_response(ear.h_occ)

    out_dir = Path(_pick(args.out, config.get("out"), None) or _fail_out())
    out_dir.mkdir(parents=True, exist_ok=True)
    name = f"eval_{args.subject}__dG{filt.config.device_delay}"
    lines = ["frequency_hz,desired_db,aided_db,occluded_db"]
    for i in range(aided.frequencies_hz.size):
        lines.append(
            f"{format(aided.frequencies_hz[i], '.17g')},"
            f"{format(desired.magnitude_db[i], '.17g')},"
            f"{format(aided.magnitude_db[i], '.17g')},"
            f"{format(occluded.magnitude_db[i], '.17g')}"
        )
    (out_dir / f"{name}.csv").write_text("\n".join(lines) + "\n")
    report = {
        "subject": args.subject,
        "d_G": filt.config.device_delay,
        "lsd_db": log_spectral_distance(aided, desired),
        "band_errors_db": {format(c, "g"): v for c, v in band_error_profile(aided, desired).items()},
        "filter_config": config_to_json(filt.config),
        "responses_csv": f"{name}.csv",
    }
    (out_dir / f"{name}.json").write_text(json.dumps(report, indent=2) + "\n")
    print(out_dir / f"{name}.json")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eqforge",
        description="Hear-through equalization: cohort synthesis, filter design, experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--out", help="output directory (or file for `design`)")
        p.add_argument("--seed", type=int, help="synthetic-cohort seed override")
        p.add_argument("--exclude-subject", help="drop this subject from the cohort")

    p_synth = sub.add_parser("synth", help="generate a synthetic ear cohort")
    common(p_synth)
    p_synth.add_argument("--params", help="JSON file with cohort generator parameters")
    p_synth.set_defaults(func=cmd_synth)

    def design_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--manifest", help="cohort manifest JSON (default: synthesize)")
        p.add_argument("--params", help="synth parameter JSON when no manifest is given")
        p.add_argument("--lambda", dest="lam", type=float, help="regularization trade-off")
        p.add_argument("--filter-length", type=int, help="equalizer taps (L_a)")
        p.add_argument("--lead", type=int, help="acausal lead in samples (L_d)")

    p_design = sub.add_parser("design", help="design one condition's filter for a subject")
    common(p_design)
    design_flags(p_design)
    p_design.add_argument("--subject", required=True)
    p_design.add_argument("--condition", required=True, choices=list(CONDITION_NAMES))
    p_design.add_argument("--delay", type=int, help="device processing delay d_G in samples")
    p_design.set_defaults(func=cmd_design)

    p_exp = sub.add_parser("experiment", help="run the full subject x condition x delay grid")
    common(p_exp)
    design_flags(p_exp)
    p_exp.add_argument("--conditions", type=_str_list, help="comma-separated condition names")
    p_exp.add_argument("--delays", type=_int_list, help="comma-separated d_G values")
    p_exp.add_argument("--workers", type=int, help="concurrent grid workers (default 1)")
    p_exp.set_defaults(func=cmd_experiment)

    p_eval = sub.add_parser("evaluate", help="re-simulate a stored filter on a subject")
    common(p_eval)
    p_eval.add_argument("--manifest", help="cohort manifest JSON (default: synthesize)")
    p_eval.add_argument("--params", help="synth parameter JSON when no manifest is given")
    p_eval.add_argument("--subject", required=True)
    p_eval.add_argument("--filter", required=True, help="filter JSON written by `design`")
    p_eval.set_defaults(func=cmd_evaluate)

    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
