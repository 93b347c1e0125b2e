"""Experiment conditions: filter-design recipes and aided-ear path simulation.

Each condition names which receiver-to-eardrum estimate enters the design and
whether the transfer-function ratios come from the subject's own
measurements, a dummy-head surrogate, or leave-one-out cohort averages.
Evaluation always runs on the subject's true acoustics, so a condition's
score isolates the impact of its design-side estimates.
"""

from __future__ import annotations

from dataclasses import dataclass, field


from .cohort import EarDataset
from .design import EqDesignConfig, EqFilter, build_target, design_filter, design_filter_pooled
from .metrics import EVALUATION_BAND_HZ, ConditionReport, band_error_profile, log_spectral_distance
from .rtf import (
    MeasurementPair,
    RelativeTransferEstimate,
    default_rtf_length,
    estimate_average,
    estimate_individual,
)
from .signals import DEFAULT_N_FFT, ImpulseResponse, convolve, magnitude_response, unit_delay, zero_extend

D_SOURCES = ("true", "inear", "model", "dummyhead")


@dataclass(frozen=True)
class ConditionSpec:
    """One experiment condition: RTF provenance plus the design-side d source."""

    name: str
    uses_individual_rtf: bool
    d_source: str

    def __post_init__(self) -> None:
        if self.d_source not in D_SOURCES:
            raise ValueError(f"d_source must be one of {D_SOURCES}, got {self.d_source!r}")


CONDITIONS: dict[str, ConditionSpec] = {
    "Optimal": ConditionSpec("Optimal", True, "true"),
    "GenericDH": ConditionSpec("GenericDH", False, "dummyhead"),
    "NaiveInEar": ConditionSpec("NaiveInEar", True, "inear"),
    "ModelBased": ConditionSpec("ModelBased", True, "model"),
    "GenericAV": ConditionSpec("GenericAV", False, "true"),
    "PracticalModelBased": ConditionSpec("PracticalModelBased", False, "model"),
    "PracticalOptimal": ConditionSpec("PracticalOptimal", False, "true"),
}

CONDITION_NAMES = tuple(CONDITIONS)
_LEAVE_ONE_OUT = ("GenericAV", "PracticalModelBased", "PracticalOptimal")


def condition_named(name: str) -> ConditionSpec:
    try:
        return CONDITIONS[name]
    except KeyError:
        raise ValueError(f"unknown condition {name!r}; expected one of {CONDITION_NAMES}") from None


def device_gain(delay: int, sample_rate_hz: int) -> ImpulseResponse:
    """Hearing-device processing: a pure delay at broadband 0 dB gain."""
    return unit_delay(delay, delay + 1, sample_rate_hz)


def desired_response(ear: EarDataset, g: ImpulseResponse) -> ImpulseResponse:
    """The open ear heard through the device processing."""
    return convolve(ear.h_open, g)


def aided_response(ear: EarDataset, g: ImpulseResponse, a: EqFilter) -> ImpulseResponse:
    """Device path through the true receiver response plus the passive leak.

    Evaluation always runs through d_true; whatever estimate shaped the
    filter, the ear it plays into is the real one.
    """
    eq = ImpulseResponse(a.coefficients, ear.sample_rate_hz)
    chain = convolve(convolve(convolve(ear.h_m, g), eq), ear.require("d_true")).samples
    n = max(chain.size, len(ear.h_occ))
    samples = zero_extend(chain, n) + zero_extend(ear.h_occ.samples, n)
    return ImpulseResponse(samples, ear.sample_rate_hz)


@dataclass
class RtfCache:
    """Memoized estimates so grid runs do not refit identical systems."""

    acausal_lead: int
    individual: dict[str, tuple[RelativeTransferEstimate, RelativeTransferEstimate]] = field(
        default_factory=dict
    )
    average: dict[str, tuple[RelativeTransferEstimate, RelativeTransferEstimate]] = field(
        default_factory=dict
    )


def individual_rtfs(
    ear: EarDataset, acausal_lead: int, cache: RtfCache | None = None
) -> tuple[RelativeTransferEstimate, RelativeTransferEstimate]:
    """(open, occluded) RTF estimates from one ear's own measurements."""
    if cache is not None and ear.subject_id in cache.individual:
        return cache.individual[ear.subject_id]
    r_open = estimate_individual(
        MeasurementPair(ear.h_m, ear.h_open, ear.subject_id),
        default_rtf_length(len(ear.h_open), acausal_lead),
        acausal_lead,
        role="open",
    )
    r_occ = estimate_individual(
        MeasurementPair(ear.h_m, ear.h_occ, ear.subject_id),
        default_rtf_length(len(ear.h_occ), acausal_lead),
        acausal_lead,
        role="occluded",
    )
    if cache is not None:
        cache.individual[ear.subject_id] = (r_open, r_occ)
    return r_open, r_occ


def average_rtfs(
    cohort: list[EarDataset],
    exclude_subject: str,
    acausal_lead: int,
    cache: RtfCache | None = None,
) -> tuple[RelativeTransferEstimate, RelativeTransferEstimate]:
    """(open, occluded) pooled RTF estimates, leaving one subject out."""
    if cache is not None and exclude_subject in cache.average:
        return cache.average[exclude_subject]
    members = [e for e in cohort if e.subject_id != exclude_subject]
    if not members:
        raise ValueError(f"no cohort members remain after excluding {exclude_subject!r}")
    open_pairs = [MeasurementPair(e.h_m, e.h_open, e.subject_id) for e in members]
    occ_pairs = [MeasurementPair(e.h_m, e.h_occ, e.subject_id) for e in members]
    length_open = max(default_rtf_length(len(e.h_open), acausal_lead) for e in members)
    length_occ = max(default_rtf_length(len(e.h_occ), acausal_lead) for e in members)
    r_open = estimate_average(open_pairs, length_open, acausal_lead, role="open")
    r_occ = estimate_average(occ_pairs, length_occ, acausal_lead, role="occluded")
    if cache is not None:
        cache.average[exclude_subject] = (r_open, r_occ)
    return r_open, r_occ


def _find_subject(cohort: list[EarDataset], subject_id: str) -> EarDataset:
    for ear in cohort:
        if ear.subject_id == subject_id:
            return ear
    raise ValueError(f"subject {subject_id!r} is not in the cohort")


def _design_plant(ear: EarDataset, cond: ConditionSpec, dummy: EarDataset | None) -> ImpulseResponse:
    if cond.d_source == "dummyhead":
        if dummy is None:
            raise ValueError(f"condition {cond.name} needs a dummy-head ear")
        return dummy.require("d_true")
    return ear.require({"true": "d_true", "inear": "d_inear", "model": "d_model"}[cond.d_source])


def design_for_condition(
    cohort: list[EarDataset],
    subject_id: str,
    cond: ConditionSpec,
    config: EqDesignConfig,
    *,
    dummy: EarDataset | None = None,
    cache: RtfCache | None = None,
) -> EqFilter:
    """Design the equalizer exactly as the named condition prescribes."""
    ear = _find_subject(cohort, subject_id)
    if cond.name in _LEAVE_ONE_OUT and len(cohort) < 2:
        raise ValueError(f"condition {cond.name} needs a cohort of at least 2 ears")
    g = device_gain(config.device_delay, ear.sample_rate_hz)

    if cond.name == "GenericAV":
        members = [e for e in cohort if e.subject_id != subject_id]
        targets = [
            build_target(*individual_rtfs(member, config.acausal_lead, cache), g)
            for member in members
        ]
        plants = [member.require("d_true") for member in members]
        return design_filter_pooled(plants, targets, config)

    if cond.name == "GenericDH":
        if dummy is None:
            raise ValueError("condition GenericDH needs a dummy-head ear")
        r_open, r_occ = individual_rtfs(dummy, config.acausal_lead, cache)
    elif cond.uses_individual_rtf:
        r_open, r_occ = individual_rtfs(ear, config.acausal_lead, cache)
    else:
        r_open, r_occ = average_rtfs(cohort, subject_id, config.acausal_lead, cache)

    target = build_target(r_open, r_occ, g)
    return design_filter(_design_plant(ear, cond, dummy), target, config)


def run_condition(
    cohort: list[EarDataset],
    subject_id: str,
    cond: ConditionSpec,
    config: EqDesignConfig,
    *,
    dummy: EarDataset | None = None,
    cache: RtfCache | None = None,
    n_fft: int = DEFAULT_N_FFT,
    band: tuple[float, float] = EVALUATION_BAND_HZ,
) -> ConditionReport:
    """Design per the condition, evaluate on the subject's true acoustics."""
    ear = _find_subject(cohort, subject_id)
    filt = design_for_condition(cohort, subject_id, cond, config, dummy=dummy, cache=cache)
    g = device_gain(config.device_delay, ear.sample_rate_hz)
    aided = magnitude_response(aided_response(ear, g, filt), n_fft)
    desired = magnitude_response(desired_response(ear, g), n_fft)
    occluded = magnitude_response(ear.h_occ, n_fft)
    return ConditionReport(
        subject_id=subject_id,
        condition=cond.name,
        device_delay=config.device_delay,
        lsd_db=log_spectral_distance(aided, desired, band),
        band_errors_db=band_error_profile(aided, desired),
        aided=aided,
        desired=desired,
        occluded=occluded,
        eq_filter=filt,
    )
