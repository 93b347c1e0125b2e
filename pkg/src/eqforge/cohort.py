"""Synthetic ear cohorts, measured-ear datasets, and cohort manifest I/O.

The generator builds each ear from cascaded second-order resonators with
per-ear randomized centers, quality factors, and gains, mimicking the spread
of real ear acoustics at desk scale: a mild outer path to the device
microphone, an individual open-canal coloring on top of it, a strongly
attenuated low-pass leak for the occluded path, and an individual
receiver-to-eardrum response together with its in-ear and model-based
estimates (perturbed copies of the truth).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import butter, sosfilt

from .signals import (
    ImpulseResponse,
    convolve,
    load_impulse,
    magnitude_response,
    write_impulse_csv,
)

RESPONSE_KEYS = ("h_m", "h_open", "h_occ", "d_true", "d_inear", "d_model")

# Fixed generator conventions (not exposed as parameters): the device
# microphone sits 6 samples from the source with a mild broad resonance, the
# eardrum a further 2 samples behind it (constant across ears, so the
# transfer-function ratios differ spectrally but stay time-aligned and
# average cleanly), and the open-canal coloring reuses the cohort resonance
# bands at reduced gain so the ratios vary less across ears than the
# receiver paths do.
_MIC_DELAY = 6
_MIC_BAND = ((2500.0, 5000.0), (0.8, 1.6), (0.5, 3.0))
_COLORING_DELAY = 2
_COLORING_GAIN_SCALE = 0.4
_OCCLUSION_JITTER_DB = 2.0
_ENERGY_BAND_HZ = (100.0, 8000.0)


@dataclass(frozen=True)
class ResonanceBand:
    """Per-ear draw ranges for one resonance: (low, high) of each parameter."""

    center_hz: tuple[float, float]
    quality: tuple[float, float]
    gain_db: tuple[float, float]

    def __post_init__(self) -> None:
        for name, (lo, hi) in (
            ("center_hz", self.center_hz),
            ("quality", self.quality),
            ("gain_db", self.gain_db),
        ):
            if lo > hi:
                raise ValueError(f"{name} range is inverted: ({lo}, {hi})")
        if self.center_hz[0] <= 0 or self.quality[0] <= 0:
            raise ValueError("center_hz and quality must be positive")


DEFAULT_RESONANCE_BANDS = (
    ResonanceBand(center_hz=(450.0, 1800.0), quality=(1.0, 2.5), gain_db=(6.0, 16.0)),
    ResonanceBand(center_hz=(1300.0, 4800.0), quality=(2.0, 5.0), gain_db=(16.0, 30.0)),
    ResonanceBand(center_hz=(2500.0, 5600.0), quality=(2.0, 5.0), gain_db=(8.0, 20.0)),
    ResonanceBand(center_hz=(4400.0, 7000.0), quality=(2.0, 5.0), gain_db=(10.0, 24.0)),
)


@dataclass(frozen=True)
class SynthCohortParams:
    """Knobs of the synthetic cohort generator; defaults suit 16 kHz material."""

    n_subjects: int = 12
    seed: int = 42
    sample_rate_hz: int = 16000
    resonance_bands: tuple[ResonanceBand, ...] = DEFAULT_RESONANCE_BANDS
    canal_delay_range: tuple[int, int] = (1, 4)
    inear_mismatch_db: float = 6.0
    model_error_db: float = 1.0
    occlusion_depth_db: float = 34.0
    occlusion_cutoff_hz: float = 1100.0
    ear_ir_length: int = 160
    receiver_ir_length: int = 128
    coloring_ir_length: int = 64

    def __post_init__(self) -> None:
        if self.n_subjects < 2:
            raise ValueError("n_subjects must be at least 2 (leave-one-out needs peers)")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if not self.resonance_bands:
            raise ValueError("at least one resonance band is required")
        lo, hi = self.canal_delay_range
        if lo < 0 or lo > hi:
            raise ValueError(f"canal_delay_range is invalid: ({lo}, {hi})")
        if self.model_error_db < 0 or self.inear_mismatch_db < 0:
            raise ValueError("perturbation magnitudes must be nonnegative")
        if self.model_error_db >= self.inear_mismatch_db:
            raise ValueError(
                "model_error_db must stay below inear_mismatch_db "
                f"({self.model_error_db} vs {self.inear_mismatch_db})"
            )
        if self.occlusion_depth_db <= 0:
            raise ValueError("occlusion_depth_db must be positive")
        if min(self.ear_ir_length, self.receiver_ir_length, self.coloring_ir_length) < 8:
            raise ValueError("impulse-response lengths below 8 samples are not useful")


@dataclass(frozen=True, eq=False)
class EarDataset:
    """One ear's measured transfer set plus receiver-to-eardrum responses.

    The d_* responses are optional so manifests that only feed the RTF
    estimators remain loadable; simulation paths demand them via require().
    """

    subject_id: str
    h_m: ImpulseResponse
    h_open: ImpulseResponse
    h_occ: ImpulseResponse
    d_true: ImpulseResponse | None = None
    d_inear: ImpulseResponse | None = None
    d_model: ImpulseResponse | None = None

    def __post_init__(self) -> None:
        rates = {r.sample_rate_hz for r in self.responses().values()}
        if len(rates) > 1:
            raise ValueError(f"{self.subject_id}: mixed sample rates {sorted(rates)}")
        for name, response in self.responses().items():
            if not np.any(response.samples):
                raise ValueError(f"{self.subject_id}: response {name} is identically zero")

    def responses(self) -> dict[str, ImpulseResponse]:
        present = {"h_m": self.h_m, "h_open": self.h_open, "h_occ": self.h_occ}
        for name in ("d_true", "d_inear", "d_model"):
            value = getattr(self, name)
            if value is not None:
                present[name] = value
        return present

    def require(self, name: str) -> ImpulseResponse:
        value = getattr(self, name)
        if value is None:
            raise ValueError(f"{self.subject_id}: response {name} is not available")
        return value

    @property
    def sample_rate_hz(self) -> int:
        return self.h_m.sample_rate_hz


class _Draws:
    """Uniform draws from ranges; with no generator every draw sits mid-range."""

    def __init__(self, rng: np.random.Generator | None):
        self._rng = rng

    def uniform(self, lo: float, hi: float) -> float:
        if self._rng is None:
            return 0.5 * (lo + hi)
        return float(self._rng.uniform(lo, hi))

    def integer(self, lo: int, hi: int) -> int:
        if self._rng is None:
            return int(round(0.5 * (lo + hi)))
        return int(self._rng.integers(lo, hi + 1))


def _peaking_sos(center_hz: float, q: float, gain_db: float, rate: int) -> np.ndarray:
    """RBJ peaking-EQ biquad section, normalized to a0 = 1."""
    amp = 10.0 ** (gain_db / 40.0)
    w0 = 2.0 * np.pi * center_hz / rate
    alpha = np.sin(w0) / (2.0 * q)
    cos_w0 = np.cos(w0)
    b = np.array([1.0 + alpha * amp, -2.0 * cos_w0, 1.0 - alpha * amp])
    a = np.array([1.0 + alpha / amp, -2.0 * cos_w0, 1.0 - alpha / amp])
    return np.concatenate([b, a]) / a[0]


def _resonator_ir(
    resonances: list[tuple[float, float, float]],
    delay: int,
    length: int,
    rate: int,
) -> ImpulseResponse:
    """Impulse response of a peaking-biquad cascade behind an integer delay."""
    impulse = np.zeros(length)
    impulse[0] = 1.0
    if resonances:
        sos = np.stack([_peaking_sos(f, q, g, rate) for f, q, g in resonances])
        shaped = sosfilt(sos, impulse)
    else:
        shaped = impulse
    samples = np.concatenate([np.zeros(delay), shaped])[:length]
    return ImpulseResponse(samples, rate)


def _band_energy(h: ImpulseResponse) -> float:
    mag = magnitude_response(h, n_fft=max(4096, len(h)))
    mask = (mag.frequencies_hz >= _ENERGY_BAND_HZ[0]) & (
        mag.frequencies_hz <= _ENERGY_BAND_HZ[1]
    )
    linear = 10.0 ** (mag.magnitude_db[mask] / 20.0)
    return float(np.sum(linear * linear))


def _occluded_leak(
    h_open: ImpulseResponse, depth_db: float, cutoff_hz: float
) -> ImpulseResponse:
    """Low-pass leak of the open path, scaled `depth_db` below it in band energy."""
    sos = butter(2, cutoff_hz, fs=h_open.sample_rate_hz, btype="low", output="sos")
    leak = ImpulseResponse(sosfilt(sos, h_open.samples), h_open.sample_rate_hz)
    ratio = _band_energy(h_open) / _band_energy(leak)
    scale = 10.0 ** (-depth_db / 20.0) * np.sqrt(ratio)
    return ImpulseResponse(leak.samples * scale, h_open.sample_rate_hz)


def _perturbed(
    resonances: list[tuple[float, float, float]],
    shifts: list[tuple[float, float]],
    nyquist_hz: float,
) -> list[tuple[float, float, float]]:
    """Shift resonance centers (fractional octaves) and gains (dB) per draw."""
    out = []
    for (f, q, g), (df_db, dg_db) in zip(resonances, shifts):
        f_shifted = min(f * 2.0 ** (df_db / 40.0), 0.9 * nyquist_hz)
        out.append((f_shifted, q, g + dg_db))
    return out


def _build_ear(subject_id: str, draws: _Draws, params: SynthCohortParams) -> EarDataset:
    rate = params.sample_rate_hz
    nyquist = rate / 2.0

    # Draw order is fixed; reordering would silently reshuffle every cohort.
    canal_delay = draws.integer(*params.canal_delay_range)
    canal = [
        (draws.uniform(*band.center_hz), draws.uniform(*band.quality), draws.uniform(*band.gain_db))
        for band in params.resonance_bands
    ]
    inear_shifts = [
        (draws.uniform(-params.inear_mismatch_db, params.inear_mismatch_db),
         draws.uniform(-params.inear_mismatch_db, params.inear_mismatch_db))
        for _ in params.resonance_bands
    ]
    model_shifts = [
        (draws.uniform(-params.model_error_db, params.model_error_db),
         draws.uniform(-params.model_error_db, params.model_error_db))
        for _ in params.resonance_bands
    ]
    mic = [(draws.uniform(*_MIC_BAND[0]), draws.uniform(*_MIC_BAND[1]),
            draws.uniform(*_MIC_BAND[2]))]
    coloring = [
        (draws.uniform(*band.center_hz), draws.uniform(*band.quality),
         _COLORING_GAIN_SCALE * draws.uniform(*band.gain_db))
        for band in params.resonance_bands
    ]
    occlusion_depth = params.occlusion_depth_db + draws.uniform(
        -_OCCLUSION_JITTER_DB, _OCCLUSION_JITTER_DB
    )

    d_true = _resonator_ir(canal, canal_delay, params.receiver_ir_length, rate)
    d_inear = _resonator_ir(
        _perturbed(canal, inear_shifts, nyquist), canal_delay, params.receiver_ir_length, rate
    )
    d_model = _resonator_ir(
        _perturbed(canal, model_shifts, nyquist), canal_delay, params.receiver_ir_length, rate
    )
    h_m = _resonator_ir(mic, _MIC_DELAY, params.ear_ir_length, rate)
    open_coloring = _resonator_ir(coloring, _COLORING_DELAY, params.coloring_ir_length, rate)
    h_open = convolve(h_m, open_coloring)
    h_occ = _occluded_leak(h_open, occlusion_depth, params.occlusion_cutoff_hz)

    return EarDataset(
        subject_id=subject_id,
        h_m=h_m,
        h_open=h_open,
        h_occ=h_occ,
        d_true=d_true,
        d_inear=d_inear,
        d_model=d_model,
    )


def synth_cohort(params: SynthCohortParams) -> list[EarDataset]:
    """Deterministic cohort of synthetic ears: one independent stream per ear."""
    seeds = np.random.SeedSequence(params.seed).spawn(params.n_subjects)
    return [
        _build_ear(f"ear{i:02d}", _Draws(np.random.default_rng(seed)), params)
        for i, seed in enumerate(seeds)
    ]


def synth_dummy_ear(params: SynthCohortParams) -> EarDataset:
    """Reference ear with every generator draw pinned to its range midpoint."""
    return _build_ear("dummy", _Draws(None), params)


# ---------------------------------------------------------------------------
# Manifest I/O
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CohortData:
    ears: list[EarDataset]
    dummy: EarDataset | None
    sample_rate_hz: int


def params_to_json(params: SynthCohortParams) -> dict:
    return {
        "n_subjects": params.n_subjects,
        "seed": params.seed,
        "sample_rate_hz": params.sample_rate_hz,
        "resonance_bands": [
            {"center_hz": list(b.center_hz), "quality": list(b.quality),
             "gain_db": list(b.gain_db)}
            for b in params.resonance_bands
        ],
        "canal_delay_range": list(params.canal_delay_range),
        "inear_mismatch_db": params.inear_mismatch_db,
        "model_error_db": params.model_error_db,
        "occlusion_depth_db": params.occlusion_depth_db,
        "occlusion_cutoff_hz": params.occlusion_cutoff_hz,
        "ear_ir_length": params.ear_ir_length,
        "receiver_ir_length": params.receiver_ir_length,
        "coloring_ir_length": params.coloring_ir_length,
    }


def params_from_json(data: dict) -> SynthCohortParams:
    kwargs = dict(data)
    if "resonance_bands" in kwargs:
        kwargs["resonance_bands"] = tuple(
            ResonanceBand(
                center_hz=tuple(b["center_hz"]),
                quality=tuple(b["quality"]),
                gain_db=tuple(b["gain_db"]),
            )
            for b in kwargs["resonance_bands"]
        )
    if "canal_delay_range" in kwargs:
        kwargs["canal_delay_range"] = tuple(kwargs["canal_delay_range"])
    return SynthCohortParams(**kwargs)


def _write_ear(ear: EarDataset, ears_dir: Path, manifest_dir: Path) -> dict:
    entry: dict = {"id": ear.subject_id}
    subject_dir = ears_dir / ear.subject_id
    subject_dir.mkdir(parents=True, exist_ok=True)
    for name, response in ear.responses().items():
        path = subject_dir / f"{name}.csv"
        write_impulse_csv(response, path)
        entry[name] = path.relative_to(manifest_dir).as_posix()
    return entry


def save_cohort(
    cohort: list[EarDataset],
    out_dir: str | Path,
    dummy: EarDataset | None = None,
    params: SynthCohortParams | None = None,
) -> Path:
    """Write per-ear CSV responses plus a manifest JSON; returns the manifest path."""
    out_dir = Path(out_dir)
    ears_dir = out_dir / "ears"
    ears_dir.mkdir(parents=True, exist_ok=True)
    manifest: dict = {"sample_rate_hz": cohort[0].sample_rate_hz}
    if params is not None:
        manifest["synth_params"] = params_to_json(params)
    manifest["subjects"] = [_write_ear(ear, ears_dir, out_dir) for ear in cohort]
    if dummy is not None:
        manifest["dummy"] = _write_ear(dummy, ears_dir, out_dir)
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest_path


def _load_ear(entry: dict, base_dir: Path, rate: int) -> EarDataset:
    loaded: dict = {"subject_id": entry["id"]}
    for name in RESPONSE_KEYS:
        if name in entry:
            loaded[name] = load_impulse(base_dir / entry[name], rate)
    missing = [k for k in ("h_m", "h_open", "h_occ") if k not in loaded]
    if missing:
        raise ValueError(f"{entry['id']}: manifest entry lacks required responses {missing}")
    return EarDataset(**loaded)


def load_manifest(path: str | Path) -> CohortData:
    path = Path(path)
    data = json.loads(path.read_text())
    rate = int(data["sample_rate_hz"])
    base_dir = path.parent
    ears = [_load_ear(entry, base_dir, rate) for entry in data["subjects"]]
    dummy = _load_ear(data["dummy"], base_dir, rate) if "dummy" in data else None
    return CohortData(ears=ears, dummy=dummy, sample_rate_hz=rate)
