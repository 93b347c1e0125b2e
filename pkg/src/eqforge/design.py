"""Equalization target construction and regularized least-squares filter design."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .rtf import RelativeTransferEstimate, ls_deconvolve
from .signals import (
    DEFAULT_SAMPLE_RATE_HZ,
    ConvolutionMatrix,
    ImpulseResponse,
    convolution_matrix,
    zero_extend,
)
from .solvers import solve_normal_equations

WEIGHTING_MODES = ("identity", "fir")


@dataclass(frozen=True)
class WeightingSpec:
    """Penalty weighting: identity, or the convolution matrix of FIR taps."""

    mode: str = "identity"
    fir_taps: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.mode not in WEIGHTING_MODES:
            raise ValueError(f"mode must be one of {WEIGHTING_MODES}, got {self.mode!r}")
        if self.mode == "fir":
            if not self.fir_taps:
                raise ValueError("fir weighting requires nonempty fir_taps")
            object.__setattr__(self, "fir_taps", tuple(float(t) for t in self.fir_taps))


@dataclass(frozen=True)
class EqDesignConfig:
    """Solver parameters for the equalization filter design.

    filter_length:  number of FIR taps in the equalizer (L_a)
    lam:            regularization trade-off (lambda)
    acausal_lead:   leading zeros in the estimation targets (L_d, samples)
    device_delay:   hearing-device processing delay (d_G, samples)
    """

    filter_length: int = 99
    lam: float = 0.1
    acausal_lead: int = 32
    device_delay: int = 0
    weighting: WeightingSpec = field(default_factory=WeightingSpec)

    def __post_init__(self) -> None:
        if self.filter_length < 1:
            raise ValueError(f"filter_length must be positive, got {self.filter_length}")
        if self.lam < 0:
            raise ValueError(f"lam must be nonnegative, got {self.lam}")
        if self.acausal_lead < 0:
            raise ValueError(f"acausal_lead must be nonnegative, got {self.acausal_lead}")
        if self.device_delay < 0:
            raise ValueError(f"device_delay must be nonnegative, got {self.device_delay}")


@dataclass(frozen=True, eq=False)
class EqFilter:
    """Designed equalizer coefficients plus the norms audited at solve time."""

    coefficients: np.ndarray
    config: EqDesignConfig
    residual_norm: float
    penalty_norm: float
    normal_eq_residual: float = 0.0
    normal_eq_scale: float = 0.0

    def __post_init__(self) -> None:
        coeffs = np.array(self.coefficients, dtype=np.float64, copy=True)
        if coeffs.ndim != 1 or coeffs.size != self.config.filter_length:
            raise ValueError(
                f"expected {self.config.filter_length} coefficients, got shape {coeffs.shape}"
            )
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coefficients must all be finite")
        coeffs.flags.writeable = False
        object.__setattr__(self, "coefficients", coeffs)

    def __len__(self) -> int:
        return int(self.coefficients.size)


def weighting_matrix(spec: WeightingSpec, n_cols: int) -> ConvolutionMatrix:
    """Materialize the weighting operator for a coefficient vector of length n_cols."""
    if n_cols < 1:
        raise ValueError(f"n_cols must be at least 1, got {n_cols}")
    if spec.mode == "identity":
        taps = ImpulseResponse([1.0], DEFAULT_SAMPLE_RATE_HZ)
    else:
        taps = ImpulseResponse(np.asarray(spec.fir_taps), DEFAULT_SAMPLE_RATE_HZ)
    return convolution_matrix(taps, n_cols)


def build_target(
    r_open: RelativeTransferEstimate,
    r_occ: RelativeTransferEstimate,
    g: ImpulseResponse,
) -> np.ndarray:
    """Equalization target: open-ear RTF minus the device-inverted occluded RTF.

    The occluded estimate is deconvolved by the device processing `g`; for a
    pure-delay device this discards its leading `device delay` samples and
    zero-fills the tail.
    """
    if r_open.acausal_lead != r_occ.acausal_lead:
        raise ValueError(
            f"incompatible acausal leads: {r_open.acausal_lead} vs {r_occ.acausal_lead}"
        )
    occ = r_occ.coefficients
    nonzero = np.flatnonzero(g.samples)
    if nonzero.size == 1:
        # Pure-delay (possibly scaled) device processing inverts exactly.
        shift = int(nonzero[0])
        keep = max(occ.size - shift, 0)
        inverted = np.zeros(occ.size)
        inverted[:keep] = occ[shift : shift + keep] / g.samples[shift]
    else:
        inverted = ls_deconvolve(g, occ, rtf_length=occ.size)
    n = max(r_open.coefficients.size, inverted.size)
    return zero_extend(r_open.coefficients, n) - zero_extend(inverted, n)


def _assemble(
    d_hat: ImpulseResponse, target: np.ndarray, config: EqDesignConfig
) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Convolution matrix, aligned target, tail beyond the matrix support."""
    target = np.asarray(target, dtype=np.float64)
    if target.ndim != 1 or target.size == 0:
        raise ValueError("target must be a nonempty 1-D vector")
    matrix = convolution_matrix(d_hat, config.filter_length).entries
    rows = matrix.shape[0]
    aligned = np.zeros(rows)
    keep = min(rows, target.size)
    aligned[:keep] = target[:keep]
    tail_sq = float(np.dot(target[rows:], target[rows:])) if target.size > rows else 0.0
    weights = weighting_matrix(config.weighting, config.filter_length).entries
    return matrix, aligned, weights, tail_sq


def design_filter(
    d_hat: ImpulseResponse, target: np.ndarray, config: EqDesignConfig
) -> EqFilter:
    """Solve the regularized least-squares equalizer design.

    Minimizes ``|D a - t|^2 + lam * |W a|^2`` with D the full convolution
    matrix of the receiver-to-eardrum estimate `d_hat`, over the common
    support of D's rows and the target (shorter side zero-extended).

    Raises SingularSystemError (naming the condition estimate) when lam = 0
    and the normal matrix is numerically singular.
    """
    matrix, aligned, weights, tail_sq = _assemble(d_hat, target, config)
    gram = matrix.T @ matrix
    if config.lam > 0.0:
        gram = gram + config.lam * (weights.T @ weights)
    rhs = matrix.T @ aligned
    coeffs = solve_normal_equations(gram, rhs, context="equalizer design")

    residual = matrix @ coeffs - aligned
    penalty = weights @ coeffs
    gradient = matrix.T @ residual
    if config.lam > 0.0:
        gradient = gradient + config.lam * (weights.T @ penalty)
    return EqFilter(
        coefficients=coeffs,
        config=config,
        residual_norm=float(np.sqrt(residual @ residual + tail_sq)),
        penalty_norm=float(np.linalg.norm(penalty)),
        normal_eq_residual=float(np.max(np.abs(gradient))),
        normal_eq_scale=float(np.max(np.abs(rhs))),
    )


def design_filter_pooled(
    d_hats: list[ImpulseResponse],
    targets: list[np.ndarray],
    config: EqDesignConfig,
) -> EqFilter:
    """One filter minimizing the summed design costs over several ears.

    Each ear contributes its own plant/target residual and one copy of the
    regularization penalty, so the pooled normal matrix carries the penalty
    scaled by the number of pooled ears.
    """
    if not d_hats or len(d_hats) != len(targets):
        raise ValueError("d_hats and targets must be equally long and nonempty")
    n = config.filter_length
    weights = weighting_matrix(config.weighting, n).entries
    gram = np.zeros((n, n))
    rhs = np.zeros(n)
    tail_total = 0.0
    mats = []
    aligneds = []
    for d_hat, target in zip(d_hats, targets):
        matrix, aligned, _, tail_sq = _assemble(d_hat, target, config)
        gram += matrix.T @ matrix
        rhs += matrix.T @ aligned
        tail_total += tail_sq
        mats.append(matrix)
        aligneds.append(aligned)
    lam_pooled = config.lam * len(d_hats)
    if lam_pooled > 0.0:
        gram = gram + lam_pooled * (weights.T @ weights)
    coeffs = solve_normal_equations(gram, rhs, context="pooled equalizer design")

    residual_sq = tail_total
    gradient = np.zeros(n)
    for matrix, aligned in zip(mats, aligneds):
        residual = matrix @ coeffs - aligned
        residual_sq += float(residual @ residual)
        gradient += matrix.T @ residual
    penalty = weights @ coeffs
    if lam_pooled > 0.0:
        gradient = gradient + lam_pooled * (weights.T @ penalty)
    return EqFilter(
        coefficients=coeffs,
        config=config,
        residual_norm=float(np.sqrt(residual_sq)),
        penalty_norm=float(np.linalg.norm(penalty)),
        normal_eq_residual=float(np.max(np.abs(gradient))),
        normal_eq_scale=float(np.max(np.abs(rhs))),
    )


def cost(
    a: np.ndarray,
    d_hat: ImpulseResponse,
    target: np.ndarray,
    config: EqDesignConfig,
) -> float:
    """Design cost of coefficients `a`: squared residual plus weighted penalty."""
    a = np.asarray(a, dtype=np.float64)
    if a.size != config.filter_length:
        raise ValueError(f"expected {config.filter_length} coefficients, got {a.size}")
    matrix, aligned, weights, tail_sq = _assemble(d_hat, target, config)
    residual = matrix @ a - aligned
    penalty = weights @ a
    return float(residual @ residual + tail_sq + config.lam * (penalty @ penalty))


# ---------------------------------------------------------------------------
# JSON wire format: config fields appear under their published names.
# ---------------------------------------------------------------------------


def weighting_to_json(spec: WeightingSpec) -> dict[str, Any]:
    out: dict[str, Any] = {"mode": spec.mode}
    if spec.fir_taps is not None:
        out["fir_taps"] = list(spec.fir_taps)
    return out


def weighting_from_json(data: dict[str, Any]) -> WeightingSpec:
    taps = data.get("fir_taps")
    return WeightingSpec(mode=data.get("mode", "identity"),
                         fir_taps=tuple(taps) if taps else None)


def config_to_json(config: EqDesignConfig) -> dict[str, Any]:
    return {
        "L_a": config.filter_length,
        "lambda": config.lam,
        "L_d": config.acausal_lead,
        "d_G": config.device_delay,
        "weighting": weighting_to_json(config.weighting),
    }


def config_from_json(data: dict[str, Any]) -> EqDesignConfig:
    return EqDesignConfig(
        filter_length=int(data.get("L_a", 99)),
        lam=float(data.get("lambda", 0.1)),
        acausal_lead=int(data.get("L_d", 32)),
        device_delay=int(data.get("d_G", 0)),
        weighting=weighting_from_json(data.get("weighting", {})),
    )


def filter_to_json(filt: EqFilter) -> dict[str, Any]:
    out = config_to_json(filt.config)
    out["coefficients"] = [float(c) for c in filt.coefficients]
    out["residual_norm"] = filt.residual_norm
    out["penalty_norm"] = filt.penalty_norm
    out["normal_eq_residual"] = filt.normal_eq_residual
    out["normal_eq_scale"] = filt.normal_eq_scale
    return out


def filter_from_json(data: dict[str, Any]) -> EqFilter:
    return EqFilter(
        coefficients=np.asarray(data["coefficients"], dtype=np.float64),
        config=config_from_json(data),
        residual_norm=float(data["residual_norm"]),
        penalty_norm=float(data["penalty_norm"]),
        normal_eq_residual=float(data.get("normal_eq_residual", 0.0)),
        normal_eq_scale=float(data.get("normal_eq_scale", 0.0)),
    )
