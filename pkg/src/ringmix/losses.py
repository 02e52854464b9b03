"""Loss and metric kernels: SDR loss, SI-SDR, SCER, batch loss, occupancy.

Conventions used throughout:

* every value carries the factor of 10 and base-10 log, so units are dB and
  lower is better for losses;
* energy ratios are floored at ``RATIO_FLOOR = 1e-12`` before the log, which
  caps losses at +/-120 dB instead of letting perfect estimates diverge;
* the projection scale beta always makes the *reference* orthogonal to
  ``reference - beta * estimate``.

``sdr_loss`` is the raw ratio kernel. ``batch_loss`` owns the scaling: each
estimate is beta-scaled per (source, host mixture) before its SDR term, and
the SCER consistency term compares the two beta-scaled estimates of the same
source, so the combined objective is scale invariant in effect while both
pieces stay independently testable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Mapping, Sequence

import numpy as np

from .errors import CoverageError, DegenerateSignalError, UndefinedScaleError
from .mixing import RingBatch
from .signal_core import (
    PROJECTION_DOT_TOL,
    Waveform,
    dot,
    energy,
    projection_scale,
    require_compatible,
)

# Floor on energy ratios before the log; caps every loss at +/-120 dB.
RATIO_FLOOR = 1e-12
LOSS_CAP_DB = 120.0

TargetKind = Literal["noisy", "clean"]


def _ratio_db(numerator: float, denominator: float) -> tuple[float, bool]:
    """10 log10(numerator / denominator) with the denominator floored.

    Returns (value, capped). ``capped`` is True when the denominator sat at
    or below the floor, in which case the value is the exact cap constant.
    """
    floor = RATIO_FLOOR * numerator
    if denominator <= floor:
        return LOSS_CAP_DB, True
    return 10.0 * math.log10(numerator / denominator), False


def sdr_loss(estimate: Waveform, reference: Waveform) -> float:
    """Negative log energy ratio of reference to residual, in dB.

    Equals -10 log10(energy(ref) / energy(ref - est)); a perfect estimate
    hits the -120 dB cap, a zero estimate scores exactly 0 dB.
    """
    require_compatible(estimate, reference)
    e_ref = energy(reference)
    if e_ref == 0.0:
        raise DegenerateSignalError("SDR loss needs a nonzero reference")
    residual = reference.samples - estimate.samples
    e_res = float(np.dot(residual, residual))
    value, capped = _ratio_db(e_ref, e_res)
    return -LOSS_CAP_DB if capped else -value


def si_sdr(estimate: Waveform, reference: Waveform) -> float:
    """Scale-invariant SDR in dB under the standard projection decomposition.

    The reference is rescaled onto the estimate's projection, so the result
    is invariant under any positive rescaling of the estimate (bit-exact for
    power-of-two scalings). Raises UndefinedScaleError when the estimate is
    orthogonal to the reference.
    """
    require_compatible(estimate, reference)
    e_ref = energy(reference)
    if e_ref == 0.0:
        raise DegenerateSignalError("SI-SDR needs a nonzero reference")
    d = dot(estimate, reference)
    gate = PROJECTION_DOT_TOL * math.sqrt(energy(estimate) * e_ref)
    if abs(d) <= gate:
        raise UndefinedScaleError("SI-SDR undefined: estimate orthogonal to reference")
    scale = d / e_ref
    target = scale * reference.samples
    residual = estimate.samples - target
    e_target = float(np.dot(target, target))
    e_residual = float(np.dot(residual, residual))
    if e_residual <= RATIO_FLOOR * e_target:
        return LOSS_CAP_DB
    if e_target <= RATIO_FLOOR * e_residual:
        return -LOSS_CAP_DB
    return 10.0 * math.log10(e_target / e_residual)


@dataclass(frozen=True)
class EstimatePair:
    """The two estimates of one source, from its previous and current mixture."""

    from_prev: Waveform
    from_curr: Waveform
    source_index: int = 0

    def __post_init__(self) -> None:
        require_compatible(self.from_prev, self.from_curr)


def scer_loss(pair: EstimatePair, reference: Waveform) -> float:
    """Signal-to-Consistency-Error Ratio loss in dB.

    -10 log10(energy(ref) / energy(from_prev - from_curr)); identical pair
    members hit the -120 dB cap.
    """
    require_compatible(pair.from_prev, reference)
    e_ref = energy(reference)
    if e_ref == 0.0:
        raise DegenerateSignalError("SCER loss needs a nonzero reference")
    diff = pair.from_prev.samples - pair.from_curr.samples
    e_diff = float(np.dot(diff, diff))
    value, capped = _ratio_db(e_ref, e_diff)
    return -LOSS_CAP_DB if capped else -value


def resolve_permutation(
    estimates: tuple[Waveform, Waveform],
    targets: tuple[Waveform, Waveform],
) -> tuple[int, int]:
    """Assignment minimizing total SDR loss for a two-source mixture.

    Returns ``perm`` with ``perm[i]`` the target index of estimate i, either
    (0, 1) or (1, 0); ties go to identity.
    """
    identity = sdr_loss(estimates[0], targets[0]) + sdr_loss(estimates[1], targets[1])
    swapped = sdr_loss(estimates[0], targets[1]) + sdr_loss(estimates[1], targets[0])
    return (1, 0) if swapped < identity else (0, 1)


def occupancy(estimate: Waveform, clean_ref: Waveform, interferer: Waveform) -> float:
    """Fraction of ``interferer`` present in the estimate after rescaling.

    The estimate is scaled by beta chosen against ``clean_ref`` and then
    projected onto the interferer: dot(beta * est, interferer) divided by
    the interferer energy. Roughly 0..1 in practice but unbounded by
    construction, so the value is never clamped.
    """
    require_compatible(estimate, interferer)
    e_int = energy(interferer)
    if e_int == 0.0:
        raise DegenerateSignalError("occupancy needs a nonzero interferer")
    beta = projection_scale(estimate, clean_ref)
    return beta * dot(estimate, interferer) / e_int


@dataclass(frozen=True)
class SourceTerms:
    """Per-source pieces of the batch loss.

    ``sdr_db`` and ``betas`` are ordered (previous mixture, current mixture).
    ``capped`` flags mark terms that sat on the +/-120 dB cap; their gradient
    is defined as zero.
    """

    source: int
    mixtures: tuple[int, int]
    sdr_db: tuple[float, float]
    scer_db: float
    betas: tuple[float, float]
    sdr_capped: tuple[bool, bool]
    scer_capped: bool


@dataclass(frozen=True)
class LossReport:
    """Batch loss plus everything needed to recombine or serialize it."""

    per_source: tuple[SourceTerms, ...]
    batch_loss: float
    alpha: float
    target: TargetKind

    def recombine(self) -> float:
        """Recompute the aggregate from the per-source fields."""
        totals = [
            0.5 * (t.sdr_db[0] + t.sdr_db[1]) + self.alpha * t.scer_db
            for t in self.per_source
        ]
        return float(np.mean(totals))

    def betas_map(self) -> dict[tuple[int, int], float]:
        """Projection scales keyed by (source, host mixture)."""
        out: dict[tuple[int, int], float] = {}
        for t in self.per_source:
            out[(t.source, t.mixtures[0])] = t.betas[0]
            out[(t.source, t.mixtures[1])] = t.betas[1]
        return out

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "target": self.target,
            "batch_loss_db": self.batch_loss,
            "per_source": [
                {
                    "source": t.source,
                    "mixtures": list(t.mixtures),
                    "sdr_db": list(t.sdr_db),
                    "scer_db": t.scer_db,
                    "betas": list(t.betas),
                }
                for t in self.per_source
            ],
        }


def _target_waveform(batch: RingBatch, k: int, target: TargetKind) -> Waveform:
    source = batch.sources[k]
    return source.noisy if target == "noisy" else source.clean


def _scaled_sdr_term(
    estimate: Waveform, reference: Waveform
) -> tuple[float, float, bool]:
    """(loss_db, beta, capped) for one beta-scaled SDR term."""
    beta = projection_scale(estimate, reference)
    e_ref = energy(reference)
    residual = reference.samples - beta * estimate.samples
    e_res = float(np.dot(residual, residual))
    value, capped = _ratio_db(e_ref, e_res)
    return (-LOSS_CAP_DB if capped else -value), beta, capped


def batch_loss(
    batch: RingBatch,
    estimates: Mapping[tuple[int, int], Waveform],
    *,
    target: TargetKind = "noisy",
    alpha: float = 1.0,
) -> LossReport:
    """Full combined objective over a ring batch.

    ``estimates`` maps (source index, host mixture index) to the network
    output for that pair; the pairing table defines which keys must exist.
    Per source: average the two beta-scaled SDR terms, then add alpha times
    the SCER of the two beta-scaled estimates; the batch value is the mean
    over sources. ``alpha=0`` reduces exactly to the mean of the 2K SDR
    terms. Permutation must already be resolved (see ``align_estimates``).
    """
    alpha = float(alpha)
    per_source = []
    totals = []
    for k in range(batch.k):
        prev_m, curr_m = batch.source_mixtures[k]
        reference = _target_waveform(batch, k, target)
        scaled = []
        sdr_terms = []
        betas = []
        caps = []
        for j in (prev_m, curr_m):
            try:
                est = estimates[(k, j)]
            except KeyError:
                raise CoverageError(
                    f"missing estimate for source {k} from mixture {j}"
                ) from None
            try:
                loss_db, beta, capped = _scaled_sdr_term(est, reference)
            except UndefinedScaleError as exc:
                raise UndefinedScaleError(
                    f"source {k}, mixture {j}: {exc}"
                ) from None
            sdr_terms.append(loss_db)
            betas.append(beta)
            caps.append(capped)
            scaled.append(est.scaled(beta))
        pair = EstimatePair(scaled[0], scaled[1], source_index=k)
        e_ref = energy(reference)
        diff = pair.from_prev.samples - pair.from_curr.samples
        e_diff = float(np.dot(diff, diff))
        scer_value, scer_capped = _ratio_db(e_ref, e_diff)
        scer_db = -LOSS_CAP_DB if scer_capped else -scer_value
        per_source.append(
            SourceTerms(
                source=k,
                mixtures=(prev_m, curr_m),
                sdr_db=(sdr_terms[0], sdr_terms[1]),
                scer_db=scer_db,
                betas=(betas[0], betas[1]),
                sdr_capped=(caps[0], caps[1]),
                scer_capped=scer_capped,
            )
        )
        totals.append(0.5 * (sdr_terms[0] + sdr_terms[1]) + alpha * scer_db)
    return LossReport(
        per_source=tuple(per_source),
        batch_loss=float(np.mean(totals)),
        alpha=alpha,
        target=target,
    )


def align_estimates(
    batch: RingBatch,
    mixture_outputs: Sequence[tuple[Waveform, Waveform]],
    *,
    target: TargetKind = "noisy",
) -> dict[tuple[int, int], Waveform]:
    """Resolve permutation per mixture and key estimates by (source, mixture).

    ``mixture_outputs[j]`` holds the two unordered outputs for mixture j.
    Each mixture is resolved independently against the chosen targets by
    total SDR loss.
    """
    if len(mixture_outputs) != len(batch.mixtures):
        raise CoverageError(
            f"got outputs for {len(mixture_outputs)} mixtures, batch has {len(batch.mixtures)}"
        )
    aligned: dict[tuple[int, int], Waveform] = {}
    for j, outputs in enumerate(mixture_outputs):
        a, b = batch.mixture_sources[j]
        targets = (_target_waveform(batch, a, target), _target_waveform(batch, b, target))
        perm = resolve_permutation((outputs[0], outputs[1]), targets)
        for est_idx, tgt_idx in enumerate(perm):
            source = (a, b)[tgt_idx]
            aligned[(source, j)] = outputs[est_idx]
    return aligned
