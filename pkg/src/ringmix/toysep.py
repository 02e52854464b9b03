"""Desk-scale training stand-in: gradient descent over the lambda family.

Instead of a network, the "model" is one lambda per (source, host mixture)
pair, or a single shared lambda in tied mode, parameterized through a
sigmoid so every lambda stays inside (0, 1). The forward pass builds
``s_k + lambda * (host mixture noise sum)`` for every pair, and the loss is
exactly ``losses.batch_loss`` on those estimates.

Gradients are analytic through the dB energy ratios and the sigmoid, with
the projection scales treated as constants within a step (they are recomputed
from the new estimates at the next step). Terms sitting on the +/-120 dB cap
contribute zero gradient. ``loss_with_betas`` evaluates the same frozen-beta
objective at arbitrary parameters, which is what a finite-difference check
must differentiate to match the analytic gradient convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .losses import LOSS_CAP_DB, LossReport, TargetKind, _ratio_db, batch_loss
from .mixing import RingBatch
from .signal_core import Waveform

_DB_SCALE = 10.0 / math.log(10.0)

DEFAULT_STEPS = 2000
DEFAULT_STEP_SIZE = 0.05
DEFAULT_GRAD_TOL = 1e-4
DIVERGENCE_RUN = 50
# Minimum recorded-loss rise for a step to count toward divergence. Because
# betas refresh between steps, the recorded loss can creep upward while the
# flow converges on its fixed point (the within-step frozen objective still
# descends), so a step counts as diverging only when the loss rose AND the
# step failed to descend its own frozen-beta objective.
DIVERGENCE_RISE_DB = 1e-9


def _sigmoid(raw: np.ndarray) -> np.ndarray:
    out = np.empty_like(raw)
    pos = raw >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-raw[pos]))
    ez = np.exp(raw[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _logit(p: float) -> float:
    return math.log(p / (1.0 - p))


@dataclass
class LambdaModel:
    """Sigmoid-parameterized lambdas for one ring batch.

    Untied mode holds 2K raw parameters laid out as ``2 * k + slot`` with
    slot 0 the previous-mixture estimate and slot 1 the current-mixture one.
    Tied mode holds a single raw parameter shared by every position.
    """

    raw: np.ndarray
    tied: bool
    k: int

    @classmethod
    def create(cls, k: int, init_lambda: float = 0.9, tied: bool = True) -> LambdaModel:
        if not 0.0 < init_lambda < 1.0:
            raise ValueError(f"init lambda must lie in (0, 1), got {init_lambda}")
        n = 1 if tied else 2 * k
        raw = np.full(n, _logit(float(init_lambda)), dtype=np.float64)
        return cls(raw=raw, tied=tied, k=int(k))

    @property
    def n_params(self) -> int:
        return self.raw.size

    def lambdas(self) -> np.ndarray:
        """Per-position lambdas, shape (K, 2)."""
        lam = _sigmoid(self.raw)
        if self.tied:
            return np.broadcast_to(lam, (self.k, 2))
        return lam.reshape(self.k, 2)

    def mean_lambda(self) -> float:
        return float(np.mean(self.lambdas()))

    def with_raw(self, raw: np.ndarray) -> LambdaModel:
        return LambdaModel(raw=np.asarray(raw, dtype=np.float64).copy(), tied=self.tied, k=self.k)


def mixture_noise_sums(batch: RingBatch) -> list[np.ndarray]:
    """Noise sum of each mixture, in mixture order."""
    sums = []
    for a, b in batch.mixture_sources:
        sums.append(batch.sources[a].noise.samples + batch.sources[b].noise.samples)
    return sums


def estimates_for_lambdas(
    batch: RingBatch, lam: np.ndarray
) -> dict[tuple[int, int], Waveform]:
    """Lambda-family estimates ``s_k + lam[k, slot] * noise sum`` per pair.

    ``lam`` must broadcast to shape (K, 2), slot 0 being the previous host
    mixture and slot 1 the current one.
    """
    lam = np.broadcast_to(np.asarray(lam, dtype=np.float64), (batch.k, 2))
    noise_sums = mixture_noise_sums(batch)
    rate = batch.sources[0].sample_rate
    estimates: dict[tuple[int, int], Waveform] = {}
    for k in range(batch.k):
        clean = batch.sources[k].clean.samples
        for slot, j in enumerate(batch.source_mixtures[k]):
            estimates[(k, j)] = Waveform(clean + lam[k, slot] * noise_sums[j], rate)
    return estimates


def forward(model: LambdaModel, batch: RingBatch) -> dict[tuple[int, int], Waveform]:
    """Lambda-family estimates for every (source, host mixture) pair.

    With all lambdas at 0 the estimates equal the clean sources; at 1 they
    carry the host mixture's full noise.
    """
    if model.k != batch.k:
        raise ValueError(f"model sized for K={model.k} but batch has K={batch.k}")
    return estimates_for_lambdas(batch, model.lambdas())


def _targets(batch: RingBatch, target: TargetKind) -> list[Waveform]:
    return [s.noisy if target == "noisy" else s.clean for s in batch.sources]


def loss_with_betas(
    model: LambdaModel,
    batch: RingBatch,
    betas: dict[tuple[int, int], float],
    *,
    alpha: float,
    target: TargetKind = "noisy",
) -> float:
    """Batch objective with the projection scales frozen at ``betas``.

    At the parameters the betas were computed from, this equals
    ``batch_loss`` exactly; elsewhere it is the stop-gradient objective the
    analytic gradient differentiates.
    """
    lam = model.lambdas()
    noise_sums = mixture_noise_sums(batch)
    targets = _targets(batch, target)
    totals = []
    for k in range(batch.k):
        ref = targets[k].samples
        e_ref = float(np.dot(ref, ref))
        clean = batch.sources[k].clean.samples
        sdr_terms = []
        scaled = []
        for slot, j in enumerate(batch.source_mixtures[k]):
            beta = betas[(k, j)]
            est = clean + lam[k, slot] * noise_sums[j]
            residual = ref - beta * est
            e_res = float(np.dot(residual, residual))
            value, capped = _ratio_db(e_ref, e_res)
            sdr_terms.append(-LOSS_CAP_DB if capped else -value)
            scaled.append(beta * est)
        diff = scaled[0] - scaled[1]
        e_diff = float(np.dot(diff, diff))
        value, capped = _ratio_db(e_ref, e_diff)
        scer_db = -LOSS_CAP_DB if capped else -value
        totals.append(0.5 * (sdr_terms[0] + sdr_terms[1]) + float(alpha) * scer_db)
    return float(np.mean(totals))


def loss_and_grad(
    model: LambdaModel,
    batch: RingBatch,
    *,
    alpha: float,
    target: TargetKind = "noisy",
) -> tuple[float, np.ndarray, LossReport]:
    """Batch loss and its analytic gradient over the raw parameters.

    The loss comes straight from ``losses.batch_loss`` on the forward
    estimates. The gradient holds each beta constant and is zero for capped
    terms; it matches central finite differences of ``loss_with_betas``.
    """
    estimates = forward(model, batch)
    report = batch_loss(batch, estimates, target=target, alpha=alpha)

    lam = model.lambdas()
    noise_sums = mixture_noise_sums(batch)
    targets = _targets(batch, target)
    # d loss / d lambda per (k, slot)
    dlam = np.zeros((batch.k, 2), dtype=np.float64)
    for terms in report.per_source:
        k = terms.source
        ref = targets[k].samples
        scaled = []
        for slot, j in enumerate(terms.mixtures):
            beta = terms.betas[slot]
            est = estimates[(k, j)].samples
            scaled.append(beta * est)
            if not terms.sdr_capped[slot]:
                residual = ref - beta * est
                e_res = float(np.dot(residual, residual))
                d_eres = -2.0 * beta * float(np.dot(residual, noise_sums[j]))
                dlam[k, slot] += 0.5 * _DB_SCALE * d_eres / e_res
        if not terms.scer_capped:
            diff = scaled[0] - scaled[1]
            e_diff = float(np.dot(diff, diff))
            for slot, j in enumerate(terms.mixtures):
                sign = 1.0 if slot == 0 else -1.0
                d_ediff = sign * 2.0 * terms.betas[slot] * float(
                    np.dot(diff, noise_sums[j])
                )
                dlam[k, slot] += float(alpha) * _DB_SCALE * d_ediff / e_diff
    dlam /= batch.k

    sigma_prime = lam * (1.0 - lam)
    per_position = dlam * sigma_prime
    if model.tied:
        grad = np.array([per_position.sum()])
    else:
        grad = per_position.reshape(-1).copy()
    return report.batch_loss, grad, report


@dataclass(frozen=True)
class TrajectoryRecord:
    """Everything one optimization run produced.

    Row t of ``lambdas`` / ``losses`` / ``grad_max_norms`` is the state at
    evaluation t; the last row is the terminal state. ``converged`` means
    the gradient max-norm dropped below the threshold, ``diverged`` that the
    loss rose for DIVERGENCE_RUN consecutive steps.
    """

    lambdas: np.ndarray
    losses: np.ndarray
    grad_max_norms: np.ndarray
    converged: bool
    diverged: bool
    alpha: float
    step_size: float
    tied: bool
    seed: int
    target: str

    @property
    def steps_run(self) -> int:
        return int(self.losses.size)

    @property
    def final_lambdas(self) -> np.ndarray:
        return self.lambdas[-1]

    @property
    def final_mean_lambda(self) -> float:
        return float(np.mean(self.lambdas[-1]))

    @property
    def final_loss(self) -> float:
        return float(self.losses[-1])


def optimize(
    batch_or_sampler: RingBatch | Callable[[int], RingBatch],
    *,
    alpha: float,
    steps: int = DEFAULT_STEPS,
    step_size: float = DEFAULT_STEP_SIZE,
    init_lambda: float = 0.9,
    tied: bool = True,
    grad_tol: float = DEFAULT_GRAD_TOL,
    seed: int = 0,
    target: TargetKind = "noisy",
) -> TrajectoryRecord:
    """Plain fixed-step gradient descent on the raw parameters.

    ``batch_or_sampler`` is either one fixed RingBatch or a callable mapping
    the step index to a batch (for stochastic runs); either way the run is
    fully deterministic. Stops when the gradient max-norm drops below
    ``grad_tol``, when 50 consecutive steps each raised the recorded loss
    while failing to descend their own frozen-beta objective (recorded as
    divergence, not an exception), or when the budget runs out. The
    frozen-objective condition keeps the beta-refresh creep near a fixed
    point from being misread as divergence.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    sampler: Callable[[int], RingBatch]
    if isinstance(batch_or_sampler, RingBatch):
        fixed = batch_or_sampler
        sampler = lambda _step: fixed
    else:
        sampler = batch_or_sampler

    first = sampler(0)
    model = LambdaModel.create(first.k, init_lambda=init_lambda, tied=tied)

    lam_rows: list[np.ndarray] = []
    loss_rows: list[float] = []
    grad_rows: list[float] = []
    converged = False
    diverged = False
    rising = 0
    prev_loss = math.inf
    prev_batch: RingBatch | None = None
    prev_betas: dict[tuple[int, int], float] | None = None

    def record(state_loss: float, grad: np.ndarray) -> None:
        lam_rows.append(_sigmoid(model.raw).copy())
        loss_rows.append(state_loss)
        grad_rows.append(float(np.max(np.abs(grad))))

    for step in range(steps):
        batch = sampler(step)
        loss, grad, report = loss_and_grad(model, batch, alpha=alpha, target=target)
        record(loss, grad)
        if float(np.max(np.abs(grad))) < grad_tol:
            converged = True
            break
        uphill = False
        if loss > prev_loss + DIVERGENCE_RISE_DB and prev_betas is not None:
            if batch is prev_batch:
                # Fixed batch: only count the rise when the step also failed
                # to descend its own frozen-beta objective.
                frozen = loss_with_betas(
                    model, prev_batch, prev_betas, alpha=alpha, target=target
                )
                uphill = frozen >= prev_loss
            else:
                # Fresh batch per step: a rising loss streak is meaningful
                # drift regardless of the within-step descent.
                uphill = True
        rising = rising + 1 if uphill else 0
        prev_loss = loss
        prev_batch = batch
        prev_betas = report.betas_map()
        if rising >= DIVERGENCE_RUN:
            diverged = True
            break
        model.raw = model.raw - step_size * grad
    else:
        # Budget exhausted: evaluate and record the terminal state too.
        batch = sampler(steps)
        loss, grad, _ = loss_and_grad(model, batch, alpha=alpha, target=target)
        record(loss, grad)

    return TrajectoryRecord(
        lambdas=np.array(lam_rows),
        losses=np.array(loss_rows),
        grad_max_norms=np.array(grad_rows),
        converged=converged,
        diverged=diverged,
        alpha=float(alpha),
        step_size=float(step_size),
        tied=tied,
        seed=int(seed),
        target=target,
    )
