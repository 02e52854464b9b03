"""Loss landscapes over the lambda family of plausible estimates.

When a separator cannot tell the two background noises of a mixture apart,
its best-case outputs for source k form the one-parameter family
``s_k + lambda * (noise sum)`` with lambda in [0, 1]. This module evaluates
the losses over that family three ways:

* closed form in expectation, assuming zero-mean independent noises, where
  the SDR residual energy becomes ``(1-lambda)^2 e1 + lambda^2 e2`` per
  source and the consistency error becomes ``lambda^2 (e1 + e2)``;
* Monte Carlo, sampling fresh noises per trial and evaluating the exact
  residual, which checks the independence assumption instead of assuming it;
* grid scans with golden-section refinement to locate minima.

Values are dB scaled (factor 10, base-10 log) like the loss kernels; the
additive reference-energy constant is dropped, which moves curves vertically
but leaves every argmin where it was. Floored evaluations cap at -120 dB.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import NoMinimumError
from .losses import LOSS_CAP_DB, RATIO_FLOOR
from .signal_core import DEFAULT_SAMPLE_RATE, energy, scale_to_snr
from .synthgen import gen_noise, gen_pseudo_speech

_MC_DOMAIN = 0x4D435052

DEFAULT_GRID_POINTS = 101
DEFAULT_REFINE_TOL = 1e-6


@dataclass(frozen=True)
class NoiseProfile:
    """Energies of the two noises entering one landscape."""

    e1: float
    e2: float

    def __post_init__(self) -> None:
        if self.e1 < 0.0 or self.e2 < 0.0:
            raise ValueError(f"noise energies must be non-negative, got {self.e1}, {self.e2}")


def _energy_db(value: float, floored: bool) -> float:
    if floored:
        return -LOSS_CAP_DB if value <= RATIO_FLOOR else 10.0 * math.log10(value)
    return 10.0 * math.log10(value)


def analytic_sdr_term(profile: NoiseProfile, lam: float, *, floored: bool = True) -> float:
    """Expected dB residual energy of one source's estimate at ``lam``.

    10 log10((1-lambda)^2 e1 + lambda^2 e2), capped at -120 dB when floored.
    """
    lam = float(lam)
    value = (1.0 - lam) ** 2 * profile.e1 + lam**2 * profile.e2
    return _energy_db(value, floored)


def analytic_pair_loss(profile: NoiseProfile, lam: float, *, floored: bool = True) -> float:
    """Expected dB objective of a whole mixture (both sources share ``lam``).

    Sum of the two residual-energy terms; symmetric about lambda = 0.5, with
    the balanced minimum at 0.5 and degenerate minima at {0, 1} when either
    energy vanishes.
    """
    lam = float(lam)
    term1 = (1.0 - lam) ** 2 * profile.e1 + lam**2 * profile.e2
    term2 = lam**2 * profile.e1 + (1.0 - lam) ** 2 * profile.e2
    return _energy_db(term1, floored) + _energy_db(term2, floored)


def analytic_scer_curve(profile: NoiseProfile, lam: float, *, floored: bool = True) -> float:
    """Expected dB consistency error at ``lam``: 10 log10(lambda^2 (e1 + e2)).

    Strictly increasing on (0, 1]; the floored value at lambda = 0 is the
    -120 dB cap.
    """
    lam = float(lam)
    value = lam**2 * (profile.e1 + profile.e2)
    return _energy_db(value, floored)


def combined_curve(
    profile: NoiseProfile, lam: float, alpha: float, *, floored: bool = True
) -> float:
    """Pair loss plus ``alpha`` times the consistency curve."""
    return analytic_pair_loss(profile, lam, floored=floored) + float(
        alpha
    ) * analytic_scer_curve(profile, lam, floored=floored)


def mc_pair_loss(
    speech_seed: int,
    noise_seeds: tuple[int, int],
    snr_db: float,
    lam: float,
    n_trials: int,
    *,
    length: int = 8000,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
) -> tuple[float, float]:
    """Monte Carlo estimate of one source's dB residual at ``lam``.

    Per trial, two fresh noises are drawn and scaled to ``snr_db`` against a
    fixed speech draw, and 10 log10 of the exact residual energy
    ``|| (1-lambda) n1 - lambda n2 ||^2`` is evaluated. Returns the sample
    mean and its standard error. Deterministic in the seeds: per-trial
    streams derive from ``noise_seeds`` through a dedicated Philox stream.
    """
    if n_trials < 2:
        raise ValueError(f"need at least 2 trials for a standard error, got {n_trials}")
    lam = float(lam)
    clean = gen_pseudo_speech(speech_seed, length, sample_rate)
    # Both seeds enter the master key so the per-trial noise streams are
    # jointly deterministic and collision free.
    key = np.array(
        [int(noise_seeds[0]), int(noise_seeds[1]) ^ _MC_DOMAIN], dtype=np.uint64
    )
    master = np.random.Generator(np.random.Philox(key=key))
    trial_seeds = master.integers(0, 2**63, size=(n_trials, 2), dtype=np.uint64)
    values = np.empty(n_trials, dtype=np.float64)
    for t in range(n_trials):
        n1 = scale_to_snr(clean, gen_noise(int(trial_seeds[t, 0]), length, sample_rate), snr_db)
        n2 = scale_to_snr(clean, gen_noise(int(trial_seeds[t, 1]), length, sample_rate), snr_db)
        residual = (1.0 - lam) * n1.samples - lam * n2.samples
        e_res = float(np.dot(residual, residual))
        values[t] = -LOSS_CAP_DB if e_res <= RATIO_FLOOR else 10.0 * math.log10(e_res)
    mean = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / math.sqrt(n_trials))
    return mean, stderr


def mc_noise_energy(
    speech_seed: int,
    snr_db: float,
    *,
    length: int = 8000,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
) -> float:
    """Noise energy the Monte Carlo sampler realizes at ``snr_db``.

    SNR scaling is energy-exact, so every trial's noises share this energy
    and the matching analytic profile is balanced at this value.
    """
    clean = gen_pseudo_speech(speech_seed, length, sample_rate)
    return energy(clean) * 10.0 ** (-float(snr_db) / 10.0)


def lambda_grid(points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """Uniform ascending grid on [0, 1] including both endpoints."""
    if points < 2:
        raise ValueError(f"grid needs at least 2 points, got {points}")
    return np.linspace(0.0, 1.0, int(points))


def golden_section(
    f: Callable[[float], float], a: float, b: float, tol: float = DEFAULT_REFINE_TOL
) -> float:
    """Golden-section minimizer on [a, b]; never evaluates the endpoints.

    Converges to the interval's minimum for unimodal curves and slides to
    the lower endpoint for monotone ones.
    """
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - inv_phi * (b - a)
    x2 = a + inv_phi * (b - a)
    f1, f2 = f(x1), f(x2)
    while (b - a) > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - inv_phi * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + inv_phi * (b - a)
            f2 = f(x2)
    return 0.5 * (a + b)


def find_minima(
    grid: np.ndarray,
    values: Sequence[float],
    *,
    refine: Callable[[float], float] | None = None,
    tol: float = DEFAULT_REFINE_TOL,
) -> list[float]:
    """All grid-local minima, optionally refined by golden section.

    A point counts when strictly below both neighbors; endpoints need only
    beat their single neighbor. A flat run strictly below its flanks yields
    the plateau midpoint. A constant curve raises NoMinimumError. When
    ``refine`` is given, each located minimum is refined inside its
    bracketing grid interval against that callable.
    """
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    if n != np.asarray(grid).size:
        raise ValueError("grid and values must have matching sizes")
    if np.all(values == values[0]):
        raise NoMinimumError("curve is constant; no minimum to locate")

    minima: list[float] = []
    brackets: list[tuple[float, float]] = []
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[j + 1] == values[i]:
            j += 1
        left_higher = i == 0 or values[i - 1] > values[i]
        right_higher = j == n - 1 or values[j + 1] > values[i]
        if left_higher and right_higher:
            minima.append(float(0.5 * (grid[i] + grid[j])))
            brackets.append(
                (float(grid[max(i - 1, 0)]), float(grid[min(j + 1, n - 1)]))
            )
        i = j + 1

    if refine is None:
        return minima
    return [golden_section(refine, a, b, tol) for (a, b) in brackets]


def descend_to_minimum(grid: np.ndarray, values: Sequence[float], start: float) -> int:
    """Index of the grid-local minimum reached by walking downhill from ``start``.

    Mirrors what a local optimizer initialized at ``start`` can reach, which
    is the right oracle for gradient descent on multimodal curves.
    """
    values = np.asarray(values, dtype=np.float64)
    idx = int(np.argmin(np.abs(np.asarray(grid) - float(start))))
    while True:
        here = values[idx]
        down = idx - 1 if idx > 0 and values[idx - 1] < here else None
        up = idx + 1 if idx + 1 < values.size and values[idx + 1] < here else None
        if down is None and up is None:
            return idx
        if down is not None and (up is None or values[down] <= values[up]):
            idx = down
        else:
            idx = up


@dataclass(frozen=True)
class LambdaLandscape:
    """Grid evaluation of every curve plus located, refined minima.

    ``combined_db`` maps each alpha to its curve; ``minima`` maps a curve
    label (``pair``, ``scer``, ``combined alpha=..``) to refined minima.
    Monte Carlo columns are present only when trials were run.
    """

    grid: np.ndarray
    pair_db: np.ndarray
    sdr_term_db: np.ndarray
    scer_db: np.ndarray
    combined_db: dict[float, np.ndarray]
    minima: dict[str, tuple[float, ...]]
    mc_mean_db: np.ndarray | None = None
    mc_stderr_db: np.ndarray | None = None
    mc_ref_term_db: np.ndarray | None = None


def combined_label(alpha: float) -> str:
    return f"combined alpha={alpha:g}"


def scan(
    profile: NoiseProfile,
    *,
    alphas: Sequence[float] = (1.0,),
    grid_points: int = DEFAULT_GRID_POINTS,
    refine_tol: float = DEFAULT_REFINE_TOL,
    mc: dict | None = None,
) -> LambdaLandscape:
    """Evaluate all curves for one profile and locate their minima.

    ``mc``, when given, carries the Monte Carlo settings: ``speech_seed``,
    ``noise_seeds``, ``snr_db``, ``n_trials``, ``length``, ``sample_rate``.
    Refinement runs against the unfloored curves so minima that sit at the
    divergent endpoints refine to the endpoints instead of to the floor's
    edge.
    """
    grid = lambda_grid(grid_points)
    pair = np.array([analytic_pair_loss(profile, x) for x in grid])
    term = np.array([analytic_sdr_term(profile, x) for x in grid])
    scer = np.array([analytic_scer_curve(profile, x) for x in grid])

    minima: dict[str, tuple[float, ...]] = {}
    minima["pair"] = tuple(
        find_minima(
            grid,
            pair,
            refine=lambda x: analytic_pair_loss(profile, x, floored=False),
            tol=refine_tol,
        )
    )
    minima["scer"] = tuple(
        find_minima(
            grid,
            scer,
            refine=lambda x: analytic_scer_curve(profile, x, floored=False),
            tol=refine_tol,
        )
    )

    combined: dict[float, np.ndarray] = {}
    for alpha in alphas:
        alpha = float(alpha)
        curve = pair + alpha * scer
        combined[alpha] = curve
        minima[combined_label(alpha)] = tuple(
            find_minima(
                grid,
                curve,
                refine=lambda x, a=alpha: combined_curve(profile, x, a, floored=False),
                tol=refine_tol,
            )
        )

    mc_mean = mc_stderr = mc_ref = None
    if mc is not None:
        means = np.empty(grid.size)
        errs = np.empty(grid.size)
        for i, x in enumerate(grid):
            means[i], errs[i] = mc_pair_loss(
                mc["speech_seed"],
                mc["noise_seeds"],
                mc["snr_db"],
                float(x),
                mc["n_trials"],
                length=mc.get("length", 8000),
                sample_rate=mc.get("sample_rate", DEFAULT_SAMPLE_RATE),
            )
        e_mc = mc_noise_energy(
            mc["speech_seed"],
            mc["snr_db"],
            length=mc.get("length", 8000),
            sample_rate=mc.get("sample_rate", DEFAULT_SAMPLE_RATE),
        )
        ref_profile = NoiseProfile(e_mc, e_mc)
        mc_ref = np.array([analytic_sdr_term(ref_profile, x) for x in grid])
        mc_mean, mc_stderr = means, errs

    return LambdaLandscape(
        grid=grid,
        pair_db=pair,
        sdr_term_db=term,
        scer_db=scer,
        combined_db=combined,
        minima=minima,
        mc_mean_db=mc_mean,
        mc_stderr_db=mc_stderr,
        mc_ref_term_db=mc_ref,
    )
