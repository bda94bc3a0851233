"""Dithered (angle-averaged) Fejér kernels and the averaged success bound.

Averaging the base cost angle over a symmetric window trades the wrapped
phase gap for an ordinary energy gap: oscillatory cross-terms in the squared
Dirichlet sum decay through the window's Fourier transform, so off-peak mass
stays bounded even without exact lattice normalization.  Only the uniform
window on [-Gamma, Gamma] ships; any even, real Fourier transform can be
passed as a callable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, NamedTuple

import numpy as np

from .fejer import fejer_kernel
from .instance import ProblemInstance
from .mixer import Envelope


class WindowKind(Enum):
    UNIFORM = "uniform"


@dataclass(frozen=True)
class DitherWindow:
    """Symmetric dither density for the base cost angle.

    The uniform window on [-half_width, half_width] has Fourier transform
    sin(Gamma xi)/(Gamma xi) with value 1 at xi = 0.
    """

    half_width: float
    kind: WindowKind = WindowKind.UNIFORM

    def __post_init__(self) -> None:
        if self.half_width <= 0:
            raise ValueError("window half-width must be positive")

    def fourier(self, xi):
        return window_fourier(self, xi)

    def density(self, u):
        arr = np.asarray(u, dtype=float)
        inside = np.abs(arr) <= self.half_width
        return np.where(inside, 1.0 / (2.0 * self.half_width), 0.0)


def window_fourier(w: DitherWindow, xi):
    """sin(Gamma xi)/(Gamma xi), exactly 1 at xi = 0."""
    arr = np.asarray(xi, dtype=float)
    # np.sinc(x) = sin(pi x)/(pi x), so rescale the argument.
    out = np.sinc(w.half_width * arr / math.pi)
    if out.ndim == 0:
        return float(out)
    return out


def averaged_fejer(p: int, gamma: float, delta_e: float, w: DitherWindow) -> float:
    """Window-averaged Fejér weight at energy offset delta_e, via the Fourier
    form grouped by harmonic distance k:

        1 + 2 sum_{k=1..p} (1 - k/(p+1)) cos(k gamma dE) w_hat(k dE).

    Exactly p+1 at delta_e = 0.
    """
    if p < 0:
        raise ValueError("order must be nonnegative")
    if delta_e == 0.0:
        return float(p + 1)
    if p == 0:
        return 1.0
    k = np.arange(1, p + 1, dtype=float)
    weights = 1.0 - k / (p + 1)
    total = 1.0 + 2.0 * float(
        np.sum(weights * np.cos(k * gamma * delta_e) * w.fourier(k * delta_e))
    )
    return total


def averaged_fejer_quadrature(
    p: int, gamma: float, delta_e: float, w: DitherWindow, tol: float = 1e-8
) -> float:
    """Independent oracle: adaptive Simpson quadrature of
    integral of w(u) F_p((gamma+u) delta_e) du over [-Gamma, Gamma]."""

    def f(u: float) -> float:
        return fejer_kernel(p, (gamma + u) * delta_e) / (2.0 * w.half_width)

    return _adaptive_simpson(f, -w.half_width, w.half_width, tol)


def _adaptive_simpson(f: Callable[[float], float], a: float, b: float, tol: float) -> float:
    fa, fb = f(a), f(b)
    mid = 0.5 * (a + b)
    fm = f(mid)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _simpson_recurse(f, a, b, fa, fb, fm, whole, tol, depth=40)


def _simpson_recurse(f, a, b, fa, fb, fm, whole, tol, depth):
    mid = 0.5 * (a + b)
    lm = 0.5 * (a + mid)
    rm = 0.5 * (mid + b)
    flm, frm = f(lm), f(rm)
    left = (mid - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - mid) / 6.0 * (fm + 4.0 * frm + fb)
    if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
        return left + right + (left + right - whole) / 15.0
    half = tol / 2.0
    return _simpson_recurse(f, a, mid, fa, fm, flm, left, half, depth - 1) + _simpson_recurse(
        f, mid, b, fm, fb, frm, right, half, depth - 1
    )


class AveragedOffpeakBound(NamedTuple):
    exact: float
    log_form: float


def averaged_offpeak_bound(p: int, half_width: float, gap: float) -> AveragedOffpeakBound:
    """Off-peak bounds for the uniform window at energy gap g:

        exact    = 1 + (2/(Gamma g)) sum_{k=1..p} (1 - k/(p+1))/k
        log_form = 1 + 2 ln(p+1)/(Gamma g)

    The partial-sum form is never larger than the logarithmic one.
    """
    if p < 0:
        raise ValueError("order must be nonnegative")
    if half_width <= 0 or gap <= 0:
        raise ValueError("half-width and gap must be positive")
    scale = 2.0 / (half_width * gap)
    k = np.arange(1, p + 1, dtype=float)
    exact = 1.0 + scale * float(np.sum((1.0 - k / (p + 1)) / k))
    log_form = 1.0 + scale * math.log(p + 1)
    return AveragedOffpeakBound(exact, log_form)


def rl_ratio_parameter(p: int, c_beta: float, mbar: float) -> float:
    """x_RL = (p+1) C / Mbar."""
    if mbar <= 0:
        raise ValueError("off-peak bound must be positive")
    _check_c(c_beta)
    return (p + 1) * c_beta / mbar


def rl_success_bound(p: int, c_beta: float, mbar: float) -> float:
    """Averaged-filter success bound (p+1)C / ((p+1)C + Mbar(1-C)).

    Substituting the exact-lattice off-peak bound for Mbar reproduces the
    unaveraged success bound identically.
    """
    if mbar < 0:
        raise ValueError("off-peak bound must be nonnegative")
    _check_c(c_beta)
    num = (p + 1) * c_beta
    return num / (num + mbar * (1.0 - c_beta))


def energy_gap(inst: ProblemInstance) -> float:
    """Minimal |E(z) - E_star| over non-optimal strings (inf if none)."""
    omega = inst.optimal_indices()
    mask = np.ones(inst.size, dtype=bool)
    mask[omega] = False
    if not mask.any():
        return math.inf
    return float(np.abs(inst.energy[mask] - inst.e_star()).min())


@dataclass(frozen=True)
class RLLaw:
    """Monte Carlo estimate of the dither-averaged measurement law.

    ``subset_mass``/``subset_stderr`` carry the per-draw mass statistics of
    the tracked subset (the per-draw masses are correlated across strings,
    so the subset error cannot be derived from the per-string errors).
    """

    probs: np.ndarray
    stderr: np.ndarray
    samples: int
    seed: int
    pooled: bool
    subset_mass: float | None = None
    subset_stderr: float | None = None


def rl_filtered_distribution(
    env: Envelope,
    inst: ProblemInstance,
    gamma: float,
    w: DitherWindow,
    p: int,
    samples: int,
    seed: int,
    pooled: bool = False,
    subset: np.ndarray | None = None,
) -> RLLaw:
    """Monte Carlo average over dither draws u of the per-u filtered law.

    Matching the averaged-bound semantics, each draw produces a normalized
    law and the laws are averaged; ``pooled`` instead averages unnormalized
    weights and normalizes once (no bound is asserted for that mode).
    Deterministic under the seed.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    if p < 0:
        raise ValueError("order must be nonnegative")
    if env.size != inst.size:
        raise ValueError("envelope does not match the instance")
    gap = energy_gap(inst)
    if gap == 0.0:
        raise ValueError("zero energy gap: a non-optimal string shares the optimal energy")

    offsets = (inst.energy - inst.e_star()).astype(float)
    rng = np.random.default_rng(seed)
    draws = rng.uniform(-w.half_width, w.half_width, size=samples)

    total = np.zeros(env.size)
    total_sq = np.zeros(env.size)
    subset_masses = [] if subset is not None else None
    for u in draws:
        weights = env.probs * fejer_kernel(p, (gamma + u) * offsets)
        mass = float(weights.sum())
        if mass <= 0.0:
            raise ValueError("zero filter denominator at a dither draw")
        law = weights if pooled else weights / mass
        total += law
        total_sq += law**2
        if subset_masses is not None:
            subset_masses.append(float(law[subset].sum()))

    mean = total / samples
    if pooled:
        norm = float(mean.sum())
        probs = mean / norm
        sub_mass = float(probs[subset].sum()) if subset is not None else None
        return RLLaw(
            probs=probs,
            stderr=np.zeros(env.size),
            samples=samples,
            seed=seed,
            pooled=True,
            subset_mass=sub_mass,
            subset_stderr=None,
        )
    if samples > 1:
        variance = (total_sq - samples * mean**2) / (samples - 1)
        stderr = np.sqrt(np.maximum(variance, 0.0) / samples)
    else:
        stderr = np.zeros(env.size)
    sub_mass = sub_err = None
    if subset_masses is not None:
        arr = np.asarray(subset_masses)
        sub_mass = float(arr.mean())
        sub_err = float(arr.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return RLLaw(
        probs=mean,
        stderr=stderr,
        samples=samples,
        seed=seed,
        pooled=False,
        subset_mass=sub_mass,
        subset_stderr=sub_err,
    )


def _check_c(c_beta: float) -> None:
    if not 0.0 < c_beta <= 1.0:
        raise ValueError("envelope mass must lie in (0, 1]")
