"""Fejér kernel evaluation, the filtered measurement law, and success bounds.

The order-p kernel

    F_p(theta) = (1/(p+1)) * (sin((p+1)theta/2) / sin(theta/2))^2

is the squared, normalized Dirichlet sum: nonnegative, 2pi-periodic, peak
value p+1 at theta = 0, unit mean over a period, and first zero at
2pi/(p+1).  Reweighting an envelope by F_p evaluated at wrapped phase
offsets concentrates probability on the target phase; the off-peak tail
bound 1/((p+1) sin^2(delta/2)) turns a phase gap delta into the
dimension-free success guarantee implemented here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .instance import PhaseModel
from .mixer import Envelope

# Below this |sin(theta/2)| the ratio form is catastrophically cancelled and
# the explicit Dirichlet sum is used instead (exact at the removable
# singularity: F_p(0) = p+1).
_SINGULARITY_GUARD = 1e-6


@dataclass(frozen=True)
class FejerParams:
    """Filter order, base angle, and target phase of a harmonic schedule."""

    p: int
    gamma: float
    theta_star: float = 0.0

    def __post_init__(self) -> None:
        if self.p < 0:
            raise ValueError("filter order must be nonnegative")

    def harmonic_angles(self) -> np.ndarray:
        """Cost angles r*gamma for layers r = 1..p."""
        return harmonic_schedule(self.gamma, self.p)


def harmonic_schedule(gamma: float, p: int) -> np.ndarray:
    return gamma * np.arange(1, p + 1, dtype=float)


def _fejer_by_sum(p: int, theta: np.ndarray) -> np.ndarray:
    phases = np.exp(1j * np.outer(theta, np.arange(p + 1)))
    total = phases.sum(axis=1)
    return (total.real**2 + total.imag**2) / (p + 1)


def fejer_kernel(p: int, theta):
    """Evaluate F_p pointwise (scalar or array argument).

    Near zeros of sin(theta/2) the Dirichlet-sum form is used, which is
    exact at theta = 0 (mod 2pi) where the value is p+1.
    """
    if p < 0:
        raise ValueError("filter order must be nonnegative")
    arr = np.asarray(theta, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    half_sin = np.sin(arr / 2.0)
    out = np.empty_like(arr)
    near = np.abs(half_sin) < _SINGULARITY_GUARD
    if np.any(~near):
        num = np.sin((p + 1) * arr[~near] / 2.0)
        # numerator values at kernel zeros are pure cancellation noise; snap
        # them so the zeros are exact
        num = np.where(np.abs(num) < 1e-15, 0.0, num)
        out[~near] = (num / half_sin[~near]) ** 2 / (p + 1)
    if np.any(near):
        out[near] = _fejer_by_sum(p, arr[near])
    if scalar:
        return float(out[0])
    return out


def fejer_coefficients(p: int) -> np.ndarray:
    """Fourier coefficients a_m = (p+1-|m|)/(p+1) for m = -p..p."""
    ms = np.abs(np.arange(-p, p + 1))
    return (p + 1 - ms) / (p + 1)


def offpeak_bound(p: int, delta: float) -> float:
    """Analytic off-peak bound: F_p(theta) <= 1/((p+1) sin^2(delta/2)) for
    |theta| >= delta, delta in (0, pi]."""
    _check_delta(delta)
    return 1.0 / ((p + 1) * math.sin(delta / 2.0) ** 2)


def offpeak_bound_loose(p: int, delta: float) -> float:
    """The looser chain bound pi^2 / ((p+1) delta^2)."""
    _check_delta(delta)
    return math.pi**2 / ((p + 1) * delta**2)


def offpeak_grid_max(p: int, delta: float, points: int = 4096) -> float:
    """Numeric maximum of F_p over a grid of the off-peak region |theta| in
    [delta, pi]; for validating the analytic bound, never for certificates."""
    _check_delta(delta)
    grid = np.linspace(delta, math.pi, points)
    return float(fejer_kernel(p, grid).max())


def _check_delta(delta: float) -> None:
    if not 0.0 < delta <= math.pi:
        raise ValueError("delta must lie in (0, pi]")


@dataclass(frozen=True)
class FilteredLaw:
    """Normalized filtered distribution plus its pre-normalization mass."""

    probs: np.ndarray
    denominator: float


def filtered_distribution(env: Envelope, pm: PhaseModel, p: int) -> FilteredLaw:
    """The factorized reference law: probs(z) proportional to
    W(z) * F_p(theta(z) - theta_star)."""
    if env.size != pm.theta.size:
        raise ValueError("envelope and phase model sizes differ")
    weights = env.probs * fejer_kernel(p, pm.offsets())
    denominator = float(weights.sum())
    if denominator <= 0.0:
        raise ValueError("zero filter denominator: envelope support misses all Fejér weight")
    return FilteredLaw(probs=weights / denominator, denominator=denominator)


def success_probability(law: FilteredLaw, omega_star) -> float:
    """Mass of the filtered law on the optimal set."""
    idx = np.asarray(list(omega_star) if not isinstance(omega_star, np.ndarray) else omega_star)
    if idx.size == 0:
        raise ValueError("optimal set must be nonempty")
    return float(law.probs[idx.astype(np.int64)].sum())


def success_lower_bound(p: int, c_beta: float, delta: float) -> float:
    """Dimension-free success bound
    (p+1)C / ((p+1)C + M_p(delta)(1-C)) with the analytic M_p."""
    _check_c(c_beta)
    _check_delta(delta)
    m_p = offpeak_bound(p, delta)
    num = (p + 1) * c_beta
    return num / (num + m_p * (1.0 - c_beta))


def denominator_bound(p: int, c_beta: float, delta: float) -> float:
    """Upper bound (p+1)C + M_p(delta)(1-C) on the filter denominator of any
    law with matching envelope mass and phase gap."""
    _check_c(c_beta)
    _check_delta(delta)
    return (p + 1) * c_beta + offpeak_bound(p, delta) * (1.0 - c_beta)


def _check_c(c_beta: float) -> None:
    if not 0.0 < c_beta <= 1.0:
        raise ValueError("envelope mass must lie in (0, 1]")
