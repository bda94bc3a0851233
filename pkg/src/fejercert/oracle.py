"""Brute-force ground truth: statevector simulation on the encoded space,
the exact dephased reference, operator-level Dirichlet filtering, and shot
sampling.

The encoded qudit space [n]^m is simulated directly.  Per block, the mixer
unitary has the rank-one closed form

    <j| exp(-i beta A(K_n)) |k> = e^{i beta} (delta_jk + (e^{-i beta n} - 1)/n),

which every simulation path uses; an independent scaling-and-squaring
exponential is kept solely for validation.

Randomness: every sampling routine takes an explicit seed and uses numpy's
PCG64 generator, which is bit-reproducible across platforms.  Parallel
repetitions should derive child seeds with ``numpy.random.SeedSequence(seed).spawn``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.linalg import expm

from .instance import DEFAULT_ENUMERATION_CAP, CapExceededError, ProblemInstance
from .mixer import Envelope, EnvelopeProvenance, MixerConvention

NORM_TOL = 1e-10


@dataclass(frozen=True)
class EncodedState:
    """Statevector over [n]^m in canonical string order."""

    n: int
    m: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        if self.amplitudes.shape != (self.n**self.m,):
            raise ValueError("amplitude vector does not match n**m")
        norm = float(np.linalg.norm(self.amplitudes))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm} deviates from 1 beyond tolerance")

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def initial_state(n: int, m: int, cap: int = DEFAULT_ENUMERATION_CAP) -> EncodedState:
    """Uniform one-hot product state: every amplitude n**(-m/2)."""
    size = n**m
    if size > cap:
        raise CapExceededError(f"n**m = {size} exceeds enumeration cap {cap}")
    return EncodedState(n=n, m=m, amplitudes=np.full(size, n ** (-m / 2.0), dtype=complex))


def apply_cost(state: EncodedState, energies: np.ndarray, gamma: float) -> EncodedState:
    """Diagonal phase update: amplitude(z) *= exp(-i gamma E(z))."""
    if energies.shape != state.amplitudes.shape:
        raise ValueError("energy table does not match the state")
    amps = state.amplitudes * np.exp(-1j * gamma * energies.astype(float))
    return EncodedState(n=state.n, m=state.m, amplitudes=amps)


def _block_coefficients(n: int, beta: float, convention: MixerConvention) -> tuple:
    beta_eff = beta / n if convention is MixerConvention.NORMALIZED else beta
    phase = np.exp(1j * beta_eff)
    coupling = (np.exp(-1j * beta_eff * n) - 1.0) / n
    return phase, coupling


def block_unitary(
    n: int, beta: float, convention: MixerConvention = MixerConvention.ADJACENCY
) -> np.ndarray:
    """Single-block mixer unitary from the rank-one closed form."""
    phase, coupling = _block_coefficients(n, beta, convention)
    return phase * (np.eye(n, dtype=complex) + coupling * np.ones((n, n)))


def block_unitary_expm(
    n: int, beta: float, convention: MixerConvention = MixerConvention.ADJACENCY
) -> np.ndarray:
    """Validation oracle: scaling-and-squaring exponential of the block
    generator, independent of the closed form."""
    adjacency = np.ones((n, n)) - np.eye(n)
    if convention is MixerConvention.NORMALIZED:
        adjacency = adjacency / n
    return expm(-1j * beta * adjacency)


def apply_mixer(
    state: EncodedState, beta: float, convention: MixerConvention = MixerConvention.ADJACENCY
) -> EncodedState:
    """Apply the block-local mixer unitary to every block by axis contraction.

    Uses the rank-one structure: along each block axis the update is
    phase * (v + coupling * column_sum), O(n^m) work per block.
    """
    n, m = state.n, state.m
    phase, coupling = _block_coefficients(n, beta, convention)
    v = state.amplitudes.reshape((n,) * m, order="F")
    for axis in range(m):
        sums = v.sum(axis=axis, keepdims=True)
        v = phase * (v + coupling * sums)
    amps = np.ascontiguousarray(v.reshape(-1, order="F"))
    return EncodedState(n=n, m=m, amplitudes=amps)


def simulate(
    inst: ProblemInstance,
    gammas: Sequence[float],
    betas: Sequence[float],
    convention: MixerConvention = MixerConvention.ADJACENCY,
    cost_table: np.ndarray | None = None,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> EncodedState:
    """Alternate cost and mixer layers from the uniform initial state.

    ``cost_table`` defaults to the instance energies; pass the penalty table
    to drive the feasibility stage.
    """
    if len(gammas) != len(betas):
        raise ValueError("gamma and beta schedules must have equal length")
    energies = inst.energy if cost_table is None else np.asarray(cost_table)
    state = initial_state(inst.n, inst.m, cap=cap)
    for gamma, beta in zip(gammas, betas):
        state = apply_cost(state, energies, gamma)
        state = apply_mixer(state, beta, convention)
    return state


def projector_mass(state: EncodedState, indices: np.ndarray) -> float:
    """Probability mass of the state on a set of basis strings."""
    if indices.size == 0:
        return 0.0
    return float((np.abs(state.amplitudes[indices]) ** 2).sum())


def dephased_reference(
    inst: ProblemInstance,
    gammas: Sequence[float],
    betas: Sequence[float],
    convention: MixerConvention = MixerConvention.ADJACENCY,
    v0: np.ndarray | None = None,
) -> Envelope:
    """Exact diagonal of the dephased layer dynamics.

    Cost layers act trivially on diagonals; each mixer layer applies the
    unistochastic kernel |U|^2 built from the complex block unitary.  This
    path is independent of the trigonometric closed-form kernels and must
    agree with them bit-for-bit up to rounding.
    """
    if len(gammas) != len(betas):
        raise ValueError("gamma and beta schedules must have equal length")
    n, m = inst.n, inst.m
    if v0 is None:
        diag = np.full(inst.size, 1.0 / inst.size)
        provenance = EnvelopeProvenance.UNIFORM_INITIAL
    else:
        diag = np.asarray(v0, dtype=float).copy()
        provenance = EnvelopeProvenance.EXTERNAL_DIAGONAL
    for beta in betas:
        kernel = np.abs(block_unitary(n, beta, convention)) ** 2
        v = diag.reshape((n,) * m, order="F")
        for axis in range(m):
            v = np.moveaxis(np.tensordot(kernel, v, axes=([1], [axis])), 0, axis)
        diag = np.ascontiguousarray(v.reshape(-1, order="F"))
    return Envelope(diag, provenance)


def dirichlet_filter_oracle(
    env: Envelope, inst: ProblemInstance, gamma: float, p: int
) -> np.ndarray:
    """Operator-level filter oracle.

    Builds the normalized Dirichlet operator of the optimum-anchored cost as
    its eigenvalue map u(z) = (p+1)^(-1/2) sum_r exp(-i r gamma (E(z)-E*)),
    weights the envelope by |u(z)|^2, and normalizes.  Anchoring at the
    optimal energy makes the per-layer target rotation a global phase, so no
    separate target-phase input is needed.
    """
    if p < 0:
        raise ValueError("order must be nonnegative")
    if env.size != inst.size:
        raise ValueError("envelope does not match the instance")
    offsets = (inst.energy - inst.e_star()).astype(float)
    r = np.arange(p + 1, dtype=float)
    eig = np.exp(-1j * gamma * np.outer(offsets, r)).sum(axis=1) / math.sqrt(p + 1)
    weights = env.probs * (eig.real**2 + eig.imag**2)
    total = float(weights.sum())
    if total <= 0.0:
        raise ValueError("zero total filter weight")
    return weights / total


class ShotReport(NamedTuple):
    counts: np.ndarray
    frequency: float
    ci_low: float
    ci_high: float
    shots: int
    seed: int


def sample_shots(dist: np.ndarray, shots: int, seed: int, subset: np.ndarray) -> ShotReport:
    """Multinomial sampling, deterministic under the seed; reports the subset
    hit frequency with a 95% normal-approximation binomial interval."""
    if shots < 1:
        raise ValueError("need at least one shot")
    probs = np.clip(np.asarray(dist, dtype=float), 0.0, None)
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(shots, probs)
    hits = int(counts[subset].sum()) if subset.size else 0
    freq = hits / shots
    half = 1.96 * math.sqrt(max(freq * (1.0 - freq), 0.0) / shots)
    return ShotReport(
        counts=counts,
        frequency=freq,
        ci_low=max(0.0, freq - half),
        ci_high=min(1.0, freq + half),
        shots=shots,
        seed=seed,
    )
