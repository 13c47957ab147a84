"""Internal-state overlap models: constant overlap, pure-dephasing
wavepackets (analytic pairwise value and Monte Carlo trajectories), and
polarization rotations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .permanents import DistinguishabilityMatrix


@dataclass(frozen=True)
class DephasingParams:
    """Emitter decay rate, pure dephasing rate and optional per-photon slow
    detunings (all in mutually consistent rate units)."""

    gamma: float
    gamma_d: float = 0.0
    deltas: tuple[float, ...] = ()

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("decay rate gamma must be positive")
        if self.gamma_d < 0:
            raise ValueError("pure dephasing rate gamma_d must be >= 0")
        object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))

    @property
    def x(self) -> float:
        """Dimensionless dephasing strength 2 * gamma_d / gamma."""
        return 2.0 * self.gamma_d / self.gamma

    @classmethod
    def from_x(cls, x: float, gamma: float = 1.0, deltas=()) -> "DephasingParams":
        if x < 0:
            raise ValueError("x must be >= 0")
        return cls(gamma=gamma, gamma_d=x * gamma / 2.0, deltas=deltas)


@dataclass(frozen=True)
class PolarizationState:
    """Single-photon polarization, |amplitude_h|^2 + |amplitude_v|^2 = 1."""

    amplitude_h: complex
    amplitude_v: complex

    def __post_init__(self):
        norm = abs(self.amplitude_h) ** 2 + abs(self.amplitude_v) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"polarization state not normalized (norm^2 = {norm})")

    @classmethod
    def linear(cls, angle_rad: float) -> "PolarizationState":
        """Linear polarization rotated by `angle_rad` from horizontal (the
        action of a half-wave plate at half that angle)."""
        return cls(float(np.cos(angle_rad)), float(np.sin(angle_rad)))

    def overlap(self, other: "PolarizationState") -> complex:
        return (
            np.conj(self.amplitude_h) * other.amplitude_h
            + np.conj(self.amplitude_v) * other.amplitude_v
        )


def constant_overlap_S(n: int, c: float) -> DistinguishabilityMatrix:
    """Gram matrix with every off-diagonal overlap equal to `c`: identical
    indistinguishable components of weight c, mutually orthogonal rest."""
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"overlap must be in [0, 1], got {c}")
    s = np.full((n, n), complex(c))
    np.fill_diagonal(s, 1.0)
    return DistinguishabilityMatrix(s)


def dephasing_overlap(params: DephasingParams) -> float:
    """Mean squared wavepacket overlap gamma / (gamma + 2 gamma_d) of two
    photons from the same emitter (zero mutual detuning)."""
    return params.gamma / (params.gamma + 2.0 * params.gamma_d)


def polarization_S(states) -> DistinguishabilityMatrix:
    """Gram matrix of a list of polarization states, one per photon."""
    n = len(states)
    s = np.eye(n, dtype=complex)
    for j in range(n):
        for k in range(j + 1, n):
            s[j, k] = states[j].overlap(states[k])
            s[k, j] = np.conj(s[j, k])
    return DistinguishabilityMatrix(s)


def sample_dephased_overlaps(
    params: DephasingParams,
    n_photons: int,
    n_samples: int,
    dt: float | None = None,
    horizon: float | None = None,
    seed: int | None = None,
    chunk: int = 1000,
) -> np.ndarray:
    """Monte Carlo Gram matrices of randomly dephased wavepackets.

    Each photon gets an exponential wavepacket sqrt(gamma) exp(-gamma t / 2)
    with a slow detuning phase and a Wiener random phase of variance
    2 gamma_d t, discretized on a uniform grid and normalized; pairwise
    overlaps are trapezoid-rule inner products. Returns an
    (n_samples, n_photons, n_photons) array of sampled Gram matrices whose
    mean |S[i, j]|^2 converges to `dephasing_overlap`.

    A seed is required: sampling is deterministic given
    (seed, dt, horizon, n_samples).
    """
    if seed is None:
        raise ValueError("a seed is required; no ambient randomness")
    if n_photons < 2:
        raise ValueError("need at least two photons for overlaps")
    gamma, gamma_d = params.gamma, params.gamma_d
    dt = 0.01 / gamma if dt is None else float(dt)
    horizon = 15.0 / gamma if horizon is None else float(horizon)
    if dt <= 0 or horizon <= 0:
        raise ValueError("dt and horizon must be positive")
    deltas = np.zeros(n_photons) if not params.deltas else np.asarray(params.deltas, float)
    if deltas.shape != (n_photons,):
        raise ValueError("one detuning per photon required")

    t = np.arange(0.0, horizon + dt / 2, dt)
    nt = t.size
    weights = np.full(nt, dt)
    weights[0] = weights[-1] = dt / 2
    envelope = np.sqrt(gamma) * np.exp(-gamma * t / 2.0)
    det_phase = np.exp(-1j * deltas[:, None] * t[None, :])

    rng = np.random.default_rng(seed)
    sigma_step = np.sqrt(2.0 * gamma_d * dt)
    out = np.empty((n_samples, n_photons, n_photons), dtype=complex)
    done = 0
    while done < n_samples:
        b = min(chunk, n_samples - done)
        if gamma_d > 0:
            steps = rng.normal(scale=sigma_step, size=(b, n_photons, nt))
            steps[:, :, 0] = 0.0
            phi = np.cumsum(steps, axis=2)
        else:
            phi = np.zeros((b, n_photons, nt))
        f = envelope[None, None, :] * det_phase[None, :, :] * np.exp(-1j * phi)
        norms = np.sqrt(np.einsum("t,bpt->bp", weights, np.abs(f) ** 2))
        f /= norms[:, :, None]
        # S[b, i, j] = sum_t w_t conj(f_i) f_j
        grams = np.einsum("t,bit,bjt->bij", weights, f.conj(), f)
        # enforce exact unit diagonal / Hermiticity against roundoff
        grams = 0.5 * (grams + grams.conj().transpose(0, 2, 1))
        idx = np.arange(n_photons)
        grams[:, idx, idx] = 1.0
        out[done : done + b] = grams
        done += b
    return out
