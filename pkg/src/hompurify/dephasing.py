"""Closed-form pure-dephasing model of the two-copy purifier.

The heralded coincidence at the final coupler depends not only on pairwise
wavepacket overlaps but on three- and four-photon overlap cycles. With

    p = <|a_ij|^2>,  T = <a_ij a_jk a_ki>,  Q = <a_ij a_jk a_kl a_li>

the conditional coincidence probability is

    P = (1 + p + p^2 - 2 T - Q) / (2 (1 + p)^2)

and the purified indistinguishability is 1 - 2 P. For Wiener phase noise
of variance 2 gamma_d t on each wavepacket the cycle moments close, giving
the rational form implemented by `pd_purified`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class OverlapMoments:
    """Pairwise, triple-cycle and quadruple-cycle overlap moments."""

    pair: float
    triple: float
    quad: float

    def __post_init__(self):
        if not 0.0 <= self.pair <= 1.0 + 1e-12:
            raise ValueError(f"pair moment must be in [0, 1], got {self.pair}")
        if abs(self.triple) > 1.0 + 1e-12 or abs(self.quad) > 1.0 + 1e-12:
            raise ValueError("cycle moments must lie in [-1, 1]")


def pd_coincidence(moments: OverlapMoments) -> float:
    """Conditional coincidence probability of the two purified photons.

    Ranges from 0 (perfect photons) to 1/2 (fully dephased); values outside
    [0, 1/2] signal inconsistent moments.
    """
    p, t, q = moments.pair, moments.triple, moments.quad
    val = (1.0 + p + p * p - 2.0 * t - q) / (2.0 * (1.0 + p) ** 2)
    if val < -1e-9 or val > 0.5 + 1e-9:
        raise ValueError(f"coincidence probability {val} outside [0, 1/2]")
    return float(min(max(val, 0.0), 0.5))


def pd_moments(x: float) -> OverlapMoments:
    """Exact overlap-cycle moments of the Wiener dephasing model at
    x = 2 gamma_d / gamma (zero detuning)."""
    if x < 0:
        raise ValueError("x must be >= 0")
    pair = 1.0 / (1.0 + x)
    triple = 2.0 / ((1.0 + x) * (2.0 + x))
    quad = 4.0 / ((3.0 + x) * (2.0 + x) * (1.0 + x)) + 1.0 / ((3.0 + x) * (1.0 + x) ** 2)
    return OverlapMoments(pair=pair, triple=triple, quad=quad)


def pd_purified(x: float) -> float:
    """Purified indistinguishability under pure dephasing of strength
    x = 2 gamma_d / gamma (raw pairwise indistinguishability 1 / (1 + x)):

        (x^3 + 10 x^2 + 32 x + 24) / ((3 + x) (2 + x)^3)

    This is 1 - 2 * pd_coincidence at the exact Wiener moments; it equals 1
    at x = 0 and decays like 1/x.
    """
    if x < 0:
        raise ValueError("x must be >= 0")
    return float(
        (x**3 + 10.0 * x**2 + 32.0 * x + 24.0) / ((3.0 + x) * (2.0 + x) ** 3)
    )


def moment_samples(gram_stack: np.ndarray) -> dict[str, np.ndarray]:
    """Per-sample pair, triple-cycle and quadruple-cycle overlap products
    from a stack of sampled Gram matrices (needs >= 3 photons for the
    triple, >= 4 for the quad)."""
    s = np.asarray(gram_stack)
    if s.ndim != 3 or s.shape[1] != s.shape[2]:
        raise ValueError("expected a stack of square Gram matrices")
    n = s.shape[1]
    out = {"pair": np.abs(s[:, 0, 1]) ** 2}
    if n >= 3:
        out["triple"] = (s[:, 0, 1] * s[:, 1, 2] * s[:, 2, 0]).real
    if n >= 4:
        out["quad"] = (s[:, 0, 1] * s[:, 1, 2] * s[:, 2, 3] * s[:, 3, 0]).real
    return out


def estimate_overlap_moments(gram_stack: np.ndarray) -> OverlapMoments:
    """Sample-mean overlap moments from Monte Carlo Gram matrices."""
    samp = moment_samples(gram_stack)
    if "quad" not in samp:
        raise ValueError("need at least four photons per sample for all moments")
    return OverlapMoments(
        pair=float(samp["pair"].mean()),
        triple=float(samp["triple"].mean()),
        quad=float(samp["quad"].mean()),
    )
