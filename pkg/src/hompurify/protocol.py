"""End-to-end purification protocol: heralded visibilities, success
probability, multiphoton (g2) mixtures, and imperfection sweeps.

Visibility definition: with P_out the probability of the full detector
signature on the interfering circuit and P_ref the same on the reference
circuit (final coupler removed), the reference routes exactly one photon
to each coincidence detector, so the no-interference coincidence baseline
at a balanced coupler is P_ref / 2 and

    V = 1 - 2 * P_out / P_ref.

This reproduces V = c^2 for the bare two-photon test with constant state
overlap c, and the measured-style purified visibility (the heralded
conditional coincidence equals (1 - V) / 2).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import factorial

import numpy as np

from .circuits import TransferMatrix, compose, purifier_stages, with_loss
from .dephasing import pd_purified
from .distinguishability import constant_overlap_S, polarization_S, PolarizationState
from .fock import AssignmentList, ClickPattern, FockState, patterns_for_clicks, submatrix
from .permanents import (
    DistinguishabilityMatrix,
    multipermanent_batch,
    _as_gram,
    _occupation_factorial,
)

# Purifier mode roles (see circuits module): inputs and detector signature.
PURIFIER_INPUT = FockState((1, 1, 0, 0, 1, 1))
PURIFIER_INPUT_MODES = (0, 1, 4, 5)
RAW_INPUT = FockState((1, 0, 0, 0, 0, 1))
RAW_INPUT_MODES = (0, 5)
HERALD_PATTERN = ClickPattern.from_modes(clicked=(1, 4), silent=(0, 5))
COINCIDENCE_PATTERN = ClickPattern.from_modes(clicked=(2, 3))


@dataclass(frozen=True)
class NoiseConfig:
    """Multiphoton contamination, beamsplitter reflectivities and per-input
    transmissions of a purifier scenario."""

    g2: float = 0.0
    r1: float = 0.5
    r2: float = 0.5
    r_final: float = 0.5
    transmissions: tuple[float, ...] | None = None
    loss_stage: str = "input"

    def __post_init__(self):
        if not 0.0 <= self.g2 < 0.5:
            raise ValueError("g2 must satisfy 0 <= g2 < 0.5")
        for name in ("r1", "r2", "r_final"):
            r = getattr(self, name)
            if not 0.0 <= r <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.transmissions is not None:
            object.__setattr__(
                self, "transmissions", tuple(float(t) for t in self.transmissions)
            )
            if len(self.transmissions) != 6:
                raise ValueError("six per-mode transmissions required")
        if self.loss_stage not in ("input", "after_first_bs"):
            raise ValueError("loss_stage must be 'input' or 'after_first_bs'")


@dataclass(frozen=True)
class Scenario:
    """One simulation configuration for the CLI / sweep layer."""

    scenario_id: str
    model: str  # constant | pure_dephasing | polarization
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    c: float | None = None
    x: float | None = None
    theta_deg: float | None = None
    direction: str = "same"

    def __post_init__(self):
        if self.model not in ("constant", "pure_dephasing", "polarization"):
            raise ValueError(f"unknown model {self.model!r}")
        if self.model == "constant" and self.c is None:
            raise ValueError("constant model needs an overlap c")
        if self.model == "pure_dephasing" and self.x is None:
            raise ValueError("pure_dephasing model needs x = 2*gamma_d/gamma")
        if self.model == "polarization":
            if self.theta_deg is None:
                raise ValueError("polarization model needs theta_deg")
            if self.direction not in ("same", "opposite"):
                raise ValueError("direction must be 'same' or 'opposite'")


def success_probability(n: int) -> float:
    """Heralding success probability of the n-copy cascade at balanced
    reflectivities: (n-1)! / 2^(sum_{i=2..n} i) * n^2 / 2^n."""
    if n < 2:
        raise ValueError("the cascade needs n >= 2 input photons")
    exponent = n * (n + 1) // 2 - 1
    return factorial(n - 1) / 2.0**exponent * n**2 / 2.0**n


def signature_probability(
    circuit: TransferMatrix,
    input_state: FockState,
    pattern: ClickPattern,
    s,
    assignment: AssignmentList | None = None,
    kernel: str = "auto",
) -> float:
    """Probability of a detector signature: sum of output_probability over
    all compatible output states, including free ancilla (loss) modes."""
    n = input_state.n_photons
    s_arr = _as_gram(s)
    if assignment is not None:
        if isinstance(s, DistinguishabilityMatrix):
            s_eff = s.restrict(assignment)
        else:
            idx = list(assignment.labels)
            s_eff = s_arr[np.ix_(idx, idx)].copy()
            np.fill_diagonal(s_eff, 1.0)
    else:
        s_eff = s_arr
    if s_eff.shape != (n, n):
        raise ValueError(f"need a {n} x {n} effective Gram matrix, got {s_eff.shape}")

    if input_state.n_modes == circuit.n_physical and circuit.n_ancilla:
        input_state = FockState(input_state.occupations + (0,) * circuit.n_ancilla)
    outputs = patterns_for_clicks(pattern, n, circuit.n_modes)
    if not outputs:
        return 0.0
    mat = circuit.matrix
    bs_stack = np.empty((len(outputs), n, n), dtype=complex)
    norms = np.empty(len(outputs))
    f_in = _occupation_factorial(input_state)
    for i, out in enumerate(outputs):
        bs_stack[i] = submatrix(mat, input_state, out)
        norms[i] = f_in * _occupation_factorial(out)
    vals = multipermanent_batch(bs_stack, np.broadcast_to(s_eff, bs_stack.shape), kernel=kernel)
    return float(np.sum(vals / norms))


def hom_visibility(
    interfering: TransferMatrix,
    reference: TransferMatrix,
    input_state: FockState,
    coincidence: ClickPattern,
    heralds: ClickPattern | None,
    s,
    assignment: AssignmentList | None = None,
    kernel: str = "auto",
) -> float:
    """Visibility 1 - 2 * P_out / P_ref of a heralded interference test.

    `interfering` and `reference` are the circuits with and without the
    final coupler; the detector signature is the union of the coincidence
    and herald patterns.
    """
    pattern = coincidence if heralds is None else coincidence.merge(heralds)
    p_out = signature_probability(interfering, input_state, pattern, s, assignment, kernel)
    p_ref = signature_probability(reference, input_state, pattern, s, assignment, kernel)
    if p_ref <= 0.0:
        raise ValueError("reference probability is zero: degenerate heralding")
    return 1.0 - 2.0 * p_out / p_ref


def _build_circuits(config: NoiseConfig) -> tuple[TransferMatrix, TransferMatrix]:
    first, second, final = purifier_stages(config.r1, config.r2, config.r_final)
    if config.transmissions is None:
        out = compose(final, compose(second, first))
        ref = compose(second, first)
    elif config.loss_stage == "input":
        out = with_loss(compose(final, compose(second, first)), config.transmissions)
        ref = with_loss(compose(second, first), config.transmissions)
    else:  # loss between the first and second beamsplitters
        lossy_first = with_loss(first, config.transmissions, where="output")
        out = compose(final, compose(second, lossy_first))
        ref = compose(second, lossy_first)
    return out, ref


def _constant_or_matrix(c_or_s, n: int = 4) -> np.ndarray:
    if isinstance(c_or_s, DistinguishabilityMatrix):
        return c_or_s.entries
    if np.isscalar(c_or_s):
        return constant_overlap_S(n, float(c_or_s)).entries
    arr = np.asarray(c_or_s, dtype=complex)
    if arr.shape != (n, n):
        raise ValueError(f"expected an overlap scalar or {n} x {n} Gram matrix")
    return arr


def purified_visibility(c_or_s, config: NoiseConfig = NoiseConfig()) -> tuple[float, float]:
    """Raw and purified visibilities of one scenario.

    The raw value interferes only the two outer inputs (modes 0 and 5)
    through the full circuit; the purified value runs all four photons with
    heralds on the inner detectors.
    """
    s4 = _constant_or_matrix(c_or_s, 4)
    out, ref = _build_circuits(config)
    v_pure = hom_visibility(
        out, ref, PURIFIER_INPUT, COINCIDENCE_PATTERN, HERALD_PATTERN, s4
    )
    s2 = s4[np.ix_((0, 3), (0, 3))].copy()
    np.fill_diagonal(s2, 1.0)
    v_raw = hom_visibility(out, ref, RAW_INPUT, COINCIDENCE_PATTERN, None, s2)
    return v_raw, v_pure


def p2_from_g2(g2: float) -> float:
    """Two-photon emission probability implied by g2(0) for a source with
    no higher-order emissions: (1 - g2 - sqrt(1 - 2 g2)) / g2, evaluated by
    series below g2 = 1e-6 to avoid the removable 0/0."""
    if not 0.0 <= g2 < 0.5:
        raise ValueError("g2 must satisfy 0 <= g2 < 0.5")
    if g2 < 1e-6:
        return g2 / 2.0 + g2**2 / 2.0
    return (1.0 - g2 - np.sqrt(1.0 - 2.0 * g2)) / g2


def _mixture_signature_probability(
    circuit: TransferMatrix,
    base_modes: tuple[int, ...],
    s_base: np.ndarray,
    pattern: ClickPattern,
    p2: float,
    kernel: str = "auto",
) -> float:
    """Detector-signature probability under the two-photon emission mixture.

    Each occupied input independently carries a doubled emission with
    probability p2; a doubled photon shares its sibling's internal state.
    Sums (1 - p2)^(N - eta) * p2^eta * P_eta over all placements; every
    placement/output pair of one eta shares a kernel batch.
    """
    n_base = len(base_modes)
    n_modes = circuit.n_physical
    mat = circuit.matrix
    total = 0.0
    for eta in range(n_base + 1):
        weight = (1.0 - p2) ** (n_base - eta) * p2**eta
        if weight == 0.0:
            continue
        bs_list, ss_list, norms = [], [], []
        for doubled in itertools.combinations(range(n_base), eta):
            occ = [0] * n_modes
            labels = []
            for i, mode in enumerate(base_modes):
                k = 2 if i in doubled else 1
                occ[mode] = k
                labels.extend([i] * k)
            inp = FockState(occ + [0] * circuit.n_ancilla)
            s_eff = s_base[np.ix_(labels, labels)].copy()
            np.fill_diagonal(s_eff, 1.0)
            f_in = _occupation_factorial(inp)
            for out in patterns_for_clicks(pattern, inp.n_photons, circuit.n_modes):
                bs_list.append(submatrix(mat, inp, out))
                ss_list.append(s_eff)
                norms.append(f_in * _occupation_factorial(out))
        if not bs_list:
            continue
        vals = multipermanent_batch(np.stack(bs_list), np.stack(ss_list), kernel=kernel)
        total += weight * float(np.sum(vals / np.asarray(norms)))
    return total


def multiphoton_visibility(
    c: float, g2: float, config: NoiseConfig | None = None
) -> tuple[float, float]:
    """Raw and purified visibilities including spurious two-photon
    emissions of strength g2(0); continuous with `purified_visibility`
    as g2 -> 0."""
    config = config or NoiseConfig()
    p2 = p2_from_g2(g2)
    out, ref = _build_circuits(config)
    s4 = _constant_or_matrix(c, 4)
    pattern = COINCIDENCE_PATTERN.merge(HERALD_PATTERN)
    po = _mixture_signature_probability(out, PURIFIER_INPUT_MODES, s4, pattern, p2)
    pr = _mixture_signature_probability(ref, PURIFIER_INPUT_MODES, s4, pattern, p2)
    if pr <= 0.0:
        raise ValueError("reference probability is zero: degenerate heralding")
    v_pure = 1.0 - 2.0 * po / pr
    s2 = constant_overlap_S(2, float(c)).entries
    po = _mixture_signature_probability(out, RAW_INPUT_MODES, s2, COINCIDENCE_PATTERN, p2)
    pr = _mixture_signature_probability(ref, RAW_INPUT_MODES, s2, COINCIDENCE_PATTERN, p2)
    v_raw = 1.0 - 2.0 * po / pr
    return v_raw, v_pure


def bs_sweep(which: str, reflectivities, c: float, g2: float = 0.0) -> list[dict]:
    """Raw/purified visibilities versus one beamsplitter reflectivity, the
    other two held at 0.5. `which` is first, second or final."""
    if which not in ("first", "second", "final"):
        raise ValueError("which must be 'first', 'second' or 'final'")
    rows = []
    for r in reflectivities:
        kwargs = {"first": "r1", "second": "r2", "final": "r_final"}[which]
        config = NoiseConfig(g2=g2, **{kwargs: float(r)})
        if g2 > 0:
            v_raw, v_pure = multiphoton_visibility(c, g2, config)
        else:
            v_raw, v_pure = purified_visibility(c, config)
        rows.append({"reflectivity": float(r), "v_raw": v_raw, "v_pure": v_pure})
    return rows


def polarization_scenario_S(theta_rad: float, direction: str) -> DistinguishabilityMatrix:
    """Gram matrix of four photons with one input per copy rotated by
    theta, either both the same way or mirrored."""
    sign = {"same": 1.0, "opposite": -1.0}[direction]
    states = [
        PolarizationState.linear(theta_rad),
        PolarizationState.linear(0.0),
        PolarizationState.linear(sign * theta_rad),
        PolarizationState.linear(0.0),
    ]
    return polarization_S(states)


def polarization_bounds(thetas_deg, config: NoiseConfig | None = None) -> list[dict]:
    """Purified-visibility bounds versus polarization rotation angle: the
    same-direction case is the upper bound, opposite the lower."""
    config = config or NoiseConfig()
    out, ref = _build_circuits(config)
    rows = []
    for theta_deg in thetas_deg:
        theta = np.deg2rad(float(theta_deg))
        row = {"theta_deg": float(theta_deg)}
        for direction in ("same", "opposite"):
            s4 = polarization_scenario_S(theta, direction).entries
            row[f"v_pure_{direction}"] = hom_visibility(
                out, ref, PURIFIER_INPUT, COINCIDENCE_PATTERN, HERALD_PATTERN, s4
            )
        s2 = polarization_S(
            [PolarizationState.linear(theta), PolarizationState.linear(0.0)]
        ).entries
        row["v_raw"] = hom_visibility(out, ref, RAW_INPUT, COINCIDENCE_PATTERN, None, s2)
        rows.append(
            {k: row[k] for k in ("theta_deg", "v_raw", "v_pure_same", "v_pure_opposite")}
        )
    return rows


def evaluate_scenario(scenario: Scenario) -> dict:
    """One result row (raw, purified, improvement, success probability) for
    a Scenario; drives the CLI simulate command."""
    if scenario.model == "constant":
        if scenario.noise.g2 > 0:
            v_raw, v_pure = multiphoton_visibility(scenario.c, scenario.noise.g2, scenario.noise)
        else:
            v_raw, v_pure = purified_visibility(scenario.c, scenario.noise)
    elif scenario.model == "pure_dephasing":
        v_raw = 1.0 / (1.0 + scenario.x)
        v_pure = pd_purified(scenario.x)
    else:
        theta = np.deg2rad(scenario.theta_deg)
        out, ref = _build_circuits(scenario.noise)
        s4 = polarization_scenario_S(theta, scenario.direction).entries
        v_pure = hom_visibility(
            out, ref, PURIFIER_INPUT, COINCIDENCE_PATTERN, HERALD_PATTERN, s4
        )
        s2 = polarization_S(
            [PolarizationState.linear(theta), PolarizationState.linear(0.0)]
        ).entries
        v_raw = hom_visibility(out, ref, RAW_INPUT, COINCIDENCE_PATTERN, None, s2)
    return {
        "scenario_id": scenario.scenario_id,
        "model": scenario.model,
        "v_raw": v_raw,
        "v_pure": v_pure,
        "improvement": v_pure - v_raw,
        "success_probability": success_probability(2),
    }
