import numpy as np
import pytest

from hompurify import (
    ClickPattern,
    FockState,
    NoiseConfig,
    Scenario,
    beamsplitter,
    bs_sweep,
    constant_overlap_S,
    evaluate_scenario,
    hom_visibility,
    multiphoton_visibility,
    output_probability,
    p2_from_g2,
    polarization_bounds,
    purified_visibility,
    purifier_pair_circuit,
    reference_circuit,
    signature_probability,
    success_probability,
)
from hompurify.circuits import TransferMatrix

from oracles import double_permutation_multipermanent


IDENTITY_2 = TransferMatrix(np.eye(2))
COINC_2 = ClickPattern.from_modes(clicked=(0, 1))


def analytic_purified(c: float) -> float:
    """Independently derived constant-overlap purified indistinguishability:
    conditional on heralding, each copy emits (|ab> + |ba>)-type pairs whose
    cross-copy swap expectation closes to c^2 (1 + c)^2 / (1 + c^2)^2."""
    return c**2 * (1 + c) ** 2 / (1 + c**2) ** 2


def test_success_probability_values():
    assert success_probability(2) == 0.25
    assert success_probability(3) == 9 / 128
    with pytest.raises(ValueError):
        success_probability(1)


def test_success_probability_monotone_decrease():
    values = [success_probability(n) for n in range(2, 12)]
    assert all(a > b for a, b in zip(values, values[1:]))


def test_raw_hom_visibility_perfect_photons():
    bs = beamsplitter(0.5, (0, 1), 2)
    v = hom_visibility(bs, IDENTITY_2, FockState((1, 1)), COINC_2, None, np.ones((2, 2)))
    assert v == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("c", np.linspace(0, 1, 11))
def test_raw_hom_visibility_equals_c_squared(c):
    bs = beamsplitter(0.5, (0, 1), 2)
    s = constant_overlap_S(2, float(c))
    v = hom_visibility(bs, IDENTITY_2, FockState((1, 1)), COINC_2, None, s.entries)
    assert v == pytest.approx(c**2, abs=1e-12)


def test_degenerate_reference_raises():
    bs = beamsplitter(0.5, (0, 1), 2)
    pattern = ClickPattern.from_modes(clicked=(0,), silent=(1,))
    # reference keeps the photons split: two clicks on mode 0 impossible
    with pytest.raises(ValueError, match="degenerate"):
        hom_visibility(bs, IDENTITY_2, FockState((1, 1)), pattern, None, np.ones((2, 2)))


def test_purifier_distinguishable_photons():
    """Fully distinguishable photons: brute-force double-permutation sum
    confirms P_out / P_ref = 1/2, i.e. the purified photons share nothing
    (visibility 0 in the side-peak normalization)."""
    out = purifier_pair_circuit(0.5, 0.5, 0.5)
    ref = reference_circuit(0.5, 0.5)
    inp = FockState((1, 1, 0, 0, 1, 1))
    target = FockState((0, 1, 1, 1, 1, 0))
    s = np.eye(4, dtype=complex)
    p_out = output_probability(out, inp, target, s)
    p_ref = output_probability(ref, inp, target, s)
    # independent 4! x 4! brute force on both circuits
    rows = target.mode_list()
    cols = inp.mode_list()
    b_out = out.matrix[np.ix_(rows, cols)].T
    b_ref = ref.matrix[np.ix_(rows, cols)].T
    assert p_out == pytest.approx(double_permutation_multipermanent(b_out, s).real, abs=1e-14)
    assert p_ref == pytest.approx(double_permutation_multipermanent(b_ref, s).real, abs=1e-14)
    assert p_out / p_ref == pytest.approx(0.5, abs=1e-12)
    v_raw, v_pure = purified_visibility(0.0)
    assert v_pure == pytest.approx(0.0, abs=1e-12)


def test_purified_visibility_perfect_photons():
    v_raw, v_pure = purified_visibility(1.0)
    assert v_raw == pytest.approx(1.0, abs=1e-12)
    assert v_pure == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("c2", [0.3, 0.5, 0.5829, 0.8, 0.9050])
def test_purified_visibility_matches_analytic_form(c2):
    c = float(np.sqrt(c2))
    v_raw, v_pure = purified_visibility(c)
    assert v_raw == pytest.approx(c2, abs=1e-12)
    assert v_pure == pytest.approx(analytic_purified(c), abs=1e-11)


def test_purification_monotonicity_grid():
    # V_pure >= V_raw for every constant overlap; equality only at c = 1
    for c in np.linspace(0.01, 1.0, 101):
        v_raw, v_pure = purified_visibility(float(c))
        assert v_pure >= v_raw - 1e-12
        if c < 1.0 - 1e-9:
            assert v_pure > v_raw


def test_herald_pattern_consistency():
    # signature sum over the click pattern equals the explicit Fock output
    out = purifier_pair_circuit(0.5, 0.5, 0.5)
    s = constant_overlap_S(4, 0.77).entries
    inp = FockState((1, 1, 0, 0, 1, 1))
    pattern = ClickPattern.from_modes(clicked=(1, 2, 3, 4), silent=(0, 5))
    via_pattern = signature_probability(out, inp, pattern, s)
    via_state = output_probability(out, inp, FockState((0, 1, 1, 1, 1, 0)), s)
    assert via_pattern == pytest.approx(via_state, abs=1e-14)


def test_p2_from_g2():
    assert p2_from_g2(0.0) == 0.0
    assert p2_from_g2(0.02) == pytest.approx(0.010205144336439265, rel=1e-12)
    # series continuation below 1e-6 stays continuous
    assert p2_from_g2(9.9e-7) == pytest.approx(9.9e-7 / 2, rel=1e-3)
    with pytest.raises(ValueError):
        p2_from_g2(0.5)


def test_multiphoton_continuity_at_zero_g2():
    c = float(np.sqrt(0.8))
    assert multiphoton_visibility(c, 0.0) == pytest.approx(purified_visibility(c), abs=1e-12)


def test_multiphoton_reduces_improvement():
    c = float(np.sqrt(0.8))
    v_raw0, v_pure0 = multiphoton_visibility(c, 0.0)
    v_raw7, v_pure7 = multiphoton_visibility(c, 0.07)
    assert v_pure7 - v_raw7 < v_pure0 - v_raw0
    assert 0.0 <= v_raw7 <= 1.0 and 0.0 <= v_pure7 <= 1.0


def test_bs_sweep_first_and_second_invariant():
    c = float(np.sqrt(0.8))
    base = purified_visibility(c)[1]
    for which in ("first", "second"):
        rows = bs_sweep(which, [0.3, 0.45, 0.55, 0.7], c)
        for row in rows:
            assert row["v_pure"] == pytest.approx(base, abs=1e-9)


def test_bs_sweep_final_degrades():
    c = float(np.sqrt(0.8))
    rows = {r["reflectivity"]: r for r in bs_sweep("final", [0.3, 0.5], c)}
    assert rows[0.3]["v_pure"] < rows[0.5]["v_pure"]
    with pytest.raises(ValueError):
        bs_sweep("middle", [0.5], c)


def test_uniform_input_loss_leaves_visibilities():
    c = float(np.sqrt(0.8))
    clean_raw, clean_pure = purified_visibility(c)
    config = NoiseConfig(transmissions=(0.7,) * 6)
    lossy_raw, lossy_pure = purified_visibility(c, config)
    assert lossy_raw == pytest.approx(clean_raw, abs=1e-9)
    assert lossy_pure == pytest.approx(clean_pure, abs=1e-9)


def test_loss_after_first_bs_leaves_visibilities():
    c = float(np.sqrt(0.8))
    clean_raw, clean_pure = purified_visibility(c)
    config = NoiseConfig(transmissions=(0.6,) * 6, loss_stage="after_first_bs")
    lossy_raw, lossy_pure = purified_visibility(c, config)
    assert lossy_raw == pytest.approx(clean_raw, abs=1e-9)
    assert lossy_pure == pytest.approx(clean_pure, abs=1e-9)


def test_polarization_bounds_endpoints():
    rows = polarization_bounds([0.0])
    assert rows[0]["v_pure_same"] == pytest.approx(1.0, abs=1e-12)
    assert rows[0]["v_pure_opposite"] == pytest.approx(1.0, abs=1e-12)
    rows = polarization_bounds([90.0])
    assert rows[0]["v_raw"] == pytest.approx(0.0, abs=1e-12)


def test_polarization_bound_ordering():
    for row in polarization_bounds(np.linspace(4.5, 45.0, 10)):
        assert row["v_pure_same"] >= row["v_pure_opposite"] - 1e-12
        assert row["v_raw"] == pytest.approx(np.cos(np.deg2rad(row["theta_deg"])) ** 2, abs=1e-12)


def test_visibilities_bounded_for_scenario_battery():
    for c2 in (0.1, 0.5, 0.9):
        for g2 in (0.0, 0.05):
            v_raw, v_pure = multiphoton_visibility(float(np.sqrt(c2)), g2)
            assert -1e-9 <= v_raw <= 1 + 1e-9
            assert -1e-9 <= v_pure <= 1 + 1e-9


def test_noise_config_validation():
    with pytest.raises(ValueError):
        NoiseConfig(g2=0.6)
    with pytest.raises(ValueError):
        NoiseConfig(r1=1.5)
    with pytest.raises(ValueError):
        NoiseConfig(transmissions=(0.5,) * 4)
    with pytest.raises(ValueError):
        NoiseConfig(loss_stage="end")


def test_scenario_validation_and_rows():
    with pytest.raises(ValueError):
        Scenario("s", "constant")
    with pytest.raises(ValueError):
        Scenario("s", "unknown", c=0.5)
    row = evaluate_scenario(Scenario("ideal", "constant", c=1.0))
    assert row["v_raw"] == pytest.approx(1.0)
    assert row["v_pure"] == pytest.approx(1.0)
    assert row["improvement"] == pytest.approx(0.0)
    assert row["success_probability"] == 0.25
    row = evaluate_scenario(Scenario("pd", "pure_dephasing", x=0.2))
    assert row["v_raw"] == pytest.approx(1 / 1.2)
    row = evaluate_scenario(Scenario("pol", "polarization", theta_deg=20.0, direction="opposite"))
    assert 0.0 < row["v_pure"] < 1.0
