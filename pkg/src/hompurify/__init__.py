"""hompurify: simulation and fitting toolkit for linear-optical
purification of photon indistinguishability."""

from .circuits import (
    TransferMatrix,
    beamsplitter,
    compose,
    purifier_pair_circuit,
    purifier_stages,
    reference_circuit,
    with_loss,
)
from .dephasing import OverlapMoments, estimate_overlap_moments, pd_coincidence, pd_moments, pd_purified
from .distinguishability import (
    DephasingParams,
    PolarizationState,
    constant_overlap_S,
    dephasing_overlap,
    polarization_S,
    sample_dephased_overlaps,
)
from .fock import AssignmentList, ClickPattern, FockState, enumerate_outputs, patterns_for_clicks, submatrix
from .histogram_fit import (
    FitError,
    FitResult,
    PeakCounts,
    SetupGeometry,
    fit,
    mc_uncertainty,
    pure_count_model,
    raw_count_model,
)
from .permanents import (
    DistinguishabilityMatrix,
    multipermanent,
    multipermanent_batch,
    output_probability,
    permanent,
    permanent_naive,
    permanent_ryser,
)
from .protocol import (
    NoiseConfig,
    Scenario,
    bs_sweep,
    evaluate_scenario,
    hom_visibility,
    multiphoton_visibility,
    p2_from_g2,
    polarization_bounds,
    purified_visibility,
    signature_probability,
    success_probability,
)

__version__ = "0.1.0"
