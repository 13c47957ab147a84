"""Correlation-peak counting models and their least-squares inversion.

The raw and purified interference setups are modeled as explicit
beamsplitter networks with pairwise-interference bunching rules; central
and side correlation-peak counts follow from the system efficiency t and
the visibilities. Fitting inverts (central, side) counts for (t, V) and a
Poissonian Monte Carlo propagates count noise into parameter
uncertainties.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import least_squares


@dataclass(frozen=True)
class PeakCounts:
    """Measured central-peak counts, mean side-peak counts and the
    normalization metadata of the correlation histogram."""

    central: float
    side: float
    repetition_rate: float = 10e6
    integration_time: float = 30.0

    def __post_init__(self):
        if self.central < 0 or self.side < 0:
            raise ValueError("counts must be non-negative")
        if self.repetition_rate <= 0 or self.integration_time <= 0:
            raise ValueError("repetition rate and integration time must be positive")

    @property
    def trials(self) -> float:
        return self.repetition_rate * self.integration_time


@dataclass(frozen=True)
class SetupGeometry:
    """Splitting ratios of the measurement network. `split_bs_reflectivity`
    is the fraction continuing toward the final beamsplitter at the
    second (45:55) splitters; the demultiplexing and final splitters are
    balanced at `demux_split`."""

    demux_split: float = 0.5
    split_bs_reflectivity: float = 0.55
    mode: str = "raw"

    def __post_init__(self):
        if not 0.0 <= self.demux_split <= 1.0 or not 0.0 <= self.split_bs_reflectivity <= 1.0:
            raise ValueError("splitting ratios must be in [0, 1]")
        if self.mode not in ("raw", "purified"):
            raise ValueError("mode must be 'raw' or 'purified'")


@dataclass(frozen=True)
class FitResult:
    t: float
    v: float
    residual: float
    sigma_t: float | None = None
    sigma_v: float | None = None


class FitError(RuntimeError):
    pass


def _check_unit(name, value):
    value = np.asarray(value, dtype=float)
    if np.any(value < 0) or np.any(value > 1):
        raise ValueError(f"{name} must lie in [0, 1]")
    return value


def raw_count_model(t, v_raw, geometry: SetupGeometry, counts_meta: PeakCounts):
    """Expected (central, side) counts of the two-photon raw HOM setup.

    Central peak: both photons survive, route to the final beamsplitter
    and anti-bunch. Side peak: the square of the single-detector click
    probability P_1D of one pulse period.
    """
    t = _check_unit("t", t)
    v_raw = _check_unit("v_raw", v_raw)
    d = geometry.demux_split
    r = geometry.split_bs_reflectivity
    trials = counts_meta.trials
    p_central = t**2 * d**2 * r**2 * 0.5 * (1.0 - v_raw)
    # one photon lost: the survivor threads demux, splitter and final BS;
    # both photons alive: either both reach the final BS and the detector
    # is not avoided by bunching, or exactly one threads through fully.
    p_1d = (
        2.0 * t * (1.0 - t) * d * r * 0.5
        + t**2 * (d**2 * r**2 * 0.25 * (3.0 - v_raw) + 2.0 * d * r * 0.5 * (1.0 - d * r))
    )
    return trials * p_central, trials * p_1d**2


def pure_sub_probabilities(t, v_raw, v_pure, geometry: SetupGeometry) -> dict:
    """Per-copy routing probabilities of the purified setup.

    Top copy (heralded): h1t1 / h1t0 / h2t0 = herald click with one / no
    photon passed on, or both photons on the herald. Bottom copy: b0 / b1 /
    b2 photons reaching the final beamsplitter's lower input.
    """
    t = _check_unit("t", t)
    v_raw = _check_unit("v_raw", v_raw)
    v_pure = _check_unit("v_pure", v_pure)
    r = geometry.split_bs_reflectivity
    h = 1.0 - r  # herald arm of the 45:55 splitter
    p_bunch = 0.25 * (1.0 + v_raw)
    p_split = 2.0 * r * (1.0 - r)
    h1t1 = t**2 * p_bunch * p_split
    h1t0 = t * (2.0 * (1.0 - t) * 0.5 * h + t * (1.0 - 2.0 * p_bunch) * h)
    h2t0 = t**2 * p_bunch * h**2
    b1 = t * (2.0 * (1.0 - t) * 0.5 * r + t * (p_bunch * p_split + (1.0 - 2.0 * p_bunch) * r))
    b2 = t**2 * p_bunch * r**2
    b0 = 1.0 - b1 - b2
    return {
        "p_bunch": p_bunch,
        "p_split": p_split,
        "h1t1": h1t1,
        "h1t0": h1t0,
        "h2t0": h2t0,
        "b0": b0,
        "b1": b1,
        "b2": b2,
    }


def pure_count_model(t, v_raw, v_pure, geometry: SetupGeometry, counts_meta: PeakCounts):
    """Expected (central, side) counts of the four-photon purified setup.

    The side-peak click probability combines the top-copy herald cases with
    the bottom-copy photon numbers and the final-beamsplitter input
    configurations (single / split / bunched / three-photon). A split input
    mixes one purified with one unpurified photon, so its visibility is
    approximated by the average of the raw and purified values, with an
    explicit correction for the fully-purified sub-case.
    """
    sub = pure_sub_probabilities(t, v_raw, v_pure, geometry)
    t = _check_unit("t", t)
    v_raw = _check_unit("v_raw", v_raw)
    v_pure = _check_unit("v_pure", v_pure)
    trials = counts_meta.trials
    p_central = t**4 * sub["p_bunch"] ** 2 * sub["p_split"] ** 2 * 0.5 * (1.0 - v_pure)
    p_single = 0.5
    p_split_input = 0.25 * (3.0 - (v_raw + v_pure) / 2.0)
    p_bunched_input = 0.75
    p_three_photon = 1.0 - 0.125 * (1.0 + 2.0 * v_pure)
    p_two_purified = t**4 * sub["p_bunch"] ** 2 * sub["p_split"] ** 2
    p_1d = (
        (sub["h1t0"] + sub["h2t0"]) * (sub["b1"] * p_single + sub["b2"] * p_bunched_input)
        + sub["h1t1"]
        * (sub["b0"] * p_single + sub["b1"] * p_split_input + sub["b2"] * p_three_photon)
        - p_two_purified * p_split_input
        + p_two_purified * 0.25 * (3.0 - v_pure)
    )
    return trials * p_central, trials * p_1d**2


def _model_counts(params, geometry, counts_meta, v_raw):
    if geometry.mode == "raw":
        return raw_count_model(params[0], params[1], geometry, counts_meta)
    return pure_count_model(params[0], v_raw, params[1], geometry, counts_meta)


def fit(
    counts: PeakCounts,
    geometry: SetupGeometry,
    v_raw: float | None = None,
    grid: int = 11,
    refine_starts: int = 3,
) -> FitResult:
    """Least-squares inversion of (central, side) counts for (t, V).

    A coarse grid over [0, 1]^2 selects the best starting points, each
    refined with bounded least squares; for the purified mode `v_raw` from a
    prior raw fit enters the bunching probability as a constant.
    """
    if geometry.mode == "purified" and v_raw is None:
        raise FitError("purified-mode fit needs the raw visibility from a prior raw fit")
    if counts.central == 0 and counts.side == 0:
        raise FitError("degenerate input: central and side counts are both zero")
    observed = np.array([counts.central, counts.side], dtype=float)
    axis = np.linspace(0.0, 1.0, grid)
    tt, vv = np.meshgrid(axis, axis, indexing="ij")
    central, side = _model_counts((tt, vv), geometry, counts, v_raw)
    cost = (central - observed[0]) ** 2 + (side - observed[1]) ** 2
    order = np.argsort(cost, axis=None)

    def residuals(p):
        c, s = _model_counts((p[0], p[1]), geometry, counts, v_raw)
        return np.array([c - observed[0], s - observed[1]])

    best = None
    for flat in order[:refine_starts]:
        start = np.array([tt.flat[flat], vv.flat[flat]])
        start = np.clip(start, 1e-6, 1 - 1e-6)
        sol = least_squares(
            residuals, start, bounds=([0.0, 0.0], [1.0, 1.0]), xtol=1e-15, ftol=1e-15, gtol=1e-15
        )
        if best is None or sol.cost < best.cost:
            best = sol
    if best is None or not best.success:
        raise FitError(
            "fit did not converge; best candidate "
            + (f"t={best.x[0]:.4f}, V={best.x[1]:.4f}" if best is not None else "none")
        )
    scale = np.linalg.norm(observed)
    rel_residual = float(np.linalg.norm(residuals(best.x)) / scale) if scale > 0 else float("nan")
    return FitResult(t=float(best.x[0]), v=float(best.x[1]), residual=rel_residual)


def fit_joint(
    raw_counts: PeakCounts,
    pure_counts: PeakCounts,
    raw_geometry: SetupGeometry | None = None,
    pure_geometry: SetupGeometry | None = None,
    grid: int = 7,
    refine_starts: int = 3,
) -> tuple[float, float, float]:
    """Single-stage alternative to the raw-then-purified procedure: fit
    (t, v_raw, v_pure) jointly to all four counts with a shared efficiency.

    Overdetermined (four observations, three parameters); the default
    pipeline remains the two-stage `fit`.
    """
    raw_geometry = raw_geometry or SetupGeometry(mode="raw")
    pure_geometry = pure_geometry or SetupGeometry(mode="purified")
    observed = np.array(
        [raw_counts.central, raw_counts.side, pure_counts.central, pure_counts.side]
    )
    if not np.any(observed):
        raise FitError("degenerate input: all counts are zero")

    def residuals(p):
        t, v_raw, v_pure = p
        rc, rs = raw_count_model(t, v_raw, raw_geometry, raw_counts)
        pc, ps = pure_count_model(t, v_raw, v_pure, pure_geometry, pure_counts)
        return np.array([rc, rs, pc, ps]) - observed

    axis = np.linspace(0.05, 0.95, grid)
    tt, vr, vp = np.meshgrid(axis, axis, axis, indexing="ij")
    rc, rs = raw_count_model(tt, vr, raw_geometry, raw_counts)
    pc, ps = pure_count_model(tt, vr, vp, pure_geometry, pure_counts)
    cost = (
        (rc - observed[0]) ** 2 + (rs - observed[1]) ** 2
        + (pc - observed[2]) ** 2 + (ps - observed[3]) ** 2
    )
    best = None
    for flat in np.argsort(cost, axis=None)[:refine_starts]:
        start = np.array([tt.flat[flat], vr.flat[flat], vp.flat[flat]])
        sol = least_squares(
            residuals, start, bounds=([0.0] * 3, [1.0] * 3), xtol=1e-15, ftol=1e-15, gtol=1e-15
        )
        if best is None or sol.cost < best.cost:
            best = sol
    if best is None or not best.success:
        raise FitError("joint fit did not converge")
    return float(best.x[0]), float(best.x[1]), float(best.x[2])


def mc_uncertainty(
    counts: PeakCounts,
    geometry: SetupGeometry,
    n_resamples: int,
    seed: int,
    v_raw: float | None = None,
    max_failure_fraction: float = 0.01,
) -> tuple[float, float]:
    """Monte Carlo (sigma_t, sigma_v) assuming Poissonian counting noise.

    Central and side counts are redrawn from Poisson distributions with the
    observed means and refitted; deterministic for a given seed.
    """
    if n_resamples < 100:
        raise ValueError("need at least 100 resamples")
    rng = np.random.default_rng(seed)
    ts, vs, failures = [], [], 0
    for _ in range(n_resamples):
        resampled = replace(
            counts,
            central=float(rng.poisson(counts.central)),
            side=float(rng.poisson(counts.side)),
        )
        try:
            result = fit(resampled, geometry, v_raw=v_raw)
        except FitError:
            failures += 1
            continue
        ts.append(result.t)
        vs.append(result.v)
    if failures > max_failure_fraction * n_resamples:
        raise FitError(
            f"{failures}/{n_resamples} resample fits failed; counts too degenerate"
        )
    return float(np.std(ts, ddof=1)), float(np.std(vs, ddof=1))


def read_peak_counts(path, repetition_rate: float = 10e6, integration_time: float = 30.0) -> PeakCounts:
    """Read pre-integrated peak counts from delimited text with columns
    (peak_index, counts); peak 0 is the central peak, the side value is the
    mean over all other peaks."""
    rows = _read_two_columns(path)
    central = None
    sides = []
    for idx, value in rows:
        if int(round(idx)) == 0:
            central = value
        else:
            sides.append(value)
    if central is None:
        raise ValueError(f"{path}: no peak_index 0 (central peak) found")
    if not sides:
        raise ValueError(f"{path}: no side peaks found")
    return PeakCounts(
        central=central,
        side=float(np.mean(sides)),
        repetition_rate=repetition_rate,
        integration_time=integration_time,
    )


def read_histogram(
    path, repetition_rate: float = 10e6, integration_time: float = 30.0
) -> PeakCounts:
    """Read a time-tag histogram with columns (time_bin_ns, counts) and
    integrate peaks with a window of half the pulse period on each side of
    every multiple of the period; peak 0 is central."""
    rows = _read_two_columns(path)
    period_ns = 1e9 / repetition_rate
    peaks: dict[int, float] = {}
    for t_ns, value in rows:
        k = int(np.rint(t_ns / period_ns))
        if abs(t_ns - k * period_ns) <= period_ns / 2:
            peaks[k] = peaks.get(k, 0.0) + value
    if 0 not in peaks:
        raise ValueError(f"{path}: histogram covers no central peak")
    sides = [v for k, v in peaks.items() if k != 0]
    if not sides:
        raise ValueError(f"{path}: histogram covers no side peaks")
    return PeakCounts(
        central=peaks[0],
        side=float(np.mean(sides)),
        repetition_rate=repetition_rate,
        integration_time=integration_time,
    )


def _read_two_columns(path) -> list[tuple[float, float]]:
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.replace(",", " ").split()
            if len(parts) < 2:
                raise ValueError(f"{path}:{lineno}: expected two columns, got {line!r}")
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric value in {line!r}") from exc
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return rows


def format_fit_report(result: FitResult, geometry: SetupGeometry) -> str:
    """Human-readable key = value block for a fit result."""
    lines = [
        f"mode = {geometry.mode}",
        f"t = {result.t:.10g}",
        f"v = {result.v:.10g}",
        f"residual = {result.residual:.6g}",
    ]
    if result.sigma_t is not None:
        lines.append(f"sigma_t = {result.sigma_t:.6g}")
        lines.append(f"sigma_v = {result.sigma_v:.6g}")
    return "\n".join(lines)
