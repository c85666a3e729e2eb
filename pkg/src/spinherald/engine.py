"""Seeded Monte Carlo engine for the heralded scattering-correction sequence.

One shot runs: optical-pumping preparation (with flip error), preparation
pulse, excitation attempts repeated until a herald, a polarization-resolved
scattering kick with a recorded precession phase phi_tac, an optional extra
undetected scattering event, the heralded correction pulse, the analysis
pulse and a projective z measurement (with flip error).

Randomness contract: shot i consumes a fixed block of 12 uniform variates
taken from a Philox counter stream keyed by the run seed.  Any partition of
the shot range regenerates exactly its own rows (`shot_stream` exposes the
stream of a single shot), so the produced records are bit-identical for any
worker count or execution order.

The per-shot state is tracked as a Bloch vector; scattering branch operators
enter through their 4x4 Pauli transfer matrices conjugated by the per-shot
precession phase, which keeps every step vectorized across shots.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import ndtri
from scipy.stats import binom

from .scattering import (
    DEFAULT_EXCITATION,
    PolarizationBasis,
    branch_operators_from_vectors,
)
from .spinalg import ID2, PAULIS, SIGMA_X, SIGMA_Y, rotation_bloch

__all__ = [
    "DRAWS_PER_SHOT",
    "RotationSpec",
    "CorrectionRule",
    "UnsupportedCorrectionError",
    "ErrorBudget",
    "ExperimentConfig",
    "PulseSequence",
    "ShotRecord",
    "ShotFrame",
    "PREPARATIONS",
    "correction_for",
    "standard_sequences",
    "get_sequence",
    "run_shot",
    "run_experiment",
    "run_plan",
    "shot_stream",
    "derive_seed",
    "noisy_joint_state",
]

TAU = 2.0 * math.pi

# Uniform variates consumed per shot; a multiple of 4 so that shot substreams
# sit on Philox counter boundaries.  Slots: 0 prep flip, 1 attempt count,
# 2 undetected-scatter count, 3 dark herald, 4 scattering phase, 5 phase
# jitter, 6 branch, 7 extra scatter, 8 measurement, 9 measurement flip,
# 10-11 reserved.
DRAWS_PER_SHOT = 12
_BLOCKS_PER_SHOT = DRAWS_PER_SHOT // 4


class UnsupportedCorrectionError(ValueError):
    """Correction requested for a non-linear (irreversible) analysis basis."""


# ---------------------------------------------------------------------------
# pulse and sequence specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RotationSpec:
    """An rf pulse: rotation by `angle` about the real unit vector `axis`."""

    axis: tuple[float, float, float]
    angle: float

    def matrix(self) -> np.ndarray:
        from .spinalg import rotation

        return rotation(self.axis, self.angle)

    def bloch_matrix(self) -> np.ndarray:
        return rotation_bloch(self.axis, self.angle)

    @classmethod
    def equatorial(cls, angle: float, azimuth: float) -> "RotationSpec":
        return cls((math.cos(azimuth), math.sin(azimuth), 0.0), angle)


X_AXIS = (1.0, 0.0, 0.0)
Y_AXIS = (0.0, 1.0, 0.0)
Z_AXIS = (0.0, 0.0, 1.0)

# Named state preparations (rotation applied to |up>): the four tomography
# inputs.  plus_x = (|up>+|down>)/sqrt2, plus_y = (|up>+i|down>)/sqrt2.
PREPARATIONS: dict[str, RotationSpec | None] = {
    "up": None,
    "down": RotationSpec(X_AXIS, math.pi),
    "plus_x": RotationSpec(Y_AXIS, math.pi / 2),
    "plus_y": RotationSpec(X_AXIS, -math.pi / 2),
}


def _wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    w = math.fmod(a + math.pi, TAU)
    if w <= 0.0:
        w += TAU
    return w - math.pi


def correction_for(
    basis: PolarizationBasis, branch: int, phi_tac: float
) -> RotationSpec | None:
    """Pulse that inverts the announced branch operator of a linear basis.

    Branch operators of a linear basis at angle theta are exp(i*theta'*
    sigma_phi) with theta' = theta (branch 1) or theta + pi/2 (branch 2); the
    inverse is a rotation by 2*theta' about the equatorial axis at azimuth
    phi_tac.  theta = 0 gives {branch 1: no pulse, branch 2: pi pulse};
    theta = pi/4 gives +-pi/2 pulses.
    """
    if not basis.is_linear:
        raise UnsupportedCorrectionError(
            "heralded correction requires a linear analysis basis; "
            f"ellipticity = {basis.ellipticity!r} is projective and irreversible"
        )
    if branch not in (1, 2):
        raise ValueError(f"branch must be 1 or 2, got {branch!r}")
    theta_b = basis.theta if branch == 1 else basis.theta + math.pi / 2
    angle = _wrap_angle(2.0 * theta_b)
    if abs(angle) < 1e-12:
        return None
    return RotationSpec.equatorial(angle, phi_tac)


@dataclass(frozen=True)
class CorrectionRule:
    """Heralded correction: per-branch (angle, phase offset added to phi_tac).

    None for a branch means no pulse.  Angles must lie in (-2*pi, 2*pi].
    """

    branch_1: tuple[float, float] | None
    branch_2: tuple[float, float] | None

    def __post_init__(self):
        for entry in (self.branch_1, self.branch_2):
            if entry is not None and not (-TAU < entry[0] <= TAU):
                raise ValueError(f"correction angle out of (-2pi, 2pi]: {entry[0]!r}")

    @classmethod
    def inverse_of(cls, basis: PolarizationBasis) -> "CorrectionRule":
        """The rule that undoes each branch of a linear basis at phase phi_tac."""
        entries = []
        for branch in (1, 2):
            spec = correction_for(basis, branch, 0.0)
            entries.append(None if spec is None else (spec.angle, 0.0))
        return cls(entries[0], entries[1])

    def rotation_for(self, branch: int, phi_tac: float) -> RotationSpec | None:
        entry = self.branch_1 if branch == 1 else self.branch_2
        if entry is None:
            return None
        angle, offset = entry
        return RotationSpec.equatorial(angle, phi_tac + offset)


@dataclass(frozen=True)
class PulseSequence:
    """One experimental sequence: prep pulse, at most one scatter block with
    optional heralded correction, analysis pulse, projective z measurement.

    scatter_first reorders the pipeline so the scattering kick (plus its
    correction) acts before the prep pulse; the double-fringe experiment in
    the 45 degree basis uses it so the photon kick replaces the first pulse.
    scatter = None disables scattering entirely (identity benchmark).
    """

    name: str
    prep: RotationSpec | None = None
    scatter: PolarizationBasis | None = None
    correction: CorrectionRule | None = None
    analysis: RotationSpec | None = None
    scatter_first: bool = False

    def __post_init__(self):
        if self.correction is not None and self.scatter is None:
            raise ValueError("correction requires a scatter block")


@dataclass(frozen=True)
class ErrorBudget:
    """Experimental imperfections injected by the engine.

    p_multi       extra undetected scattering event per heralded shot
    p_dark        probability that a herald is a detector dark count
    e_prep        preparation flip probability (before the prep pulse)
    e_meas        measurement outcome flip probability
    pol_misalign  rotation error of the analysis basis, radians
    biref_phase   uncompensated retardation between the z and y analysis
                  components, radians
    phi_jitter_sigma  Gaussian noise on the recorded phi_tac, radians
    """

    p_multi: float = 0.0
    p_dark: float = 0.0
    e_prep: float = 0.0
    e_meas: float = 0.0
    pol_misalign: float = 0.0
    biref_phase: float = 0.0
    phi_jitter_sigma: float = 0.0

    def __post_init__(self):
        for name in ("p_multi", "p_dark", "e_prep", "e_meas"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p!r}")
        if self.phi_jitter_sigma < 0.0:
            raise ValueError("phi_jitter_sigma must be >= 0")

    @classmethod
    def nominal(cls) -> "ErrorBudget":
        """Error budget matching the experiment: 5% multiple scattering, 3%
        dark counts, 3% combined preparation/detection error split evenly,
        0.01 rad analysis misalignment and 0.17 rad phase jitter."""
        return cls(
            p_multi=0.05,
            p_dark=0.03,
            e_prep=0.015,
            e_meas=0.015,
            pol_misalign=0.01,
            phi_jitter_sigma=0.17,
        )


@dataclass(frozen=True)
class ExperimentConfig:
    """Run parameters: shot count, seed, excitation and detection
    probabilities, qubit splitting and the error budget.

    eta = 1 folds every scattering event into a herald; with eta < 1 each
    unheralded attempt that scattered applies the unconditioned decoherence
    channel, which is the dominant effect at realistic detection
    efficiencies (the experiment measured eta = 2.5e-3).
    """

    shots: int
    seed: int
    p_exc: float = 1.0
    eta: float = 1.0
    omega0: float = TAU * 3.5e6
    errors: ErrorBudget = field(default_factory=ErrorBudget)

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError(f"shots must be >= 1, got {self.shots!r}")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        for name in ("p_exc", "eta"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p!r}")


# ---------------------------------------------------------------------------
# records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ShotRecord:
    """Full trace of one repetition.  branch 0 / n_attempts 0 mark sequences
    without a scatter block.  is_dark is ground truth for diagnostics only
    and must never feed back into correction logic."""

    shot_id: int
    prep_applied: RotationSpec | None
    n_attempts: int
    branch: int
    phi_tac_recorded: float
    is_dark: bool
    correction_applied: RotationSpec | None
    outcome: str  # "up" | "down"


class ShotFrame:
    """Columnar collection of shot records from one run.

    Iterating yields ShotRecord objects; `select` filters by boolean mask and
    keeps run metadata.  Column arrays are never mutated after construction.
    """

    def __init__(
        self,
        shot_id: np.ndarray,
        n_attempts: np.ndarray,
        branch: np.ndarray,
        phi_tac: np.ndarray,
        is_dark: np.ndarray,
        correction_angle: np.ndarray,
        correction_azimuth: np.ndarray,
        outcome_up: np.ndarray,
        sequence: PulseSequence,
        seed: int,
    ):
        self.shot_id = shot_id
        self.n_attempts = n_attempts
        self.branch = branch
        self.phi_tac = phi_tac
        self.is_dark = is_dark
        self.correction_angle = correction_angle
        self.correction_azimuth = correction_azimuth
        self.outcome_up = outcome_up
        self.sequence = sequence
        self.seed = seed

    def __len__(self) -> int:
        return len(self.shot_id)

    def select(self, mask: np.ndarray) -> "ShotFrame":
        return ShotFrame(
            self.shot_id[mask],
            self.n_attempts[mask],
            self.branch[mask],
            self.phi_tac[mask],
            self.is_dark[mask],
            self.correction_angle[mask],
            self.correction_azimuth[mask],
            self.outcome_up[mask],
            self.sequence,
            self.seed,
        )

    def branch_filter(self, branch: int) -> "ShotFrame":
        return self.select(self.branch == branch)

    def __iter__(self):
        for i in range(len(self)):
            yield self.record(i)

    def record(self, i: int) -> ShotRecord:
        corr = None
        if np.isfinite(self.correction_angle[i]):
            corr = RotationSpec.equatorial(
                float(self.correction_angle[i]), float(self.correction_azimuth[i])
            )
        return ShotRecord(
            shot_id=int(self.shot_id[i]),
            prep_applied=self.sequence.prep,
            n_attempts=int(self.n_attempts[i]),
            branch=int(self.branch[i]),
            phi_tac_recorded=float(self.phi_tac[i]),
            is_dark=bool(self.is_dark[i]),
            correction_applied=corr,
            outcome="up" if self.outcome_up[i] else "down",
        )

    def equals(self, other: "ShotFrame") -> bool:
        return (
            np.array_equal(self.shot_id, other.shot_id)
            and np.array_equal(self.n_attempts, other.n_attempts)
            and np.array_equal(self.branch, other.branch)
            and np.array_equal(self.phi_tac, other.phi_tac)
            and np.array_equal(self.is_dark, other.is_dark)
            and np.array_equal(
                self.correction_angle, other.correction_angle, equal_nan=True
            )
            and np.array_equal(
                self.correction_azimuth, other.correction_azimuth, equal_nan=True
            )
            and np.array_equal(self.outcome_up, other.outcome_up)
        )


# ---------------------------------------------------------------------------
# randomness plumbing
# ---------------------------------------------------------------------------


def _philox_key(seed: int) -> np.ndarray:
    return np.random.SeedSequence(seed).generate_state(2, np.uint64)


def shot_stream(seed: int, shot_id: int) -> np.random.Generator:
    """Random stream of one shot: the run's Philox stream advanced to the
    shot's counter block.  run_shot on this stream reproduces exactly the
    record that run_experiment emits at the same index."""
    bg = np.random.Philox(key=_philox_key(seed))
    bg.advance(shot_id * _BLOCKS_PER_SHOT)
    return np.random.Generator(bg)


def _draw_rows(seed: int, start: int, count: int) -> np.ndarray:
    bg = np.random.Philox(key=_philox_key(seed))
    bg.advance(start * _BLOCKS_PER_SHOT)
    return np.random.Generator(bg).random((count, DRAWS_PER_SHOT))


def derive_seed(seed: int, index: int) -> int:
    """Deterministic child seed for sub-run `index` of a master seed."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])


def _geometric(u: np.ndarray, p: float) -> np.ndarray:
    """Inverse-CDF geometric trial count (support 1, 2, ...)."""
    if p >= 1.0:
        return np.ones(u.shape, dtype=np.int64)
    n = 1 + np.floor(np.log1p(-u) / math.log1p(-p))
    return np.maximum(n, 1).astype(np.int64)


def _binomial_icdf(u: np.ndarray, n: np.ndarray, p: float) -> np.ndarray:
    """Inverse-CDF binomial draw, vectorized over per-shot trial counts."""
    k = binom.ppf(u, n, p)
    k = np.nan_to_num(k, nan=0.0, posinf=0.0, neginf=0.0)
    return np.clip(k, 0, np.maximum(n, 0)).astype(np.int64)


def _transfer_4x4(op: np.ndarray) -> np.ndarray:
    """Pauli transfer matrix of rho -> op rho op^dag (not normalized)."""
    t = np.empty((4, 4))
    for a in range(4):
        for b in range(4):
            t[a, b] = 0.5 * np.trace(PAULIS[a] @ op @ PAULIS[b] @ op.conj().T).real
    return t


def _effective_vectors(basis: PolarizationBasis, errors: ErrorBudget) -> np.ndarray:
    """Analysis vectors actually implemented by the imperfect optics."""
    eff = PolarizationBasis(basis.theta + errors.pol_misalign, basis.ellipticity)
    vecs = eff.vectors()
    if errors.biref_phase != 0.0:
        vecs = vecs.copy()
        vecs[:, 1] *= np.exp(1.0j * errors.biref_phase)
    return vecs


# ---------------------------------------------------------------------------
# the simulation kernel
# ---------------------------------------------------------------------------


def _rotate_rows(bloch: np.ndarray, spec: RotationSpec | None) -> np.ndarray:
    if spec is None:
        return bloch
    return bloch @ spec.bloch_matrix().T


def _apply_scatter_block(config, seq, draws, bloch):
    """Attempts, herald, scattering kick.  Returns updated state and the
    per-shot (n_attempts, branch, phi_rec, dark) columns."""
    err = config.errors
    n = draws.shape[0]
    if config.p_exc * config.eta <= 0.0 and err.p_dark < 1.0:
        raise ValueError("sequence scatters but p_exc * eta = 0: no herald possible")

    if err.p_dark >= 1.0:
        p_herald = 1.0
    else:
        p_herald = min(config.p_exc * config.eta / (1.0 - err.p_dark), 1.0)
    n_att = _geometric(draws[:, 1], p_herald)

    # failed attempts that scattered without a herald decohere the spin
    p_unseen = config.p_exc * (1.0 - config.eta)
    if p_unseen > 0.0:
        k = _binomial_icdf(draws[:, 2], n_att - 1, p_unseen)
        shrink = np.float_power(0.5, k)
        bloch = bloch * np.column_stack([shrink, shrink, (k == 0).astype(float)])

    dark = draws[:, 3] < err.p_dark
    phi_true = TAU * draws[:, 4]
    if err.phi_jitter_sigma > 0.0:
        jitter = err.phi_jitter_sigma * ndtri(
            np.clip(draws[:, 5], 2.0**-53, 1.0 - 2.0**-53)
        )
    else:
        jitter = 0.0
    phi_rec = np.where(dark, phi_true, np.mod(phi_true + jitter, TAU))

    vecs = _effective_vectors(seq.scatter, err)
    m1, m2 = branch_operators_from_vectors(vecs, DEFAULT_EXCITATION, 0.0)
    t1, t2 = _transfer_4x4(m1), _transfer_4x4(m2)

    # conjugate by Rz(phi_true): rotate the state into the phase-0 frame,
    # apply the fixed transfer matrices, rotate back
    c, s = np.cos(phi_true), np.sin(phi_true)
    s4 = np.column_stack(
        [np.ones(n), c * bloch[:, 0] + s * bloch[:, 1], -s * bloch[:, 0] + c * bloch[:, 1], bloch[:, 2]]
    )
    w1 = s4 @ t1.T
    w2 = s4 @ t2.T
    p1 = np.where(dark, 0.5, w1[:, 0])
    pick1 = draws[:, 6] < p1
    branch = np.where(pick1, 1, 2).astype(np.int8)

    w = np.where(pick1[:, None], w1, w2)
    norm = np.where(np.abs(w[:, 0]) < 1e-300, 1.0, w[:, 0])
    w = w / norm[:, None]
    scattered = np.column_stack(
        [c * w[:, 1] - s * w[:, 2], s * w[:, 1] + c * w[:, 2], w[:, 3]]
    )
    bloch = np.where(dark[:, None], bloch, scattered)

    # possible extra scattering event whose photon was missed
    if err.p_multi > 0.0:
        multi = draws[:, 7] < err.p_multi
        keep_xy = np.where(multi, 0.5, 1.0)
        keep_z = np.where(multi, 0.0, 1.0)
        bloch = bloch * np.column_stack([keep_xy, keep_xy, keep_z])

    return bloch, n_att, branch, phi_rec, dark


def _apply_correction(rule, branch, phi_rec, bloch):
    """Per-shot heralded correction pulses (vectorized Rodrigues rotation)."""
    n = len(branch)
    angle = np.zeros(n)
    azimuth = np.full(n, np.nan)
    for b, entry in ((1, rule.branch_1), (2, rule.branch_2)):
        if entry is None:
            continue
        sel = branch == b
        angle[sel] = entry[0]
        azimuth[sel] = phi_rec[sel] + entry[1]

    active = angle != 0.0
    if np.any(active):
        a = angle[active]
        kx, ky = np.cos(azimuth[active]), np.sin(azimuth[active])
        v = bloch[active]
        cos_a, sin_a = np.cos(a)[:, None], np.sin(a)[:, None]
        kdotv = kx * v[:, 0] + ky * v[:, 1]
        # k x v with k = (kx, ky, 0)
        cross = np.column_stack([ky * v[:, 2], -kx * v[:, 2], kx * v[:, 1] - ky * v[:, 0]])
        k3 = np.column_stack([kx, ky, np.zeros_like(kx)])
        rotated = v * cos_a + cross * sin_a + k3 * (kdotv[:, None] * (1.0 - cos_a))
        out = bloch.copy()
        out[active] = rotated
        bloch = out

    applied_angle = np.where(np.isnan(azimuth), np.nan, angle)
    return bloch, applied_angle, azimuth


def _simulate_rows(
    config: ExperimentConfig,
    seq: PulseSequence,
    draws: np.ndarray,
    first_shot_id: int,
) -> ShotFrame:
    err = config.errors
    n = draws.shape[0]

    # optical pumping into |up>, flipped with probability e_prep
    z0 = np.where(draws[:, 0] < err.e_prep, -1.0, 1.0)
    bloch = np.zeros((n, 3))
    bloch[:, 2] = z0

    n_att = np.zeros(n, dtype=np.int64)
    branch = np.zeros(n, dtype=np.int8)
    phi_rec = np.zeros(n)
    dark = np.zeros(n, dtype=bool)
    corr_angle = np.full(n, np.nan)
    corr_azimuth = np.full(n, np.nan)

    def scatter_and_correct(state):
        nonlocal n_att, branch, phi_rec, dark, corr_angle, corr_azimuth
        state, n_att, branch, phi_rec, dark = _apply_scatter_block(
            config, seq, draws, state
        )
        if seq.correction is not None:
            state, corr_angle, corr_azimuth = _apply_correction(
                seq.correction, branch, phi_rec, state
            )
        return state

    if seq.scatter is not None and seq.scatter_first:
        bloch = scatter_and_correct(bloch)
        bloch = _rotate_rows(bloch, seq.prep)
    else:
        bloch = _rotate_rows(bloch, seq.prep)
        if seq.scatter is not None:
            bloch = scatter_and_correct(bloch)

    bloch = _rotate_rows(bloch, seq.analysis)

    p_up = np.clip(0.5 * (1.0 + bloch[:, 2]), 0.0, 1.0)
    up = draws[:, 8] < p_up
    up ^= draws[:, 9] < err.e_meas

    return ShotFrame(
        shot_id=first_shot_id + np.arange(n, dtype=np.int64),
        n_attempts=n_att,
        branch=branch,
        phi_tac=phi_rec,
        is_dark=dark,
        correction_angle=corr_angle,
        correction_azimuth=corr_azimuth,
        outcome_up=up,
        sequence=seq,
        seed=config.seed,
    )


# ---------------------------------------------------------------------------
# public entry points
# ---------------------------------------------------------------------------


def run_shot(
    config: ExperimentConfig,
    seq: PulseSequence,
    stream: np.random.Generator,
    shot_id: int = 0,
) -> ShotRecord:
    """Execute a single shot, drawing all randomness from `stream`."""
    draws = stream.random(DRAWS_PER_SHOT).reshape(1, -1)
    frame = _simulate_rows(config, seq, draws, shot_id)
    return frame.record(0)


def run_experiment(
    config: ExperimentConfig, seq: PulseSequence, workers: int = 1
) -> ShotFrame:
    """Run `config.shots` independent shots of a sequence.

    Shot i consumes the draw block derived from (seed, i) only, so the result
    is bit-identical for any `workers` value; worker threads simulate
    contiguous shot ranges and regenerate exactly their own draws.
    """
    shots = config.shots
    if workers <= 1:
        draws = _draw_rows(config.seed, 0, shots)
        return _simulate_rows(config, seq, draws, 0)

    bounds = np.linspace(0, shots, workers + 1, dtype=int)
    ranges = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]

    def job(lo: int, hi: int) -> ShotFrame:
        return _simulate_rows(config, seq, _draw_rows(config.seed, lo, hi - lo), lo)

    with ThreadPoolExecutor(max_workers=len(ranges)) as pool:
        parts = list(pool.map(lambda r: job(*r), ranges))

    return ShotFrame(
        shot_id=np.concatenate([p.shot_id for p in parts]),
        n_attempts=np.concatenate([p.n_attempts for p in parts]),
        branch=np.concatenate([p.branch for p in parts]),
        phi_tac=np.concatenate([p.phi_tac for p in parts]),
        is_dark=np.concatenate([p.is_dark for p in parts]),
        correction_angle=np.concatenate([p.correction_angle for p in parts]),
        correction_azimuth=np.concatenate([p.correction_azimuth for p in parts]),
        outcome_up=np.concatenate([p.outcome_up for p in parts]),
        sequence=seq,
        seed=config.seed,
    )


def run_plan(config: ExperimentConfig, seq: PulseSequence, settings) -> dict:
    """Run one sequence under every (preparation, analysis) setting.

    Each setting runs with prep/analysis pulses swapped into `seq` and its
    own child seed derived from (config.seed, setting.index); returns
    {setting.index: ShotFrame}.
    """
    frames = {}
    for setting in settings:
        seq_s = replace(
            seq,
            name=f"{seq.name}:{setting.label}",
            prep=setting.prep,
            analysis=setting.analysis,
        )
        cfg_s = replace(config, seed=derive_seed(config.seed, setting.index))
        frames[setting.index] = run_experiment(cfg_s, seq_s)
    return frames


# ---------------------------------------------------------------------------
# sequence catalog
# ---------------------------------------------------------------------------


def standard_sequences() -> dict[str, PulseSequence]:
    """Named catalog of the standard sequences.

    tomo_input_1..4   the four tomography preparations over an H/V scatter
    ramsey_HV         pi/2 -- scatter (H/V) -- pi/2, both pulses about +x
    ramsey_45         scatter in the 45-degree basis acts as the first
                      Ramsey pulse, then pi/2 about +x
    corrected_HV      H/V scatter followed by its heralded inverse pulse
    corrected_45      45-degree scatter followed by +-pi/2 inverse pulses
    scatter_HV/45     uncorrected scatter blocks (tomography drivers swap in
                      their own prep/analysis pulses)
    no_scatter        preparation and measurement only (identity benchmark)
    """
    hv = PolarizationBasis(0.0, 0.0)
    diag = PolarizationBasis(math.pi / 4, 0.0)
    half_x = RotationSpec(X_AXIS, math.pi / 2)
    catalog = {
        "no_scatter": PulseSequence("no_scatter"),
        "scatter_HV": PulseSequence("scatter_HV", scatter=hv),
        "scatter_45": PulseSequence("scatter_45", scatter=diag),
        "ramsey_HV": PulseSequence(
            "ramsey_HV", prep=half_x, scatter=hv, analysis=half_x
        ),
        "ramsey_45": PulseSequence(
            "ramsey_45", scatter=diag, analysis=half_x, scatter_first=True
        ),
        "corrected_HV": PulseSequence(
            "corrected_HV", scatter=hv, correction=CorrectionRule.inverse_of(hv)
        ),
        "corrected_45": PulseSequence(
            "corrected_45", scatter=diag, correction=CorrectionRule.inverse_of(diag)
        ),
    }
    for i, (label, prep) in enumerate(PREPARATIONS.items(), start=1):
        catalog[f"tomo_input_{i}"] = PulseSequence(
            f"tomo_input_{i}", prep=prep, scatter=hv
        )
    return catalog


def get_sequence(name: str) -> PulseSequence:
    catalog = standard_sequences()
    try:
        return catalog[name]
    except KeyError:
        raise KeyError(
            f"unknown sequence {name!r}; available: {sorted(catalog)}"
        ) from None


# ---------------------------------------------------------------------------
# analytic joint-state error model
# ---------------------------------------------------------------------------


def noisy_joint_state(
    state_in,
    phase: float,
    errors: ErrorBudget,
    n_quad: int = 41,
) -> np.ndarray:
    """Joint ion-photon density matrix under the error budget.

    Composes, at the state level: the preparation flip, the (misaligned,
    birefringent) analysis basis, Gauss-Hermite averaging over the phi_tac
    jitter (the reference phase is the recorded one), the dark-count
    admixture (unscattered spin with a maximally mixed photon record) and
    the extra-scattering channel on the spin side.  Detection errors e_meas
    affect recorded outcomes, not the state, and are not applied here.
    """
    psi = np.asarray(state_in, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    flipped = np.array([-np.conj(psi[1]), np.conj(psi[0])])
    inputs = [(1.0 - errors.e_prep, psi)]
    if errors.e_prep > 0.0:
        inputs.append((errors.e_prep, flipped))

    vecs = _effective_vectors(PolarizationBasis(0.0, 0.0), errors)
    e_v = np.array([1.0, 0.0], dtype=complex)
    e_h = np.array([0.0, 1.0], dtype=complex)

    if errors.phi_jitter_sigma > 0.0:
        nodes, weights = np.polynomial.hermite.hermgauss(n_quad)
        deltas = math.sqrt(2.0) * errors.phi_jitter_sigma * nodes
        weights = weights / math.sqrt(math.pi)
    else:
        deltas, weights = np.array([0.0]), np.array([1.0])

    rho = np.zeros((4, 4), dtype=complex)
    rho_in = np.zeros((2, 2), dtype=complex)
    for w_in, phi_state in inputs:
        rho_in += w_in * np.outer(phi_state, phi_state.conj())
        for delta, w in zip(deltas, weights):
            m1, m2 = branch_operators_from_vectors(
                vecs, DEFAULT_EXCITATION, phase - delta
            )
            psi4 = np.kron(m1 @ phi_state, e_v) + np.kron(m2 @ phi_state, e_h)
            rho += w_in * w * np.outer(psi4, psi4.conj())

    if errors.p_dark > 0.0:
        rho = (1.0 - errors.p_dark) * rho + errors.p_dark * np.kron(rho_in, ID2 / 2.0)

    if errors.p_multi > 0.0:
        kicked = sum(
            np.kron(k, ID2) @ rho @ np.kron(k, ID2).conj().T
            for k in (ID2 / math.sqrt(2.0), SIGMA_X / 2.0, SIGMA_Y / 2.0)
        )
        rho = (1.0 - errors.p_multi) * rho + errors.p_multi * kicked

    return rho
