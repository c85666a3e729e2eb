import numpy as np
import pytest

from spinherald.scattering import unconditioned_channel
from spinherald.spinalg import SIGMA_X, from_bloch, to_bloch
from spinherald.tomography import (
    CPTPConvergenceError,
    IncompleteDataError,
    UnderdeterminedFitError,
    binned_fringe,
    bloch_ellipsoid,
    chi_to_choi,
    chi_to_ptm,
    estimate_ptm,
    fit_fringe,
    identity_overlap,
    project_cptp,
    ptm_to_chi,
    reconstruct,
    tomography_plan,
)

from conftest import kraus_transfer, synthetic_outcomes


def bernoulli_outcomes(p_up_by_setting, shots, rng):
    return {k: rng.random(shots) < p for k, p in p_up_by_setting.items()}


def channel_p_up(bloch_map, translation=(0, 0, 0)):
    plan = tomography_plan()
    p = {}
    for s in plan:
        out = np.asarray(bloch_map) @ np.asarray(s.prep_bloch) + np.asarray(translation)
        p[s.index] = 0.5 * (1.0 + float(np.dot(s.axis_bloch, out)))
    return p


# ---------------------------------------------------------------------------
# the plan
# ---------------------------------------------------------------------------


def test_plan_has_twelve_settings():
    plan = tomography_plan()
    assert len(plan) == 12
    assert [s.index for s in plan] == list(range(12))
    assert len({(s.prep_label, s.axis_label) for s in plan}) == 12


def test_plan_identity_channel_eigenstate_settings():
    # on the identity channel: preparing up and measuring z gives P(up) = 1,
    # as does preparing +x and measuring x
    p = channel_p_up(np.eye(3))
    plan = {(s.prep_label, s.axis_label): s.index for s in tomography_plan()}
    assert p[plan[("up", "z")]] == pytest.approx(1.0)
    assert p[plan[("plus_x", "x")]] == pytest.approx(1.0)
    assert p[plan[("plus_y", "y")]] == pytest.approx(1.0)
    assert p[plan[("down", "z")]] == pytest.approx(0.0)


def test_plan_rotations_map_preparation_and_axis():
    # the prep pulse creates the advertised Bloch vector; the analysis pulse
    # carries the measured axis onto +z
    from spinherald.spinalg import KET_UP, density

    for s in tomography_plan():
        psi = KET_UP if s.prep is None else s.prep.matrix() @ KET_UP
        assert np.allclose(to_bloch(density(psi)), s.prep_bloch, atol=1e-12)
        rot = np.eye(3) if s.analysis is None else s.analysis.bloch_matrix()
        assert np.allclose(rot @ np.asarray(s.axis_bloch), (0, 0, 1), atol=1e-12)


# ---------------------------------------------------------------------------
# linear inversion
# ---------------------------------------------------------------------------


def test_estimate_ptm_identity_channel():
    rng = np.random.default_rng(0)
    outcomes = bernoulli_outcomes(channel_p_up(np.eye(3)), 100_000, rng)
    ptm = estimate_ptm(outcomes)
    assert np.abs(ptm - np.eye(4)).max() < 0.02


def test_estimate_ptm_unconditioned_scattering():
    # oracle: the traced-out scattering channel applied analytically
    center = to_bloch(unconditioned_channel(from_bloch((0, 0, 0))))
    cols = np.column_stack(
        [
            to_bloch(unconditioned_channel(from_bloch(e))) - center
            for e in np.eye(3)
        ]
    )
    rng = np.random.default_rng(1)
    outcomes = bernoulli_outcomes(channel_p_up(cols, center), 100_000, rng)
    ptm = estimate_ptm(outcomes)
    assert np.abs(ptm[1:, 1:] - np.diag([0.5, 0.5, 0.0])).max() < 0.02


def test_estimate_ptm_phase_averaged_raman():
    # oracle: average the equatorial pi rotation over the recorded phase
    phis = np.linspace(0, 2 * np.pi, 720, endpoint=False)
    bloch = np.zeros((3, 3))
    for phi in phis:
        k = np.array([np.cos(phi), np.sin(phi), 0.0])
        bloch += 2.0 * np.outer(k, k) - np.eye(3)
    bloch /= len(phis)
    assert np.allclose(bloch, np.diag([0.0, 0.0, -1.0]), atol=1e-12)
    rng = np.random.default_rng(2)
    outcomes = bernoulli_outcomes(channel_p_up(bloch), 100_000, rng)
    ptm = estimate_ptm(outcomes)
    assert np.abs(ptm[1:, 1:] - np.diag([0.0, 0.0, -1.0])).max() < 0.02


def test_estimate_ptm_missing_setting():
    rng = np.random.default_rng(3)
    outcomes = bernoulli_outcomes(channel_p_up(np.eye(3)), 100, rng)
    del outcomes[5]
    with pytest.raises(IncompleteDataError, match="down"):
        estimate_ptm(outcomes)


# ---------------------------------------------------------------------------
# chi <-> ptm
# ---------------------------------------------------------------------------


def test_round_trip_is_exact():
    rng = np.random.default_rng(4)
    for _ in range(20):
        h = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        chi = h + h.conj().T
        assert np.allclose(ptm_to_chi(chi_to_ptm(chi)), chi, atol=1e-12)


def test_identity_process_chi():
    chi = ptm_to_chi(np.eye(4))
    assert np.allclose(chi, np.diag([1.0, 0, 0, 0]), atol=1e-12)


def test_sigma_x_conjugation_chi():
    ptm = kraus_transfer([SIGMA_X])
    assert np.allclose(ptm, np.diag([1.0, 1.0, -1.0, -1.0]), atol=1e-12)
    assert np.allclose(ptm_to_chi(ptm), np.diag([0, 1.0, 0, 0]), atol=1e-12)


def test_unconditioned_channel_chi_weights():
    # half identity, quarter pi rotations about each of x and y
    ptm = np.diag([1.0, 0.5, 0.5, 0.0])
    chi = ptm_to_chi(ptm)
    assert np.allclose(chi, np.diag([0.5, 0.25, 0.25, 0.0]), atol=1e-12)


def test_phase_averaged_raman_chi_has_no_identity_weight():
    # pole swap with a scrambled equator: chi lives on sigma_x and sigma_y
    ptm = np.diag([1.0, 0.0, 0.0, -1.0])
    chi = ptm_to_chi(ptm)
    assert np.allclose(chi, np.diag([0.0, 0.5, 0.5, 0.0]), atol=1e-12)
    assert identity_overlap(chi) == pytest.approx(0.0, abs=1e-12)


def test_chi_to_choi_trace_preservation_constraint():
    chi = np.diag([0.5, 0.25, 0.25, 0.0]).astype(complex)
    choi = chi_to_choi(chi)
    traced = np.trace(choi.reshape(2, 2, 2, 2), axis1=1, axis2=3)
    assert np.allclose(traced, np.eye(2), atol=1e-12)


# ---------------------------------------------------------------------------
# CPTP projection
# ---------------------------------------------------------------------------


def test_projection_fixes_physical_input():
    chi = np.diag([0.5, 0.25, 0.25, 0.0]).astype(complex)
    assert np.allclose(project_cptp(chi), chi, atol=1e-10)


def test_projection_truncates_negative_weight():
    # one-step hand oracle: the negative eigenvalue is removed and the
    # remaining weight renormalizes onto the identity component
    chi = np.diag([1.1, -0.1, 0.0, 0.0]).astype(complex)
    assert np.allclose(project_cptp(chi), np.diag([1.0, 0, 0, 0]), atol=1e-7)


def test_projection_output_is_physical():
    rng = np.random.default_rng(5)
    for _ in range(100):
        h = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        chi = np.diag([1.0, 0, 0, 0]) + 0.2 * (h + h.conj().T)
        out = project_cptp(chi)
        assert np.linalg.eigvalsh(out).min() > -1e-9
        traced = np.trace(chi_to_choi(out).reshape(2, 2, 2, 2), axis1=1, axis2=3)
        assert np.abs(traced - np.eye(2)).max() < 1e-8
        assert abs(np.trace(out).real - 1.0) < 1e-8
        # idempotent on its own output
        assert np.allclose(project_cptp(out), out, atol=1e-7)


def test_projection_never_expands_distance_to_true_channel():
    # each alternating step is a metric projection onto a convex set, so the
    # distance to any physical channel cannot grow
    rng = np.random.default_rng(6)
    for _ in range(50):
        g = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
        q, _ = np.linalg.qr(g)
        kraus = [q[:2], q[2:]]
        chi_true = ptm_to_chi(kraus_transfer(kraus))
        outcomes = synthetic_outcomes(kraus, 2000, rng)
        chi_raw = ptm_to_chi(estimate_ptm(outcomes))
        chi_proj = project_cptp(chi_raw)
        assert np.linalg.norm(chi_proj - chi_true) <= np.linalg.norm(
            chi_raw - chi_true
        ) + 1e-12
        # the projected identity overlap is physically bounded even when the
        # raw linear-inversion value exceeds one
        assert identity_overlap(chi_proj) <= 1.0 + 1e-9


def test_projection_convergence_diagnostics():
    chi = np.diag([1.1, -0.1, 0.0, 0.0]).astype(complex)
    with pytest.raises(CPTPConvergenceError) as err:
        project_cptp(chi, max_iter=2)
    assert err.value.iterations == 2
    assert err.value.delta > 0.0


def test_identity_overlap_reads_ii_element():
    assert identity_overlap(np.diag([0.83, 0.1, 0.05, 0.02])) == pytest.approx(0.83)


# ---------------------------------------------------------------------------
# ellipsoid
# ---------------------------------------------------------------------------


def test_ellipsoid_identity():
    e = bloch_ellipsoid(np.eye(4))
    assert np.allclose(e.semi_axes, (1, 1, 1), atol=1e-12)
    assert np.allclose(e.center, (0, 0, 0), atol=1e-12)


def test_ellipsoid_pancake():
    e = bloch_ellipsoid(np.diag([1.0, 0.5, 0.5, 0.0]))
    assert np.allclose(e.semi_axes, (0.5, 0.5, 0.0), atol=1e-12)
    assert np.allclose(
        e.principal_directions @ e.principal_directions.T, np.eye(3), atol=1e-12
    )


def test_ellipsoid_semi_axes_frame_invariant():
    # pre/post rotations of the analysis convention leave the spectrum alone
    from spinherald.spinalg import rotation_bloch

    rng = np.random.default_rng(7)
    base = np.diag([1.0, 0.7, 0.4, 0.1])
    for _ in range(20):
        axes = rng.normal(size=(2, 3))
        axes /= np.linalg.norm(axes, axis=1, keepdims=True)
        r1 = rotation_bloch(axes[0], rng.uniform(0, 2 * np.pi))
        r2 = rotation_bloch(axes[1], rng.uniform(0, 2 * np.pi))
        rotated = base.copy()
        rotated[1:, 1:] = r1 @ base[1:, 1:] @ r2
        assert np.allclose(
            bloch_ellipsoid(rotated).semi_axes,
            bloch_ellipsoid(base).semi_axes,
            atol=1e-10,
        )


# ---------------------------------------------------------------------------
# fringe fitting
# ---------------------------------------------------------------------------


def test_fit_fringe_exact_double_fringe():
    phi = np.linspace(0, 2 * np.pi, 20, endpoint=False) + np.pi / 20
    p = 0.5 - 0.5 * np.cos(2 * phi)
    bins = np.column_stack([phi, p, np.full_like(phi, 500)])
    fit = fit_fringe(bins, harmonic=2)
    assert fit.amplitude == pytest.approx(0.5, abs=1e-10)
    assert abs(abs(fit.phase) - np.pi) < 1e-10  # 0.5 - 0.5cos = 0.5 + 0.5cos(.+pi)
    assert fit.contrast == pytest.approx(1.0, abs=1e-10)
    assert fit.residual < 1e-10


def test_fit_fringe_constant_data():
    phi = np.linspace(0, 2 * np.pi, 20, endpoint=False)
    bins = np.column_stack([phi, np.full_like(phi, 0.37), np.full_like(phi, 100)])
    for m in (1, 2):
        fit = fit_fringe(bins, harmonic=m)
        assert fit.amplitude < 1e-12
        assert fit.offset == pytest.approx(0.37, abs=1e-12)


def test_fit_fringe_recovers_planted_parameters_within_3_sigma():
    rng = np.random.default_rng(8)
    n_per_bin = 4000
    phi = np.linspace(0, 2 * np.pi, 20, endpoint=False) + np.pi / 20
    for _ in range(10):
        a_true = rng.uniform(0.1, 0.45)
        ph_true = rng.uniform(-np.pi, np.pi)
        p_true = 0.5 + a_true * np.cos(phi + ph_true)
        counts_up = rng.binomial(n_per_bin, p_true)
        bins = np.column_stack(
            [phi, counts_up / n_per_bin, np.full_like(phi, n_per_bin)]
        )
        fit = fit_fringe(bins, harmonic=1)
        # quadrature amplitudes have variance ~ 2 * var(p) / n_bins
        sigma_quad = np.sqrt(2 * np.mean(p_true * (1 - p_true) / n_per_bin) / len(phi))
        assert abs(fit.amplitude - a_true) < 3.5 * sigma_quad
        dphi = np.angle(np.exp(1j * (fit.phase - ph_true)))
        assert abs(dphi) < 3.5 * sigma_quad / a_true


def test_fit_fringe_validates_inputs():
    phi = np.linspace(0, 2 * np.pi, 6, endpoint=False)
    bins = np.column_stack([phi, np.full_like(phi, 0.5), np.full_like(phi, 10)])
    with pytest.raises(ValueError):
        fit_fringe(bins, harmonic=3)
    bins[:, 2] = 0
    bins[0, 2] = 5
    bins[1, 2] = 5
    with pytest.raises(UnderdeterminedFitError):
        fit_fringe(bins, harmonic=1)


def test_binned_fringe_counts_and_centers():
    phi = np.array([0.05, 0.05, 3.2, 6.2])
    up = np.array([True, False, True, True])
    bins = binned_fringe(phi, up, n_bins=4)
    assert bins.shape == (4, 3)
    assert bins[0, 2] == 2 and bins[0, 1] == 0.5
    assert bins[2, 2] == 1 and bins[2, 1] == 1.0
    assert bins[3, 2] == 1


# ---------------------------------------------------------------------------
# full pipeline smoke
# ---------------------------------------------------------------------------


def test_reconstruct_random_channels_smoke():
    rng = np.random.default_rng(9)
    for _ in range(3):
        g = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
        q, _ = np.linalg.qr(g)
        kraus = [q[:2], q[2:]]
        result = reconstruct(synthetic_outcomes(kraus, 20_000, rng))
        t_true = kraus_transfer(kraus)
        assert np.abs(result.ptm - t_true).max() < 0.05
        assert 0.0 <= result.identity_overlap <= 1.0 + 1e-9
