import numpy as np
import pytest

from spinherald.engine import ErrorBudget, ExperimentConfig, get_sequence, run_plan
from spinherald.spinalg import PAULIS, from_bloch, to_bloch
from spinherald.tomography import tomography_plan

ACCEPT_SEED = 20211
SHOTS_PER_SETTING = 100_000

PLAN = tomography_plan()


def tomography_frames(sequence_name, errors, seed, shots=SHOTS_PER_SETTING):
    """Run the full 12-setting plan for one channel block."""
    cfg = ExperimentConfig(shots=shots, seed=seed, p_exc=0.075, eta=1.0, errors=errors)
    return run_plan(cfg, get_sequence(sequence_name), PLAN)


def kraus_transfer(kraus_ops):
    """Independent transfer-matrix oracle: T_ab = tr(P_a E(P_b))/2."""
    t = np.zeros((4, 4))
    for a in range(4):
        for b in range(4):
            out = sum(k @ PAULIS[b] @ k.conj().T for k in kraus_ops)
            t[a, b] = 0.5 * np.trace(PAULIS[a] @ out).real
    return t


def synthetic_outcomes(kraus_ops, shots, rng):
    """Bernoulli outcomes of the plan under a channel, simulated at the
    state level (independent of the PTM machinery under test)."""
    outcomes = {}
    for s in PLAN:
        rho = from_bloch(np.array(s.prep_bloch))
        out = sum(k @ rho @ k.conj().T for k in kraus_ops)
        p_up = 0.5 * (1.0 + float(np.dot(s.axis_bloch, to_bloch(out))))
        outcomes[s.index] = rng.random(shots) < p_up
    return outcomes


@pytest.fixture(scope="session")
def ideal_uncorrected_frames():
    """H/V scattering, no errors, no correction: shared by the engine
    convergence test and acceptance criteria 2 and 3."""
    return tomography_frames("scatter_HV", ErrorBudget(), ACCEPT_SEED + 1)
