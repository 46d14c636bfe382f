import itertools
import math

import numpy as np
import pytest

from seqnpa.qsim import (DensityMatrix, KrausSet, SequentialStrategy,
                         build_dilation, chsh_strategy, gallego_strategy,
                         isotropic_state, randomness_strategy,
                         sequential_behavior, trine_povm,
                         weak_measurement_kraus)
from seqnpa.scenario import (chsh_functional, evaluate_functional,
                             gallego_inequality, validate_behavior)

RNG = np.random.default_rng(991)
EPS_PAPERPOINT = 7 * math.pi / 32


def _random_kraus_step(dim, outputs_per_input, multiplicity=1):
    per_input = []
    for n_out in outputs_per_input:
        gs = [[RNG.normal(size=(dim, dim)) + 1j * RNG.normal(size=(dim, dim))
               for _ in range(multiplicity)] for _ in range(n_out)]
        total = sum(k.conj().T @ k for ops in gs for k in ops)
        w, v = np.linalg.eigh(total)
        inv_sqrt = v @ np.diag(w ** -0.5) @ v.conj().T
        per_input.append(tuple(tuple(k @ inv_sqrt for k in ops) for ops in gs))
    return KrausSet(tuple(per_input))


def _random_state(da, db):
    g = RNG.normal(size=(da * db, da * db)) + 1j * RNG.normal(size=(da * db, da * db))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    return DensityMatrix(rho, da, db)


def test_incomplete_kraus_rejected():
    k = np.eye(2) * 0.5
    with pytest.raises(ValueError):
        KrausSet((((k,), (k,)),))


def test_isotropic_state_limits():
    assert abs(np.trace(isotropic_state(0.0).matrix
                        @ isotropic_state(0.0).matrix).real - 1.0) < 1e-12
    mixed = isotropic_state(1.0).matrix
    assert np.max(np.abs(mixed - np.eye(4) / 4)) < 1e-12
    with pytest.raises(ValueError):
        isotropic_state(1.5)


def test_chsh_strategy_value_linear_in_noise():
    f = chsh_functional()
    vals = {eta: evaluate_functional(f, sequential_behavior(chsh_strategy(eta)))
            for eta in (0.0, 0.3, 1.0)}
    assert abs(vals[0.0] - 2 * math.sqrt(2)) < 1e-10
    assert abs(vals[1.0]) < 1e-10
    assert abs(vals[0.3] - 2 * math.sqrt(2) * 0.7) < 1e-10


def test_weak_measurement_limits():
    k_plus, k_minus = weak_measurement_kraus(0.0)
    # strength 0: projective x-basis measurement
    plus = np.array([[0.5, 0.5], [0.5, 0.5]])
    assert np.max(np.abs(k_plus @ k_plus - k_plus)) < 1e-12
    assert np.max(np.abs(k_plus - plus)) < 1e-12
    k_plus, _ = weak_measurement_kraus(math.pi / 4)
    # strength pi/4: non-interacting (proportional to a unitary)
    assert np.max(np.abs(k_plus.conj().T @ k_plus - np.eye(2) / 2)) < 1e-12


def test_trine_povm_complete():
    ms = trine_povm()
    assert np.max(np.abs(sum(ms) - np.eye(2))) < 1e-14


def test_randomness_strategy_valid_and_flat_trine():
    bhv = sequential_behavior(randomness_strategy(0.0, EPS_PAPERPOINT))
    assert validate_behavior(bhv) == []
    # second-step three-outcome marginal is uniform at the ideal point
    marg = {}
    for (x, y, a, b), v in bhv.table.items():
        if x == (0,) and y == (1, 2):
            marg[b[1]] = marg.get(b[1], 0.0) + v
    for b2 in range(3):
        assert abs(marg[b2] - 1 / 3) < 1e-10


def test_gallego_strategy_reaches_quantum_value():
    bhv = sequential_behavior(gallego_strategy())
    assert validate_behavior(bhv) == []
    val = evaluate_functional(gallego_inequality(bhv.scenario), bhv)
    assert abs(val - 2 * math.sqrt(2)) < 1e-9


@pytest.mark.parametrize("trial", range(50))
def test_dilation_reproduces_behavior(trial):
    """Dilated projective model equals the direct Kraus simulation."""
    da = int(RNG.integers(2, 4))
    shapes = ((2,), (2, int(RNG.integers(2, 4))))
    bob_steps = (
        _random_kraus_step(da, shapes[0], multiplicity=int(RNG.integers(1, 3))),
        _random_kraus_step(da, shapes[1]),
    )
    alice_step = _random_kraus_step(2, (2, 2))
    state = _random_state(2, da)
    strategy = SequentialStrategy(state, (alice_step,), bob_steps)
    bhv = sequential_behavior(strategy)

    dil = build_dilation(bob_steps)
    # purify the state: eigen-decompose and embed each branch
    w, v = np.linalg.eigh(state.matrix)
    for (x, y, a, b), p_direct in bhv.table.items():
        op = dil.full_operator(y, b)
        a_op = alice_step.kraus[x[0]][a[0]][0]
        a_full = a_op.conj().T @ a_op
        p = 0.0
        for lam, vec in zip(w, v.T):
            if lam < 1e-14:
                continue
            psi = np.zeros(2 * dil.total_dim, dtype=complex)
            # embed |vec> on sys_A (x) (sys_B (x) ancillas)
            for i in range(2):
                chunk = dil.embed_state(vec[i * da:(i + 1) * da])
                psi[i * dil.total_dim:(i + 1) * dil.total_dim] = chunk
            big = np.kron(a_full, op)
            p += lam * np.vdot(psi, big @ psi).real
        assert abs(p - p_direct) < 1e-10


def test_dilation_fact1_conditions():
    """Projectivity, one-way no-signalling and cross-prefix orthogonality."""
    shapes = ((2, 2), (2, 3))
    steps = (_random_kraus_step(3, shapes[0]), _random_kraus_step(3, shapes[1]))
    dil = build_dilation(steps)
    ops = {}
    for y1, y2 in itertools.product(range(2), range(2)):
        for b1 in range(shapes[0][y1]):
            for b2 in range(shapes[1][y2]):
                ops[((y1, y2), (b1, b2))] = dil.full_operator((y1, y2), (b1, b2))

    for ((y, b), op), ((yp, bp), opp) in itertools.product(ops.items(), repeat=2):
        if y == yp:
            expect = op if b == bp else 0.0
            assert np.max(np.abs(op @ opp - expect)) < 1e-10
        elif y[0] == yp[0] and b[0] != bp[0]:
            assert np.max(np.abs(op @ opp)) < 1e-10

    # marginal over the second outcome is independent of the second input
    for y1 in range(2):
        for b1 in range(shapes[0][y1]):
            sums = []
            for y2 in range(2):
                sums.append(sum(ops[((y1, y2), (b1, b2))]
                                for b2 in range(shapes[1][y2])))
            assert np.max(np.abs(sums[0] - sums[1])) < 1e-10
