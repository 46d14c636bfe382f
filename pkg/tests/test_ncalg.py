import itertools

import numpy as np
import pytest

from seqnpa import ncalg
from seqnpa.ncalg import OpSymbol, adjoint, moment_key, reduce_word
from seqnpa.scenario import (chsh_scenario, randomness_scenario,
                             two_step_scenario)
from seqnpa.qsim import KrausSet, build_dilation

RNG = np.random.default_rng(20240817)


def _random_kraus_step(dim: int, outputs_per_input) -> KrausSet:
    per_input = []
    for n_out in outputs_per_input:
        gs = [RNG.normal(size=(dim, dim)) + 1j * RNG.normal(size=(dim, dim))
              for _ in range(n_out)]
        total = sum(g.conj().T @ g for g in gs)
        w, v = np.linalg.eigh(total)
        inv_sqrt = v @ np.diag(w ** -0.5) @ v.conj().T
        per_input.append(tuple((g @ inv_sqrt,) for g in gs))
    return KrausSet(tuple(per_input))


def _dilated_family(dim, shapes):
    """Projective full-sequence operators for one party from a random dilation."""
    steps = tuple(_random_kraus_step(dim, s) for s in shapes)
    dil = build_dilation(steps)
    ops = {}
    for x1 in range(len(shapes[0])):
        for x2 in range(len(shapes[1])):
            for a1 in range(shapes[0][x1]):
                for a2 in range(shapes[1][x2]):
                    ops[((x1, x2), (a1, a2))] = dil.full_operator((x1, x2), (a1, a2))
    return ops


def _word_matrix(word, alice_ops, bob_ops, da, db):
    """Explicit matrix for a reduced word on the joint space."""
    mat = np.eye(da * db, dtype=complex)
    for sym in word:
        if sym.party == 0:
            m = np.kron(alice_ops[(sym.inputs, sym.outputs)], np.eye(db))
        else:
            m = np.kron(np.eye(da), bob_ops[(sym.inputs, sym.outputs)])
        mat = mat @ m
    return mat


def test_reduction_matches_matrix_oracle():
    """reduce_word agrees with explicit dilated projector algebra.

    200 random words over randomly generated two-step projective families.
    """
    shapes = ((2, 2), (2, 3))
    alice = _dilated_family(2, shapes)
    bob = _dilated_family(2, shapes)
    da = next(iter(alice.values())).shape[0]
    db = next(iter(bob.values())).shape[0]
    symbols = ([OpSymbol(0, xs, os_) for (xs, os_) in alice]
               + [OpSymbol(1, ys, os_) for (ys, os_) in bob])
    for _ in range(200):
        length = RNG.integers(1, 5)
        word = tuple(symbols[i] for i in RNG.integers(0, len(symbols), length))
        reduced = reduce_word(word)
        lhs = _word_matrix(word, alice, bob, da, db)
        if reduced is None:
            assert np.max(np.abs(lhs)) < 1e-10
        else:
            rhs = _word_matrix(reduced, alice, bob, da, db)
            assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_idempotence_and_orthogonality():
    s = OpSymbol(1, (0, 1), (1, 0))
    assert reduce_word((s, s)) == (s,)
    t = OpSymbol(1, (0, 1), (1, 1))
    assert reduce_word((s, t)) is None  # same inputs, different outputs
    u = OpSymbol(1, (0, 2), (0, 1))
    assert reduce_word((s, u)) is None  # same first input, different first output


def test_cross_party_canonical_order():
    a = OpSymbol(0, (0,), (0,))
    b = OpSymbol(1, (1,), (0,))
    assert reduce_word((b, a)) == reduce_word((a, b)) == (a, b)


def test_adjoint_is_reversal():
    a = OpSymbol(0, (0,), (0,))
    b1 = OpSymbol(1, (0, 1), (0, 0))
    b2 = OpSymbol(1, (1, 1), (0, 0))
    assert adjoint((a, b1, b2)) == (b2, b1, a)


def test_moment_key_reversal_symmetric():
    b1 = OpSymbol(1, (0, 1), (0, 0))
    b2 = OpSymbol(1, (1, 1), (0, 0))
    assert moment_key((b1, b2)) == moment_key((b2, b1))


def test_level_set_sizes():
    chsh = chsh_scenario()
    assert len(ncalg.generate_level_set(chsh, "1", False)) == 9
    assert len(ncalg.generate_level_set(chsh, "1", True)) == 5
    rand = randomness_scenario()
    assert len(ncalg.generate_level_set(rand, "1+AB", False)) == 145
    assert len(ncalg.generate_level_set(rand, "1+AB", True)) == 87
    two = two_step_scenario()
    lvl1 = ncalg.generate_level_set(two, "1", False)
    assert lvl1[0] == ()  # identity first
    assert len(lvl1) == 1 + 4 + 16


def test_level_monotone_nesting():
    scn = chsh_scenario()
    s1 = set(ncalg.generate_level_set(scn, "1", False))
    s2 = set(ncalg.generate_level_set(scn, "2", False))
    s1ab = set(ncalg.generate_level_set(scn, "1+AB", False))
    assert s1 < s1ab <= s2


def test_bad_level_string():
    with pytest.raises(ValueError):
        ncalg.parse_level("1+BA")
