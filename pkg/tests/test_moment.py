import math

import pytest

from seqnpa import moment, qsim
from seqnpa.moment import RelaxationFlags
from seqnpa.scenario import (Behavior, ShapeError, chsh_functional,
                             chsh_scenario, evaluate_functional,
                             gallego_inequality, randomness_scenario,
                             two_step_scenario, uniform_behavior)
from seqnpa.solver import SolverConfig, solve

EPS_PAPERPOINT = 7 * math.pi / 32
FAST = SolverConfig(gap_tol=1e-8)


# --- golden structural counts (frozen from the generator, guard regressions) --

def test_chsh_level1_structure():
    p = moment.build_moment_problem(chsh_scenario(), "1", RelaxationFlags(), False)
    mm = p.blocks[0]
    assert mm.size == 9
    assert len(mm.index) == 33
    assert len(mm.zeros) == 4
    assert len(p.equalities) == 28


def test_chsh_level1_reduced_structure():
    p = moment.build_moment_problem(chsh_scenario(), "1", RelaxationFlags(), True)
    assert p.blocks[0].size == 5
    assert len(p.blocks[0].index) == 11
    assert len(p.equalities) == 0  # normalization sums are tautologies here


def test_two_step_structure():
    p = moment.build_moment_problem(two_step_scenario(), "1+AB",
                                    RelaxationFlags(), True)
    assert p.blocks[0].size == 51
    assert len(p.blocks[0].index) == 644
    assert len(p.equalities) == 352
    p_loc = moment.build_moment_problem(two_step_scenario(), "1+AB",
                                        RelaxationFlags(local_commuting=True), True)
    assert len(p_loc.equalities) == 608


def test_guessing_program_structure():
    bhv = qsim.sequential_behavior(qsim.randomness_strategy(0.0, EPS_PAPERPOINT))
    g = moment.build_guessing_program(randomness_scenario(), "1+AB", bhv, (1, 2),
                                      reduce_basis=False)
    assert len(g.blocks) == 6
    assert g.blocks[0].size == 145
    assert len(g.blocks[0].index) == 4793
    assert len(g.equalities) == 30305
    assert g.normalization == [None] * 6
    assert len(g.objective) == 6


def test_guessing_program_invalid_input():
    bhv = qsim.sequential_behavior(qsim.randomness_strategy(0.0, EPS_PAPERPOINT))
    with pytest.raises(ShapeError):
        moment.build_guessing_program(randomness_scenario(), "1+AB", bhv, (9, 9))


# --- pinning behaviors ---------------------------------------------------------

@pytest.mark.parametrize("reduce_basis", [False, True])
def test_pinned_strategy_behavior_feasible(reduce_basis):
    """Quantum behavior pinned into the relaxation stays feasible and the
    objective reproduces the simulator's functional value."""
    scn = chsh_scenario()
    bhv = qsim.sequential_behavior(qsim.chsh_strategy(0.2))
    f = chsh_functional(scn)
    p = moment.build_moment_problem(scn, "1", RelaxationFlags(), reduce_basis)
    p = moment.set_objective(p, f)
    p = moment.pin_behavior(p, bhv)
    sol = solve(moment.compile_to_sdp(p), FAST)
    assert sol.status == "optimal"
    assert abs(sol.value - evaluate_functional(f, bhv)) < 1e-6


def test_pinned_sequential_behavior_feasible():
    scn = two_step_scenario()
    bhv = qsim.sequential_behavior(qsim.gallego_strategy())
    f = gallego_inequality(scn)
    p = moment.build_moment_problem(scn, "1+AB", RelaxationFlags(), True)
    p = moment.set_objective(p, f)
    p = moment.pin_behavior(p, bhv)
    sol = solve(moment.compile_to_sdp(p), FAST)
    assert sol.status == "optimal"
    assert abs(sol.value - 2 * math.sqrt(2)) < 1e-5


def test_beyond_quantum_pin_infeasible():
    """A behavior with CHSH above the quantum maximum has no moment matrix."""
    scn = chsh_scenario()
    table = {}
    for x, y, a, b in scn.index_iter():
        # PR-box correlations: a xor b = x and y
        want = (a[0] ^ b[0]) == (x[0] & y[0])
        table[(x, y, a, b)] = 0.5 if want else 0.0
    bhv = Behavior(scn, table)
    p = moment.build_moment_problem(scn, "1", RelaxationFlags(), True)
    p = moment.pin_behavior(p, bhv)
    sol = solve(moment.compile_to_sdp(p))
    assert sol.status == "infeasible"


def test_functional_equality_pins_value():
    scn = chsh_scenario()
    f = chsh_functional(scn)
    p = moment.build_moment_problem(scn, "1", RelaxationFlags(), True)
    p = moment.set_objective(p, f)
    eq = moment.functional_equality(p, f, 2.0)
    p = moment.add_equalities(p, [eq])
    sol = solve(moment.compile_to_sdp(p), FAST)
    assert abs(sol.value - 2.0) < 1e-6


def test_uniform_behavior_pin_feasible_all_levels():
    scn = chsh_scenario()
    for level in ("1", "1+AB", "2"):
        p = moment.build_moment_problem(scn, level, RelaxationFlags(), True)
        p = moment.pin_behavior(p, uniform_behavior(scn))
        sol = solve(moment.compile_to_sdp(p), FAST)
        assert sol.status == "optimal", level


def test_fingerprint_is_deterministic():
    p1 = moment.build_moment_problem(chsh_scenario(), "1", RelaxationFlags(), True)
    p2 = moment.build_moment_problem(chsh_scenario(), "1", RelaxationFlags(), True)
    assert moment.fingerprint(p1) == moment.fingerprint(p2)
    assert "blocks: [5]" in moment.fingerprint(p1)
