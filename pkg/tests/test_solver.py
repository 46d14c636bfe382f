import math
import os

import numpy as np
import pytest

from seqnpa.solver import (SdpStandardForm, SolverConfig, export_sdpa,
                           import_sdpa, solve, verified_dual_bound)


def _toy_max_trace(sense="max"):
    """max x11 + x22 s.t. x11 + x22 + x33 = 1 over a 3x3 PSD block: optimum 1."""
    return SdpStandardForm(
        block_sizes=[3],
        objective={(0, 0, 0): 1.0, (0, 1, 1): 1.0},
        constraints=[({(0, 0, 0): 1.0, (0, 1, 1): 1.0, (0, 2, 2): 1.0}, 1.0)],
        sense=sense,
    )


def _toy_offdiag():
    """max 2*x12 s.t. diag fixed to 1: optimum 2 (correlation matrix)."""
    return SdpStandardForm(
        block_sizes=[2],
        objective={(0, 0, 1): 1.0},
        constraints=[({(0, 0, 0): 1.0}, 1.0), ({(0, 1, 1): 1.0}, 1.0)],
        sense="max",
    )


@pytest.mark.parametrize("backend", ["CLARABEL", "SCS"])
def test_toy_trace_problem(backend):
    sol = solve(_toy_max_trace(), SolverConfig(solver=backend, gap_tol=1e-9,
                                               fallback=None))
    assert sol.status == "optimal"
    assert abs(sol.value - 1.0) < 1e-6


@pytest.mark.parametrize("backend", ["CLARABEL", "SCS"])
def test_toy_offdiagonal_objective(backend):
    # the off-diagonal objective entry exercises the symmetric-pair convention
    sol = solve(_toy_offdiag(), SolverConfig(solver=backend, gap_tol=1e-9,
                                             fallback=None))
    assert sol.status == "optimal"
    assert abs(sol.value - 2.0) < 1e-6
    x = sol.blocks[0]
    assert abs(x[0, 1] - 1.0) < 1e-5


def test_minimization_sense():
    form = _toy_max_trace(sense="min")
    sol = solve(form, SolverConfig(gap_tol=1e-9))
    assert abs(sol.value) < 1e-6


def test_infeasible_detected():
    form = SdpStandardForm(
        block_sizes=[2],
        objective={(0, 0, 0): 1.0},
        constraints=[({(0, 0, 0): 1.0}, 1.0), ({(0, 0, 0): 1.0}, 2.0)],
        sense="max",
    )
    sol = solve(form)
    assert sol.status == "infeasible"


def test_infeasible_negative_diagonal():
    form = SdpStandardForm(
        block_sizes=[2],
        objective={(0, 0, 1): 1.0},
        constraints=[({(0, 0, 0): 1.0}, -1.0)],
        sense="max",
    )
    sol = solve(form)
    assert sol.status == "infeasible"


def test_redundant_rows_tolerated():
    form = _toy_max_trace()
    form.constraints.append(form.constraints[0])  # duplicate equality
    form.constraints.append(({(0, 0, 0): 2.0, (0, 1, 1): 2.0, (0, 2, 2): 2.0}, 2.0))
    sol = solve(form, SolverConfig(gap_tol=1e-9))
    assert sol.status == "optimal"
    assert abs(sol.value - 1.0) < 1e-6


def test_weak_duality_and_verified_bound():
    form = _toy_offdiag()
    sol = solve(form, SolverConfig(gap_tol=1e-9))
    assert sol.dual_value >= sol.value - 1e-6
    bound = verified_dual_bound(form, sol)
    assert bound >= sol.value - 1e-6
    assert bound <= sol.value + 1e-4


def test_multi_block():
    form = SdpStandardForm(
        block_sizes=[2, 2],
        objective={(0, 0, 1): 1.0, (1, 0, 1): -1.0},
        constraints=[({(0, 0, 0): 1.0}, 1.0), ({(0, 1, 1): 1.0}, 1.0),
                     ({(1, 0, 0): 1.0}, 1.0), ({(1, 1, 1): 1.0}, 1.0),
                     # couple the blocks (matval: off-diagonal counts twice):
                     # 2*x12 + 2*y12 = 0.5
                     ({(0, 0, 1): 1.0, (1, 0, 1): 1.0}, 0.5)],
        sense="max",
    )
    sol = solve(form, SolverConfig(gap_tol=1e-9))
    assert sol.status == "optimal"
    # maximize 2*x12 - 2*y12: x12 = 1, y12 = -0.75, objective 3.5
    assert abs(sol.value - 3.5) < 1e-5
    assert abs(sol.blocks[0][0, 1] - 1.0) < 1e-5
    assert abs(sol.blocks[1][0, 1] + 0.75) < 1e-5


def test_objective_offset():
    form = _toy_max_trace()
    form.objective_offset = 2.5
    sol = solve(form, SolverConfig(gap_tol=1e-9))
    assert abs(sol.value - 3.5) < 1e-6


def test_sdpa_round_trip(tmp_path):
    form = _toy_offdiag()
    form.objective_offset = 0.0
    path = os.path.join(tmp_path, "toy.dat-s")
    export_sdpa(form, path)
    back = import_sdpa(path)
    assert back.block_sizes == form.block_sizes
    assert back.sense == form.sense
    assert len(back.constraints) == len(form.constraints)
    for (row_a, rhs_a), (row_b, rhs_b) in zip(form.constraints, back.constraints):
        assert abs(rhs_a - rhs_b) < 1e-15
        assert set(row_a) == set(row_b)
        for k in row_a:
            assert abs(row_a[k] - row_b[k]) < 1e-14
    sol_a = solve(form, SolverConfig(gap_tol=1e-9))
    sol_b = solve(back, SolverConfig(gap_tol=1e-9))
    assert abs(sol_a.value - sol_b.value) < 1e-7


def test_scs_warm_start_accepted():
    form = _toy_max_trace()
    cfg = SolverConfig(solver="SCS", gap_tol=1e-9, fallback=None)
    sol1 = solve(form, cfg)
    assert sol1.warm is not None
    sol2 = solve(form, cfg, warm=sol1.warm)
    assert abs(sol2.value - sol1.value) < 1e-6
