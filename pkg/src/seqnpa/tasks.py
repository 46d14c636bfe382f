"""Experiment drivers: functional bounds, trade-off scans, randomness curves.

Each driver composes a scenario, a relaxation and the solver into a single
call and returns plain result records, so the command line and the tests
share one code path.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import moment, ncalg, qsim, solver
from .moment import RelaxationFlags
from .scenario import (Behavior, BellFunctional, ScenarioSpec, ShapeError,
                       chsh_ab1_functional, chsh_ab2_functional,
                       chsh_functional, chsh_scenario, evaluate_functional,
                       gallego_inequality, randomness_scenario,
                       two_step_scenario)
from .solver import SolverConfig, verified_dual_bound

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class DeterministicStrategy:
    """Per-step response tables: step k maps the inputs seen so far to an output.

    tables[k] is a dict {(x_1,...,x_{k+1}): a_{k+1}}.
    """

    tables: tuple

    def outputs(self, inputs: tuple) -> tuple:
        return tuple(self.tables[k][inputs[:k + 1]] for k in range(len(self.tables)))


def _party_strategies(party) -> list[DeterministicStrategy]:
    """All deterministic sequential strategies of one party, enumeration order fixed."""
    step_tables: list[list[dict]] = []
    for k, step in enumerate(party.steps):
        prefixes = [tuple(t) for t in itertools.product(
            *[range(s.n_inputs) for s in party.steps[:k + 1]])]
        choices = [range(step.outputs_per_input[pre[k]]) for pre in prefixes]
        step_tables.append([dict(zip(prefixes, combo))
                            for combo in itertools.product(*choices)])
    return [DeterministicStrategy(tuple(combo))
            for combo in itertools.product(*step_tables)]


def strategy_count(scn: ScenarioSpec) -> int:
    total = 1
    for party in scn.parties:
        n = 1
        for k, step in enumerate(party.steps):
            for pre in itertools.product(*[range(s.n_inputs)
                                           for s in party.steps[:k + 1]]):
                n *= step.outputs_per_input[pre[k]]
        total *= n
    return total


@dataclass
class BoundResult:
    value: float
    verified_bound: float
    status: str
    level: str
    flags: RelaxationFlags
    wall_time: float
    gap: float = 0.0
    solver_name: str = ""


def max_functional(scn: ScenarioSpec, f: BellFunctional, level: str,
                   flags: RelaxationFlags = RelaxationFlags(),
                   reduce_basis: bool = True,
                   config: SolverConfig = SolverConfig(),
                   extra_equalities: Optional[list] = None) -> BoundResult:
    """Upper bound on a Bell functional over the relaxed sequential quantum set."""
    t0 = time.time()
    p = moment.build_moment_problem(scn, level, flags, reduce_basis)
    p = moment.set_objective(p, f)
    if extra_equalities:
        p = moment.add_equalities(p, extra_equalities)
    form = moment.compile_to_sdp(p)
    sol = solver.solve(form, config)
    bound = verified_dual_bound(form, sol)
    return BoundResult(value=sol.value, verified_bound=bound, status=sol.status,
                       level=str(level), flags=flags, wall_time=time.time() - t0,
                       gap=sol.gap, solver_name=sol.solver_name)


def tol_vertex_max(scn: ScenarioSpec, f: BellFunctional,
                   cap: int = 10**7):
    """Exact maximum over products of deterministic sequential strategies.

    The maximum of a linear functional over time-ordered-local behaviors is
    attained at a vertex, i.e. a pair of deterministic response-function
    strategies; ties break to the first maximizer in enumeration order.
    """
    n = strategy_count(scn)
    if n > cap:
        raise ShapeError(f"strategy count {n} exceeds cap {cap}")
    best = None
    best_pair = None
    alice_strats = _party_strategies(scn.alice)
    bob_strats = _party_strategies(scn.bob)
    coeffs = f.coefficients
    for sa in alice_strats:
        for sb in bob_strats:
            val = f.constant_offset
            for (x, y, a, b), c in coeffs.items():
                if sa.outputs(x) == a and sb.outputs(y) == b:
                    val += c
            if best is None or val > best + 1e-15:
                best, best_pair = val, (sa, sb)
    return best, best_pair


def gallego_bound(level: str = "1+AB",
                  config: SolverConfig = SolverConfig()) -> dict:
    """Headline numbers for the two-step Bell inequality: SDP upper bound,
    explicit-strategy lower bound, and the classical (time-ordered local) value."""
    scn = two_step_scenario()
    f = gallego_inequality(scn)
    upper = max_functional(scn, f, level, RelaxationFlags(), config=config)
    lower = evaluate_functional(f, qsim.sequential_behavior(qsim.gallego_strategy()))
    tol_value, _ = tol_vertex_max(scn, f)
    return {"upper": upper, "lower": lower, "tol": tol_value}


def chsh_tradeoff_scan(s_values: Sequence[float], level: str = "1+AB",
                       flags: RelaxationFlags = RelaxationFlags(),
                       config: SolverConfig = SolverConfig(),
                       reduce_basis: bool = True) -> list[tuple[float, float]]:
    """Maximize the second-step CHSH subject to pinning the first-step CHSH."""
    scn = two_step_scenario()
    f1 = chsh_ab1_functional(scn)
    f2 = chsh_ab2_functional(scn)
    out = []
    for s in s_values:
        if s > 2 * SQRT2 + 1e-12:
            raise ShapeError(f"first-step CHSH value {s} exceeds the quantum maximum")
        p = moment.build_moment_problem(scn, level, flags, reduce_basis)
        p = moment.set_objective(p, f2)
        pin = moment.functional_equality(p, f1, s)
        p = moment.add_equalities(p, [pin])
        form = moment.compile_to_sdp(p)
        sol = solver.solve(form, config)
        out.append((s, sol.value))
    return out


def tradeoff_reference(s: float) -> float:
    """Qubit-optimal second-step CHSH for a given first-step CHSH value."""
    return SQRT2 * (1.0 + math.sqrt(max(0.0, 1.0 - s * s / 8.0)))


def guessing_bound(scn: ScenarioSpec, bhv: Behavior, y_star: tuple,
                   level: str = "1+AB",
                   config: SolverConfig = SolverConfig(),
                   reduce_basis: bool = False,
                   warm: Optional[dict] = None):
    """Solve one guessing-probability program; returns (solution, form)."""
    g = moment.build_guessing_program(scn, level, bhv, y_star,
                                      reduce_basis=reduce_basis)
    form = moment.compile_to_sdp(g)
    sol = solver.solve(form, config, warm=warm)
    return sol, form


def randomness_curve(etas: Sequence[float], eps: float = 7 * math.pi / 32,
                     level: str = "1+AB",
                     config: Optional[SolverConfig] = None,
                     y_star: tuple = (1, 2),
                     certified: bool = False) -> list[tuple[float, float]]:
    """Min-entropy lower bound of Bob's outputs for y* versus isotropic noise.

    Consecutive grid points warm-start each other.  With certified=True the
    entropy uses the dual certificate instead of the primal objective value,
    which is slower to saturate but survives an unconverged primal.
    """
    if not 0.0 <= eps <= math.pi / 4:
        raise ShapeError("measurement-strength parameter out of range")
    scn = randomness_scenario()
    cfg = config or SolverConfig(gap_tol=1e-4, fallback=None)
    out = []
    warm = None
    for eta in etas:
        bhv = qsim.sequential_behavior(qsim.randomness_strategy(eta, eps))
        sol, form = guessing_bound(scn, bhv, y_star, level, cfg, warm=warm)
        warm = sol.warm
        g = sol.value
        if certified:
            g = verified_dual_bound(form, sol, trace_bound=float(max(form.block_sizes)))
        out.append((eta, -math.log2(max(g, 1e-300))))
    return out


def chsh_guessing_curve(etas: Sequence[float], level: str = "2",
                        config: Optional[SolverConfig] = None) -> list[tuple[float, float]]:
    """Comparison curve: guessing program for the one-step maximal-CHSH strategy."""
    scn = chsh_scenario()
    cfg = config or SolverConfig(gap_tol=1e-6)
    out = []
    warm = None
    for eta in etas:
        bhv = qsim.sequential_behavior(qsim.chsh_strategy(eta))
        sol, form = guessing_bound(scn, bhv, (0,), level, cfg, warm=warm)
        warm = sol.warm
        out.append((eta, -math.log2(max(sol.value, 1e-300))))
    return out


def strategy_moment_matrix(strategy: qsim.SequentialStrategy,
                           monomials: Sequence[tuple]) -> "np.ndarray":
    """Ground-truth moment matrix of a strategy over the given monomials.

    One-step parties contribute their (projective) Kraus operators directly;
    two-step parties go through the unitary dilation so every word is a
    product of genuine projectors.  Used as a feasibility oracle and as a
    warm-start seed; supports one- or two-step parties only.
    """
    import numpy as np

    ops: list[dict] = []
    dims: list[int] = []
    for steps in (strategy.alice_steps, strategy.bob_steps):
        if len(steps) == 1:
            d = steps[0].dim
            table = {}
            for x in range(steps[0].n_inputs):
                for a, kraus in enumerate(steps[0].kraus[x]):
                    k = kraus[0]
                    p = k.conj().T @ k
                    if np.max(np.abs(p @ p - p)) > 1e-10:
                        raise ShapeError("one-step party is not projective")
                    table[((x,), (a,))] = p
            ops.append(table)
            dims.append(d)
        elif len(steps) == 2:
            dil = qsim.build_dilation(tuple(steps))
            table = {}
            for y1 in range(steps[0].n_inputs):
                for y2 in range(steps[1].n_inputs):
                    for b1 in range(len(steps[0].kraus[y1])):
                        for b2 in range(len(steps[1].kraus[y2])):
                            table[((y1, y2), (b1, b2))] = dil.full_operator(
                                (y1, y2), (b1, b2))
            ops.append(table)
            dims.append(dil.total_dim)
        else:
            raise ShapeError("moment oracle supports at most two steps per party")

    da, db = dims
    eyes = (np.eye(da), np.eye(db))

    def lift(sym) -> "np.ndarray":
        m = ops[sym.party][(sym.inputs, sym.outputs)]
        return np.kron(m, eyes[1]) if sym.party == 0 else np.kron(eyes[0], m)

    # state embedded with |0> ancillas on each dilated side
    d_sys_a = strategy.state.dim_a
    d_sys_b = strategy.state.dim_b
    embed = np.zeros((da * db, d_sys_a * d_sys_b), dtype=complex)
    for i in range(d_sys_a):
        for j in range(d_sys_b):
            row = (i * (da // d_sys_a)) * db + j * (db // d_sys_b)
            embed[row, i * d_sys_b + j] = 1.0
    rho = embed @ strategy.state.matrix @ embed.conj().T

    mats = []
    for word in monomials:
        m = np.eye(da * db, dtype=complex)
        for sym in word:
            m = m @ lift(sym)
        mats.append(m)
    n = len(monomials)
    gamma = np.zeros((n, n))
    for i in range(n):
        left = rho @ mats[i].conj().T
        for j in range(i, n):
            val = np.trace(mats[j] @ left).real
            gamma[i, j] = val
            gamma[j, i] = val
    return gamma


def guessing_warm_start(scn: ScenarioSpec, strategy: qsim.SequentialStrategy,
                        y_star: tuple, level: str, form) -> Optional[dict]:
    """Primal warm start for the guessing program: the adversary pins the
    most probable output sequence, so one block carries the strategy's full
    moment matrix and the rest are zero."""
    import numpy as np

    bhv = qsim.sequential_behavior(strategy)
    e_values = scn.bob.output_tuples(y_star)
    probs = []
    for e in e_values:
        x0 = scn.alice.input_tuples()[0]
        probs.append(sum(bhv.table[(x0, y_star, a, e)]
                         for a in scn.alice.output_tuples(x0)))
    star = int(np.argmax(probs))
    monomials = ncalg.generate_level_set(scn, level, False)
    gamma = strategy_moment_matrix(strategy, monomials)
    blocks = [gamma if i == star else np.zeros_like(gamma)
              for i in range(len(e_values))]
    return solver.warm_from_blocks(form, blocks)


def format_curve(points: Sequence[tuple[float, float]]) -> str:
    """Two-column whitespace-separated plot data, 12 significant digits."""
    return "\n".join(f"{x:.12g} {y:.12g}" for x, y in points) + "\n"
