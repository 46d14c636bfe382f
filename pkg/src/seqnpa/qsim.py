"""Finite-dimensional simulator of sequential measurement strategies.

Strategies are a bipartite state plus, per party, one Kraus set per step.
Probabilities come from iterating rho -> sum_mu K rho K^dagger along each
party's sequence and tracing.  The module also carries the strategy library
used by the experiment drivers and a unitary-dilation construction that
turns a two-step Kraus sequence into explicit full-sequence projectors,
used as a cross-validation oracle for the word algebra.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .scenario import (
    Behavior,
    PartySpec,
    ScenarioSpec,
    StepSpec,
    chsh_scenario,
    make_scenario,
    randomness_scenario,
    two_step_scenario,
)

HERMITICITY_TOL = 1e-12
COMPLETENESS_TOL = 1e-12

# Pauli matrices and common projectors
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
ID2 = np.eye(2, dtype=complex)

KET_0 = np.array([1, 0], dtype=complex)
KET_1 = np.array([0, 1], dtype=complex)
KET_PLUS = np.array([1, 1], dtype=complex) / math.sqrt(2)
KET_MINUS = np.array([1, -1], dtype=complex) / math.sqrt(2)


def projector(vec: np.ndarray) -> np.ndarray:
    v = vec / np.linalg.norm(vec)
    return np.outer(v, v.conj())


def observable_projectors(obs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(P_plus, P_minus) eigenprojectors of a dichotomic observable."""
    w, v = np.linalg.eigh(obs)
    # eigh sorts ascending; the +1 eigenvector is the last column
    return projector(v[:, -1]), projector(v[:, 0])


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray
    dim_a: int
    dim_b: int

    def __post_init__(self):
        m = self.matrix
        if m.shape != (self.dim_a * self.dim_b, self.dim_a * self.dim_b):
            raise ValueError("density matrix shape does not match factor dims")
        if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > HERMITICITY_TOL:
            raise ValueError("density matrix trace is not 1")
        if np.linalg.eigvalsh(m)[0] < -HERMITICITY_TOL:
            raise ValueError("density matrix has a negative eigenvalue")


@dataclass(frozen=True)
class KrausSet:
    """One measurement step: kraus[input][outcome] = list of Kraus matrices."""

    kraus: tuple[tuple[tuple[np.ndarray, ...], ...], ...]

    def __post_init__(self):
        for x, per_outcome in enumerate(self.kraus):
            dim = per_outcome[0][0].shape[0]
            total = np.zeros((dim, dim), dtype=complex)
            for ops in per_outcome:
                for k in ops:
                    total += k.conj().T @ k
            if np.max(np.abs(total - np.eye(dim))) > COMPLETENESS_TOL:
                raise ValueError(f"Kraus set for input {x} is not complete")

    @property
    def n_inputs(self) -> int:
        return len(self.kraus)

    def outputs_per_input(self) -> tuple[int, ...]:
        return tuple(len(per) for per in self.kraus)

    @property
    def dim(self) -> int:
        return self.kraus[0][0][0].shape[0]


def projective_step(per_input: list[list[np.ndarray]]) -> KrausSet:
    """Kraus set from projector (or single-Kraus) lists per input/outcome."""
    return KrausSet(
        tuple(tuple((np.asarray(k, dtype=complex),) for k in outs) for outs in per_input)
    )


@dataclass(frozen=True)
class SequentialStrategy:
    state: DensityMatrix
    alice_steps: tuple[KrausSet, ...]
    bob_steps: tuple[KrausSet, ...]

    def __post_init__(self):
        for step in self.alice_steps:
            if step.dim != self.state.dim_a:
                raise ValueError("Alice step dimension mismatch")
        for step in self.bob_steps:
            if step.dim != self.state.dim_b:
                raise ValueError("Bob step dimension mismatch")

    def scenario(self) -> ScenarioSpec:
        return make_scenario(
            [list(s.outputs_per_input()) for s in self.alice_steps],
            [list(s.outputs_per_input()) for s in self.bob_steps],
        )


def _apply_branch(rho: np.ndarray, ops: tuple[np.ndarray, ...]) -> np.ndarray:
    out = np.zeros_like(rho)
    for k in ops:
        out += k @ rho @ k.conj().T
    return out


def _party_update(rho: np.ndarray, steps, inputs, outputs, side: str,
                  dim_a: int, dim_b: int) -> np.ndarray:
    for step, x, a in zip(steps, inputs, outputs):
        ops = step.kraus[x][a]
        if side == "A":
            lifted = tuple(np.kron(k, np.eye(dim_b)) for k in ops)
        else:
            lifted = tuple(np.kron(np.eye(dim_a), k) for k in ops)
        rho = _apply_branch(rho, lifted)
    return rho


def sequential_behavior(strategy: SequentialStrategy) -> Behavior:
    """Full probability table of a sequential strategy."""
    scn = strategy.scenario()
    da, db = strategy.state.dim_a, strategy.state.dim_b
    table = {}
    for x in scn.alice.input_tuples():
        for a in scn.alice.output_tuples(x):
            rho_a = _party_update(strategy.state.matrix, strategy.alice_steps,
                                  x, a, "A", da, db)
            for y in scn.bob.input_tuples():
                for b in scn.bob.output_tuples(y):
                    rho = _party_update(rho_a, strategy.bob_steps, y, b, "B", da, db)
                    table[(x, y, a, b)] = float(np.trace(rho).real)
    return Behavior(scn, table)


# --- state and strategy library ---------------------------------------------

PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)


def isotropic_state(eta: float) -> DensityMatrix:
    """Maximally entangled two-qubit state mixed with white noise of weight eta."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError("noise parameter must lie in [0, 1]")
    m = (1 - eta) * np.outer(PHI_PLUS, PHI_PLUS.conj()) + eta * np.eye(4) / 4
    return DensityMatrix(m, 2, 2)


def _obs_step(observables: list[np.ndarray]) -> KrausSet:
    """Projective step from dichotomic observables; outcome 0 is the +1 branch."""
    per_input = []
    for obs in observables:
        p_plus, p_minus = observable_projectors(obs)
        per_input.append([p_plus, p_minus])
    return projective_step(per_input)


def chsh_strategy(eta: float) -> SequentialStrategy:
    """Degenerate one-step strategy reaching CHSH = 2*sqrt(2)*(1 - eta)."""
    state = isotropic_state(eta)
    alice = _obs_step([SIGMA_Z, SIGMA_X])
    inv = 1 / math.sqrt(2)
    bob = _obs_step([inv * (SIGMA_Z + SIGMA_X), inv * (SIGMA_Z - SIGMA_X)])
    return SequentialStrategy(state, (alice,), (bob,))


def weak_measurement_kraus(eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Two-outcome x-basis measurement of tunable strength.

    eps = 0 is a projective x measurement, eps = pi/4 is non-interacting.
    """
    pp = projector(KET_PLUS)
    pm = projector(KET_MINUS)
    k_plus = math.cos(eps) * pp + math.sin(eps) * pm
    k_minus = -math.cos(eps) * pm + math.sin(eps) * pp
    return k_plus, k_minus


def trine_povm() -> list[np.ndarray]:
    """Symmetric 3-outcome qubit POVM with Bloch vectors at 120 degrees."""
    out = []
    for b2 in range(3):
        v = (math.sin(2 * math.pi * b2 / 3), 0.0, math.cos(2 * math.pi * b2 / 3))
        m = (2 / 3) * 0.5 * (ID2 + v[0] * SIGMA_X + v[1] * SIGMA_Y + v[2] * SIGMA_Z)
        out.append(m)
    return out


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def randomness_strategy(eta: float, eps: float) -> SequentialStrategy:
    """One Alice, two sequential Bobs; certifies > 2 bits for small noise.

    Alice measures cos(mu) sz +/- sin(mu) sx with tan(mu) = sin(2 eps);
    the first Bob measures sz or the eps-strength x measurement; the second
    Bob measures sz, sx, or the trine POVM (via its positive square roots).
    """
    if not 0.0 <= eps <= math.pi / 4:
        raise ValueError("measurement strength must lie in [0, pi/4]")
    state = isotropic_state(eta)
    mu = math.atan(math.sin(2 * eps))
    alice = _obs_step([
        math.cos(mu) * SIGMA_Z + math.sin(mu) * SIGMA_X,
        math.cos(mu) * SIGMA_Z - math.sin(mu) * SIGMA_X,
    ])
    k_plus, k_minus = weak_measurement_kraus(eps)
    bob1 = projective_step([
        [projector(KET_0), projector(KET_1)],
        [k_plus, k_minus],
    ])
    pz = observable_projectors(SIGMA_Z)
    px = observable_projectors(SIGMA_X)
    bob2 = projective_step([
        [pz[0], pz[1]],
        [px[0], px[1]],
        [_psd_sqrt(m) for m in trine_povm()],
    ])
    return SequentialStrategy(state, (alice,), (bob1, bob2))


def gallego_strategy() -> SequentialStrategy:
    """Two-step strategy saturating the gallego inequality at 2*sqrt(2).

    The first Bob records his input into an ancilla qubit without touching
    the system; the second Bob then measures an observable conditioned on
    the recorded first input.  Alice measures sz or sx on her half of the
    maximally entangled state.
    """
    state = DensityMatrix(_phi_with_ancilla(), 2, 4)
    anc0 = projector(KET_0)
    alice = _obs_step([SIGMA_Z, SIGMA_X])
    # first Bob: outcome 0 always; input 1 flips the ancilla
    zero = np.zeros((4, 4), dtype=complex)
    bob1 = projective_step([
        [np.eye(4), zero],
        [np.kron(ID2, SIGMA_X), zero],
    ])
    inv = 1 / math.sqrt(2)
    o1 = inv * (SIGMA_Z - SIGMA_X)   # used for (y1, y2) = (0, 1)
    o2 = -inv * (SIGMA_Z + SIGMA_X)  # used for (y1, y2) = (1, 0)
    anc1 = projector(KET_1)

    def ctrl(obs_if0: np.ndarray, obs_if1: np.ndarray) -> list[np.ndarray]:
        p0 = observable_projectors(obs_if0)
        p1 = observable_projectors(obs_if1)
        return [np.kron(p0[i], anc0) + np.kron(p1[i], anc1) for i in range(2)]

    bob2 = projective_step([
        ctrl(SIGMA_Z, o2),  # y2 = 0: ancilla 1 means the first input was 1
        ctrl(o1, SIGMA_Z),  # y2 = 1: ancilla 0 means the first input was 0
    ])
    return SequentialStrategy(state, (alice,), (bob1, bob2))


def _phi_with_ancilla() -> np.ndarray:
    """|phi+><phi+| on A x B_sys, tensored with |0><0| on B's ancilla."""
    phi = np.outer(PHI_PLUS, PHI_PLUS.conj())  # ordering A (x) B_sys
    # reorder to A (x) (B_sys (x) anc): kron with the ancilla on B's inner side
    full = np.kron(phi, projector(KET_0))  # (A x B) x anc
    # indices (a, b, c): want (a, (b, c)) which is exactly this flattening
    return full


# --- dilation oracle ---------------------------------------------------------


def _complete_isometry(fixed: dict[int, np.ndarray], dim: int) -> np.ndarray:
    """Deterministically extend orthonormal columns to a unitary matrix.

    fixed maps column indices to already-orthonormal vectors; the remaining
    columns are filled with a fixed-pivot orthogonalization of the identity
    basis, so the completion is reproducible.
    """
    chosen = [fixed[i] for i in sorted(fixed)]
    slots = [i for i in range(dim) if i not in fixed]
    filled: list[np.ndarray] = []
    for i in range(dim):
        if len(filled) == len(slots):
            break
        e = np.zeros(dim, dtype=complex)
        e[i] = 1.0
        for c in chosen:
            e = e - c * np.vdot(c, e)
        n = np.linalg.norm(e)
        if n > 1e-9:
            e = e / n
            chosen.append(e)
            filled.append(e)
    if len(filled) != len(slots):
        raise ValueError("could not complete isometry to a unitary")
    u = np.zeros((dim, dim), dtype=complex)
    for i, vec in fixed.items():
        u[:, i] = vec
    for i, vec in zip(slots, filled):
        u[:, i] = vec
    return u


@dataclass(frozen=True)
class Dilation:
    """Unitary dilation of a two-step Kraus sequence.

    The assembled operators act on system (x) anc1 (x) anc2 where anc_i =
    outcome register (x) multiplicity register of step i, and equal
    U1(x1)^dag U2(x2)^dag (1 (x) Q_a1 (x) 1 (x) Q_a2 (x) 1) U2(x2) U1(x1).
    When an input has fewer outcomes than the register, the unused register
    slots are folded into the last valid outcome's projector Q; this keeps
    the per-input projectors a resolution of the identity without touching
    the populated sector.
    """

    dim_sys: int
    step_dims: tuple[tuple[int, int], ...]  # (outcome register, multiplicity register)
    outputs_per_input: tuple[tuple[int, ...], ...]
    unitaries: tuple[tuple[np.ndarray, ...], ...]  # per step, per input

    @property
    def total_dim(self) -> int:
        d = self.dim_sys
        for o, m in self.step_dims:
            d *= o * m
        return d

    def projector(self, step: int, inp: int, outcome: int) -> np.ndarray:
        """Outcome projector on the full dilated space for one step."""
        n_out = self.outputs_per_input[step][inp]
        mats = [np.eye(self.dim_sys)]
        for s, (o, m) in enumerate(self.step_dims):
            if s == step:
                p = np.zeros((o, o))
                p[outcome, outcome] = 1.0
                if outcome == n_out - 1:
                    for extra in range(n_out, o):
                        p[extra, extra] = 1.0
                mats.append(p)
            else:
                mats.append(np.eye(o))
            mats.append(np.eye(m))
        out = mats[0]
        for m_ in mats[1:]:
            out = np.kron(out, m_)
        return out

    def full_operator(self, inputs: tuple[int, int], outputs: tuple[int, int]) -> np.ndarray:
        u1 = self.unitaries[0][inputs[0]]
        u2 = self.unitaries[1][inputs[1]]
        proj = (self.projector(0, inputs[0], outputs[0])
                @ self.projector(1, inputs[1], outputs[1]))
        u = u2 @ u1
        return u.conj().T @ proj @ u

    def embed_state(self, psi: np.ndarray) -> np.ndarray:
        """System vector padded with |0> ancillas."""
        anc = np.zeros(self.total_dim // self.dim_sys, dtype=complex)
        anc[0] = 1.0
        return np.kron(psi, anc)


def build_dilation(steps: tuple[KrausSet, KrausSet]) -> Dilation:
    """Stinespring-style dilation of a two-step sequence into projectors.

    Each step's Kraus family is packed into an isometry writing the outcome
    and multiplicity into fresh registers; the isometry is completed to a
    unitary deterministically.  The returned full-sequence operators are
    projective and satisfy the sequential orthogonality and one-way
    no-signalling relations numerically.
    """
    if len(steps) != 2:
        raise ValueError("dilation oracle covers two-step sequences")
    dim = steps[0].dim
    step_dims = []
    for step in steps:
        o = max(step.outputs_per_input())
        m = max(len(ops) for per in step.kraus for ops in per)
        step_dims.append((o, m))

    # step-1 unitaries act on sys (x) anc1, then are lifted to the full space
    def step_unitaries(step: KrausSet, in_dim: int, o: int, m: int) -> list[np.ndarray]:
        us = []
        d_anc = o * m
        for per_outcome in step.kraus:
            # isometry V: |psi>|0> -> sum_{a,mu} (K_{a,mu}|psi>) |a>|mu>;
            # its columns sit at the |anc=0> slice of the domain
            fixed = {}
            for j in range(in_dim):
                col = np.zeros(in_dim * d_anc, dtype=complex)
                for a, ops in enumerate(per_outcome):
                    for mu, k in enumerate(ops):
                        anc = np.zeros(d_anc, dtype=complex)
                        anc[a * m + mu] = 1.0
                        col += np.kron(k[:, j], anc)
                fixed[j * d_anc] = col
            us.append(_complete_isometry(fixed, in_dim * d_anc))
        return us

    o1, m1 = step_dims[0]
    u1_small = step_unitaries(steps[0], dim, o1, m1)
    o2, m2 = step_dims[1]
    # step 2 acts on sys (x) anc2; build on sys (x) anc1 (x) anc2 by permuting
    u2_small = step_unitaries(steps[1], dim, o2, m2)

    d1 = o1 * m1
    d2 = o2 * m2
    u1_full = [np.kron(u, np.eye(d2)) for u in u1_small]

    # lift sys (x) anc2 unitary to sys (x) anc1 (x) anc2
    perm = _permutation_sys_anc2(dim, d1, d2)
    u2_full = [perm.T @ np.kron(u, np.eye(d1)) @ perm for u in u2_small]

    return Dilation(
        dim,
        tuple(step_dims),
        tuple(s.outputs_per_input() for s in steps),
        (tuple(u1_full), tuple(u2_full)),
    )


def _permutation_sys_anc2(d_sys: int, d1: int, d2: int) -> np.ndarray:
    """Permutation mapping sys (x) anc1 (x) anc2 to (sys (x) anc2) (x) anc1."""
    total = d_sys * d1 * d2
    p = np.zeros((total, total))
    for s in range(d_sys):
        for i in range(d1):
            for j in range(d2):
                src = (s * d1 + i) * d2 + j
                dst = (s * d2 + j) * d1 + i
                p[dst, src] = 1.0
    return p
