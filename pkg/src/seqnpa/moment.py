"""Moment-matrix relaxation assembly.

Builds the semidefinite relaxations of sequential quantum correlations:
a symmetric moment matrix per block, linear equalities encoding operator
normalization, the one-way no-signalling structure, optional same-party
commutation (the time-ordered-local relaxation), pinned observed
probabilities, objectives, and the multi-block guessing-probability
program with subnormalized blocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from . import ncalg
from .ncalg import IDENTITY, MomentKey, OpSymbol, Word
from .scenario import Behavior, BellFunctional, ScenarioSpec, ShapeError

COEFF_EPS = 1e-12


@dataclass(frozen=True)
class RelaxationFlags:
    sequential_noback: bool = True
    local_commuting: bool = False
    normalization: bool = True


@dataclass
class MomentMatrix:
    """Index structure of one moment-matrix block."""

    monomials: list[Word]
    index: dict[MomentKey, list[tuple[int, int]]]  # key -> upper (i, j) slots
    zeros: list[tuple[int, int]]

    @property
    def size(self) -> int:
        return len(self.monomials)

    def has_key(self, key: MomentKey) -> bool:
        return key in self.index

    def representative(self, key: MomentKey) -> tuple[int, int]:
        return self.index[key][0]


def build_moment_matrix(monomials: Sequence[Word]) -> MomentMatrix:
    index: dict[MomentKey, list[tuple[int, int]]] = {}
    zeros: list[tuple[int, int]] = []
    mono = list(monomials)
    for i, u in enumerate(mono):
        u_adj = ncalg.adjoint(u)
        for j in range(i, len(mono)):
            key = ncalg.reduced_key(u_adj + mono[j])
            if key is None:
                zeros.append((i, j))
            else:
                index.setdefault(key, []).append((i, j))
    return MomentMatrix(mono, index, zeros)


# (block, key, coefficient) terms summing to rhs
Term = tuple[int, MomentKey, float]


@dataclass(frozen=True)
class LinearEquality:
    terms: tuple[Term, ...]
    rhs: float

    def __post_init__(self):
        if not self.terms:
            raise ValueError("equality needs at least one term")


def _canonical_equality(terms: list[Term], rhs: float) -> Optional[LinearEquality]:
    """Merge duplicate keys, drop zero coefficients, normalize the leader.

    Returns None for trivially satisfied (0 = 0) equalities.
    """
    acc: dict[tuple[int, MomentKey], float] = {}
    for blk, key, c in terms:
        acc[(blk, key)] = acc.get((blk, key), 0.0) + c
    items = sorted(
        ((blk, key, c) for (blk, key), c in acc.items() if abs(c) > COEFF_EPS),
        key=lambda t: (t[0], t[1]),
    )
    if not items:
        if abs(rhs) > COEFF_EPS:
            raise ShapeError("contradictory equality with empty support")
        return None
    lead = items[0][2]
    return LinearEquality(
        tuple((blk, key, c / lead) for blk, key, c in items), rhs / lead
    )


@dataclass
class MomentProblem:
    scenario: ScenarioSpec
    blocks: list[MomentMatrix]
    equalities: list[LinearEquality]
    objective: list[Term] = field(default_factory=list)
    objective_offset: float = 0.0
    sense: str = "max"
    # per-block value of the (identity, identity) entry; None means free
    normalization: list[Optional[float]] = field(default_factory=list)
    flags: RelaxationFlags = field(default_factory=RelaxationFlags)
    reduce_basis: bool = False
    level_label: str = ""


class _EqualityCollector:
    def __init__(self):
        self.seen: set = set()
        self.out: list[LinearEquality] = []

    def add(self, terms: list[Term], rhs: float):
        eq = _canonical_equality(terms, rhs)
        if eq is None:
            return
        sig = (tuple((b, k, round(c, 10)) for b, k, c in eq.terms), round(eq.rhs, 10))
        if sig in self.seen:
            return
        self.seen.add(sig)
        self.out.append(eq)


def _resolved_sum(mm: MomentMatrix, u_adj: Word, mids: list[Word], v: Word,
                  block: int, coeff: float) -> Optional[list[Term]]:
    """Terms coeff*key(u_adj . mid . v) for each mid, or None if unresolvable."""
    terms: list[Term] = []
    for mid in mids:
        key = ncalg.reduced_key(u_adj + mid + v)
        if key is None:
            continue
        if not mm.has_key(key):
            return None
        terms.append((block, key, coeff))
    return terms


def _structural_equalities(scn: ScenarioSpec, mm: MomentMatrix,
                           flags: RelaxationFlags, block: int,
                           collector: _EqualityCollector) -> None:
    """Normalization, sequential no-signalling and local-commuting equalities.

    Constraints range over all monomial pairs (u, v) of the block and are
    emitted only when every nonzero summand key resolves to an entry.
    """
    mono = mm.monomials
    pairs = [(ncalg.adjoint(u), v)
             for i, u in enumerate(mono) for v in mono[i:]]

    full_symbols = {
        p: [[(s,) for s in _symbols_for_input(scn, p, x)]
            for x in scn.parties[p].input_tuples()]
        for p in (0, 1)
    }

    if flags.normalization:
        for p in (0, 1):
            for mids in full_symbols[p]:
                flat = [w for w in mids]
                for u_adj, v in pairs:
                    base = ncalg.reduced_key(u_adj + v)
                    lhs = _resolved_sum(mm, u_adj, flat, v, block, 1.0)
                    if lhs is None:
                        continue
                    terms = list(lhs)
                    if base is not None:
                        terms.append((block, base, -1.0))
                    collector.add(terms, 0.0)

    if flags.sequential_noback:
        for p in (0, 1):
            party = scn.parties[p]
            n = party.n_steps
            for k in range(1, n):
                groups = _prefix_groups(scn, p, k)
                for (xp, ap), suffix_words in groups.items():
                    suffixes = list(suffix_words.items())
                    for si in range(len(suffixes)):
                        for sj in range(si + 1, len(suffixes)):
                            mids_a = suffixes[si][1]
                            mids_b = suffixes[sj][1]
                            for u_adj, v in pairs:
                                lhs = _resolved_sum(mm, u_adj, mids_a, v, block, 1.0)
                                if lhs is None:
                                    continue
                                rhs_terms = _resolved_sum(mm, u_adj, mids_b, v,
                                                          block, -1.0)
                                if rhs_terms is None:
                                    continue
                                collector.add(lhs + rhs_terms, 0.0)

    if flags.local_commuting:
        for p in (0, 1):
            syms = ncalg.party_symbols(scn, p)
            for i, o1 in enumerate(syms):
                for o2 in syms[i + 1:]:
                    for u_adj, v in pairs:
                        k1 = ncalg.reduced_key(u_adj + (o1, o2) + v)
                        k2 = ncalg.reduced_key(u_adj + (o2, o1) + v)
                        if k1 == k2:
                            continue
                        terms: list[Term] = []
                        if k1 is not None:
                            if not mm.has_key(k1):
                                continue
                            terms.append((block, k1, 1.0))
                        if k2 is not None:
                            if not mm.has_key(k2):
                                continue
                            terms.append((block, k2, -1.0))
                        collector.add(terms, 0.0)


def _symbols_for_input(scn: ScenarioSpec, party: int, x: tuple) -> list[OpSymbol]:
    return [OpSymbol(party, x, a) for a in scn.parties[party].output_tuples(x)]


def _prefix_groups(scn: ScenarioSpec, party: int, k: int):
    """Map (prefix inputs, prefix outputs) -> {suffix inputs: [words]}.

    Words are the single-symbol operators with the given prefix, one list
    entry per suffix-outcome completion.
    """
    spec = scn.parties[party]
    groups: dict = {}
    for x in spec.input_tuples():
        for a in spec.output_tuples(x):
            ctx = (x[:k], a[:k])
            groups.setdefault(ctx, {}).setdefault(x[k:], []).append(
                (OpSymbol(party, x, a),)
            )
    return groups


def build_moment_problem(scn: ScenarioSpec, level: ncalg.LevelSpec,
                         flags: RelaxationFlags = RelaxationFlags(),
                         reduce_basis: bool = False) -> MomentProblem:
    """Single-block moment problem with structural equalities, no pins."""
    monomials = ncalg.generate_level_set(scn, level, reduce_basis)
    mm = build_moment_matrix(monomials)
    collector = _EqualityCollector()
    _structural_equalities(scn, mm, flags, 0, collector)
    return MomentProblem(
        scenario=scn,
        blocks=[mm],
        equalities=collector.out,
        normalization=[1.0],
        flags=flags,
        reduce_basis=reduce_basis,
        level_label=str(level),
    )


# --- probability expressions --------------------------------------------------


def _symbol_expansion(scn: ScenarioSpec, party: int, x: tuple, a: tuple,
                      reduce_basis: bool) -> list[tuple[float, Word]]:
    """Expand a full-sequence symbol over the (possibly reduced) basis.

    With the Collins-Gisin style reduction on a single-step party, the
    dropped last outcome is rewritten as identity minus the kept ones.
    """
    spec = scn.parties[party]
    if reduce_basis and spec.n_steps == 1:
        last = spec.steps[0].outputs_per_input[x[0]] - 1
        if a[0] == last:
            out: list[tuple[float, Word]] = [(1.0, IDENTITY)]
            for a2 in range(last):
                out.append((-1.0, (OpSymbol(party, x, (a2,)),)))
            return out
    return [(1.0, (OpSymbol(party, x, a),))]


def probability_terms(scn: ScenarioSpec, block: int, x, y, a, b,
                      reduce_basis: bool) -> list[Term]:
    """Moment-key terms whose sum equals P(a, b | x, y)."""
    terms: list[Term] = []
    for ca, wa in _symbol_expansion(scn, 0, x, a, reduce_basis):
        for cb, wb in _symbol_expansion(scn, 1, y, b, reduce_basis):
            key = ncalg.reduced_key(wa + wb)
            if key is None:
                continue
            terms.append((block, key, ca * cb))
    return terms


def pin_behavior(p: MomentProblem, bhv: Behavior) -> MomentProblem:
    """Add equalities fixing every observable probability to the behavior's."""
    if bhv.scenario != p.scenario:
        raise ShapeError("behavior scenario does not match problem")
    collector = _EqualityCollector()
    for x, y, a, b in p.scenario.index_iter():
        terms = probability_terms(p.scenario, 0, x, y, a, b, p.reduce_basis)
        collector.add(terms, bhv.table[(x, y, a, b)])
    return replace(p, equalities=p.equalities + collector.out)


def set_objective(p: MomentProblem, f: BellFunctional) -> MomentProblem:
    """Maximize the Bell functional; the constant offset stays outside the SDP."""
    if f.scenario != p.scenario:
        raise ShapeError("functional scenario does not match problem")
    acc: dict[tuple[int, MomentKey], float] = {}
    for (x, y, a, b), c in f.coefficients.items():
        for blk, key, coef in probability_terms(p.scenario, 0, x, y, a, b,
                                                p.reduce_basis):
            acc[(blk, key)] = acc.get((blk, key), 0.0) + c * coef
    objective = [(blk, key, c) for (blk, key), c in sorted(acc.items())
                 if abs(c) > COEFF_EPS]
    return replace(p, objective=objective, objective_offset=f.constant_offset,
                   sense="max")


def functional_equality(p: MomentProblem, f: BellFunctional,
                        value: float) -> LinearEquality:
    """Moment-level equality pinning a functional's value (offset folded)."""
    acc: dict[tuple[int, MomentKey], float] = {}
    for (x, y, a, b), c in f.coefficients.items():
        for blk, key, coef in probability_terms(p.scenario, 0, x, y, a, b,
                                                p.reduce_basis):
            acc[(blk, key)] = acc.get((blk, key), 0.0) + c * coef
    terms = tuple((blk, key, c) for (blk, key), c in sorted(acc.items())
                  if abs(c) > COEFF_EPS)
    return LinearEquality(terms, value - f.constant_offset)


def add_equalities(p: MomentProblem, eqs: list[LinearEquality]) -> MomentProblem:
    return replace(p, equalities=p.equalities + list(eqs))


# --- guessing-probability program ---------------------------------------------


def build_guessing_program(scn: ScenarioSpec, level: ncalg.LevelSpec,
                           b_obs: Behavior, y_star: tuple,
                           flags: RelaxationFlags = RelaxationFlags(),
                           reduce_basis: bool = False) -> MomentProblem:
    """Multi-block program bounding the adversary's guessing probability.

    One subnormalized block per possible output sequence e of party B for
    the inputs y_star; block normalizations are free and sum to one, the
    observed behavior is reproduced on average, and the objective collects
    the diagonal moments <B_e^{y_star}> across blocks.
    """
    if b_obs.scenario != scn:
        raise ShapeError("behavior scenario does not match")
    if y_star not in scn.bob.input_tuples():
        raise ShapeError(f"invalid guessing input {y_star!r}")
    e_values = scn.bob.output_tuples(y_star)

    monomials = ncalg.generate_level_set(scn, level, reduce_basis)
    mm = build_moment_matrix(monomials)
    collector = _EqualityCollector()
    # structural constraints hold within every subnormalized block
    per_block = _EqualityCollector()
    _structural_equalities(scn, mm, flags, 0, per_block)
    for e_idx in range(len(e_values)):
        for eq in per_block.out:
            collector.add([(e_idx, key, c) for _, key, c in eq.terms], eq.rhs)
    # observed behavior is the sum over the adversary's outcomes
    for x, y, a, b in scn.index_iter():
        terms: list[Term] = []
        for e_idx in range(len(e_values)):
            terms.extend(probability_terms(scn, e_idx, x, y, a, b, reduce_basis))
        collector.add(terms, b_obs.table[(x, y, a, b)])
    # block normalizations sum to one
    collector.add([(e_idx, IDENTITY, 1.0) for e_idx in range(len(e_values))], 1.0)

    objective: list[Term] = []
    for e_idx, e in enumerate(e_values):
        key = ncalg.reduced_key((OpSymbol(1, y_star, e),))
        objective.append((e_idx, key, 1.0))

    return MomentProblem(
        scenario=scn,
        blocks=[mm] * len(e_values),
        equalities=collector.out,
        objective=objective,
        sense="max",
        normalization=[None] * len(e_values),
        flags=flags,
        reduce_basis=reduce_basis,
        level_label=str(level),
    )


# --- compilation to standard form ---------------------------------------------


def _entry_matval(i: int, j: int, coeff: float) -> float:
    """Matrix value so that tr(A X) contributes coeff * X_ij (upper entry)."""
    return coeff if i == j else coeff / 2.0


def compile_to_sdp(p: MomentProblem):
    """Standard-form SDP: tr-objective, sparse symmetric equality constraints.

    Variables are the block moment matrices; repeated keys are tied entry
    to entry, zero reductions and fixed normalizations are pinned, and each
    moment equality lands on the representative entry of its keys.
    """
    from .solver import SdpStandardForm  # local import to avoid a cycle

    rows: list[tuple[dict, float]] = []
    # contradictory single-key pins are a structural error
    single_pins: dict[tuple[int, MomentKey], float] = {}
    for eq in p.equalities:
        if len(eq.terms) == 1:
            blk, key, c = eq.terms[0]
            val = eq.rhs / c
            prev = single_pins.get((blk, key))
            if prev is not None and abs(prev - val) > 1e-9:
                raise ShapeError(
                    f"key {ncalg.render_word(key)} pinned to both {prev} and {val}"
                )
            single_pins[(blk, key)] = val

    for blk, mm in enumerate(p.blocks):
        for key, positions in sorted(mm.index.items()):
            rep = positions[0]
            for pos in positions[1:]:
                row = {
                    (blk, *rep): _entry_matval(*rep, 1.0),
                    (blk, *pos): _entry_matval(*pos, -1.0),
                }
                rows.append((row, 0.0))
        for pos in mm.zeros:
            rows.append(({(blk, *pos): _entry_matval(*pos, 1.0)}, 0.0))
        norm = p.normalization[blk]
        if norm is not None:
            rows.append(({(blk, 0, 0): 1.0}, float(norm)))

    def key_entry(blk: int, key: MomentKey) -> tuple[int, int, int]:
        mm = p.blocks[blk]
        if not mm.has_key(key):
            raise ShapeError(f"unresolvable key {ncalg.render_word(key)}")
        i, j = mm.representative(key)
        return (blk, i, j)

    for eq in p.equalities:
        row: dict = {}
        for blk, key, c in eq.terms:
            ent = key_entry(blk, key)
            row[ent] = row.get(ent, 0.0) + _entry_matval(ent[1], ent[2], c)
        rows.append((row, eq.rhs))

    objective: dict = {}
    for blk, key, c in p.objective:
        ent = key_entry(blk, key)
        objective[ent] = objective.get(ent, 0.0) + _entry_matval(ent[1], ent[2], c)

    trace = []
    for blk, mm in enumerate(p.blocks):
        for key, positions in sorted(mm.index.items()):
            trace.append(
                f"block {blk} {ncalg.render_word(key)} -> {positions[0]} "
                f"(+{len(positions) - 1} tied)"
            )

    return SdpStandardForm(
        block_sizes=[mm.size for mm in p.blocks],
        objective=objective,
        constraints=rows,
        sense=p.sense,
        objective_offset=p.objective_offset,
        trace_table=trace,
    )


def fingerprint(p: MomentProblem) -> str:
    """Deterministic text dump of the constraint system, for diffing."""
    lines = [
        f"blocks: {[mm.size for mm in p.blocks]}",
        f"normalization: {p.normalization}",
        f"flags: noback={p.flags.sequential_noback} "
        f"local={p.flags.local_commuting} norm={p.flags.normalization}",
    ]
    for eq in p.equalities:
        terms = " + ".join(
            f"{c:+g}*[{blk}]{ncalg.render_word(key)}" for blk, key, c in eq.terms
        )
        lines.append(f"{terms} = {eq.rhs:g}")
    if p.objective:
        terms = " + ".join(
            f"{c:+g}*[{blk}]{ncalg.render_word(key)}" for blk, key, c in p.objective
        )
        lines.append(f"objective ({p.sense}): {terms} + {p.objective_offset:g}")
    return "\n".join(lines) + "\n"
