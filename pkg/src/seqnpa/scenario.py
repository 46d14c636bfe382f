"""Sequential Bell scenarios, behaviors and Bell functionals.

A scenario fixes, for each of two parties, an ordered list of measurement
steps; each step has a number of inputs and, per input, a number of
outcomes.  A behavior is the full conditional probability table
P(a|x; b|y) over input/output sequences, subject to normalization and
the causal (one-way no-signalling) structure of sequential measurements.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Mapping

NORMALIZATION_TOL = 1e-10
SIGNALLING_TOL = 1e-10

PARTY_NAMES = ("A", "B")


class ShapeError(ValueError):
    """Structural mismatch between a table/functional and its scenario."""


@dataclass(frozen=True)
class StepSpec:
    """One measurement step: outputs_per_input[j] outcomes when the input is j."""

    outputs_per_input: tuple[int, ...]

    def __post_init__(self):
        if len(self.outputs_per_input) == 0:
            raise ValueError("step needs at least one input")
        if any(o < 1 for o in self.outputs_per_input):
            raise ValueError("every input needs at least one outcome")

    @property
    def n_inputs(self) -> int:
        return len(self.outputs_per_input)


@dataclass(frozen=True)
class PartySpec:
    """A party's ordered sequence of measurement steps."""

    steps: tuple[StepSpec, ...]

    def __post_init__(self):
        if len(self.steps) == 0:
            raise ValueError("party needs at least one step")

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    def input_tuples(self) -> list[tuple[int, ...]]:
        ranges = [range(s.n_inputs) for s in self.steps]
        return [tuple(t) for t in itertools.product(*ranges)]

    def output_tuples(self, inputs: tuple[int, ...]) -> list[tuple[int, ...]]:
        if len(inputs) != self.n_steps:
            raise ShapeError(f"expected {self.n_steps} inputs, got {len(inputs)}")
        ranges = [range(s.outputs_per_input[x]) for s, x in zip(self.steps, inputs)]
        return [tuple(t) for t in itertools.product(*ranges)]

    def valid_pair(self, inputs: tuple[int, ...], outputs: tuple[int, ...]) -> bool:
        if len(inputs) != self.n_steps or len(outputs) != self.n_steps:
            return False
        for step, x, a in zip(self.steps, inputs, outputs):
            if not (0 <= x < step.n_inputs and 0 <= a < step.outputs_per_input[x]):
                return False
        return True


@dataclass(frozen=True)
class ScenarioSpec:
    """Two-party sequential Bell scenario (party 0 = A, party 1 = B)."""

    parties: tuple[PartySpec, ...]

    def __post_init__(self):
        if len(self.parties) != 2:
            raise ValueError("exactly two parties are supported")

    @property
    def alice(self) -> PartySpec:
        return self.parties[0]

    @property
    def bob(self) -> PartySpec:
        return self.parties[1]

    def index_iter(self) -> Iterator[tuple[tuple, tuple, tuple, tuple]]:
        """All valid (x, y, a, b) index tuples, in deterministic order."""
        for x in self.alice.input_tuples():
            for y in self.bob.input_tuples():
                for a in self.alice.output_tuples(x):
                    for b in self.bob.output_tuples(y):
                        yield x, y, a, b

    def valid_index(self, x, y, a, b) -> bool:
        return self.alice.valid_pair(x, a) and self.bob.valid_pair(y, b)


def make_scenario(alice_steps, bob_steps) -> ScenarioSpec:
    """Build a scenario from lists of outputs_per_input lists.

    make_scenario([[2, 2]], [[2, 2], [2, 2, 3]]) gives a one-step Alice with
    two binary inputs and a two-step Bob whose second step has a third,
    three-outcome input.
    """
    return ScenarioSpec(
        (
            PartySpec(tuple(StepSpec(tuple(s)) for s in alice_steps)),
            PartySpec(tuple(StepSpec(tuple(s)) for s in bob_steps)),
        )
    )


def chsh_scenario() -> ScenarioSpec:
    return make_scenario([[2, 2]], [[2, 2]])


def two_step_scenario() -> ScenarioSpec:
    """One-step Alice, two-step Bob with binary steps throughout."""
    return make_scenario([[2, 2]], [[2, 2], [2, 2]])


def randomness_scenario() -> ScenarioSpec:
    """One-step Alice; two-step Bob whose second step has a 3-outcome third input."""
    return make_scenario([[2, 2]], [[2, 2], [2, 2, 3]])


@dataclass(frozen=True)
class Behavior:
    """Probability table P(a, b | x, y) over full input/output sequences."""

    scenario: ScenarioSpec
    table: Mapping[tuple, float]

    def __post_init__(self):
        expected = set()
        for x, y, a, b in self.scenario.index_iter():
            expected.add((x, y, a, b))
        got = set(self.table.keys())
        if got != expected:
            missing = expected - got
            extra = got - expected
            raise ShapeError(
                f"behavior table shape mismatch: {len(missing)} missing, "
                f"{len(extra)} invalid entries"
            )

    def prob(self, x, y, a, b) -> float:
        return self.table[(x, y, a, b)]


@dataclass(frozen=True)
class Violation:
    kind: str  # "normalization" | "seq_nosignalling" | "cross_nosignalling" | "range"
    indices: tuple
    residual: float

    def __str__(self):
        return f"{self.kind} at {self.indices}: residual {self.residual:.3e}"


def uniform_behavior(scenario: ScenarioSpec) -> Behavior:
    table = {}
    for x in scenario.alice.input_tuples():
        for y in scenario.bob.input_tuples():
            outs_a = scenario.alice.output_tuples(x)
            outs_b = scenario.bob.output_tuples(y)
            p = 1.0 / (len(outs_a) * len(outs_b))
            for a in outs_a:
                for b in outs_b:
                    table[(x, y, a, b)] = p
    return Behavior(scenario, table)


def _party_seq_violations(bhv: Behavior, party: int) -> list[Violation]:
    """One-way no-signalling within one party.

    Marginalizing the last n-k outputs must give a table independent of the
    last n-k inputs, jointly with the other party's full indices.
    """
    scn = bhv.scenario
    own = scn.parties[party]
    other = scn.parties[1 - party]
    out: list[Violation] = []
    n = own.n_steps
    for k in range(1, n):
        # marginal[(prefix_x, prefix_a, other_x, other_b)][suffix_x] = sum
        marginal: dict = {}
        for x, y, a, b in scn.index_iter():
            ox, oa = (x, a) if party == 0 else (y, b)
            tx, tb = (y, b) if party == 0 else (x, a)
            ctx = (ox[:k], oa[:k], tx, tb)
            marginal.setdefault(ctx, {}).setdefault(ox[k:], 0.0)
            marginal[ctx][ox[k:]] += bhv.table[(x, y, a, b)]
        for ctx, by_suffix in marginal.items():
            values = list(by_suffix.items())
            ref_suffix, ref = values[0]
            for suffix, v in values[1:]:
                if abs(v - ref) > SIGNALLING_TOL:
                    out.append(
                        Violation(
                            "seq_nosignalling",
                            (PARTY_NAMES[party], k, ctx[0], ctx[1], ref_suffix, suffix),
                            abs(v - ref),
                        )
                    )
    return out


def _cross_violations(bhv: Behavior) -> list[Violation]:
    scn = bhv.scenario
    out: list[Violation] = []
    for party in (0, 1):
        own = scn.parties[party]
        other = scn.parties[1 - party]
        for ox in own.input_tuples():
            for oa in own.output_tuples(ox):
                vals = {}
                for tx in other.input_tuples():
                    s = 0.0
                    for tb in other.output_tuples(tx):
                        key = (ox, tx, oa, tb) if party == 0 else (tx, ox, tb, oa)
                        s += bhv.table[key]
                    vals[tx] = s
                items = list(vals.items())
                ref_x, ref = items[0]
                for tx, v in items[1:]:
                    if abs(v - ref) > SIGNALLING_TOL:
                        out.append(
                            Violation(
                                "cross_nosignalling",
                                (PARTY_NAMES[party], ox, oa, ref_x, tx),
                                abs(v - ref),
                            )
                        )
    return out


def validate_behavior(bhv: Behavior) -> list[Violation]:
    """Check normalization, in-party one-way and cross-party no-signalling.

    Returns an empty list iff the behavior satisfies all invariants at the
    module tolerances.  Shape problems raise ShapeError at construction.
    """
    scn = bhv.scenario
    report: list[Violation] = []
    for x in scn.alice.input_tuples():
        for y in scn.bob.input_tuples():
            total = sum(
                bhv.table[(x, y, a, b)]
                for a in scn.alice.output_tuples(x)
                for b in scn.bob.output_tuples(y)
            )
            if abs(total - 1.0) > NORMALIZATION_TOL:
                report.append(Violation("normalization", (x, y), abs(total - 1.0)))
    for x, y, a, b in scn.index_iter():
        p = bhv.table[(x, y, a, b)]
        if p < -NORMALIZATION_TOL or p > 1.0 + NORMALIZATION_TOL:
            report.append(Violation("range", (x, y, a, b), max(-p, p - 1.0)))
    report.extend(_party_seq_violations(bhv, 0))
    report.extend(_party_seq_violations(bhv, 1))
    report.extend(_cross_violations(bhv))
    return report


@dataclass(frozen=True)
class BellFunctional:
    """Sparse linear functional of a behavior, plus a constant offset."""

    scenario: ScenarioSpec
    coefficients: Mapping[tuple, float]
    constant_offset: float = 0.0
    name: str = ""

    def __post_init__(self):
        for x, y, a, b in self.coefficients:
            if not self.scenario.valid_index(x, y, a, b):
                raise ShapeError(f"invalid coefficient index {(x, y, a, b)}")


def evaluate_functional(f: BellFunctional, bhv: Behavior) -> float:
    if f.scenario != bhv.scenario:
        raise ShapeError("functional and behavior scenarios differ")
    return sum(c * bhv.table[idx] for idx, c in f.coefficients.items()) + f.constant_offset


def _sign(*outcomes: int) -> int:
    return -1 if sum(outcomes) % 2 else 1


def chsh_functional(scenario: ScenarioSpec | None = None) -> BellFunctional:
    """Standard CHSH on a degenerate (one step per party) scenario."""
    scn = scenario or chsh_scenario()
    if scn.alice.n_steps != 1 or scn.bob.n_steps != 1:
        raise ShapeError("chsh needs one-step parties")
    coeffs = {}
    for x, y, a, b in scn.index_iter():
        sgn = 1 if (x[0] * y[0]) % 2 == 0 else -1
        coeffs[(x, y, a, b)] = sgn * _sign(a[0], b[0])
    return BellFunctional(scn, coeffs, 0.0, "chsh")


def chsh_ab1_functional(scenario: ScenarioSpec | None = None) -> BellFunctional:
    """CHSH between Alice and the first Bob, marginalized over later outcomes."""
    scn = scenario or two_step_scenario()
    _require_two_step_bob(scn)
    coeffs = {}
    for x, y, a, b in scn.index_iter():
        # marginalize b_2 by summing; average over y_2 keeps the functional
        # well defined entry-wise (equivalent on no-signalling behaviors)
        n_y2 = scn.bob.steps[1].n_inputs
        sgn = 1 if (x[0] * y[0]) % 2 == 0 else -1
        coeffs[(x, y, a, b)] = sgn * _sign(a[0], b[0]) / n_y2
    return BellFunctional(scn, coeffs, 0.0, "chsh_ab1")


def chsh_ab2_functional(scenario: ScenarioSpec | None = None) -> BellFunctional:
    """CHSH between Alice and the second Bob, averaged over the first step.

    Includes the 1/2 averaging over the uniform choice of the first input
    y_1 and the marginalization over the first outcome b_1.
    """
    scn = scenario or two_step_scenario()
    _require_two_step_bob(scn)
    if scn.bob.steps[1].n_inputs < 2:
        raise ShapeError("second Bob step needs two inputs")
    coeffs = {}
    for x, y, a, b in scn.index_iter():
        sgn = 1 if (x[0] * y[1]) % 2 == 0 else -1
        coeffs[(x, y, a, b)] = 0.5 * sgn * _sign(a[0], b[1])
    return BellFunctional(scn, coeffs, 0.0, "chsh_ab2")


def gallego_inequality(scenario: ScenarioSpec | None = None) -> BellFunctional:
    """Facet inequality of the sequential time-ordered local set.

    I = <A_0 (B - B')> - <A_1 (B + B')> with
    B  = [(1 + B^1_0) B^2_{01} - (1 - B^1_0) B^2_{00}] / 2,
    B' = [(1 - B^1_1) B^2_{11} + (1 + B^1_1) B^2_{10}] / 2,
    where <A_x B^2_{y1 y2}> and <A_x B^1_{y1} B^2_{y1 y2}> are the full
    correlators of the respective outcome products.  Local bound 2.
    """
    scn = scenario or two_step_scenario()
    _require_two_step_bob(scn)
    coeffs: dict[tuple, float] = {}

    def add_corr(x0: int, y: tuple[int, int], weight: float, with_b1: bool):
        x = (x0,)
        for a in scn.alice.output_tuples(x):
            for b in scn.bob.output_tuples(y):
                s = _sign(a[0], b[0], b[1]) if with_b1 else _sign(a[0], b[1])
                key = (x, y, a, b)
                coeffs[key] = coeffs.get(key, 0.0) + weight * s

    for x0, sx in ((0, 1.0), (1, -1.0)):
        # B enters with sign sx; B' enters with -1 for both inputs
        # B terms
        add_corr(x0, (0, 1), 0.5 * sx, with_b1=False)
        add_corr(x0, (0, 1), 0.5 * sx, with_b1=True)
        add_corr(x0, (0, 0), -0.5 * sx, with_b1=False)
        add_corr(x0, (0, 0), 0.5 * sx, with_b1=True)
        # B' terms enter as -B' for x0=0 and -B' for x0=1 combined sign:
        sq = -1.0
        add_corr(x0, (1, 1), 0.5 * sq, with_b1=False)
        add_corr(x0, (1, 1), -0.5 * sq, with_b1=True)
        add_corr(x0, (1, 0), 0.5 * sq, with_b1=False)
        add_corr(x0, (1, 0), 0.5 * sq, with_b1=True)
    coeffs = {k: v for k, v in coeffs.items() if v != 0.0}
    return BellFunctional(scn, coeffs, 0.0, "gallego_I")


def _require_two_step_bob(scn: ScenarioSpec):
    if scn.alice.n_steps != 1 or scn.bob.n_steps != 2:
        raise ShapeError("needs a one-step Alice and a two-step Bob")
    if scn.alice.steps[0].n_inputs != 2 or scn.bob.steps[0].n_inputs != 2:
        raise ShapeError("needs two inputs for Alice and the first Bob step")


def named_functionals(scenario: ScenarioSpec) -> dict[str, BellFunctional]:
    """Functionals from the library that fit the given scenario."""
    out: dict[str, BellFunctional] = {}
    for builder in (chsh_functional, chsh_ab1_functional, chsh_ab2_functional,
                    gallego_inequality):
        try:
            f = builder(scenario)
        except ShapeError:
            continue
        out[f.name] = f
    return out


# --- behavior text serialization -------------------------------------------

def _fmt_tuple(t: tuple[int, ...]) -> str:
    return ",".join(str(v) for v in t)


def _parse_tuple(s: str) -> tuple[int, ...]:
    return tuple(int(v) for v in s.strip().split(","))


def behavior_to_text(bhv: Behavior) -> str:
    lines = []
    for name, party in zip(PARTY_NAMES, bhv.scenario.parties):
        lines.append(f"party {name}")
        for i, step in enumerate(party.steps):
            outs = " ".join(str(o) for o in step.outputs_per_input)
            lines.append(f"step {i} outputs {outs}")
    lines.append("records")
    for x, y, a, b in bhv.scenario.index_iter():
        p = bhv.table[(x, y, a, b)]
        lines.append(
            f"{_fmt_tuple(x)} ; {_fmt_tuple(y)} ; {_fmt_tuple(a)} ; "
            f"{_fmt_tuple(b)} ; {p:.17g}"
        )
    return "\n".join(lines) + "\n"


def behavior_from_text(text: str) -> Behavior:
    party_steps: list[list[list[int]]] = []
    table: dict[tuple, float] = {}
    in_records = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line == "records":
            in_records = True
            continue
        if not in_records:
            if line.startswith("party"):
                party_steps.append([])
            elif line.startswith("step"):
                parts = line.split()
                if len(parts) < 4 or parts[2] != "outputs":
                    raise ValueError(f"line {lineno}: malformed step line")
                party_steps[-1].append([int(v) for v in parts[3:]])
            else:
                raise ValueError(f"line {lineno}: unexpected header line {line!r}")
        else:
            fields = [f.strip() for f in line.split(";")]
            if len(fields) != 5:
                raise ValueError(f"line {lineno}: expected 5 fields")
            x, y, a, b = (_parse_tuple(f) for f in fields[:4])
            table[(x, y, a, b)] = float(fields[4])
    if len(party_steps) != 2:
        raise ValueError("expected exactly two party headers")
    scn = make_scenario(party_steps[0], party_steps[1])
    return Behavior(scn, table)
