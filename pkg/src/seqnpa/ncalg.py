"""Word algebra of full-sequence measurement operators.

Symbols stand for the projective operators describing a party's entire
measurement sequence for a fixed input tuple and outcome tuple.  Words are
products of symbols; reduction rewrites a word to a canonical form using

  R1  cross-party commutation (all A letters before all B letters),
  R2  idempotence of identical adjacent letters,
  R3  adjacent same-party letters whose input tuples share a prefix on
      which the outcome tuples disagree multiply to zero.

Reduction is confluent because R2/R3 act only on adjacent same-party pairs
and never create new interleavings.
"""

from __future__ import annotations

import itertools
from typing import NamedTuple, Optional, Sequence, Union

from .scenario import ScenarioSpec, PARTY_NAMES


class OpSymbol(NamedTuple):
    party: int  # 0 = A, 1 = B
    inputs: tuple[int, ...]
    outputs: tuple[int, ...]

    def render(self) -> str:
        xs = ",".join(str(v) for v in self.inputs)
        os = ",".join(str(v) for v in self.outputs)
        return f"{PARTY_NAMES[self.party]}[{xs}|{os}]"


# A word is a tuple of symbols; () is the identity.  A reduced word is either
# a word or None, which stands for the zero operator.
Word = tuple[OpSymbol, ...]
Reduced = Optional[Word]

IDENTITY: Word = ()


def validate_symbol(scn: ScenarioSpec, sym: OpSymbol) -> None:
    party = scn.parties[sym.party]
    if not party.valid_pair(sym.inputs, sym.outputs):
        raise ValueError(f"symbol {sym.render()} invalid for scenario")


def render_word(word: Reduced) -> str:
    if word is None:
        return "0"
    if not word:
        return "1"
    return ".".join(s.render() for s in word)


def adjoint(word: Word) -> Word:
    """Adjoint of a word of self-adjoint letters: reversal."""
    return word[::-1]


def _pair_rule(s: OpSymbol, t: OpSymbol) -> Union[None, str, OpSymbol]:
    """Outcome of multiplying adjacent same-party letters s·t.

    Returns the single surviving letter (R2), None for zero (R3) or the
    string "keep" when no rule fires.
    """
    if s == t:
        return s
    k = 0
    for xi, xj in zip(s.inputs, t.inputs):
        if xi != xj:
            break
        k += 1
    if k >= 1 and s.outputs[:k] != t.outputs[:k]:
        return None
    return "keep"


_reduce_cache: dict[Word, Reduced] = {}


def reduce_word(word: Word) -> Reduced:
    """Canonical form of a word, or None if it reduces to zero."""
    cached = _reduce_cache.get(word)
    if cached is not None or word in _reduce_cache:
        return cached
    # R1: stable partition by party
    letters = [s for s in word if s.party == 0] + [s for s in word if s.party == 1]
    # R2/R3 to a fixed point; rules only ever shorten the word
    changed = True
    result: Reduced = None
    while changed:
        changed = False
        for i in range(len(letters) - 1):
            s, t = letters[i], letters[i + 1]
            if s.party != t.party:
                continue
            rule = _pair_rule(s, t)
            if rule == "keep":
                continue
            if rule is None:
                _reduce_cache[word] = None
                return None
            del letters[i + 1]
            changed = True
            break
    result = tuple(letters)
    _reduce_cache[word] = result
    return result


def multiply(*words: Word) -> Reduced:
    """Reduced product of words (None if any factor logic yields zero)."""
    joined: Word = tuple(itertools.chain.from_iterable(words))
    return reduce_word(joined)


# --- moment keys ------------------------------------------------------------

# Real symmetric moment matrices identify a word with its reversal, so the
# key of a word is the lexicographically smaller of the two.

MomentKey = Word


def moment_key(word: Word) -> MomentKey:
    rev = word[::-1]
    return word if word <= rev else rev


def reduced_key(word: Word) -> Optional[MomentKey]:
    r = reduce_word(word)
    return None if r is None else moment_key(r)


# --- generating sets --------------------------------------------------------

LevelSpec = Union[int, str, Sequence[Word]]


def party_symbols(scn: ScenarioSpec, party: int, reduce_basis: bool = False) -> list[OpSymbol]:
    """All full-sequence symbols of a party, in deterministic order.

    With reduce_basis, a single-step party drops the last outcome of each
    input (Collins-Gisin style); multi-step parties always keep everything.
    """
    spec = scn.parties[party]
    out = []
    drop_last = reduce_basis and spec.n_steps == 1
    for x in spec.input_tuples():
        for a in spec.output_tuples(x):
            if drop_last and a[0] == spec.steps[0].outputs_per_input[x[0]] - 1:
                continue
            out.append(OpSymbol(party, x, a))
    return out


def _word_sort_key(word: Word):
    return (len(word), word)


def parse_level(level: LevelSpec) -> Union[int, str, tuple[Word, ...]]:
    if isinstance(level, int):
        if level < 1:
            raise ValueError("hierarchy level must be >= 1")
        return level
    if isinstance(level, str):
        s = level.strip().lower()
        if s in ("1+ab", "1ab"):
            return "1+AB"
        try:
            k = int(s)
        except ValueError:
            raise ValueError(f"unknown level spec {level!r}") from None
        return parse_level(k)
    return tuple(level)


def generate_level_set(scn: ScenarioSpec, level: LevelSpec,
                       reduce_basis: bool = False) -> list[Word]:
    """Ordered monomial basis for the given hierarchy level.

    Level k contains the identity and all reduced products of up to k
    symbols; "1+AB" adds all cross-party degree-2 products to level 1.
    Zero products and duplicate canonical forms are dropped; the output is
    sorted by (length, lexicographic) with the identity first.
    """
    lv = parse_level(level)
    if isinstance(lv, tuple):
        words = []
        seen = set()
        for w in lv:
            r = reduce_word(w)
            if r is None or r in seen:
                continue
            seen.add(r)
            words.append(r)
        if IDENTITY not in seen:
            words.insert(0, IDENTITY)
        return words

    a_syms = party_symbols(scn, 0, reduce_basis)
    b_syms = party_symbols(scn, 1, reduce_basis)
    s1: list[Word] = [IDENTITY] + [(s,) for s in a_syms] + [(s,) for s in b_syms]

    if lv == "1+AB":
        out = set(s1)
        for sa in a_syms:
            for sb in b_syms:
                r = reduce_word((sa, sb))
                if r is not None:
                    out.add(r)
        return sorted(out, key=_word_sort_key)

    current = set(s1)
    for _ in range(lv - 1):
        extra = set()
        for w in current:
            for u in s1[1:]:
                r = multiply(w, u)
                if r is not None:
                    extra.add(r)
        current |= extra
    return sorted(current, key=_word_sort_key)
