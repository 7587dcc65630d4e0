"""Cantor-normal-form ordinals below w^w and the inductive rank of set systems.

An ordinal is stored as its CNF term list [(exponent, coefficient), ...] in
strictly decreasing exponent order, so that plain tuple comparison of term
lists realizes the ordinal order.  A separate marker represents the undefined
rank (infinity), which compares above every CNF value.

The rank of a finite set system M (finite nonempty subsets of a finite
universe) is computed by the derivation recursion: rank 0 for the empty
system, otherwise one more than the largest rank of any single-element
derivative.  For finite systems the result is always a natural number.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import total_ordering
from typing import Iterable

from .geometry import DomainError


class OrdinalParseError(ValueError):
    """Malformed ordinal text; carries the offending position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


@total_ordering
@dataclass(frozen=True)
class OrdinalCNF:
    """An ordinal below w^w in Cantor normal form, or the infinity marker."""

    terms: tuple = ()
    infinite: bool = False

    def __post_init__(self):
        if self.infinite and self.terms:
            raise DomainError("infinity carries no terms")
        terms = tuple((int(e), int(c)) for e, c in self.terms)
        if any(c <= 0 for _, c in terms):
            raise DomainError("coefficients must be positive")
        if any(e < 0 for e, _ in terms):
            raise DomainError("exponents must be naturals")
        exps = [e for e, _ in terms]
        if sorted(exps, reverse=True) != exps or len(set(exps)) != len(exps):
            raise DomainError("exponents must strictly decrease")
        object.__setattr__(self, "terms", terms)

    # --- constructors -----------------------------------------------------
    @classmethod
    def zero(cls) -> "OrdinalCNF":
        return cls(())

    @classmethod
    def natural(cls, k: int) -> "OrdinalCNF":
        if k < 0:
            raise DomainError("naturals only")
        return cls(((0, k),) if k else ())

    @classmethod
    def omega(cls, coefficient: int = 1, exponent: int = 1) -> "OrdinalCNF":
        return cls(((exponent, coefficient),))

    @classmethod
    def infinity(cls) -> "OrdinalCNF":
        return cls((), infinite=True)

    @classmethod
    def from_term_map(cls, mapping: dict) -> "OrdinalCNF":
        terms = tuple(sorted(((e, c) for e, c in mapping.items() if c),
                             reverse=True))
        return cls(terms)

    # --- order ------------------------------------------------------------
    def _key(self):
        return (1, ()) if self.infinite else (0, self.terms)

    def __lt__(self, other: "OrdinalCNF") -> bool:
        return self._key() < other._key()

    def __eq__(self, other) -> bool:
        return isinstance(other, OrdinalCNF) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    # --- arithmetic (only what the artifact needs) -------------------------
    def successor(self) -> "OrdinalCNF":
        if self.infinite:
            return self
        if self.terms and self.terms[-1][0] == 0:
            e, c = self.terms[-1]
            return OrdinalCNF(self.terms[:-1] + ((0, c + 1),))
        return OrdinalCNF(self.terms + ((0, 1),))

    @property
    def is_natural(self) -> bool:
        return not self.infinite and all(e == 0 for e, _ in self.terms)

    def as_int(self) -> int:
        if not self.is_natural:
            raise DomainError(f"{self} is not a natural number")
        return self.terms[0][1] if self.terms else 0

    # --- text -------------------------------------------------------------
    def __str__(self) -> str:
        if self.infinite:
            return "inf"
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.terms:
            if e == 0:
                parts.append(str(c))
            else:
                head = "" if c == 1 else str(c)
                tail = "w" if e == 1 else f"w^{e}"
                parts.append(head + tail)
        return "+".join(parts)

    def __repr__(self) -> str:
        return f"OrdinalCNF({self})"


def ordinal_compare(a: OrdinalCNF, b: OrdinalCNF) -> int:
    """-1, 0 or 1 as a <, = or > b in the CNF order (infinity maximal)."""
    if a == b:
        return 0
    return -1 if a < b else 1


_TERM = re.compile(r"(?:(\d+)\s*\*?\s*)?(w)(?:\s*\^\s*(\d+))?|(\d+)")


def parse_ordinal(text: str) -> OrdinalCNF:
    """Parse 'k | [a*]w[^e] | t1+t2+...' (also 'inf'); canonical print round-trips."""
    s = text.strip()
    if s == "inf":
        return OrdinalCNF.infinity()
    if not s:
        raise OrdinalParseError("empty ordinal text", 0)
    pos = 0
    terms = []
    while True:
        while pos < len(s) and s[pos].isspace():
            pos += 1
        m = _TERM.match(s, pos)
        if not m:
            raise OrdinalParseError("expected a term", pos)
        if m.group(4) is not None:
            exp, coeff = 0, int(m.group(4))
        else:
            coeff = int(m.group(1)) if m.group(1) else 1
            exp = int(m.group(3)) if m.group(3) else 1
        if coeff == 0 and not (exp == 0 and not terms and m.end() == len(s)):
            raise OrdinalParseError("zero coefficient", pos)
        terms.append((exp, coeff))
        pos = m.end()
        while pos < len(s) and s[pos].isspace():
            pos += 1
        if pos == len(s):
            break
        if s[pos] != "+":
            raise OrdinalParseError(f"unexpected character {s[pos]!r}", pos)
        pos += 1
    if len(terms) == 1 and terms[0] == (0, 0):
        return OrdinalCNF.zero()
    exps = [e for e, _ in terms]
    if sorted(exps, reverse=True) != exps or len(set(exps)) != len(exps):
        raise OrdinalParseError("exponents must strictly decrease", 0)
    return OrdinalCNF(tuple(terms))


# --- set systems ----------------------------------------------------------

@dataclass(frozen=True)
class SetSystem:
    """A finite collection of nonempty subsets of a finite universe of positive ints."""

    universe: frozenset
    members: frozenset

    def __post_init__(self):
        uni = frozenset(int(x) for x in self.universe)
        if any(x <= 0 for x in uni):
            raise DomainError("universe elements must be positive integers")
        mem = frozenset(frozenset(int(x) for x in m) for m in self.members)
        for m in mem:
            if not m:
                raise DomainError("members must be nonempty")
            if not m <= uni:
                raise DomainError(f"member {sorted(m)} not within universe")
        object.__setattr__(self, "universe", uni)
        object.__setattr__(self, "members", mem)

    @classmethod
    def from_members(cls, members: Iterable, universe: Iterable | None = None) -> "SetSystem":
        mem = [frozenset(m) for m in members]
        uni = frozenset(universe) if universe is not None else frozenset().union(*mem) if mem else frozenset()
        return cls(uni, frozenset(mem))

    @classmethod
    def subsets_up_to(cls, n: int, k: int) -> "SetSystem":
        """All nonempty subsets of {1..n} of size <= k."""
        from itertools import combinations
        uni = range(1, n + 1)
        mem = [frozenset(c) for size in range(1, k + 1)
               for c in combinations(uni, size)]
        return cls.from_members(mem, uni)

    def to_json(self) -> dict:
        return {"universe": sorted(self.universe),
                "members": sorted((sorted(m) for m in self.members),
                                  key=lambda m: (len(m), m))}

    @classmethod
    def from_json(cls, obj: dict) -> "SetSystem":
        return cls(frozenset(obj["universe"]),
                   frozenset(frozenset(m) for m in obj["members"]))


def derive(system: SetSystem, sigma: Iterable) -> SetSystem:
    """The derivative system: members whose union with sigma is a member disjoint from it."""
    sig = frozenset(int(x) for x in sigma)
    if not sig <= system.universe:
        raise DomainError(f"sigma {sorted(sig)} not within universe")
    if not sig:
        return system
    derived = frozenset(m - sig for m in system.members
                        if sig < m)
    return SetSystem(system.universe, derived)


def _rank(members: frozenset, memo: dict) -> int:
    if not members:
        return 0
    hit = memo.get(members)
    if hit is not None:
        return hit
    best = 0
    elements = frozenset().union(*members)
    for a in elements:
        derived = frozenset(m - {a} for m in members if a in m and len(m) > 1)
        best = max(best, _rank(derived, memo))
    result = best + 1
    memo[members] = result
    return result


def rank(system: SetSystem) -> int:
    """Inductive rank of a finite system; memoized per invocation."""
    return _rank(system.members, {})


def naive_rank(system: SetSystem) -> int:
    """Unmemoized reference recursion (exponential; test oracle only)."""
    def go(members):
        if not members:
            return 0
        elements = frozenset().union(*members)
        return 1 + max(go(frozenset(m - {a} for m in members
                                    if a in m and len(m) > 1))
                       for a in elements)
    return go(system.members)


def ord_of(system: SetSystem) -> OrdinalCNF:
    """Rank as an ordinal; always a natural number for finite systems."""
    return OrdinalCNF.natural(rank(system))
