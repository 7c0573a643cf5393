"""Exact double cosets on finite multiplication-table groups.

Groups live as Cayley tables over named elements, capped at 64 elements so
every axiom is checked by brute force at construction. On top of the tables:
plain (C,D)-double cosets, the symmetrized variant that also folds h into
h^-1 (computed two independent ways and cross-asserted), the wreath-product
action behind that symmetrization, and the closed-form classification of the
piecewise-linear one-parameter family w_a.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError
from .realnum import real_eq, to_real

#: Brute-force associativity checking is O(n^3); keep inputs desk-scale.
MAX_GROUP_ORDER = 64


@dataclass(frozen=True)
class FiniteGroup:
    """A group given by element names and a Cayley table of indices.

    table[i][j] is the index of elements[i] * elements[j]. Construction
    verifies the Latin-square property, associativity, and a two-sided
    identity; inverses then exist automatically but are located anyway so
    inv() is a table lookup.
    """

    elements: tuple[str, ...]
    table: tuple[tuple[int, ...], ...]
    name: str = "group"

    def __post_init__(self):
        n = len(self.elements)
        if n == 0:
            raise DomainError("empty group")
        if n > MAX_GROUP_ORDER:
            raise DomainError(f"group order {n} exceeds cap {MAX_GROUP_ORDER}")
        if len(set(self.elements)) != n:
            raise DomainError("duplicate element names")
        if len(self.table) != n or any(len(row) != n for row in self.table):
            raise DomainError("table shape does not match element count")
        for row in self.table:
            if any(not (0 <= v < n) for v in row):
                raise DomainError("table entry out of range")
        for i in range(n):
            if len(set(self.table[i])) != n or len({self.table[j][i] for j in range(n)}) != n:
                raise DomainError("table is not a Latin square")
        ident = None
        for e in range(n):
            if all(self.table[e][j] == j and self.table[j][e] == j for j in range(n)):
                ident = e
                break
        if ident is None:
            raise DomainError("no identity element")
        object.__setattr__(self, "_identity", ident)
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    if self.table[self.table[i][j]][k] != self.table[i][self.table[j][k]]:
                        raise DomainError(
                            f"associativity fails at ({self.elements[i]}, "
                            f"{self.elements[j]}, {self.elements[k]})"
                        )
        inv = [None] * n
        for i in range(n):
            for j in range(n):
                if self.table[i][j] == ident and self.table[j][i] == ident:
                    inv[i] = j
                    break
        if any(v is None for v in inv):
            raise DomainError("an element has no inverse")
        object.__setattr__(self, "_inv", tuple(inv))

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def identity(self) -> int:
        return self._identity

    def mul(self, i: int, j: int) -> int:
        return self.table[i][j]

    def inv(self, i: int) -> int:
        return self._inv[i]

    def index_of(self, name: str) -> int:
        try:
            return self.elements.index(name)
        except ValueError:
            raise DomainError(f"no element named {name!r}") from None

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_table(cls, elements, table, name="group") -> "FiniteGroup":
        return cls(tuple(elements), tuple(tuple(row) for row in table), name)

    @classmethod
    def cyclic(cls, n: int) -> "FiniteGroup":
        names = tuple(str(i) for i in range(n))
        table = tuple(tuple((i + j) % n for j in range(n)) for i in range(n))
        return cls(names, table, f"Z{n}")

    @classmethod
    def dihedral(cls, n: int) -> "FiniteGroup":
        """Symmetries of the regular n-gon, elements s^j r^i.

        Convention: r*s = s*r^(n-1), so (j,i)*(l,m) = (j+l, m + (-1)^l i).
        Names: e, r, r2, ... and s, sr, sr2, ...
        """
        if n < 1:
            raise DomainError("dihedral needs n >= 1")
        def nm(j, i):
            if j == 0:
                return "e" if i == 0 else ("r" if i == 1 else f"r{i}")
            return "s" if i == 0 else ("sr" if i == 1 else f"sr{i}")
        elems = [(j, i) for j in (0, 1) for i in range(n)]
        names = tuple(nm(j, i) for j, i in elems)
        idx = {v: k for k, v in enumerate(elems)}
        table = tuple(
            tuple(idx[((j + l) % 2, (m + (-1) ** l * i) % n)] for (l, m) in elems)
            for (j, i) in elems
        )
        return cls(names, table, f"D{n}")

    @classmethod
    def quaternion8(cls) -> "FiniteGroup":
        names = ("1", "-1", "i", "-i", "j", "-j", "k", "-k")
        # encode q = (sign, axis) with axis in {1,i,j,k}
        def mul(a, b):
            sa, xa = a; sb, xb = b
            rules = {
                ("1", "1"): (1, "1"), ("1", "i"): (1, "i"), ("1", "j"): (1, "j"), ("1", "k"): (1, "k"),
                ("i", "1"): (1, "i"), ("j", "1"): (1, "j"), ("k", "1"): (1, "k"),
                ("i", "i"): (-1, "1"), ("j", "j"): (-1, "1"), ("k", "k"): (-1, "1"),
                ("i", "j"): (1, "k"), ("j", "k"): (1, "i"), ("k", "i"): (1, "j"),
                ("j", "i"): (-1, "k"), ("k", "j"): (-1, "i"), ("i", "k"): (-1, "j"),
            }
            s, x = rules[(xa, xb)]
            return (sa * sb * s, x)
        def decode(name):
            return (-1 if name.startswith("-") else 1, name.lstrip("-"))
        def encode(q):
            s, x = q
            return x if s == 1 else f"-{x}"
        table = tuple(
            tuple(names.index(encode(mul(decode(a), decode(b)))) for b in names)
            for a in names
        )
        return cls(names, table, "Q8")

    @classmethod
    def alternating4(cls) -> "FiniteGroup":
        perms = [p for p in itertools.permutations(range(4)) if _parity(p) == 0]
        names = tuple("".join(str(v) for v in p) for p in perms)
        idx = {p: k for k, p in enumerate(perms)}
        table = tuple(
            tuple(idx[tuple(p[q[t]] for t in range(4))] for q in perms)
            for p in perms
        )
        return cls(names, table, "A4")

    @classmethod
    def dicyclic3(cls) -> "FiniteGroup":
        """Order-12 dicyclic group: a^6 = 1, b^2 = a^3, b a b^-1 = a^-1."""
        elems = [(i, j) for j in (0, 1) for i in range(6)]
        def nm(i, j):
            base = "e" if i == 0 else ("a" if i == 1 else f"a{i}")
            return base if j == 0 else ("b" if i == 0 else f"{base}b")
        names = tuple(nm(i, j) for i, j in elems)
        idx = {v: k for k, v in enumerate(elems)}
        table = tuple(
            tuple(idx[(((i + (-1) ** j * i2 + 3 * (j & j2)) % 6), (j + j2) % 2)]
                  for (i2, j2) in elems)
            for (i, j) in elems
        )
        return cls(names, table, "Dic3")

    @classmethod
    def direct_product(cls, g: "FiniteGroup", h: "FiniteGroup") -> "FiniteGroup":
        pairs = [(i, j) for i in range(len(g)) for j in range(len(h))]
        names = tuple(f"({g.elements[i]},{h.elements[j]})" for i, j in pairs)
        idx = {p: k for k, p in enumerate(pairs)}
        table = tuple(
            tuple(idx[(g.mul(i1, i2), h.mul(j1, j2))] for (i2, j2) in pairs)
            for (i1, j1) in pairs
        )
        return cls(names, table, f"{g.name}x{h.name}")

    @classmethod
    def from_json(cls, d: dict) -> tuple["FiniteGroup", dict[str, "Subgroup"]]:
        """Parse {"elements": [...], "table": [[...]], "subgroups": {...}}.

        Table entries may be indices or element names. Returns the group and
        its named subgroups.
        """
        try:
            elements = tuple(str(e) for e in d["elements"])
            raw = d["table"]
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed group JSON: {exc}") from exc
        def entry(v):
            if isinstance(v, bool):
                raise DomainError("table entries must be indices or names")
            if isinstance(v, int):
                return v
            return elements.index(str(v))
        try:
            table = tuple(tuple(entry(v) for v in row) for row in raw)
        except ValueError as exc:
            raise DomainError(f"table references unknown element: {exc}") from exc
        group = cls(elements, table, str(d.get("name", "group")))
        subs = {}
        for name, members in d.get("subgroups", {}).items():
            subs[name] = Subgroup.from_names(group, members)
        return group, subs


def _parity(p) -> int:
    inv = sum(1 for a, b in itertools.combinations(range(len(p)), 2) if p[a] > p[b])
    return inv % 2


@dataclass(frozen=True)
class Subgroup:
    """A sorted index set, verified closed under product and inverse."""

    group: FiniteGroup
    members: tuple[int, ...]

    def __post_init__(self):
        mem = tuple(sorted(set(self.members)))
        object.__setattr__(self, "members", mem)
        g = self.group
        if not mem:
            raise DomainError("empty subgroup")
        if any(not (0 <= i < len(g)) for i in mem):
            raise DomainError("subgroup member out of range")
        ms = set(mem)
        if g.identity not in ms:
            raise DomainError("subgroup misses the identity")
        for i in mem:
            if g.inv(i) not in ms:
                raise DomainError(f"subgroup not closed under inverse at {g.elements[i]}")
            for j in mem:
                if g.mul(i, j) not in ms:
                    raise DomainError(
                        f"subgroup not closed under product at "
                        f"({g.elements[i]}, {g.elements[j]})"
                    )

    @classmethod
    def from_names(cls, group: FiniteGroup, names) -> "Subgroup":
        return cls(group, tuple(group.index_of(str(n)) for n in names))

    @classmethod
    def generated(cls, group: FiniteGroup, gens) -> "Subgroup":
        seen = {group.identity}
        frontier = [group.index_of(str(n)) if isinstance(n, str) else int(n) for n in gens]
        seen.update(frontier)
        while frontier:
            nxt = []
            for a in seen.copy():
                for b in frontier:
                    for c in (group.mul(a, b), group.mul(b, a), group.inv(b)):
                        if c not in seen:
                            seen.add(c)
                            nxt.append(c)
            frontier = nxt
        return cls(group, tuple(seen))

    def is_normal(self) -> bool:
        g = self.group
        ms = set(self.members)
        return all(g.mul(g.mul(a, m), g.inv(a)) in ms
                   for a in range(len(g)) for m in self.members)

    def names(self) -> tuple[str, ...]:
        return tuple(self.group.elements[i] for i in self.members)


@dataclass(frozen=True)
class CosetPartition:
    """Disjoint blocks of element indices covering the whole group."""

    group: FiniteGroup
    blocks: tuple[tuple[int, ...], ...]
    kind: str  # "double" | "pm_double" | "left" | "right"

    def __post_init__(self):
        if self.kind not in ("double", "pm_double", "left", "right"):
            raise DomainError(f"unknown partition kind {self.kind!r}")
        blocks = tuple(tuple(sorted(set(b))) for b in self.blocks)
        blocks = tuple(sorted(blocks, key=lambda b: b[0]))
        object.__setattr__(self, "blocks", blocks)
        flat = [i for b in blocks for i in b]
        if sorted(flat) != list(range(len(self.group))) or len(flat) != len(set(flat)):
            raise DomainError("blocks do not partition the group")

    def block_of(self, i: int) -> tuple[int, ...]:
        for b in self.blocks:
            if i in b:
                return b
        raise DomainError(f"index {i} not in any block")

    def named_blocks(self) -> list[list[str]]:
        return [[self.group.elements[i] for i in b] for b in self.blocks]

    def to_json(self) -> dict:
        return {"kind": self.kind, "blocks": self.named_blocks()}


@dataclass(frozen=True)
class WreathElement:
    """Element (a, b, delta) of the wreath square of a subgroup's table."""

    a: int
    b: int
    delta: int

    def __post_init__(self):
        if self.delta not in (1, -1):
            raise DomainError(f"delta must be +-1, got {self.delta}")


def wreath_mul(x: WreathElement, y: WreathElement, group: FiniteGroup) -> WreathElement:
    """(a,b,delta)(c,d,eps) = (ac, bd, delta*eps) when delta = +1,
    (ad, bc, delta*eps) when delta = -1."""
    if x.delta == 1:
        return WreathElement(group.mul(x.a, y.a), group.mul(x.b, y.b), x.delta * y.delta)
    return WreathElement(group.mul(x.a, y.b), group.mul(x.b, y.a), x.delta * y.delta)


def wreath_act(x: WreathElement, h: int, group: FiniteGroup) -> int:
    """The twisted two-sided action (a,b,delta).h = a h^delta b^-1."""
    core = h if x.delta == 1 else group.inv(h)
    return group.mul(group.mul(x.a, core), group.inv(x.b))


def _check_subgroup(group: FiniteGroup, s: Subgroup, label: str) -> None:
    if s.group is not group and s.group.table != group.table:
        raise DomainError(f"{label} is a subgroup of a different group")


def double_cosets(H: FiniteGroup, C: Subgroup, D: Subgroup) -> CosetPartition:
    """Partition of H into blocks {c h d : c in C, d in D}."""
    _check_subgroup(H, C, "C")
    _check_subgroup(H, D, "D")
    unassigned = set(range(len(H)))
    blocks = []
    while unassigned:
        h = min(unassigned)
        block = {H.mul(H.mul(c, h), d) for c in C.members for d in D.members}
        blocks.append(tuple(sorted(block)))
        unassigned -= block
    return CosetPartition(H, tuple(blocks), "double")


def pm_double_cosets(H: FiniteGroup, D: Subgroup) -> CosetPartition:
    """Blocks DhD united with Dh^-1D.

    Computed twice: once by the union formula and once as orbits of the
    wreath-square action, then cross-asserted. The two computations agreeing
    is part of the contract, not just an implementation detail.
    """
    _check_subgroup(H, D, "D")
    plain = double_cosets(H, D, D)
    union_blocks = set()
    for h in range(len(H)):
        merged = set(plain.block_of(h)) | set(plain.block_of(H.inv(h)))
        union_blocks.add(tuple(sorted(merged)))
    union_part = CosetPartition(H, tuple(union_blocks), "pm_double")

    wreath_elems = [WreathElement(a, b, d)
                    for a in D.members for b in D.members for d in (1, -1)]
    unassigned = set(range(len(H)))
    orbit_blocks = []
    while unassigned:
        h = min(unassigned)
        orbit = {wreath_act(w, h, H) for w in wreath_elems}
        orbit_blocks.append(tuple(sorted(orbit)))
        unassigned -= orbit
    orbit_part = CosetPartition(H, tuple(orbit_blocks), "pm_double")

    if union_part.blocks != orbit_part.blocks:
        raise AssertionError(
            "union formula and wreath orbits disagree; one computation is wrong"
        )
    return union_part


def coset_membership_equiv(H: FiniteGroup, C: Subgroup, D: Subgroup,
                           g: int, h: int) -> bool:
    """Whether g lies in the double coset of h, cross-checked against the
    finite intersection test (C meets g D h^-1)."""
    part = double_cosets(H, C, D)
    member = g in part.block_of(h)
    hinv = H.inv(h)
    witness = any(H.mul(H.mul(g, d), hinv) in set(C.members) for d in D.members)
    if member != witness:
        raise AssertionError("membership and intersection tests disagree")
    return member


# ---------------------------------------------------------------------------
# the w_a family

CELLS = ("fix+", "fix-", "ex+", "ex-")


@dataclass(frozen=True)
class PairClassification:
    """Emptiness pattern of the four symmetry cells between two structures.

    Cells are keyed fix+/fix-/ex+/ex- (origin action crossed with
    orientation). witness_kind names the construction that populates each
    nonempty cell.
    """

    a: object
    b: object
    k: int
    nonempty: dict[str, bool]
    witness_kind: dict[str, str]

    def any_nonempty(self) -> bool:
        return any(self.nonempty.values())

    def to_json(self) -> dict:
        return {"a": float(self.a), "b": float(self.b), "k": self.k,
                "cells": {c: self.nonempty[c] for c in CELLS},
                "witness_kind": {c: self.witness_kind[c]
                                 for c in CELLS if self.nonempty[c]}}


class IntersectionType:
    EMPTY = "Empty"
    J_PLUS = "JPlus"
    J_MINUS = "JMinus"
    FULL_D = "FullD"


def _positive_real(x, label: str):
    v = to_real(x)
    if v <= 0:
        raise DomainError(f"{label} must be positive, got {x!r}")
    return v


def classify_wa_pair(a, b, k: int = 1) -> PairClassification:
    """Which of the four cells admit a structure map between W_a and W_b.

    Closed form: a=b=1 gives all four; a=b != 1 exactly fix+ and ex-;
    ab=1 with a != 1 exactly fix- and ex+; anything else is empty.
    Decisions are exact on rational input, 1e-9 tolerance otherwise.
    """
    av = _positive_real(a, "a")
    bv = _positive_real(b, "b")
    if not isinstance(k, int) or k < 1:
        raise DomainError(f"k must be a positive integer, got {k!r}")
    one = Fraction(1)
    a_is_1 = real_eq(av, one)
    b_is_1 = real_eq(bv, one)
    same = real_eq(av, bv)
    recip = real_eq(av * bv, one)
    nonempty = {c: False for c in CELLS}
    kind = {c: "" for c in CELLS}
    if same:
        nonempty["fix+"] = True
        kind["fix+"] = "identity"
        nonempty["ex-"] = True
        kind["ex-"] = "origin swap after the scaling reflection"
    if recip:
        nonempty["fix-"] = True
        kind["fix-"] = "reflection"
        nonempty["ex+"] = True
        kind["ex+"] = "origin swap after the scaling map"
    if a_is_1 and b_is_1:
        # same and recip both hold; all four cells are already marked
        assert all(nonempty.values())
    return PairClassification(av, bv, k, nonempty, kind)


def intersection_type(a, b, k: int = 1) -> str:
    """Type of the overlap between the smooth germs and their w_b-w_a twist.

    Both parameters 1: the whole diffeomorphism group. Exactly one equal 1:
    empty. Otherwise JPlus when ab = 1, JMinus when a = b, else empty.
    """
    av = _positive_real(a, "a")
    bv = _positive_real(b, "b")
    if not isinstance(k, int) or k < 1:
        raise DomainError(f"k must be a positive integer, got {k!r}")
    one = Fraction(1)
    a_is_1 = real_eq(av, one)
    b_is_1 = real_eq(bv, one)
    if a_is_1 and b_is_1:
        return IntersectionType.FULL_D
    if a_is_1 or b_is_1:
        return IntersectionType.EMPTY
    if real_eq(av * bv, one):
        return IntersectionType.J_PLUS
    if real_eq(av, bv):
        return IntersectionType.J_MINUS
    return IntersectionType.EMPTY
