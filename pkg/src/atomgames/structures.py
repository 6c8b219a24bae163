"""Finite cylindric and relation-algebra atom structures.

Atoms are dense integer ids ``0..len(atoms)-1`` with a side table of names.
Subsets of atoms are Python ints used as bitsets.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np


class StructuralError(ValueError):
    """Input is malformed (as opposed to well-formed but violating an invariant)."""


@dataclass
class ValidationReport:
    violations: list[tuple[str, tuple]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, rule: str, offending: tuple = ()) -> None:
        self.violations.append((rule, tuple(offending)))

    def extend(self, other: "ValidationReport") -> None:
        self.violations.extend(other.violations)

    def rules(self) -> set[str]:
        return {rule for rule, _ in self.violations}

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [{"rule": r, "witness": _jsonable(t)} for r, t in self.violations],
        }

    def __bool__(self) -> bool:
        return self.ok


def _jsonable(x):
    if isinstance(x, (tuple, list)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (set, frozenset)):
        return sorted(_jsonable(v) for v in x)
    if isinstance(x, np.integer):
        return int(x)
    return x


# -- bitset helpers ---------------------------------------------------------

def bits(mask: int) -> Iterator[int]:
    """Yield the indices of set bits, lowest first."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_of(ids: Iterable[int]) -> int:
    m = 0
    for i in ids:
        m |= 1 << i
    return m


# -- cylindric atom structures ----------------------------------------------

class CaAtomStructure:
    """Atom structure of a finite ``CA_n``.

    ``diag[(i, j)]`` is the bitset of atoms below ``d_ij``.  ``cyl[i][a]`` is the
    bitset of atoms ``b`` with ``a <= c_i b``; when ``cyl[i]`` is an equivalence
    relation each row is the class of ``a``.  Instances are treated as immutable.
    """

    def __init__(self, n: int, names: Sequence[str], diag: dict, cyl: Sequence[Sequence[int]],
                 meta: dict | None = None):
        if n < 1:
            raise StructuralError(f"dimension must be positive, got {n}")
        self.n = n
        self.names: tuple[str, ...] = tuple(names)
        if not self.names:
            raise StructuralError("empty atom set")
        if len(set(self.names)) != len(self.names):
            raise StructuralError("duplicate atom names")
        self.index = {name: k for k, name in enumerate(self.names)}
        self.diag: dict[tuple[int, int], int] = {}
        for i in range(n):
            for j in range(n):
                self.diag[(i, j)] = int(diag.get((i, j), diag.get((j, i), 0)))
        if len(cyl) != n:
            raise StructuralError(f"need {n} cylindrifier relations, got {len(cyl)}")
        self.cyl: tuple[tuple[int, ...], ...] = tuple(tuple(int(r) for r in rows) for rows in cyl)
        for rows in self.cyl:
            if len(rows) != len(self.names):
                raise StructuralError("cylindrifier relation has wrong number of rows")
        self.full = (1 << len(self.names)) - 1
        self.meta = dict(meta or {})

    @property
    def size(self) -> int:
        return len(self.names)

    @property
    def atoms(self) -> range:
        return range(len(self.names))

    def __repr__(self) -> str:
        return f"CaAtomStructure(n={self.n}, atoms={self.size})"

    @classmethod
    def from_partitions(cls, n: int, names: Sequence[str], diag: dict,
                        classes: Sequence[Iterable[Iterable[int]]], meta: dict | None = None):
        """Build from ``classes[i]`` = list of equivalence classes (atom-id lists)."""
        size = len(names)
        cyl = []
        for i in range(n):
            rows = [0] * size
            for cls_ in classes[i]:
                m = mask_of(cls_)
                for a in bits(m):
                    rows[a] = m
            cyl.append(rows)
        return cls(n, names, diag, cyl, meta)

    def in_diag(self, a: int, i: int, j: int) -> bool:
        return bool(self.diag[(i, j)] >> a & 1)

    def cyl_related(self, i: int, a: int, b: int) -> bool:
        return bool(self.cyl[i][a] >> b & 1)

    def cyl_classes(self, i: int) -> list[int]:
        seen: dict[int, None] = {}
        for row in self.cyl[i]:
            seen.setdefault(row, None)
        return list(seen)

    def kernel_type(self, a: int) -> tuple[int, ...]:
        """For each coordinate, the least coordinate it is forced equal to by ``diag``."""
        out = []
        for j in range(self.n):
            out.append(next(i for i in range(j + 1) if self.in_diag(a, i, j)))
        return tuple(out)

    # -- serialization --

    def to_json(self) -> dict:
        return {
            "kind": "ca",
            "n": self.n,
            "atoms": list(self.names),
            "diag": {f"{i},{j}": [self.names[a] for a in bits(self.diag[(i, j)])]
                     for i in range(self.n) for j in range(i + 1, self.n)},
            "cyl": {str(i): [[self.names[b] for b in bits(self.cyl[i][a])] for a in self.atoms]
                    for i in range(self.n)},
            **({"meta": self.meta} if self.meta else {}),
        }


def _ca_from_json(data: dict) -> CaAtomStructure:
    n = int(data["n"])
    names = list(data["atoms"])
    index = {nm: k for k, nm in enumerate(names)}

    def ids(nms):
        try:
            return mask_of(index[x] for x in nms)
        except KeyError as exc:
            raise StructuralError(f"unknown atom {exc.args[0]!r}") from None

    diag = {(i, i): (1 << len(names)) - 1 for i in range(n)}
    for key, nms in data.get("diag", {}).items():
        i, j = (int(t) for t in key.split(","))
        diag[(i, j)] = ids(nms)
        diag[(j, i)] = diag[(i, j)]
    cyl_data = data["cyl"]
    cyl = []
    for i in range(n):
        rows = cyl_data[str(i)]
        if rows and isinstance(rows[0], list) and len(rows) == len(names):
            cyl.append([ids(r) for r in rows])
        else:
            raise StructuralError(f"cyl[{i}] must list one related-atom list per atom")
    return CaAtomStructure(n, names, diag, cyl, data.get("meta"))


def validate_ca(S: CaAtomStructure) -> ValidationReport:
    """Check every ``CaAtomStructure`` invariant, collecting all violations."""
    if S.size == 0:
        raise StructuralError("empty atom set")
    rep = ValidationReport()
    for i in range(S.n):
        if S.diag[(i, i)] != S.full:
            rep.add(f"diag({i},{i}) not all atoms",
                    tuple(S.names[a] for a in bits(S.full & ~S.diag[(i, i)])))
        for j in range(i + 1, S.n):
            if S.diag[(i, j)] != S.diag[(j, i)]:
                rep.add(f"diag({i},{j}) != diag({j},{i})", (i, j))
    for i in range(S.n):
        rep.extend(_check_equivalence(S, i))
    return rep


def _check_equivalence(S: CaAtomStructure, i: int) -> ValidationReport:
    rows = S.cyl[i]
    rep = ValidationReport()
    # Fast path: an equivalence relation is exactly a relation whose rows are
    # reflexive and whose atoms sharing a row value are precisely that row's bits.
    groups: dict[int, int] = {}
    for a, row in enumerate(rows):
        groups[row] = groups.get(row, 0) | (1 << a)
    reflexive = all(rows[a] >> a & 1 for a in S.atoms)
    if reflexive and all(members == row for row, members in groups.items()):
        return rep
    name = S.names
    for a in S.atoms:
        if not rows[a] >> a & 1:
            rep.add(f"cyl[{i}] not reflexive", (name[a], name[a]))
    for a in S.atoms:
        for b in bits(rows[a]):
            if not rows[b] >> a & 1:
                rep.add(f"cyl[{i}] not symmetric", (name[a], name[b]))
    for a in S.atoms:
        for b in bits(rows[a]):
            missing = rows[b] & ~rows[a]
            for c in bits(missing):
                rep.add(f"cyl[{i}] not transitive", (name[a], name[b], name[c]))
    return rep


def one_atom_ca(n: int = 3) -> CaAtomStructure:
    """The smallest CA atom structure: a single atom below every diagonal."""
    diag = {(i, j): 1 for i in range(n) for j in range(n)}
    return CaAtomStructure(n, ["a"], diag, [[1]] * n, {"alias": "one-atom"})


def blocked_ca(n: int = 3) -> CaAtomStructure:
    """Two atoms ``e`` (all coordinates equal) and ``b`` (below no diagonal), all
    cylindrifier relations total.  ``b`` can never be realised by a network, so
    the move ``c_i b`` from the one-node network has no response."""
    diag = {(i, j): 0b01 for i in range(n) for j in range(n) if i != j}
    for i in range(n):
        diag[(i, i)] = 0b11
    return CaAtomStructure(n, ["e", "b"], diag, [[0b11, 0b11]] * n, {"alias": "blocked"})


CM_OPS = ("cyl", "diag", "complement", "join", "meet")


def cm_apply(S: CaAtomStructure, op: str, *args) -> int:
    """Apply a complex-algebra operation to bitsets of atoms.

    ``cm_apply(S, "cyl", i, X)``, ``cm_apply(S, "diag", i, j)``,
    ``cm_apply(S, "complement", X)``, ``cm_apply(S, "join", X, Y, ...)``.
    """
    def check_index(*idx):
        for k in idx:
            if not 0 <= k < S.n:
                raise StructuralError(f"index {k} out of range for dimension {S.n}")

    def check_set(X):
        if X & ~S.full or X < 0:
            raise StructuralError("set contains unknown atoms")

    if op == "cyl":
        i, X = args
        check_index(i)
        check_set(X)
        rows = S.cyl[i]
        out = 0
        if _is_equivalence(S, i):
            remaining = X
            while remaining:
                b = (remaining & -remaining).bit_length() - 1
                out |= rows[b]
                remaining &= ~rows[b]
            return out
        for a in S.atoms:
            if rows[a] & X:
                out |= 1 << a
        return out
    if op == "diag":
        i, j = args
        check_index(i, j)
        return S.diag[(i, j)]
    if op == "complement":
        (X,) = args
        check_set(X)
        return S.full & ~X
    if op in ("join", "meet"):
        for X in args:
            check_set(X)
        out = 0 if op == "join" else S.full
        for X in args:
            out = out | X if op == "join" else out & X
        return out
    raise StructuralError(f"unknown operation {op!r}; expected one of {CM_OPS}")


def _is_equivalence(S: CaAtomStructure, i: int) -> bool:
    cache = S.__dict__.setdefault("_equiv_cache", {})
    if i not in cache:
        cache[i] = _check_equivalence(S, i).ok
    return cache[i]


# -- relation-algebra atom structures ---------------------------------------

class RaAtomStructure:
    """Atom structure of a finite relation algebra.

    ``table[a, b, c]`` is True iff the triple ``(a, b, c)`` is consistent,
    read as ``c <= a ; b``.
    """

    def __init__(self, names: Sequence[str], identity: Iterable[int], converse: Sequence[int],
                 table: np.ndarray, meta: dict | None = None):
        self.names = tuple(names)
        if not self.names:
            raise StructuralError("empty atom set")
        if len(set(self.names)) != len(self.names):
            raise StructuralError("duplicate atom names")
        self.index = {nm: k for k, nm in enumerate(self.names)}
        k = len(self.names)
        self.identity = frozenset(int(e) for e in identity)
        if not self.identity:
            raise StructuralError("identity must be nonempty")
        self.converse = tuple(int(c) for c in converse)
        if len(self.converse) != k or any(not 0 <= c < k for c in self.converse):
            raise StructuralError("converse must map atoms to atoms")
        if any(self.converse[self.converse[a]] != a for a in range(k)):
            raise StructuralError("converse is not an involution")
        table = np.asarray(table, dtype=bool)
        if table.shape != (k, k, k):
            raise StructuralError(f"triple table must have shape {(k, k, k)}")
        self.table = table
        self.table.setflags(write=False)
        self.meta = dict(meta or {})

    @property
    def size(self) -> int:
        return len(self.names)

    @property
    def atoms(self) -> range:
        return range(len(self.names))

    @property
    def non_identity(self) -> list[int]:
        return [a for a in self.atoms if a not in self.identity]

    def __repr__(self) -> str:
        return f"RaAtomStructure(atoms={self.size}, consistent={int(self.table.sum())})"

    @classmethod
    def from_triples(cls, names, identity, converse, consistent: Iterable[tuple[int, int, int]],
                     meta: dict | None = None):
        k = len(names)
        table = np.zeros((k, k, k), dtype=bool)
        for a, b, c in consistent:
            table[a, b, c] = True
        return cls(names, identity, converse, table, meta)

    def consistent(self) -> list[tuple[int, int, int]]:
        return [tuple(int(v) for v in t) for t in np.argwhere(self.table)]

    def is_consistent(self, a: int, b: int, c: int) -> bool:
        return bool(self.table[a, b, c])

    def compose(self, a: int, b: int) -> frozenset[int]:
        return frozenset(int(c) for c in np.flatnonzero(self.table[a, b]))

    def compose_sets(self, X: Iterable[int], Y: Iterable[int]) -> frozenset[int]:
        X, Y = list(X), list(Y)
        if not X or not Y:
            return frozenset()
        row = self.table[np.ix_(X, Y)].any(axis=(0, 1))
        return frozenset(int(c) for c in np.flatnonzero(row))

    def to_json(self) -> dict:
        nm = self.names
        return {
            "kind": "ra",
            "atoms": list(nm),
            "identity": [nm[e] for e in sorted(self.identity)],
            "converse": {nm[a]: nm[self.converse[a]] for a in self.atoms},
            "consistent": [[nm[a], nm[b], nm[c]] for a, b, c in self.consistent()],
            **({"meta": self.meta} if self.meta else {}),
        }


def peircean_orbit(t: tuple[int, int, int], converse: Sequence[int]) -> set[tuple[int, int, int]]:
    """All Peircean transforms of a triple (at most six)."""
    orbit = {tuple(t)}
    frontier = [tuple(t)]
    while frontier:
        a, b, c = frontier.pop()
        for u in ((converse[a], c, b), (b, converse[c], converse[a])):
            if u not in orbit:
                orbit.add(u)
                frontier.append(u)
    return orbit


def peircean_images(table: np.ndarray, converse: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """The two generating Peircean transforms of a triple table, as tables.

    ``first[a,b,c] = table[conv a, c, b]`` and ``second[a,b,c] = table[b, conv c, conv a]``.
    """
    conv = np.asarray(converse)
    first = table[conv].transpose(0, 2, 1)
    second = table[:, conv][:, :, conv].transpose(2, 0, 1)
    return first, second


def peircean_closure(table: np.ndarray, converse: Sequence[int]) -> np.ndarray:
    closed = np.array(table, dtype=bool)
    while True:
        first, second = peircean_images(closed, converse)
        nxt = closed | first | second
        if np.array_equal(nxt, closed):
            return closed
        closed = nxt


def validate_ra(S: RaAtomStructure) -> ValidationReport:
    """Check Peircean closure and the identity law, reporting each failing triple."""
    rep = ValidationReport()
    nm = S.names
    conv = S.converse
    first, second = peircean_images(S.table, conv)
    for label, image in (("Peircean (a,b,c) vs (a~,c,b)", first),
                         ("Peircean (a,b,c) vs (b,c~,a~)", second)):
        for a, b, c in np.argwhere(S.table != image):
            rep.add(label, (nm[a], nm[b], nm[c]))
    non_id = S.non_identity
    for e in sorted(S.identity):
        sub = S.table[e][np.ix_(non_id, non_id)]
        expected = np.eye(len(non_id), dtype=bool)
        for x, y in np.argwhere(sub != expected):
            rep.add("identity law", (nm[e], nm[non_id[x]], nm[non_id[y]]))
    return rep


def _ra_from_json(data: dict) -> RaAtomStructure:
    names = list(data["atoms"])
    index = {nm: k for k, nm in enumerate(names)}

    def one(x):
        try:
            return index[x]
        except KeyError:
            raise StructuralError(f"unknown atom {x!r}") from None

    identity = [one(x) for x in data["identity"]]
    conv_map = data.get("converse", {})
    converse = [one(conv_map.get(x, x)) for x in names]
    triples = [tuple(one(x) for x in t) for t in data["consistent"]]
    if any(len(t) != 3 for t in triples):
        raise StructuralError("consistent triples must have length 3")
    return RaAtomStructure.from_triples(names, identity, converse, triples, data.get("meta"))


def maddux_ek23(k: int) -> RaAtomStructure:
    """``E_k(2,3)``: ``k`` symmetric non-identity atoms, only monochromatic
    triangles forbidden."""
    if k < 1:
        raise StructuralError("maddux_ek23 needs at least one non-identity atom")
    names = ["Id"] + [f"a{i}" for i in range(k)]
    size = k + 1
    table = np.zeros((size, size, size), dtype=bool)
    for x in range(size):
        table[0, x, x] = table[x, 0, x] = table[x, x, 0] = True
    for a, b, c in itertools.product(range(1, size), repeat=3):
        table[a, b, c] = len({a, b, c}) != 1
    return RaAtomStructure(names, [0], list(range(size)), table, {"alias": f"maddux:{k}"})


def one_atom_ra() -> RaAtomStructure:
    return RaAtomStructure(["Id"], [0], [0], np.ones((1, 1, 1), dtype=bool), {"alias": "ra-one-atom"})


# -- JSON I/O -----------------------------------------------------------------

def structure_from_json(data: dict | str):
    if isinstance(data, str):
        data = json.loads(data)
    kind = data.get("kind")
    if kind == "ca":
        return _ca_from_json(data)
    if kind == "ra":
        return _ra_from_json(data)
    raise StructuralError(f"unknown structure kind {kind!r}")


def structure_to_json(S) -> dict:
    return S.to_json()


def cs_atom_structure(n: int, base: int) -> CaAtomStructure:
    """Atom structure of the full cylindric set algebra on ``base**n`` tuples."""
    if base < 1:
        raise StructuralError("base must be nonempty")
    tuples = list(itertools.product(range(base), repeat=n))
    idx = {t: k for k, t in enumerate(tuples)}
    diag = {(i, j): mask_of(idx[t] for t in tuples if t[i] == t[j])
            for i in range(n) for j in range(n)}
    cyl = []
    for i in range(n):
        rows = []
        for t in tuples:
            rows.append(mask_of(idx[t[:i] + (v,) + t[i + 1:]] for v in range(base)))
        cyl.append(rows)
    names = ["".join(map(str, t)) for t in tuples]
    return CaAtomStructure(n, names, diag, cyl, {"alias": f"cs:{n}:{base}"})
