"""Rainbow atom structures built from coloured graphs.

Colours are small tuples:

* ``("g", i)`` for the greens ``g_i`` with ``1 <= i < n-1``;
* ``("g0", t)`` for the tinted greens ``g_0^t``;
* ``("w", i)`` for the whites ``w_i`` with ``i < n-1``;
* ``("r", k, l, s)`` for a red edge read from its first vertex to its second:
  the first vertex is sent to red index ``k``, the second to ``l`` and ``s`` is
  the superscript (always 0 before splitting).  Reading the same edge the other
  way round gives ``("r", l, k, s)``;
* ``("rho",)`` for the optional shade of red.

An atom of the ``CA_n`` is a surjection from the ``n`` coordinates onto the
vertices of a consistent coloured graph.  Vertices are numbered in order of
first appearance along the coordinates, so an atom is stored as the pair
(equality pattern, graph) and that pair is already canonical.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .games import IllegalMove
from .structures import (CaAtomStructure, StructuralError, ValidationReport, bits, cm_apply,
                         mask_of)

DEFAULT_ATOM_CAP = 200_000
VARIANTS = ("base", "split-red", "zn-order")
YELLOW_FAMILIES = ("top", "powerset")


# -- colours ----------------------------------------------------------------------

def reverse(c: tuple) -> tuple:
    if c[0] == "r":
        return ("r", c[2], c[1], c[3])
    return c


def is_green(c: tuple) -> bool:
    return c[0] in ("g", "g0")


def is_red(c: tuple) -> bool:
    return c[0] == "r"


def colour_name(c: tuple) -> str:
    kind = c[0]
    if kind == "g":
        return f"g{c[1]}"
    if kind == "g0":
        return f"g0^{c[1]}"
    if kind == "w":
        return f"w{c[1]}"
    if kind == "r":
        base = f"r{c[1]},{c[2]}"
        return base if c[3] == 0 else f"{base}^{c[3]}"
    if kind == "rho":
        return "rho"
    raise StructuralError(f"unknown colour {c!r}")


def parse_colour(text: str) -> tuple:
    try:
        if text == "rho":
            return ("rho",)
        if text.startswith("g0^"):
            return ("g0", int(text[3:]))
        if text.startswith("g"):
            return ("g", int(text[1:]))
        if text.startswith("w"):
            return ("w", int(text[1:]))
        if text.startswith("r"):
            body, _, sup = text[1:].partition("^")
            k, l = body.split(",")
            return ("r", int(k), int(l), int(sup) if sup else 0)
    except ValueError:
        pass
    raise StructuralError(f"unknown colour {text!r}")


# -- signatures -------------------------------------------------------------------

@dataclass(frozen=True)
class RainbowSignature:
    """Colours available to coloured graphs of dimension ``n``.

    ``reds`` is the size of the red index set (reds ``r_kl`` with ``k != l``),
    ``copies`` the number of superscripts per red, ``yellow`` the index family
    of the yellow labels and ``shade`` switches on the extra colour rho.
    """

    n: int
    tints: tuple = ()
    reds: int = 0
    copies: int = 1
    yellow: str = "top"
    shade: bool = False
    variant: str = "base"

    def __post_init__(self):
        if self.n < 2:
            raise StructuralError("rainbow dimension must be at least 2")
        if self.variant not in VARIANTS:
            raise StructuralError(f"unknown variant {self.variant!r}")
        if self.yellow not in YELLOW_FAMILIES:
            raise StructuralError(f"unknown yellow family {self.yellow!r}")
        if self.copies < 1:
            raise StructuralError("need at least one copy of each red")
        if len(set(self.tints)) != len(self.tints):
            raise StructuralError("repeated tint")

    @classmethod
    def standard(cls, n: int, greens: int, reds: int, **kw) -> "RainbowSignature":
        """Tints ``1..greens`` and red indices ``0..reds-1``."""
        return cls(n, tuple(range(1, greens + 1)), reds, **kw)

    @classmethod
    def zn(cls, n: int, z_depth: int, reds: int, **kw) -> "RainbowSignature":
        """Tints ``-z_depth..0`` with the order-preserving rule on reds."""
        return cls(n, tuple(range(-z_depth, 1)), reds, variant="zn-order", **kw)

    def edge_colours(self) -> list[tuple]:
        cs: list[tuple] = [("g", i) for i in range(1, self.n - 1)]
        cs += [("g0", t) for t in self.tints]
        cs += [("w", i) for i in range(self.n - 1)]
        cs += [("r", k, l, s) for k in range(self.reds) for l in range(self.reds) if k != l
               for s in range(self.copies)]
        if self.shade:
            cs.append(("rho",))
        return cs

    def yellow_sets(self) -> list[frozenset]:
        top = frozenset(self.tints)
        if self.yellow == "top":
            return [top]
        out = []
        for r in range(len(self.tints) + 1):
            out += [frozenset(s) for s in itertools.combinations(sorted(self.tints), r)]
        return out

    def knows(self, c: tuple) -> bool:
        kind = c[0]
        if kind == "g":
            return len(c) == 2 and 1 <= c[1] < self.n - 1
        if kind == "g0":
            return len(c) == 2 and c[1] in self.tints
        if kind == "w":
            return len(c) == 2 and 0 <= c[1] < self.n - 1
        if kind == "r":
            return (len(c) == 4 and c[1] != c[2] and 0 <= c[1] < self.reds
                    and 0 <= c[2] < self.reds and 0 <= c[3] < self.copies)
        if kind == "rho":
            return self.shade
        return False

    def to_json(self) -> dict:
        return {"n": self.n, "tints": list(self.tints), "reds": self.reds,
                "copies": self.copies, "yellow": self.yellow, "shade": self.shade,
                "variant": self.variant}


# -- forbidden triangles ----------------------------------------------------------

def _order_preserving(ti, tj, k, l) -> bool:
    """``{(ti, k), (tj, l)}`` is an order preserving partial function."""
    if ti == tj:
        return k == l
    return (ti < tj) == (k < l) and k != l


def triangle_violation(sig: RainbowSignature, variant: str, cab: tuple, cbc: tuple,
                       cac: tuple) -> str | None:
    """Name of the rule broken by a triangle ``a, b, c`` whose edges are read
    ``a->b``, ``b->c`` and ``a->c``, or None."""
    cols = (cab, cbc, cac)
    if all(is_green(c) for c in cols):
        return "green triangle"
    for x, y, z in ((cab, cbc, cac), (cab, cac, cbc), (cbc, cac, cab)):
        if x == y and x[0] == "g" and z == ("w", x[1]):
            return f"(g{x[1]}, g{x[1]}, w{x[1]})"
        if x[0] == "g0" and y[0] == "g0" and z == ("w", 0):
            return "(g0, g0, w0)"
    if all(is_red(c) for c in cols):
        if not (cab[1] == cac[1] and cab[2] == cbc[1] and cbc[2] == cac[2]):
            return "red indices do not match"
    if variant == "zn-order":
        # each red edge with green tinted edges to the third vertex
        for (u, v, w) in (("a", "b", "c"), ("b", "c", "a"), ("a", "c", "b")):
            red = _edge(cols, u, v)
            if not is_red(red):
                continue
            gu, gv = _edge(cols, w, u), _edge(cols, w, v)
            if gu[0] == "g0" and gv[0] == "g0":
                if not _order_preserving(gu[1], gv[1], red[1], red[2]):
                    return "tints and reds not order preserving"
    if sig.shade:
        n_red = sum(is_red(c) for c in cols)
        n_rho = sum(c == ("rho",) for c in cols)
        if n_red >= 1 and n_rho >= 1 and n_red + n_rho == 3:
            return "(r, rho, rho)" if n_rho == 2 else "(r, r*, rho)"
    return None


_POS = {("a", "b"): 0, ("b", "c"): 1, ("a", "c"): 2}


def _edge(cols, u, v):
    if (u, v) in _POS:
        return cols[_POS[(u, v)]]
    return reverse(cols[_POS[(v, u)]])


# -- coloured graphs --------------------------------------------------------------

class ColouredGraph:
    """Complete graph with oriented edge colours and yellow labels on
    ``(n-1)``-sets of vertices.  ``vertices`` keeps its given order (the
    game arena uses it as creation order)."""

    __slots__ = ("vertices", "edges", "yellows", "_key")

    def __init__(self, vertices: Iterable[int], edges: dict, yellows: dict | None = None):
        self.vertices = tuple(vertices)
        norm = {}
        for (u, v), c in edges.items():
            if u == v:
                raise StructuralError(f"loop at {u}")
            norm[(u, v) if u < v else (v, u)] = c if u < v else reverse(c)
        self.edges = norm
        self.yellows = {frozenset(k): frozenset(S) for k, S in (yellows or {}).items()}
        self._key = None

    def colour(self, u: int, v: int) -> tuple:
        if u < v:
            return self.edges[(u, v)]
        return reverse(self.edges[(v, u)])

    def key(self) -> tuple:
        if self._key is None:
            self._key = (tuple(sorted(self.vertices)), tuple(sorted(self.edges.items())),
                         tuple(sorted((tuple(sorted(F)), tuple(sorted(S)))
                                      for F, S in self.yellows.items())))
        return self._key

    def __eq__(self, other):
        return isinstance(other, ColouredGraph) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def without(self, z: int) -> "ColouredGraph":
        return ColouredGraph([v for v in self.vertices if v != z],
                             {e: c for e, c in self.edges.items() if z not in e},
                             {F: S for F, S in self.yellows.items() if z not in F})

    def to_json(self) -> dict:
        return {"vertices": list(self.vertices),
                "edges": {f"{u},{v}": colour_name(c) for (u, v), c in sorted(self.edges.items())},
                "yellows": {",".join(map(str, sorted(F))): sorted(S)
                            for F, S in sorted(self.yellows.items(), key=lambda kv: sorted(kv[0]))}}

    @classmethod
    def from_json(cls, data: dict) -> "ColouredGraph":
        edges = {}
        for k, name in data.get("edges", {}).items():
            u, v = (int(x) for x in k.split(","))
            edges[(u, v)] = parse_colour(name)
        yellows = {frozenset(int(x) for x in k.split(",")): frozenset(S)
                   for k, S in data.get("yellows", {}).items()}
        return cls(data["vertices"], edges, yellows)


def _cone_of(g: ColouredGraph, n: int, apex: int, F: frozenset):
    """Tint of the cone with this apex over base ``F``, or None if the edges
    from the apex are not a green cone (one ``g0`` edge and ``g_1..g_{n-2}``)."""
    tint = None
    seen = set()
    for f in F:
        c = g.colour(apex, f)
        if c[0] == "g0":
            if tint is not None:
                return None
            tint = c[1]
        elif c[0] == "g":
            seen.add(c[1])
        else:
            return None
    if tint is None or seen != set(range(1, n - 1)):
        return None
    return tint


def graph_consistent(g: ColouredGraph, sig: RainbowSignature,
                     variant: str | None = None) -> ValidationReport:
    """Check completeness, the forbidden triangles of ``variant`` and the yellow rules."""
    variant = variant or sig.variant
    if variant not in VARIANTS:
        raise StructuralError(f"unknown variant {variant!r}")
    rep = ValidationReport()
    vs = sorted(g.vertices)
    if len(set(vs)) != len(vs):
        raise StructuralError("repeated vertex")
    for e, c in g.edges.items():
        if not sig.knows(c):
            raise StructuralError(f"unknown colour {c!r} on edge {e}")
        if e[0] not in vs or e[1] not in vs:
            raise StructuralError(f"edge {e} leaves the vertex set")
    for u, v in itertools.combinations(vs, 2):
        if (u, v) not in g.edges:
            rep.add("graph not complete", (u, v))
    if not rep.ok:
        return rep
    for a, b, c in itertools.combinations(vs, 3):
        why = triangle_violation(sig, variant, g.edges[(a, b)], g.edges[(b, c)], g.edges[(a, c)])
        if why:
            rep.add(why, (a, b, c))
    allowed = set(sig.yellow_sets())
    for F, S in g.yellows.items():
        if S not in allowed:
            raise StructuralError(f"unknown yellow label {sorted(S)}")
    if len(vs) >= sig.n - 1 and sig.n >= 3:
        for F in itertools.combinations(vs, sig.n - 1):
            F = frozenset(F)
            green_inside = any(is_green(g.colour(u, v)) for u, v in itertools.combinations(sorted(F), 2))
            if green_inside and F in g.yellows:
                rep.add("yellow on a face with a green edge", tuple(sorted(F)))
            elif not green_inside and F not in g.yellows:
                rep.add("face without yellow label", tuple(sorted(F)))
            elif F in g.yellows:
                for apex in vs:
                    if apex in F:
                        continue
                    t = _cone_of(g, sig.n, apex, F)
                    if t is not None and t not in g.yellows[F]:
                        rep.add("cone tint outside its yellow label", (apex,) + tuple(sorted(F)))
    for F in g.yellows:
        if len(F) != sig.n - 1 or not F <= set(vs):
            rep.add("yellow label on a set of the wrong shape", tuple(sorted(F)))
    return rep


# -- enumeration ------------------------------------------------------------------

def _patterns(n: int) -> list[tuple[int, ...]]:
    out = []

    def go(prefix, top):
        if len(prefix) == n:
            out.append(tuple(prefix))
            return
        for v in range(top + 2):
            go(prefix + [v], max(top, v))

    go([], -1)
    return out


def _edge_assignments(sig: RainbowSignature, variant: str, v: int) -> Iterator[dict]:
    pairs = [(u, w) for w in range(v) for u in range(w)]
    colours = sig.edge_colours()
    edges: dict = {}

    def go(k):
        if k == len(pairs):
            yield dict(edges)
            return
        u, w = pairs[k]
        for c in colours:
            edges[(u, w)] = c
            # the triangle x, u, w is complete once its last edge (u, w) is placed
            if all(triangle_violation(sig, variant, edges[(x, u)], c, edges[(x, w)]) is None
                   for x in range(u)):
                yield from go(k + 1)
        edges.pop((u, w), None)

    yield from go(0)


def _yellow_assignments(sig: RainbowSignature, edges: dict, vertices: Sequence[int]):
    faces = []
    if sig.n >= 3 and len(vertices) >= sig.n - 1:
        for F in itertools.combinations(vertices, sig.n - 1):
            if not any(is_green(edges[(u, w)]) for u, w in itertools.combinations(F, 2)):
                faces.append(frozenset(F))
    for choice in itertools.product(sig.yellow_sets(), repeat=len(faces)):
        yield dict(zip(faces, choice))


def consistent_graphs(sig: RainbowSignature, v: int, variant: str | None = None):
    """All consistent coloured graphs on vertices ``0..v-1``."""
    variant = variant or sig.variant
    for edges in _edge_assignments(sig, variant, v):
        for ys in _yellow_assignments(sig, edges, range(v)):
            g = ColouredGraph(range(v), edges, ys)
            if sig.yellow == "top" or graph_consistent(g, sig, variant).ok:
                yield g


@dataclass(frozen=True)
class RainbowAtom:
    pattern: tuple
    graph: ColouredGraph

    def name(self) -> str:
        v = max(self.pattern) + 1
        cols = [colour_name(self.graph.edges[(u, w)]) for u in range(v) for w in range(u + 1, v)]
        text = "".join(map(str, self.pattern)) + ":" + ",".join(cols)
        if self.graph.yellows and any(len(S) != 0 for S in self.graph.yellows.values()):
            ys = []
            for F, S in sorted(self.graph.yellows.items(), key=lambda kv: sorted(kv[0])):
                ys.append("".join(map(str, sorted(F))) + "=" + "".join(str(t) for t in sorted(S)))
            text += "|" + ";".join(ys)
        return text

    def projection(self, i: int) -> tuple:
        """The part of the atom visible off coordinate ``i``."""
        coords = [self.pattern[j] for j in range(len(self.pattern)) if j != i]
        ren: dict[int, int] = {}
        for x in coords:
            ren.setdefault(x, len(ren))
        edges = []
        for (u, w), c in self.graph.edges.items():
            if u in ren and w in ren:
                a, b = ren[u], ren[w]
                edges.append(((a, b), c) if a < b else ((b, a), reverse(c)))
        ys = [(tuple(sorted(ren[x] for x in F)), tuple(sorted(S)))
              for F, S in self.graph.yellows.items() if F <= ren.keys()]
        return (tuple(ren[x] for x in coords), tuple(sorted(edges)), tuple(sorted(ys)))


def rainbow_atoms(sig: RainbowSignature, variant: str | None = None,
                  cap: int = DEFAULT_ATOM_CAP) -> list[RainbowAtom]:
    variant = variant or sig.variant
    by_size: dict[int, list[ColouredGraph]] = {}
    out = []
    for p in _patterns(sig.n):
        v = max(p) + 1
        if v not in by_size:
            by_size[v] = []
            for g in consistent_graphs(sig, v, variant):
                by_size[v].append(g)
                if len(by_size[v]) > cap:
                    raise StructuralError(f"more than {cap} atoms (graphs on {v} vertices)")
        out += [RainbowAtom(p, g) for g in by_size[v]]
        if len(out) > cap:
            raise StructuralError(f"atom count {len(out)} exceeds cap {cap}")
    return out


def build_rainbow_ca(n: int, sig: RainbowSignature, variant: str | None = None,
                     cap: int = DEFAULT_ATOM_CAP) -> CaAtomStructure:
    """The rainbow ``CA_n`` atom structure of ``sig``.

    The structure carries ``rainbow_atoms`` (the atoms as coloured graphs) and
    ``signature`` as extra attributes.
    """
    if n != sig.n:
        raise StructuralError(f"signature has dimension {sig.n}, asked for {n}")
    variant = variant or sig.variant
    atoms = rainbow_atoms(sig, variant, cap)
    return _structure(sig, variant, atoms)


def _structure(sig: RainbowSignature, variant: str, atoms: list[RainbowAtom]) -> CaAtomStructure:
    n = sig.n
    diag = {(i, j): mask_of(k for k, a in enumerate(atoms) if a.pattern[i] == a.pattern[j])
            for i in range(n) for j in range(n)}
    cyl = []
    for i in range(n):
        classes: dict[tuple, int] = {}
        keys = [a.projection(i) for a in atoms]
        for k, key in enumerate(keys):
            classes[key] = classes.get(key, 0) | (1 << k)
        cyl.append([classes[key] for key in keys])
    counts = {}
    for a in atoms:
        v = max(a.pattern) + 1
        counts[v] = counts.get(v, 0) + 1
    meta = {"alias": f"rainbow:{n}:{len(sig.tints)}:{sig.reds}", "signature": sig.to_json(),
            "variant": variant, "atoms_by_vertices": {str(k): v for k, v in sorted(counts.items())}}
    S = CaAtomStructure(n, [a.name() for a in atoms], diag, cyl, meta)
    S.rainbow_atoms = atoms
    S.signature = sig
    return S


def _strip(c: tuple) -> tuple:
    return ("r", c[1], c[2], 0) if c[0] == "r" else c


def base_atom(atom: RainbowAtom) -> RainbowAtom:
    """The atom with all red superscripts erased."""
    g = atom.graph
    return RainbowAtom(atom.pattern, ColouredGraph(g.vertices, {e: _strip(c) for e, c in g.edges.items()},
                                                   g.yellows))


def split_reds(base: CaAtomStructure, t: int) -> tuple[CaAtomStructure, list[int]]:
    """Replace every red by ``t`` superscripted copies.

    Returns the split structure and the copy map: entry ``a`` is the bitset of
    split atoms that are copies of base atom ``a``.  An atom with ``r`` red
    edges has ``t**r`` copies.
    """
    if t < 1:
        raise StructuralError("truncation must be at least 1")
    sig = getattr(base, "signature", None)
    if sig is None:
        raise StructuralError("split_reds needs a structure produced by build_rainbow_ca")
    if sig.copies != 1:
        raise StructuralError("base structure is already split")
    variant = base.meta.get("variant", sig.variant)
    new_sig = RainbowSignature(sig.n, sig.tints, sig.reds, t, sig.yellow, sig.shade,
                               "split-red" if variant == "base" else variant)
    atoms = []
    for a in base.rainbow_atoms:
        reds = [e for e, c in sorted(a.graph.edges.items()) if is_red(c)]
        for sups in itertools.product(range(t), repeat=len(reds)):
            edges = dict(a.graph.edges)
            for e, s in zip(reds, sups):
                c = edges[e]
                edges[e] = ("r", c[1], c[2], s)
            atoms.append(RainbowAtom(a.pattern, ColouredGraph(a.graph.vertices, edges, a.graph.yellows)))
    S = _structure(new_sig, new_sig.variant, atoms)
    S.meta["split"] = t
    where = {a.name(): k for k, a in enumerate(base.rainbow_atoms)}
    copy_map = [0] * base.size
    for k, a in enumerate(atoms):
        copy_map[where[base_atom(a).name()]] |= 1 << k
    return S, copy_map


def verify_theta_embedding(base: CaAtomStructure, split: CaAtomStructure,
                           copy_map: Sequence[int]) -> ValidationReport:
    """Check that sending each atom to the join of its copies is an injective
    homomorphism of the complex algebras, by exhaustive set computation."""
    if len(copy_map) != base.size:
        raise StructuralError(f"copy map covers {len(copy_map)} of {base.size} atoms")
    if base.n != split.n:
        raise StructuralError("dimensions differ")
    rep = ValidationReport()

    memo: dict[int, int] = {}

    def theta(X: int) -> int:
        if X not in memo:
            out = 0
            for a in bits(X):
                out |= copy_map[a]
            memo[X] = out
        return memo[X]

    # theta of the complement of {a}, as the union of the images before and after a
    prefix = [0]
    for a in base.atoms:
        prefix.append(prefix[-1] | copy_map[a])
    suffix = [0]
    for a in reversed(base.atoms):
        suffix.append(suffix[-1] | copy_map[a])
    suffix.reverse()

    seen = 0
    for a in base.atoms:
        img = copy_map[a]
        if img == 0:
            rep.add("theta not injective (empty image)", base.names[a])
        if img & seen:
            rep.add("theta not injective (images overlap)", base.names[a])
        seen |= img
    for a in base.atoms:
        one = 1 << a
        if cm_apply(base, "complement", one) != base.full & ~one:
            rep.add("complement of an atom is not the other atoms", base.names[a])
        if prefix[a] | suffix[a + 1] != cm_apply(split, "complement", theta(one)):
            rep.add("theta does not preserve complement", base.names[a])
    for i in range(base.n):
        for j in range(base.n):
            if theta(base.diag[(i, j)]) != split.diag[(i, j)]:
                rep.add("theta does not preserve diagonal", (i, j))
    for i in range(base.n):
        for a in base.atoms:
            one = 1 << a
            if theta(cm_apply(base, "cyl", i, one)) != cm_apply(split, "cyl", i, theta(one)):
                rep.add(f"theta does not preserve cyl {i}", base.names[a])
    return rep


# -- the graph version of the game ------------------------------------------------

@dataclass(frozen=True)
class ConeMove:
    """Demand an apex over ``base`` (``n-1`` nodes, first gets the tint)
    placed on ``target`` (None for the least fresh node)."""

    base: tuple
    tint: object
    target: int | None = None

    def to_json(self) -> dict:
        return {"base": list(self.base), "tint": self.tint, "target": self.target}


class RainbowArena:
    """Coloured-graph positions on at most ``m`` nodes.

    A cone move names a base of ``n-1`` nodes, a tint and a target node.  The
    defender answers with the position unchanged when some node already is
    such an apex, or by placing the apex on the target (fresh, or an existing
    node off the base when nodes may be reused) and colouring its remaining
    edges and yellow faces consistently.
    """

    def __init__(self, sig: RainbowSignature, m: int, reuse: bool = False):
        if m < sig.n:
            raise StructuralError(f"need at least {sig.n} nodes")
        self.sig = sig
        self.m = m
        self.reuse = reuse
        self.colours = sig.edge_colours()

    def opening(self, tint) -> ColouredGraph:
        """The 0-cone: base ``0..n-2`` joined by ``w0``, apex ``n-1``."""
        n = self.sig.n
        edges = {}
        for i, j in itertools.combinations(range(n - 1), 2):
            edges[(i, j)] = ("w", 0)
        edges[(0, n - 1)] = ("g0", tint)
        for i in range(1, n - 1):
            edges[(i, n - 1)] = ("g", i)
        ys = {frozenset(range(n - 1)): frozenset(self.sig.tints)} if n >= 3 else {}
        g = ColouredGraph(range(n), edges, ys)
        rep = graph_consistent(g, self.sig)
        if not rep.ok:
            raise StructuralError(f"opening graph inconsistent: {rep.rules()}")
        return g

    def _demand(self, move: ConeMove) -> dict:
        want = {move.base[0]: ("g0", move.tint)}
        for i, f in enumerate(move.base[1:], start=1):
            want[f] = ("g", i)
        return want

    def witnesses(self, g: ColouredGraph, move: ConeMove) -> list[int]:
        want = self._demand(move)
        return [z for z in g.vertices if z not in want
                and all(g.colour(z, f) == c for f, c in want.items())]

    def responses(self, g: ColouredGraph, move: ConeMove) -> list[ColouredGraph]:
        sig = self.sig
        if len(move.base) != sig.n - 1 or len(set(move.base)) != len(move.base):
            raise IllegalMove(f"base must be {sig.n - 1} distinct nodes")
        if any(f not in g.vertices for f in move.base):
            raise IllegalMove("base outside the graph")
        if move.tint not in sig.tints:
            raise IllegalMove(f"unknown tint {move.tint!r}")
        out = [g] if self.witnesses(g, move) else []
        free = [z for z in range(self.m) if z not in g.vertices]
        z = move.target
        if z is None:
            if not free:
                return out
            z = free[0]
        elif z in move.base or not 0 <= z < self.m:
            raise IllegalMove(f"target {z} not available")
        elif z in g.vertices and not self.reuse:
            raise IllegalMove(f"node {z} already in play")
        h = g.without(z) if z in g.vertices else g
        want = self._demand(move)
        others = [y for y in h.vertices if y not in want]
        fixed = {f: c for f, c in want.items()}
        found = []
        for extra in self._colourings(h, z, fixed, others):
            edges = dict(h.edges)
            for y, c in extra.items():
                edges[(z, y)] = c
            new = ColouredGraph(h.vertices + (z,), edges, h.yellows)
            for ys in self._new_yellows(new, z):
                cand = ColouredGraph(new.vertices, new.edges, {**new.yellows, **ys})
                if graph_consistent(cand, sig).ok:
                    found.append(cand)
        return out + sorted(found, key=ColouredGraph.key)

    def _colourings(self, h: ColouredGraph, z: int, fixed: dict, others: list[int]):
        sig = self.sig
        placed = dict(fixed)
        for a, b in itertools.combinations(sorted(placed), 2):
            if not self._ok(h, z, placed, a, b):
                return
        order = list(others)

        def go(k):
            if k == len(order):
                yield dict(placed)
                return
            y = order[k]
            for c in self.colours:
                placed[y] = c
                if all(self._ok(h, z, placed, x, y) for x in placed if x != y):
                    yield from go(k + 1)
            del placed[y]

        yield from go(0)

    def _ok(self, h, z, placed, x, y) -> bool:
        # triangle z, x, y with z first
        return triangle_violation(self.sig, self.sig.variant, placed[x], h.colour(x, y),
                                  placed[y]) is None

    def _new_yellows(self, g: ColouredGraph, z: int):
        sig = self.sig
        if sig.n < 3:
            yield {}
            return
        faces = []
        rest = [v for v in g.vertices if v != z]
        for F in itertools.combinations(rest, sig.n - 2):
            face = frozenset(F) | {z}
            if not any(is_green(g.colour(u, v)) for u, v in itertools.combinations(sorted(face), 2)):
                faces.append(face)
        for choice in itertools.product(sig.yellow_sets(), repeat=len(faces)):
            yield dict(zip(faces, choice))

    def key(self, g: ColouredGraph):
        return (g.vertices, g.key())

    def describe(self, g: ColouredGraph):
        return g.to_json()

    def describe_move(self, move: ConeMove):
        return move.to_json()


class ConeScript:
    """The challenger's cone bombardment.

    Opens with the 0-cone of ``tints[0]`` and then demands, over the fixed base
    ``0..n-2``, apexes with ``tints[1]``, ``tints[2]`` and so on (cycling when
    the schedule runs out).  New apexes go to the least fresh node; once all
    ``m`` nodes are used and reuse is allowed, the oldest apex is overwritten.
    """

    def __init__(self, sig: RainbowSignature, tints: Sequence | None = None):
        self.sig = sig
        self.tints = tuple(tints if tints is not None else sig.tints)
        if not self.tints:
            raise StructuralError("empty tint schedule")
        self.base = tuple(range(sig.n - 1))

    def opening(self, arena: RainbowArena) -> ColouredGraph:
        return arena.opening(self.tints[0])

    def next_move(self, arena: RainbowArena, history: list) -> ConeMove:
        k = len(history)
        tint = self.tints[k % len(self.tints)]
        g = history[-1]
        if len(g.vertices) < arena.m or not arena.reuse:
            return ConeMove(self.base, tint)
        apexes = [v for v in g.vertices if v not in self.base]
        return ConeMove(self.base, tint, apexes[0])
