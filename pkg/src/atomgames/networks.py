"""Atomic networks over a CA atom structure, hypernetworks and sc-words."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .structures import CaAtomStructure, StructuralError, ValidationReport, bits


def equality_pattern(t: Sequence) -> tuple[int, ...]:
    """Index of the first occurrence of each coordinate's value."""
    return tuple(t.index(v) for v in t)


def pattern_masks(S: CaAtomStructure) -> dict[tuple[int, ...], int]:
    """Atoms allowed on a tuple with a given equality pattern by the diagonal rule."""
    cache = S.__dict__.get("_pattern_masks")
    if cache is not None:
        return cache
    cache = {}
    n = S.n
    for t in itertools.product(range(n), repeat=n):
        pat = equality_pattern(t)
        if pat in cache:
            continue
        m = S.full
        for i in range(n):
            for j in range(i + 1, n):
                if pat[i] == pat[j]:
                    m &= S.diag[(i, j)]
                else:
                    m &= ~S.diag[(i, j)]
        cache[pat] = m & S.full
    S.__dict__["_pattern_masks"] = cache
    return cache


def _col_masks(S: CaAtomStructure) -> tuple[tuple[int, ...], ...]:
    cache = S.__dict__.get("_col_masks")
    if cache is None:
        cols = []
        for i in range(S.n):
            col = [0] * S.size
            for a in S.atoms:
                for b in bits(S.cyl[i][a]):
                    col[b] |= 1 << a
            cols.append(tuple(col))
        cache = tuple(cols)
        S.__dict__["_col_masks"] = cache
    return cache


class Network:
    """Map from ``n``-tuples of nodes to atom ids.  Value type: do not mutate."""

    __slots__ = ("S", "nodes", "labels", "_hash")

    def __init__(self, S: CaAtomStructure, nodes: Iterable[int], labels: dict[tuple, int]):
        self.S = S
        self.nodes = tuple(sorted(set(nodes)))
        self.labels = dict(labels)
        self._hash = None

    @property
    def n(self) -> int:
        return self.S.n

    def tuples(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(self.nodes, repeat=self.S.n)

    def __getitem__(self, t) -> int:
        return self.labels[tuple(t)]

    def key(self) -> tuple:
        return (self.nodes, tuple(self.labels[t] for t in self.tuples()))

    def __eq__(self, other) -> bool:
        return isinstance(other, Network) and other.S is self.S and other.key() == self.key()

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.key())
        return self._hash

    def __repr__(self) -> str:
        return f"Network(nodes={self.nodes})"

    def restrict(self, nodes: Iterable[int]) -> "Network":
        keep = set(nodes)
        return Network(self.S, keep,
                       {t: a for t, a in self.labels.items() if all(x in keep for x in t)})

    def relabel(self, mapping: dict[int, int]) -> "Network":
        return Network(self.S, (mapping[x] for x in self.nodes),
                       {tuple(mapping[x] for x in t): a for t, a in self.labels.items()})

    def to_json(self) -> dict:
        names = self.S.names
        return {
            "nodes": list(self.nodes),
            "labels": {"(" + ",".join(map(str, t)) + ")": names[self.labels[t]]
                       for t in self.tuples()},
        }

    @classmethod
    def from_json(cls, S: CaAtomStructure, data: dict) -> "Network":
        labels = {}
        for k, name in data["labels"].items():
            t = tuple(int(x) for x in k.strip("()").split(","))
            if name not in S.index:
                raise StructuralError(f"unknown atom {name!r}")
            labels[t] = S.index[name]
        return cls(S, data["nodes"], labels)

    @classmethod
    def from_key(cls, S: CaAtomStructure, key: tuple) -> "Network":
        nodes, labs = key
        return cls(S, nodes, dict(zip(itertools.product(nodes, repeat=S.n), labs)))


def single_node(S: CaAtomStructure, atom: int, node: int = 0) -> Network:
    return Network(S, [node], {(node,) * S.n: atom})


def is_consistent(N: Network) -> ValidationReport:
    """Diagonal and cylindrifier conditions, all violations reported."""
    S = N.S
    n = S.n
    rep = ValidationReport()
    for t in N.tuples():
        if t not in N.labels:
            raise StructuralError(f"label missing on tuple {t}")
        a = N.labels[t]
        if not 0 <= a < S.size:
            raise StructuralError(f"tuple {t} labelled with unknown atom {a}")
    masks = pattern_masks(S)
    names = S.names
    for t in N.tuples():
        a = N.labels[t]
        if not masks[equality_pattern(t)] >> a & 1:
            for i in range(n):
                for j in range(i + 1, n):
                    if S.in_diag(a, i, j) != (t[i] == t[j]):
                        rep.add(f"diagonal ({i},{j})", (t, names[a]))
    for t in N.tuples():
        a = N.labels[t]
        for i in range(n):
            for v in N.nodes:
                if v <= t[i]:
                    continue
                u = t[:i] + (v,) + t[i + 1:]
                b = N.labels[u]
                if not (S.cyl_related(i, a, b) and S.cyl_related(i, b, a)):
                    rep.add(f"cylindrifier {i}", (t, u))
    return rep


def net_equiv_i(M: Network, N: Network, i: int) -> bool:
    """Labels agree on every tuple avoiding node ``i`` (and node sets agree off ``i``)."""
    if M.S is not N.S:
        raise StructuralError("networks over different structures")
    if set(M.nodes) - {i} != set(N.nodes) - {i}:
        return False
    for t, a in M.labels.items():
        if i not in t and N.labels.get(t) != a:
            return False
    return True


def equiv_off(M: Network, N: Network, avoid: Iterable[int]) -> bool:
    avoid = set(avoid)
    if set(M.nodes) - avoid != set(N.nodes) - avoid:
        return False
    return all(N.labels.get(t) == a for t, a in M.labels.items() if not avoid.intersection(t))


# -- enumeration -------------------------------------------------------------

def extensions(base: Network, z: int, fixed: dict[tuple, int] | None = None) -> list[Network]:
    """All consistent networks on ``nodes(base) + {z}`` agreeing with ``base`` and
    with ``fixed`` (labels on tuples containing ``z``).

    Tuples are labelled one at a time; each candidate set is the diagonal mask
    intersected with the cylindrifier constraints from already-labelled
    ``≡_i``-neighbours.
    """
    S = base.S
    n = S.n
    if z in base.nodes:
        raise ValueError(f"node {z} already present")
    nodes = base.nodes + (z,)
    new = [t for t in itertools.product(nodes, repeat=n) if z in t]
    masks = pattern_masks(S)
    cols = _col_masks(S)
    labels = dict(base.labels)
    fixed = dict(fixed or {})
    # fixed tuples first so they prune the rest
    new.sort(key=lambda t: t not in fixed)
    out: list[Network] = []

    def candidates(t) -> int:
        m = masks[equality_pattern(t)]
        if t in fixed:
            m &= 1 << fixed[t]
        for i in range(n):
            for v in nodes:
                if v == t[i]:
                    continue
                u = t[:i] + (v,) + t[i + 1:]
                b = labels.get(u)
                if b is not None:
                    m &= S.cyl[i][b] & cols[i][b]
                    if not m:
                        return 0
        return m

    def go(k: int) -> None:
        if k == len(new):
            out.append(Network(S, nodes, labels))
            return
        t = new[k]
        for a in bits(candidates(t)):
            labels[t] = a
            go(k + 1)
        labels.pop(t, None)

    go(0)
    return out


def enumerate_networks(S: CaAtomStructure, max_nodes: int) -> list[Network]:
    """All consistent networks on node sets ``{0..k-1}``, ``1 <= k <= max_nodes``."""
    out = []
    level = [Network(S, [], {})]
    for k in range(max_nodes):
        nxt = []
        for N in level:
            nxt.extend(extensions(N, k))
        out.extend(nxt)
        level = nxt
    return out


def canonical_key(N: Network) -> tuple:
    """Lexicographically least labelling over relabellings of the nodes to ``0..k-1``."""
    k = len(N.nodes)
    n = N.S.n
    grid = list(itertools.product(range(k), repeat=n))
    best = None
    for perm in itertools.permutations(N.nodes):
        # perm[j] is the old node placed at new position j
        labs = tuple(N.labels[tuple(perm[x] for x in t)] for t in grid)
        if best is None or labs < best:
            best = labs
    return (tuple(range(k)), best)


def canonical(N: Network) -> Network:
    return Network.from_key(N.S, canonical_key(N))


# -- game responses ----------------------------------------------------------

@dataclass(frozen=True)
class Move:
    """Cylindrifier move: find a witness for atom ``atom`` at coordinate ``i`` of ``tup``.

    ``target`` is the node to (re)use, or None to let the rules pick a fresh one.
    """
    tup: tuple[int, ...]
    i: int
    atom: int
    target: int | None = None

    def to_json(self, S: CaAtomStructure | None = None) -> dict:
        return {"tuple": list(self.tup), "i": self.i,
                "atom": S.names[self.atom] if S is not None else self.atom,
                "target": self.target}


class IllegalMove(ValueError):
    """The challenger's move violates the legality condition; the challenger forfeits."""


def is_legal(N: Network, move: Move) -> bool:
    return N.S.cyl_related(move.i, N.labels[tuple(move.tup)], move.atom)


def existing_witness(N: Network, move: Move) -> bool:
    t = tuple(move.tup)
    for w in N.nodes:
        u = t[:move.i] + (w,) + t[move.i + 1:]
        if N.labels[u] == move.atom:
            return True
    return False


def exists_responses(N: Network, move: Move | tuple, m: int, reuse: bool = False,
                     target: int | None = None) -> list[Network]:
    """Every consistent response to a cylindrifier move.

    Without reuse the witness node is either already present (response ``N``
    itself, listed first) or the least fresh node below ``m``.  With reuse the
    witness node may be any node below ``m`` other than the move's remaining
    coordinates; an existing node is overwritten.  ``target`` restricts the
    witness node to the challenger's choice.
    """
    if not isinstance(move, Move):
        move = Move(tuple(move[0]), move[1], move[2])
    if move.target is not None:
        target = move.target
    t = tuple(move.tup)
    if any(x not in N.nodes for x in t) or not 0 <= move.i < N.S.n:
        raise StructuralError(f"move {move} does not fit the network")
    if not is_legal(N, move):
        raise IllegalMove(f"{N.S.names[N.labels[t]]} is not below c_{move.i} "
                          f"{N.S.names[move.atom]}; the challenger forfeits")
    witnessed = existing_witness(N, move)
    others = {x for j, x in enumerate(t) if j != move.i}
    free = [z for z in range(m) if z not in N.nodes]
    if target is not None:
        targets = [target]
        if target >= m or target in others:
            raise IllegalMove(f"target node {target} not available")
        if not reuse and target in N.nodes:
            raise IllegalMove("node reuse not permitted")
    elif reuse:
        targets = free[:1] + [z for z in N.nodes if z not in others]
    else:
        targets = free[:1]
    seen = {N.key()}
    found: list[Network] = []
    for z in targets:
        base = N.restrict(x for x in N.nodes if x != z)
        y = t[:move.i] + (z,) + t[move.i + 1:]
        for M in extensions(base, z, {y: move.atom}):
            k = M.key()
            if k not in seen:
                seen.add(k)
                found.append(M)
    found.sort(key=Network.key)
    return ([N] if witnessed else []) + found


def legal_moves(N: Network, reuse: bool = False, m: int | None = None) -> Iterator[Move]:
    """Legal moves up to the irrelevant ``i``-th coordinate of the tuple.

    With ``reuse`` each move is paired with every admissible target node.
    """
    S = N.S
    seen = set()
    for t in N.tuples():
        a = N.labels[t]
        for i in range(S.n):
            ctx = t[:i] + (None,) + t[i + 1:]
            for b in bits(S.cyl[i][a]):
                k = (ctx, i, b)
                if k in seen:
                    continue
                seen.add(k)
                if not reuse:
                    yield Move(t, i, b)
                    continue
                others = {x for j, x in enumerate(t) if j != i}
                free = [z for z in range(m) if z not in N.nodes]
                for z in free[:1] + [z for z in N.nodes if z not in others]:
                    yield Move(t, i, b, z)


# -- sc-words ----------------------------------------------------------------

@dataclass(frozen=True)
class ScWord:
    """A word of substitutions ``("s", sub, sup)`` and cylindrifications ``("c", i)``."""
    tokens: tuple
    m: int

    def __post_init__(self):
        for tok in self.tokens:
            idx = tok[1:]
            if tok[0] not in ("s", "c") or len(idx) != (2 if tok[0] == "s" else 1):
                raise StructuralError(f"malformed token {tok!r}")
            if any(not 0 <= k < self.m for k in idx):
                raise StructuralError(f"index out of range in {tok!r}")

    def __add__(self, other: "ScWord") -> "ScWord":
        return ScWord(self.tokens + tuple(other.tokens), self.m)


def replacement(i: int, j: int, m: int) -> dict[int, int]:
    """``[i|j]``: send ``i`` to ``j`` and fix everything else."""
    return {k: (j if k == i else k) for k in range(m)}


def eval_sc_word(w: ScWord) -> dict[int, int]:
    """Fold the partial map of an sc-word, starting from the identity.

    A substitution token ``("s", sub, sup)`` composes on the right with
    ``[sup|sub]``; ``("c", i)`` removes ``i`` from the domain.
    """
    f = {k: k for k in range(w.m)}
    for tok in w.tokens:
        if tok[0] == "s":
            _, sub, sup = tok
            r = replacement(sup, sub, w.m)
            f = {k: f[r[k]] for k in range(w.m) if r[k] in f}
        else:
            f = {k: v for k, v in f.items() if k != tok[1]}
    return f


# -- hypernetworks -----------------------------------------------------------

@dataclass
class Hypernetwork:
    """A network with labels from ``labels`` (disjoint from atoms) on tuples of
    length ``<= m`` other than ``n``."""
    net: Network
    m: int
    hyperlabel: dict[tuple, object] = field(default_factory=dict)
    labels: frozenset = frozenset()

    @classmethod
    def uniform(cls, net: Network, m: int) -> "Hypernetwork":
        """One fresh label per tuple length."""
        n = net.S.n
        hl = {}
        for L in range(1, m + 1):
            if L == n:
                continue
            for t in itertools.product(net.nodes, repeat=L):
                hl[t] = f"λ{L}"
        return cls(net, m, hl, frozenset(f"λ{L}" for L in range(1, m + 1) if L != n))

    def key(self) -> tuple:
        return (self.net.key(), tuple(sorted(self.hyperlabel.items(), key=repr)))


def check_hypernetwork(H: Hypernetwork) -> ValidationReport:
    """Network consistency plus the non-atomic-label rule, read literally:
    if some ``z̄`` makes every ``(x_i, y_i, z̄)`` diagonal-``d_01``, then
    ``x̄`` and ``ȳ`` carry the same label from the non-atomic label set."""
    N = H.net
    S = N.S
    n = S.n
    rep = ValidationReport()
    rep.extend(is_consistent(N))
    if H.labels & set(S.names):
        rep.add("non-atomic labels overlap atoms", tuple(sorted(H.labels & set(S.names))))
    for L in range(1, H.m + 1):
        if L == n:
            continue
        for t in itertools.product(N.nodes, repeat=L):
            if t not in H.hyperlabel:
                rep.add("hyperlabel missing", t)
            elif H.hyperlabel[t] not in H.labels:
                rep.add("hyperlabel not in label set", (t, H.hyperlabel[t]))
    d01 = S.diag[(0, 1)]
    for zs in itertools.product(N.nodes, repeat=max(n - 2, 0)):
        close = {(x, y) for x in N.nodes for y in N.nodes
                 if d01 >> N.labels[(x, y) + zs] & 1}
        for L in range(1, H.m + 1):
            if L == n:
                continue
            for xt in itertools.product(N.nodes, repeat=L):
                choices = [[y for y in N.nodes if (x, y) in close] for x in xt]
                for yt in itertools.product(*choices):
                    if yt == xt:
                        continue
                    if H.hyperlabel.get(xt) != H.hyperlabel.get(yt):
                        rep.add("non-atomic label rule", (xt, yt, zs))
    return rep
