"""Bases, hyperbases and relational bases by saturation, and ``Mat_n``.

Every search starts from all consistent candidates and deletes members with
a defect that has no witness among the survivors.  Deleting never creates
witnesses, so the survivors shrink to the greatest fixpoint whatever the
order of deletions; ``schedule`` only permutes that order.
"""
from __future__ import annotations

import itertools
import random
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .games import DEFAULT_BUDGET, UNDECIDED
from .networks import Network, canonical_key, enumerate_networks, extensions
from .structures import CaAtomStructure, RaAtomStructure, StructuralError, bits, mask_of

EXISTS = "exists"
NONE = "none"


@dataclass
class BasisResult:
    status: str
    members: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    @property
    def exists(self) -> bool:
        return self.status == EXISTS

    def to_json(self, describe=None) -> dict:
        out = {"status": self.status, "stats": self.stats, "trace": self.trace[:50]}
        if describe is not None and self.status == EXISTS:
            out["basis"] = [describe(M) for M in self.members]
        return out


@dataclass
class SaturationState:
    """Surviving members and the defects still waiting to be re-examined."""

    surviving: set = field(default_factory=set)
    queue: deque = field(default_factory=deque)


# -- m-dimensional bases ----------------------------------------------------------

def _defects(N: Network):
    """Cylindrifier demands ``(x, i, a)`` of ``N`` not met inside ``N`` itself."""
    S = N.S
    seen = set()
    for x, b in N.labels.items():
        for i in range(S.n):
            for a in bits(S.cyl[i][b]):
                if any(N.labels[x[:i] + (w,) + x[i + 1:]] == a for w in N.nodes):
                    continue
                # demands with the same context off i are the same demand
                ctx = (x[:i] + x[i + 1:], i, a)
                if ctx in seen:
                    continue
                seen.add(ctx)
                yield x, i, a


def _covers(S: CaAtomStructure, members: Iterable[Network]) -> list[int]:
    seen = 0
    for M in members:
        for a in M.labels.values():
            seen |= 1 << a
    return [a for a in S.atoms if not seen >> a & 1]


def find_basis(S: CaAtomStructure, m: int, kind: str = "basis", budget: int = DEFAULT_BUDGET,
               schedule: int | None = None) -> BasisResult:
    """Greatest set of networks on at most ``m`` nodes closed under witnesses.

    A cylindrifier demand ``(x, i, a)`` on ``N`` is met inside ``N`` or by an
    extension of ``N`` by one new node ``z`` with ``x[i -> z]`` labelled ``a``.
    ``kind="hyperbasis"`` adds the amalgamation demand (see
    ``find_hyperbasis``).  ``schedule`` seeds a shuffle of the deletion order.
    """
    if kind == "hyperbasis":
        return find_hyperbasis(S, m, budget=budget, schedule=schedule)
    if kind != "basis":
        raise StructuralError(f"unknown basis kind {kind!r}")
    if m <= S.n:
        raise StructuralError(f"need m > n, got m={m}, n={S.n}")
    keys: dict[tuple, Network] = {}
    for N in enumerate_networks(S, m):
        k = canonical_key(N)
        if k not in keys:
            keys[k] = Network.from_key(S, k)
            if len(keys) > budget:
                return BasisResult(UNDECIDED, stats={"reason": f"more than {budget} networks"})
    # demand records: owner key, witness count; reverse index witness -> demands
    owner: list[tuple] = []
    count: list[int] = []
    label: list[tuple] = []
    needs: dict[tuple, list[int]] = defaultdict(list)
    dead_on_arrival: list[tuple] = []
    for k, N in keys.items():
        size = len(N.nodes)
        for x, i, a in _defects(N):
            wit = set()
            if size < m:
                y = x[:i] + (size,) + x[i + 1:]
                wit = {canonical_key(M) for M in extensions(N, size, {y: a})}
            d = len(owner)
            owner.append(k)
            count.append(len(wit))
            label.append((x, i, a))
            for w in wit:
                needs[w].append(d)
            if not wit:
                dead_on_arrival.append((k, d))
    state = SaturationState(set(keys), deque())
    order = dead_on_arrival
    if schedule is not None:
        order = list(order)
        random.Random(schedule).shuffle(order)
    trace = []
    for k, d in order:
        state.queue.append((k, d))
    while state.queue:
        k, d = state.queue.popleft()
        if k not in state.surviving:
            continue
        state.surviving.discard(k)
        x, i, a = label[d]
        trace.append({"network": keys[k].to_json(), "tuple": list(x), "i": i, "atom": S.names[a]})
        hit = needs.get(k, [])
        if schedule is not None:
            hit = list(hit)
            random.Random(schedule + len(trace)).shuffle(hit)
        for d2 in hit:
            count[d2] -= 1
            if count[d2] == 0 and owner[d2] in state.surviving:
                state.queue.append((owner[d2], d2))
    members = [keys[k] for k in sorted(state.surviving)]
    stats = {"candidates": len(keys), "surviving": len(members), "deleted": len(trace)}
    missing = _covers(S, members)
    if missing:
        trace.append({"uncovered": [S.names[a] for a in missing]})
        return BasisResult(NONE, [], trace, stats)
    return BasisResult(EXISTS, members, trace, stats)


def audit_basis(S: CaAtomStructure, members: list[Network], m: int) -> list[str]:
    """Re-check a basis by explicit embeddings (no canonical forms involved).

    Returns a list of problems, empty when every demand of every member is met
    inside the member or by some member one node larger into which it embeds.
    """
    problems = []
    if _covers(S, members):
        problems.append("some atom is not covered")
    by_size = defaultdict(list)
    for M in members:
        by_size[len(M.nodes)].append(M)
    for N in members:
        k = len(N.nodes)
        for x, b in N.labels.items():
            for i in range(S.n):
                for a in bits(S.cyl[i][b]):
                    if any(N.labels[x[:i] + (w,) + x[i + 1:]] == a for w in N.nodes):
                        continue
                    if k >= m or not _embeds_with(N, x, i, a, by_size[k + 1]):
                        problems.append(f"demand {x},{i},{S.names[a]} unmet in {N.to_json()}")
    return problems


def _embeds_with(N: Network, x, i, a, bigger: list[Network]) -> bool:
    for M in bigger:
        for image in itertools.permutations(M.nodes, len(N.nodes)):
            f = dict(zip(N.nodes, image))
            if any(M.labels[tuple(f[v] for v in t)] != lab for t, lab in N.labels.items()):
                continue
            z = next(v for v in M.nodes if v not in image)
            y = tuple(f[v] for v in x)
            if M.labels[y[:i] + (z,) + y[i + 1:]] == a:
                return True
    return False


# -- hyperbases -------------------------------------------------------------------

def _full_networks(S: CaAtomStructure, m: int, budget: int) -> list[tuple]:
    """Every consistent labelling of ``m^n`` in which nodes may coincide.

    Each one comes from a strict network on ``k <= m`` nodes and a surjection
    of ``0..m-1`` onto those nodes.  Labels are flat tuples in the order of
    ``itertools.product(range(m), repeat=n)``.
    """
    cells = list(itertools.product(range(m), repeat=S.n))
    out: set[tuple] = set()
    for N in enumerate_networks(S, m):
        k = len(N.nodes)
        for sigma in itertools.product(N.nodes, repeat=m):
            if len(set(sigma)) < k:
                continue
            out.add(tuple(N.labels[tuple(sigma[v] for v in t)] for t in cells))
            if len(out) > budget:
                raise OverflowError
    return sorted(out)


def find_hyperbasis(S: CaAtomStructure, m: int, budget: int = DEFAULT_BUDGET,
                    schedule: int | None = None) -> BasisResult:
    """Hyperbasis with one non-atomic label per hyperedge length.

    With a single label per length the consistency rule for non-atomic labels
    always holds and hyperedges never separate two hypernetworks, so members
    are atomic networks on all of ``0..m-1`` where nodes may coincide.  A
    demand ``a <= c_i N(x)`` is met inside ``N`` or by a member agreeing with
    ``N`` off a node ``z`` that shares its place with another node, so that
    moving ``z`` is the same as adding a fresh node.  Members ``M, N`` agreeing
    off ``{x, y}`` need a member ``L`` agreeing with ``M`` off ``x`` and with
    ``N`` off ``y``.
    """
    if m <= S.n:
        raise StructuralError(f"need m > n, got m={m}, n={S.n}")
    try:
        nets = _full_networks(S, m, budget)
    except OverflowError:
        return BasisResult(UNDECIDED, stats={"reason": f"more than {budget} networks"})
    n = S.n
    cells = list(itertools.product(range(m), repeat=n))
    where = {t: j for j, t in enumerate(cells)}
    avoid = [[j for j, t in enumerate(cells) if v not in t] for v in range(m)]
    touch = [[j for j, t in enumerate(cells) if v in t] for v in range(m)]
    pairs = list(itertools.permutations(range(m), 2))
    avoid2 = {(x, y): [j for j in avoid[x] if y not in cells[j]] for x, y in pairs}
    # one representative per demand context: tuple with entry i blanked
    demand_sites = []
    seen = set()
    for j, t in enumerate(cells):
        for i in range(n):
            ctx = (t[:i] + t[i + 1:], i)
            if ctx not in seen:
                seen.add(ctx)
                demand_sites.append((j, i, t, [where[t[:i] + (w,) + t[i + 1:]] for w in range(m)]))
    d01 = S.diag[(0, 1)]
    same = [[where[(u,) + (v,) * (n - 1)] for v in range(m)] for u in range(m)]

    def off(N, v):
        return tuple(N[j] for j in avoid[v])

    alive = set(nets)
    trace = []
    rounds = 0
    while True:
        rounds += 1
        facts: dict[tuple, set] = defaultdict(set)
        reach: dict[tuple, set] = defaultdict(set)
        for N in alive:
            offs = [off(N, v) for v in range(m)]
            for v in range(m):
                facts[(v, offs[v])].update((j, N[j]) for j in touch[v])
                reach[(v, offs[v])].update((y, offs[y]) for y in range(m) if y != v)
        pair_groups: dict[tuple, list] = defaultdict(list)
        for N in alive:
            for x, y in pairs:
                pair_groups[(x, y, tuple(N[j] for j in avoid2[(x, y)]))].append(N)
        doomed = {}
        for N in sorted(alive):
            why = None
            offs = [off(N, v) for v in range(m)]
            # a node sharing its place with another one is the fresh node
            twin = {}
            for u in range(m):
                for v in range(m):
                    if u != v and d01 >> N[same[u][v]] & 1:
                        twin[u] = v
                        break
            for j, i, t, here in demand_sites:
                for a in bits(S.cyl[i][N[j]]):
                    if any(N[k] == a for k in here):
                        continue
                    ok = False
                    for z, v in twin.items():
                        u = tuple(v if w == z else w for w in t)
                        if (where[u[:i] + (z,) + u[i + 1:]], a) in facts[(z, offs[z])]:
                            ok = True
                            break
                    if not ok:
                        why = f"demand {list(t)},{i},{S.names[a]} unmet"
                        break
                if why:
                    break
            if why is None:
                for x, y in pairs:
                    can = reach[(x, offs[x])]
                    for M in pair_groups[(x, y, tuple(N[j] for j in avoid2[(x, y)]))]:
                        if (y, off(M, y)) not in can:
                            why = f"no amalgam over ({x},{y})"
                            break
                    if why:
                        break
            if why is not None:
                doomed[N] = why
        if not doomed:
            break
        order = sorted(doomed)
        if schedule is not None:
            random.Random(schedule + rounds).shuffle(order)
        for N in order:
            alive.discard(N)
            trace.append({"network": _full_json(S, N, cells), "reason": doomed[N]})
    members = [_as_network(S, N, m, cells) for N in sorted(alive)]
    stats = {"candidates": len(nets), "surviving": len(members), "deleted": len(trace),
             "rounds": rounds}
    missing = _covers(S, members)
    if missing:
        trace.append({"uncovered": [S.names[a] for a in missing]})
        return BasisResult(NONE, [], trace, stats)
    return BasisResult(EXISTS, members, trace, stats)


def project_hyperbasis(S: CaAtomStructure, members: list[Network]) -> list[Network]:
    """Strict networks obtained by keeping one node from each class of equal
    nodes.  The projection of a hyperbasis is a basis."""
    d01 = S.diag[(0, 1)]
    out = {}
    for N in members:
        keep = []
        for v in N.nodes:
            if not any(d01 >> N.labels[(v,) + (u,) * (S.n - 1)] & 1 for u in keep):
                keep.append(v)
        P = N.restrict(keep)
        P = P.relabel({v: k for k, v in enumerate(P.nodes)})
        out.setdefault(P.key(), P)
    return [out[k] for k in sorted(out)]


def _as_network(S, N, m, cells) -> Network:
    return Network(S, range(m), dict(zip(cells, N)))


def _full_json(S, N, cells) -> dict:
    return {"nodes": len(set(v for t in cells for v in t)),
            "labels": {"(" + ",".join(map(str, t)) + ")": S.names[a] for t, a in zip(cells, N)}}


# -- relational bases -------------------------------------------------------------

def _ra_networks(R: RaAtomStructure, m: int, budget: int) -> list[tuple]:
    """Strict atomic networks on exactly ``m`` nodes, as flat label tuples
    ``lab[x*m+y]`` (identity atoms only on the diagonal)."""
    ids = sorted(R.identity)
    non = R.non_identity
    pairs = [(x, y) for y in range(m) for x in range(y)]
    lab = [-1] * (m * m)
    out = []
    T = R.table
    conv = R.converse

    def ok_upto(y):
        # all triangles among nodes <= y that involve y
        for a in range(y + 1):
            for b in range(y + 1):
                for c in range(y + 1):
                    if y not in (a, b, c):
                        continue
                    if not T[lab[a * m + b], lab[b * m + c], lab[a * m + c]]:
                        return False
        return True

    def go_diag(x):
        if x == m:
            go_pairs(0)
            return
        for e in ids:
            lab[x * m + x] = e
            go_diag(x + 1)

    def go_pairs(k):
        if k == len(pairs):
            out.append(tuple(lab))
            if len(out) > budget:
                raise OverflowError
            return
        x, y = pairs[k]
        for a in non:
            lab[x * m + y] = a
            lab[y * m + x] = conv[a]
            if x == y - 1 and not ok_upto(y):
                continue
            go_pairs(k + 1)

    go_diag(0)
    return out


def find_relational_basis(R: RaAtomStructure, m: int, budget: int = DEFAULT_BUDGET,
                          schedule: int | None = None) -> BasisResult:
    """Greatest set of strict ``m``-node networks closed under the triangle
    demand: for ``N(x,y) <= a;b`` some member agreeing with ``N`` off a node
    ``z`` has ``(x,z)`` labelled ``a`` and ``(z,y)`` labelled ``b``."""
    if m < 3:
        raise StructuralError("relational bases need m >= 3")
    try:
        nets = _ra_networks(R, m, budget)
    except OverflowError:
        return BasisResult(UNDECIDED, stats={"reason": f"more than {budget} networks"})
    ident = R.identity
    T = R.table
    alive = set(nets)
    trace = []
    rounds = 0
    cells = [(x, y) for x in range(m) for y in range(m) if x != y]
    off_cells = [[p * m + q for p in range(m) for q in range(m) if z not in (p, q)] for z in range(m)]
    # the (a, b) demands raised by a label c: a;b >= c with a, b non-identity
    demands = {c: [(int(a), int(b)) for a, b in zip(*np.nonzero(T[:, :, c]))
                   if a not in ident and b not in ident] for c in R.atoms}

    def off(N, z):
        return tuple(N[k] for k in off_cells[z])

    while True:
        rounds += 1
        facts: dict[tuple, set] = defaultdict(set)
        for M in alive:
            for z in range(m):
                bucket = facts[(z, off(M, z))]
                for x, y in cells:
                    if z != x and z != y:
                        bucket.add((x, y, M[x * m + z], M[z * m + y]))
        doomed = {}
        for N in sorted(alive):
            met = set()
            for z in range(m):
                met |= facts[(z, off(N, z))]
            for x, y in cells:
                bad = next(((a, b) for a, b in demands[N[x * m + y]] if (x, y, a, b) not in met), None)
                if bad:
                    doomed[N] = (x, y, R.names[bad[0]], R.names[bad[1]])
                    break
        if not doomed:
            break
        order = sorted(doomed)
        if schedule is not None:
            random.Random(schedule + rounds).shuffle(order)
        for N in order:
            alive.discard(N)
            trace.append({"network": _ra_json(R, N, m), "defect": list(doomed[N])})
    members = sorted(alive)
    seen = set()
    for N in members:
        seen.update(N)
    stats = {"candidates": len(nets), "surviving": len(members), "deleted": len(trace),
             "rounds": rounds}
    missing = [a for a in R.atoms if a not in seen]
    if missing:
        trace.append({"uncovered": [R.names[a] for a in missing]})
        return BasisResult(NONE, [], trace, stats)
    return BasisResult(EXISTS, members, trace, stats)


def audit_relational_basis(R: RaAtomStructure, members: list[tuple], m: int) -> list[str]:
    """Re-check the triangle demand of every member directly, without the
    fact tables used by the search."""
    problems = []
    seen = set()
    for N in members:
        seen.update(N)
    problems += [f"atom {R.names[a]} is not covered" for a in R.atoms if a not in seen]

    def rest(N, z):
        return tuple(N[p * m + q] for p in range(m) for q in range(m) if z not in (p, q))

    # members grouped by the node that may move and everything off that node
    moves = defaultdict(list)
    for M in members:
        for z in range(m):
            moves[z, rest(M, z)].append(M)
    for N in members:
        for x, y in itertools.permutations(range(m), 2):
            c = N[x * m + y]
            for a, b in itertools.product(R.non_identity, repeat=2):
                if not R.table[a, b, c]:
                    continue
                if not any(M[x * m + z] == a and M[z * m + y] == b
                           for z in range(m) if z not in (x, y) for M in moves[z, rest(N, z)]):
                    problems.append(f"demand {x},{y} <= {R.names[a]};{R.names[b]} unmet in "
                                    f"{_ra_json(R, N, m)}")
    return problems


def _ra_json(R: RaAtomStructure, N: tuple, m: int) -> dict:
    return {"nodes": m, "edges": {f"{x},{y}": R.names[N[x * m + y]]
                                  for x in range(m) for y in range(m) if x != y}}


def ra_network_json(R: RaAtomStructure, N: tuple) -> dict:
    m = int(round(len(N) ** 0.5))
    return _ra_json(R, N, m)


# -- basic matrices ---------------------------------------------------------------

def basic_matrices(R: RaAtomStructure, n: int) -> list[tuple]:
    """``n x n`` matrices (flat, row-major) with identity atoms on the diagonal,
    ``N(y,x)`` the converse of ``N(x,y)`` and every triangle consistent.
    Off-diagonal entries may be identity atoms."""
    ids = sorted(R.identity)
    T = R.table
    conv = R.converse
    lab = [-1] * (n * n)
    out = []
    pairs = [(x, y) for y in range(n) for x in range(y)]

    def ok_upto(y):
        for a in range(y + 1):
            for b in range(y + 1):
                for c in range(y + 1):
                    if y in (a, b, c) and not T[lab[a * n + b], lab[b * n + c], lab[a * n + c]]:
                        return False
        return True

    def go_diag(x):
        if x == n:
            go_pairs(0)
            return
        for e in ids:
            lab[x * n + x] = e
            go_diag(x + 1)

    def go_pairs(k):
        if k == len(pairs):
            out.append(tuple(lab))
            return
        x, y = pairs[k]
        for a in R.atoms:
            lab[x * n + y] = a
            lab[y * n + x] = conv[a]
            if x == y - 1 and not ok_upto(y):
                continue
            go_pairs(k + 1)

    go_diag(0)
    return out


def mat_n(R: RaAtomStructure, n: int) -> CaAtomStructure:
    """The ``CA_n`` atom structure of basic matrices: ``d_ij`` holds the
    matrices with an identity atom at ``(i, j)``; ``c_i`` relates matrices
    agreeing off row and column ``i``."""
    if n < 2:
        raise StructuralError("mat_n needs n >= 2")
    mats = basic_matrices(R, n)
    if not mats:
        raise StructuralError("no basic matrices")
    ident = R.identity
    diag = {(i, j): mask_of(k for k, M in enumerate(mats) if M[i * n + j] in ident)
            for i in range(n) for j in range(n)}
    cyl = []
    for i in range(n):
        classes: dict[tuple, int] = {}
        keys = [tuple(M[p * n + q] for p in range(n) for q in range(n) if i not in (p, q))
                for M in mats]
        for k, key in enumerate(keys):
            classes[key] = classes.get(key, 0) | (1 << k)
        cyl.append([classes[key] for key in keys])
    names = [".".join(R.names[M[x * n + y]] for x in range(n) for y in range(x + 1, n)) or R.names[M[0]]
             for M in mats]
    if len(set(names)) != len(names):
        names = ["|".join(R.names[v] for v in M) for M in mats]
    meta = {"alias": f"mat:{n}:{R.meta.get('alias', 'custom')}", "matrices": len(mats)}
    return CaAtomStructure(n, names, diag, cyl, meta)
