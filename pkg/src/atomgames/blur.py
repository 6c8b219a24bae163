"""Blurs of finite relation algebras and the blow-up-and-blur construction.

A blur spec over ``R`` is a family ``J`` of sets of non-identity atoms together
with an index relation ``E`` on naturals.  ``check_blur`` evaluates the five
blur conditions, ``blow_up_and_blur`` builds a finite truncation of the
triplet atom structure and ``check_embedding_witness`` verifies that ``R``
sits inside its complex algebra through the sets ``H^P``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .structures import (RaAtomStructure, StructuralError, ValidationReport, bits, mask_of,
                         peircean_closure)

DEFAULT_ATOM_CAP = 400


def index_blur_E(i: int, j: int, k: int) -> bool:
    """Some ordering of ``i, j, k`` is an arithmetic progression."""
    for p, q, r in itertools.permutations((i, j, k)):
        if r - q == q - p:
            return True
    return False


def _as_E(E) -> Callable[[int, int, int], bool]:
    if E is None or E == "ap":
        return index_blur_E
    if callable(E):
        return E
    table = np.asarray(E, dtype=bool)

    def lookup(i, j, k):
        if max(i, j, k) >= table.shape[0]:
            raise StructuralError(f"index ({i},{j},{k}) outside the E table")
        return bool(table[i, j, k])

    return lookup


# -- safety -----------------------------------------------------------------------

def _consistent_masks(R: RaAtomStructure) -> list[list[int]]:
    """``cm[v][w]`` = bitset of atoms ``t`` with ``t <= v;w``."""
    return [[mask_of(int(c) for c in np.flatnonzero(R.table[v, w])) for w in R.atoms]
            for v in R.atoms]


def safe_forall(cm, V: int, W: int, T: int) -> bool:
    """Every ``t`` in ``T`` lies below every ``v;w``: the blurred composition of
    ``V`` and ``W`` covers ``T`` outright."""
    need = T
    for v in bits(V):
        for w in bits(W):
            if need & ~cm[v][w]:
                return False
    return True


def safe_exists(cm, V: int, W: int, T: int) -> bool:
    """Each ``v;w`` meets ``T``."""
    return all(cm[v][w] & T for v in bits(V) for w in bits(W))


SAFE_RULES = {"forall": safe_forall, "exists": safe_exists}


@dataclass
class BlurSpec:
    R: RaAtomStructure
    J: list
    E: object = "ap"
    n: int = 3
    safe: str = "forall"

    def __post_init__(self):
        self.J = [frozenset(int(x) for x in W) for W in self.J]
        known = set(self.R.non_identity)
        for W in self.J:
            bad = W - known
            if bad:
                raise StructuralError(f"blur mentions atoms outside I: {sorted(bad)}")
        if self.safe not in SAFE_RULES:
            raise StructuralError(f"unknown safe rule {self.safe!r}")
        if self.n < 2:
            raise StructuralError("blur arity must be at least 2")

    @property
    def I(self) -> frozenset:
        return frozenset(self.R.non_identity)

    def e(self, i: int, j: int, k: int) -> bool:
        return _as_E(self.E)(i, j, k)

    def to_json(self) -> dict:
        return {"R": self.R.meta.get("alias", "custom"),
                "J": [sorted(self.R.names[a] for a in W) for W in self.J],
                "E": self.E if isinstance(self.E, str) else "table",
                "n": self.n, "safe": self.safe}


def l_subsets_blur(R: RaAtomStructure, l: int, n: int = 3, **kw) -> BlurSpec:
    """All ``l``-element sets of non-identity atoms."""
    J = [frozenset(c) for c in itertools.combinations(R.non_identity, l)]
    return BlurSpec(R, J, n=n, **kw)


@dataclass
class BlurReport(ValidationReport):
    conditions: dict = field(default_factory=dict)

    def record(self, name: str, ok: bool, witness=None) -> None:
        self.conditions[name] = {"ok": ok, "witness": witness}
        if not ok:
            self.add(f"condition ({name}) fails", witness if isinstance(witness, tuple) else (witness,))

    def to_json(self) -> dict:
        out = super().to_json()
        out["conditions"] = self.conditions
        return out


def _good_classes(spec: BlurSpec) -> tuple[np.ndarray, list[int]]:
    """Safe targets for every pair of blurs, deduplicated.

    Returns ``(ids, masks)`` where ``masks[ids[a, b]]`` is the bitset of blur
    indices ``T`` with ``safe(J[a], J[b], T)``.  Both safe rules are a
    conjunction over ``v in V, w in W`` of a per-atom-pair condition on ``T``,
    so the masks are ANDs of per-atom-pair masks.
    """
    R = spec.R
    J = spec.J
    cm = _consistent_masks(R)
    blur_masks = [mask_of(W) for W in J]
    test = SAFE_RULES[spec.safe]
    # per (v, w): blurs T for which the single pair (v, w) is safe
    single = [[0] * R.size for _ in R.atoms]
    for v in R.atoms:
        for w in R.atoms:
            single[v][w] = mask_of(t for t, T in enumerate(blur_masks)
                                   if test(cm, 1 << v, 1 << w, T))
    full = (1 << len(J)) - 1
    ids = np.zeros((len(J), len(J)), dtype=np.int32)
    masks: list[int] = []
    index: dict[int, int] = {}
    for a, V in enumerate(J):
        row = [full] * R.size
        for w in R.atoms:
            for v in V:
                row[w] &= single[v][w]
        for b, W in enumerate(J):
            g = full
            for w in W:
                g &= row[w]
            if g not in index:
                index[g] = len(masks)
                masks.append(g)
            ids[a, b] = index[g]
    return ids, masks


def good_targets(spec: BlurSpec) -> dict[tuple[int, int], int]:
    """For every pair ``(V, W)`` of blurs, the bitset of blur indices ``T`` with ``safe(V, W, T)``."""
    if not spec.J:
        return {}
    ids, masks = _good_classes(spec)
    return {(a, b): masks[ids[a, b]] for a in range(len(spec.J)) for b in range(len(spec.J))}


def check_blur(spec: BlurSpec, strong: bool = False) -> BlurReport:
    """Evaluate conditions (a) to (e), and the strong form of (d) when asked."""
    R = spec.R
    J = spec.J
    I = spec.I
    names = R.names
    rep = BlurReport()

    def show(W):
        return tuple(sorted(names[a] for a in W))

    empty = next((W for W in J if not W), None)
    rep.record("a", empty is None, None if empty is None else show(empty))

    covered = frozenset().union(*J) if J else frozenset()
    missing = I - covered
    rep.record("b", not missing, tuple(sorted(names[a] for a in missing)) or None)

    cm = _consistent_masks(R)
    Imask = mask_of(I)
    bad_c = None
    for P in sorted(I):
        for W in J:
            reach = 0
            for w in W:
                reach |= cm[P][w]
            if Imask & ~reach:
                bad_c = (names[P], show(W))
                break
        if bad_c:
            break
    rep.record("c", bad_c is None, bad_c)

    ids, masks = _good_classes(spec) if J else (np.zeros((0, 0), dtype=np.int32), [])
    slots = spec.n - 1
    # one representative pair of blurs for each distinct set of safe targets
    first = np.unique(ids, return_index=True)[1] if J else []
    rep_pair = {int(ids.flat[f]): tuple(int(x) for x in np.unravel_index(f, ids.shape))
                for f in first}
    bad_d = None
    for combo in itertools.combinations_with_replacement(range(len(masks)), slots):
        common = -1
        for c in combo:
            common &= masks[c]
        if common == 0:
            bad_d = tuple((show(J[rep_pair[c][0]]), show(J[rep_pair[c][1]])) for c in combo)
            break
    rep.record("d", bad_d is None, bad_d)

    comp = {}
    for P in sorted(I):
        for Q in sorted(I):
            comp.setdefault(cm[P][Q] & Imask, (P, Q))
    bad_e = None
    for combo in itertools.combinations_with_replacement(sorted(comp), slots):
        common = Imask
        for g in combo:
            common &= g
        for W in J:
            if not (common & mask_of(W)):
                bad_e = (tuple((names[comp[g][0]], names[comp[g][1]]) for g in combo), show(W))
                break
        if bad_e:
            break
    rep.record("e", bad_e is None, bad_e)

    if strong:
        full = (1 << len(J)) - 1
        partial = [c for c in sorted(rep_pair) if masks[c] != full]
        bad_s = None
        if partial:
            a, b = min(rep_pair[c] for c in partial)
            bad_s = (show(J[a]), show(J[b]))
        rep.record("strong", bad_s is None, bad_s)
    return rep


def minimal_maddux_k(l: int, n: int = 3, k_max: int = 20, strong: bool = False,
                     safe: str = "forall") -> int | None:
    """Least ``k <= k_max`` for which all ``l``-subsets of ``E_k(2,3)`` form an ``n``-blur."""
    from .structures import maddux_ek23
    for k in range(max(l, 1), k_max + 1):
        spec = l_subsets_blur(maddux_ek23(k), l, n, safe=safe)
        if check_blur(spec, strong).ok:
            return k
    return None


# -- blow up and blur -------------------------------------------------------------

@dataclass(frozen=True)
class BlownUpAtom:
    """``Id`` (when ``P`` is None) or the triplet ``(i, P, W)`` with ``P`` in ``W``."""

    i: int | None = None
    P: int | None = None
    W: frozenset | None = None

    @property
    def is_identity(self) -> bool:
        return self.P is None

    def name(self, R: RaAtomStructure, J: Sequence[frozenset]) -> str:
        if self.is_identity:
            return "Id"
        return f"({self.i},{R.names[self.P]},W{J.index(self.W)})"


def blown_up_atoms(spec: BlurSpec, N_trunc: int) -> list[BlownUpAtom]:
    out = [BlownUpAtom()]
    for i in range(N_trunc):
        for P in sorted(spec.I):
            for W in spec.J:
                if P in W:
                    out.append(BlownUpAtom(i, P, W))
    return out


def blow_up_and_blur(spec: BlurSpec, N_trunc: int, cap: int = DEFAULT_ATOM_CAP) -> RaAtomStructure:
    """Triplet atoms with indices below ``N_trunc``.

    A triple of triplets ``((i,P,S), (j,Q,Z), (k,R,W))`` is consistent when
    ``safe(S, Z, W)`` or when ``E(i, j, k)`` and ``(P, Q, R)`` is consistent in
    ``R``; a triple with ``Id`` is consistent when the other two entries are
    equal.  The table is then closed under the Peircean transforms.  Atoms of
    ``R`` must be self-converse.
    """
    if N_trunc < 1:
        raise StructuralError("N_trunc must be at least 1")
    R = spec.R
    if len(R.identity) != 1:
        raise StructuralError("blow-up needs a single identity atom")
    if any(R.converse[a] != a for a in R.atoms):
        raise StructuralError("blow-up needs self-converse atoms")
    atoms = blown_up_atoms(spec, N_trunc)
    size = len(atoms)
    if size > cap:
        raise StructuralError(f"{size} atoms exceeds cap {cap}")

    J = spec.J
    safe = np.zeros((len(J),) * 3, dtype=bool)
    for (a, b), g in good_targets(spec).items():
        for c in bits(g):
            safe[a, b, c] = True
    E = np.zeros((N_trunc,) * 3, dtype=bool)
    for i, j, k in itertools.product(range(N_trunc), repeat=3):
        E[i, j, k] = spec.e(i, j, k)

    trip = atoms[1:]
    ii = np.array([a.i for a in trip], dtype=int)
    pp = np.array([a.P for a in trip], dtype=int)
    ww = np.array([J.index(a.W) for a in trip], dtype=int)
    body = safe[np.ix_(ww, ww, ww)] | (E[np.ix_(ii, ii, ii)] & R.table[np.ix_(pp, pp, pp)])
    table = np.zeros((size,) * 3, dtype=bool)
    table[1:, 1:, 1:] = body
    for x in range(size):
        table[0, x, x] = table[x, 0, x] = table[x, x, 0] = True
    table = peircean_closure(table, list(range(size)))
    names = [a.name(R, J) for a in atoms]
    meta = {"alias": f"blur:{R.meta.get('alias', 'custom')}:{N_trunc}",
            "blur": {"base": list(R.names), "N_trunc": N_trunc, "spec": spec.to_json(),
                     "P": [None] + [R.names[a.P] for a in trip],
                     "index": [None] + [a.i for a in trip],
                     "W": [None] + [J.index(a.W) for a in trip]}}
    S = RaAtomStructure(names, [0], list(range(size)), table, meta)
    S.blown_up_atoms = atoms
    return S


def naive_blur_consistent(spec: BlurSpec, a: BlownUpAtom, b: BlownUpAtom, c: BlownUpAtom) -> bool:
    """The composition rule evaluated directly on three atoms (before closure)."""
    if a.is_identity or b.is_identity or c.is_identity:
        rest = [x for x in (a, b, c)]
        if sum(x.is_identity for x in rest) == 3:
            return True
        if sum(x.is_identity for x in rest) == 2:
            return False
        others = [x for x in rest if not x.is_identity]
        return others[0] == others[1]
    R = spec.R
    cm = _consistent_masks(R)
    if SAFE_RULES[spec.safe](cm, mask_of(a.W), mask_of(b.W), mask_of(c.W)):
        return True
    return spec.e(a.i, b.i, c.i) and bool(R.table[a.P, b.P, c.P])


# -- the embedding of R into the complex algebra ----------------------------------

def _theta(S: RaAtomStructure, R: RaAtomStructure) -> list[int]:
    info = S.meta.get("blur")
    if not info or info.get("base") != list(R.names):
        raise StructuralError("structure was not blown up from this relation algebra")
    theta = [0] * R.size
    for k, pname in enumerate(info["P"]):
        if pname is None:
            for e in R.identity:
                theta[e] |= 1 << k
        else:
            theta[R.index[pname]] |= 1 << k
    return theta


def check_embedding_witness(S: RaAtomStructure, R: RaAtomStructure) -> ValidationReport:
    """Check ``H^P ; H^Q = U{H^Z : Z <= P;Q}`` in the complex algebra of ``S``
    for all atoms ``P, Q`` of ``R`` (``H^Id`` is ``{Id}``)."""
    theta = _theta(S, R)
    rep = ValidationReport()
    for P in R.atoms:
        for Q in R.atoms:
            got = mask_of(S.compose_sets(bits(theta[P]), bits(theta[Q])))
            want = 0
            for Z in R.compose(P, Q):
                want |= theta[Z]
            if got != want:
                extra = [S.names[x] for x in bits(got & ~want)][:3]
                lost = [S.names[x] for x in bits(want & ~got)][:3]
                rep.add("H composition differs from R", (R.names[P], R.names[Q], tuple(extra),
                                                         tuple(lost)))
    return rep


def corrupt_triple(S: RaAtomStructure, R: RaAtomStructure, rng=None) -> tuple[RaAtomStructure, tuple]:
    """Copy of ``S`` with one consistent triple ``(a, b, c)`` redirected to
    ``(a, b, c')`` where ``c'`` projects onto an atom of ``R`` outside
    ``P_a ; P_b``.  Returns the copy and the two triples.  Without ``rng`` the
    first such triple is used, otherwise a random one."""
    info = S.meta["blur"]
    P = np.array([-1 if p is None else R.index[p] for p in info["P"]])
    real = P >= 0
    triples = np.argwhere(S.table & real[:, None, None] & real[None, :, None] & real[None, None, :])
    if rng is None:
        order = range(len(triples))
    else:
        # random probes first, then the rest in order
        order = itertools.chain((rng.randrange(len(triples)) for _ in range(64)), range(len(triples)))
    for k in order:
        a, b, c = (int(x) for x in triples[k])
        outside = [int(x) for x in np.flatnonzero(real & ~R.table[P[a], P[b], np.maximum(P, 0)])]
        if outside:
            c2 = outside[0] if rng is None else rng.choice(outside)
            table = S.table.copy()
            table[a, b, c] = False
            table[a, b, c2] = True
            T = RaAtomStructure(S.names, S.identity, S.converse, table, S.meta)
            return T, ((a, b, c), (a, b, c2))
    raise StructuralError("no triple can be corrupted")
