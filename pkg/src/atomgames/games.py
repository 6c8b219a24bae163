"""Atomic games on networks, scripted-strategy verification and EF pebble games."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Protocol

from .networks import (IllegalMove, Move, Network, canonical_key, enumerate_networks,
                       exists_responses, legal_moves)
from .structures import CaAtomStructure, StructuralError

EXISTS = "exists"
FORALL = "forall"
UNDECIDED = "undecided: budget"

DEFAULT_BUDGET = 200_000


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class GameConfig:
    """``rounds=None`` means omega rounds."""
    m: int
    rounds: int | None = None
    reuse: bool = False

    def check(self, n: int) -> None:
        if self.m < n:
            raise StructuralError(f"node budget m={self.m} is below the dimension {n}")
        if self.rounds is not None and self.rounds < 0:
            raise StructuralError("rounds must be non-negative")

    def to_json(self) -> dict:
        return {"m": self.m, "rounds": "omega" if self.rounds is None else self.rounds,
                "reuse": self.reuse}


@dataclass
class GameOutcome:
    winner: str
    witness: Any = None
    depth: int | None = None
    stats: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"winner": self.winner, "depth": self.depth, "stats": self.stats,
                "witness": self.witness}


# -- exact solving on networks -------------------------------------------------

class NetworkArena:
    """Positions are canonical network keys with at most ``m`` nodes."""

    def __init__(self, S: CaAtomStructure, m: int, reuse: bool = False,
                 budget: int = DEFAULT_BUDGET):
        self.S = S
        self.m = m
        self.reuse = reuse
        self.budget = budget
        self._positions: list[tuple] | None = None
        self._moves: dict[tuple, list[tuple[Move, tuple[tuple, ...]]]] = {}

    def positions(self) -> list[tuple]:
        if self._positions is None:
            seen: dict[tuple, None] = {}
            level = [Network(self.S, [], {})]
            from .networks import extensions
            for k in range(self.m):
                nxt = []
                for N in level:
                    for M in extensions(N, k):
                        key = canonical_key(M)
                        if key not in seen:
                            seen[key] = None
                            nxt.append(Network.from_key(self.S, key))
                            if len(seen) > self.budget:
                                raise BudgetExceeded(f"more than {self.budget} positions")
                level = nxt
            self._positions = sorted(seen)
        return self._positions

    def network(self, key: tuple) -> Network:
        return Network.from_key(self.S, key)

    def initial(self, atom: int) -> list[tuple]:
        return [k for k in self.positions() if atom in k[1]]

    def moves(self, key: tuple) -> list[tuple[Move, tuple[tuple, ...]]]:
        """Each legal move with the canonical keys of all its responses."""
        got = self._moves.get(key)
        if got is None:
            N = self.network(key)
            got = []
            for mv in legal_moves(N, self.reuse, self.m):
                resp = exists_responses(N, mv, self.m, self.reuse)
                got.append((mv, tuple(sorted({canonical_key(M) for M in resp}))))
            self._moves[key] = got
        return got


def solve_game(S: CaAtomStructure, cfg: GameConfig, budget: int = DEFAULT_BUDGET,
               arena: NetworkArena | None = None) -> GameOutcome:
    """Decide the atomic game on ``S``.

    The opening is one position per atom: the challenger names an atom and the
    defender may open with any network labelling some tuple by it.  Finite
    ``rounds`` counts cylindrifier moves after the opening; with ``rounds=0``
    the defender wins outright.  Omega rounds are decided as a safety game: the
    defender's winning region is the greatest fixpoint of "every move has a
    response inside the region", computed in synchronized deletion rounds.
    """
    cfg.check(S.n)
    if arena is None or (arena.S, arena.m, arena.reuse) != (S, cfg.m, cfg.reuse):
        arena = NetworkArena(S, cfg.m, cfg.reuse, budget)
    try:
        if cfg.rounds is None:
            return _solve_omega(arena)
        return _solve_finite(arena, cfg.rounds)
    except BudgetExceeded as exc:
        return GameOutcome(UNDECIDED, None, stats={"reason": str(exc)})


def _solve_omega(arena: NetworkArena) -> GameOutcome:
    S = arena.S
    positions = arena.positions()
    for key in positions:
        arena.moves(key)
    alive = set(positions)
    deleted_at: dict[tuple, int] = {}
    rnd = 0
    while True:
        rnd += 1
        doomed = [k for k in sorted(alive)
                  if any(not any(r in alive for r in resp) for _, resp in arena.moves(k))]
        if not doomed:
            break
        for k in doomed:
            deleted_at[k] = rnd
        alive.difference_update(doomed)
    losing_atoms = [a for a in S.atoms if not any(k in alive for k in arena.initial(a))]
    stats = {"positions": len(positions), "surviving": len(alive), "deletion_rounds": rnd - 1}
    if not losing_atoms:
        return GameOutcome(EXISTS, {"surviving": [_key_json(k) for k in sorted(alive)]},
                           stats=stats)
    a = losing_atoms[0]
    trees = [_omega_tree(arena, k, deleted_at) for k in arena.initial(a)]
    depth = max((t["depth"] for t in trees), default=0)
    return GameOutcome(FORALL, {"atom": S.names[a], "openings": trees}, depth=depth, stats=stats)


def _omega_tree(arena: NetworkArena, key: tuple, deleted_at: dict) -> dict:
    r = deleted_at[key]
    for mv, resp in arena.moves(key):
        if all(deleted_at.get(x, 10 ** 9) < r for x in resp):
            kids = [{"response": _key_json(x), **_omega_tree(arena, x, deleted_at)} for x in resp]
            depth = 1 + max((c["depth"] for c in kids), default=0)
            return {"position": _key_json(key), "move": mv.to_json(arena.S),
                    "children": kids, "depth": depth}
    raise AssertionError("deleted position without a killing move")


def _solve_finite(arena: NetworkArena, rounds: int) -> GameOutcome:
    S = arena.S
    if rounds == 0:
        return GameOutcome(EXISTS, {"surviving": []}, stats={"positions": 0})
    memo: dict[tuple[tuple, int], bool] = {}

    def wins(key, k):
        if k == 0:
            return True
        hit = memo.get((key, k))
        if hit is None:
            hit = all(any(wins(r, k - 1) for r in resp) for _, resp in arena.moves(key))
            memo[(key, k)] = hit
        return hit

    losing = []
    for a in S.atoms:
        if not any(wins(k, rounds) for k in arena.initial(a)):
            losing.append(a)
    stats = {"positions": len(arena.positions()), "evaluated": len(memo)}
    if not losing:
        good = sorted({k for (k, r), v in memo.items() if v and r == rounds})
        return GameOutcome(EXISTS, {"surviving": [_key_json(k) for k in good]}, stats=stats)
    a = losing[0]

    def tree(key, k):
        for mv, resp in arena.moves(key):
            if not any(wins(r, k - 1) for r in resp):
                kids = [{"response": _key_json(r), **tree(r, k - 1)} for r in resp]
                return {"position": _key_json(key), "move": mv.to_json(S), "children": kids,
                        "depth": 1 + max((c["depth"] for c in kids), default=0)}
        raise AssertionError("losing position without a winning move")

    trees = [tree(k, rounds) for k in arena.initial(a)]
    depth = max((t["depth"] for t in trees), default=0)
    return GameOutcome(FORALL, {"atom": S.names[a], "openings": trees}, depth=depth, stats=stats)


def _key_json(key: tuple) -> list:
    nodes, labs = key
    return [list(nodes), list(labs)]


def _key_from_json(obj) -> tuple:
    return (tuple(obj[0]), tuple(obj[1]))


def audit_outcome(S: CaAtomStructure, cfg: GameConfig, outcome: GameOutcome) -> bool:
    """Replay a witness through the move rules, independently of the solver's tables."""
    if outcome.winner == UNDECIDED:
        return True
    if outcome.winner == EXISTS:
        if cfg.rounds == 0:
            return True
        region = {_key_from_json(k) for k in outcome.witness["surviving"]}
        if cfg.rounds is not None:
            # finite games: the region must cover every atom; depth is bounded by rounds
            return all(any(a in k[1] for k in region) for a in S.atoms)
        for key in region:
            N = Network.from_key(S, key)
            for mv in legal_moves(N, cfg.reuse, cfg.m):
                resp = exists_responses(N, mv, cfg.m, cfg.reuse)
                if not any(canonical_key(M) in region for M in resp):
                    return False
        return all(any(a in k[1] for k in region) for a in S.atoms)

    def check(node) -> bool:
        N = Network.from_key(S, _key_from_json(node["position"]))
        mj = node["move"]
        mv = Move(tuple(mj["tuple"]), mj["i"], S.index[mj["atom"]], mj["target"])
        try:
            resp = exists_responses(N, mv, cfg.m, cfg.reuse)
        except IllegalMove:
            return False
        keys = sorted({canonical_key(M) for M in resp})
        if keys != sorted(_key_from_json(c["response"]) for c in node["children"]):
            return False
        return all(check(c) for c in node["children"])

    a = S.index[outcome.witness["atom"]]
    arena = NetworkArena(S, cfg.m, cfg.reuse)
    openings = {_key_from_json(t["position"]) for t in outcome.witness["openings"]}
    if openings != set(arena.initial(a)):
        return False
    if cfg.rounds is not None and (outcome.depth or 0) > cfg.rounds:
        return False
    return all(check(t) for t in outcome.witness["openings"])


# -- scripted strategies --------------------------------------------------------

class Arena(Protocol):
    def responses(self, position, move) -> list: ...
    def key(self, position) -> Any: ...
    def describe(self, position) -> Any: ...
    def describe_move(self, move) -> Any: ...


class StrategyScript(Protocol):
    """Deterministic challenger.  ``opening`` gives the first position;
    ``next_move`` sees the play so far and returns a move or None (gives up)."""

    def opening(self, arena) -> Any: ...
    def next_move(self, arena, history: list) -> Any: ...


@dataclass
class Counterexample:
    play: list
    reason: str

    def to_json(self) -> dict:
        return {"play": self.play, "reason": self.reason}


class NetworkPlay:
    """Adapter so that scripts can be verified against plain network games."""

    def __init__(self, S: CaAtomStructure, cfg: GameConfig):
        self.S = S
        self.cfg = cfg

    def responses(self, position: Network, move: Move) -> list[Network]:
        return exists_responses(position, move, self.cfg.m, self.cfg.reuse)

    def key(self, position: Network):
        return canonical_key(position)

    def describe(self, position: Network):
        return position.to_json()

    def describe_move(self, move: Move):
        return move.to_json(self.S)


def verify_script(arena, cfg: GameConfig, script, depth_bound: int):
    """Explore every defender reply against a deterministic challenger.

    Returns a ``GameOutcome`` with a closed proof tree when every branch ends with
    the defender stuck within ``depth_bound`` challenger moves (and within
    ``cfg.rounds`` when finite), otherwise the first surviving defender play as a
    ``Counterexample``.  Replies are explored in canonical order.
    """
    limit = depth_bound if cfg.rounds is None else min(depth_bound, cfg.rounds)
    start = script.opening(arena)
    stats = {"nodes": 0}

    def explore(history: list, play: list):
        stats["nodes"] += 1
        position = history[-1]
        if len(history) - 1 >= limit:
            return None, Counterexample(play, f"defender survives {limit} moves")
        move = script.next_move(arena, history)
        if move is None:
            return None, Counterexample(play, "script has no move")
        try:
            replies = arena.responses(position, move)
        except IllegalMove as exc:
            raise IllegalMove(f"script played an illegal move at {arena.describe(position)}: {exc}")
        replies = sorted(replies, key=arena.key)
        node = {"move": arena.describe_move(move), "children": []}
        depth = 1
        for reply in replies:
            step = play + [{"move": arena.describe_move(move), "reply": arena.describe(reply)}]
            sub, cex = explore(history + [reply], step)
            if cex is not None:
                return None, cex
            node["children"].append({"reply": arena.describe(reply), **sub})
            depth = max(depth, 1 + sub["depth"])
        node["depth"] = depth
        return node, None

    tree, cex = explore([start], [{"opening": arena.describe(start)}])
    if cex is not None:
        return cex
    return GameOutcome(FORALL, {"opening": arena.describe(start), "tree": tree},
                       depth=tree["depth"], stats=stats)


def audit_proof_tree(arena, script, witness: dict) -> bool:
    """Replay a proof tree from ``verify_script`` move by move.

    The script is asked again for each move and the defender replies are
    recomputed by the arena; the tree must list exactly those replies and every
    leaf must be a position where the defender has no reply.
    """
    start = script.opening(arena)
    if witness.get("opening") != arena.describe(start):
        return False

    def check(history, node):
        move = script.next_move(arena, history)
        if move is None or node.get("move") != arena.describe_move(move):
            return False
        try:
            replies = sorted(arena.responses(history[-1], move), key=arena.key)
        except IllegalMove:
            return False
        children = node.get("children", [])
        if [arena.describe(r) for r in replies] != [c.get("reply") for c in children]:
            return False
        return all(check(history + [r], c) for r, c in zip(replies, children))

    return check([start], witness.get("tree", {}))


class FixedScript:
    """Script given by a function of the current position only."""

    def __init__(self, start, choose: Callable[[Any], Any]):
        self.start = start
        self.choose = choose

    def opening(self, arena):
        return self.start

    def next_move(self, arena, history):
        return self.choose(history[-1])


def tree_depth(node: dict) -> int:
    return node.get("depth", 0)


# -- Ehrenfeucht-Fraisse forth game ----------------------------------------------

def _adjacency(G) -> tuple[int, list[frozenset]]:
    if hasattr(G, "nodes") and hasattr(G, "edges"):
        verts = sorted(G.nodes)
        idx = {v: k for k, v in enumerate(verts)}
        adj = [set() for _ in verts]
        for u, v in G.edges:
            if u != v:
                adj[idx[u]].add(idx[v])
                adj[idx[v]].add(idx[u])
        return len(verts), [frozenset(s) for s in adj]
    size, edges = G
    adj = [set() for _ in range(size)]
    for u, v in edges:
        if u != v:
            adj[u].add(v)
            adj[v].add(u)
    return size, [frozenset(s) for s in adj]


def ef_pebble(p: int, r: int, G, H) -> str:
    """Winner of the forth pebble game with ``p`` pebble pairs and ``r`` rounds.

    The challenger places (or, with all pairs down, moves) a pebble on ``G``;
    the defender answers in ``H`` and must keep the pebbled map a partial
    isomorphism.  Graphs are networkx graphs or ``(size, edges)`` pairs.
    """
    if p < 0 or r < 0:
        raise ValueError("pebbles and rounds must be non-negative")
    ng, adj_g = _adjacency(G)
    nh, adj_h = _adjacency(H)

    def ok(pairs, g, h) -> bool:
        for g2, h2 in pairs:
            if (g2 == g) != (h2 == h):
                return False
            if (g2 in adj_g[g]) != (h2 in adj_h[h]):
                return False
        return True

    memo: dict = {}

    def defender_wins(pairs: frozenset, k: int) -> bool:
        if k == 0:
            return True
        key = (pairs, k)
        if key in memo:
            return memo[key]
        if len(pairs) < p:
            bases = [pairs]
        else:
            bases = [pairs - {pr} for pr in pairs]
        result = True
        if p == 0:
            memo[key] = True
            return True
        for base in bases:
            for g in range(ng):
                if not any(ok(base, g, h) and defender_wins(base | {(g, h)}, k - 1)
                           for h in range(nh)):
                    result = False
                    break
            if not result:
                break
        memo[key] = result
        return result

    return EXISTS if defender_wins(frozenset(), r) else FORALL


def ef_min_rounds(p: int, G, H, max_rounds: int) -> int | None:
    """Least number of rounds in which the challenger wins, or None up to ``max_rounds``."""
    for r in range(max_rounds + 1):
        if ef_pebble(p, r, G, H) == FORALL:
            return r
    return None


def complete_graph(k: int) -> tuple[int, list[tuple[int, int]]]:
    return k, list(itertools.combinations(range(k), 2))
