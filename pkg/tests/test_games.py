import random

import networkx as nx
import pytest

from atomgames.games import (EXISTS, FORALL, UNDECIDED, Counterexample, FixedScript,
                             GameConfig, NetworkArena, NetworkPlay, audit_outcome,
                             complete_graph, ef_min_rounds, ef_pebble, solve_game,
                             verify_script)
from atomgames.networks import Move, single_node
from atomgames.structures import StructuralError, blocked_ca, cs_atom_structure, one_atom_ca
from oracles import NaiveGame, punctured_cs, random_loose_ca

NAMED = [one_atom_ca(3), blocked_ca(3), cs_atom_structure(3, 2)]


def test_one_atom_defender_wins_forever():
    for m in (3, 4, 5):
        out = solve_game(one_atom_ca(3), GameConfig(m, None, False))
        assert out.winner == EXISTS
        assert audit_outcome(one_atom_ca(3), GameConfig(m, None, False), out)


def test_blocked_structure_lost_in_one_round():
    S = blocked_ca(3)
    assert solve_game(S, GameConfig(4, 0)).winner == EXISTS
    out = solve_game(S, GameConfig(4, 1))
    assert out.winner == FORALL and out.depth == 1
    assert audit_outcome(S, GameConfig(4, 1), out)


def test_budget_gives_undecided():
    out = solve_game(cs_atom_structure(3, 3), GameConfig(4, None), budget=5)
    assert out.winner == UNDECIDED


def test_bad_configuration():
    with pytest.raises(StructuralError):
        solve_game(one_atom_ca(3), GameConfig(2, 1))
    with pytest.raises(StructuralError):
        solve_game(one_atom_ca(3), GameConfig(4, -1))


@pytest.mark.parametrize("S", NAMED + [cs_atom_structure(3, 3)],
                         ids=["one", "blocked", "cs32", "cs33"])
@pytest.mark.parametrize("m", [3, 4])
@pytest.mark.parametrize("reuse", [False, True])
def test_agrees_with_naive_minimax(S, m, reuse):
    naive = NaiveGame(S, m, reuse)
    for k in range(4):
        cfg = GameConfig(m, k, reuse)
        out = solve_game(S, cfg)
        assert out.winner == naive.winner(k)
        assert audit_outcome(S, cfg, out)


def test_agrees_with_naive_minimax_on_random_structures():
    rng = random.Random(7)
    for trial in range(12):
        if trial % 2:
            S = punctured_cs(3, 2, rng.sample(range(8), rng.randint(1, 3)))
        else:
            S = random_loose_ca(rng, 3, rng.randint(5, 7), rng.randint(1, 3))
        for reuse in (False, True):
            naive = NaiveGame(S, 3, reuse)
            for k in range(3):
                assert solve_game(S, GameConfig(3, k, reuse)).winner == naive.winner(k)


def test_more_rounds_never_help_the_defender():
    rng = random.Random(3)
    for _ in range(10):
        S = punctured_cs(3, 2, rng.sample(range(8), 2))
        wins = [solve_game(S, GameConfig(4, k)).winner for k in range(4)]
        first = wins.index(FORALL) if FORALL in wins else 4
        assert all(w == FORALL for w in wins[first:])


def test_forged_witness_is_rejected():
    S = blocked_ca(3)
    cfg = GameConfig(4, 1)
    out = solve_game(S, cfg)
    out.witness["openings"][0]["children"] = [{"response": [[0], [0]], "depth": 0,
                                               "children": []}]
    assert not audit_outcome(S, cfg, out)


# -- scripted play ------------------------------------------------------------------

def test_script_against_blocked_structure():
    S = blocked_ca(3)
    cfg = GameConfig(4, None)
    script = FixedScript(single_node(S, 0), lambda N: Move((0, 0, 0), 0, 1))
    out = verify_script(NetworkPlay(S, cfg), cfg, script, 3)
    assert out.winner == FORALL and out.depth == 1
    assert out.witness["tree"]["children"] == []


def test_script_that_cannot_win_gives_counterexample():
    S = one_atom_ca(3)
    cfg = GameConfig(4, None)
    script = FixedScript(single_node(S, 0), lambda N: Move((0, 0, 0), 1, 0))
    res = verify_script(NetworkPlay(S, cfg), cfg, script, 4)
    assert isinstance(res, Counterexample)
    assert "survives" in res.reason
    assert len(res.play) == 5


def test_arena_positions_are_canonical():
    arena = NetworkArena(cs_atom_structure(3, 2), 3)
    keys = arena.positions()
    assert len(keys) == len(set(keys))


# -- pebble games -----------------------------------------------------------------------

@pytest.mark.parametrize("n", [3, 4, 5])
def test_cliques_need_n_plus_one_rounds(n):
    K1, K = complete_graph(n + 1), complete_graph(n)
    assert ef_pebble(n + 1, n + 1, K1, K) == FORALL
    assert ef_pebble(n + 1, n, K1, K) == EXISTS
    assert ef_min_rounds(n + 1, K1, K, n + 2) == n + 1


def test_pebble_game_matches_named_pebble_oracle():
    from oracles import naive_pebble
    rng = random.Random(11)
    for _ in range(25):
        G = nx.gnp_random_graph(rng.randint(2, 4), 0.5, seed=rng.randrange(10 ** 6))
        H = nx.gnp_random_graph(rng.randint(2, 4), 0.5, seed=rng.randrange(10 ** 6))
        p, r = rng.randint(1, 3), rng.randint(0, 3)
        assert ef_pebble(p, r, G, H) == naive_pebble(p, r, G, H)


def test_defender_wins_on_equal_graphs():
    rng = random.Random(5)
    for _ in range(10):
        G = nx.gnp_random_graph(6, 0.4, seed=rng.randrange(10 ** 6))
        assert ef_pebble(3, 3, G, G) == EXISTS


def test_negative_pebbles_rejected():
    with pytest.raises(ValueError):
        ef_pebble(-1, 2, complete_graph(2), complete_graph(2))
