import itertools
import random

import pytest

from atomgames.games import FORALL, Counterexample, GameConfig, verify_script
from atomgames.rainbow import (ColouredGraph, ConeMove, ConeScript, RainbowArena,
                               RainbowSignature, build_rainbow_ca, colour_name,
                               consistent_graphs, graph_consistent, parse_colour, reverse,
                               split_reds, triangle_violation, verify_theta_embedding)
from atomgames.games import IllegalMove
from atomgames.structures import StructuralError, validate_ca
from oracles import rainbow_graph_count

SIG = RainbowSignature.standard(3, 4, 3)


@pytest.fixture(scope="module")
def ca43():
    return build_rainbow_ca(3, SIG)


@pytest.fixture(scope="module")
def split2(ca43):
    return split_reds(ca43, 2)


def test_colour_names_round_trip():
    for c in SIG.edge_colours() + [("r", 0, 2, 3)]:
        assert parse_colour(colour_name(c)) == c
    with pytest.raises(StructuralError):
        parse_colour("blue")


def test_reds_reverse_with_the_edge():
    assert reverse(("r", 0, 1, 0)) == ("r", 1, 0, 0)
    g = ColouredGraph([0, 1], {(1, 0): ("r", 2, 0, 0)})
    assert g.colour(0, 1) == ("r", 0, 2, 0)


@pytest.mark.parametrize("edges, rule", [
    ((("g", 1), ("g0", 1), ("g0", 2)), "green triangle"),
    ((("g", 1), ("g", 1), ("w", 1)), "(g1, g1, w1)"),
    ((("g0", 1), ("w", 0), ("g0", 3)), "(g0, g0, w0)"),
    ((("r", 0, 1, 0), ("r", 1, 2, 0), ("r", 0, 1, 0)), "red indices do not match"),
])
def test_forbidden_triangles(edges, rule):
    assert triangle_violation(SIG, "base", *edges) == rule


def test_allowed_triangles():
    assert triangle_violation(SIG, "base", ("r", 0, 1, 0), ("r", 1, 2, 0), ("r", 0, 2, 0)) is None
    assert triangle_violation(SIG, "base", ("g", 1), ("g", 1), ("w", 0)) is None
    # superscripts are ignored when matching red indices
    sig = RainbowSignature(3, (1, 2), 3, copies=2)
    assert triangle_violation(sig, "split-red", ("r", 0, 1, 1), ("r", 1, 2, 0),
                              ("r", 0, 2, 1)) is None


def test_order_preserving_rule():
    sig = RainbowSignature.zn(3, 3, 3)
    # apex a with tinted greens to b and c, red b->c
    ok = triangle_violation(sig, "zn-order", ("g0", -2), ("r", 0, 1, 0), ("g0", -1))
    bad = triangle_violation(sig, "zn-order", ("g0", -1), ("r", 0, 1, 0), ("g0", -2))
    same = triangle_violation(sig, "zn-order", ("g0", -1), ("r", 0, 1, 0), ("g0", -1))
    assert ok is None
    assert bad == same == "tints and reds not order preserving"


def test_shade_rules_need_the_shade():
    plain = triangle_violation(SIG, "base", ("r", 0, 1, 0), ("w", 0), ("w", 0))
    assert plain is None
    shaded = RainbowSignature.standard(3, 4, 3, shade=True)
    assert triangle_violation(shaded, "base", ("r", 0, 1, 0), ("rho",), ("rho",)) == "(r, rho, rho)"
    assert triangle_violation(shaded, "base", ("r", 0, 1, 0), ("r", 1, 2, 0),
                              ("rho",)) == "(r, r*, rho)"


@pytest.mark.parametrize("v", [2, 3])
def test_graph_counts_match_independent_enumerator(v):
    ours = sum(1 for _ in consistent_graphs(SIG, v))
    assert ours == rainbow_graph_count(3, SIG.tints, SIG.reds, v)


@pytest.mark.parametrize("N", [2, 3])
def test_zn_counts_match_independent_enumerator(N):
    sig = RainbowSignature.zn(3, N + 1, N)
    ours = sum(1 for _ in consistent_graphs(sig, 3))
    assert ours == rainbow_graph_count(3, sig.tints, N, 3, order_preserving=True)


def test_every_enumerated_graph_passes_the_checker():
    sig = RainbowSignature.standard(3, 2, 2)
    graphs = list(consistent_graphs(sig, 3))
    assert graphs and all(graph_consistent(g, sig).ok for g in graphs)


def test_checker_reports_missing_yellow_and_unknown_colour():
    g = ColouredGraph([0, 1], {(0, 1): ("w", 0)})
    assert "face without yellow label" in graph_consistent(g, SIG).rules()
    with pytest.raises(StructuralError):
        graph_consistent(ColouredGraph([0, 1], {(0, 1): ("w", 7)}), SIG)


def test_ca43_shape(ca43):
    assert ca43.size == 1851
    sizes = [sum(1 for a in ca43.rainbow_atoms if max(a.pattern) + 1 == v) for v in (1, 2, 3)]
    assert sizes == [1, 39, 1811]
    assert validate_ca(ca43).ok


def test_dimension_mismatch():
    with pytest.raises(StructuralError):
        build_rainbow_ca(4, SIG)


def test_atom_cap():
    with pytest.raises(StructuralError):
        build_rainbow_ca(3, SIG, cap=100)


# -- the cone game -----------------------------------------------------------------

@pytest.mark.parametrize("reuse", [False, True])
def test_all_tints_win_on_six_nodes(reuse):
    arena = RainbowArena(SIG, 6, reuse)
    out = verify_script(arena, GameConfig(6, None, reuse), ConeScript(SIG), 10)
    assert out.winner == FORALL
    assert out.depth == 3

    def closed(node):
        return all(closed(c) for c in node["children"]) and "depth" in node

    assert closed(out.witness["tree"])


@pytest.mark.parametrize("tints", [(1,), (1, 2), (2, 3, 4), (1, 2, 3, 3)])
def test_fewer_tints_leave_a_surviving_defender(tints):
    for reuse in (False, True):
        res = verify_script(RainbowArena(SIG, 6, reuse), GameConfig(6, None, reuse),
                            ConeScript(SIG, tints), 8)
        assert isinstance(res, Counterexample)
        assert res.play[0]["opening"]["vertices"] == [0, 1, 2]


def test_five_reusable_nodes_are_not_enough():
    # overwriting the oldest apex lets the defender recycle tints forever
    res = verify_script(RainbowArena(SIG, 5, True), GameConfig(5, None, True), ConeScript(SIG), 8)
    assert isinstance(res, Counterexample)
    # without reuse the defender simply runs out of fresh nodes
    out = verify_script(RainbowArena(SIG, 5), GameConfig(5, None), ConeScript(SIG), 8)
    assert out.winner == FORALL


def test_cone_moves_are_checked():
    arena = RainbowArena(SIG, 6)
    g = arena.opening(1)
    with pytest.raises(IllegalMove):
        arena.responses(g, ConeMove((0,), 2))
    with pytest.raises(IllegalMove):
        arena.responses(g, ConeMove((0, 1), 9))
    with pytest.raises(IllegalMove):
        arena.responses(g, ConeMove((0, 1), 2, target=2))
    # the opening apex already witnesses its own tint
    assert arena.responses(g, ConeMove((0, 1), 1))[0] == g


def test_zn_depth_grows_with_truncation():
    depths = []
    for N in (2, 3, 4):
        sig = RainbowSignature.zn(3, N + 1, N)
        script = ConeScript(sig, tuple(range(0, -N - 2, -1)))
        out = verify_script(RainbowArena(sig, 6, True), GameConfig(6, None, True), script, 12)
        assert out.winner == FORALL
        depths.append(out.depth)
    assert depths == sorted(depths)
    assert depths == [2, 3, 4]


# -- split reds ------------------------------------------------------------------------

def test_split_copy_counts(ca43, split2):
    S2, copy_map = split2
    for a, atom in enumerate(ca43.rainbow_atoms):
        reds = sum(c[0] == "r" for c in atom.graph.edges.values())
        assert bin(copy_map[a]).count("1") == 2 ** reds
    assert validate_ca(S2).ok


def test_theta_is_an_embedding(ca43, split2):
    S2, copy_map = split2
    assert verify_theta_embedding(ca43, S2, copy_map).ok
    S1, cm1 = split_reds(ca43, 1)
    assert S1.size == ca43.size and verify_theta_embedding(ca43, S1, cm1).ok


def test_theta_breaks_when_a_copy_moves(ca43, split2):
    S2, copy_map = split2
    rng = random.Random(2)
    multi = [a for a in ca43.atoms if bin(copy_map[a]).count("1") > 1]
    for _ in range(5):
        a = rng.choice(multi)
        b = rng.choice([x for x in ca43.atoms if x != a])
        bit = copy_map[a] & -copy_map[a]
        bad = list(copy_map)
        bad[a] &= ~bit
        bad[b] |= bit
        assert not verify_theta_embedding(ca43, S2, bad).ok


def test_split_needs_a_rainbow_base():
    from atomgames.structures import one_atom_ca
    with pytest.raises(StructuralError):
        split_reds(one_atom_ca(3), 2)
