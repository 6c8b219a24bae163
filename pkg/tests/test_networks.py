import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atomgames.networks import (Hypernetwork, IllegalMove, Move, Network, ScWord,
                                canonical, canonical_key, check_hypernetwork, enumerate_networks,
                                equiv_off, eval_sc_word, exists_responses, extensions,
                                is_consistent, legal_moves, net_equiv_i, replacement,
                                single_node)
from atomgames.structures import StructuralError, blocked_ca, cs_atom_structure, one_atom_ca
from oracles import naive_consistent, naive_networks, punctured_cs

CS23 = cs_atom_structure(2, 3)
CS32 = cs_atom_structure(3, 2)
POOL = {
    "cs23": (CS23, enumerate_networks(CS23, 3)),
    "cs32": (CS32, enumerate_networks(CS32, 3)),
}


@pytest.mark.parametrize("S", [one_atom_ca(3), blocked_ca(3), CS23, CS32,
                               punctured_cs(3, 2, [2, 5])],
                         ids=["one", "blocked", "cs23", "cs32", "punctured"])
def test_enumeration_matches_naive_oracle(S):
    for k in range(1, 4):
        ours = {N.key() for N in enumerate_networks(S, k) if len(N.nodes) == k}
        naive = {(tuple(range(k)), tuple(lab[t] for t in itertools.product(range(k), repeat=S.n)))
                 for lab in naive_networks(S, range(k))}
        assert ours == naive


def test_consistency_reports_each_problem():
    S = CS23
    N = POOL["cs23"][1][-1]
    assert is_consistent(N).ok
    labels = dict(N.labels)
    t = next(t for t in labels if t[0] != t[1])
    labels[t] = S.index["00"]
    bad = Network(S, N.nodes, labels)
    rep = is_consistent(bad)
    assert not rep.ok
    assert any(r.startswith("diagonal") for r in rep.rules())
    assert naive_consistent(S, bad.nodes, bad.labels) is False


def test_missing_label_is_structural():
    with pytest.raises(StructuralError):
        is_consistent(Network(CS23, [0, 1], {(0, 0): 0}))


def test_json_round_trip_and_canonical_invariance():
    for S, nets in POOL.values():
        for N in nets[:: max(1, len(nets) // 40)]:
            assert Network.from_json(S, N.to_json()) == N
            perm = dict(zip(N.nodes, reversed(N.nodes)))
            assert canonical_key(N.relabel(perm)) == canonical_key(N)
            assert canonical(canonical(N)) == canonical(N)


def test_extensions_fix_requested_label():
    S = CS23
    base = single_node(S, S.index["00"])
    exts = extensions(base, 1, {(0, 1): S.index["01"]})
    assert [M.labels[(0, 1)] for M in exts] == [S.index["01"]]
    with pytest.raises(ValueError):
        extensions(base, 0)


# -- moves -------------------------------------------------------------------------------

def test_illegal_move_forfeits():
    S = CS23
    N = single_node(S, S.index["00"])
    # 11 is not in the same c_0 class as 00 (second coordinate differs)
    with pytest.raises(IllegalMove):
        exists_responses(N, Move((0, 0), 0, S.index["11"]), 3)


def test_existing_witness_comes_first():
    S = CS23
    N = next(M for M in POOL["cs23"][1] if len(M.nodes) == 2)
    t = (0, 1)
    a = N.labels[(1, 1)]
    resp = exists_responses(N, Move(t, 0, a), 3)
    assert resp[0] == N


def test_blocked_structure_has_no_response():
    S = blocked_ca(3)
    N = single_node(S, 0)
    assert exists_responses(N, Move((0, 0, 0), 0, 1), 4) == []


def test_reuse_targets_respect_remaining_coordinates():
    S = CS23
    N = next(M for M in POOL["cs23"][1] if len(M.nodes) == 3)
    with pytest.raises(IllegalMove):
        exists_responses(N, Move((0, 1), 0, N.labels[(0, 1)], 1), 3, reuse=True)
    with pytest.raises(IllegalMove):
        exists_responses(N, Move((0, 1), 0, N.labels[(0, 1)], 2), 3, reuse=False)
    moves = list(legal_moves(N, reuse=True, m=3))
    assert all(mv.target not in [x for j, x in enumerate(mv.tup) if j != mv.i] for mv in moves)


# -- the equivalences off a node ---------------------------------------------------------

@st.composite
def three_networks(draw):
    name = draw(st.sampled_from(sorted(POOL)))
    S, nets = POOL[name]
    i = draw(st.integers(0, 2))
    M = draw(st.sampled_from(nets))
    # bias towards related networks: rebuild M off i in a different way
    def neighbour(N):
        if draw(st.booleans()) or i not in N.nodes:
            return draw(st.sampled_from(nets))
        base = N.restrict(x for x in N.nodes if x != i)
        options = extensions(base, i)
        return draw(st.sampled_from(options)) if options else N
    L = neighbour(M)
    N = neighbour(L)
    return i, M, L, N


@settings(max_examples=1000, deadline=None)
@given(three_networks(), st.integers(0, 2))
def test_equivalence_off_a_node(data, j):
    i, M, L, N = data
    assert net_equiv_i(M, M, i)
    assert net_equiv_i(M, L, i) == net_equiv_i(L, M, i)
    if net_equiv_i(M, L, i) and net_equiv_i(L, N, i):
        assert net_equiv_i(M, N, i)
    assert net_equiv_i(M, L, i) == equiv_off(M, L, {i})
    # M =_i L =_j N implies M and N agree off {i, j}
    if net_equiv_i(M, L, i) and net_equiv_i(L, N, j):
        assert equiv_off(M, N, {i, j})


# -- sc-words ------------------------------------------------------------------------------

def tokens(m):
    pair = st.tuples(st.integers(0, m - 1), st.integers(0, m - 1))
    return st.one_of(pair.map(lambda p: ("s", p[0], p[1])),
                     st.integers(0, m - 1).map(lambda i: ("c", i)))


def compose(f, g):
    """``f`` after ``g`` as partial maps."""
    return {k: f[v] for k, v in g.items() if v in f}


@settings(max_examples=1000, deadline=None)
@given(st.integers(2, 6).flatmap(lambda m: st.tuples(
    st.just(m), st.lists(tokens(m), max_size=6), st.lists(tokens(m), max_size=6))))
def test_sc_words_compose(data):
    m, u, v = data
    w1, w2 = ScWord(tuple(u), m), ScWord(tuple(v), m)
    assert eval_sc_word(w1 + w2) == compose(eval_sc_word(w1), eval_sc_word(w2))


def test_single_substitution_is_a_replacement():
    assert eval_sc_word(ScWord((("s", 2, 0),), 4)) == replacement(0, 2, 4)
    assert eval_sc_word(ScWord((("c", 1),), 3)) == {0: 0, 2: 2}


def test_malformed_words_rejected():
    with pytest.raises(StructuralError):
        ScWord((("s", 0),), 3)
    with pytest.raises(StructuralError):
        ScWord((("c", 5),), 3)


# -- hypernetworks ------------------------------------------------------------------------

def test_uniform_hypernetwork_is_consistent():
    for N in POOL["cs32"][1][:30]:
        H = Hypernetwork.uniform(N, 4)
        assert check_hypernetwork(H).ok


def test_hyperlabels_must_avoid_atoms_and_cover_tuples():
    N = next(M for M in POOL["cs32"][1] if len(M.nodes) == 2)
    H = Hypernetwork.uniform(N, 4)
    clash = Hypernetwork(N, 4, H.hyperlabel, H.labels | {N.S.names[0]})
    assert "non-atomic labels overlap atoms" in check_hypernetwork(clash).rules()
    hl = dict(H.hyperlabel)
    del hl[(0,)]
    assert "hyperlabel missing" in check_hypernetwork(Hypernetwork(N, 4, hl, H.labels)).rules()
