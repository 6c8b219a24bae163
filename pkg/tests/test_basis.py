import itertools
from collections import defaultdict

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atomgames.basis import (NONE, audit_basis, audit_relational_basis, basic_matrices, find_basis,
                             find_hyperbasis, find_relational_basis, mat_n,
                             project_hyperbasis)
from atomgames.games import EXISTS as E_WINS, UNDECIDED, GameConfig, solve_game
from atomgames.structures import (RaAtomStructure, StructuralError, blocked_ca,
                                  cs_atom_structure, maddux_ek23, one_atom_ca, one_atom_ra,
                                  validate_ca, validate_ra)
from oracles import loose_ca_family, naive_matrix_count

LOOSE = loose_ca_family(3, 4)
# structures where saturation deletes some networks and keeps others
PARTIAL = [S for S in LOOSE
           if 0 < find_basis(S, 4).stats["deleted"] < find_basis(S, 4).stats["candidates"]]


def test_partial_instances_exist():
    assert len(PARTIAL) > 50


@pytest.mark.parametrize("m", [4, 5, 6])
def test_one_atom_has_every_kind_of_basis(m):
    S = one_atom_ca(3)
    assert find_basis(S, m).exists
    assert find_hyperbasis(S, m).exists
    assert find_relational_basis(one_diversity_atom(), m).exists


def one_diversity_atom():
    """``Id`` and ``a`` with every triple consistent except those forced
    otherwise by the identity."""
    table = np.zeros((2, 2, 2), dtype=bool)
    for x, y, z in itertools.product(range(2), repeat=3):
        ids = (x, y, z).count(0)
        table[x, y, z] = ids == 0 or ids == 3 or (ids == 1 and (x, y, z).count(1) == 2)
    return RaAtomStructure(["Id", "a"], [0], [0, 1], table)


def test_one_diversity_atom_is_a_relation_algebra():
    assert validate_ra(one_diversity_atom()).ok


def test_blocked_structure_has_none_after_one_deletion():
    res = find_basis(blocked_ca(3), 4)
    assert res.status == NONE
    assert res.stats["deleted"] == 1
    assert "e" in res.trace[-1]["uncovered"]


def test_dimension_and_kind_checked():
    with pytest.raises(StructuralError):
        find_basis(one_atom_ca(3), 3)
    with pytest.raises(StructuralError):
        find_basis(one_atom_ca(3), 4, kind="flat")
    with pytest.raises(StructuralError):
        find_relational_basis(one_atom_ra(), 2)


def test_budget():
    assert find_basis(cs_atom_structure(3, 3), 4, budget=3).status == UNDECIDED
    assert find_relational_basis(maddux_ek23(3), 5, budget=100).status == UNDECIDED


@pytest.mark.parametrize("S", [cs_atom_structure(3, 2), cs_atom_structure(3, 3),
                               cs_atom_structure(2, 3)], ids=["cs32", "cs33", "cs23"])
def test_set_algebras_have_audited_bases(S):
    res = find_basis(S, S.n + 2)
    assert res.exists
    assert audit_basis(S, res.members, S.n + 2) == []


def test_audit_notices_a_missing_member():
    S = cs_atom_structure(3, 2)
    res = find_basis(S, 4)
    bigger = [M for M in res.members if len(M.nodes) > 1]
    assert audit_basis(S, [M for M in res.members if M not in bigger], 4)


def test_hyperbasis_projects_to_a_basis_on_the_loose_family():
    for S in LOOSE[::3] + PARTIAL:
        for m in (4, 5):
            hyper = find_hyperbasis(S, m)
            plain = find_basis(S, m)
            if hyper.exists:
                assert plain.exists
                assert audit_basis(S, project_hyperbasis(S, hyper.members), m) == []


@pytest.mark.parametrize("n, base, m", [(2, 2, 3), (2, 3, 4), (3, 2, 5), (3, 3, 4)])
def test_hyperbasis_of_a_set_algebra(n, base, m):
    S = cs_atom_structure(n, base)
    hyper = find_hyperbasis(S, m)
    # one member for each way of placing the m nodes in the base
    assert hyper.exists and hyper.stats["candidates"] == base ** m
    assert audit_basis(S, project_hyperbasis(S, hyper.members), m) == []


def test_too_few_nodes_for_the_base():
    S = cs_atom_structure(2, 4)
    assert find_hyperbasis(S, 3).status == find_basis(S, 3).status == NONE


def test_basis_matches_the_unbounded_game():
    cases = [(S, 4) for S in PARTIAL[:40]] + [(mat_n(maddux_ek23(2), 3), m) for m in (4, 5)]
    for S, m in cases:
        game = solve_game(S, GameConfig(m, None, False))
        assert find_basis(S, m).exists == (game.winner == E_WINS)


# -- confluence --------------------------------------------------------------------------

def summary(res):
    deleted = sorted(repr(t["network"]) for t in res.trace if "network" in t)
    return res.status, [M.key() for M in res.members], deleted


@settings(max_examples=1000, deadline=None)
@given(st.one_of(st.sampled_from(PARTIAL), st.sampled_from(LOOSE)),
       st.sampled_from([4, 5]), st.sampled_from(["basis", "hyperbasis"]),
       st.integers(0, 2 ** 32))
def test_saturation_is_confluent(S, m, kind, seed):
    assert summary(find_basis(S, m, kind, schedule=seed)) == summary(find_basis(S, m, kind))


def test_relational_saturation_is_confluent():
    R = maddux_ek23(2)
    for m in (3, 4, 5, 6):
        base = find_relational_basis(R, m)
        for seed in range(5):
            again = find_relational_basis(R, m, schedule=seed)
            assert (again.status, again.members) == (base.status, base.members)


# -- relational bases --------------------------------------------------------------------

def colourings_without_monochromatic_triangle(k, m):
    edges = list(itertools.combinations(range(m), 2))
    count = 0
    for col in itertools.product(range(k), repeat=len(edges)):
        c = dict(zip(edges, col))
        count += all(not (c[x, y] == c[y, z] == c[x, z])
                     for x, y, z in itertools.combinations(range(m), 3))
    return count


@pytest.mark.parametrize("k, m", [(1, 3), (2, 4), (2, 5), (2, 6), (3, 4)])
def test_relational_candidates_are_the_triangle_free_colourings(k, m):
    res = find_relational_basis(maddux_ek23(k), m)
    assert res.stats["candidates"] == colourings_without_monochromatic_triangle(k, m)


def test_maddux_small_cases():
    assert find_relational_basis(maddux_ek23(1), 3).status == NONE
    pent = find_relational_basis(maddux_ek23(2), 5)
    assert pent.exists and len(pent.members) == 12
    # six points always carry a monochromatic triangle
    assert find_relational_basis(maddux_ek23(2), 6).status == NONE


def relational_audit(R, members, m):
    """Every triangle demand of every member is met by a member agreeing off one node."""
    index = defaultdict(set)
    for M in members:
        for z in range(m):
            rest = tuple(M[p * m + q] for p in range(m) for q in range(m) if z not in (p, q))
            index[z, rest].add(M)
    for N in members:
        for x, y in itertools.permutations(range(m), 2):
            c = N[x * m + y]
            for a, b in itertools.product(R.non_identity, repeat=2):
                if not R.table[a, b, c]:
                    continue
                if not any(M[x * m + z] == a and M[z * m + y] == b
                           for z in range(m) if z not in (x, y)
                           for M in index[z, tuple(N[p * m + q] for p in range(m)
                                                   for q in range(m) if z not in (p, q))]):
                    return False
    return True


@pytest.mark.parametrize("k, m", [(2, 4), (2, 5), (3, 4)])
def test_relational_members_pass_the_audit(k, m):
    R = maddux_ek23(k)
    res = find_relational_basis(R, m)
    assert res.exists and relational_audit(R, res.members, m)
    assert audit_relational_basis(R, res.members, m) == []



def test_relational_audit_finds_unmet_demands():
    R = maddux_ek23(3)
    res = find_relational_basis(R, 4)
    # without the third colour, a;b >= c demands through it go unmet
    fewer = [N for N in res.members if 3 not in N]
    assert fewer and not relational_audit(R, fewer, 4)
    problems = audit_relational_basis(R, fewer, 4)
    assert any(p.startswith("demand") for p in problems)
    assert "atom a2 is not covered" in problems


def test_restriction_keeps_bases():
    for k in (1, 2, 3):
        R = maddux_ek23(k)
        found = [find_relational_basis(R, m).exists for m in range(3, 6)]
        for m in range(len(found)):
            if found[m]:
                assert all(found[:m])


# -- basic matrices ----------------------------------------------------------------------

def test_one_atom_ra_gives_one_matrix():
    assert len(basic_matrices(one_atom_ra(), 3)) == 1
    assert mat_n(one_atom_ra(), 3).size == 1


@pytest.mark.parametrize("k", [1, 2, 3])
def test_matrix_count_matches_enumeration(k):
    R = maddux_ek23(k)
    assert len(basic_matrices(R, 3)) == naive_matrix_count(R, 3)


def test_matrix_structures_validate():
    for k in (1, 2, 3):
        assert validate_ca(mat_n(maddux_ek23(k), 3)).ok
    with pytest.raises(StructuralError):
        mat_n(maddux_ek23(2), 1)
