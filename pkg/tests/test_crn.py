from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crnc.crn import (
    Crc, Crn, CrnError, CrnSyntaxError, Reaction, applicable_reactions, parse_crc, parse_crn,
    parse_state, serialize_crn, stoich_matrix,
)

F = Fraction


def test_parse_min_reaction():
    crn = parse_crn("X1 + X2 -> Y")
    assert crn.species == ("X1", "X2", "Y")
    (r,) = crn.reactions
    assert r.reactant_map == {"X1": 1, "X2": 1} and r.product_map == {"Y": 1}


def test_parse_stoichiometry():
    (r,) = parse_crn("2 X -> 3 Y").reactions
    assert r.reactant_map == {"X": 2} and r.product_map == {"Y": 3}


def test_empty_reactants_rejected():
    with pytest.raises(CrnSyntaxError):
        parse_crn("-> Y")
    with pytest.raises(CrnSyntaxError):
        parse_crn("0 -> Y")


def test_syntax_error_position():
    with pytest.raises(CrnSyntaxError) as err:
        parse_crn("A -> B\nA + 3 -> C\n")
    assert err.value.line == 2 and err.value.column == 5


def test_duplicate_species_definition():
    with pytest.raises(CrnSyntaxError):
        parse_crn("species: A, B, A\nA -> B\n")


def test_waste_and_reversible():
    crn = parse_crn("Y + K -> 0\nA <-> 2 B\n")
    assert crn.reactions[0].products == ()
    assert [str(r) for r in crn.reactions[1:]] == ["A -> 2 B", "2 B -> A"]


def test_headers():
    crc = parse_crc("# note\ninputs: X1, X2\noutput: Y\ncontext: S=2/3\nX1 + X2 + S -> Y\n")
    assert crc.inputs == ("X1", "X2") and crc.output == "Y" and crc.context == {"S": F(2, 3)}
    assert crc.initial_state([1, 2]) == {"X1": 1, "X2": 2, "S": F(2, 3)}


def test_crc_invariants():
    crn = parse_crn("X -> Y")
    with pytest.raises(CrnError):
        Crc(crn, ("X",), "X")
    with pytest.raises(CrnError):
        Crc(crn, ("X",), "Y", {"X": F(1)})


def test_serialize_examples():
    assert serialize_crn(parse_crn("X1 + X2 -> Y")).splitlines()[-1] == "X1 + X2 -> Y"
    assert serialize_crn(parse_crn("2 X -> 3 Y")).splitlines()[-1] == "2 X -> 3 Y"
    assert serialize_crn(Crn(("A", "B"), ())) == "species: A, B\n"


def test_stoich_matrix_examples():
    assert stoich_matrix(parse_crn("X1 + X2 -> Y")) == [[-1], [-1], [1]]
    assert stoich_matrix(parse_crn("C + Y -> C + Z")) == [[0], [-1], [1]]
    m = stoich_matrix(parse_crn("X -> Z + Y\nX + Z -> S + Z"))
    assert [list(c) for c in zip(*m)] == [[-1, 1, 1, 0], [-1, 0, 0, 1]]


def test_applicable_examples():
    mn = parse_crn("X1 + X2 -> Y")
    assert applicable_reactions(mn, {"X1": F(2), "X2": F(3)}) == {0}
    assert applicable_reactions(mn, {"X1": F(2), "X2": F(0)}) == set()
    cat = parse_crn("X -> C\nC + Y -> C + Z")
    assert applicable_reactions(cat, {"X": F(1), "Y": F(1), "C": F(0)}) == {0}


def test_state_parsing():
    assert parse_state("X1 = 2\nX2 = 3/4\n") == {"X1": 2, "X2": F(3, 4)}
    assert parse_state("X1=2,X2=3") == {"X1": 2, "X2": 3}
    with pytest.raises(CrnSyntaxError):
        parse_state("X = -1")


# -- generated networks ----------------------------------------------------

NAMES = ["A", "B", "C", "X1", "Y_2", "Z'", "W~2"]
side = st.dictionaries(st.sampled_from(NAMES), st.integers(1, 3), max_size=3)


@st.composite
def networks(draw):
    reactions = []
    for _ in range(draw(st.integers(0, 6))):
        r = draw(side.filter(bool))
        reactions.append(Reaction.of(r, draw(side)))
    extra = draw(st.lists(st.sampled_from(NAMES), max_size=2))
    return Crn.from_reactions(reactions, species=extra)


@settings(max_examples=200)
@given(networks())
def test_round_trip(crn):
    assert parse_crn(serialize_crn(crn)) == crn


@settings(max_examples=100)
@given(networks(), st.data())
def test_round_trip_crc(crn, data):
    if len(crn.species) < 2:
        return
    out = data.draw(st.sampled_from(crn.species))
    ins = data.draw(st.lists(st.sampled_from([s for s in crn.species if s != out]), unique=True))
    crc = Crc(crn, tuple(ins), out)
    back = parse_crc(serialize_crn(crc))
    assert (back.crn, back.inputs, back.output) == (crn, tuple(ins), out)


@settings(max_examples=200)
@given(networks())
def test_matrix_columns(crn):
    m = stoich_matrix(crn)
    idx = crn.index()
    for j, r in enumerate(crn.reactions):
        net = r.net()
        assert sum(abs(m[i][j]) for i in range(len(crn.species))) == sum(abs(v) for v in net.values())
        for s in set(r.reactant_map) & set(r.product_map):
            assert m[idx[s]][j] == r.product_map[s] - r.reactant_map[s]


@settings(max_examples=200)
@given(networks(), st.data())
def test_applicability_monotone(crn, data):
    conc = st.fractions(min_value=0, max_value=3)
    s = {x: data.draw(conc) for x in crn.species}
    bigger = {x: v + data.draw(conc) for x, v in s.items()}
    assert applicable_reactions(crn, s) <= applicable_reactions(crn, bigger)
