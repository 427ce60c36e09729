import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crnc.compiler import compile_spec
from crnc.composition import MAX_NET, MIN_NET
from crnc.crn import Crc, Crn, Reaction, parse_crc, parse_crn, present
from crnc.semantics import (
    InapplicableReaction, NegativeConcentration, NotFeedforward, UnboundedOutput,
    apply_flux, execute_topological, is_feedforward, is_output_stable, max_output_bound,
    random_segment_walk, species_closure,
)
from crnc.spec import example_spec

F = Fraction
UNATTAINED = "inputs: X\noutput: S\nX -> Z\nX + Z -> S + Z\n"
CATALYST = parse_crn("X -> C\nC + Y -> C + Z")


def test_apply_flux_examples():
    mn = parse_crn(MIN_NET)
    assert apply_flux(mn, {"X1": F(2), "X2": F(3)}, [F(2)]) == {"X2": 1, "Y": 2}
    with pytest.raises(NegativeConcentration):
        apply_flux(mn, {"X1": F(2), "X2": F(3)}, [F(3)])
    with pytest.raises(InapplicableReaction) as err:
        apply_flux(CATALYST, {"X": F(1), "Y": F(1)}, [F(0), F(1)])
    assert "C" in str(err.value)


def test_closure_examples():
    assert species_closure(CATALYST, {"X", "Y"}) == {"X", "Y", "C", "Z"}
    assert species_closure(CATALYST, set()) == set()
    assert species_closure(parse_crn("A + B -> C"), {"A"}) == {"A"}


def test_output_stable_examples():
    mn = parse_crc(MIN_NET)
    assert is_output_stable(mn, {"X1": F(1), "X2": F(0), "Y": F(0)})
    assert not is_output_stable(mn, {"X1": F(1), "X2": F(1), "Y": F(0)})
    assert not is_output_stable(parse_crc(UNATTAINED), {"X": F(1)})


def test_bound_examples():
    b = max_output_bound(parse_crc(MIN_NET), {"X1": F(2), "X2": F(3)})
    assert b.value == 2 and not b.possibly_unattained and b.attained_witness.final["Y"] == 2
    b = max_output_bound(parse_crc(UNATTAINED), {"X": F(1)})
    assert b.value == 1 and b.possibly_unattained and b.attained_witness is None
    assert max_output_bound(parse_crc(MAX_NET), {"X1": F(1), "X2": F(2)}).value == 3
    with pytest.raises(UnboundedOutput):
        max_output_bound(parse_crc("inputs: X\noutput: Y\nX -> X + Y\n"), {"X": F(1)})


def test_bound_with_catalyst_chain_is_attained():
    crc = parse_crc("inputs: X, Y\noutput: Z\nX -> C\nC + Y -> C + Z\n")
    b = max_output_bound(crc, {"X": F(1), "Y": F(1)})
    assert b.value == 1 and not b.possibly_unattained
    assert b.attained_witness.replay(crc.crn)["Z"] == 1
    assert len(b.attained_witness.segments) >= 2


def test_feedforward():
    crc, _ = compile_spec(example_spec(), prune=True)
    order = is_feedforward(crc.crn)
    pos = {s: k for k, s in enumerate(order)}
    for r in crc.reactions:
        consumed = [s for s, v in r.net().items() if v < 0]
        for s, v in r.net().items():
            if v > 0:
                assert any(pos[c] < pos[s] for c in consumed)
    assert is_feedforward(parse_crn("A -> B\nB -> A")) is None
    assert is_feedforward(parse_crn("2 X -> 3 X")) is None


def test_executor_examples():
    crc, _ = compile_spec(example_spec(), prune=True)
    assert execute_topological(crc, crc.initial_state([2, 3, 1]))[0]["Y"] == 5
    assert execute_topological(crc, crc.initial_state([2, 3, 0]))[0]["Y"] == 2
    with pytest.raises(NotFeedforward):
        execute_topological(Crc(parse_crn("A -> B\nB -> A"), ("A",), "B"), {"A": F(1)})


def test_executor_trace_replays():
    crc, _ = compile_spec(example_spec(), prune=True)
    final, trace = execute_topological(crc, crc.initial_state([F(7, 3), 3, 1]))
    assert trace.replay(crc.crn) == final
    first = trace.dump().splitlines()[0]
    assert first.startswith("seg 0: flux r0=7/3; state ")


def test_walk_examples():
    mn = parse_crc(MIN_NET)
    for seed in range(5):
        trace = random_segment_walk(mn, {"X1": F(2), "X2": F(3)}, 20, seed)
        for s in trace.states():
            assert all(v >= 0 for v in s.values())
            assert s.get("X1", 0) - s.get("X2", 0) == -1
    zero = random_segment_walk(mn, {}, 10, 0)
    assert all(not any(s.values()) for s in zero.states())
    crc, _ = compile_spec(example_spec(), prune=True)
    walk = random_segment_walk(crc, crc.initial_state([2, 3, 1]), 50, 0)
    assert execute_topological(crc, walk.final)[0]["Y"] == 5


def test_walk_deterministic():
    crc, _ = compile_spec(example_spec(), prune=True)
    x = crc.initial_state([2, 3, 1])
    assert random_segment_walk(crc, x, 30, 4) == random_segment_walk(crc, x, 30, 4)


# -- property suites on random small CRNs ------------------------------------

SPECIES = ["A", "B", "C", "D", "Y"]


@st.composite
def small_crcs(draw):
    reactions = []
    for _ in range(draw(st.integers(1, 5))):
        r = draw(st.dictionaries(st.sampled_from(SPECIES), st.integers(1, 2), min_size=1, max_size=2))
        p = draw(st.dictionaries(st.sampled_from(SPECIES), st.integers(1, 2), max_size=2))
        reactions.append(Reaction.of(r, p))
    crn = Crn.from_reactions(reactions, species=SPECIES)
    return Crc(crn, ("A", "B"), "Y")


def states(draw_from=st.fractions(min_value=0, max_value=4, max_denominator=6)):
    return st.fixed_dictionaries({s: draw_from for s in SPECIES})


@settings(max_examples=150, deadline=None)
@given(small_crcs(), states(), st.integers(0, 10**6))
def test_closure_soundness(crc, x, seed):
    closure = species_closure(crc.crn, present(x))
    trace = random_segment_walk(crc, x, 12, seed)
    trace.replay(crc.crn)
    for s in trace.states():
        assert present(s) <= closure


@settings(max_examples=150, deadline=None)
@given(small_crcs(), states(), states(), st.integers(0, 10**6))
def test_additivity(crc, x, c, seed):
    trace = random_segment_walk(crc, x, 8, seed)
    s = {k: x[k] + c[k] for k in SPECIES}
    for _, u in trace.segments:
        s = apply_flux(crc.crn, s, u)
    assert all(s.get(k, 0) == trace.final.get(k, 0) + c[k] for k in SPECIES)


@settings(max_examples=150, deadline=None)
@given(small_crcs(), states(), st.integers(0, 10**6), st.fractions(min_value=0, max_value=1, max_denominator=9))
def test_convex_combination_replay(crc, x, seed, lam):
    ta = random_segment_walk(crc, x, 6, seed)
    tb = random_segment_walk(crc, x, 6, seed + 1)
    # lam*x -> lam*a while (1-lam)*x rides along, then (1-lam)*x -> (1-lam)*b
    s = dict(x)
    for _, u in ta.segments:
        if lam:
            s = apply_flux(crc.crn, s, [lam * f for f in u])
    for _, u in tb.segments:
        if lam != 1:
            s = apply_flux(crc.crn, s, [(1 - lam) * f for f in u])
    target = {k: lam * ta.final.get(k, 0) + (1 - lam) * tb.final.get(k, 0) for k in SPECIES}
    assert all(s.get(k, 0) == target[k] for k in SPECIES)
    try:
        bound = max_output_bound(crc, x, witness=False).value
    except UnboundedOutput:
        return
    assert target["Y"] <= bound


@settings(max_examples=150, deadline=None)
@given(small_crcs(), states(), st.fractions(min_value=F(1, 7), max_value=5, max_denominator=7))
def test_post_scaling(crc, x, gamma):
    try:
        base = max_output_bound(crc, x, witness=False).value
    except UnboundedOutput:
        with pytest.raises(UnboundedOutput):
            max_output_bound(crc, {k: gamma * v for k, v in x.items()}, witness=False)
        return
    assert max_output_bound(crc, {k: gamma * v for k, v in x.items()}, witness=False).value == gamma * base


@settings(max_examples=100, deadline=None)
@given(small_crcs(), states())
def test_bound_witness_attains_value(crc, x):
    try:
        b = max_output_bound(crc, x)
    except UnboundedOutput:
        return
    assert b.value >= x["Y"]
    if not b.possibly_unattained:
        assert b.attained_witness.replay(crc.crn).get("Y", 0) == b.value


def test_compiled_nets_monotone_and_attained(small_corpus):
    rng = random.Random(3)
    from crnc.analysis import eval_spec, random_point

    for k, spec in enumerate(small_corpus):
        crc, _ = compile_spec(spec)
        x = random_point(rng, spec.n)
        s0 = crc.initial_state(x)
        trace = random_segment_walk(crc, s0, 30, k)
        ys = [s.get("Y", 0) for s in trace.states()]
        assert ys == sorted(ys)
        b = max_output_bound(crc, s0)
        assert not b.possibly_unattained
        assert b.value == execute_topological(crc, s0, record=False)[0].get("Y", 0) == eval_spec(spec, x)
