"""Acceptance criteria 1-10, one test each; a PASS/FAIL line per criterion is printed at the end."""

import random
import time
from contextlib import contextmanager
from fractions import Fraction

import pytest

from conftest import ACCEPTANCE
from test_compiler import WORKED_EXAMPLE, find_isomorphism

from crnc.analysis import eval_min_formula, eval_spec, random_point
from crnc.compiler import (
    compile_spec, compile_with_context, decompose_bimolecular, is_bimolecular, unit_context,
)
from crnc.composition import MAX_NET, MIN_NET, WiringPlan, compose, compose_auto, is_output_oblivious, prune_output_consumers
from crnc.crn import Crc, Crn, Reaction, parse_crc, parse_crn, present
from crnc.massaction import CONVERGENCE_TOL, simulate_mass_action
from crnc.semantics import (
    UnboundedOutput, apply_flux, execute_topological, max_output_bound, random_segment_walk,
    run_schedule, species_closure,
)
from crnc.spec import example_spec, load_spec, make_spec

F = Fraction


@contextmanager
def criterion(k, title):
    ok = False
    try:
        yield
        ok = True
    finally:
        ACCEPTANCE[k] = (title, ok)
        print(f"criterion {k} [{'PASS' if ok else 'FAIL'}] {title}")


def y_of(crc, x):
    return execute_topological(crc, crc.initial_state(x), record=False)[0].get(crc.output, F(0))


@pytest.fixture(scope="module")
def compiled(corpus):
    start = time.perf_counter()
    crcs = [compile_spec(spec)[0] for spec in corpus]
    return crcs, time.perf_counter() - start


def test_criterion_1_golden_example():
    with criterion(1, "golden example: pruned compile is isomorphic to the worked network; exec 5 and 2"):
        start = time.perf_counter()
        crc, report = compile_spec(example_spec(), prune=True)
        n = report.names
        fixed = {"X1": "X1", "X2": "X2", "X3": "X3", "Y": "Y", n["P{3}"]: "P_3", n["Y{3}"]: "Y_3",
                 n["Y{}"]: "Y_0", n["H{3}"]: "Y_3'", n["H{}"]: "Y_0'"}
        assert find_isomorphism(crc.crn, parse_crn(WORKED_EXAMPLE), fixed) is not None
        assert y_of(crc, [2, 3, 1]) == 5
        assert y_of(crc, [2, 3, 0]) == 2
        assert time.perf_counter() - start < 1.0


def test_criterion_2_three_way_equality(corpus, corpus_inputs, compiled):
    with criterion(2, "oracle = min formula = executor = LP bound on 200 specs x 20 inputs, < 2 min"):
        crcs, compile_time = compiled
        start = time.perf_counter()
        assert len(corpus) >= 200 and all(spec.n <= 3 for spec in corpus)
        for spec, crc, xs in zip(corpus, crcs, corpus_inputs):
            assert len(xs) >= 20 and {sum(1 << i for i, v in enumerate(x) if v) for x in xs} == set(range(1 << spec.n))
            for x in xs:
                want = eval_spec(spec, x)
                assert eval_min_formula(spec, x) == want
                s = crc.initial_state(x)
                assert execute_topological(crc, s, record=False)[0].get("Y", F(0)) == want
                assert max_output_bound(crc, s, witness=False).value == want
        elapsed = compile_time + time.perf_counter() - start
        print(f"criterion 2 runtime {elapsed:.1f}s")
        assert elapsed < 120


def test_criterion_3_adversarial_stability(corpus, corpus_inputs, compiled):
    with criterion(3, "50-step random walks then completion always reach the oracle value (5 seeds per input)"):
        crcs, _ = compiled
        for k, (spec, crc, xs) in enumerate(zip(corpus, crcs, corpus_inputs)):
            for i, x in enumerate(xs):
                want = eval_spec(spec, x)
                s = crc.initial_state(x)
                for seed in range(5):
                    walk = random_segment_walk(crc, s, 50, 100_000 * k + 10 * i + seed)
                    assert execute_topological(crc, walk.final, record=False)[0].get("Y", F(0)) == want


def test_criterion_4_superadditivity_and_homogeneity(corpus, corpus_inputs, compiled):
    with criterion(4, "1000 superadditive pairs per spec; eval and LP bound scale exactly with 20 gammas"):
        crcs, _ = compiled
        rng = random.Random(4)
        for spec, crc, xs in zip(corpus, crcs, corpus_inputs):
            for _ in range(1000):
                a = random_point(rng, spec.n, rng.randrange(1 << spec.n))
                b = random_point(rng, spec.n, rng.randrange(1 << spec.n))
                assert eval_spec(spec, a) + eval_spec(spec, b) <= eval_spec(spec, [p + q for p, q in zip(a, b)])
            for j in range(20):
                gamma = F(rng.randint(1, 60), rng.randint(1, 12))
                x = xs[j % len(xs)]
                gx = [gamma * v for v in x]
                assert eval_spec(spec, gx) == gamma * eval_spec(spec, x)
                base = max_output_bound(crc, crc.initial_state(x), witness=False).value
                assert max_output_bound(crc, crc.initial_state(gx), witness=False).value == gamma * base


def test_criterion_5_composition():
    with criterion(5, "min of min gives the 3-way min; min after max diverges 1 vs 2 at (1,1,2)"):
        mn, _ = compile_spec(make_spec(2, {(1, 2): [[1, 0], [0, 1]]}))
        three = compose_auto(mn, mn, "X1")
        assert is_output_oblivious(three)
        rng = random.Random(5)
        for _ in range(100):
            x = [F(rng.randint(0, 50), rng.randint(1, 9)) for _ in range(3)]
            assert y_of(three, x) == min(x)
        crc = compose(WiringPlan(parse_crc(MAX_NET), parse_crc("inputs: Y, X3\noutput: Yp\nY + X3 -> Yp\n"), "Y"))
        s = crc.initial_state([1, 1, 2])
        early, _ = run_schedule(crc.crn, s, [0, 1, 2, 3, 4])
        late, _ = run_schedule(crc.crn, s, [0, 1, 4, 2, 3])
        assert (early[crc.output], late[crc.output]) == (1, 2)


def test_criterion_6_output_consumer_pruning():
    with criterion(6, "pruning the max net removes exactly Y + K -> 0 and yields x1 + x2"):
        mx = parse_crc(MAX_NET)
        pruned, removed = prune_output_consumers(mx)
        assert [str(r) for r in removed] == ["Y + K -> 0"]
        assert y_of(pruned, [1, 2]) == 3
        rng = random.Random(6)
        for _ in range(20):
            x = [F(rng.randint(0, 30), rng.randint(1, 7)) for _ in range(2)]
            assert y_of(pruned, x) == sum(x)
        assert is_output_oblivious(parse_crc(MIN_NET))
        assert not is_output_oblivious(mx)


def test_criterion_7_bimolecular(corpus, corpus_inputs, compiled):
    with criterion(7, "bimolecular decomposition preserves executor output on the whole corpus"):
        crcs, _ = compiled
        for crc, xs in zip(crcs, corpus_inputs):
            bi = decompose_bimolecular(crc)
            assert is_bimolecular(bi.crn)
            for x in xs:
                assert y_of(bi, x) == y_of(crc, x)


def test_criterion_8_initial_context():
    with criterion(8, "context: min(x, 1) exact on 100 inputs; context 2/3 via 3 S' -> 2 S"):
        spec = load_spec('{"inputs": 1, "domains": [{"present": [1], "min_of": [["1"], ["0"]], "constants": ["0", "1"]}]}')
        crc = compile_with_context(spec)
        rng = random.Random(8)
        for _ in range(100):
            x = F(rng.randint(0, 40), rng.randint(1, 13))
            assert y_of(crc, [x]) == min(x, 1)
        probe = Crc(parse_crn("S -> Y"), (), "Y", {"S": F(2, 3)})
        unit = unit_context(probe, unit="S'")
        assert str(unit.reactions[0]) == "3 S' -> 2 S" and unit.context == {"S'": 1}
        assert y_of(unit, []) == F(2, 3)


def test_criterion_9_mass_action(corpus):
    with criterion(9, "mass action on 20 corpus instances with random rates within 1e-3 and converged, < 1 min"):
        rng = random.Random(9)
        start = time.perf_counter()
        worst = 0.0
        for spec in corpus[:20]:
            crc = decompose_bimolecular(compile_spec(spec, prune=True)[0])
            x = random_point(rng, spec.n, rng.randrange(1, 1 << spec.n))
            x = [v / 25 for v in x]  # keep concentrations O(1)
            rates = [rng.uniform(0.5, 2.0) for _ in crc.reactions]
            res = simulate_mass_action(crc.crn, crc.initial_state(x), rates, t_end=1e5, tol=CONVERGENCE_TOL,
                                       atol=1e-9, rtol=1e-6, stop_when_converged=True)
            err = abs(res.final.get("Y", 0.0) - float(eval_spec(spec, x)))
            worst = max(worst, err)
            assert res.converged
            assert err <= 1e-3
        elapsed = time.perf_counter() - start
        print(f"criterion 9 worst error {worst:.2e}, runtime {elapsed:.1f}s")
        assert elapsed < 60


def _random_crc(rng):
    names = ["A", "B", "C", "D", "Y"]
    reactions = []
    for _ in range(rng.randint(1, 5)):
        r = {s: rng.randint(1, 2) for s in rng.sample(names, rng.randint(1, 2))}
        p = {s: rng.randint(1, 2) for s in rng.sample(names, rng.randint(0, 2))}
        reactions.append(Reaction.of(r, p))
    return Crc(Crn.from_reactions(reactions, species=names), ("A", "B"), "Y")


def test_criterion_10_semantics_properties():
    with criterion(10, "bound 1 on X -> Z, X + Z -> S + Z and possibly unattained; closure, convexity and additivity suites"):
        b = max_output_bound(parse_crc("inputs: X\noutput: S\nX -> Z\nX + Z -> S + Z\n"), {"X": F(1)})
        assert b.value == 1 and b.possibly_unattained
        rng = random.Random(10)
        for trial in range(300):
            crc = _random_crc(rng)
            x = {s: F(rng.randint(0, 12), rng.randint(1, 4)) for s in crc.species}
            ta = random_segment_walk(crc, x, 8, trial)
            tb = random_segment_walk(crc, x, 8, trial + 10_000)
            closure = species_closure(crc.crn, present(x))
            for t in (ta, tb):
                t.replay(crc.crn)
                assert all(present(s) <= closure for s in t.states())
            # additivity
            c = {s: F(rng.randint(0, 5), rng.randint(1, 3)) for s in crc.species}
            s = {k: x[k] + c[k] for k in crc.species}
            for _, u in ta.segments:
                s = apply_flux(crc.crn, s, u)
            assert all(s.get(k, 0) == ta.final.get(k, 0) + c[k] for k in crc.species)
            # convex combination, segment by segment
            lam = F(rng.randint(0, 8), 8)
            s = dict(x)
            for _, u in ta.segments:
                if lam:
                    s = apply_flux(crc.crn, s, [lam * f for f in u])
            for _, u in tb.segments:
                if lam != 1:
                    s = apply_flux(crc.crn, s, [(1 - lam) * f for f in u])
            mix = {k: lam * ta.final.get(k, 0) + (1 - lam) * tb.final.get(k, 0) for k in crc.species}
            assert all(s.get(k, 0) == mix[k] for k in crc.species)
            try:
                assert mix["Y"] <= max_output_bound(crc, x, witness=False).value
            except UnboundedOutput:
                pass
