"""Segment-reachability semantics for CRNs.

States are ``dict[str, Fraction]`` (absent species are 0). A segment applies a flux
vector ``u`` at once: ``d = c + M u`` with ``d >= 0`` and every reaction with
positive flux applicable at ``c``.
"""

from __future__ import annotations

import functools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from gmpy2 import mpq

from .crn import Crc, Crn, State, present
from .exact import GE, EQ, LE, LinearProgram, Optimal, Unbounded, format_rational, lp_solve

ZERO = Fraction(0)


class InapplicableReaction(ValueError):
    def __init__(self, reaction_index: int, reaction, missing: str):
        super().__init__(f"reaction {reaction_index} ({reaction}) is not applicable: {missing} is absent")
        self.reaction_index = reaction_index
        self.missing = missing


class NegativeConcentration(ValueError):
    def __init__(self, species: str, value: Fraction):
        super().__init__(f"flux drives {species} negative ({format_rational(value)})")
        self.species = species
        self.value = value


class NotFeedforward(ValueError):
    pass


class NonTerminating(RuntimeError):
    pass


class UnboundedOutput(ValueError):
    pass


@dataclass(frozen=True)
class _Net:
    species: tuple[str, ...]
    idx: dict
    reactants: tuple[tuple[int, ...], ...]
    net: tuple[tuple[tuple[int, int], ...], ...]
    consumed: tuple[tuple[tuple[int, int], ...], ...]
    max_stoich: tuple[int, ...]


@functools.lru_cache(maxsize=512)
def _compile(crn: Crn) -> _Net:
    idx = crn.index()
    reactants, net, consumed, kmax = [], [], [], []
    for r in crn.reactions:
        reactants.append(tuple(idx[s] for s, _ in r.reactants))
        delta = tuple((idx[s], v) for s, v in r.net().items())
        net.append(delta)
        consumed.append(tuple((i, -v) for i, v in delta if v < 0))
        kmax.append(max(k for _, k in r.reactants))
    return _Net(crn.species, idx, tuple(reactants), tuple(net), tuple(consumed), tuple(kmax))


def _vec(net: _Net, state: Mapping[str, Fraction]) -> list[Fraction]:
    v = [ZERO] * len(net.species)
    for s, q in state.items():
        if s not in net.idx:
            if q:
                raise KeyError(f"species {s} is not in the network")
            continue
        v[net.idx[s]] = Fraction(q)
    return v


def _state(net: _Net, v: Sequence[Fraction]) -> State:
    return {s: q for s, q in zip(net.species, v) if q}


# ---------------------------------------------------------------------------
# Traces


@dataclass
class Trace:
    """Segments ``(start state, flux vector)`` followed by the final state."""

    segments: list[tuple[State, tuple[Fraction, ...]]] = field(default_factory=list)
    final: State = field(default_factory=dict)

    def states(self) -> list[State]:
        return [s for s, _ in self.segments] + [self.final]

    def total_flux(self, nreactions: int) -> list[Fraction]:
        tot = [ZERO] * nreactions
        for _, u in self.segments:
            for j, f in enumerate(u):
                tot[j] += f
        return tot

    def replay(self, crn: Crn) -> State:
        """Re-apply every segment from its recorded start; checks each endpoint."""
        states = self.states()
        for k, (start, u) in enumerate(self.segments):
            end = apply_flux(crn, start, u)
            if not _same_state(end, states[k + 1]):
                raise AssertionError(f"segment {k} does not end where the next one starts")
        return dict(self.final)

    def dump(self) -> str:
        lines = []
        states = self.states()
        for i, (_, u) in enumerate(self.segments):
            fluxes = " ".join(f"r{j}={format_rational(f)}" for j, f in enumerate(u) if f)
            st = " ".join(f"{s}={format_rational(q)}" for s, q in states[i + 1].items() if q)
            lines.append(f"seg {i}: flux {fluxes}; state {st}".replace("  ", " "))
        return "\n".join(lines) + ("\n" if lines else "")


def _same_state(a: Mapping[str, Fraction], b: Mapping[str, Fraction]) -> bool:
    keys = set(a) | set(b)
    return all(a.get(k, ZERO) == b.get(k, ZERO) for k in keys)


# ---------------------------------------------------------------------------
# Core operations


def apply_flux(crn: Crn, s: Mapping[str, Fraction], u: Sequence[Fraction]) -> State:
    """One straight-line segment: returns ``s + M u``."""
    net = _compile(crn)
    if len(u) != len(crn.reactions):
        raise ValueError(f"flux has {len(u)} entries, network has {len(crn.reactions)} reactions")
    v = _vec(net, s)
    for j, f in enumerate(u):
        if f < 0:
            raise ValueError(f"negative flux on reaction {j}")
        if not f:
            continue
        for i in net.reactants[j]:
            if v[i] <= 0:
                raise InapplicableReaction(j, crn.reactions[j], net.species[i])
    out = list(v)
    for j, f in enumerate(u):
        if f:
            for i, d in net.net[j]:
                out[i] += d * f
    for i, q in enumerate(out):
        if q < 0:
            raise NegativeConcentration(net.species[i], q)
    return _state(net, out)


def species_closure(crn: Crn, initial) -> set[str]:
    """Least superset of ``initial`` closed under firing reactions whose reactants are all in it."""
    have = set(initial)
    changed = True
    while changed:
        changed = False
        for r in crn.reactions:
            if all(s in have for s, _ in r.reactants):
                for s, _ in r.products:
                    if s not in have:
                        have.add(s)
                        changed = True
    return have


def enabled_reactions(crn: Crn, species) -> list[int]:
    have = set(species)
    return [j for j, r in enumerate(crn.reactions) if all(s in have for s, _ in r.reactants)]


@dataclass(frozen=True)
class StabilityVerdict:
    """Result of :func:`is_output_stable`.

    ``exact`` is always True: the producible-species closure is exactly the set of
    species that can ever become present, so a reaction changing Y can fire from
    some reachable state iff its reactants lie in the closure.
    """

    stable: bool
    exact: bool = True
    blocking: tuple[int, ...] = ()

    def __bool__(self) -> bool:
        return self.stable


def is_output_stable(crc: Crc, s: Mapping[str, Fraction]) -> StabilityVerdict:
    closure = species_closure(crc.crn, present(s))
    changers = [
        j
        for j, r in enumerate(crc.reactions)
        if r.net().get(crc.output) and all(x in closure for x, _ in r.reactants)
    ]
    return StabilityVerdict(not changers, True, tuple(changers))


def is_feedforward(crn: Crn) -> list[str] | None:
    """A species order witnessing feedforwardness, or None.

    Every reaction that net-produces a species must net-consume an earlier one.
    Greedy placement is complete because placing a species never makes another
    species harder to place.
    """
    producers: dict[str, list[int]] = {s: [] for s in crn.species}
    consumed = []
    for j, r in enumerate(crn.reactions):
        net = r.net()
        consumed.append({s for s, v in net.items() if v < 0})
        for s, v in net.items():
            if v > 0:
                producers[s].append(j)
    order: list[str] = []
    placed: set[str] = set()
    remaining = list(crn.species)
    while remaining:
        for s in remaining:
            if all(consumed[j] & placed for j in producers[s]):
                order.append(s)
                placed.add(s)
                remaining.remove(s)
                break
        else:
            return None
    return order


def _max_flux(net: _Net, v: Sequence[Fraction], j: int) -> Fraction:
    for i in net.reactants[j]:
        if v[i] <= 0:
            return ZERO
    best = None
    for i, k in net.consumed[j]:
        q = v[i] / k
        if best is None or q < best:
            best = q
    return best if best is not None else ZERO


def _fire(net: _Net, v: list[Fraction], j: int, f: Fraction) -> None:
    for i, d in net.net[j]:
        v[i] += d * f


def _unit_flux(n: int, j: int, f: Fraction) -> tuple[Fraction, ...]:
    u = [ZERO] * n
    u[j] = f
    return tuple(u)


def execute_topological(crc: Crc, x: Mapping[str, Fraction], record: bool = True) -> tuple[State, Trace]:
    """Deterministic fair executor for feedforward networks.

    Reactions are visited in dependency order (listing order breaks ties); each one
    fires with the largest flux its net-consumed reactants allow. Passes repeat
    until a whole pass fires nothing.
    """
    crn = crc.crn
    net = _compile(crn)
    schedule = _schedule(crn)
    v = [mpq(q.numerator, q.denominator) for q in _vec(net, x)]
    trace = Trace()
    nr = len(crn.reactions)
    limit = max(1, nr * len(crn.species))
    passes = 0
    while True:
        passes += 1
        if passes > limit:
            raise NonTerminating(f"no quiescence after {limit} passes")
        fired = False
        for j in schedule:
            f = _max_flux(net, v, j)
            if f > 0:
                if record:
                    trace.segments.append((_mpq_state(net, v), _unit_flux(nr, j, _frac(f))))
                _fire(net, v, j, f)
                fired = True
        if not fired:
            break
    final = _mpq_state(net, v)
    trace.final = final
    verdict = is_output_stable(crc, final)
    if not verdict:
        raise AssertionError("executor stopped in a state that is not output stable")
    return final, trace


@functools.lru_cache(maxsize=512)
def _schedule(crn: Crn) -> tuple[int, ...]:
    """Reactions sorted by the latest feedforward position of their reactants."""
    order = is_feedforward(crn)
    if order is None:
        raise NotFeedforward("network is not feedforward")
    net = _compile(crn)
    for j, r in enumerate(crn.reactions):
        if not net.consumed[j]:
            raise NotFeedforward(f"reaction {j} ({r}) net-consumes nothing")
    pos = {s: k for k, s in enumerate(order)}
    rank = [max(pos[s] for s, _ in r.reactants) for r in crn.reactions]
    return tuple(sorted(range(len(crn.reactions)), key=lambda j: (rank[j], j)))


def run_schedule(crn: Crn, s: Mapping[str, Fraction], order: Sequence[int]) -> tuple[State, Trace]:
    """Fire the listed reactions one after another, each to exhaustion."""
    net = _compile(crn)
    v = _vec(net, s)
    trace = Trace()
    for j in order:
        f = _max_flux(net, v, j)
        if f > 0:
            trace.segments.append((_state(net, v), _unit_flux(len(crn.reactions), j, f)))
            _fire(net, v, j, f)
    trace.final = _state(net, v)
    return trace.final, trace


_GRID = 64


def random_segment_walk(crc: Crc, x: Mapping[str, Fraction], steps: int, seed: int) -> Trace:
    """Adversarial exploration: ``steps`` random segments from ``x``.

    Each segment runs a random subset of the applicable reactions with random
    weights from a 1/64 grid, scaled by a grid factor in (0, 1] of the largest
    step that keeps every concentration nonnegative.
    """
    rng = random.Random(seed)
    crn = crc.crn
    net = _compile(crn)
    nr = len(crn.reactions)
    # GMP rationals inside the loop; the trace is converted once at the end.
    v = [mpq(q.numerator, q.denominator) for q in _vec(net, x)]
    raw: list[tuple[list, dict[int, mpq]]] = []
    for _ in range(steps):
        start = list(v)
        live = [j for j in range(nr) if all(v[i] > 0 for i in net.reactants[j])]
        u: dict[int, mpq] = {}
        if live:
            chosen = [j for j in live if rng.random() < 0.5] or [rng.choice(live)]
            weights = {j: mpq(rng.randint(1, _GRID), _GRID) for j in chosen}
            delta: dict[int, mpq] = {}
            for j, w in weights.items():
                for i, d in net.net[j]:
                    delta[i] = delta.get(i, 0) + d * w
            t_max = None
            for i, d in delta.items():
                if d < 0:
                    t = v[i] / -d
                    if t_max is None or t < t_max:
                        t_max = t
            if t_max is None:
                t_max = mpq(1)
            scale = mpq(rng.randint(1, _GRID), _GRID) * t_max
            for j, w in weights.items():
                u[j] = w * scale
            for i, d in delta.items():
                v[i] += d * scale
        raw.append((start, u))
    trace = Trace()
    for start, u in raw:
        flux = [ZERO] * nr
        for j, f in u.items():
            flux[j] = _frac(f)
        trace.segments.append((_mpq_state(net, start), tuple(flux)))
    trace.final = _mpq_state(net, v)
    return trace


def _frac(q) -> Fraction:
    # mpq values are already in lowest terms
    return Fraction(int(q.numerator), int(q.denominator), _normalize=False)


def _mpq_state(net: _Net, v) -> State:
    return {s: _frac(q) for s, q in zip(net.species, v) if q}


# ---------------------------------------------------------------------------
# Supremum of the output over Post(x)


@dataclass
class OutputBound:
    value: Fraction
    attained_witness: Trace | None = None
    possibly_unattained: bool = False


def _output_lp(net: _Net, x: Sequence[Fraction], allowed: Sequence[int], out: int) -> LinearProgram:
    cols = list(allowed)
    rows = []
    for i in range(len(net.species)):
        coeffs = [ZERO] * len(cols)
        hit = False
        for c, j in enumerate(cols):
            for k, d in net.net[j]:
                if k == i:
                    coeffs[c] = Fraction(d)
                    hit = hit or d < 0
        if hit:
            rows.append((coeffs, GE, -x[i]))
    objective = [ZERO] * len(cols)
    for c, j in enumerate(cols):
        for k, d in net.net[j]:
            if k == out:
                objective[c] = Fraction(d)
    return LinearProgram.build(objective, rows)


def _max_support(net: _Net, x, allowed, out, gain) -> tuple[list[Fraction], list[int]]:
    """An optimal flux whose support is as large as possible (homogenized LP)."""
    m = len(allowed)
    # variables: u (m), lam (1), t (m)
    nv = 2 * m + 1
    lam = m
    rows = []
    for i in range(len(net.species)):
        coeffs = [ZERO] * nv
        hit = False
        for c, j in enumerate(allowed):
            for k, d in net.net[j]:
                if k == i:
                    coeffs[c] = Fraction(d)
                    hit = hit or d < 0
        if hit:
            coeffs[lam] = x[i]
            rows.append((coeffs, GE, 0))
    coeffs = [ZERO] * nv
    for c, j in enumerate(allowed):
        for k, d in net.net[j]:
            if k == out:
                coeffs[c] = Fraction(d)
    coeffs[lam] = -gain
    rows.append((coeffs, EQ, 0))
    one = [ZERO] * nv
    one[lam] = Fraction(1)
    rows.append((one, GE, 1))
    for c in range(m):
        row = [ZERO] * nv
        row[m + 1 + c] = Fraction(1)
        row[c] = Fraction(-1)
        rows.append((row, LE, 0))
        cap = [ZERO] * nv
        cap[m + 1 + c] = Fraction(1)
        rows.append((cap, LE, 1))
    objective = [ZERO] * (m + 1) + [Fraction(1)] * m
    res = lp_solve(LinearProgram.build(objective, rows))
    assert isinstance(res, Optimal)
    w = res.witness
    flux = [w[c] / w[lam] for c in range(m)]
    support = [allowed[c] for c in range(m) if w[m + 1 + c] > 0]
    return flux, support


def _enabling_order(crn: Crn, start: set[str], support: Sequence[int]) -> list[int]:
    have = set(start)
    order: list[int] = []
    pending = list(support)
    progress = True
    while pending and progress:
        progress = False
        ready = [j for j in pending if all(s in have for s, _ in crn.reactions[j].reactants)]
        for j in ready:
            order.append(j)
            pending.remove(j)
            have.update(s for s, _ in crn.reactions[j].products)
            progress = True
    return order


def _cascade_trace(crn: Crn, x: State, flux: dict[int, Fraction], order: list[int]) -> Trace:
    nr = len(crn.reactions)
    trace = Trace()
    if not order:
        trace.final = dict(x)
        return trace
    k = max(max(c for _, c in crn.reactions[j].reactants) for j in order)
    eps = min([q for q in x.values() if q > 0] + [flux[j] for j in order])
    state = dict(x)
    used = {}
    for pos, j in enumerate(order):
        w = eps / (2 * k) ** (pos + 1)
        used[j] = w
        u = _unit_flux(nr, j, w)
        trace.segments.append((state, u))
        state = apply_flux(crn, state, u)
    final_u = [ZERO] * nr
    for j in order:
        final_u[j] = flux[j] - used[j]
    trace.segments.append((state, tuple(final_u)))
    trace.final = apply_flux(crn, state, final_u)
    return trace


def max_output_bound(crc: Crc, x: Mapping[str, Fraction], witness: bool = True) -> OutputBound:
    """Exact supremum of the output concentration over all states reachable from ``x``.

    With ``witness=True`` the bound is also classified: either an attaining trace is
    built (replayed and checked) or ``possibly_unattained`` is set because no
    optimal flux has a support that can switch itself on from ``x``.
    """
    crn = crc.crn
    net = _compile(crn)
    xv = _vec(net, x)
    out = net.idx[crc.output]
    start = present(x)
    allowed = enabled_reactions(crn, species_closure(crn, start))
    res = lp_solve(_output_lp(net, xv, allowed, out))
    if isinstance(res, Unbounded):
        raise UnboundedOutput(f"{crc.output} is unbounded over reachable states")
    assert isinstance(res, Optimal)
    gain = res.value
    value = xv[out] + gain
    if not witness:
        return OutputBound(value)

    flux = dict(zip(allowed, res.witness))
    support = [j for j in allowed if flux[j] > 0]
    while True:
        order = _enabling_order(crn, start, support)
        if len(order) == len(support):
            trace = _cascade_trace(crn, dict(x), flux, order)
            trace.replay(crn)
            if trace.final.get(crc.output, ZERO) != value:
                raise AssertionError("attaining trace misses the LP optimum")
            return OutputBound(value, trace, False)
        # Widen to a maximal-support optimum, then keep only its self-enabling part.
        fl, support = _max_support(net, xv, allowed, out, gain)
        flux = dict(zip(allowed, fl))
        order = _enabling_order(crn, start, support)
        if len(order) == len(support):
            continue
        allowed = sorted(order)
        res = lp_solve(_output_lp(net, xv, allowed, out))
        assert isinstance(res, Optimal)
        if res.value < gain:
            return OutputBound(value, None, True)
        flux = dict(zip(allowed, res.witness))
        support = [j for j in allowed if flux[j] > 0]
