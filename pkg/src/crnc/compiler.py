"""Compile function specs into output-oblivious, feedforward CRCs."""

from __future__ import annotations

import itertools
import warnings
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .analysis import ValidationFailed, max_gap, validate_spec
from .crn import Crc, Crn, CrnError, Reaction
from .exact import to_rational
from .spec import FunctionSpec, LinearFn, MinOfLinear, SpecError, mask_label, members

OUTPUT = "Y"
GAMMA = "S_gamma"


class TooManyInputs(ValueError):
    pass


def input_name(i: int) -> str:
    return f"X{i}"


# ---------------------------------------------------------------------------
# Building blocks


def _linear_reactions(g: LinearFn, inputs: Sequence[str], out: str) -> list[Reaction]:
    if len(g.coeffs) != len(inputs):
        raise ValueError(f"{len(g.coeffs)} coefficients for {len(inputs)} inputs")
    rxns = []
    for a, x in zip(g.coeffs, inputs):
        if a < 0:
            raise ValueError(f"negative coefficient {a}")
        if a:
            rxns.append(Reaction(((x, a.denominator),), ((out, a.numerator),)))
    return rxns


def compile_linear(g: LinearFn | Sequence, inputs: Sequence[str], out: str) -> Crn:
    """``q_i X_i -> p_i out`` for each coefficient ``p_i/q_i > 0``."""
    if not isinstance(g, LinearFn):
        g = LinearFn(tuple(to_rational(a) for a in g))
    return Crn.from_reactions(_linear_reactions(g, inputs, out), species=[*inputs, out])


def compile_min(inputs: Sequence[str], out: str) -> Crn:
    if not inputs:
        raise ValueError("min of nothing")
    return Crn.from_reactions([Reaction.of(list(inputs), [out])])


def compile_predicate(k: Iterable[int], inputs: Sequence[str], out: str) -> Crn:
    """``sum_{i in K} X_i -> P_K``; ``k`` holds 1-based input indices."""
    k = sorted(set(k))
    if not k:
        raise ValueError("empty predicate")
    return Crn.from_reactions([Reaction.of([inputs[i - 1] for i in k], [out])])


def compile_gate(src: str, gate: str, out: str) -> Crn:
    return Crn.from_reactions([Reaction.of([src, gate], [out, gate])])


def compile_copy(src: str, outs: Sequence[str]) -> Crn:
    if not outs:
        raise ValueError("copy needs at least one target")
    return Crn.from_reactions([Reaction.of([src], list(outs))])


# ---------------------------------------------------------------------------
# Domain coarsening


def equal_on_domain(a: MinOfLinear, b: MinOfLinear, mask: int) -> bool:
    """Do two min-of-linear functions agree on the closure of ``D_mask``?"""
    a, b = a.canonical(mask), b.canonical(mask)
    if a == b:
        return True
    if not mask:
        return True
    idx = members(mask)
    return all(max_gap(a.components, c, idx)[0] <= 0 for c in b.components) and all(
        max_gap(b.components, c, idx)[0] <= 0 for c in a.components
    )


def discontinuity_set(spec: FunctionSpec) -> int:
    """Smallest input set ``D`` such that ``g_S`` equals ``g_{S u ([n] \\ D)}`` on ``D_S`` for all ``S``.

    Inputs outside ``D`` never switch between pieces, so the min formula only needs
    the subsets of ``D``. Ties go to the lexicographically smallest set.
    """
    full = spec.full_mask
    cands = []
    for size in range(spec.n + 1):
        for combo in itertools.combinations(range(1, spec.n + 1), size):
            cands.append(sum(1 << (i - 1) for i in combo))
        for d in cands:
            rest = full & ~d
            if all(equal_on_domain(spec.g(s), spec.g(s | rest), s) for s in spec.masks()):
                return d
        cands = []
    return full


def _submasks(d: int) -> list[int]:
    return sorted(m for m in range(d + 1) if m & ~d == 0)


# ---------------------------------------------------------------------------
# Whole-spec compilation


STAGES = ("copy", "predicate", "linear", "min", "ycopy", "gate", "rename", "final")


@dataclass
class CompileReport:
    n: int
    domains: list[int]
    names: dict[str, str] = field(default_factory=dict)
    stage_of: list[str] = field(default_factory=list)
    species_count: int = 0
    pruned: bool = False

    @property
    def counts(self) -> dict[str, int]:
        c = Counter(self.stage_of)
        return {s: c.get(s, 0) for s in STAGES}

    def to_json(self) -> dict:
        return {
            "schema": 1,
            "inputs": self.n,
            "domains": [members(m) for m in self.domains],
            "pruned": self.pruned,
            "species": self.species_count,
            "reactions": len(self.stage_of),
            "counts": self.counts,
            "names": dict(self.names),
        }


class _Emitter:
    def __init__(self):
        self.reactions: list[Reaction] = []
        self.stages: list[str] = []

    def add(self, stage: str, rxns: Iterable[Reaction]) -> None:
        for r in rxns:
            self.reactions.append(r)
            self.stages.append(stage)


def _is_unit(c: LinearFn) -> int | None:
    """1-based index if ``c`` is exactly one input with coefficient 1."""
    nz = [i for i, a in enumerate(c.coeffs) if a]
    if len(nz) == 1 and c.coeffs[nz[0]] == 1:
        return nz[0] + 1
    return None


def compile_spec(spec: FunctionSpec, prune: bool = False, validate: bool = True, pairs: int = 50) -> tuple[Crc, CompileReport]:
    """Min over accumulators ``H_S`` of ``g_S`` plus predicate-gated ``g_K`` for ``K`` not in ``S``.

    With ``prune`` only the inputs whose presence changes the piece are branched on,
    and reactions that can never fire or never influence the output are dropped.
    """
    n = spec.n
    if n > 8:
        raise TooManyInputs(f"{n} inputs (at most 8 supported)")
    if n > 5:
        warnings.warn(f"compiling {n} inputs enumerates {2 ** n} domains", stacklevel=2)
    if spec.affine:
        raise SpecError("spec has constant terms; use compile_with_context")
    if validate:
        report = validate_spec(spec, pairs=pairs)
        if not report.valid:
            raise ValidationFailed(report)

    full = spec.full_mask
    dset = discontinuity_set(spec) if prune else full
    rest = full & ~dset
    us = _submasks(dset)
    g = {u: spec.g(u | rest) for u in us}
    gates = [(s, k) for s in us for k in us if k & ~s]
    preds = [k for k in us if k]
    single = len(us) == 1

    names: dict[str, str] = {input_name(i): input_name(i) for i in range(1, n + 1)}
    ysp = {u: (OUTPUT if single else f"Y_S{u}") for u in us}
    hsp = {}
    gated_into = Counter(s for s, _ in gates)
    gates_from = Counter(k for _, k in gates)
    for u in us:
        if single:
            hsp[u] = OUTPUT
        elif gates_from[u] or gated_into[u]:
            hsp[u] = f"H{u}"
        else:
            hsp[u] = ysp[u]

    # Input copies, one per consumer.
    consumers: dict[int, int] = Counter()
    plan_pred = {}
    for k in preds:
        uses = []
        for i in members(k):
            consumers[i] += 1
            uses.append((i, consumers[i]))
        plan_pred[k] = uses
    plan_mod: dict[int, list] = {}
    for u in us:
        comps = [] if g[u].is_zero() else list(g[u].components)
        plan = []
        for c in comps:
            unit = _is_unit(c) if len(comps) > 1 else None
            if unit is not None:
                consumers[unit] += 1
                plan.append(("unit", unit, consumers[unit]))
            else:
                terms = []
                for i, a in enumerate(c.coeffs, start=1):
                    if a:
                        consumers[i] += 1
                        terms.append((i, consumers[i]))
                plan.append(("lin", c, terms))
        plan_mod[u] = plan

    def cp(i: int, j: int) -> str:
        return f"X{i}_c{j}"

    em = _Emitter()
    for i in range(1, n + 1):
        if consumers[i]:
            em.add("copy", compile_copy(input_name(i), [cp(i, j) for j in range(1, consumers[i] + 1)]).reactions)
    for k in preds:
        em.add("predicate", [Reaction.of([cp(i, j) for i, j in plan_pred[k]], [f"P{k}"])])
        names[f"P{mask_label(k)}"] = f"P{k}"
    mins = []
    for u in us:
        plan = plan_mod[u]
        names[f"Y{mask_label(u)}"] = ysp[u]
        if len(plan) == 1:
            _, c, terms = plan[0]
            em.add("linear", _lin_terms(c, terms, cp, ysp[u]))
        elif plan:
            parts = []
            for k, item in enumerate(plan, start=1):
                if item[0] == "unit":
                    parts.append(cp(item[1], item[2]))
                else:
                    part = f"Y_S{u}_{k}"
                    em.add("linear", _lin_terms(item[1], item[2], cp, part))
                    parts.append(part)
            mins.append(Reaction.of(parts, [ysp[u]]))
    em.add("min", mins)
    renames = []
    for u in us:
        if single:
            continue
        outs = ([hsp[u]] if hsp[u] != ysp[u] else []) + [f"Y_S{u}_g{s}" for s, k in gates if k == u]
        if len(outs) >= 2:
            em.add("ycopy", compile_copy(ysp[u], outs).reactions)
        elif outs:
            renames.append(Reaction.of([ysp[u]], [hsp[u]]))
    for s, k in gates:
        em.add("gate", compile_gate(f"Y_S{k}_g{s}", f"P{k}", hsp[s]).reactions)
    em.add("rename", renames)
    if not single:
        em.add("final", [Reaction.of([hsp[u] for u in us], [OUTPUT])])
    for u in us:
        names[f"H{mask_label(u)}"] = hsp[u]

    inputs = [input_name(i) for i in range(1, n + 1)]
    reactions, stages = em.reactions, em.stages
    if prune:
        reactions, stages = eliminate_dead(reactions, stages, inputs, OUTPUT)
    crn = Crn.from_reactions(reactions, species=inputs)
    if OUTPUT not in crn.species:
        crn = Crn(crn.species + (OUTPUT,), crn.reactions)
    live = set(crn.species)
    report = CompileReport(n, us, {k: v for k, v in names.items() if v in live}, stages, len(crn.species), prune)
    return Crc(crn, tuple(inputs), OUTPUT), report


def _lin_terms(c: LinearFn, terms, cp, out) -> list[Reaction]:
    rxns = []
    for i, j in terms:
        a = c.coeffs[i - 1]
        rxns.append(Reaction(((cp(i, j), a.denominator),), ((out, a.numerator),)))
    return rxns


def eliminate_dead(reactions: Sequence[Reaction], stages: Sequence[str], sources: Iterable[str], output: str):
    """Drop reactions that can never fire or never feed ``output``; trim unused products."""
    have = set(sources)
    live = [False] * len(reactions)
    changed = True
    while changed:
        changed = False
        for j, r in enumerate(reactions):
            if not live[j] and all(s in have for s, _ in r.reactants):
                live[j] = True
                have.update(s for s, _ in r.products)
                changed = True
    useful_sp = {output}
    useful = [False] * len(reactions)
    changed = True
    while changed:
        changed = False
        for j, r in enumerate(reactions):
            if live[j] and not useful[j] and any(s in useful_sp for s, _ in r.products if r.net().get(s, 0) > 0):
                useful[j] = True
                useful_sp.update(s for s, _ in r.reactants)
                changed = True
    kept = [(r, st) for r, st, u in zip(reactions, stages, useful) if u]
    consumed = {s for r, _ in kept for s, _ in r.reactants} | {output}
    out_r, out_s = [], []
    for r, st in kept:
        prods = tuple((s, c) for s, c in r.products if s in consumed)
        out_r.append(Reaction(r.reactants, prods))
        out_s.append(st)
    return out_r, out_s


# ---------------------------------------------------------------------------
# Bimolecular decomposition


def _fresh(taken: set[str], counter: list[int]) -> str:
    while True:
        counter[0] += 1
        name = f"W{counter[0]}"
        if name not in taken:
            taken.add(name)
            return name


def _reduce_repeats(species: str, k: int, taken, counter, out: list[Reaction]) -> list[str]:
    """Units standing for ``k`` copies of ``species``.

    Powers of two use a halving tree, so no species feeds two reactions. Any odd
    factor falls back to reversible binding, which is not feedforward.
    """
    units = []
    e = (k & -k).bit_length() - 1
    odd = k >> e
    cur = species
    for _ in range(e):
        nxt = _fresh(taken, counter)
        out.append(Reaction(((cur, 2),), ((nxt, 1),)))
        cur = nxt
    if odd == 1:
        units.append(cur)
        return units
    acc = cur
    for _ in range(odd - 1):
        nxt = _fresh(taken, counter)
        pair = Reaction.of([acc, cur], [nxt]) if acc != cur else Reaction(((cur, 2),), ((nxt, 1),))
        out.append(pair)
        out.append(Reaction(pair.products, pair.reactants))
        acc = nxt
    units.append(acc)
    return units


def _split(first: list[tuple[str, int]], prods: list[str], taken, counter) -> list[Reaction]:
    """Reactant side ``first`` produces the product list via a splitter chain."""
    if len(prods) <= 2:
        return [Reaction(tuple(first), _collect(prods))]
    rxns = []
    w = _fresh(taken, counter)
    rxns.append(Reaction(tuple(first), _collect([w, prods[-1]])))
    rest = prods[:-1]
    while len(rest) > 2:
        nxt = _fresh(taken, counter)
        rxns.append(Reaction.of([w], [nxt, rest[-1]]))
        w = nxt
        rest = rest[:-1]
    rxns.append(Reaction(((w, 1),), _collect(rest)))
    return rxns


def _collect(names: Sequence[str]) -> tuple[tuple[str, int], ...]:
    c: dict[str, int] = {}
    for s in names:
        c[s] = c.get(s, 0) + 1
    return tuple(c.items())


def _decompose(r: Reaction, taken, counter) -> list[Reaction]:
    nreact = sum(k for _, k in r.reactants)
    nprod = sum(k for _, k in r.products)
    if nreact <= 2 and nprod <= 2:
        return [r]
    prods = [s for s, k in r.products for _ in range(k)]
    out: list[Reaction] = []
    if nreact <= 2:
        out.extend(_split(list(r.reactants), prods, taken, counter))
        return out
    units: list[str] = []
    for s, k in r.reactants:
        units.extend(_reduce_repeats(s, k, taken, counter, out) if k > 1 else [s])
    while len(units) > 2:
        w = _fresh(taken, counter)
        out.append(Reaction.of(units[:2], [w]))
        units = [w] + units[2:]
    out.extend(_split(list(_collect(units)), prods, taken, counter))
    return out


def decompose_bimolecular(net: Crn | Crc) -> Crn | Crc:
    """Rewrite every reaction to at most two reactants and two products (fresh ``W`` species)."""
    crn = net.crn if isinstance(net, Crc) else net
    taken = set(crn.species)
    counter = [0]
    reactions = [x for r in crn.reactions for x in _decompose(r, taken, counter)]
    new = Crn.from_reactions(reactions, species=crn.species)
    if isinstance(net, Crc):
        return Crc(new, net.inputs, net.output, dict(net.context))
    return new


def is_bimolecular(crn: Crn) -> bool:
    return all(sum(k for _, k in r.reactants) <= 2 and sum(k for _, k in r.products) <= 2 for r in crn.reactions)


# ---------------------------------------------------------------------------
# Initial context


def fuse_renames(crc: Crc) -> Crc:
    """Merge ``A -> B`` into its surroundings when it is A's only consumer and B's only producer."""
    reactions = list(crc.reactions)
    protected = set(crc.inputs) | {crc.output} | set(crc.context)
    while True:
        for j, r in enumerate(reactions):
            if len(r.reactants) != 1 or len(r.products) != 1:
                continue
            (a, ka), (b, kb) = r.reactants[0], r.products[0]
            if ka != 1 or kb != 1 or b in protected:
                continue
            if any(a in rr.reactant_map for i, rr in enumerate(reactions) if i != j):
                continue
            if any(b in rr.product_map for i, rr in enumerate(reactions) if i != j):
                continue
            reactions = [_rename(rr, b, a) for i, rr in enumerate(reactions) if i != j]
            break
        else:
            break
    crn = Crn.from_reactions(reactions, species=[*crc.inputs, *crc.context, crc.output])
    return Crc(crn, crc.inputs, crc.output, dict(crc.context))


def _rename(r: Reaction, old: str, new: str) -> Reaction:
    sub = lambda side: tuple((new if s == old else s, k) for s, k in side)  # noqa: E731
    return Reaction(sub(r.reactants), sub(r.products))


def unit_context(crc: Crc, unit: str = "S_unit") -> Crc:
    """Replace rational context values by a single unit species.

    ``unit -> S_1' + ... + S_k'`` fans out, and ``b S_i' -> a S_i`` scales each
    branch to ``a/b``. A lone context species skips the fan-out.
    """
    ctx = {s: v for s, v in crc.context.items() if v}
    if unit in crc.species:
        raise CrnError(f"species {unit} already exists")
    pre: list[Reaction] = []
    if len(ctx) == 1:
        ((s, v),) = ctx.items()
        pre.append(Reaction(((unit, v.denominator),), ((s, v.numerator),)))
    elif ctx:
        primes = [f"{s}'" for s in ctx]
        pre.append(Reaction.of([unit], primes))
        for (s, v), p in zip(ctx.items(), primes):
            pre.append(Reaction(((p, v.denominator),), ((s, v.numerator),)))
    crn = Crn.from_reactions(pre + list(crc.reactions), species=crc.species + (unit,))
    return Crc(crn, crc.inputs, crc.output, {unit: Fraction(1)} if ctx else {})


def compile_with_context(spec: FunctionSpec, prune: bool = True, fuse: bool = True, pairs: int = 50) -> Crc:
    """Compile an affine spec: constants ride on an extra input held at 1 as context."""
    ext = spec.linear_extension()
    crc, _ = compile_spec(ext, prune=prune, pairs=pairs)
    g = input_name(spec.n + 1)
    reactions = [_rename(r, g, GAMMA) for r in crc.reactions]
    inputs = [input_name(i) for i in range(1, spec.n + 1)]
    crn = Crn.from_reactions(reactions, species=[*inputs, GAMMA, OUTPUT])
    out = Crc(crn, tuple(inputs), OUTPUT, {GAMMA: Fraction(1)})
    return fuse_renames(out) if fuse else out


def eval_affine(spec: FunctionSpec, x: Sequence) -> Fraction:
    """The affine oracle: the linear extension at ``gamma = 1``."""
    from .analysis import eval_spec

    return eval_spec(spec.linear_extension(), list(x) + [Fraction(1)])
