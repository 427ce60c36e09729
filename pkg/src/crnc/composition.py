"""Wiring CRCs together: renaming, fan-out, and the output-consumer pruning transform."""

from __future__ import annotations

from dataclasses import dataclass, field

from .crn import Crc, Crn, CrnError, Reaction


class NameCollision(CrnError):
    pass


class NotOutputOblivious(CrnError):
    pass


@dataclass(frozen=True)
class ObliviousnessVerdict:
    oblivious: bool
    offenders: tuple[int, ...] = ()

    def __bool__(self) -> bool:
        return self.oblivious


def is_output_oblivious(crc: Crc) -> ObliviousnessVerdict:
    """Output-oblivious iff the output never appears as a reactant."""
    bad = tuple(j for j, r in enumerate(crc.reactions) if crc.output in r.reactant_map)
    return ObliviousnessVerdict(not bad, bad)


@dataclass(frozen=True)
class WiringPlan:
    upstream: Crc
    downstream: Crc
    bind: str
    suffix: str = "~2"


def _rename_reaction(r: Reaction, m: dict[str, str]) -> Reaction:
    return Reaction(tuple((m.get(s, s), k) for s, k in r.reactants), tuple((m.get(s, s), k) for s, k in r.products))


def compose(plan: WiringPlan) -> Crc:
    """Concatenate two CRCs; the bound downstream input becomes the upstream output.

    Every other downstream species gets ``plan.suffix`` appended.
    """
    up, down = plan.upstream, plan.downstream
    if plan.bind not in down.inputs:
        raise CrnError(f"{plan.bind} is not an input of the downstream CRC")
    mapping = {s: s + plan.suffix for s in down.species}
    mapping[plan.bind] = up.output
    clash = sorted(v for k, v in mapping.items() if k != plan.bind and v in up.species)
    if clash:
        raise NameCollision(f"renamed species collide with upstream: {', '.join(clash)}")
    reactions = list(up.reactions) + [_rename_reaction(r, mapping) for r in down.reactions]
    inputs = list(up.inputs) + [mapping[s] for s in down.inputs if s != plan.bind]
    context = dict(up.context)
    context.update({mapping[s]: v for s, v in down.context.items()})
    species = list(up.species) + [mapping[s] for s in down.species if s != plan.bind]
    crn = Crn.from_reactions(reactions, species=species)
    return Crc(crn, tuple(inputs), mapping[down.output], context)


def compose_auto(upstream: Crc, downstream: Crc, bind: str, max_tries: int = 100) -> Crc:
    """:func:`compose` with suffixes ``~2``, ``~3``, ... until one is collision-free."""
    for k in range(2, 2 + max_tries):
        try:
            return compose(WiringPlan(upstream, downstream, bind, f"~{k}"))
        except NameCollision:
            continue
    raise NameCollision("no collision-free suffix found")


@dataclass
class Fanout:
    crc: Crc
    outputs: list[str] = field(default_factory=list)

    def views(self) -> list[Crc]:
        """One single-output CRC per copy, for binding downstream modules."""
        return [Crc(self.crc.crn, self.crc.inputs, y, dict(self.crc.context)) for y in self.outputs]


def fanout(crc: Crc, k: int) -> Fanout:
    """Add ``Y -> Yc1 + ... + Yck`` so ``k`` downstream modules each get their own copy."""
    if k < 1:
        raise ValueError("fan-out needs k >= 1")
    if not is_output_oblivious(crc):
        raise NotOutputOblivious("fan-out requires an output-oblivious CRC")
    outs = [f"{crc.output}c{i}" for i in range(1, k + 1)]
    clash = [s for s in outs if s in crc.species]
    if clash:
        raise NameCollision(f"copy species already exist: {', '.join(clash)}")
    crn = Crn.from_reactions([*crc.reactions, Reaction.of([crc.output], outs)], species=crc.species)
    return Fanout(Crc(crn, crc.inputs, outs[0], dict(crc.context)), outs)


def prune_output_consumers(crc: Crc) -> tuple[Crc, list[Reaction]]:
    """Drop every reaction consuming the output; returns the pruned CRC and what was removed.

    This preserves the computed function only when the original CRC is composable.
    """
    keep, removed = [], []
    for r in crc.reactions:
        (removed if crc.output in r.reactant_map else keep).append(r)
    return crc.with_reactions(keep), removed


# The two nets from the introduction, used in tests and the CLI examples.
MIN_NET = "inputs: X1, X2\noutput: Y\nX1 + X2 -> Y\n"
MAX_NET = "inputs: X1, X2\noutput: Y\nX1 -> Z1 + Y\nX2 -> Z2 + Y\nZ1 + Z2 -> K\nY + K -> 0\n"
