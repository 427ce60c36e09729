"""Chemical reaction networks, computers (CRCs), states, and the ``.crn`` text format.

The text format, one item per line::

    # comment
    species: X1, X2, Y
    inputs: X1, X2
    output: Y
    context: S=1, T=2/3
    X1 + X2 -> Y
    2 X -> 3 Y
    Y + K -> 0
    A <-> B

``<->`` is sugar for two irreversible reactions, and ``0`` is the empty product side.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .exact import format_rational, to_rational

State = dict[str, Fraction]

_NAME = r"[A-Za-z_'][A-Za-z0-9_'~]*"
_NAME_RE = re.compile(_NAME + r"\Z")
_TERM_RE = re.compile(r"\s*(?:(\d+)\s*)?(" + _NAME + r")\s*")


class CrnSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class CrnError(ValueError):
    """Structural problem with a network (not a parse error)."""


def is_species_name(name: str) -> bool:
    return bool(_NAME_RE.match(name))


@dataclass(frozen=True)
class Reaction:
    """Reactant and product stoichiometry, each a tuple of ``(species, count)`` pairs."""

    reactants: tuple[tuple[str, int], ...]
    products: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        if not self.reactants:
            raise CrnError("reactions of the form 0 -> ... are not allowed")
        for side in (self.reactants, self.products):
            seen = set()
            for s, k in side:
                if k <= 0:
                    raise CrnError(f"stoichiometry of {s} must be positive, got {k}")
                if s in seen:
                    raise CrnError(f"species {s} listed twice on one side")
                seen.add(s)

    @classmethod
    def of(cls, reactants: Mapping[str, int] | Iterable[str], products=()) -> "Reaction":
        """Build from mappings or from species lists (repeats add up)."""
        return cls(_collect(reactants), _collect(products))

    @property
    def reactant_map(self) -> dict[str, int]:
        return dict(self.reactants)

    @property
    def product_map(self) -> dict[str, int]:
        return dict(self.products)

    def species(self) -> list[str]:
        out = []
        for s, _ in self.reactants + self.products:
            if s not in out:
                out.append(s)
        return out

    def net(self) -> dict[str, int]:
        """Net change per species, omitting zeros (catalysts)."""
        delta: dict[str, int] = {}
        for s, k in self.reactants:
            delta[s] = delta.get(s, 0) - k
        for s, k in self.products:
            delta[s] = delta.get(s, 0) + k
        return {s: v for s, v in delta.items() if v}

    def net_consumed(self) -> list[str]:
        return [s for s, v in self.net().items() if v < 0]

    def __str__(self) -> str:
        return f"{_side(self.reactants)} -> {_side(self.products)}"


def _collect(side) -> tuple[tuple[str, int], ...]:
    if isinstance(side, Mapping):
        return tuple((s, int(k)) for s, k in side.items() if k)
    counts: dict[str, int] = {}
    for s in side:
        counts[s] = counts.get(s, 0) + 1
    return tuple(counts.items())


def _side(side: tuple[tuple[str, int], ...]) -> str:
    if not side:
        return "0"
    return " + ".join(s if k == 1 else f"{k} {s}" for s, k in side)


@dataclass(frozen=True)
class Crn:
    species: tuple[str, ...]
    reactions: tuple[Reaction, ...]

    def __post_init__(self):
        if len(set(self.species)) != len(self.species):
            raise CrnError("duplicate species")
        known = set(self.species)
        for r in self.reactions:
            for s in r.species():
                if s not in known:
                    raise CrnError(f"reaction {r} mentions undeclared species {s}")

    @classmethod
    def from_reactions(cls, reactions: Iterable[Reaction], species: Iterable[str] = ()) -> "Crn":
        """Species in first-appearance order: the explicit list first, then reactions."""
        reactions = tuple(reactions)
        order: list[str] = []
        seen = set()
        for s in species:
            if s not in seen:
                seen.add(s)
                order.append(s)
        for r in reactions:
            for s in r.species():
                if s not in seen:
                    seen.add(s)
                    order.append(s)
        return cls(tuple(order), reactions)

    def index(self) -> dict[str, int]:
        return {s: i for i, s in enumerate(self.species)}


@dataclass(frozen=True)
class Crc:
    """A CRN with ordered input species, one output species and optional initial context."""

    crn: Crn
    inputs: tuple[str, ...]
    output: str
    context: Mapping[str, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        known = set(self.crn.species)
        if self.output in self.inputs:
            raise CrnError("output species must not be an input")
        for s in (*self.inputs, self.output, *self.context):
            if s not in known:
                raise CrnError(f"species {s} is not part of the network")
        for s, v in self.context.items():
            if s in self.inputs or s == self.output:
                raise CrnError(f"context species {s} overlaps inputs/output")
            if v < 0:
                raise CrnError(f"negative context concentration for {s}")

    @property
    def species(self) -> tuple[str, ...]:
        return self.crn.species

    @property
    def reactions(self) -> tuple[Reaction, ...]:
        return self.crn.reactions

    def initial_state(self, x: Mapping[str, Fraction] | Sequence[Fraction]) -> State:
        """Input concentrations plus context; ``x`` by name or in input order."""
        if isinstance(x, Mapping):
            state = {s: to_rational(v) for s, v in x.items()}
            for s in state:
                if s not in self.inputs:
                    raise CrnError(f"{s} is not an input species")
        else:
            if len(x) != len(self.inputs):
                raise CrnError(f"expected {len(self.inputs)} inputs, got {len(x)}")
            state = {s: to_rational(v) for s, v in zip(self.inputs, x)}
        for s, v in self.context.items():
            state[s] = state.get(s, Fraction(0)) + v
        for s, v in state.items():
            if v < 0:
                raise CrnError(f"negative concentration for {s}")
        return state

    def with_reactions(self, reactions: Iterable[Reaction]) -> "Crc":
        crn = Crn.from_reactions(reactions, species=self.crn.species)
        return Crc(crn, self.inputs, self.output, dict(self.context))


# ---------------------------------------------------------------------------
# Parsing and serialization


def _parse_side(text: str, lineno: int, col0: int) -> tuple[tuple[str, int], ...]:
    if text.strip() in ("", "0"):
        return ()
    counts: dict[str, int] = {}
    pos = 0
    for chunk in text.split("+"):
        m = _TERM_RE.fullmatch(chunk)
        if not m:
            offset = len(chunk) - len(chunk.lstrip())
            raise CrnSyntaxError(f"bad term {chunk.strip()!r}", lineno, col0 + pos + offset + 1)
        k = int(m.group(1)) if m.group(1) else 1
        if k == 0:
            raise CrnSyntaxError("zero stoichiometry", lineno, col0 + pos + 1)
        name = m.group(2)
        counts[name] = counts.get(name, 0) + k
        pos += len(chunk) + 1
    return tuple(counts.items())


def _parse_names(value: str, lineno: int, col: int) -> list[str]:
    names = [v.strip() for v in value.split(",") if v.strip()]
    for nm in names:
        if not is_species_name(nm):
            raise CrnSyntaxError(f"bad species name {nm!r}", lineno, col)
    return names


def _parse_assignments(value: str, lineno: int, col: int) -> dict[str, Fraction]:
    out: dict[str, Fraction] = {}
    for item in value.split(","):
        if not item.strip():
            continue
        if "=" not in item:
            raise CrnSyntaxError(f"expected name=value, got {item.strip()!r}", lineno, col)
        name, val = (p.strip() for p in item.split("=", 1))
        if not is_species_name(name):
            raise CrnSyntaxError(f"bad species name {name!r}", lineno, col)
        try:
            q = to_rational(val)
        except ValueError:
            raise CrnSyntaxError(f"bad rational {val!r}", lineno, col) from None
        if name in out:
            raise CrnSyntaxError(f"{name} assigned twice", lineno, col)
        out[name] = q
    return out


@dataclass
class ParsedFile:
    crn: Crn
    inputs: list[str] | None = None
    output: str | None = None
    context: dict[str, Fraction] = field(default_factory=dict)

    def crc(self, default_output: str | None = None, default_inputs=None) -> Crc:
        output = self.output or default_output
        if output is None:
            raise CrnError("no output species: add an 'output:' header")
        inputs = self.inputs if self.inputs is not None else list(default_inputs or [])
        crn = self.crn
        missing = [s for s in (*inputs, output, *self.context) if s not in crn.species]
        if missing:
            crn = Crn(crn.species + tuple(missing), crn.reactions)
        return Crc(crn, tuple(inputs), output, dict(self.context))


def parse_file(text: str) -> ParsedFile:
    declared: list[str] = []
    inputs = output = None
    context: dict[str, Fraction] = {}
    reactions: list[Reaction] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        head = re.match(r"\s*(species|inputs|output|context)\s*:", line)
        if head:
            key = head.group(1)
            value = line[head.end():]
            col = head.end() + 1
            if key == "species":
                for nm in _parse_names(value, lineno, col):
                    if nm in declared:
                        raise CrnSyntaxError(f"duplicate species definition {nm}", lineno, col)
                    declared.append(nm)
            elif key == "inputs":
                inputs = _parse_names(value, lineno, col)
            elif key == "output":
                names = _parse_names(value, lineno, col)
                if len(names) != 1:
                    raise CrnSyntaxError("exactly one output species expected", lineno, col)
                output = names[0]
            else:
                context.update(_parse_assignments(value, lineno, col))
            continue
        if "<->" in line:
            arrow, reversible = "<->", True
        elif "->" in line:
            arrow, reversible = "->", False
        else:
            raise CrnSyntaxError("expected '->' in reaction", lineno, 1)
        lhs, rhs = line.split(arrow, 1)
        if arrow in rhs:
            raise CrnSyntaxError("more than one arrow", lineno, len(lhs) + len(arrow) + rhs.index(arrow) + 1)
        left = _parse_side(lhs, lineno, 0)
        right = _parse_side(rhs, lineno, len(lhs) + len(arrow))
        if not left:
            raise CrnSyntaxError("empty reactant side (0 -> ... is not allowed)", lineno, 1)
        reactions.append(Reaction(left, right))
        if reversible:
            if not right:
                raise CrnSyntaxError("reversible reaction needs products", lineno, len(lhs) + 1)
            reactions.append(Reaction(right, left))
    header_species = [*declared, *(inputs or []), *([output] if output else []), *context]
    crn = Crn.from_reactions(reactions, species=header_species)
    return ParsedFile(crn, inputs, output, context)


def parse_crn(text: str) -> Crn:
    """Parse ``.crn`` text. Species come out in first-appearance order."""
    return parse_file(text).crn


def parse_crc(text: str, default_output: str | None = None) -> Crc:
    return parse_file(text).crc(default_output)


def serialize_crn(crn: Crn | Crc) -> str:
    """Inverse of :func:`parse_crn` (and of :func:`parse_crc` for a Crc)."""
    lines = []
    net = crn.crn if isinstance(crn, Crc) else crn
    if net.species:
        lines.append("species: " + ", ".join(net.species))
    if isinstance(crn, Crc):
        lines.append("inputs: " + ", ".join(crn.inputs))
        lines.append("output: " + crn.output)
        if crn.context:
            lines.append(
                "context: "
                + ", ".join(f"{s}={format_rational(v)}" for s, v in crn.context.items())
            )
    lines.extend(str(r) for r in net.reactions)
    return "\n".join(lines) + "\n"


def parse_state(text: str) -> State:
    """State file: one ``species = rational`` per line (``#`` comments allowed).

    A single line of comma-separated assignments is accepted too.
    """
    state: State = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for name, q in _parse_assignments(line, lineno, 1).items():
            if name in state:
                raise CrnSyntaxError(f"{name} assigned twice", lineno, 1)
            if q < 0:
                raise CrnSyntaxError(f"negative concentration for {name}", lineno, 1)
            state[name] = q
    return state


def format_state(state: Mapping[str, Fraction], species: Sequence[str] | None = None, sep: str = "\n") -> str:
    names = list(species) if species is not None else list(state)
    return sep.join(f"{s} = {format_rational(state.get(s, Fraction(0)))}" for s in names)


# ---------------------------------------------------------------------------
# Matrix view and applicability


def stoich_matrix(crn: Crn) -> list[list[int]]:
    """Rows are species (in ``crn.species`` order), columns are reactions."""
    idx = crn.index()
    m = [[0] * len(crn.reactions) for _ in crn.species]
    for j, r in enumerate(crn.reactions):
        for s, v in r.net().items():
            m[idx[s]][j] = v
    return m


def present(state: Mapping[str, Fraction]) -> set[str]:
    return {s for s, v in state.items() if v > 0}


def is_applicable(reaction: Reaction, state: Mapping[str, Fraction]) -> bool:
    return all(state.get(s, 0) > 0 for s, _ in reaction.reactants)


def applicable_reactions(crn: Crn, state: Mapping[str, Fraction]) -> set[int]:
    return {j for j, r in enumerate(crn.reactions) if is_applicable(r, state)}
