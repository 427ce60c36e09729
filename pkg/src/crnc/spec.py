"""Function specifications: one min-of-linear component per input support pattern.

Domains are keyed by bitmask: bit ``i-1`` set means input ``i`` is positive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .exact import format_rational, to_rational

ZERO = Fraction(0)
MAX_INPUTS = 8


class SpecError(ValueError):
    pass


def mask_of(present: Iterable[int]) -> int:
    """1-based input indices to a bitmask."""
    m = 0
    for i in present:
        if i < 1:
            raise SpecError(f"input index {i} must be >= 1")
        m |= 1 << (i - 1)
    return m


def members(mask: int) -> list[int]:
    """Bitmask to sorted 1-based input indices."""
    out, i = [], 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def support_mask(x: Sequence[Fraction]) -> int:
    return sum(1 << i for i, v in enumerate(x) if v)


def mask_label(mask: int) -> str:
    return "{" + ",".join(map(str, members(mask))) + "}"


@dataclass(frozen=True)
class LinearFn:
    coeffs: tuple[Fraction, ...]
    constant: Fraction = ZERO

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(to_rational(c) for c in self.coeffs))
        object.__setattr__(self, "constant", to_rational(self.constant))

    @property
    def n(self) -> int:
        return len(self.coeffs)

    def __call__(self, x: Sequence[Fraction]) -> Fraction:
        return self.constant + sum((a * v for a, v in zip(self.coeffs, x) if a), ZERO)

    def restrict(self, mask: int) -> "LinearFn":
        return LinearFn(tuple(a if mask >> i & 1 else ZERO for i, a in enumerate(self.coeffs)), self.constant)

    def is_zero(self) -> bool:
        return not self.constant and not any(self.coeffs)

    def dominates(self, other: "LinearFn") -> bool:
        """True if ``self >= other`` pointwise on the orthant."""
        return self.constant >= other.constant and all(a >= b for a, b in zip(self.coeffs, other.coeffs))

    def __str__(self) -> str:
        terms = [f"{format_rational(a)}*x{i + 1}" if a != 1 else f"x{i + 1}" for i, a in enumerate(self.coeffs) if a]
        if self.constant or not terms:
            terms.append(format_rational(self.constant))
        return " + ".join(terms)


@dataclass(frozen=True)
class MinOfLinear:
    components: tuple[LinearFn, ...]

    def __post_init__(self):
        if not self.components:
            raise SpecError("a min-of-linear needs at least one component")
        n = {c.n for c in self.components}
        if len(n) != 1:
            raise SpecError("components have different lengths")

    @classmethod
    def zero(cls, n: int) -> "MinOfLinear":
        return cls((LinearFn((ZERO,) * n),))

    @property
    def n(self) -> int:
        return self.components[0].n

    def __call__(self, x: Sequence[Fraction]) -> Fraction:
        return min(c(x) for c in self.components)

    def is_zero(self) -> bool:
        return len(self.components) == 1 and self.components[0].is_zero()

    def canonical(self, mask: int) -> "MinOfLinear":
        """Zero coefficients outside ``mask``, collapse zero mins, drop duplicates and dominated terms."""
        comps = [c.restrict(mask) for c in self.components]
        if any(c.is_zero() for c in comps):
            return MinOfLinear.zero(self.n)
        uniq: list[LinearFn] = []
        for c in comps:
            if c not in uniq:
                uniq.append(c)
        keep = [c for c in uniq if not any(d is not c and c.dominates(d) for d in uniq)]
        return MinOfLinear(tuple(keep))

    def __str__(self) -> str:
        if len(self.components) == 1:
            return str(self.components[0])
        return "min(" + ", ".join(str(c) for c in self.components) + ")"


@dataclass(frozen=True)
class FunctionSpec:
    """``n`` inputs and a min-of-linear ``g_S`` per support mask ``S``.

    With ``inherit_default`` an absent ``S`` uses ``g_N`` with coefficients outside
    ``S`` zeroed.
    """

    n: int
    domains: Mapping[int, MinOfLinear]
    inherit_default: bool = True
    affine: bool = False

    def __post_init__(self):
        if self.n < 0:
            raise SpecError("negative input count")
        full = self.full_mask
        if full not in self.domains:
            raise SpecError("the full-set domain must be specified")
        for m, g in self.domains.items():
            if m & ~full or m < 0:
                raise SpecError(f"domain mask {m} mentions inputs beyond {self.n}")
            if g.n != self.n:
                raise SpecError(f"domain {mask_label(m)} has {g.n} coefficients, expected {self.n}")
            if not self.affine and any(c.constant for c in g.components):
                raise SpecError("constant terms need compilation with context")

    @property
    def full_mask(self) -> int:
        return (1 << self.n) - 1

    def masks(self) -> list[int]:
        return list(range(1 << self.n))

    def raw(self, mask: int) -> MinOfLinear | None:
        if mask in self.domains:
            return self.domains[mask]
        if self.inherit_default:
            return self.domains[self.full_mask]
        return None

    def g(self, mask: int) -> MinOfLinear:
        g = self.raw(mask)
        if g is None:
            raise SpecError(f"domain {mask_label(mask)} is not specified and inheritance is off")
        return g.canonical(mask)

    def __call__(self, x: Sequence[Fraction]) -> Fraction:
        return self.g(support_mask(x))(x)

    def linear_extension(self) -> "FunctionSpec":
        """Constants become coefficients of an extra input (index ``n+1``).

        Domains where the extra input is absent take the homogeneous part.
        """
        n1 = self.n + 1
        gbit = 1 << self.n
        doms: dict[int, MinOfLinear] = {}
        for m in self.masks():
            g = self.raw(m)
            if g is None:
                continue
            doms[m | gbit] = MinOfLinear(tuple(LinearFn(c.coeffs + (c.constant,)) for c in g.components))
            doms[m] = MinOfLinear(tuple(LinearFn(c.coeffs + (ZERO,)) for c in g.components))
        return FunctionSpec(n1, doms, self.inherit_default, affine=False)


def _comp(coeffs: Sequence, constant=0) -> LinearFn:
    return LinearFn(tuple(to_rational(c) for c in coeffs), to_rational(constant))


def spec_from_dict(data: Mapping) -> FunctionSpec:
    try:
        n = int(data["inputs"])
        inherit = bool(data.get("inherit_default", True))
        doms: dict[int, MinOfLinear] = {}
        affine = False
        for d in data["domains"]:
            m = mask_of(d.get("present", []))
            if m in doms:
                raise SpecError(f"domain {mask_label(m)} listed twice")
            rows = d["min_of"]
            consts = d.get("constants")
            if consts is None:
                consts = [d.get("constant", 0)] * len(rows)
            if len(consts) != len(rows):
                raise SpecError("constants and min_of lengths differ")
            comps = []
            for row, c in zip(rows, consts):
                if len(row) != n:
                    raise SpecError(f"component of domain {mask_label(m)} has {len(row)} coefficients, expected {n}")
                comps.append(_comp(row, c))
            affine = affine or any(c.constant for c in comps)
            doms[m] = MinOfLinear(tuple(comps))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(f"malformed spec: {exc}") from exc
    return FunctionSpec(n, doms, inherit, affine)


def spec_to_dict(spec: FunctionSpec) -> dict:
    domains = []
    for m in sorted(spec.domains):
        g = spec.domains[m]
        d: dict = {
            "present": members(m),
            "min_of": [[format_rational(a) for a in c.coeffs] for c in g.components],
        }
        consts = [c.constant for c in g.components]
        if any(consts):
            if len(set(consts)) == 1:
                d["constant"] = format_rational(consts[0])
            else:
                d["constants"] = [format_rational(c) for c in consts]
        domains.append(d)
    return {"inputs": spec.n, "inherit_default": spec.inherit_default, "domains": domains}


def load_spec(text: str) -> FunctionSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"invalid JSON: {exc}") from exc
    return spec_from_dict(data)


def dump_spec(spec: FunctionSpec) -> str:
    return json.dumps(spec_to_dict(spec), indent=2) + "\n"


def make_spec(n: int, domains: Mapping[Iterable[int] | int, Sequence[Sequence]], inherit_default: bool = True) -> FunctionSpec:
    """Convenience constructor: ``{(1, 2): [[1, 0], [0, 1]], ...}`` with 1-based keys."""
    doms = {}
    for key, rows in domains.items():
        m = key if isinstance(key, int) else mask_of(key)
        doms[m] = MinOfLinear(tuple(_comp(r) for r in rows))
    return FunctionSpec(n, doms, inherit_default)


def example_spec() -> FunctionSpec:
    """x1 + x2 when x3 > 0, else min(x1, x2)."""
    return make_spec(
        3,
        {
            (1, 2, 3): [[1, 1, 0]],
            (1, 2): [[1, 0, 0], [0, 1, 0]],
            (1,): [[0, 0, 0]],
            (2,): [[0, 0, 0]],
        },
    )
