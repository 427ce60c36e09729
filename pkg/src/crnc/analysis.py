"""Oracles for function specs and the validator for compilability."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .exact import EQ, GE, LinearProgram, Optimal, format_rational, lp_solve, to_rational
from .spec import FunctionSpec, LinearFn, SpecError, mask_label, members, support_mask

ZERO = Fraction(0)
Evaluator = Callable[[Sequence[Fraction]], Fraction]


def _check_point(spec: FunctionSpec, x: Sequence) -> list[Fraction]:
    if len(x) != spec.n:
        raise SpecError(f"expected {spec.n} coordinates, got {len(x)}")
    xs = [to_rational(v) for v in x]
    for i, v in enumerate(xs):
        if v < 0:
            raise SpecError(f"coordinate {i + 1} is negative")
    return xs


def eval_spec(spec: FunctionSpec, x: Sequence) -> Fraction:
    """``g_I(x)`` for ``I`` the support of ``x``."""
    xs = _check_point(spec, x)
    return spec.g(support_mask(xs))(xs)


def predicate(mask: int, x: Sequence[Fraction]) -> int:
    return int(all(x[i - 1] > 0 for i in members(mask)))


def eval_min_formula(spec: FunctionSpec, x: Sequence) -> Fraction:
    """Brute-force ``min_S [g_S(x) + sum_{K not subset of S} P_K(x) g_K(x)]``."""
    xs = _check_point(spec, x)
    masks = spec.masks()
    gx = {m: spec.g(m)(xs) for m in masks}
    best = None
    for s in masks:
        h = gx[s] + sum((gx[k] for k in masks if k & ~s and predicate(k, xs)), ZERO)
        if best is None or h < best:
            best = h
    return best


# ---------------------------------------------------------------------------
# Validation


@dataclass
class DomainOrderViolation:
    """``g_T < g_S`` somewhere on ``D_S`` although ``S`` is a subset of ``T``."""

    small: int
    large: int
    component: LinearFn
    gap: Fraction
    point: list[Fraction]
    pair: tuple[list[Fraction], list[Fraction]] | None = None

    def to_json(self) -> dict:
        d = {
            "S": members(self.small),
            "T": members(self.large),
            "component": [format_rational(a) for a in self.component.coeffs],
            "gap": format_rational(self.gap),
            "point": [format_rational(v) for v in self.point],
        }
        if self.pair:
            d["counterexample"] = {"a": [format_rational(v) for v in self.pair[0]],
                                   "b": [format_rational(v) for v in self.pair[1]]}
        return d


@dataclass
class SuperadditivityViolation:
    a: list[Fraction]
    b: list[Fraction]
    fa: Fraction
    fb: Fraction
    fab: Fraction

    def to_json(self) -> dict:
        q = format_rational
        return {"a": [q(v) for v in self.a], "b": [q(v) for v in self.b],
                "f(a)": q(self.fa), "f(b)": q(self.fb), "f(a+b)": q(self.fab)}


@dataclass
class ValidationReport:
    structural_errors: list[str] = field(default_factory=list)
    canonicalized: list[str] = field(default_factory=list)
    domain_order_checked: int = 0
    domain_order_violations: list[DomainOrderViolation] = field(default_factory=list)
    pairs_tested: int = 0
    superadditivity_violations: list[SuperadditivityViolation] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not (self.structural_errors or self.domain_order_violations or self.superadditivity_violations)

    def to_json(self) -> dict:
        return {
            "valid": self.valid,
            "structural_errors": list(self.structural_errors),
            "canonicalized": list(self.canonicalized),
            "domain_order": {"checked": self.domain_order_checked,
                        "violations": [v.to_json() for v in self.domain_order_violations]},
            "superadditivity": {"pairs": self.pairs_tested,
                                "violation_count": len(self.superadditivity_violations),
                                "violations": [v.to_json() for v in self.superadditivity_violations[:5]]},
        }


class ValidationFailed(ValueError):
    def __init__(self, report: ValidationReport):
        reasons = report.structural_errors[:1]
        if report.domain_order_violations:
            v = report.domain_order_violations[0]
            reasons.append(f"g_{mask_label(v.large)} < g_{mask_label(v.small)} on D_{mask_label(v.small)}")
        if report.superadditivity_violations:
            reasons.append("sampled superadditivity violation")
        super().__init__("spec failed validation: " + "; ".join(reasons))
        self.report = report


def _structural(spec: FunctionSpec, report: ValidationReport) -> None:
    for m in spec.masks():
        g = spec.raw(m)
        if g is None:
            report.structural_errors.append(f"domain {mask_label(m)} missing and inheritance is off")
            continue
        for c in g.components:
            if any(a < 0 for a in c.coeffs) or c.constant < 0:
                report.structural_errors.append(f"negative coefficient in domain {mask_label(m)}")
                break
        if m in spec.domains:
            for c in g.components:
                if any(a for i, a in enumerate(c.coeffs) if not m >> i & 1):
                    report.canonicalized.append(f"domain {mask_label(m)}: coefficients outside the support zeroed")
                    break


def max_gap(comps: Sequence[LinearFn], b: LinearFn, idx: Sequence[int]) -> tuple[Fraction, list[Fraction]]:
    """Max of ``min_i a_i(x) - b(x)`` over the unit simplex on coordinates ``idx`` (1-based)."""
    n = b.n
    k = len(idx)
    # variables: x_i for i in S (>= 0), then t (free)
    rows = []
    for a in comps:
        rows.append(([a.coeffs[i - 1] - b.coeffs[i - 1] for i in idx] + [Fraction(-1)], GE, 0))
    rows.append(([Fraction(1)] * k + [ZERO], EQ, 1))
    lp = LinearProgram.build([ZERO] * k + [Fraction(1)], rows, lower=[ZERO] * k + [None])
    res = lp_solve(lp)
    assert isinstance(res, Optimal)
    x = [ZERO] * n
    for pos, i in enumerate(idx):
        x[i - 1] = res.witness[pos]
    return res.value, x


def domain_order_gap(spec: FunctionSpec, small: int, large: int, b: LinearFn) -> tuple[Fraction, list[Fraction]]:
    """Largest excess of ``g_S`` over the component ``b`` of ``g_T`` on the closure of ``D_S``."""
    return max_gap(spec.g(small).components, b, members(small))


def _interior(spec, small, large, x) -> list[Fraction]:
    """Move a boundary witness into ``D_S`` while keeping ``g_T < g_S``."""
    idx = members(small)
    gs, gt = spec.g(small), spec.g(large)
    delta = Fraction(1, 2)
    for _ in range(200):
        y = [(1 - delta) * v for v in x]
        for i in idx:
            y[i - 1] += delta / len(idx)
        if gt(y) < gs(y):
            return y
        delta /= 2
    raise AssertionError("could not perturb witness into the open domain")


def _superadditivity_pair(spec, small, large, x):
    extra = [i for i in members(large) if not small >> (i - 1) & 1]
    eps = Fraction(1)
    for _ in range(200):
        b = [eps if (i + 1) in extra else ZERO for i in range(spec.n)]
        ab = [u + v for u, v in zip(x, b)]
        if eval_spec(spec, x) + eval_spec(spec, b) > eval_spec(spec, ab):
            return list(x), b
        eps /= 2
    return None


def random_point(rng: random.Random, n: int, mask: int | None = None) -> list[Fraction]:
    """Numerators in [0, 100], denominators in [1, 10]; ``mask`` fixes the support."""
    out = []
    for i in range(n):
        if mask is not None and not mask >> i & 1:
            out.append(ZERO)
            continue
        lo = 1 if mask is not None else 0
        out.append(Fraction(rng.randint(lo, 100), rng.randint(1, 10)))
    return out


def sample_superadditivity(n: int, f: Evaluator, pairs: int, seed: int) -> tuple[int, list[SuperadditivityViolation]]:
    rng = random.Random(seed)
    found = []
    for k in range(pairs):
        if k % 2 == 0:
            a = random_point(rng, n, rng.randrange(1 << n))
            b = random_point(rng, n, rng.randrange(1 << n))
        else:
            a, b = random_point(rng, n), random_point(rng, n)
        fa, fb = f(a), f(b)
        fab = f([u + v for u, v in zip(a, b)])
        if fa + fb > fab:
            found.append(SuperadditivityViolation(a, b, fa, fb, fab))
    return pairs, found


def validate_spec(spec: FunctionSpec, pairs: int = 200, seed: int = 0, evaluator: Evaluator | None = None) -> ValidationReport:
    """Structural checks, the subset-inequality LP battery, and sampled superadditivity.

    ``evaluator`` replaces the spec's own function in the sampled check only.
    """
    report = ValidationReport()
    _structural(spec, report)
    if not report.structural_errors:
        masks = spec.masks()
        for small in masks:
            if not small:
                continue
            for large in masks:
                if large == small or small & ~large:
                    continue
                for b in spec.g(large).components:
                    report.domain_order_checked += 1
                    gap, x = domain_order_gap(spec, small, large, b)
                    if gap > 0:
                        y = _interior(spec, small, large, x)
                        pair = _superadditivity_pair(spec, small, large, y)
                        report.domain_order_violations.append(DomainOrderViolation(small, large, b, gap, y, pair))
                        break
    f = evaluator
    if f is None and not report.structural_errors:
        f = lambda x: eval_spec(spec, x)  # noqa: E731
    if f is not None and pairs:
        report.pairs_tested, report.superadditivity_violations = sample_superadditivity(spec.n, f, pairs, seed)
    return report


def max_evaluator(x: Sequence[Fraction]) -> Fraction:
    return max(x) if len(x) else ZERO
