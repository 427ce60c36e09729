"""Exact rational arithmetic helpers and a dense-input, sparse-tableau simplex solver.

Rationals are plain :class:`fractions.Fraction` values at the interface; the
tableau works in GMP rationals for speed and converts back on the way out.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

from gmpy2 import mpq

RationalLike = Union[int, str, Fraction]

LE, EQ, GE = "<=", "=", ">="
_RELATIONS = (LE, EQ, GE)


def to_rational(value: RationalLike) -> Fraction:
    """Coerce an int, Fraction or ``"p/q"`` string to a Fraction.

    Floats are refused on purpose: a float has already lost the exact value.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational: {value!r}") from exc
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


def format_rational(q: Fraction) -> str:
    """Render as ``p/q``, or as an integer when the denominator is 1."""
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def dot(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {len(a)} vs {len(b)}")
    total = Fraction(0)
    for x, y in zip(a, b):
        if x and y:
            total += x * y
    return total


# ---------------------------------------------------------------------------
# Linear programs


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple[Fraction, ...]
    relation: str
    rhs: Fraction

    def __post_init__(self):
        if self.relation not in _RELATIONS:
            raise ValueError(f"unknown relation {self.relation!r}")

    def holds(self, x: Sequence[Fraction]) -> bool:
        lhs = dot(self.coeffs, x)
        if self.relation == LE:
            return lhs <= self.rhs
        if self.relation == GE:
            return lhs >= self.rhs
        return lhs == self.rhs


@dataclass(frozen=True)
class LinearProgram:
    """Maximize ``objective . x`` subject to ``constraints``.

    ``lower[j]`` is the lower bound of variable j; ``None`` means the variable is free.
    When ``lower`` is omitted every variable is bounded below by 0.
    """

    objective: tuple[Fraction, ...]
    constraints: tuple[Constraint, ...] = ()
    lower: tuple[Fraction | None, ...] | None = None

    @classmethod
    def build(cls, objective, constraints=(), lower=None) -> "LinearProgram":
        obj = tuple(to_rational(c) for c in objective)
        rows = tuple(
            Constraint(tuple(to_rational(a) for a in coeffs), rel, to_rational(rhs))
            for coeffs, rel, rhs in constraints
        )
        lo = None
        if lower is not None:
            lo = tuple(None if b is None else to_rational(b) for b in lower)
        return cls(obj, rows, lo)

    @property
    def num_vars(self) -> int:
        return len(self.objective)

    def lower_bound(self, j: int) -> Fraction | None:
        if self.lower is None:
            return Fraction(0)
        return self.lower[j]

    def is_feasible(self, x: Sequence[Fraction]) -> bool:
        if len(x) != self.num_vars:
            return False
        for j, v in enumerate(x):
            lb = self.lower_bound(j)
            if lb is not None and v < lb:
                return False
        return all(c.holds(x) for c in self.constraints)


@dataclass(frozen=True)
class Optimal:
    value: Fraction
    witness: tuple[Fraction, ...]


@dataclass(frozen=True)
class Infeasible:
    pass


@dataclass(frozen=True)
class Unbounded:
    pass


LpOutcome = Union[Optimal, Infeasible, Unbounded]


class DimensionMismatch(ValueError):
    pass


# Dantzig pricing is much faster on the networks we see; after this many
# consecutive degenerate pivots the solver falls back to Bland's rule for good.
_DEGENERATE_LIMIT = 25


@dataclass
class _Tableau:
    rows: list[dict[int, Fraction]]
    rhs: list[Fraction]
    basis: list[int]
    cost: dict[int, Fraction] = field(default_factory=dict)
    value: mpq = field(default_factory=mpq)
    bland: bool = False

    def pivot(self, r: int, col: int) -> None:
        row = self.rows[r]
        piv = row[col]
        if piv != 1:
            inv = 1 / piv
            for k in row:
                row[k] *= inv
            self.rhs[r] *= inv
        rhs_r = self.rhs[r]
        items = list(row.items())
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            f = other.get(col)
            if not f:
                continue
            for k, v in items:
                nv = other.get(k, 0) - f * v
                if nv:
                    other[k] = nv
                else:
                    other.pop(k, None)
            self.rhs[i] -= f * rhs_r
        f = self.cost.get(col)
        if f:
            for k, v in items:
                nv = self.cost.get(k, 0) - f * v
                if nv:
                    self.cost[k] = nv
                else:
                    self.cost.pop(k, None)
            self.value += f * rhs_r
        self.basis[r] = col

    def entering(self, allowed) -> int | None:
        best = None
        best_val = 0
        for k, v in self.cost.items():
            if v <= 0 or (allowed is not None and k not in allowed):
                continue
            if self.bland:
                if best is None or k < best:
                    best = k
            elif v > best_val or (v == best_val and best is not None and k < best):
                best, best_val = k, v
        return best

    def leaving(self, col: int) -> int | None:
        best = None
        best_ratio = None
        for i, row in enumerate(self.rows):
            a = row.get(col)
            if a is None or a <= 0:
                continue
            ratio = self.rhs[i] / a
            if (
                best is None
                or ratio < best_ratio
                or (ratio == best_ratio and self.basis[i] < self.basis[best])
            ):
                best, best_ratio = i, ratio
        return best

    def optimize(self, allowed=None) -> bool:
        """Run primal simplex; returns False if the objective is unbounded."""
        streak = 0
        while True:
            col = self.entering(allowed)
            if col is None:
                return True
            r = self.leaving(col)
            if r is None:
                return False
            if self.rhs[r] == 0:
                streak += 1
                if streak >= _DEGENERATE_LIMIT:
                    self.bland = True
            else:
                streak = 0
            self.pivot(r, col)


def _mpq(q: Fraction) -> mpq:
    return mpq(q.numerator, q.denominator)


def _fraction(q: mpq) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


def lp_solve(lp: LinearProgram) -> LpOutcome:
    """Solve ``lp`` exactly with a two-phase primal simplex.

    The result is deterministic for a fixed input: pricing is Dantzig's rule with
    smallest-index tie breaking, switching permanently to Bland's rule once pivots
    stall, so the method terminates on degenerate programs.
    """
    n = lp.num_vars
    if lp.lower is not None and len(lp.lower) != n:
        raise DimensionMismatch("lower bounds do not match the objective dimension")
    for c in lp.constraints:
        if len(c.coeffs) != n:
            raise DimensionMismatch(
                f"constraint has {len(c.coeffs)} coefficients, objective has {n}"
            )

    # Column layout: shifted originals (and negative parts of free variables),
    # then slacks, then artificials.
    neg_col: dict[int, int] = {}
    shift = [mpq(0)] * n
    ncols = n
    for j in range(n):
        lb = lp.lower_bound(j)
        if lb is None:
            neg_col[j] = ncols
            ncols += 1
        else:
            shift[j] = _mpq(lb)

    rows: list[dict[int, mpq]] = []
    rhs: list[mpq] = []
    rels: list[str] = []
    for c in lp.constraints:
        row: dict[int, mpq] = {}
        b = _mpq(c.rhs)
        for j, a in enumerate(c.coeffs):
            if not a:
                continue
            a = _mpq(a)
            row[j] = a
            if j in neg_col:
                row[neg_col[j]] = -a
            elif shift[j]:
                b -= a * shift[j]
        rel = c.relation
        if b < 0:
            row = {k: -v for k, v in row.items()}
            b = -b
            rel = {LE: GE, GE: LE, EQ: EQ}[rel]
        rows.append(row)
        rhs.append(b)
        rels.append(rel)

    basis: list[int] = []
    artificials: list[int] = []
    for i, rel in enumerate(rels):
        if rel == LE:
            basis.append(ncols)
            rows[i][ncols] = mpq(1)
            ncols += 1
        else:
            if rel == GE:
                rows[i][ncols] = mpq(-1)
                ncols += 1
            basis.append(-1)
    for i, rel in enumerate(rels):
        if rel != LE:
            rows[i][ncols] = mpq(1)
            basis[i] = ncols
            artificials.append(ncols)
            ncols += 1

    tab = _Tableau(rows, rhs, basis)

    if artificials:
        art = set(artificials)
        # Phase 1 maximizes -sum(artificials); express it over the nonbasics.
        for i, b in enumerate(tab.basis):
            if b in art:
                for k, v in tab.rows[i].items():
                    if k not in art:
                        tab.cost[k] = tab.cost.get(k, 0) + v
                tab.value -= tab.rhs[i]
        tab.cost = {k: v for k, v in tab.cost.items() if v}
        tab.optimize()
        if tab.value < 0:
            return Infeasible()
        # Drive zero-level artificials out of the basis, dropping redundant rows.
        i = 0
        while i < len(tab.rows):
            if tab.basis[i] in art:
                col = next(
                    (k for k in sorted(tab.rows[i]) if k not in art and tab.rows[i][k]),
                    None,
                )
                if col is None:
                    del tab.rows[i]
                    del tab.rhs[i]
                    del tab.basis[i]
                    continue
                tab.pivot(i, col)
            i += 1
        for row in tab.rows:
            for a in artificials:
                row.pop(a, None)
        tab.bland = False

    # Phase 2 objective in terms of the current basis.
    c_full: dict[int, mpq] = {}
    for j, cj in enumerate(lp.objective):
        if cj:
            cj = _mpq(cj)
            c_full[j] = cj
            if j in neg_col:
                c_full[neg_col[j]] = -cj
    cost = dict(c_full)
    value = mpq(0)
    for i, b in enumerate(tab.basis):
        cb = c_full.get(b)
        if not cb:
            continue
        for k, v in tab.rows[i].items():
            nv = cost.get(k, 0) - cb * v
            if nv:
                cost[k] = nv
            else:
                cost.pop(k, None)
        value += cb * tab.rhs[i]
    for b in tab.basis:
        cost.pop(b, None)
    tab.cost = cost
    tab.value = value
    if not tab.optimize():
        return Unbounded()

    values = [mpq(0)] * ncols
    for i, b in enumerate(tab.basis):
        values[b] = tab.rhs[i]
    x = []
    for j in range(n):
        if j in neg_col:
            x.append(values[j] - values[neg_col[j]])
        else:
            x.append(values[j] + shift[j])
    witness = tuple(_fraction(v) for v in x)
    obj = dot(lp.objective, witness)
    if not lp.is_feasible(witness):
        raise AssertionError("simplex produced an infeasible witness")
    return Optimal(obj, witness)


# ---------------------------------------------------------------------------
# Exact linear algebra


def rref(matrix: Sequence[Sequence[RationalLike]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form over the rationals, plus the pivot columns."""
    m = [[to_rational(v) for v in row] for row in matrix]
    if not m:
        return m, []
    ncols = len(m[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m, pivots


def nullspace(matrix: Sequence[Sequence[RationalLike]], ncols: int | None = None) -> list[list[Fraction]]:
    """Basis of the right null space {v : A v = 0}, exact."""
    if not matrix:
        n = ncols or 0
        return [[Fraction(int(i == j)) for i in range(n)] for j in range(n)]
    red, pivots = rref(matrix)
    n = len(red[0])
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for row_idx, pc in enumerate(pivots):
            v[pc] = -red[row_idx][f]
        basis.append(v)
    return basis


def left_nullspace(matrix: Sequence[Sequence[RationalLike]]) -> list[list[Fraction]]:
    """Basis of {w : w^T A = 0}; for a stoichiometry matrix these are conservation laws."""
    if not matrix:
        return []
    transposed = [list(col) for col in zip(*matrix)]
    if not transposed:
        return [[Fraction(int(i == j)) for i in range(len(matrix))] for j in range(len(matrix))]
    return nullspace(transposed)
