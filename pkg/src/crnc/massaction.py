"""Mass-action ODE simulation as a rate-dependent cross-check of the segment semantics."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .crn import Crn, stoich_matrix
from .exact import left_nullspace


EXPLICIT_METHODS = ("RK45", "DOP853")
# small enough that the 1/t tails of bimolecular compiled nets sit well under 1e-3 at the stop
CONVERGENCE_TOL = 5e-8


class StepSizeUnderflow(RuntimeError):
    pass


@dataclass
class SimResult:
    t: np.ndarray
    species: tuple[str, ...]
    y: np.ndarray  # shape (len(species), len(t))
    converged: bool
    max_derivative: float

    @property
    def final(self) -> dict[str, float]:
        return {s: max(0.0, float(v)) for s, v in zip(self.species, self.y[:, -1])}

    def trajectory(self, species: str) -> np.ndarray:
        return self.y[self.species.index(species)]

    def to_csv(self) -> str:
        lines = [",".join(("time",) + self.species)]
        for k, t in enumerate(self.t):
            lines.append(",".join([repr(float(t))] + [repr(max(0.0, float(v))) for v in self.y[:, k]]))
        return "\n".join(lines) + "\n"


class _Rhs:
    """Vectorized mass-action right-hand side ``M (k * prod c^r)``."""

    def __init__(self, crn: Crn, rates: Sequence[float]):
        idx = crn.index()
        ns = len(crn.species)
        self.ns = ns
        self.k = np.asarray(rates, dtype=float)
        # a reactant with multiplicity k is gathered k times; padding reads a constant 1.0
        cols = [[idx[s] for s, c in r.reactants for _ in range(c)] for r in crn.reactions]
        width = max((len(c) for c in cols), default=1) or 1
        self.gather = np.full((width, len(crn.reactions)), ns, dtype=int)
        for j, col in enumerate(cols):
            self.gather[: len(col), j] = col
        self.ext = np.ones(ns + 1)
        # nonzero stoichiometry entries as (species, reaction, net change) triples
        sp, rx, dv = [], [], []
        for j, r in enumerate(crn.reactions):
            for s, v in r.net().items():
                if v:
                    sp.append(idx[s])
                    rx.append(j)
                    dv.append(float(v))
        self.sp = np.array(sp, dtype=int)
        self.rx = np.array(rx, dtype=int)
        self.dv = np.array(dv)

    def flux(self, c: np.ndarray) -> np.ndarray:
        np.maximum(c, 0.0, out=self.ext[:-1])
        out = self.k * self.ext[self.gather[0]]
        for row in self.gather[1:]:
            out *= self.ext[row]
        return out

    def __call__(self, t: float, c: np.ndarray) -> np.ndarray:
        return np.bincount(self.sp, weights=self.dv * self.flux(c)[self.rx], minlength=self.ns)


def simulate_mass_action(
    crn: Crn,
    x0: Mapping[str, Fraction | float],
    rates: Sequence[float] | Mapping[int, float] | None = None,
    t_end: float = 100.0,
    tol: float = 1e-9,
    atol: float = 1e-9,
    rtol: float = 1e-9,
    stop_when_converged: bool = False,
    n_points: int = 201,
    method: str = "RK45",
) -> SimResult:
    """Integrate the mass-action ODE with an explicit embedded Runge-Kutta pair.

    ``method`` is ``"RK45"`` (Dormand-Prince 4(5)) or ``"DOP853"`` (order 8), which
    takes far fewer steps through the slow tails at tight tolerances.

    ``converged`` reports whether the sup-norm of the derivative is below ``tol``
    at the end. With ``stop_when_converged`` the run ends as soon as that holds.
    """
    if t_end <= 0 or tol <= 0:
        raise ValueError("t_end and tol must be positive")
    if method not in EXPLICIT_METHODS:
        raise ValueError(f"method must be one of {', '.join(EXPLICIT_METHODS)}")
    nr = len(crn.reactions)
    if rates is None:
        k = [1.0] * nr
    elif isinstance(rates, Mapping):
        k = [1.0] * nr
        for j, v in rates.items():
            k[j] = float(v)
    else:
        k = [float(v) for v in rates]
    if len(k) != nr or any(v <= 0 for v in k):
        raise ValueError("need one positive rate per reaction")
    idx = crn.index()
    c0 = np.zeros(len(crn.species))
    for s, v in x0.items():
        c0[idx[s]] = float(v)
    rhs = _Rhs(crn, k)

    events = None
    if stop_when_converged:
        def settled(t, c):
            return float(np.max(np.abs(rhs(t, c)), initial=0.0)) - tol

        settled.terminal = True
        settled.direction = -1
        events = [settled]

    t_eval = None if stop_when_converged else np.linspace(0.0, t_end, n_points)
    sol = solve_ivp(rhs, (0.0, t_end), c0, method=method, t_eval=t_eval, atol=atol, rtol=rtol, events=events)
    if sol.status == -1:
        raise StepSizeUnderflow(sol.message)
    y = sol.y
    deriv = float(np.max(np.abs(rhs(sol.t[-1], y[:, -1])), initial=0.0))
    return SimResult(sol.t, crn.species, y, deriv < tol * (1 + 1e-9) or deriv == 0.0, deriv)


def conservation_laws(crn: Crn) -> list[list[Fraction]]:
    """Exact basis of ``{w : w M = 0}``; each ``w . c`` is invariant along trajectories."""
    m = stoich_matrix(crn)
    if not crn.reactions:
        return [[Fraction(int(i == j)) for j in range(len(crn.species))] for i in range(len(crn.species))]
    return left_nullspace(m)
