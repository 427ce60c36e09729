"""Random valid function specs and input points for bulk testing."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .analysis import validate_spec
from .spec import FunctionSpec, LinearFn, MinOfLinear

ZERO = Fraction(0)


@dataclass(frozen=True)
class CorpusConfig:
    max_inputs: int = 3
    max_components: int = 3
    denominators: tuple[int, ...] = (1, 2, 4)
    max_numerator: int = 6
    p_zero_domain: float = 0.15
    p_inherit: float = 0.3
    validate_pairs: int = 20


def _coef(rng: random.Random, cfg: CorpusConfig) -> Fraction:
    if rng.random() < 0.4:
        return ZERO
    return Fraction(rng.randint(1, cfg.max_numerator), rng.choice(cfg.denominators))


def random_spec(rng: random.Random, cfg: CorpusConfig = CorpusConfig()) -> FunctionSpec:
    """Subset by subset, each component of ``g_T`` dominates one component of every ``g_S``, ``S`` inside ``T``.

    That makes ``g_S <= g_T`` on ``D_S`` hold by construction. Some domains are then
    dropped in favour of inheritance when the result still validates.
    """
    n = rng.randint(1, cfg.max_inputs)
    full = (1 << n) - 1
    table: dict[int, MinOfLinear] = {0: MinOfLinear.zero(n)}
    for t in sorted(range(1, full + 1), key=lambda m: (bin(m).count("1"), m)):
        subs = [s for s in range(1, t) if s & ~t == 0]
        if t != full and rng.random() < cfg.p_zero_domain and not any(not table[s].is_zero() for s in subs):
            table[t] = MinOfLinear.zero(n)
            continue
        comps = []
        for _ in range(rng.randint(1, cfg.max_components)):
            v = [_coef(rng, cfg) if t >> i & 1 else ZERO for i in range(n)]
            for s in subs:
                base = rng.choice(table[s].components)
                v = [max(a, b) for a, b in zip(v, base.coeffs)]
            if not any(v):
                i = rng.choice([i for i in range(n) if t >> i & 1])
                v[i] = Fraction(rng.randint(1, cfg.max_numerator), rng.choice(cfg.denominators))
            comps.append(LinearFn(tuple(v)))
        table[t] = MinOfLinear(tuple(comps)).canonical(t)
    spec = FunctionSpec(n, dict(table), inherit_default=True)
    for m in range(full):
        if rng.random() < cfg.p_inherit:
            doms = {k: v for k, v in spec.domains.items() if k != m}
            trial = FunctionSpec(n, doms, inherit_default=True)
            if validate_spec(trial, pairs=0).valid:
                spec = trial
    return spec


def random_corpus(count: int, seed: int, cfg: CorpusConfig = CorpusConfig()) -> list[FunctionSpec]:
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        spec = random_spec(rng, cfg)
        report = validate_spec(spec, pairs=cfg.validate_pairs, seed=rng.randrange(1 << 30))
        if not report.valid:
            raise AssertionError(f"generator produced an invalid spec: {report.to_json()}")
        out.append(spec)
    return out


def support_inputs(n: int, count: int, rng: random.Random, max_num: int = 20, max_den: int = 6) -> list[list[Fraction]]:
    """``count`` rational points cycling through every support pattern of ``n`` inputs."""
    pts = []
    for k in range(count):
        mask = k % (1 << n)
        pts.append([Fraction(rng.randint(1, max_num), rng.randint(1, max_den)) if mask >> i & 1 else ZERO
                    for i in range(n)])
    return pts
