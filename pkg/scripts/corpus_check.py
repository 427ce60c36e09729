"""Three-way exact check (oracle, executor, LP bound) plus random walks over a generated corpus."""

import argparse
import random
import time

from crnc.analysis import eval_min_formula, eval_spec
from crnc.compiler import compile_spec
from crnc.corpus import random_corpus, support_inputs
from crnc.semantics import execute_topological, max_output_bound, random_segment_walk


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--specs", type=int, default=200)
    p.add_argument("--inputs", type=int, default=20)
    p.add_argument("--walks", type=int, default=0, help="random walks per input")
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--prune", action="store_true")
    p.add_argument("--seed", type=int, default=1)
    args = p.parse_args()

    start = time.perf_counter()
    corpus = random_corpus(args.specs, args.seed)
    rng = random.Random(args.seed)
    bad = 0
    for k, spec in enumerate(corpus):
        crc, _ = compile_spec(spec, prune=args.prune)
        for i, x in enumerate(support_inputs(spec.n, args.inputs, rng)):
            s = crc.initial_state(x)
            values = {
                eval_spec(spec, x),
                eval_min_formula(spec, x),
                execute_topological(crc, s, record=False)[0].get("Y", 0),
                max_output_bound(crc, s, witness=False).value,
            }
            for w in range(args.walks):
                walk = random_segment_walk(crc, s, args.steps, 1000 * k + 10 * i + w)
                values.add(execute_topological(crc, walk.final, record=False)[0].get("Y", 0))
            if len(values) != 1:
                bad += 1
                print(f"spec {k} input {x}: {sorted(values)}")
    print(f"{args.specs} specs, {bad} mismatches, {time.perf_counter() - start:.1f}s")
    return 1 if bad else 0


if __name__ == "__main__":
    raise SystemExit(main())
