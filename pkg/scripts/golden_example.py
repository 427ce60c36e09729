"""Compile the worked example spec with pruning, print the network and evaluate two inputs."""

from crnc.compiler import compile_spec
from crnc.crn import serialize_crn
from crnc.semantics import execute_topological
from crnc.spec import example_spec


def main() -> None:
    crc, report = compile_spec(example_spec(), prune=True)
    print(serialize_crn(crc), end="")
    print("roles:", ", ".join(f"{k}={v}" for k, v in report.names.items()))
    for x in ([2, 3, 1], [2, 3, 0]):
        y = execute_topological(crc, crc.initial_state(x), record=False)[0].get("Y", 0)
        print(f"f{tuple(x)} = {y}")


if __name__ == "__main__":
    main()
