#!/usr/bin/env python3
"""Run the whole analysis chain on the packaged reference data.

Artifacts land in out/<command>/; pass a config path to run on your own
inputs instead of the shipped example configuration.
"""

import sys

from nvisc import cli

STEPS = [
    ["psb-build"],
    ["deconvolve"],
    ["rate-a1"],
    ["rate-e12"],
    ["ratio"],
    ["mix"],
    ["mix-spectral"],
    ["extract-eta"],
    ["infer-delta"],
    ["infer-omega"],
    ["lowt-error"],
    ["lifetime"],
    ["fit-mott-seitz"],
    ["sensitivity"],
    ["sweep", "lifetime", "--axis", "T", "--from", "300", "--to", "700",
     "--step", "25"],
]


def main() -> int:
    config = sys.argv[1] if len(sys.argv) > 1 else "default"
    failures = 0
    for step in STEPS:
        name = step[0] if step[0] != "sweep" else "sweep-" + step[1]
        print(f"--- {name}")
        rc = cli.main(step + ["--config", config, "--out", f"out/{name}"])
        if rc != 0:
            print(f"{name}: exit code {rc}", file=sys.stderr)
            failures += 1
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
