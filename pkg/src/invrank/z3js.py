"""Run the official Z3 WebAssembly build (npm `z3-solver`) as a solver process.

`invrank-z3js` behaves like `z3 -in -smt2`: SMT-LIB2 script on stdin,
verdict (and model) on stdout.  It needs node and an installed `z3-solver`
npm package; see the README for setup.  The node_modules directory is
found via INVRANK_Z3JS_DIR, then by walking up from the working directory
and the package itself, then ~/.cache/invrank.
"""

from __future__ import annotations

import os
import shutil
import subprocess
import sys
from pathlib import Path

SHIM = Path(__file__).parent / "data" / "z3js_shim.js"


def _candidate_roots() -> list[Path]:
    roots = []
    env_dir = os.environ.get("INVRANK_Z3JS_DIR")
    if env_dir:
        roots.append(Path(env_dir))
    for base in (Path.cwd(), Path(__file__).resolve()):
        roots.extend(base.parents if base.is_file() else [base, *base.parents])
    roots.append(Path.home() / ".cache" / "invrank")
    return roots


def find_node_modules() -> Path | None:
    for root in _candidate_roots():
        for probe in (root, root / "node_modules", root / "tools" / "z3js" / "node_modules"):
            if (probe / "z3-solver" / "package.json").is_file():
                return probe
    return None


def available() -> bool:
    return shutil.which("node") is not None and find_node_modules() is not None


def main(argv=None) -> int:
    node = shutil.which("node")
    if node is None:
        sys.stdout.write('(error "node executable not found")\n')
        return 1
    modules = find_node_modules()
    if modules is None:
        sys.stdout.write('(error "npm package z3-solver not found; npm install z3-solver")\n')
        return 1
    env = dict(os.environ, NODE_PATH=str(modules))
    proc = subprocess.run([node, str(SHIM)], stdin=sys.stdin, env=env)
    return proc.returncode


if __name__ == "__main__":
    sys.exit(main())
