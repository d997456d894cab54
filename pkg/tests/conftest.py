import sys

import pytest

from invrank import z3js
from invrank.sygus import parse_problem
from invrank.verifier import SolverConfig

COUNTER_PROBLEM = """\
(set-logic LIA)
(synth-inv inv_fun ((x Int)))
(define-fun pre_fun ((x Int)) Bool (= x 0))
(define-fun trans_fun ((x Int) (x! Int)) Bool (and (< x 5) (= x! (+ x 1))))
(define-fun post_fun ((x Int)) Bool (=> (>= x 5) (= x 5)))
(inv-constraint inv_fun pre_fun trans_fun post_fun)
(check-synth)
"""


@pytest.fixture(scope="session")
def mini_cfg() -> SolverConfig:
    return SolverConfig(solver_path=sys.executable, args=("-m", "invrank.minismt"), timeout=20)


@pytest.fixture(scope="session")
def z3js_cfg() -> SolverConfig:
    if not z3js.available():
        pytest.skip("node + npm z3-solver not available")
    return SolverConfig(solver_path=sys.executable, args=("-m", "invrank.z3js"), timeout=60)


@pytest.fixture()
def counter_problem():
    return parse_problem(COUNTER_PROBLEM, "counter")
