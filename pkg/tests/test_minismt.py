import random
import subprocess
import sys

import pytest

from invrank.minismt import run_script
from invrank.terms import render_smtlib

from .oracles import eval_term, gen_bool_term


def first_token(out: str) -> str:
    parts = out.split()
    return parts[0] if parts else ""


@pytest.mark.parametrize(
    "script,want",
    [
        ("(set-logic ALL)(declare-const x Int)(assert (and (> x 5) (< x 3)))(check-sat)", "unsat"),
        ("(declare-const x Int)(assert (> x 5))(check-sat)", "sat"),
        ("(declare-const x Int)(assert (not (=> (= x 0) (<= x 5))))(check-sat)", "unsat"),
        ("(declare-const x Int)(assert (not (=> (<= x 5) (= x 5))))(check-sat)", "sat"),
        ("(declare-const x Int)(assert (not (= (> (+ x 1) 0) (> x (- 1)))))(check-sat)", "unsat"),
        ("(declare-const x Int)(assert (not (= (>= x 0) (> x 0))))(check-sat)", "sat"),
        # integer-only infeasibility: even = odd, and 3 <= 2x <= 3
        ("(declare-const x Int)(declare-const y Int)(assert (= (* 2 x) (+ (* 2 y) 1)))(check-sat)", "unsat"),
        ("(declare-const x Int)(assert (and (<= 3 (* 2 x)) (<= (* 2 x) 3)))(check-sat)", "unsat"),
        ("(declare-const b Bool)(assert (and b (not b)))(check-sat)", "unsat"),
        ("(declare-const b Bool)(declare-const x Int)(assert (ite b (= x 1) (= x 2)))(check-sat)", "sat"),
        ("(declare-const x Int)(assert (and (= (div x 3) 2) (= (mod x 3) 1)))(check-sat)", "sat"),
        ("(declare-const x Int)(assert (and (= (mod x 2) 0) (= (mod x 2) 1)))(check-sat)", "unsat"),
        # bounded nonlinear: decided by enumeration
        (
            "(declare-const x Int)(declare-const y Int)"
            "(assert (and (<= (- 8) x) (<= x 8) (<= (- 8) y) (<= y 8) (= (* x y) 7) (> x 1)))(check-sat)",
            "sat",
        ),
        # unbounded nonlinear and arrays: honest unknown
        ("(declare-const x Int)(assert (= (* x x) (- 4)))(check-sat)", "unknown"),
        ("(declare-const a (Array Int Int))(assert (= (select a 0) 1))(check-sat)", "unknown"),
    ],
)
def test_verdicts(script, want):
    assert first_token(run_script(script)) == want


def test_get_model_contains_declared_vars():
    out = run_script("(declare-const x Int)(declare-const b Bool)(assert (> x 3))(check-sat)(get-model)")
    assert first_token(out) == "sat"
    assert "(define-fun x () Int" in out
    assert "(define-fun b () Bool" in out


def test_get_model_satisfies_constraints():
    out = run_script("(declare-const x Int)(assert (and (> x 3) (< x 6) (not (= x 4))))(check-sat)(get-model)")
    assert first_token(out) == "sat"
    assert "5" in out


def test_get_model_after_unsat():
    out = run_script("(declare-const x Int)(assert (< x x))(check-sat)(get-model)")
    assert first_token(out) == "unsat"
    assert "error" in out


def test_negative_model_value_rendering():
    out = run_script("(declare-const x Int)(assert (< x (- 5)))(check-sat)(get-model)")
    assert first_token(out) == "sat"
    assert "(- " in out


def test_define_fun_macro():
    script = (
        "(declare-const x Int)"
        "(define-fun twice ((n Int)) Int (* 2 n))"
        "(assert (= (twice x) 10))(check-sat)(get-model)"
    )
    out = run_script(script)
    assert first_token(out) == "sat"
    assert "5" in out


def test_cli_accepts_z3_style_flags():
    proc = subprocess.run(
        [sys.executable, "-m", "invrank.minismt", "-in", "-smt2"],
        input=b"(declare-const x Int)(assert (= x 1))(check-sat)",
        stdout=subprocess.PIPE,
        timeout=60,
    )
    assert proc.returncode == 0
    assert proc.stdout.decode().split()[0] == "sat"


def test_cli_reports_errors_with_nonzero_exit():
    proc = subprocess.run(
        [sys.executable, "-m", "invrank.minismt"],
        input=b"(assert (= nope 1))(check-sat)",
        stdout=subprocess.PIPE,
        timeout=60,
    )
    assert proc.returncode == 1
    assert proc.stdout.decode().startswith("(error")


def test_random_formulas_agree_with_bounded_oracle():
    """On box-bounded formulas the solver must match exhaustive evaluation."""
    rng = random.Random(1234)
    names = ["x", "y"]
    box = "(and (<= (- 4) x) (<= x 4) (<= (- 4) y) (<= y 4))"
    for _ in range(60):
        phi = gen_bool_term(rng, names, 2)
        formula = f"(and {box} {render_smtlib(phi)})"
        script = (
            "(declare-const x Int)(declare-const y Int)"
            f"(assert {formula})(check-sat)"
        )
        got = first_token(run_script(script))
        expected = any(
            eval_term(phi, {"x": x, "y": y})
            for x in range(-4, 5)
            for y in range(-4, 5)
        )
        assert got == ("sat" if expected else "unsat"), render_smtlib(phi)


def test_no_assertions_is_sat():
    assert first_token(run_script("(declare-const x Int)(check-sat)")) == "sat"


def test_get_model_before_check_sat():
    out = run_script("(declare-const x Int)(get-model)")
    assert "error" in out


def test_empty_script():
    assert run_script("") == ""


@pytest.mark.parametrize(
    "script",
    [
        "(assert)",
        "(declare-const x)",
        "(declare-const)",
        "(declare-fun f (x) Int)",
        "(define-fun f)",
        "(assert (> x 5) extra)",
    ],
)
def test_malformed_commands_raise_cleanly(script):
    from invrank.errors import InvrankError

    with pytest.raises(InvrankError):
        run_script(script)
