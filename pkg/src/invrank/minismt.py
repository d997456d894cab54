"""Bundled fallback SMT solver speaking SMT-LIB2 on stdin.

Decides quantifier-free integer/boolean formulas: boolean structure via
NNF/DNF, then per-cube linear integer feasibility with the Omega test
(exact elimination, dark shadow, splinters).  Nonlinear cubes are decided
by exhaustive enumeration when every variable is bounded by the cube
itself; anything else (arrays, unbounded nonlinear arithmetic) yields
`unknown`.  Used when no external solver is installed; answers are
cross-checked against real Z3 in the test suite.

Accepts and ignores z3-style flags (`-in`, `-smt2`, `-T:n`) so it can be
dropped in as a solver binary.
"""

from __future__ import annotations

import itertools
import sys
from dataclasses import dataclass
from math import gcd, prod

from .errors import InvrankError, ParseError
from .sexpr import SAtom, SList, read_all
from .sygus import _FunDef, _parse_params, _parse_sort, _TermBuilder
from .terms import (
    Add,
    And,
    BoolConst,
    Div,
    Eq,
    Ge,
    Gt,
    Implies,
    IntConst,
    Ite,
    Le,
    Lt,
    Mod,
    Mul,
    Not,
    Or,
    Select,
    Sort,
    Store,
    Sub,
    Term,
    Var,
    _children,
    _rebuild,
    sort_of,
)
from .terms import free_vars as _term_free_vars

MAX_CUBES = 20000
MAX_ENUM = 500_000
MAX_EQ_ROUNDS = 200
MAX_MODEL_SEARCH = 200_000


class Unsupported(Exception):
    """Formula falls outside the decidable fragment."""


# --- polynomials: monomial (sorted tuple of var names) -> int coefficient ----

Poly = dict[tuple, int]


def _p_const(c: int) -> Poly:
    return {(): c} if c else {}


def _p_var(name: str) -> Poly:
    return {(name,): 1}


def _p_add(a: Poly, b: Poly) -> Poly:
    out = dict(a)
    for m, c in b.items():
        n = out.get(m, 0) + c
        if n:
            out[m] = n
        else:
            out.pop(m, None)
    return out


def _p_neg(a: Poly) -> Poly:
    return {m: -c for m, c in a.items()}


def _p_mul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            m = tuple(sorted(m1 + m2))
            n = out.get(m, 0) + c1 * c2
            if n:
                out[m] = n
            else:
                out.pop(m, None)
    return out


def _p_is_linear(a: Poly) -> bool:
    return all(len(m) <= 1 for m in a)


def _p_vars(a: Poly) -> set[str]:
    return {v for m in a for v in m}


def _term_to_poly(t: Term) -> Poly:
    if isinstance(t, IntConst):
        return _p_const(t.value)
    if isinstance(t, Var):
        return _p_var(t.name)
    if isinstance(t, Add):
        return _p_add(_term_to_poly(t.left), _term_to_poly(t.right))
    if isinstance(t, Sub):
        return _p_add(_term_to_poly(t.left), _p_neg(_term_to_poly(t.right)))
    if isinstance(t, Mul):
        return _p_mul(_term_to_poly(t.left), _term_to_poly(t.right))
    raise Unsupported(f"non-polynomial arithmetic: {type(t).__name__}")


# --- literals and cubes -------------------------------------------------------

LE, EQ, NE = "<=0", "=0", "!=0"


@dataclass
class Lit:
    """Integer atom `poly rel 0`, or a boolean variable literal."""

    rel: str  # LE / EQ / NE for int atoms, "bool" for variable literals
    poly: Poly | None = None
    name: str | None = None
    value: bool = True


def _atom_lit(t: Term, positive: bool) -> Lit:
    if isinstance(t, Var):
        return Lit("bool", name=t.name, value=positive)
    if isinstance(t, BoolConst):
        # encode as trivially true/false int atom: 0 <= 0 or 1 <= 0
        truth = t.value == positive
        return Lit(LE, poly=_p_const(0 if truth else 1))
    l, r = _term_to_poly(t.left), _term_to_poly(t.right)
    d = _p_add(l, _p_neg(r))
    if isinstance(t, Eq):
        return Lit(EQ if positive else NE, poly=d)
    if isinstance(t, Le):
        pos = d  # l - r <= 0
    elif isinstance(t, Lt):
        pos = _p_add(d, _p_const(1))  # l - r + 1 <= 0
    elif isinstance(t, Ge):
        pos = _p_neg(d)
    elif isinstance(t, Gt):
        pos = _p_add(_p_neg(d), _p_const(1))
    else:
        raise Unsupported(f"atom {type(t).__name__}")
    if positive:
        return Lit(LE, poly=pos)
    # not (p <= 0)  <=>  -p + 1 <= 0
    return Lit(LE, poly=_p_add(_p_neg(pos), _p_const(1)))


def _is_atom(t: Term) -> bool:
    if isinstance(t, (Lt, Le, Gt, Ge, BoolConst, Var)):
        return True
    return isinstance(t, Eq) and sort_of(t.left) is not Sort.BOOL


def _dnf(t: Term, positive: bool, budget: list[int]) -> list[list[Lit]]:
    """Cubes of literals covering `t` (or its negation); raises Unsupported on blowup."""
    budget[0] -= 1
    if budget[0] < 0:
        raise Unsupported("formula too large to normalize")
    if _is_atom(t):
        return [[_atom_lit(t, positive)]]
    if isinstance(t, Not):
        return _dnf(t.child, not positive, budget)
    if isinstance(t, Implies):
        return _dnf(Or((Not(t.left), t.right)), positive, budget)
    if isinstance(t, Eq):  # Bool iff
        a, b = t.left, t.right
        same = Or((And((a, b)), And((Not(a), Not(b)))))
        diff = Or((And((a, Not(b))), And((Not(a), b))))
        return _dnf(same if positive else diff, True, budget)
    if isinstance(t, Ite):  # Bool ite
        pick = Or((And((t.cond, t.then)), And((Not(t.cond), t.other))))
        return _dnf(pick, positive, budget)
    if isinstance(t, (And, Or)):
        conj = isinstance(t, And) == positive
        parts = [_dnf(c, positive, budget) for c in t.children]
        if not conj:
            return [cube for p in parts for cube in p]
        cubes = [[]]
        for p in parts:
            cubes = [c1 + c2 for c1 in cubes for c2 in p]
            if len(cubes) > MAX_CUBES:
                raise Unsupported("DNF explosion")
        return cubes
    raise Unsupported(f"connective {type(t).__name__}")


def _lift_int_ite(t: Term) -> Term:
    """Rewrite formulas so no Int-sorted ite remains inside atoms."""
    if _is_atom(t) and not isinstance(t, (Var, BoolConst)):
        found = _find_int_ite(t)
        if found is None:
            return t
        then_atom = _replace_node(t, found, found.then)
        else_atom = _replace_node(t, found, found.other)
        return _lift_int_ite(
            Or((And((found.cond, then_atom)), And((Not(found.cond), else_atom))))
        )
    if isinstance(t, (And, Or)):
        return type(t)(tuple(_lift_int_ite(c) for c in t.children))
    if isinstance(t, Not):
        return Not(_lift_int_ite(t.child))
    if isinstance(t, Implies):
        return Implies(_lift_int_ite(t.left), _lift_int_ite(t.right))
    if isinstance(t, Ite):
        return Ite(_lift_int_ite(t.cond), _lift_int_ite(t.then), _lift_int_ite(t.other))
    if isinstance(t, Eq):  # Bool iff
        return Eq(_lift_int_ite(t.left), _lift_int_ite(t.right))
    return t


def _find_int_ite(t: Term):
    if isinstance(t, Ite) and sort_of(t.then) is Sort.INT:
        return t
    for c in _children(t):
        got = _find_int_ite(c)
        if got is not None:
            return got
    return None


def _replace_node(t: Term, target: Term, repl: Term) -> Term:
    if t is target:
        return repl
    kids = _children(t)
    if not kids:
        return t
    return _rebuild(t, tuple(_replace_node(c, target, repl) for c in kids))


def _expand_divmod(t: Term, defs: list, counter: list[int]) -> Term:
    """Replace div/mod by constant divisors with fresh quotient/remainder vars."""
    if isinstance(t, (Div, Mod)):
        left = _expand_divmod(t.left, defs, counter)
        right = t.right
        if not isinstance(right, IntConst) or right.value == 0:
            raise Unsupported("div/mod with non-constant divisor")
        d = right.value
        for num, dd, q, r in defs:
            if num == left and dd == d:
                return Var(q if isinstance(t, Div) else r, Sort.INT)
        counter[0] += 1
        q = f".q{counter[0]}"
        r = f".r{counter[0]}"
        defs.append((left, d, q, r))
        return Var(q if isinstance(t, Div) else r, Sort.INT)
    kids = _children(t)
    if not kids:
        return t
    return _rebuild(t, tuple(_expand_divmod(c, defs, counter) for c in kids))


# --- omega test over conjunctions of linear constraints -----------------------


def _balanced_mod(a: int, m: int) -> int:
    r = a % m
    return r - m if 2 * r > m else r


def _tighten(p: Poly) -> Poly | None:
    """Normalize `p <= 0` by the gcd of its variable coefficients; None if trivially true."""
    vars_part = {m: c for m, c in p.items() if m != ()}
    c = p.get((), 0)
    if not vars_part:
        return None if c <= 0 else p
    g = 0
    for coef in vars_part.values():
        g = gcd(g, abs(coef))
    if g > 1:
        # sum(a_i x_i) <= -c  ->  sum(a_i/g x_i) <= floor(-c/g)
        out = {m: coef // g for m, coef in vars_part.items()}
        out[()] = -((-c) // g)
        if out[()] == 0:
            del out[()]
        return out
    return p


def _omega_sat(eqs: list[Poly], ineqs: list[Poly], budget: list[int]) -> bool:
    eqs = [dict(e) for e in eqs]
    ineqs = [dict(i) for i in ineqs]
    fresh = [0]

    for _ in range(MAX_EQ_ROUNDS):
        budget[0] -= 1
        if budget[0] < 0:
            raise Unsupported("solver budget exhausted")
        if not eqs:
            break
        eq = eqs.pop()
        vars_part = {m[0]: c for m, c in eq.items() if m != ()}
        c = eq.get((), 0)
        if not vars_part:
            if c != 0:
                return False
            continue
        g = 0
        for coef in vars_part.values():
            g = gcd(g, abs(coef))
        if c % g != 0:
            return False
        if g > 1:
            eq = {m: coef // g for m, coef in eq.items()}
            vars_part = {m[0]: coef for m, coef in eq.items() if m != ()}
            c //= g
        unit = next((v for v, coef in vars_part.items() if abs(coef) == 1), None)
        if unit is not None:
            coef = vars_part[unit]
            # unit*coef = -(eq - coef*unit)  ->  unit = -coef * rest
            rest = {m: cc for m, cc in eq.items() if m != (unit,)}
            sub = {m: -coef * cc for m, cc in rest.items()}
            eqs = [_subst_poly(e, unit, sub) for e in eqs]
            ineqs = [_subst_poly(i, unit, sub) for i in ineqs]
            continue
        # Pugh's modulus reduction introducing a fresh variable
        k = min(vars_part, key=lambda v: abs(vars_part[v]))
        m = abs(vars_part[k]) + 1
        fresh[0] += 1
        sigma = f".s{fresh[0]}"
        reduced: Poly = {(sigma,): -m}
        for mono, coef in eq.items():
            r = _balanced_mod(coef, m)
            if r:
                reduced[mono] = r
        eqs.append(eq)
        eqs.append(reduced)

    if eqs:
        raise Unsupported("equality elimination did not converge")
    return _omega_ineqs(ineqs, budget)


def _subst_poly(p: Poly, var: str, value: Poly) -> Poly:
    out: Poly = {}
    for m, c in p.items():
        if var not in m:
            out = _p_add(out, {m: c})
            continue
        rest = list(m)
        rest.remove(var)
        out = _p_add(out, _p_mul({tuple(rest): c}, value))
    return out


def _omega_ineqs(ineqs: list[Poly], budget: list[int]) -> bool:
    budget[0] -= 1
    if budget[0] < 0:
        raise Unsupported("solver budget exhausted")
    work = []
    for p in ineqs:
        t = _tighten(p)
        if t is None:
            continue
        if all(m == () for m in t):
            if t.get((), 0) > 0:
                return False
            continue
        work.append(t)
    if not work:
        return True

    all_vars = sorted({v for p in work for v in _p_vars(p)})

    def cost(v):
        lo = sum(1 for p in work if p.get((v,), 0) < 0)
        hi = sum(1 for p in work if p.get((v,), 0) > 0)
        return (lo * hi, v)

    v = min(all_vars, key=cost)
    lowers, uppers, rest = [], [], []
    for p in work:
        a = p.get((v,), 0)
        without = {m: c for m, c in p.items() if m != (v,)}
        if a > 0:
            uppers.append((a, _p_neg(without)))  # a*v <= U
        elif a < 0:
            lowers.append((-a, without))  # b*v >= L
        else:
            rest.append(p)
    if not lowers or not uppers:
        return _omega_ineqs(rest, budget)

    real, dark, exact = [], [], True
    for b, L in lowers:
        for a, U in uppers:
            shadow = _p_add(_p_mul(_p_const(a), L), _p_neg(_p_mul(_p_const(b), U)))
            real.append(shadow)
            slack = (a - 1) * (b - 1)
            if slack:
                exact = False
            dark.append(_p_add(shadow, _p_const(slack)))
    if exact:
        return _omega_ineqs(rest + real, budget)
    if _omega_ineqs(rest + dark, budget):
        return True
    if not _omega_ineqs(rest + real, budget):
        return False
    # splinters: integer solutions missed by the dark shadow hug a lower bound
    a_max = max(a for a, _ in uppers)
    for b, L in lowers:
        top = (a_max * b - a_max - b) // a_max
        for i in range(top + 1):
            eq = _p_add({(v,): b}, _p_add(_p_neg(L), _p_const(-i)))
            if _omega_sat([eq], ineqs, budget):
                return True
    return False


# --- cube decision ------------------------------------------------------------


def _eval_term(t: Term, env: dict):
    if isinstance(t, IntConst):
        return t.value
    if isinstance(t, BoolConst):
        return t.value
    if isinstance(t, Var):
        return env[t.name]
    if isinstance(t, Add):
        return _eval_term(t.left, env) + _eval_term(t.right, env)
    if isinstance(t, Sub):
        return _eval_term(t.left, env) - _eval_term(t.right, env)
    if isinstance(t, Mul):
        return _eval_term(t.left, env) * _eval_term(t.right, env)
    if isinstance(t, (Div, Mod)):
        x, d = _eval_term(t.left, env), _eval_term(t.right, env)
        if d == 0:
            raise Unsupported("division by zero")
        r = x % abs(d)
        return (x - r) // d if isinstance(t, Div) else r
    if isinstance(t, Eq):
        return _eval_term(t.left, env) == _eval_term(t.right, env)
    if isinstance(t, Lt):
        return _eval_term(t.left, env) < _eval_term(t.right, env)
    if isinstance(t, Le):
        return _eval_term(t.left, env) <= _eval_term(t.right, env)
    if isinstance(t, Gt):
        return _eval_term(t.left, env) > _eval_term(t.right, env)
    if isinstance(t, Ge):
        return _eval_term(t.left, env) >= _eval_term(t.right, env)
    if isinstance(t, And):
        return all(_eval_term(c, env) for c in t.children)
    if isinstance(t, Or):
        return any(_eval_term(c, env) for c in t.children)
    if isinstance(t, Not):
        return not _eval_term(t.child, env)
    if isinstance(t, Implies):
        return (not _eval_term(t.left, env)) or _eval_term(t.right, env)
    if isinstance(t, Ite):
        return _eval_term(t.then if _eval_term(t.cond, env) else t.other, env)
    raise Unsupported(f"cannot evaluate {type(t).__name__}")


def _lit_holds(lit: Lit, env: dict) -> bool:
    if lit.rel == "bool":
        return env[lit.name] == lit.value
    val = 0
    for m, c in lit.poly.items():
        val += c * prod(env[v] for v in m)
    if lit.rel == LE:
        return val <= 0
    if lit.rel == EQ:
        return val == 0
    return val != 0


def _unit_bounds(lits: list[Lit]) -> dict[str, list]:
    """Per-variable [lo, hi] bounds implied by single-variable linear atoms."""
    bounds: dict[str, list] = {}
    for lit in lits:
        if lit.rel == "bool" or lit.poly is None:
            continue
        vars_ = [m for m in lit.poly if m != ()]
        if len(vars_) != 1 or len(vars_[0]) != 1:
            continue
        (v,) = vars_[0]
        a = lit.poly[vars_[0]]
        c = lit.poly.get((), 0)
        b = bounds.setdefault(v, [None, None])
        if lit.rel == LE:  # a*v + c <= 0
            if a > 0:
                hi = (-c) // a  # v <= floor(-c/a)
                b[1] = hi if b[1] is None else min(b[1], hi)
            else:
                lo = -((-c) // (-a))  # v >= ceil(c/-a)
                b[0] = lo if b[0] is None else max(b[0], lo)
        elif lit.rel == EQ:
            if c % a == 0:
                val = (-c) // a
                b[0] = val if b[0] is None else max(b[0], val)
                b[1] = val if b[1] is None else min(b[1], val)
            else:
                b[0], b[1] = 1, 0  # contradictory
    return bounds


def _enumerate_cube(
    lits: list[Lit], int_vars: list[str], defs: list, bool_fixed: dict
) -> tuple[str, dict | None]:
    base_vars = [v for v in int_vars if not v.startswith(".")]
    bounds = _unit_bounds(lits)
    ranges = []
    for v in base_vars:
        lo, hi = bounds.get(v, [None, None])
        if lo is None or hi is None:
            raise Unsupported(f"variable {v} is unbounded in a nonlinear cube")
        if lo > hi:
            return "unsat", None
        ranges.append(range(lo, hi + 1))
    total = prod(len(r) for r in ranges) if ranges else 1
    if total > MAX_ENUM:
        raise Unsupported("enumeration space too large")

    def assignments(idx, env):
        if idx == len(base_vars):
            yield dict(env)
            return
        for val in ranges[idx]:
            env[base_vars[idx]] = val
            yield from assignments(idx + 1, env)

    for env in assignments(0, dict(bool_fixed)):
        ok = True
        for num, d, q, r in defs:
            x = _eval_term(num, env)
            rr = x % abs(d)
            env[r] = rr
            env[q] = (x - rr) // d
        for lit in lits:
            if not _lit_holds(lit, env):
                ok = False
                break
        if ok:
            return "sat", env
    return "unsat", None


def _decide_cube(lits: list[Lit], defs: list, budget: list[int]) -> tuple[str, dict | None]:
    bools: dict[str, bool] = {}
    for lit in lits:
        if lit.rel == "bool":
            if bools.get(lit.name, lit.value) != lit.value:
                return "unsat", None
            bools[lit.name] = lit.value

    int_lits = [l for l in lits if l.rel != "bool"]
    # definitional constraints for div/mod rewrites: num = d*q + r, 0 <= r < |d|
    def_lits = []
    for num, d, q, r in defs:
        num_poly = _term_to_poly(num)
        qr = _p_add({(q,): d, (r,): 1}, _p_neg(num_poly))
        def_lits.append(Lit(EQ, poly=qr))
        def_lits.append(Lit(LE, poly={(r,): -1}))
        def_lits.append(Lit(LE, poly={(r,): 1, (): 1 - abs(d)}))
    all_lits = int_lits + def_lits

    int_vars = {v for l in all_lits for v in _p_vars(l.poly)}
    for num, _, _, _ in defs:
        int_vars |= {name for name, _ in _term_free_vars(num)}
    int_vars = sorted(int_vars)
    nonlinear = any(not _p_is_linear(l.poly) for l in all_lits)
    if nonlinear:
        used = [l for l in lits if l.rel != "bool"]
        return _enumerate_cube(used, int_vars, defs, bools)

    # split disequalities into strict branches: p != 0 becomes p <= -1 or p >= 1
    nes = [l for l in all_lits if l.rel == NE]
    if len(nes) > 12:
        raise Unsupported("too many disequalities")
    eqs = [l.poly for l in all_lits if l.rel == EQ]
    les = [l.poly for l in all_lits if l.rel == LE]

    for signs in itertools.product((1, -1), repeat=len(nes)):
        branch = list(les)
        for s, l in zip(signs, nes):
            p = l.poly if s > 0 else _p_neg(l.poly)
            branch.append(_p_add(p, _p_const(1)))
        if _omega_sat(eqs, branch, budget):
            model = _search_model(all_lits, int_vars, defs, bools)
            return "sat", model
    return "unsat", None


def _search_model(lits, int_vars, defs, bools) -> dict | None:
    """Best-effort concrete witness for a cube already known to be satisfiable."""
    base_vars = [v for v in int_vars if not v.startswith(".")]
    bounds = _unit_bounds([l for l in lits if l.rel != NE])
    for radius in (2, 8, 32, 128, 1024):
        ranges = []
        for v in base_vars:
            lo, hi = bounds.get(v, [None, None])
            lo = -radius if lo is None else max(lo, -radius)
            hi = radius if hi is None else min(hi, radius)
            if lo > hi:
                lo, hi = -radius, radius
            ranges.append(range(lo, hi + 1))
        total = prod(len(r) for r in ranges) if ranges else 1
        if total > MAX_MODEL_SEARCH:
            return None
        found = _model_scan(lits, base_vars, ranges, defs, dict(bools))
        if found is not None:
            return found
    return None


def _model_scan(lits, base_vars, ranges, defs, seed_env):
    def rec(idx, env):
        if idx == len(base_vars):
            for num, d, q, r in defs:
                x = _eval_term(num, env)
                rr = x % abs(d)
                env[r] = rr
                env[q] = (x - rr) // d
            if all(_lit_holds(l, env) for l in lits):
                return dict(env)
            return None
        for val in ranges[idx]:
            env[base_vars[idx]] = val
            got = rec(idx + 1, env)
            if got is not None:
                return got
        env.pop(base_vars[idx], None)
        return None

    return rec(0, seed_env)


def check_formula(assertions: list[Term], env: dict[str, Sort]) -> tuple[str, dict | None]:
    """Decide satisfiability of the conjunction; returns (verdict, model|None)."""
    if not assertions:
        return "sat", {}
    try:
        phi = And(assertions) if len(assertions) > 1 else assertions[0]
        for t in assertions:
            if _contains_array(t):
                raise Unsupported("array theory")
        defs: list = []
        counter = [0]
        phi = _expand_divmod(phi, defs, counter)
        phi = _lift_int_ite(phi)
        budget = [200_000]
        cubes = _dnf(phi, True, budget)
        saw_unknown = False
        for cube in cubes:
            try:
                verdict, model = _decide_cube(cube, defs, budget)
            except Unsupported:
                saw_unknown = True
                continue
            if verdict == "sat":
                full = dict(model) if model else {}
                for name, sort in env.items():
                    full.setdefault(name, False if sort is Sort.BOOL else 0)
                return "sat", full
        return ("unknown", None) if saw_unknown else ("unsat", None)
    except Unsupported:
        return "unknown", None


def _contains_array(t: Term) -> bool:
    if isinstance(t, (Select, Store)):
        return True
    return any(_contains_array(c) for c in _children(t))


# --- script front end ---------------------------------------------------------


def run_script(text: str) -> str:
    env: dict[str, Sort] = {}
    funcs: dict[str, _FunDef] = {}
    assertions: list[Term] = []
    out: list[str] = []
    last: tuple[str, dict | None] = ("unknown", None)
    checked = False

    def _args(node, want, cmd):
        if len(node.items) != want + 1:
            raise ParseError(f"{cmd} expects {want} arguments", node.pos)
        return node.items[1:]

    def _name(sx):
        if not isinstance(sx, SAtom):
            raise ParseError("expected a symbol", sx.pos)
        return sx.text

    for node in read_all(text):
        if not isinstance(node, SList) or not node.items or not isinstance(node.items[0], SAtom):
            raise ParseError("expected a (command ...) form", getattr(node, "pos", 0))
        cmd = node.items[0].text
        if cmd in ("set-logic", "set-option", "set-info"):
            continue
        if cmd == "declare-const":
            name, sort = _args(node, 2, cmd)
            env[_name(name)] = _parse_sort(sort)
        elif cmd == "declare-fun":
            name, params, sort = _args(node, 3, cmd)
            if not isinstance(params, SList) or params.items:
                raise ParseError("only 0-ary declare-fun supported", node.pos)
            env[_name(name)] = _parse_sort(sort)
        elif cmd == "define-fun":
            name_sx, params, ret, body = _args(node, 4, cmd)
            name = _name(name_sx)
            funcs[name] = _FunDef(name, tuple(_parse_params(params)), _parse_sort(ret), body)
        elif cmd == "assert":
            (formula,) = _args(node, 1, cmd)
            term = _TermBuilder(env, funcs).build(formula)
            sort_of(term)
            assertions.append(term)
        elif cmd == "check-sat":
            last = check_formula(assertions, env)
            checked = True
            out.append(last[0])
        elif cmd == "get-model":
            if checked and last[0] == "sat":
                out.append(_format_model(last[1] or {}, env))
            else:
                out.append('(error "model is not available")')
        elif cmd == "exit":
            break
        # anything else: ignore
    return "\n".join(out) + ("\n" if out else "")


def _format_model(model: dict, env: dict[str, Sort]) -> str:
    lines = ["("]
    for name in sorted(env):
        val = model.get(name, False if env[name] is Sort.BOOL else 0)
        if env[name] is Sort.BOOL:
            rendered = "true" if val else "false"
            lines.append(f"  (define-fun {name} () Bool {rendered})")
        else:
            rendered = str(val) if val >= 0 else f"(- {-val})"
            lines.append(f"  (define-fun {name} () Int {rendered})")
    lines.append(")")
    return "\n".join(lines)


def main(argv=None) -> int:
    # flags (z3 compatibility: -in, -smt2, -T:n) are accepted and ignored;
    # a positional argument is read as a script file, else stdin is used
    args = [a for a in (argv if argv is not None else sys.argv[1:]) if not a.startswith("-")]
    try:
        if args:
            with open(args[0], encoding="utf-8") as fh:
                text = fh.read()
        else:
            text = sys.stdin.read()
        sys.stdout.write(run_script(text))
        return 0
    except InvrankError as exc:
        sys.stdout.write(f'(error "{exc}")\n')
        return 1


if __name__ == "__main__":
    sys.exit(main())
