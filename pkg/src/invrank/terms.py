"""Logical terms, typed variables, and the loop-free imperative language.

Terms are immutable, quantifier-free trees over Int/Bool/array-of-Int
sorts.  No simplification happens anywhere in this module: rendering and
substitution are purely syntactic so that solver semantics and test
expectations stay deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import SortError, SortMismatch


class Sort(Enum):
    INT = "Int"
    BOOL = "Bool"
    ARRAY_INT_INT = "(Array Int Int)"
    ARRAY_INT_BOOL = "(Array Int Bool)"

    @property
    def smtlib(self) -> str:
        return self.value

    @property
    def element(self) -> "Sort":
        if self is Sort.ARRAY_INT_INT:
            return Sort.INT
        if self is Sort.ARRAY_INT_BOOL:
            return Sort.BOOL
        raise SortError(f"{self.value} is not an array sort")


SORT_BY_NAME = {s.value: s for s in Sort}


class Term:
    """Base class; concrete nodes are the frozen dataclasses below."""

    __slots__ = ()


@dataclass(frozen=True, slots=True)
class IntConst(Term):
    value: int


@dataclass(frozen=True, slots=True)
class BoolConst(Term):
    value: bool


@dataclass(frozen=True, slots=True)
class Var(Term):
    name: str
    sort: Sort

    def __post_init__(self):
        if not self.name:
            raise SortError("variable name must be nonempty")


@dataclass(frozen=True, slots=True)
class Add(Term):
    left: Term
    right: Term


@dataclass(frozen=True, slots=True)
class Sub(Term):
    left: Term
    right: Term


@dataclass(frozen=True, slots=True)
class Mul(Term):
    left: Term
    right: Term


@dataclass(frozen=True, slots=True)
class Div(Term):
    left: Term
    right: Term


@dataclass(frozen=True, slots=True)
class Mod(Term):
    left: Term
    right: Term


@dataclass(frozen=True, slots=True)
class Eq(Term):
    left: Term
    right: Term


@dataclass(frozen=True, slots=True)
class Lt(Term):
    left: Term
    right: Term


@dataclass(frozen=True, slots=True)
class Le(Term):
    left: Term
    right: Term


@dataclass(frozen=True, slots=True)
class Gt(Term):
    left: Term
    right: Term


@dataclass(frozen=True, slots=True)
class Ge(Term):
    left: Term
    right: Term


@dataclass(frozen=True, slots=True)
class And(Term):
    children: tuple[Term, ...]

    def __init__(self, children):
        object.__setattr__(self, "children", tuple(children))
        if not self.children:
            raise SortError("and requires at least one child")


@dataclass(frozen=True, slots=True)
class Or(Term):
    children: tuple[Term, ...]

    def __init__(self, children):
        object.__setattr__(self, "children", tuple(children))
        if not self.children:
            raise SortError("or requires at least one child")


@dataclass(frozen=True, slots=True)
class Not(Term):
    child: Term


@dataclass(frozen=True, slots=True)
class Implies(Term):
    left: Term
    right: Term


@dataclass(frozen=True, slots=True)
class Ite(Term):
    cond: Term
    then: Term
    other: Term


@dataclass(frozen=True, slots=True)
class Select(Term):
    array: Term
    index: Term


@dataclass(frozen=True, slots=True)
class Store(Term):
    array: Term
    index: Term
    value: Term


_ARITH = (Add, Sub, Mul, Div, Mod)
_COMPARE = (Lt, Le, Gt, Ge)

_OP_SYMBOL = {
    Add: "+", Sub: "-", Mul: "*", Div: "div", Mod: "mod",
    Eq: "=", Lt: "<", Le: "<=", Gt: ">", Ge: ">=",
    And: "and", Or: "or", Not: "not", Implies: "=>", Ite: "ite",
    Select: "select", Store: "store",
}


def sort_of(t: Term) -> Sort:
    """Compute the sort of `t`, raising SortError if any node is ill-sorted."""
    if isinstance(t, IntConst):
        return Sort.INT
    if isinstance(t, BoolConst):
        return Sort.BOOL
    if isinstance(t, Var):
        return t.sort
    if isinstance(t, _ARITH):
        _expect(t.left, Sort.INT, t)
        _expect(t.right, Sort.INT, t)
        return Sort.INT
    if isinstance(t, Eq):
        ls, rs = sort_of(t.left), sort_of(t.right)
        if ls is not rs:
            raise SortError(f"= applied to {ls.value} and {rs.value}")
        return Sort.BOOL
    if isinstance(t, _COMPARE):
        _expect(t.left, Sort.INT, t)
        _expect(t.right, Sort.INT, t)
        return Sort.BOOL
    if isinstance(t, (And, Or)):
        for c in t.children:
            _expect(c, Sort.BOOL, t)
        return Sort.BOOL
    if isinstance(t, Not):
        _expect(t.child, Sort.BOOL, t)
        return Sort.BOOL
    if isinstance(t, Implies):
        _expect(t.left, Sort.BOOL, t)
        _expect(t.right, Sort.BOOL, t)
        return Sort.BOOL
    if isinstance(t, Ite):
        _expect(t.cond, Sort.BOOL, t)
        ts, os_ = sort_of(t.then), sort_of(t.other)
        if ts is not os_:
            raise SortError(f"ite branches have sorts {ts.value} and {os_.value}")
        return ts
    if isinstance(t, Select):
        arr = sort_of(t.array)
        _expect(t.index, Sort.INT, t)
        return arr.element
    if isinstance(t, Store):
        arr = sort_of(t.array)
        _expect(t.index, Sort.INT, t)
        _expect(t.value, arr.element, t)
        return arr
    raise SortError(f"unknown term node {type(t).__name__}")


def _expect(child: Term, want: Sort, parent: Term):
    got = sort_of(child)
    if got is not want:
        op = _OP_SYMBOL.get(type(parent), type(parent).__name__)
        raise SortError(f"{op} expects {want.value}, got {got.value}")


def free_vars(t: Term) -> set[tuple[str, Sort]]:
    """All (name, sort) variables occurring in `t`."""
    out: set[tuple[str, Sort]] = set()
    _collect_vars(t, out)
    return out


def _collect_vars(t: Term, out: set):
    if isinstance(t, Var):
        out.add((t.name, t.sort))
    elif isinstance(t, (IntConst, BoolConst)):
        pass
    else:
        for c in _children(t):
            _collect_vars(c, out)


def _children(t: Term) -> tuple[Term, ...]:
    if isinstance(t, (And, Or)):
        return t.children
    if isinstance(t, Not):
        return (t.child,)
    if isinstance(t, Ite):
        return (t.cond, t.then, t.other)
    if isinstance(t, Select):
        return (t.array, t.index)
    if isinstance(t, Store):
        return (t.array, t.index, t.value)
    if isinstance(t, (IntConst, BoolConst, Var)):
        return ()
    return (t.left, t.right)


def _rebuild(t: Term, children: tuple[Term, ...]) -> Term:
    cls = type(t)
    if cls in (And, Or):
        return cls(children)
    return cls(*children)


def substitute(phi: Term, var: str, replacement: Term) -> Term:
    """Replace every occurrence of variable `var` in `phi` by `replacement`.

    Purely textual; no capture is possible since terms are quantifier-free.
    Raises SortMismatch if the replacement's sort differs from the
    variable's sort at any occurrence.
    """
    return substitute_parallel(phi, {var: replacement})


def substitute_parallel(phi: Term, mapping: dict[str, Term]) -> Term:
    """Simultaneously substitute several variables (used for priming)."""
    if isinstance(phi, Var):
        repl = mapping.get(phi.name)
        if repl is None:
            return phi
        rs = sort_of(repl)
        if rs is not phi.sort:
            raise SortMismatch(
                f"cannot substitute {rs.value} term for {phi.sort.value} variable {phi.name}"
            )
        return repl
    if isinstance(phi, (IntConst, BoolConst)):
        return phi
    old = _children(phi)
    new = tuple(substitute_parallel(c, mapping) for c in old)
    if all(a is b for a, b in zip(old, new)):
        return phi
    return _rebuild(phi, new)


def render_smtlib(t: Term) -> str:
    """Canonical SMT-LIB2 rendering; same term always yields the same bytes."""
    parts: list[str] = []
    _render(t, parts)
    return "".join(parts)


def _render(t: Term, parts: list[str]):
    if isinstance(t, IntConst):
        if t.value < 0:
            parts.append(f"(- {-t.value})")
        else:
            parts.append(str(t.value))
        return
    if isinstance(t, BoolConst):
        parts.append("true" if t.value else "false")
        return
    if isinstance(t, Var):
        parts.append(t.name)
        return
    parts.append("(")
    parts.append(_OP_SYMBOL[type(t)])
    for c in _children(t):
        parts.append(" ")
        _render(c, parts)
    parts.append(")")


# --- the loop-free statement language ---------------------------------------


class Stmt:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Assign(Stmt):
    var: str
    rhs: Term


@dataclass(frozen=True, slots=True)
class Skip(Stmt):
    pass


@dataclass(frozen=True, slots=True)
class Seq(Stmt):
    first: Stmt
    second: Stmt


@dataclass(frozen=True, slots=True)
class If(Stmt):
    cond: Term
    then: Stmt
    other: Stmt


@dataclass(frozen=True, slots=True)
class LoopSpec:
    """Hoare triple around a single while loop: {pre} while guard do body {post}."""

    pre: Term
    guard: Term
    body: Stmt
    post: Term
    vars: tuple[tuple[str, Sort], ...] = field(default_factory=tuple)

    def check(self):
        declared = set(self.vars)
        for name, phi in (("pre", self.pre), ("guard", self.guard), ("post", self.post)):
            if sort_of(phi) is not Sort.BOOL:
                raise SortError(f"{name} must be Bool-sorted")
            missing = free_vars(phi) - declared
            if missing:
                raise SortError(f"{name} uses undeclared variables {sorted(missing)}")
        _check_stmt(self.body, declared)
        return self


def _check_stmt(s: Stmt, declared: set):
    if isinstance(s, Skip):
        return
    if isinstance(s, Assign):
        if sort_of(s.rhs) is not Sort.INT:
            raise SortError(f"assignment to {s.var} must have Int rhs")
        missing = free_vars(s.rhs) - declared
        if missing or (s.var, Sort.INT) not in declared:
            raise SortError(f"assignment uses undeclared variables near {s.var}")
        return
    if isinstance(s, Seq):
        _check_stmt(s.first, declared)
        _check_stmt(s.second, declared)
        return
    if isinstance(s, If):
        if sort_of(s.cond) is not Sort.BOOL:
            raise SortError("if condition must be Bool-sorted")
        missing = free_vars(s.cond) - declared
        if missing:
            raise SortError(f"if condition uses undeclared variables {sorted(missing)}")
        _check_stmt(s.then, declared)
        _check_stmt(s.other, declared)
        return
    raise SortError(f"unknown statement node {type(s).__name__}")
