"""SyGuS-Inv problem files, candidate invariants, and the toy loop language.

Handles the inv-track subset: `set-logic`, `synth-inv`, `define-fun`,
`inv-constraint`, `check-synth`.  Helper define-funs are inline-expanded,
`let` bindings are expanded, and primed variables are normalized to the
`x!` spelling.  Unknown commands are skipped with a warning.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .errors import (
    ArityMismatch,
    MissingComponent,
    ParseError,
    SortError,
    UnknownVariable,
)
from .sexpr import SAtom, SExpr, SList, read_all, read_one, unparse
from .terms import (
    SORT_BY_NAME,
    Add,
    And,
    Assign,
    BoolConst,
    Div,
    Eq,
    Ge,
    Gt,
    If,
    Implies,
    IntConst,
    Ite,
    Le,
    LoopSpec,
    Lt,
    Mod,
    Mul,
    Not,
    Or,
    Select,
    Seq,
    Skip,
    Sort,
    Stmt,
    Store,
    Sub,
    Term,
    Var,
    free_vars,
    sort_of,
    substitute_parallel,
)

log = logging.getLogger(__name__)

LOGICS = ("LIA", "NIA", "ALIA")
SOURCES = ("llm_gpt35", "llm_gpt4", "loopinvgen", "other")


@dataclass(frozen=True)
class Problem:
    """One invariant-synthesis instance over vars and their primed copies."""

    id: str
    logic: str
    vars: tuple[tuple[str, Sort], ...]
    primed_vars: tuple[tuple[str, Sort], ...]
    pre: Term
    trans: Term
    post: Term
    raw_text: str

    @property
    def var_env(self) -> dict[str, Sort]:
        return dict(self.vars)


@dataclass(frozen=True)
class InvariantCandidate:
    id: str
    problem_id: str
    body: Term
    source: str = "other"
    generation_index: int = 0
    raw_text: str = ""

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"unknown candidate source {self.source!r}")
        if self.generation_index < 0:
            raise ValueError("generation_index must be >= 0")


def _norm_name(name: str) -> str:
    # benchmarks spell primed variables either x! or x'
    return name[:-1] + "!" if name.endswith("'") else name


def _parse_sort(sx: SExpr) -> Sort:
    text = unparse(sx)
    try:
        return SORT_BY_NAME[text]
    except KeyError:
        raise SortError(f"unsupported sort {text!r}") from None


def _parse_params(sx: SExpr) -> list[tuple[str, Sort]]:
    if not isinstance(sx, SList):
        raise ParseError("expected a parameter list", sx.pos)
    params = []
    for p in sx.items:
        if not isinstance(p, SList) or len(p.items) != 2 or not isinstance(p.items[0], SAtom):
            raise ParseError("expected (name Sort) parameter", p.pos)
        params.append((_norm_name(p.items[0].text), _parse_sort(p.items[1])))
    return params


@dataclass(frozen=True)
class _FunDef:
    name: str
    params: tuple[tuple[str, Sort], ...]
    ret: Sort
    body: SExpr


_CHAINABLE = {"=": Eq, "<": Lt, "<=": Le, ">": Gt, ">=": Ge}
_LEFT_ASSOC = {"+": Add, "*": Mul, "div": Div, "-": Sub}


class _TermBuilder:
    """Builds sorted Terms from s-expressions in a variable environment."""

    def __init__(self, env: dict[str, Sort], funcs: dict[str, _FunDef] | None = None):
        self.env = env
        self.funcs = funcs or {}
        self._expanding: set[str] = set()

    def build(self, sx: SExpr, lets: dict[str, Term] | None = None) -> Term:
        lets = lets or {}
        if isinstance(sx, SAtom):
            return self._atom(sx, lets)
        if not sx.items:
            raise ParseError("empty application", sx.pos)
        head = sx.items[0]
        if not isinstance(head, SAtom):
            raise ParseError("application head must be a symbol", sx.pos)
        op = head.text
        args = sx.items[1:]
        if op == "let":
            return self._let(sx, lets)
        if op in ("and", "or"):
            children = [self.build(a, lets) for a in args]
            if not children:
                raise ParseError(f"{op} needs at least one argument", sx.pos)
            return And(children) if op == "and" else Or(children)
        if op == "not":
            self._arity(sx, args, 1)
            return Not(self.build(args[0], lets))
        if op == "=>":
            if len(args) < 2:
                raise ParseError("=> needs at least two arguments", sx.pos)
            built = [self.build(a, lets) for a in args]
            out = built[-1]
            for a in reversed(built[:-1]):
                out = Implies(a, out)
            return out
        if op == "ite":
            self._arity(sx, args, 3)
            return Ite(*(self.build(a, lets) for a in args))
        if op == "select":
            self._arity(sx, args, 2)
            return Select(*(self.build(a, lets) for a in args))
        if op == "store":
            self._arity(sx, args, 3)
            return Store(*(self.build(a, lets) for a in args))
        if op == "mod":
            self._arity(sx, args, 2)
            return Mod(self.build(args[0], lets), self.build(args[1], lets))
        if op == "-" and len(args) == 1:
            inner = self.build(args[0], lets)
            if isinstance(inner, IntConst):
                return IntConst(-inner.value)
            return Sub(IntConst(0), inner)
        if op in _LEFT_ASSOC:
            if len(args) < 2:
                raise ParseError(f"{op} needs at least two arguments", sx.pos)
            cls = _LEFT_ASSOC[op]
            built = [self.build(a, lets) for a in args]
            out = built[0]
            for b in built[1:]:
                out = cls(out, b)
            return out
        if op in _CHAINABLE:
            if len(args) < 2:
                raise ParseError(f"{op} needs at least two arguments", sx.pos)
            cls = _CHAINABLE[op]
            built = [self.build(a, lets) for a in args]
            pairs = [cls(built[i], built[i + 1]) for i in range(len(built) - 1)]
            return pairs[0] if len(pairs) == 1 else And(pairs)
        if op == "distinct":
            if len(args) < 2:
                raise ParseError("distinct needs at least two arguments", sx.pos)
            built = [self.build(a, lets) for a in args]
            pairs = [
                Not(Eq(built[i], built[j]))
                for i in range(len(built))
                for j in range(i + 1, len(built))
            ]
            return pairs[0] if len(pairs) == 1 else And(pairs)
        if op in self.funcs:
            return self._apply(sx, op, args, lets)
        raise ParseError(f"unknown operator or function {op!r}", sx.pos)

    def _atom(self, sx: SAtom, lets: dict[str, Term]) -> Term:
        text = sx.text
        if text == "true":
            return BoolConst(True)
        if text == "false":
            return BoolConst(False)
        if text.lstrip("-").isdigit():
            return IntConst(int(text))
        name = _norm_name(text)
        if name in lets:
            return lets[name]
        if name in self.env:
            return Var(name, self.env[name])
        fn = self.funcs.get(name)
        if fn is not None and not fn.params:
            return self._apply(sx, name, (), lets)
        raise UnknownVariable(f"unknown variable {text!r} (offset {sx.pos})")

    def _let(self, sx: SList, lets: dict[str, Term]) -> Term:
        if len(sx.items) != 3 or not isinstance(sx.items[1], SList):
            raise ParseError("malformed let", sx.pos)
        new = dict(lets)
        for binding in sx.items[1].items:
            if (
                not isinstance(binding, SList)
                or len(binding.items) != 2
                or not isinstance(binding.items[0], SAtom)
            ):
                raise ParseError("malformed let binding", binding.pos)
            # bindings are parallel: values are built in the outer scope
            new[_norm_name(binding.items[0].text)] = self.build(binding.items[1], lets)
        return self.build(sx.items[2], new)

    def _apply(self, sx: SExpr, name: str, args: tuple, lets: dict[str, Term]) -> Term:
        fn = self.funcs[name]
        if len(args) != len(fn.params):
            raise ParseError(
                f"{name} expects {len(fn.params)} arguments, got {len(args)}", sx.pos
            )
        if name in self._expanding:
            raise ParseError(f"recursive function {name!r} cannot be expanded", sx.pos)
        built_args = [self.build(a, lets) for a in args]
        self._expanding.add(name)
        try:
            inner = _TermBuilder(dict(fn.params), self.funcs)
            inner._expanding = self._expanding
            body = inner.build(fn.body)
        finally:
            self._expanding.discard(name)
        return substitute_parallel(body, {p: a for (p, _), a in zip(fn.params, built_args)})

    @staticmethod
    def _arity(sx: SExpr, args: tuple, want: int):
        if len(args) != want:
            raise ParseError(f"expected {want} arguments, got {len(args)}", sx.pos)


def parse_term(text: str, env: dict[str, Sort]) -> Term:
    """Parse a single term over the given variables; validates sorting."""
    nodes = read_all(text)
    if len(nodes) != 1:
        raise ParseError(f"expected one term, found {len(nodes)} s-expressions")
    term = _TermBuilder(env).build(nodes[0])
    sort_of(term)
    return term


def parse_problem(text: str, problem_id: str = "problem") -> Problem:
    """Parse a SyGuS-Inv v2 file into a fully sorted Problem."""
    logic = None
    synth: tuple[str, list[tuple[str, Sort]]] | None = None
    funcs: dict[str, _FunDef] = {}
    constraint: tuple[str, str, str, str] | None = None

    for node in read_all(text):
        if not isinstance(node, SList) or not node.items or not isinstance(node.items[0], SAtom):
            raise ParseError("expected a (command ...) form", node.pos)
        cmd = node.items[0].text
        items = node.items
        if cmd == "set-logic":
            if len(items) != 2 or not isinstance(items[1], SAtom):
                raise ParseError("malformed set-logic", node.pos)
            logic = items[1].text
            if logic not in LOGICS:
                raise ParseError(f"unsupported logic {logic!r}", node.pos)
        elif cmd == "synth-inv":
            if len(items) < 3 or not isinstance(items[1], SAtom):
                raise ParseError("malformed synth-inv", node.pos)
            synth = (items[1].text, _parse_params(items[2]))
        elif cmd == "define-fun":
            if len(items) != 5 or not isinstance(items[1], SAtom):
                raise ParseError("malformed define-fun", node.pos)
            name = items[1].text
            funcs[name] = _FunDef(
                name, tuple(_parse_params(items[2])), _parse_sort(items[3]), items[4]
            )
        elif cmd == "inv-constraint":
            if len(items) != 5 or not all(isinstance(x, SAtom) for x in items[1:]):
                raise ParseError("malformed inv-constraint", node.pos)
            constraint = tuple(x.text for x in items[1:])
        elif cmd == "check-synth":
            pass
        else:
            log.warning("skipping unrecognized command (%s ...)", cmd)

    if synth is None:
        raise MissingComponent("no (synth-inv ...) command")
    if constraint is None:
        raise MissingComponent("no (inv-constraint ...) command")
    inv_name, pre_name, trans_name, post_name = constraint
    if inv_name != synth[0]:
        raise ParseError(
            f"inv-constraint names {inv_name!r} but synth-inv declares {synth[0]!r}"
        )

    variables = tuple(synth[1])
    primed = tuple((f"{n}!", s) for n, s in variables)
    state_env = dict(variables)
    trans_env = dict(variables) | dict(primed)

    pre = _bind_fun(funcs, pre_name, variables, state_env, "pre")
    trans = _bind_fun(funcs, trans_name, variables + primed, trans_env, "trans")
    post = _bind_fun(funcs, post_name, variables, state_env, "post")

    return Problem(
        id=problem_id,
        logic=logic or "LIA",
        vars=variables,
        primed_vars=primed,
        pre=pre,
        trans=trans,
        post=post,
        raw_text=text,
    )


def _bind_fun(
    funcs: dict[str, _FunDef],
    name: str,
    targets: tuple[tuple[str, Sort], ...],
    check_env: dict[str, Sort],
    role: str,
) -> Term:
    fn = funcs.get(name)
    if fn is None:
        raise MissingComponent(f"inv-constraint references undefined {role} function {name!r}")
    if fn.ret is not Sort.BOOL:
        raise SortError(f"{role} function {name!r} must return Bool")
    if len(fn.params) != len(targets):
        raise ParseError(
            f"{role} function {name!r} has {len(fn.params)} parameters, expected {len(targets)}"
        )
    for (pname, psort), (tname, tsort) in zip(fn.params, targets):
        if psort is not tsort:
            raise SortError(
                f"{role} parameter {pname!r} is {psort.value}, expected {tsort.value} ({tname})"
            )
    helper_funcs = {k: v for k, v in funcs.items() if k != name}
    body = _TermBuilder(dict(fn.params), helper_funcs).build(fn.body)
    renames = {p: Var(t, s) for (p, _), (t, s) in zip(fn.params, targets) if p != t}
    if renames:
        body = substitute_parallel(body, renames)
    sort_of(body)
    extra = {n for n, _ in free_vars(body)} - set(check_env)
    if extra:
        raise UnknownVariable(f"{role} mentions unexpected variables {sorted(extra)}")
    return body


def parse_candidate(
    text: str,
    problem: Problem,
    *,
    cand_id: str | None = None,
    source: str = "other",
    generation_index: int = 0,
) -> InvariantCandidate:
    """Parse a candidate invariant: a define-fun or a bare Bool s-expression.

    define-fun parameters bind positionally to the problem's variables, so
    parameter names are free to differ from the problem's.
    """
    nodes = read_all(text)
    if len(nodes) != 1:
        raise ParseError(f"expected one s-expression, found {len(nodes)}")
    node = nodes[0]

    if (
        isinstance(node, SList)
        and node.items
        and isinstance(node.items[0], SAtom)
        and node.items[0].text == "define-fun"
    ):
        if len(node.items) != 5 or not isinstance(node.items[1], SAtom):
            raise ParseError("malformed define-fun", node.pos)
        params = _parse_params(node.items[2])
        if len(params) != len(problem.vars):
            raise ArityMismatch(
                f"candidate has {len(params)} parameters, problem has {len(problem.vars)}"
            )
        for (pname, psort), (vname, vsort) in zip(params, problem.vars):
            if psort is not vsort:
                raise SortError(
                    f"parameter {pname!r} is {psort.value}, expected {vsort.value} ({vname})"
                )
        if _parse_sort(node.items[3]) is not Sort.BOOL:
            raise SortError("candidate must return Bool")
        body = _TermBuilder(dict(params)).build(node.items[4])
        renames = {
            p: Var(v, s) for (p, _), (v, s) in zip(params, problem.vars) if p != v
        }
        if renames:
            body = substitute_parallel(body, renames)
    else:
        body = _TermBuilder(problem.var_env).build(node)

    if sort_of(body) is not Sort.BOOL:
        raise SortError("candidate invariant must be Bool-sorted")
    return InvariantCandidate(
        id=cand_id or f"{source}-{generation_index}",
        problem_id=problem.id,
        body=body,
        source=source,
        generation_index=generation_index,
        raw_text=text,
    )


# --- toy-language loop specifications ----------------------------------------

_WORD_STOP = set("(){};")


class _Cursor:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def word(self) -> str:
        self.skip_ws()
        start = self.pos
        while (
            self.pos < len(self.text)
            and not self.text[self.pos].isspace()
            and self.text[self.pos] not in _WORD_STOP
        ):
            self.pos += 1
        if self.pos == start:
            raise ParseError("expected a word", start)
        return self.text[start : self.pos]

    def expect(self, token: str):
        self.skip_ws()
        if not self.text.startswith(token, self.pos):
            raise ParseError(f"expected {token!r}", self.pos)
        self.pos += len(token)

    def sexpr(self) -> SExpr:
        self.skip_ws()
        if self.peek() == "(":
            node, self.pos = read_one(self.text, self.pos)
            return node
        start = self.pos
        return SAtom(self.word(), start)

    def done(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)


def parse_loopspec(text: str) -> LoopSpec:
    """Parse `pre: t; while t do { stmts } post: t;` into a LoopSpec.

    Variable sorts are inferred: a name is Bool when it appears only in
    Bool positions, Int otherwise.
    """
    cur = _Cursor(text)
    cur.expect("pre:")
    pre_sx = cur.sexpr()
    cur.expect(";")
    cur.expect("while")
    guard_sx = cur.sexpr()
    cur.expect("do")
    cur.expect("{")
    body_raw = _parse_raw_stmts(cur)
    cur.expect("}")
    cur.expect("post:")
    post_sx = cur.sexpr()
    cur.expect(";")
    if not cur.done():
        raise ParseError("trailing input after post condition", cur.pos)

    ctx: dict[str, set] = {}
    for sx in (pre_sx, guard_sx, post_sx):
        _infer_sorts(sx, Sort.BOOL, ctx)
    _infer_stmt_sorts(body_raw, ctx)
    env = {
        name: Sort.BOOL if seen == {Sort.BOOL} else Sort.INT for name, seen in ctx.items()
    }

    builder = _TermBuilder(env)
    body = _build_stmts(body_raw, builder)
    spec = LoopSpec(
        pre=builder.build(pre_sx),
        guard=builder.build(guard_sx),
        body=body,
        post=builder.build(post_sx),
        vars=tuple(sorted(env.items())),
    )
    return spec.check()


# raw statements: ("assign", name, sexpr) | ("skip",) | ("if", sexpr, list, list)


def _parse_raw_stmts(cur: _Cursor) -> list:
    out = []
    while True:
        if cur.peek() in ("}", ""):
            return out
        word_start = cur.pos
        word = cur.word()
        if word == "skip":
            cur.expect(";")
            out.append(("skip",))
        elif word == "if":
            cond = cur.sexpr()
            cur.expect("{")
            then = _parse_raw_stmts(cur)
            cur.expect("}")
            cur.expect("else")
            cur.expect("{")
            other = _parse_raw_stmts(cur)
            cur.expect("}")
            out.append(("if", cond, then, other))
        else:
            if not word.isidentifier():
                raise ParseError(f"expected a statement, got {word!r}", word_start)
            cur.expect(":=")
            rhs = cur.sexpr()
            cur.expect(";")
            out.append(("assign", word, rhs))


_INT_OPS = set(_LEFT_ASSOC) | {"mod"}
_CMP_OPS = set(_CHAINABLE) - {"="}
_BOOL_OPS = {"and", "or", "not", "=>"}


def _evident_sort(sx: SExpr) -> Sort | None:
    if isinstance(sx, SAtom):
        if sx.text in ("true", "false"):
            return Sort.BOOL
        if sx.text.lstrip("-").isdigit():
            return Sort.INT
        return None
    if sx.items and isinstance(sx.items[0], SAtom):
        op = sx.items[0].text
        if op in _INT_OPS:
            return Sort.INT
        if op in _CMP_OPS or op in _BOOL_OPS or op == "=":
            return Sort.BOOL
    return None


def _infer_sorts(sx: SExpr, expected: Sort | None, ctx: dict[str, set]):
    if isinstance(sx, SAtom):
        text = sx.text
        if text in ("true", "false") or text.lstrip("-").isdigit():
            return
        if expected is not None:
            ctx.setdefault(text, set()).add(expected)
        else:
            ctx.setdefault(text, set())
        return
    if not sx.items or not isinstance(sx.items[0], SAtom):
        return
    op = sx.items[0].text
    args = sx.items[1:]
    if op in _INT_OPS or op in _CMP_OPS:
        for a in args:
            _infer_sorts(a, Sort.INT, ctx)
    elif op in _BOOL_OPS:
        for a in args:
            _infer_sorts(a, Sort.BOOL, ctx)
    elif op == "ite":
        if len(args) == 3:
            _infer_sorts(args[0], Sort.BOOL, ctx)
            _infer_sorts(args[1], expected, ctx)
            _infer_sorts(args[2], expected, ctx)
    elif op == "=":
        hint = None
        for a in args:
            hint = hint or _evident_sort(a)
        for a in args:
            _infer_sorts(a, hint, ctx)
    else:
        for a in args:
            _infer_sorts(a, None, ctx)


def _infer_stmt_sorts(raw: list, ctx: dict[str, set]):
    for stmt in raw:
        if stmt[0] == "assign":
            ctx.setdefault(stmt[1], set()).add(Sort.INT)
            _infer_sorts(stmt[2], Sort.INT, ctx)
        elif stmt[0] == "if":
            _infer_sorts(stmt[1], Sort.BOOL, ctx)
            _infer_stmt_sorts(stmt[2], ctx)
            _infer_stmt_sorts(stmt[3], ctx)


def _build_stmts(raw: list, builder: _TermBuilder) -> Stmt:
    if not raw:
        return Skip()
    built = []
    for stmt in raw:
        if stmt[0] == "skip":
            built.append(Skip())
        elif stmt[0] == "assign":
            built.append(Assign(stmt[1], builder.build(stmt[2])))
        else:
            built.append(
                If(builder.build(stmt[1]), _build_stmts(stmt[2], builder), _build_stmts(stmt[3], builder))
            )
    out = built[-1]
    for s in reversed(built[:-1]):
        out = Seq(s, out)
    return out
