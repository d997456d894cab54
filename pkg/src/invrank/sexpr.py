"""Minimal s-expression reader with source offsets.

Comments (`;` to end of line) are stripped.  Atoms keep their raw
spelling; interpretation (numbers, symbols, keywords) happens in the
consumers.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ParseError


@dataclass(frozen=True, slots=True)
class SAtom:
    text: str
    pos: int


@dataclass(frozen=True, slots=True)
class SList:
    items: tuple
    pos: int


SExpr = SAtom | SList

_DELIMS = "()"


def strip_comments(text: str) -> str:
    out = []
    in_string = False
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if in_string:
            out.append(ch)
            if ch == '"':
                in_string = False
            i += 1
        elif ch == '"':
            in_string = True
            out.append(ch)
            i += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def read_one(text: str, pos: int = 0) -> tuple[SExpr, int]:
    """Read a single s-expression starting at `pos`; returns (node, next_pos)."""
    n = len(text)
    while pos < n and text[pos].isspace():
        pos += 1
    if pos >= n:
        raise ParseError("unexpected end of input", pos)
    ch = text[pos]
    if ch == ")":
        raise ParseError("unexpected ')'", pos)
    if ch == "(":
        start = pos
        pos += 1
        items = []
        while True:
            while pos < n and text[pos].isspace():
                pos += 1
            if pos >= n:
                raise ParseError("unbalanced '(': expected ')'", start)
            if text[pos] == ")":
                return SList(tuple(items), start), pos + 1
            node, pos = read_one(text, pos)
            items.append(node)
    if ch == '"':
        end = text.find('"', pos + 1)
        if end < 0:
            raise ParseError("unterminated string literal", pos)
        return SAtom(text[pos : end + 1], pos), end + 1
    if ch == "|":
        end = text.find("|", pos + 1)
        if end < 0:
            raise ParseError("unterminated quoted symbol", pos)
        return SAtom(text[pos + 1 : end], pos), end + 1
    start = pos
    while pos < n and not text[pos].isspace() and text[pos] not in _DELIMS:
        pos += 1
    return SAtom(text[start:pos], start), pos


def read_all(text: str) -> list[SExpr]:
    """Read every top-level s-expression in `text` (comments allowed)."""
    text = strip_comments(text)
    nodes = []
    pos, n = 0, len(text)
    while True:
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            return nodes
        node, pos = read_one(text, pos)
        nodes.append(node)


def unparse(node: SExpr) -> str:
    if isinstance(node, SAtom):
        return node.text
    return "(" + " ".join(unparse(x) for x in node.items) + ")"
