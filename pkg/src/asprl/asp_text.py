"""
asprl.asp_text

Текстовый формат ground-программ для тестов и отладки:

    % комментарий
    a.                        факт
    a :- b, not c.            правило
    :- a, b.                  ограничение
    1 {s1; s2; s3} 1 :- s0.   choice (границы необязательны)
    -a :- not a.              strong negation (`-a` + ограничение :- a, -a)

Это удобство для тестов, а не публичный контракт.
"""

from __future__ import annotations

import re
from typing import List, Tuple

from .asp_core import Atom, Program, ProgramBuilder, Rule, ChoiceHead, Literal
from .errors import ProgramSyntaxError

_ATOM_RE = re.compile(r"^-?[A-Za-z0-9_~][^\s;{}]*$")
_CHOICE_RE = re.compile(r"^(\d+)?\s*\{(.*)\}\s*(\d+)?$", re.S)


def parse_program(text: str) -> Program:
    builder = ProgramBuilder()
    # id атомов = порядок первого появления в тексте (голова раньше тела)
    for line, stmt in _statements(text):
        head_txt, body_txt = _split_rule(stmt, line)

        if not head_txt:
            builder.add(Rule(None, _parse_body(builder, body_txt, line)))
            continue

        choice = _CHOICE_RE.match(head_txt)
        if choice:
            lo, inner, hi = choice.groups()
            names = [x.strip() for x in _split_top(inner, ";,") if x.strip()]
            if not names:
                raise ProgramSyntaxError("empty choice head", line)
            cands = tuple(_atom(builder, n, line) for n in names)
            lower = int(lo) if lo is not None else 0
            upper = int(hi) if hi is not None else len(cands)
            builder.add(Rule(ChoiceHead(lower, upper, cands), _parse_body(builder, body_txt, line)))
            continue

        head = _atom(builder, head_txt, line)
        builder.add(Rule(head, _parse_body(builder, body_txt, line)))
    return builder.build()


def format_program(program: Program) -> str:
    return "".join(f"{rule}\n" for rule in program.rules)


# ---- внутреннее ----

def _statements(text: str) -> List[Tuple[int, str]]:
    """Режем по '.' вне скобок; возвращаем (номер строки начала, текст)."""
    out: List[Tuple[int, str]] = []
    buf: List[str] = []
    depth = 0
    start_line = 1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("%", 1)[0]
        for ch in line:
            if not buf and ch.isspace():
                continue
            if not buf:
                start_line = lineno
            if ch in "({":
                depth += 1
            elif ch in ")}":
                depth -= 1
                if depth < 0:
                    raise ProgramSyntaxError("unbalanced brackets", lineno)
            if ch == "." and depth == 0:
                out.append((start_line, "".join(buf).strip()))
                buf = []
                continue
            buf.append(ch)
        if buf:
            buf.append(" ")
    if "".join(buf).strip():
        raise ProgramSyntaxError("statement without terminating '.'", start_line)
    return out


def _split_rule(stmt: str, line: int) -> Tuple[str, str]:
    if ":-" in stmt:
        head, body = stmt.split(":-", 1)
        return head.strip(), body.strip()
    if not stmt:
        raise ProgramSyntaxError("empty statement", line)
    return stmt.strip(), ""


def _split_top(s: str, seps: str) -> List[str]:
    parts: List[str] = []
    depth = 0
    cur: List[str] = []
    for ch in s:
        if ch in "({":
            depth += 1
        elif ch in ")}":
            depth -= 1
        if ch in seps and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


def _parse_body(builder: ProgramBuilder, body: str, line: int) -> Tuple[Literal, ...]:
    if not body:
        return ()
    lits: List[Literal] = []
    for part in _split_top(body, ","):
        part = part.strip()
        if not part:
            raise ProgramSyntaxError("empty body literal", line)
        negated = False
        if part.startswith("not "):
            negated = True
            part = part[4:].strip()
        lits.append(Literal(_atom(builder, part, line), negated))
    return tuple(lits)


def _atom(builder: ProgramBuilder, name: str, line: int) -> Atom:
    name = name.strip()
    if not _ATOM_RE.match(name) or name == "not":
        raise ProgramSyntaxError(f"bad atom {name!r}", line)
    return builder.atom(name)
