"""
asprl.action_parser

Текстовый формат описаний действий -> ActionDescription.

    % комментарий
    fluent at : cell(0..3, 0..3).
    fluent light : {on, off}.
    fluent n : 0..5.
    action up, down.
    caused light=on if n=5.                       статический закон
    up causes at=(X,Y+1) if at=(X,Y).             = caused at=(X,Y+1) after at=(X,Y), up
    caused at=(X,Y) if light=on after at=(X,Y), down.
    flip causes {light=on; light=off} if n=0.     недетерминированный эффект
    initially at=(0,0).
    goal at=(3,3).
    never at=(1,1).

Переменные (X, Y, ...) пишутся с заглавной буквы. Диапазон переменной задаёт её
"голое" вхождение в позиции значения: в k-й координате клетки — k-я ось области,
как значение целого/символьного флюента — вся область. Экземпляры со значениями
вне области отбрасываются.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import product
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union

from .action_lang import (
    ActionConstant,
    ActionDescription,
    Eq,
    FluentConstant,
    FluentDynamicLaw,
    StaticLaw,
)
from .core_types import Value
from .errors import DomainSyntaxError, UndeclaredConstant, ValueOutsideDomain

_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<comment>%[^\n]*)|(?P<nl>\n)"
    r"|(?P<num>\d+)|(?P<var>[A-Z][A-Za-z0-9_]*)|(?P<ident>[a-z_][A-Za-z0-9_]*)"
    r"|(?P<range>\.\.)|(?P<punct>[.,;:=(){}+\-])"
)

KEYWORDS = {"fluent", "action", "caused", "causes", "if", "after", "initially", "goal", "never", "cell"}


@dataclass(frozen=True)
class Token:
    kind: str  # num | var | ident | range | punct | eof
    text: str
    line: int
    column: int


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise DomainSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = match.lastgroup
        if kind == "nl":
            line += 1
            line_start = match.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, match.group(), line, pos - line_start + 1))  # type: ignore[arg-type]
        pos = match.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# ---- сырое дерево (до заземления) ----

# целое выражение: список (знак, число | имя переменной)
IntExpr = Tuple[Tuple[int, Union[int, str]], ...]


@dataclass(frozen=True)
class RawValue:
    kind: str  # tuple | int | sym
    parts: Tuple[IntExpr, ...] = ()
    symbol: str = ""


@dataclass(frozen=True)
class RawTerm:
    name: str
    value: Optional[RawValue]  # None = голое имя (действие)
    token: Token


@dataclass(frozen=True)
class RawStatement:
    kind: str  # static | dynamic | initially | goal | never
    token: Token
    head: Tuple[RawTerm, ...] = ()
    condition: Tuple[RawTerm, ...] = ()
    after: Tuple[RawTerm, ...] = ()


class _Parser:
    """Рекурсивный спуск по списку токенов."""

    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.pos = 0
        self.fluents: List[FluentConstant] = []
        self.actions: List[str] = []
        self.statements: List[RawStatement] = []

    # ---- примитивы ----

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def error(self, message: str, tok: Optional[Token] = None) -> DomainSyntaxError:
        t = tok or self.tok
        return DomainSyntaxError(message, t.line, t.column)

    def advance(self) -> Token:
        t = self.tok
        self.pos += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.kind in ("punct", "range", "ident") and self.tok.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def name(self) -> Token:
        if self.tok.kind != "ident" or self.tok.text in KEYWORDS:
            raise self.error(f"expected a name, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    # ---- утверждения ----

    def parse(self) -> None:
        while self.tok.kind != "eof":
            self.statement()

    def statement(self) -> None:
        t = self.tok
        if self.at("fluent"):
            self.advance()
            name = self.name().text
            self.expect(":")
            self.fluents.append(FluentConstant(name, self.domain()))
        elif self.at("action"):
            self.advance()
            self.actions.append(self.name().text)
            while self.at(","):
                self.advance()
                self.actions.append(self.name().text)
        elif self.at("caused"):
            self.advance()
            head = self.head()
            cond: Tuple[RawTerm, ...] = ()
            if self.at("if"):
                self.advance()
                cond = self.conj()
            if self.at("after"):
                self.advance()
                self.statements.append(RawStatement("dynamic", t, head, cond, self.conj()))
            else:
                if len(head) > 1:
                    raise self.error("choice heads are only allowed in dynamic laws", t)
                self.statements.append(RawStatement("static", t, head, cond))
        elif self.at("initially") or self.at("goal") or self.at("never"):
            kind = self.advance().text
            self.statements.append(RawStatement(kind, t, condition=self.conj()))
        elif self.tok.kind == "ident" and self.tok.text not in KEYWORDS:
            action = self.advance()
            self.expect("causes")
            head = self.head()
            cond = ()
            after: Tuple[RawTerm, ...] = ()
            if self.at("if"):
                self.advance()
                cond = self.conj()
            if self.at("after"):
                self.advance()
                after = self.conj()
            else:
                # `a causes F if H`: H относится к текущему моменту
                cond, after = (), cond
            after = after + (RawTerm(action.text, None, action),)
            self.statements.append(RawStatement("dynamic", t, head, cond, after))
        else:
            raise self.error(f"unexpected {self.tok.text or 'end of input'!r}")
        self.expect(".")

    def domain(self) -> Tuple[Value, ...]:
        if self.at("cell"):
            self.advance()
            self.expect("(")
            xs = self.int_range()
            self.expect(",")
            ys = self.int_range()
            self.expect(")")
            return tuple((x, y) for x in xs for y in ys)
        if self.at("{"):
            self.advance()
            values = [self.literal_value()]
            while self.at(","):
                self.advance()
                values.append(self.literal_value())
            self.expect("}")
            if len(set(values)) != len(values):
                raise self.error("repeated domain value")
            return tuple(values)
        return tuple(self.int_range())

    def int_range(self) -> range:
        lo = self.const_int()
        self.expect("..")
        hi = self.const_int()
        if hi < lo:
            raise self.error(f"empty range {lo}..{hi}")
        return range(lo, hi + 1)

    def const_int(self) -> int:
        expr = self.int_expr()
        if any(isinstance(x, str) for _, x in expr):
            raise self.error("variables are not allowed here")
        return sum(sign * x for sign, x in expr)  # type: ignore[misc]

    def literal_value(self) -> Value:
        if self.tok.kind == "ident":
            return self.advance().text
        if self.at("("):
            self.advance()
            parts = [self.const_int()]
            while self.at(","):
                self.advance()
                parts.append(self.const_int())
            self.expect(")")
            return tuple(parts)
        return self.const_int()

    def int_expr(self) -> IntExpr:
        sign = 1
        if self.at("-"):
            self.advance()
            sign = -1
        items = [(sign, self.int_atom())]
        while self.at("+") or self.at("-"):
            sign = 1 if self.advance().text == "+" else -1
            items.append((sign, self.int_atom()))
        return tuple(items)

    def int_atom(self) -> Union[int, str]:
        if self.tok.kind == "num":
            return int(self.advance().text)
        if self.tok.kind == "var":
            return self.advance().text
        raise self.error(f"expected a number or variable, found {self.tok.text or 'end of input'!r}")

    def head(self) -> Tuple[RawTerm, ...]:
        if self.at("{"):
            self.advance()
            alts = [self.term()]
            while self.at(";"):
                self.advance()
                alts.append(self.term())
            self.expect("}")
            if len(alts) < 2:
                raise self.error("choice head needs at least two alternatives")
            return tuple(alts)
        return (self.term(),)

    def conj(self) -> Tuple[RawTerm, ...]:
        terms = [self.term(allow_bare=True)]
        while self.at(","):
            self.advance()
            terms.append(self.term(allow_bare=True))
        return tuple(terms)

    def term(self, allow_bare: bool = False) -> RawTerm:
        t = self.name()
        if not self.at("="):
            if not allow_bare:
                raise self.error("expected '='")
            return RawTerm(t.text, None, t)
        self.advance()
        return RawTerm(t.text, self.value(), t)

    def value(self) -> RawValue:
        if self.tok.kind == "ident":
            return RawValue("sym", symbol=self.advance().text)
        if self.at("("):
            self.advance()
            parts = [self.int_expr()]
            while self.at(","):
                self.advance()
                parts.append(self.int_expr())
            self.expect(")")
            return RawValue("tuple", tuple(parts))
        return RawValue("int", (self.int_expr(),))


# ============================
# ЗАЗЕМЛЕНИЕ
# ============================

class _Grounder:
    def __init__(self, fluents: Sequence[FluentConstant], actions: Sequence[str]):
        self.fluents = {c.name: c for c in fluents}
        self.actions = set(actions)

    def fluent(self, term: RawTerm) -> FluentConstant:
        c = self.fluents.get(term.name)
        if c is None:
            if term.name in self.actions:
                raise DomainSyntaxError(f"action {term.name!r} used as a fluent", term.token.line, term.token.column)
            raise UndeclaredConstant(f"line {term.token.line}: undeclared fluent {term.name!r}")
        return c

    def ranges(self, stmt: RawStatement) -> Dict[str, Tuple[Value, ...]]:
        """Диапазоны переменных по их голым вхождениям (пересечение при нескольких)."""
        found: Dict[str, Set[Value]] = {}
        mentioned: Set[str] = set()
        for term in stmt.head + stmt.condition + stmt.after:
            if term.value is None:
                continue
            c = self.fluent(term)
            rv = term.value
            exprs = rv.parts
            for k, expr in enumerate(exprs):
                for _, x in expr:
                    if isinstance(x, str):
                        mentioned.add(x)
                if len(expr) == 1 and expr[0][0] == 1 and isinstance(expr[0][1], str):
                    var = expr[0][1]
                    if rv.kind == "tuple":
                        rng: Set[Value] = set(c.axis(k))
                    else:
                        rng = {v for v in c.domain if isinstance(v, int)}
                    found[var] = found[var] & rng if var in found else rng
        unsafe = mentioned - set(found)
        if unsafe:
            name = sorted(unsafe)[0]
            raise DomainSyntaxError(f"variable {name} has no bounding occurrence", stmt.token.line, stmt.token.column)
        return {var: tuple(sorted(vals)) for var, vals in sorted(found.items())}  # type: ignore[type-var]

    def eval_term(self, term: RawTerm, env: Dict[str, int], strict: bool) -> Optional[Eq]:
        c = self.fluent(term)
        rv = term.value
        assert rv is not None
        if rv.kind == "sym":
            value: Value = rv.symbol
        elif rv.kind == "tuple":
            value = tuple(_eval(expr, env) for expr in rv.parts)
        else:
            value = _eval(rv.parts[0], env)
        if value not in c.domain:
            if strict:
                raise ValueOutsideDomain(f"line {term.token.line}: {term.name}={value!r} is outside Dom({c.name})")
            return None
        return Eq(c.name, value)

    def split(self, terms: Tuple[RawTerm, ...], allow_actions: bool) -> Tuple[List[RawTerm], List[str]]:
        eqs: List[RawTerm] = []
        acts: List[str] = []
        for term in terms:
            if term.value is None:
                if term.name not in self.actions:
                    if term.name in self.fluents:
                        raise DomainSyntaxError(f"fluent {term.name!r} needs a value", term.token.line, term.token.column)
                    raise UndeclaredConstant(f"line {term.token.line}: undeclared action {term.name!r}")
                if not allow_actions:
                    raise DomainSyntaxError(
                        f"action {term.name!r} is only allowed after 'after'", term.token.line, term.token.column
                    )
                acts.append(term.name)
            else:
                eqs.append(term)
        return eqs, acts

    def ground(self, stmt: RawStatement):
        ranges = self.ranges(stmt)
        names = list(ranges)
        strict = not names
        head, _ = self.split(stmt.head, allow_actions=False)
        cond, _ = self.split(stmt.condition, allow_actions=False)
        after, acts = self.split(stmt.after, allow_actions=True)

        for combo in product(*(ranges[n] for n in names)):
            env = dict(zip(names, combo))
            h = [self.eval_term(t, env, strict) for t in head]
            g = [self.eval_term(t, env, strict) for t in cond]
            p = [self.eval_term(t, env, strict) for t in after]
            if any(e is None for e in h + g + p):
                continue
            yield tuple(h), tuple(g), tuple(p), tuple(acts)  # type: ignore[arg-type]


def _eval(expr: IntExpr, env: Dict[str, int]) -> int:
    return sum(sign * (env[x] if isinstance(x, str) else x) for sign, x in expr)


def parse_description(text: str) -> ActionDescription:
    parser = _Parser(tokenize(text))
    parser.parse()
    if not parser.fluents:
        t = parser.tokens[-1]
        raise DomainSyntaxError("description declares no fluents", t.line, t.column)

    grounder = _Grounder(parser.fluents, parser.actions)
    static: List[StaticLaw] = []
    dynamic: List[FluentDynamicLaw] = []
    initial: List[Eq] = []
    goal: List[Eq] = []
    never: List[Tuple[Eq, ...]] = []

    for stmt in parser.statements:
        for head, cond, pre, acts in grounder.ground(stmt):
            if stmt.kind == "static":
                static.append(StaticLaw(head[0], cond))
            elif stmt.kind == "dynamic":
                dynamic.append(FluentDynamicLaw(head, cond, pre, acts))
            elif stmt.kind == "initially":
                initial.extend(cond)
            elif stmt.kind == "goal":
                goal.extend(cond)
            else:
                never.append(cond)

    return ActionDescription(
        fluents=tuple(parser.fluents),
        actions=tuple(ActionConstant(a) for a in parser.actions),
        static_laws=tuple(static),
        dynamic_laws=tuple(dynamic),
        initial=tuple(dict.fromkeys(initial)),
        goal=tuple(dict.fromkeys(goal)),
        never=tuple(never),
    )
