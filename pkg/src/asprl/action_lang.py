"""
asprl.action_lang

Описания действий (подмножество BC+) и их перевод в программу PF_m(D).

Атомы с временем:
- `i:c=v` — флюент c имеет значение v в момент i (0..m);
- `i:a`   — действие a выполняется в момент i (0..m-1).

Грамматика текстового формата и заземление схем — в action_parser.py.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from itertools import product
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

from .asp_core import Atom, Interpretation, Program, ProgramBuilder, solve
from .core_types import ActionName, State, Trajectory, Transition, Value
from .errors import HorizonInvalid, MalformedModel, UndeclaredConstant, ValueOutsideDomain

logger = logging.getLogger(__name__)


def render_value(v: Value) -> str:
    if isinstance(v, tuple):
        return "(" + ",".join(str(x) for x in v) + ")"
    return str(v)


def timed_fluent_name(i: int, fluent: str, value: Value) -> str:
    return f"{i}:{fluent}={render_value(value)}"


def timed_action_name(i: int, action: str) -> str:
    return f"{i}:{action}"


# ============================
# ТИПЫ
# ============================

@dataclass(frozen=True)
class FluentConstant:
    """
    Флюент с конечной областью значений Dom(c).

    Контракт: domain непустой, значения различны.
    """
    name: str
    domain: Tuple[Value, ...]

    def __post_init__(self) -> None:
        if not self.domain:
            raise ValueError(f"fluent {self.name!r} has an empty domain")
        if len(set(self.domain)) != len(self.domain):
            raise ValueError(f"fluent {self.name!r} has repeated domain values")

    def axis(self, k: int) -> Tuple[int, ...]:
        """Значения k-й координаты (для cell-областей)."""
        return tuple(sorted({v[k] for v in self.domain if isinstance(v, tuple)}))


@dataclass(frozen=True)
class ActionConstant:
    name: str


@dataclass(frozen=True)
class Eq:
    """Равенство `c = v`."""
    fluent: str
    value: Value

    def __str__(self) -> str:
        return f"{self.fluent}={render_value(self.value)}"


Conjunction = Tuple[Eq, ...]


@dataclass(frozen=True)
class StaticLaw:
    """`caused F if G` — F и G над одним и тем же моментом времени."""
    head: Eq
    condition: Conjunction = ()


@dataclass(frozen=True)
class FluentDynamicLaw:
    """
    `caused F if G after H`.

    - head: одно равенство или выбор из >= 2 альтернатив одного флюента;
    - condition (G): над следующим моментом;
    - precondition (H): флюенты текущего момента;
    - actions: действия текущего момента (часть H).
    """
    head: Tuple[Eq, ...]
    condition: Conjunction = ()
    precondition: Conjunction = ()
    actions: Tuple[ActionName, ...] = ()

    def __post_init__(self) -> None:
        if not self.head:
            raise ValueError("dynamic law without head")
        if len({h.fluent for h in self.head}) != 1:
            raise ValueError("choice head alternatives must share one fluent")
        if len(set(self.head)) != len(self.head):
            raise ValueError("choice head lists an alternative twice")

    @property
    def fluent(self) -> str:
        return self.head[0].fluent

    @property
    def is_choice(self) -> bool:
        return len(self.head) > 1


@dataclass(frozen=True)
class ActionDescription:
    """
    Описание действий D.

    Контракт:
    - хотя бы один флюент; имена констант уникальны;
    - все ссылки на флюенты/действия объявлены, значения из областей;
    - initial/goal — конъюнкции равенств (S_0 и S_g).
    """
    fluents: Tuple[FluentConstant, ...]
    actions: Tuple[ActionConstant, ...]
    static_laws: Tuple[StaticLaw, ...] = ()
    dynamic_laws: Tuple[FluentDynamicLaw, ...] = ()
    initial: Conjunction = ()
    goal: Conjunction = ()
    never: Tuple[Conjunction, ...] = ()

    def __post_init__(self) -> None:
        if not self.fluents:
            raise ValueError("action description declares no fluents")
        names = [c.name for c in self.fluents] + [a.name for a in self.actions]
        if len(set(names)) != len(names):
            raise ValueError("constant names must be unique")
        index = {c.name: c for c in self.fluents}
        object.__setattr__(self, "_fluents", index)
        object.__setattr__(self, "_actions", frozenset(a.name for a in self.actions))

        for law in self.static_laws:
            self._check((law.head,) + law.condition)
        for law in self.dynamic_laws:
            self._check(law.head + law.condition + law.precondition)
            for a in law.actions:
                if a not in self._actions:  # type: ignore[attr-defined]
                    raise UndeclaredConstant(f"undeclared action {a!r}")
        self._check(self.initial)
        self._check(self.goal)
        for conj in self.never:
            self._check(conj)

    def _check(self, eqs: Iterable[Eq]) -> None:
        for eq in eqs:
            c = self._fluents.get(eq.fluent)  # type: ignore[attr-defined]
            if c is None:
                raise UndeclaredConstant(f"undeclared fluent {eq.fluent!r}")
            if eq.value not in c.domain:
                raise ValueOutsideDomain(f"{eq} is outside Dom({c.name})")

    # ---- запросы ----

    def fluent(self, name: str) -> FluentConstant:
        try:
            return self._fluents[name]  # type: ignore[attr-defined]
        except KeyError:
            raise UndeclaredConstant(f"undeclared fluent {name!r}") from None

    @property
    def action_names(self) -> Tuple[ActionName, ...]:
        return tuple(a.name for a in self.actions)

    def statically_determined(self) -> FrozenSet[str]:
        """Флюенты, которые задаются только статическими законами."""
        static_heads = {law.head.fluent for law in self.static_laws}
        dynamic_heads = {law.fluent for law in self.dynamic_laws}
        return frozenset(static_heads - dynamic_heads)

    def regular(self) -> Tuple[FluentConstant, ...]:
        sd = self.statically_determined()
        return tuple(c for c in self.fluents if c.name not in sd)

    def state_eqs(self, state: State) -> Conjunction:
        if len(state) != len(self.fluents):
            raise ValueError(f"state has {len(state)} values, description has {len(self.fluents)} fluents")
        return tuple(Eq(c.name, v) for c, v in zip(self.fluents, state))

    # ---- производные описания ----

    def with_initial(self, initial: Conjunction) -> "ActionDescription":
        return replace(self, initial=tuple(initial))

    def with_goal(self, goal: Conjunction) -> "ActionDescription":
        return replace(self, goal=tuple(goal))

    def with_never(self, extra: Iterable[Conjunction]) -> "ActionDescription":
        return replace(self, never=self.never + tuple(tuple(c) for c in extra))


def parse(text: str) -> ActionDescription:
    """Разбор текстового описания домена (см. action_parser)."""
    from .action_parser import parse_description

    return parse_description(text)


def all_states(d: ActionDescription) -> List[State]:
    """Исходное S: декартово произведение областей флюентов."""
    return [tuple(s) for s in product(*(c.domain for c in d.fluents))]


def format_description(d: ActionDescription) -> str:
    """Описание обратно в текстовый формат (только ground-утверждения)."""
    lines: List[str] = []
    for c in d.fluents:
        lines.append(f"fluent {c.name} : {{{', '.join(render_value(v) for v in c.domain)}}}.")
    for a in d.actions:
        lines.append(f"action {a.name}.")
    for law in d.static_laws:
        cond = f" if {_conj(law.condition)}" if law.condition else ""
        lines.append(f"caused {law.head}{cond}.")
    for law in d.dynamic_laws:
        head = str(law.head[0]) if not law.is_choice else "{" + "; ".join(str(h) for h in law.head) + "}"
        cond = f" if {_conj(law.condition)}" if law.condition else ""
        after = ", ".join([str(e) for e in law.precondition] + list(law.actions))
        lines.append(f"caused {head}{cond} after {after}.")
    if d.initial:
        lines.append(f"initially {_conj(d.initial)}.")
    if d.goal:
        lines.append(f"goal {_conj(d.goal)}.")
    for conj in d.never:
        lines.append(f"never {_conj(conj)}.")
    return "\n".join(lines) + "\n"


def _conj(eqs: Sequence[Eq]) -> str:
    return ", ".join(str(e) for e in eqs)


# ============================
# АНАЛИЗ РЕЛЕВАНТНОСТИ
# ============================

Possible = List[Dict[str, Set[Value]]]


def relevant_values(d: ActionDescription, m: int) -> Possible:
    """
    Надмножество значений, которые флюент может иметь в момент i в каком-либо
    stable model PF_m(D).

    Вперёд: от начального условия через динамические законы (+ статическое замыкание).
    Назад: только для "самозависимых" флюентов (каждый динамический закон с c в голове
    упоминает c в предусловии, статических законов на c нет) — от цели к началу.
    `never` из одного равенства удаляет значение целиком.
    """
    banned: Dict[str, Set[Value]] = {c.name: set() for c in d.fluents}
    for conj in d.never:
        if len(conj) == 1:
            banned[conj[0].fluent].add(conj[0].value)
    dom = {c.name: set(c.domain) - banned[c.name] for c in d.fluents}
    sd = d.statically_determined()
    init = {e.fluent: e.value for e in d.initial}

    def closure(step: Dict[str, Set[Value]]) -> Dict[str, Set[Value]]:
        changed = True
        while changed:
            changed = False
            for law in d.static_laws:
                h = law.head
                if h.value in dom[h.fluent] and h.value not in step[h.fluent]:
                    if all(g.value in step[g.fluent] for g in law.condition):
                        step[h.fluent].add(h.value)
                        changed = True
        return step

    first: Dict[str, Set[Value]] = {}
    for c in d.fluents:
        if c.name in sd:
            first[c.name] = set()
        elif c.name in init:
            first[c.name] = {init[c.name]} & dom[c.name]
        else:
            first[c.name] = set(dom[c.name])
    forward = [closure(first)]
    for _ in range(m):
        prev = forward[-1]
        nxt: Dict[str, Set[Value]] = {c.name: set() for c in d.fluents}
        for law in d.dynamic_laws:
            if all(h.value in prev[h.fluent] for h in law.precondition):
                for alt in law.head:
                    if alt.value in dom[alt.fluent]:
                        nxt[alt.fluent].add(alt.value)
        forward.append(closure(nxt))

    static_heads = {law.head.fluent for law in d.static_laws}
    self_dependent = set()
    for c in d.regular():
        laws = [law for law in d.dynamic_laws if law.fluent == c.name]
        if laws and c.name not in static_heads and all(
            any(p.fluent == c.name for p in law.precondition) for law in laws
        ):
            self_dependent.add(c.name)

    goal = {e.fluent: e.value for e in d.goal}
    backward: List[Dict[str, Set[Value]]] = [dict() for _ in range(m + 1)]
    for name in self_dependent:
        backward[m][name] = ({goal[name]} if name in goal else set(dom[name])) & dom[name]
        for i in range(m - 1, -1, -1):
            reach: Set[Value] = set()
            for law in d.dynamic_laws:
                if law.fluent != name or not any(h.value in backward[i + 1][name] for h in law.head):
                    continue
                reach.update(p.value for p in law.precondition if p.fluent == name)
            backward[i][name] = reach & dom[name]

    possible: Possible = []
    for i in range(m + 1):
        step = {}
        for c in d.fluents:
            vals = forward[i][c.name]
            if c.name in self_dependent:
                vals = vals & backward[i][c.name]
            step[c.name] = vals
        possible.append(step)
    return possible


# ============================
# ПЕРЕВОД PF_m(D)
# ============================

def translate(d: ActionDescription, m: int, simplify: bool = False) -> Program:
    """
    PF_m(D):
    1) `i:F <- i:G` для статических законов, i = 0..m;
    2) `i+1:F <- i+1:G, i:H` для динамических законов, i = 0..m-1 (выбор для
       недетерминированных голов);
    3) `{0:c=v}` для регулярных флюентов;
    4) ровно одно значение у каждого флюента в каждый момент, ровно одно действие
       в каждый момент 0..m-1;
    плюс ограничения на начальное условие (момент 0), цель (момент m) и `never`.

    simplify=True выбрасывает атомы, ложные во всех stable models (relevant_values);
    модели, спроецированные на атомы `i:c=v` / `i:a`, те же.
    """
    if m < 1:
        raise HorizonInvalid(f"horizon must be >= 1, got {m}")

    possible = relevant_values(d, m) if simplify else None
    b = ProgramBuilder()
    fluent_atoms: List[Dict[Tuple[str, Value], Atom]] = []
    action_atoms: List[Dict[str, Atom]] = []

    # атомы интернируем по времени: решения на ранних шагах идут первыми
    for i in range(m + 1):
        step: Dict[Tuple[str, Value], Atom] = {}
        for c in d.fluents:
            for v in c.domain:
                if possible is None or v in possible[i][c.name]:
                    step[(c.name, v)] = b.atom(timed_fluent_name(i, c.name, v))
        fluent_atoms.append(step)
        if i < m:
            action_atoms.append({a.name: b.atom(timed_action_name(i, a.name)) for a in d.actions})

    def fa(i: int, eq: Eq) -> Optional[Atom]:
        return fluent_atoms[i].get((eq.fluent, eq.value))

    def body_atoms(*parts: Iterable[Optional[Atom]]) -> Optional[List[Atom]]:
        out: List[Atom] = []
        for part in parts:
            for atom in part:
                if atom is None:
                    return None  # тело ложно во всех моделях
                out.append(atom)
        return out

    for i in range(m + 1):
        for law in d.static_laws:
            body = body_atoms(fa(i, g) for g in law.condition)
            if body is None:
                continue
            head = fa(i, law.head)
            if head is None:
                b.constraint(body)
            else:
                b.rule(head, body)

    for i in range(m):
        for law in d.dynamic_laws:
            body = body_atoms(
                (fa(i + 1, g) for g in law.condition),
                (fa(i, h) for h in law.precondition),
                (action_atoms[i][a] for a in law.actions),
            )
            if body is None:
                continue
            heads = [a for a in (fa(i + 1, h) for h in law.head) if a is not None]
            if not heads:
                b.constraint(body)
            elif len(heads) == 1:
                b.rule(heads[0], body)
            else:
                b.choice(heads, 1, 1, pos=body)

    for c in d.regular():
        for v in c.domain:
            atom = fa(0, Eq(c.name, v))
            if atom is not None:
                b.choice([atom], 0, 1)

    for i in range(m + 1):
        for c in d.fluents:
            b.exactly_one([fluent_atoms[i][(c.name, v)] for v in c.domain if (c.name, v) in fluent_atoms[i]])
    for i in range(m):
        acts = [action_atoms[i][a.name] for a in d.actions]
        for atom in acts:
            b.choice([atom], 0, 1)
        b.exactly_one(acts)

    for i, conj in ((0, d.initial), (m, d.goal)):
        for eq in conj:
            atom = fa(i, eq)
            if atom is None:
                b.constraint()
            else:
                b.constraint(neg=[atom])
    for conj in d.never:
        for i in range(m + 1):
            body = body_atoms(fa(i, e) for e in conj)
            if body is not None:
                b.constraint(body)

    program = b.build()
    logger.debug("PF_%d: %d atoms, %d rules (simplify=%s)", m, len(program.atoms), len(program.rules), simplify)
    return program


# ============================
# РАЗБОР МОДЕЛЕЙ
# ============================

class TrajectoryDecoder:
    """
    Разбор stable models одной программы PF_m(D) в траектории.
    Таблица id -> (момент, флюент, значение) строится один раз на программу.
    """

    def __init__(self, program: Program, d: ActionDescription, m: int):
        self.d = d
        self.m = m
        table = program.atoms
        self._fluent: Dict[int, Tuple[int, int, Value]] = {}
        self._action: Dict[int, Tuple[int, ActionName]] = {}
        for i in range(m + 1):
            for k, c in enumerate(d.fluents):
                for v in c.domain:
                    atom = table.get(timed_fluent_name(i, c.name, v))
                    if atom is not None:
                        self._fluent[atom.id] = (i, k, v)
            if i < m:
                for a in d.actions:
                    atom = table.get(timed_action_name(i, a.name))
                    if atom is not None:
                        self._action[atom.id] = (i, a.name)

    def decode(self, model: Interpretation) -> Trajectory:
        nf = len(self.d.fluents)
        values: List[List[Optional[Value]]] = [[None] * nf for _ in range(self.m + 1)]
        seen = [[False] * nf for _ in range(self.m + 1)]
        actions: List[Optional[ActionName]] = [None] * self.m
        for atom_id in model.atoms:
            hit = self._fluent.get(atom_id)
            if hit is not None:
                i, k, v = hit
                if seen[i][k]:
                    raise MalformedModel(f"fluent {self.d.fluents[k].name!r} has two values at step {i}")
                seen[i][k] = True
                values[i][k] = v
                continue
            act = self._action.get(atom_id)
            if act is not None:
                i, name = act
                if actions[i] is not None:
                    raise MalformedModel(f"two actions at step {i}: {actions[i]!r}, {name!r}")
                actions[i] = name

        for i in range(self.m + 1):
            for k in range(nf):
                if not seen[i][k]:
                    raise MalformedModel(f"fluent {self.d.fluents[k].name!r} has no value at step {i}")
        for i, a in enumerate(actions):
            if a is None:
                raise MalformedModel(f"no action at step {i}")

        states: List[State] = [tuple(row) for row in values]  # type: ignore[misc]
        return Trajectory(tuple(
            Transition(states[i], actions[i], states[i + 1])  # type: ignore[arg-type]
            for i in range(self.m)
        ))


def extract_trajectory(model: Interpretation, d: ActionDescription, m: int) -> Trajectory:
    """Траектория из одного stable model PF_m(D)."""
    if model.table is None:
        raise MalformedModel("model has no atom table attached")
    program = Program(model.table, ())
    return TrajectoryDecoder(program, d, m).decode(model)


def successors(
    d: ActionDescription,
    state: State,
    action: ActionName,
    simplify: bool = True,
) -> FrozenSet[State]:
    """
    Одношаговая симуляция: все s', для которых <state, action, s'> — путь длины 1
    в системе переходов D. Тот же перевод и тот же решатель, что и для траекторий.
    """
    if action not in d.action_names:
        raise UndeclaredConstant(f"undeclared action {action!r}")
    one_step = replace(d, initial=d.state_eqs(state), goal=())
    program = translate(one_step, 1, simplify=simplify)
    decoder = TrajectoryDecoder(program, one_step, 1)
    out: Set[State] = set()
    for model in solve(program):
        t = decoder.decode(model).triples[0]
        if t.action == action:
            out.add(t.next_state)
    return frozenset(out)
