"""
asprl.asp_core

Ground (пропозициональные) логические программы и их stable models (answer sets).

Ключевой дизайн:
- программа — неизменяемое значение (Program), строится через ProgramBuilder;
- choice-правила понижаются до нормальных правил + ограничений (normalize_choices),
  поэтому определение reduct остаётся единственным источником семантики;
- поиск моделей живёт в asp_search.py, здесь только типы и "эталонные" операции
  (reduct, least_model, is_stable), на которых строятся тесты-оракулы.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

from .errors import ChoiceBoundsInvalid, NotPositive, ProgramNotNormalized

logger = logging.getLogger(__name__)

# "at most one" по большему числу атомов кодируем лесенкой, а не попарно
LADDER_THRESHOLD = 6


# ============================
# ТИПЫ
# ============================

@dataclass(frozen=True)
class Atom:
    """
    Атом = интернированный символ.

    Равенство и hash только по id; name — отображаемая форма (`3:at=(0,1)`).
    """
    id: int
    name: str = field(compare=False)

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Literal:
    """Атом или `not` атом (default negation). Двойного отрицания нет."""
    atom: Atom
    negated: bool = False

    def __str__(self) -> str:
        return f"not {self.atom.name}" if self.negated else self.atom.name


@dataclass(frozen=True)
class ChoiceHead:
    """
    Голова choice-правила `lower {c1; ...; ck} upper`.

    Контракт: 0 <= lower <= upper <= k, candidates непустой.
    Проверка границ — в normalize_choices (ошибка ChoiceBoundsInvalid).
    """
    lower: int
    upper: int
    candidates: Tuple[Atom, ...]

    def __str__(self) -> str:
        inner = "; ".join(a.name for a in self.candidates)
        return f"{self.lower} {{{inner}}} {self.upper}"


Head = Union[Atom, ChoiceHead, None]


@dataclass(frozen=True)
class Rule:
    """
    Правило `head :- body`.

    head:
    - Atom        — нормальное правило (факт, если body пустое);
    - ChoiceHead  — choice-правило;
    - None        — ограничение (пустая голова, ⊥).
    """
    head: Head
    body: Tuple[Literal, ...] = ()

    @property
    def is_constraint(self) -> bool:
        return self.head is None

    @property
    def is_choice(self) -> bool:
        return isinstance(self.head, ChoiceHead)

    @property
    def is_fact(self) -> bool:
        return isinstance(self.head, Atom) and not self.body

    @property
    def positive(self) -> Tuple[int, ...]:
        return tuple(lit.atom.id for lit in self.body if not lit.negated)

    @property
    def negative(self) -> Tuple[int, ...]:
        return tuple(lit.atom.id for lit in self.body if lit.negated)

    def __str__(self) -> str:
        head = "" if self.head is None else str(self.head)
        if not self.body:
            return f"{head}." if head else ":- ."
        body = ", ".join(str(lit) for lit in self.body)
        return f"{head} :- {body}." if head else f":- {body}."


@dataclass(frozen=True)
class AtomTable:
    """
    Таблица атомов: name <-> id (биекция).
    """
    names: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        index = {name: i for i, name in enumerate(self.names)}
        if len(index) != len(self.names):
            raise ValueError("duplicate atom names in atom table")
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name: str) -> bool:
        return name in self._index  # type: ignore[attr-defined]

    def atom(self, atom_id: int) -> Atom:
        return Atom(atom_id, self.names[atom_id])

    def id_of(self, name: str) -> int:
        return self._index[name]  # type: ignore[attr-defined]

    def get(self, name: str) -> Optional[Atom]:
        i = self._index.get(name)  # type: ignore[attr-defined]
        return None if i is None else Atom(i, name)


@dataclass(frozen=True)
class Program:
    """
    Ground-программа: таблица атомов + правила.

    auxiliary — служебные атомы (дополнения из понижения choice, лесенки);
    solve проецирует модели без них.
    """
    atoms: AtomTable
    rules: Tuple[Rule, ...]
    auxiliary: FrozenSet[int] = frozenset()

    def __post_init__(self) -> None:
        n = len(self.atoms)
        for rule in self.rules:
            for atom in _rule_atoms(rule):
                if not (0 <= atom.id < n) or self.atoms.names[atom.id] != atom.name:
                    raise ValueError(f"rule references unknown atom {atom.name!r}: {rule}")

    @property
    def has_choices(self) -> bool:
        return any(r.is_choice for r in self.rules)

    def atom(self, name: str) -> Atom:
        return Atom(self.atoms.id_of(name), name)

    def extended(self, rules: Iterable[Rule]) -> "Program":
        """Та же таблица атомов, больше правил (атомы уже должны существовать)."""
        return Program(self.atoms, self.rules + tuple(rules), self.auxiliary)

    def __str__(self) -> str:
        return "\n".join(str(r) for r in self.rules)


@dataclass(frozen=True)
class Interpretation:
    """
    Множество атомов (по id), считающихся истинными.

    table — ссылка на таблицу атомов программы (для имён); в сравнении не участвует.
    """
    atoms: FrozenSet[int]
    table: Optional[AtomTable] = field(default=None, compare=False, repr=False)

    def __contains__(self, item: Union[int, Atom]) -> bool:
        key = item.id if isinstance(item, Atom) else item
        return key in self.atoms

    def __len__(self) -> int:
        return len(self.atoms)

    def __iter__(self):
        return iter(sorted(self.atoms))

    def sort_key(self) -> Tuple[int, ...]:
        return tuple(sorted(self.atoms))

    def names(self) -> FrozenSet[str]:
        if self.table is None:
            raise ValueError("interpretation has no atom table attached")
        return frozenset(self.table.names[i] for i in self.atoms)

    @classmethod
    def from_names(cls, table: AtomTable, names: Iterable[str]) -> "Interpretation":
        return cls(frozenset(table.id_of(n) for n in names), table)


@dataclass(frozen=True)
class FixpointResult:
    """
    Результат least_model: минимальная модель + индексы нарушенных ограничений.
    """
    model: Interpretation
    violations: Tuple[int, ...] = ()

    @property
    def consistent(self) -> bool:
        return not self.violations


def _rule_atoms(rule: Rule) -> Iterable[Atom]:
    if isinstance(rule.head, Atom):
        yield rule.head
    elif isinstance(rule.head, ChoiceHead):
        yield from rule.head.candidates
    for lit in rule.body:
        yield lit.atom


# ============================
# BUILDER
# ============================

class ProgramBuilder:
    """
    Изменяемый конструктор Program.

    Атомы интернируются по имени: atom("a") дважды вернёт один и тот же Atom.
    """

    def __init__(self, base: Optional[AtomTable] = None):
        self._names: List[str] = list(base.names) if base is not None else []
        self._index: Dict[str, int] = {n: i for i, n in enumerate(self._names)}
        self._rules: List[Rule] = []
        self._auxiliary: set[int] = set()

    def atom(self, name: str) -> Atom:
        i = self._index.get(name)
        if i is None:
            i = len(self._names)
            self._names.append(name)
            self._index[name] = i
        return Atom(i, name)

    def fresh(self, stem: str) -> Atom:
        """Новый служебный атом с уникальным именем."""
        name = stem
        n = 1
        while name in self._index:
            n += 1
            name = f"{stem}#{n}"
        atom = self.atom(name)
        self._auxiliary.add(atom.id)
        return atom

    def mark_auxiliary(self, ids: Iterable[int]) -> None:
        self._auxiliary.update(ids)

    def add(self, rule: Rule) -> None:
        self._rules.append(rule)

    def fact(self, head: Atom) -> None:
        self._rules.append(Rule(head))

    def rule(self, head: Atom, pos: Iterable[Atom] = (), neg: Iterable[Atom] = ()) -> None:
        self._rules.append(Rule(head, _body(pos, neg)))

    def constraint(self, pos: Iterable[Atom] = (), neg: Iterable[Atom] = ()) -> None:
        self._rules.append(Rule(None, _body(pos, neg)))

    def choice(
        self,
        candidates: Sequence[Atom],
        lower: int = 0,
        upper: Optional[int] = None,
        pos: Iterable[Atom] = (),
        neg: Iterable[Atom] = (),
    ) -> None:
        cands = tuple(candidates)
        hi = len(cands) if upper is None else upper
        self._rules.append(Rule(ChoiceHead(lower, hi, cands), _body(pos, neg)))

    def exactly_one(self, atoms: Sequence[Atom], pos: Iterable[Atom] = (), neg: Iterable[Atom] = ()) -> None:
        """Ограничения `1 <= {atoms} <= 1` (при истинном body)."""
        body = _body(pos, neg)
        if not atoms:
            self._rules.append(Rule(None, body))
            return
        self._rules.append(Rule(None, body + tuple(Literal(a, True) for a in atoms)))
        self.at_most_one(atoms, body)

    def at_most_one(self, atoms: Sequence[Atom], body: Tuple[Literal, ...] = ()) -> None:
        if len(atoms) <= LADDER_THRESHOLD:
            for a, b in combinations(atoms, 2):
                self._rules.append(Rule(None, body + (Literal(a), Literal(b))))
            return
        # лесенка: s_j <=> x_1 v ... v x_j ; запрещаем x_j при s_{j-1}
        prev: Optional[Atom] = None
        for j, x in enumerate(atoms):
            if prev is not None:
                self._rules.append(Rule(None, body + (Literal(prev), Literal(x))))
            if j == len(atoms) - 1:
                break
            s = self.fresh(f"_amo({x.name})")
            self._rules.append(Rule(s, (Literal(x),)))
            if prev is not None:
                self._rules.append(Rule(s, (Literal(prev),)))
            prev = s

    def build(self) -> Program:
        rules = list(self._rules)
        # strong negation: `-x` это обычный атом + ограничение :- x, -x.
        for name, i in list(self._index.items()):
            if name.startswith("-") and name[1:] in self._index:
                pos = Atom(self._index[name[1:]], name[1:])
                rules.append(Rule(None, (Literal(pos), Literal(Atom(i, name)))))
        return Program(AtomTable(tuple(self._names)), tuple(rules), frozenset(self._auxiliary))


def _body(pos: Iterable[Atom], neg: Iterable[Atom]) -> Tuple[Literal, ...]:
    return tuple(Literal(a) for a in pos) + tuple(Literal(a, True) for a in neg)


# ============================
# ОПЕРАЦИИ
# ============================

def normalize_choices(program: Program) -> Program:
    """
    Понижает choice-правила до нормальных правил и ограничений.

    `L {c1..ck} U :- body` превращается в:
    - `ci :- body, not ci'` и `ci' :- body, not ci` (ci' — свежий атом-дополнение);
    - ограничения мощности, развёрнутые комбинаторно:
      count < L запрещаем подмножествами размера k-L+1 из `not ci`,
      count > U — подмножествами размера U+1 из `ci`.

    Stable models результата, спроецированные на исходные атомы, совпадают
    со stable models входа. Программа без choice возвращается как есть.
    """
    if not program.has_choices:
        return program

    builder = ProgramBuilder(program.atoms)
    builder.mark_auxiliary(program.auxiliary)

    for rule in program.rules:
        if not isinstance(rule.head, ChoiceHead):
            builder.add(rule)
            continue

        head = rule.head
        cands = tuple(dict.fromkeys(head.candidates))  # без повторов, порядок сохраняем
        k = len(cands)
        if k == 0:
            raise ChoiceBoundsInvalid("choice rule without candidates")
        if head.lower < 0 or head.lower > head.upper or head.upper > k:
            raise ChoiceBoundsInvalid(
                f"choice bounds must satisfy 0 <= lower <= upper <= {k}, got {head.lower}..{head.upper}"
            )

        for c in cands:
            comp = builder.fresh(f"~{c.name}")
            builder.add(Rule(c, rule.body + (Literal(comp, True),)))
            builder.add(Rule(comp, rule.body + (Literal(c, True),)))

        for r in cardinality_constraints(cands, head.lower, head.upper, rule.body):
            builder.add(r)

    return builder.build()


def cardinality_constraints(
    atoms: Sequence[Atom],
    lower: int,
    upper: int,
    body: Tuple[Literal, ...] = (),
) -> List[Rule]:
    """Комбинаторное разворачивание `lower <= count(atoms) <= upper` в ограничения."""
    k = len(atoms)
    out: List[Rule] = []
    if lower > 0:
        for subset in combinations(atoms, k - lower + 1):
            out.append(Rule(None, body + tuple(Literal(a, True) for a in subset)))
    if upper < k:
        for subset in combinations(atoms, upper + 1):
            out.append(Rule(None, body + tuple(Literal(a) for a in subset)))
    return out


def reduct(program: Program, m: Union[Interpretation, Iterable[int]]) -> Program:
    """
    Reduct Гельфонда–Лифшица Π_M:
    - удаляем правила, где есть `not B` при B ∈ M;
    - из остальных удаляем все `not`-литералы.
    """
    if program.has_choices:
        raise ProgramNotNormalized("reduct expects a program without choice rules")
    true = _as_set(m)
    kept: List[Rule] = []
    for rule in program.rules:
        if any(lit.negated and lit.atom.id in true for lit in rule.body):
            continue
        kept.append(Rule(rule.head, tuple(lit for lit in rule.body if not lit.negated)))
    return Program(program.atoms, tuple(kept), program.auxiliary)


def least_model(positive_program: Program) -> FixpointResult:
    """
    Минимальная модель Эрбрана negation-free программы.

    Наименьшая неподвижная точка оператора непосредственного следования,
    считаем линейно (счётчики невыполненных тел, очередь выведенных атомов).
    Ограничения не участвуют в выводе — только проверяются на результате.
    """
    if positive_program.has_choices:
        raise ProgramNotNormalized("least_model expects a program without choice rules")

    rules = positive_program.rules
    missing: List[int] = []
    watchers: Dict[int, List[int]] = {}
    queue: List[int] = []
    model: set[int] = set()

    for idx, rule in enumerate(rules):
        if any(lit.negated for lit in rule.body):
            raise NotPositive(f"default negation left in rule: {rule}")
        pos = set(rule.positive)
        missing.append(len(pos))
        for a in pos:
            watchers.setdefault(a, []).append(idx)
        if not pos and isinstance(rule.head, Atom) and rule.head.id not in model:
            model.add(rule.head.id)
            queue.append(rule.head.id)

    while queue:
        a = queue.pop()
        for idx in watchers.get(a, ()):
            missing[idx] -= 1
            if missing[idx] == 0:
                head = rules[idx].head
                if isinstance(head, Atom) and head.id not in model:
                    model.add(head.id)
                    queue.append(head.id)

    violations = tuple(
        idx for idx, rule in enumerate(rules) if rule.is_constraint and missing[idx] == 0
    )
    return FixpointResult(Interpretation(frozenset(model), positive_program.atoms), violations)


def is_stable(program: Program, m: Union[Interpretation, Iterable[int]]) -> bool:
    """
    M — stable model, если least_model(reduct(Π, M)) == M и ни одно ограничение не нарушено.

    Для программ с choice-правилами используем reduct choice-правил напрямую:
    `L {C} U :- B` даёт `c :- B+` для каждого c ∈ C ∩ M (если `not`-часть B не
    убита M), а границы мощности проверяются на самом M.
    """
    true = _as_set(m)
    if any(not (0 <= a < len(program.atoms)) for a in true):
        return False

    if program.has_choices:
        normal: List[Rule] = []
        for rule in program.rules:
            if not isinstance(rule.head, ChoiceHead):
                normal.append(rule)
                continue
            if any(lit.negated and lit.atom.id in true for lit in rule.body):
                continue
            if _body_true(rule.body, true):
                chosen = sum(1 for c in set(rule.head.candidates) if c.id in true)
                if not (rule.head.lower <= chosen <= rule.head.upper):
                    return False
            pos_body = tuple(lit for lit in rule.body if not lit.negated)
            for c in rule.head.candidates:
                if c.id in true:
                    normal.append(Rule(c, pos_body))
        program = Program(program.atoms, tuple(normal), program.auxiliary)

    result = least_model(reduct(program, true))
    return result.consistent and result.model.atoms == true


def is_tight(program: Program) -> bool:
    """
    Tight = граф положительных зависимостей (head -> атомы положительного тела) ацикличен.
    Для tight-программ supported models == stable models.
    """
    program = normalize_choices(program)
    graph: Dict[int, set[int]] = {}
    for rule in program.rules:
        if isinstance(rule.head, Atom):
            graph.setdefault(rule.head.id, set()).update(rule.positive)

    state: Dict[int, int] = {}  # 1 = на стеке, 2 = готово
    for root in graph:
        if state.get(root):
            continue
        stack = [(root, iter(graph.get(root, ())))]
        state[root] = 1
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                state[node] = 2
                stack.pop()
                continue
            mark = state.get(nxt)
            if mark == 1:
                return False
            if mark is None:
                state[nxt] = 1
                stack.append((nxt, iter(graph.get(nxt, ()))))
    return True


def solve(program: Program, max_models: Optional[int] = None) -> List[Interpretation]:
    """
    Все stable models (не больше max_models), в детерминированном порядке —
    лексикографически по отсортированным id атомов.

    С лимитом возвращаются первые max_models моделей именно этого порядка
    (поиск порождает их по возрастанию, см. StableModelSearch.models).
    Модели проецируются на исходные (не служебные) атомы программы.
    Пустой список = answer sets нет.
    """
    from .asp_search import StableModelSearch

    if max_models is not None and max_models < 1:
        raise ValueError("max_models must be >= 1")

    normalized = normalize_choices(program)
    visible = frozenset(range(len(program.atoms))) - program.auxiliary
    search = StableModelSearch(normalized, visible)

    models: List[Interpretation] = []
    for atoms in search.models():
        models.append(Interpretation(atoms & visible, program.atoms))
        if max_models is not None and len(models) >= max_models:
            break

    logger.debug(
        "solve: %d atoms, %d rules -> %d models (%s)",
        len(normalized.atoms), len(normalized.rules), len(models), search.stats,
    )
    return models


def brave_consequences(program: Program) -> Interpretation:
    """Объединение всех answer sets (атомы, истинные хотя бы в одном)."""
    union: set[int] = set()
    for model in solve(program):
        union |= model.atoms
    return Interpretation(frozenset(union), program.atoms)


def cautious_consequences(program: Program) -> Optional[Interpretation]:
    """
    Пересечение всех answer sets; None, если answer sets нет.

    Атомы из brave, но не из cautious — это "unknown" в эпистемическом смысле.
    """
    models = solve(program)
    if not models:
        return None
    common = set(models[0].atoms)
    for model in models[1:]:
        common &= model.atoms
    return Interpretation(frozenset(common), program.atoms)


def _as_set(m: Union[Interpretation, Iterable[int]]) -> FrozenSet[int]:
    if isinstance(m, Interpretation):
        return m.atoms
    return frozenset(m)


def _body_true(body: Tuple[Literal, ...], true: FrozenSet[int]) -> bool:
    return all((lit.atom.id in true) != lit.negated for lit in body)
