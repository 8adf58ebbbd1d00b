"""
asprl.asp_search

Перебор stable models нормальной (без choice) программы.

Схема:
- распространение по Clark completion: тело истинно -> голова истинна,
  у атома не осталось поддерживающих правил -> атом ложен, и обратные выводы;
- хронологический бэктрекинг: сначала видимые атомы по id, затем служебные;
- на полном присваивании: для tight-программы supported model = stable model,
  иначе дополнительно is_stable (reduct + least model).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, FrozenSet, Iterable, Iterator, List, Optional, Tuple

from .asp_core import Atom, Program, is_stable, is_tight

logger = logging.getLogger(__name__)

# (вид хода, значение); значение None = атом уже решён распространением
_Move = Tuple[str, Optional[bool]]
# (стадия скрытых атомов, уровень, число истинных видимых атомов до уровня)
_Node = Tuple[bool, int, int]


@dataclass
class SolveStats:
    decisions: int = 0
    conflicts: int = 0
    models: int = 0

    def __str__(self) -> str:
        return f"decisions={self.decisions} conflicts={self.conflicts} models={self.models}"


@dataclass
class _ChoicePoint:
    trail_len: int
    hidden: bool
    level: int
    true_before: int
    moves: List[_Move]


class StableModelSearch:
    """
    Поиск по одной программе. Объект одноразовый и не потокобезопасный:
    всё изменяемое состояние (присваивание, счётчики) живёт внутри.

    Контракт:
    - вход: Program без choice-правил (ProgramNotNormalized не проверяем повторно,
      choice-правила просто не могут сюда попасть из solve);
    - visible — атомы, на которые проецируются модели (по умолчанию все);
    - models() -> генератор множеств id истинных атомов, по одному на проекцию.
    """

    def __init__(
        self,
        program: Program,
        visible: Optional[Iterable[int]] = None,
        leaf_check: Optional[Callable[[FrozenSet[int]], bool]] = None,
    ):
        self.program = program
        self.stats = SolveStats()
        n = len(program.atoms)
        self._n = n

        self._head: List[int] = []
        self._pos: List[List[int]] = []
        self._neg: List[List[int]] = []
        self._pos_occ: List[List[int]] = [[] for _ in range(n)]
        self._neg_occ: List[List[int]] = [[] for _ in range(n)]
        self._head_of: List[List[int]] = [[] for _ in range(n)]

        for rule in program.rules:
            head = rule.head.id if isinstance(rule.head, Atom) else -1
            pos = list(dict.fromkeys(rule.positive))
            neg = list(dict.fromkeys(rule.negative))
            if set(pos) & set(neg):
                continue  # тело никогда не истинно
            if head >= 0 and head in pos:
                continue  # a :- a, ... ничего не выводит
            r = len(self._head)
            self._head.append(head)
            self._pos.append(pos)
            self._neg.append(neg)
            for a in pos:
                self._pos_occ[a].append(r)
            for a in neg:
                self._neg_occ[a].append(r)
            if head >= 0:
                self._head_of[head].append(r)

        m = len(self._head)
        self._size = [len(self._pos[r]) + len(self._neg[r]) for r in range(m)]
        self._n_true = [0] * m
        self._n_false = [0] * m
        self._support = [len(self._head_of[a]) for a in range(n)]
        self._val: List[Optional[bool]] = [None] * n
        self._trail: List[int] = []
        self._qhead = 0

        shown = set(range(n)) if visible is None else set(visible)
        self._visible = [a for a in range(n) if a in shown]
        self._hidden = [a for a in range(n) if a not in shown]
        self._is_visible = [a in shown for a in range(n)]
        self._true_visible = 0

        if leaf_check is not None:
            self._leaf_check = leaf_check
        elif is_tight(program):
            self._leaf_check = None
        else:
            self._leaf_check = lambda model: is_stable(program, model)

    # ---- присваивание и откат ----

    def _assign(self, a: int, v: bool) -> bool:
        cur = self._val[a]
        if cur is not None:
            return cur == v
        self._val[a] = v
        self._trail.append(a)
        if v and self._is_visible[a]:
            self._true_visible += 1
        head, n_true, n_false, support = self._head, self._n_true, self._n_false, self._support
        for r in self._pos_occ[a]:
            if v:
                n_true[r] += 1
            else:
                n_false[r] += 1
                if n_false[r] == 1 and head[r] >= 0:
                    support[head[r]] -= 1
        for r in self._neg_occ[a]:
            if v:
                n_false[r] += 1
                if n_false[r] == 1 and head[r] >= 0:
                    support[head[r]] -= 1
            else:
                n_true[r] += 1
        return True

    def _undo(self, trail_len: int) -> None:
        head, n_true, n_false, support = self._head, self._n_true, self._n_false, self._support
        while len(self._trail) > trail_len:
            a = self._trail.pop()
            v = self._val[a]
            self._val[a] = None
            if v and self._is_visible[a]:
                self._true_visible -= 1
            for r in self._pos_occ[a]:
                if v:
                    n_true[r] -= 1
                else:
                    if n_false[r] == 1 and head[r] >= 0:
                        support[head[r]] += 1
                    n_false[r] -= 1
            for r in self._neg_occ[a]:
                if v:
                    if n_false[r] == 1 and head[r] >= 0:
                        support[head[r]] += 1
                    n_false[r] -= 1
                else:
                    n_true[r] -= 1
        self._qhead = trail_len

    # ---- распространение ----

    def _check_rule(self, r: int) -> bool:
        if self._n_false[r]:
            return True
        undecided = self._size[r] - self._n_true[r]
        h = self._head[r]
        if undecided == 0:
            if h < 0:
                return False
            return self._assign(h, True)
        if undecided == 1 and (h < 0 or self._val[h] is False):
            # единственный неопределённый литерал обязан стать ложным
            for a in self._pos[r]:
                if self._val[a] is None:
                    return self._assign(a, False)
            for a in self._neg[r]:
                if self._val[a] is None:
                    return self._assign(a, True)
        return True

    def _check_support(self, a: int) -> bool:
        v = self._val[a]
        s = self._support[a]
        if s == 0:
            return v is not True and self._assign(a, False)
        if v is True and s == 1:
            for r in self._head_of[a]:
                if self._n_false[r] == 0:
                    for b in self._pos[r]:
                        if not self._assign(b, True):
                            return False
                    for b in self._neg[r]:
                        if not self._assign(b, False):
                            return False
                    break
        return True

    def _propagate(self) -> bool:
        trail = self._trail
        head = self._head
        while self._qhead < len(trail):
            a = trail[self._qhead]
            self._qhead += 1
            if not self._check_support(a):
                return False
            for r in self._head_of[a]:
                if not self._check_rule(r):
                    return False
            for occ in (self._pos_occ[a], self._neg_occ[a]):
                for r in occ:
                    if not self._check_rule(r):
                        return False
                    if head[r] >= 0 and not self._check_support(head[r]):
                        return False
        return True

    def _initial(self) -> bool:
        for a in range(self._n):
            if not self._check_support(a):
                return False
        for r in range(len(self._head)):
            if not self._check_rule(r):
                return False
        return self._propagate()

    def _decide(self, a: int, v: bool) -> bool:
        return self._assign(a, v) and self._propagate()

    # ---- поиск ----

    def _visible_moves(self, level: int, true_before: int) -> List[_Move]:
        vis = self._visible
        moves: List[_Move] = []
        # пустой остаток: только сразу после истинного атома (иначе эту проекцию
        # дала ветвь уровнем выше) и если впереди нет уже истинных видимых атомов
        if (level == 0 or self._val[vis[level - 1]] is True) and self._true_visible == true_before:
            moves.append(("rest_false", None))
        if level < len(vis):
            if self._val[vis[level]] is None:
                moves.append(("visible", True))
                moves.append(("visible", False))
            else:
                moves.append(("visible", None))
        moves.reverse()
        return moves

    def _hidden_moves(self, level: int) -> Optional[List[_Move]]:
        hidden = self._hidden
        while level < len(hidden) and self._val[hidden[level]] is not None:
            level += 1
        if level == len(hidden):
            return None
        return [("hidden", False), ("hidden", True)]

    def _apply(self, point: _ChoicePoint, move: _Move) -> Optional[_Node]:
        kind, value = move
        level = point.level
        if kind == "rest_false":
            for a in self._visible[level:]:
                if not self._assign(a, False):
                    return None
            return (True, 0, 0) if self._propagate() else None
        if kind == "hidden":
            while self._val[self._hidden[level]] is not None:
                level += 1
            self.stats.decisions += 1
            return (True, level + 1, 0) if self._decide(self._hidden[level], value) else None
        a = self._visible[level]
        if value is not None:
            self.stats.decisions += 1
            if not self._decide(a, value):
                return None
        return (False, level + 1, point.true_before + (self._val[a] is True))

    def models(self) -> Iterator[FrozenSet[int]]:
        """
        Stable models по возрастанию кортежа отсортированных id видимых атомов.

        Видимые атомы решаются первыми, по id. На уровне i (атомы до i решены)
        ветви идут так: все видимые от i и дальше ложны, атом i истинен, атом i
        ложен. Каждая проекция получается ровно одной ветвью, поэтому первые k
        моделей генератора = первые k в этом порядке. Скрытые атомы дорешиваются
        после; на проекцию берётся первое подходящее дополнение.
        """
        if not self._initial():
            self.stats.conflicts += 1
            return

        stack: List[_ChoicePoint] = []
        node: Optional[_Node] = (False, 0, 0)  # (стадия скрытых, уровень, истинных видимых до уровня)
        while True:
            if node is not None:
                in_hidden, level, true_before = node
                node = None
                moves = self._hidden_moves(level) if in_hidden else self._visible_moves(level, true_before)
                if moves is None:
                    model = frozenset(a for a in range(self._n) if self._val[a])
                    if self._leaf_check is None or self._leaf_check(model):
                        self.stats.models += 1
                        yield model
                        while stack and stack[-1].hidden:
                            stack.pop()
                else:
                    stack.append(_ChoicePoint(len(self._trail), in_hidden, level, true_before, moves))

            if not stack:
                break
            point = stack[-1]
            if not point.moves:
                stack.pop()
                continue
            self._undo(point.trail_len)
            node = self._apply(point, point.moves.pop())
            if node is None:
                self.stats.conflicts += 1

        logger.debug("search over %d atoms: %s", self._n, self.stats)
