from __future__ import annotations

import random
from itertools import chain, combinations
from typing import FrozenSet, List

import pytest

from asprl.asp_core import (
    Atom,
    ChoiceHead,
    Interpretation,
    Literal,
    Program,
    ProgramBuilder,
    Rule,
    brave_consequences,
    cautious_consequences,
    is_stable,
    is_tight,
    least_model,
    normalize_choices,
    reduct,
    solve,
)
from asprl.asp_text import format_program, parse_program
from asprl.errors import ChoiceBoundsInvalid, NotPositive, ProgramNotNormalized, ProgramSyntaxError


def names(models: List[Interpretation]) -> List[FrozenSet[str]]:
    return [m.names() for m in models]


def ids(p: Program, *atom_names: str) -> FrozenSet[int]:
    return frozenset(p.atoms.id_of(n) for n in atom_names)


# ---- оракул: перебор всех интерпретаций ----

def random_program(r: random.Random, max_atoms: int, max_rules: int, choice_p: float = 0.0) -> Program:
    n = r.randint(1, max_atoms)
    b = ProgramBuilder()
    atoms = [b.atom(f"p{i}") for i in range(n)]
    for _ in range(r.randint(1, max_rules)):
        pos = r.sample(atoms, r.randint(0, min(3, n)))
        neg = r.sample(atoms, r.randint(0, min(2, n)))
        kind = r.random()
        if kind < choice_p:
            cands = r.sample(atoms, r.randint(1, min(3, n)))
            lower = r.randint(0, len(cands))
            upper = r.randint(lower, len(cands))
            b.choice(cands, lower, upper, pos=pos, neg=neg)
        elif kind < choice_p + 0.15:
            b.constraint(pos, neg)
        else:
            b.rule(r.choice(atoms), pos, neg)
    return b.build()


def head_atoms(p: Program) -> List[int]:
    heads = set()
    for rule in p.rules:
        if isinstance(rule.head, Atom):
            heads.add(rule.head.id)
        elif isinstance(rule.head, ChoiceHead):
            heads.update(a.id for a in rule.head.candidates)
    return sorted(heads)


def brute_force(p: Program) -> List[FrozenSet[int]]:
    # атом без правил с ним в голове не бывает в stable model
    universe = head_atoms(p)
    subsets = chain.from_iterable(combinations(universe, k) for k in range(len(universe) + 1))
    found = [frozenset(s) for s in subsets if is_stable(p, s)]
    return sorted(found, key=lambda s: tuple(sorted(s)))


def test_solve_matches_brute_force_on_small_programs():
    r = random.Random(2024)
    for _ in range(300):
        p = random_program(r, max_atoms=8, max_rules=12)
        assert [m.atoms for m in solve(p)] == brute_force(p), str(p)


def test_solve_matches_brute_force_with_choice_rules():
    r = random.Random(77)
    for _ in range(300):
        p = random_program(r, max_atoms=6, max_rules=8, choice_p=0.3)
        assert [m.atoms for m in solve(p)] == brute_force(p), str(p)


@pytest.mark.slow
def test_solve_matches_brute_force_thousand_programs():
    r = random.Random(1)
    for _ in range(1000):
        p = random_program(r, max_atoms=12, max_rules=20)
        assert [m.atoms for m in solve(p)] == brute_force(p), str(p)


# ---- примеры ----

def test_choice_picks_exactly_one_future_state():
    p = parse_program("s0. a. 1 {s1; s2; s3} 1 :- s0, a.")
    models = names(solve(p))
    assert models == [
        frozenset({"s0", "a", "s1"}),
        frozenset({"s0", "a", "s2"}),
        frozenset({"s0", "a", "s3"}),
    ]


def test_optional_choice_without_body():
    p = parse_program("0 {c1} 1.")
    assert names(solve(p)) == [frozenset(), frozenset({"c1"})]


def test_normalize_choices_identity_without_choices():
    p = parse_program("a :- not b. b :- not a.")
    assert normalize_choices(p) is p


def test_normalize_choices_adds_complements_as_auxiliary():
    p = parse_program("{a; b}.")
    lowered = normalize_choices(p)
    assert not lowered.has_choices
    assert {lowered.atoms.names[i] for i in lowered.auxiliary} == {"~a", "~b"}
    assert names(solve(p)) == [frozenset(), frozenset({"a"}), frozenset({"a", "b"}), frozenset({"b"})]


@pytest.mark.parametrize("lower, upper", [(2, 1), (0, 4), (-1, 1)])
def test_bad_choice_bounds(lower, upper):
    b = ProgramBuilder()
    cands = (b.atom("a"), b.atom("b"), b.atom("c"))
    b.add(Rule(ChoiceHead(lower, upper, cands)))
    with pytest.raises(ChoiceBoundsInvalid):
        normalize_choices(b.build())


def test_reduct_examples():
    p = parse_program("a :- not b.")
    assert str(reduct(p, ids(p, "a"))) == "a."

    p = parse_program("a :- not b. b :- not a.")
    assert str(reduct(p, ids(p, "a"))) == "a."

    positive = parse_program("a. b :- a. :- b, c.")
    assert reduct(positive, ids(positive, "a", "b")).rules == positive.rules


def test_reduct_rejects_choice_rules():
    with pytest.raises(ProgramNotNormalized):
        reduct(parse_program("{a}."), frozenset())


def test_least_model_examples():
    p = parse_program("a. b :- a.")
    assert least_model(p).model.names() == {"a", "b"}

    assert least_model(Program(ProgramBuilder().build().atoms, ())).model.atoms == frozenset()

    p = parse_program("a :- b. b :- a.")
    assert least_model(p).model.atoms == frozenset()


def test_least_model_reports_violated_constraints():
    p = parse_program("a. :- a.")
    result = least_model(p)
    assert result.model.names() == {"a"}
    assert not result.consistent
    assert result.violations == (1,)


def test_least_model_rejects_negation():
    with pytest.raises(NotPositive):
        least_model(parse_program("a :- not b."))


def test_least_model_is_monotone_in_rules():
    r = random.Random(5)
    for _ in range(100):
        n = r.randint(1, 8)
        b = ProgramBuilder()
        atoms = [b.atom(f"p{i}") for i in range(n)]
        for _ in range(r.randint(1, 10)):
            b.rule(r.choice(atoms), r.sample(atoms, r.randint(0, min(2, n))))
        p = b.build()
        base = least_model(p).model.atoms
        extra = Rule(atoms[r.randrange(n)], tuple(Literal(a) for a in r.sample(atoms, r.randint(0, min(2, n)))))
        assert base <= least_model(p.extended([extra])).model.atoms


def test_is_stable_examples():
    p = parse_program("a :- not b. b :- not a.")
    assert is_stable(p, ids(p, "a"))
    assert not is_stable(p, ids(p, "a", "b"))

    p = parse_program("a :- not a.")
    assert not is_stable(p, ids(p, "a"))
    assert not is_stable(p, frozenset())

    p = parse_program("a.")
    assert not is_stable(p, frozenset())


def test_solve_examples():
    assert names(solve(parse_program("a."))) == [frozenset({"a"})]
    assert names(solve(parse_program("a :- not b. b :- not a."))) == [frozenset({"a"}), frozenset({"b"})]
    assert solve(parse_program("a :- not a.")) == []


def test_solve_is_deterministic_and_respects_max_models():
    p = parse_program("{a; b; c}.")
    first = solve(p)
    assert first == solve(p)
    assert len(first) == 8
    capped = solve(p, max_models=3)
    assert capped == first[:3]
    with pytest.raises(ValueError):
        solve(p, max_models=0)


def test_capped_solve_is_prefix_of_sorted_order():
    p = parse_program("{a; b; c; d}.")
    assert names(solve(p, max_models=3)) == [frozenset(), frozenset({"a"}), frozenset({"a", "b"})]
    assert names(solve(p, max_models=6))[5] == frozenset({"a", "b", "d"})


def test_capped_solve_matches_prefix_on_random_programs():
    r = random.Random(9)
    for _ in range(150):
        p = random_program(r, max_atoms=7, max_rules=10, choice_p=0.3)
        full = solve(p)
        for k in (1, 2, 3, 5):
            assert solve(p, max_models=k) == full[:k], str(p)


def satisfies(program: Program, true: FrozenSet[int]) -> bool:
    for rule in program.rules:
        if all(lit.atom.id in true for lit in rule.body):
            if rule.head is None or rule.head.id not in true:
                return False
    return True


def test_models_are_minimal_for_their_reduct():
    r = random.Random(9)
    for _ in range(100):
        p = random_program(r, max_atoms=6, max_rules=8)
        for model in solve(p):
            red = reduct(p, model.atoms)
            assert satisfies(red, model.atoms)
            for k in range(len(model.atoms)):
                for smaller in combinations(sorted(model.atoms), k):
                    assert not satisfies(red, frozenset(smaller))


def test_strong_negation_excludes_both():
    p = parse_program("a :- not -a. -a :- not a.")
    assert names(solve(p)) == [frozenset({"a"}), frozenset({"-a"})]
    p = parse_program("a. -a.")
    assert solve(p) == []


def test_brave_and_cautious_consequences():
    p = parse_program("c. a :- not b. b :- not a.")
    assert brave_consequences(p).names() == {"a", "b", "c"}
    assert cautious_consequences(p).names() == {"c"}
    assert cautious_consequences(parse_program("a :- not a.")) is None


def test_is_tight():
    assert is_tight(parse_program("a :- not b. b :- not a."))
    assert not is_tight(parse_program("a :- b. b :- a."))
    assert is_tight(parse_program("1 {x; y} 1. z :- x."))


def test_non_tight_program_drops_unfounded_loop():
    p = parse_program("a :- b. b :- a. a :- not c. c :- not a.")
    assert names(solve(p)) == [frozenset({"a", "b"}), frozenset({"c"})]


def test_at_most_one_ladder_matches_pairwise():
    b = ProgramBuilder()
    xs = [b.atom(f"x{i}") for i in range(9)]
    b.choice(xs)
    b.exactly_one(xs)
    models = solve(b.build())
    assert len(models) == 9
    assert all(len(m.atoms) == 1 for m in models)


def test_parse_program_round_trip_and_errors():
    text = "a.\nb :- a, not c.\n:- b, c.\n1 {x; y} 1 :- a.\n"
    p = parse_program(text)
    assert format_program(p) == "a.\nb :- a, not c.\n:- b, c.\n1 {x; y} 1 :- a.\n"
    assert names(solve(parse_program("% only a comment\na. % trailing\n"))) == [frozenset({"a"})]

    with pytest.raises(ProgramSyntaxError) as info:
        parse_program("a.\nb :- ")
    assert info.value.line == 2
    with pytest.raises(ProgramSyntaxError):
        parse_program("a :- b c.")


def test_program_rejects_unknown_atoms():
    b = ProgramBuilder()
    a = b.atom("a")
    with pytest.raises(ValueError):
        Program(b.build().atoms, (Rule(a, (Literal(Atom(5, "b")),)),))
