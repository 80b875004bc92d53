"""Oracle abstraction and generic constructions.

An oracle answers, for a partial valuation v and an output o: do all total
completions of v map to o (1), none of them (0), or is it undecided (None)?
A valid oracle answers 1/0 only when that is sound and must decide every
total valuation; a complete one answers None only when completions genuinely
mix.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .core import (
    Domain,
    OracleVerdict,
    SizeLimitError,
    Valuation,
    VERDICT_FALSE,
    VERDICT_TRUE,
    VERDICT_UNKNOWN,
    completion_count,
    total_completions,
)

COMPLETION_GUARD = 10**6


class SymbolicFunction:
    """Total map from complete argument tuples to an output value."""

    __slots__ = ("domains", "output_domain", "fn", "name")

    def __init__(
        self,
        domains: Sequence[Domain],
        output_domain: Domain,
        fn: Callable[[tuple[int, ...]], int],
        name: str = "",
    ):
        self.domains = tuple(domains)
        self.output_domain = output_domain
        self.fn = fn
        self.name = name

    @property
    def arity(self) -> int:
        return len(self.domains)

    def __call__(self, args: Sequence[int]) -> int:
        return self.fn(tuple(args))

    def __repr__(self) -> str:
        return "SymbolicFunction(%s/%d)" % (self.name or "fn", self.arity)


class Oracle:
    """Callable (valuation, output) -> OracleVerdict with completeness metadata."""

    __slots__ = ("fn", "claims_complete", "name")

    def __init__(
        self,
        fn: Callable[[Valuation, int], OracleVerdict],
        claims_complete: bool = False,
        name: str = "",
    ):
        self.fn = fn
        self.claims_complete = claims_complete
        self.name = name

    def __call__(self, v: Valuation, o: int) -> OracleVerdict:
        return self.fn(v, o)

    def __repr__(self) -> str:
        return "Oracle(%s)" % (self.name or "fn")


def naive_oracle(sfn: SymbolicFunction) -> Oracle:
    """Oracle that only decides total valuations.

    Partial valuations always come back undecided, so a search driven by this
    oracle degenerates to full enumeration. Valid for any symbolic function.
    """

    def query(v: Valuation, o: int) -> OracleVerdict:
        if None in v.cells:
            return VERDICT_UNKNOWN
        return VERDICT_TRUE if sfn.fn(v.cells) == o else VERDICT_FALSE

    return Oracle(query, claims_complete=False, name="naive(%s)" % sfn.name)


def exhaustive_oracle(sfn: SymbolicFunction, completion_guard: int = COMPLETION_GUARD) -> Oracle:
    """Complete oracle that tests every total completion of the valuation.

    Answers 1/0 when all completions agree/disagree with the output and
    otherwise returns undecided with one witness of each kind attached.
    Refuses valuations with more than ``completion_guard`` completions.
    """
    domains = sfn.domains

    def query(v: Valuation, o: int) -> OracleVerdict:
        if completion_count(v, domains) > completion_guard:
            raise SizeLimitError(
                "exhaustive oracle refuses %d completions" % completion_count(v, domains)
            )
        agree: Optional[Valuation] = None
        disagree: Optional[Valuation] = None
        for w in total_completions(v, domains):
            if sfn.fn(w.cells) == o:
                if agree is None:
                    agree = w
            elif disagree is None:
                disagree = w
            if agree is not None and disagree is not None:
                return OracleVerdict(None, witness_true=agree, witness_false=disagree)
        if disagree is None:
            return VERDICT_TRUE
        return VERDICT_FALSE

    return Oracle(query, claims_complete=True, name="exhaustive(%s)" % sfn.name)


@dataclass
class CheckReport:
    """Outcome of a validity or completeness check."""

    passed: bool
    checked: int
    counterexample: Optional[tuple[Valuation, int, Optional[int], str]] = None

    def __bool__(self) -> bool:
        return self.passed


def _random_valuation(rng: random.Random, domains: Sequence[Domain], p_unknown: float) -> Valuation:
    cells = []
    for dom in domains:
        if rng.random() < p_unknown:
            cells.append(None)
        else:
            cells.append(rng.randrange(dom.size))
    return Valuation(cells)


def _all_valuations(domains: Sequence[Domain]):
    axes = [[None, *range(dom.size)] for dom in domains]
    for cells in itertools.product(*axes):
        yield Valuation(cells)


def _verify_verdict(
    verdict: OracleVerdict,
    v: Valuation,
    o: int,
    sfn: SymbolicFunction,
) -> Optional[str]:
    """Check one verdict against the ground truth; None if fine."""
    answer = verdict.answer
    if v.is_total:
        expected = 1 if sfn.fn(v.cells) == o else 0
        if answer != expected:
            return "total valuation decided %r, expected %d" % (answer, expected)
        return None
    if answer == 1:
        for w in total_completions(v, sfn.domains):
            if sfn.fn(w.cells) != o:
                return "answered 1 but completion %r maps elsewhere" % (w,)
    elif answer == 0:
        for w in total_completions(v, sfn.domains):
            if sfn.fn(w.cells) == o:
                return "answered 0 but completion %r maps to the output" % (w,)
    if verdict.witness_true is not None:
        w = verdict.witness_true
        if len(w) != len(v) or sfn.fn(w.cells) != o or not _agrees(w, v):
            return "bad agreeing witness %r" % (w,)
    if verdict.witness_false is not None:
        w = verdict.witness_false
        if len(w) != len(v) or sfn.fn(w.cells) == o or not _agrees(w, v):
            return "bad disagreeing witness %r" % (w,)
    return None


def _agrees(w: Valuation, v: Valuation) -> bool:
    return all(b is None or a == b for a, b in zip(w.cells, v.cells))


def check_validity(
    oracle: Oracle,
    sfn: SymbolicFunction,
    budget: int = 10_000,
    seed: int = 0,
    exhaustive: bool = False,
    completion_guard: int = COMPLETION_GUARD,
) -> CheckReport:
    """Probe an oracle for soundness violations.

    Samples ``budget`` random (valuation, output) pairs (or enumerates all of
    them with ``exhaustive=True``) and, for every decided answer, verifies the
    decision against every total completion. Witnesses are checked whenever
    present. Valuations with more completions than ``completion_guard`` are
    skipped in sampling mode and refused in exhaustive mode.
    """
    if not exhaustive and budget < 1:
        raise ValueError("budget must be >= 1")
    rng = random.Random(seed)
    outputs = range(sfn.output_domain.size)
    checked = 0

    def trials():
        if exhaustive:
            for v in _all_valuations(sfn.domains):
                for o in outputs:
                    yield v, o
        else:
            for _ in range(budget):
                yield _random_valuation(rng, sfn.domains, 0.4), rng.randrange(
                    sfn.output_domain.size
                )

    for v, o in trials():
        n_completions = completion_count(v, sfn.domains)
        if n_completions > completion_guard:
            if exhaustive:
                raise SizeLimitError("exhaustive check exceeds completion guard")
            continue
        verdict = oracle(v, o)
        problem = _verify_verdict(verdict, v, o, sfn)
        checked += 1
        if problem is not None:
            return CheckReport(False, checked, (v, o, verdict.answer, problem))
    return CheckReport(True, checked)


def check_completeness(
    oracle: Oracle,
    sfn: SymbolicFunction,
    budget: int = 10_000,
    seed: int = 0,
    exhaustive: bool = False,
    completion_guard: int = COMPLETION_GUARD,
) -> CheckReport:
    """Probe an oracle for undecided answers it could have decided.

    For every undecided answer, verifies that the completions genuinely mix:
    at least one maps to the output and at least one maps elsewhere.
    """
    if not exhaustive and budget < 1:
        raise ValueError("budget must be >= 1")
    rng = random.Random(seed)
    checked = 0

    def trials():
        if exhaustive:
            for v in _all_valuations(sfn.domains):
                for o in range(sfn.output_domain.size):
                    yield v, o
        else:
            for _ in range(budget):
                yield _random_valuation(rng, sfn.domains, 0.6), rng.randrange(
                    sfn.output_domain.size
                )

    for v, o in trials():
        n_completions = completion_count(v, sfn.domains)
        if n_completions > completion_guard:
            if exhaustive:
                raise SizeLimitError("exhaustive check exceeds completion guard")
            continue
        verdict = oracle(v, o)
        checked += 1
        if verdict.answer is not None:
            continue
        has_true = False
        has_false = False
        for w in total_completions(v, sfn.domains):
            if sfn.fn(w.cells) == o:
                has_true = True
            else:
                has_false = True
            if has_true and has_false:
                break
        if not (has_true and has_false):
            kind = "agree" if has_true else "disagree"
            return CheckReport(
                False,
                checked,
                (v, o, None, "undecided but all completions %s" % kind),
            )
    return CheckReport(True, checked)
