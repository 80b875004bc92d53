"""CNF formulas, DIMACS parsing, conditioning and weighted model counting."""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

import numpy as np

from .core import QueryStats, SizeLimitError

BRUTEFORCE_VAR_LIMIT = 24


class DimacsError(ValueError):
    """DIMACS parse failure; carries the offending line number."""

    def __init__(self, line: int, message: str):
        super().__init__("line %d: %s" % (line, message))
        self.line = line


class CnfFormula:
    """Clause set over binary variables.

    Literals use the DIMACS convention: ``+(v+1)`` for variable ``v`` positive,
    ``-(v+1)`` negated. Clauses are deduplicated and tautological clauses
    (containing both X and not-X) are dropped at construction, so "no clauses"
    and "contains the empty clause" are O(1) states.
    """

    __slots__ = ("num_vars", "clauses", "has_empty_clause")

    def __init__(self, num_vars: int, clauses: Iterable[Sequence[int]]):
        if num_vars < 0:
            raise ValueError("negative variable count")
        kept = []
        has_empty = False
        for clause in clauses:
            lits = []
            seen = set()
            tautological = False
            for lit in clause:
                lit = int(lit)
                if lit == 0 or abs(lit) > num_vars:
                    raise ValueError("literal %d out of range for %d variables" % (lit, num_vars))
                if -lit in seen:
                    tautological = True
                    break
                if lit not in seen:
                    seen.add(lit)
                    lits.append(lit)
            if tautological:
                continue
            if not lits:
                has_empty = True
            kept.append(tuple(lits))
        self.num_vars = num_vars
        self.clauses = tuple(kept)
        self.has_empty_clause = has_empty

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    @property
    def is_empty(self) -> bool:
        return not self.clauses

    def variables(self) -> set[int]:
        """0-based indices of variables occurring in some clause."""
        return {abs(lit) - 1 for clause in self.clauses for lit in clause}

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CnfFormula)
            and self.num_vars == other.num_vars
            and self.clauses == other.clauses
        )

    def __repr__(self) -> str:
        return "CnfFormula(vars=%d, clauses=%d)" % (self.num_vars, len(self.clauses))


class WeightMap:
    """Per-variable probability of being true, indexed by 0-based variable."""

    __slots__ = ("probs",)

    def __init__(self, probs: Sequence[float]):
        ps = tuple(float(p) for p in probs)
        for p in ps:
            if not 0.0 <= p <= 1.0:
                raise ValueError("weight %r outside [0,1]" % (p,))
        self.probs = ps

    def __len__(self) -> int:
        return len(self.probs)

    def __getitem__(self, var: int) -> float:
        return self.probs[var]

    @classmethod
    def uniform(cls, num_vars: int, p: float = 0.5) -> "WeightMap":
        return cls([p] * num_vars)


def parse_dimacs(text: str) -> tuple[CnfFormula, Optional[WeightMap]]:
    """Parse DIMACS CNF, optionally extended with ``w <var> <prob>`` lines.

    Clauses are 0-terminated literal lists and may span lines; ``c`` lines are
    comments. Weight lines use 1-based variables; with at least one weight
    line present, unweighted variables default to 0.5. Returns ``None`` for
    the weight map when the input has no weight lines.
    """
    num_vars = None
    declared_clauses = None
    clauses: list[list[int]] = []
    current: list[int] = []
    current_start = 0
    weights: dict[int, float] = {}
    lineno = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            if num_vars is not None:
                raise DimacsError(lineno, "duplicate problem header")
            fields = line.split()
            if len(fields) != 4 or fields[1] != "cnf":
                raise DimacsError(lineno, "malformed header %r" % line)
            try:
                num_vars = int(fields[2])
                declared_clauses = int(fields[3])
            except ValueError:
                raise DimacsError(lineno, "malformed header %r" % line) from None
            if num_vars < 0 or declared_clauses < 0:
                raise DimacsError(lineno, "negative counts in header")
            continue
        if line.startswith("w"):
            fields = line.split()
            if len(fields) != 3:
                raise DimacsError(lineno, "malformed weight line %r" % line)
            if num_vars is None:
                raise DimacsError(lineno, "weight line before header")
            try:
                var = int(fields[1])
                prob = float(fields[2])
            except ValueError:
                raise DimacsError(lineno, "malformed weight line %r" % line) from None
            if not 1 <= var <= num_vars:
                raise DimacsError(lineno, "weight for variable %d out of range" % var)
            if not 0.0 <= prob <= 1.0:
                raise DimacsError(lineno, "weight %r outside [0,1]" % prob)
            weights[var - 1] = prob
            continue
        if num_vars is None:
            raise DimacsError(lineno, "clause before header")
        try:
            tokens = [int(tok) for tok in line.split()]
        except ValueError:
            raise DimacsError(lineno, "non-integer token in clause") from None
        for tok in tokens:
            if tok == 0:
                clauses.append(current)
                current = []
            else:
                if abs(tok) > num_vars:
                    raise DimacsError(lineno, "literal %d out of range" % tok)
                if not current:
                    current_start = lineno
                current.append(tok)
    if num_vars is None:
        raise DimacsError(lineno or 1, "missing problem header")
    if current:
        raise DimacsError(current_start, "unterminated clause (missing 0)")
    if declared_clauses is not None and len(clauses) != declared_clauses:
        raise DimacsError(
            lineno, "declared %d clauses, found %d" % (declared_clauses, len(clauses))
        )
    formula = CnfFormula(num_vars, clauses)
    if not weights:
        return formula, None
    probs = [weights.get(v, 0.5) for v in range(num_vars)]
    return formula, WeightMap(probs)


def condition(g: CnfFormula, var: int, value: bool) -> CnfFormula:
    """The formula ``g`` with variable ``var`` (0-based) fixed to ``value``.

    Clauses satisfied by the assignment are removed and the falsified literal
    is eliminated from the rest; ``var`` occurs nowhere in the result.
    Untouched clause tuples are shared with the input.
    """
    if not 0 <= var < g.num_vars:
        raise ValueError("variable %d out of range" % var)
    lit_true = (var + 1) if value else -(var + 1)
    lit_false = -lit_true
    out = CnfFormula.__new__(CnfFormula)
    kept = []
    has_empty = g.has_empty_clause
    for clause in g.clauses:
        if lit_true in clause:
            continue
        if lit_false in clause:
            reduced = tuple(l for l in clause if l != lit_false)
            if not reduced:
                has_empty = True
            kept.append(reduced)
        else:
            kept.append(clause)
    out.num_vars = g.num_vars
    out.clauses = tuple(kept)
    out.has_empty_clause = has_empty
    return out


def _pick_branch_variable(g: CnfFormula, branch: str) -> int:
    if branch == "fixed":
        best = None
        for clause in g.clauses:
            for lit in clause:
                var = abs(lit) - 1
                if best is None or var < best:
                    best = var
        assert best is not None
        return best
    counts: dict[int, int] = {}
    for clause in g.clauses:
        for lit in clause:
            var = abs(lit) - 1
            counts[var] = counts.get(var, 0) + 1
    # highest occurrence count, lowest index on ties
    return min(counts, key=lambda v: (-counts[v], v))


def probdpll(
    g: CnfFormula,
    sigma: WeightMap,
    branch: str = "occurrence",
    stats: Optional[QueryStats] = None,
) -> float:
    """Exact probabilistic weighted model count by DPLL-style splitting.

    Returns 1 with no clauses, 0 on an empty clause, and otherwise splits on
    an occurring variable X:

        sigma(X) * count(g | X=1)  +  (1 - sigma(X)) * count(g | X=0)

    ``branch`` is "occurrence" (most occurrences, the usual DPLL default) or
    "fixed" (lowest variable index) for order-sensitive tests. No unit
    propagation or pure-literal elimination: the plain recursion is the
    reference behaviour that the tests pin down.
    """
    if len(sigma) < g.num_vars:
        raise ValueError("weight map covers %d of %d variables" % (len(sigma), g.num_vars))
    if branch not in ("occurrence", "fixed"):
        raise ValueError("unknown branch rule %r" % branch)

    def rec(f: CnfFormula) -> float:
        if stats is not None:
            stats.oracle_calls += 1
        if f.is_empty:
            if stats is not None:
                stats.leaves_true += 1
            return 1.0
        if f.has_empty_clause:
            if stats is not None:
                stats.leaves_false += 1
            return 0.0
        if stats is not None:
            stats.branch_nodes += 1
        var = _pick_branch_variable(f, branch)
        p = sigma[var]
        return p * rec(condition(f, var, True)) + (1.0 - p) * rec(condition(f, var, False))

    return rec(g)


def pwmc_bruteforce(g: CnfFormula, sigma: WeightMap) -> float:
    """Definitional weighted model count: sum of valuation weights over models.

    Enumerates all 2^n assignments (vectorized); refuses above
    ``BRUTEFORCE_VAR_LIMIT`` variables. Independent of the DPLL recursion, so
    it serves as its oracle in tests.
    """
    n = g.num_vars
    if n > BRUTEFORCE_VAR_LIMIT:
        raise SizeLimitError("brute force refuses %d > %d variables" % (n, BRUTEFORCE_VAR_LIMIT))
    if len(sigma) < n:
        raise ValueError("weight map covers %d of %d variables" % (len(sigma), n))
    if n == 0:
        return 0.0 if g.has_empty_clause else 1.0
    count = 1 << n
    idx = np.arange(count, dtype=np.uint32)
    weights = np.ones(count, dtype=np.float64)
    for var in range(n):
        bit = (idx >> var) & 1
        p = sigma[var]
        weights *= np.where(bit == 1, p, 1.0 - p)
    satisfied = np.ones(count, dtype=bool)
    for clause in g.clauses:
        clause_sat = np.zeros(count, dtype=bool)
        for lit in clause:
            bit = (idx >> (abs(lit) - 1)) & 1
            clause_sat |= (bit == 1) if lit > 0 else (bit == 0)
        satisfied &= clause_sat
    return float(weights[satisfied].sum())


def prob_of_dnf(
    dnf_clauses: Iterable[Sequence[int]],
    sigma: WeightMap,
    num_vars: Optional[int] = None,
    branch: str = "occurrence",
    stats: Optional[QueryStats] = None,
) -> float:
    """Probability that a DNF over weighted variables is true.

    The DNF's negation is one CNF clause of negated literals per conjunctive
    clause (De Morgan); the result is 1 minus its weighted count.
    """
    dnf = [tuple(int(l) for l in clause) for clause in dnf_clauses]
    if num_vars is None:
        num_vars = max((abs(l) for clause in dnf for l in clause), default=0)
    negated = [[-l for l in clause] for clause in dnf]
    g = CnfFormula(num_vars, negated)
    return 1.0 - probdpll(g, sigma, branch=branch, stats=stats)
