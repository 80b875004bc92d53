"""Ground Horn probabilistic logic programs and the oracle derived from them.

A program is a set of ground, negation-free rules: deterministic ones always
hold, probabilistic ones are independently present with their annotated
probability. The query's success probability is the total probability of
rule subsets that entail it. Entailment is decided by forward chaining in
time linear in the program, which makes the derived oracle polynomial per
call while the query's explicit proof enumeration can blow up factorially
(see ``provenance_clause_count``).
"""

from __future__ import annotations

import math
import re
import time
from typing import Iterable, Optional, Sequence

from .core import (
    Domain,
    DiscreteDistribution,
    Instance,
    InvalidInstanceError,
    OracleVerdict,
    QueryStats,
    SizeLimitError,
    Valuation,
    VERDICT_FALSE,
    VERDICT_TRUE,
    VERDICT_UNKNOWN,
)
from .inference import CustomOrder, VariableOrder, dpnl
from .oracle import Oracle, SymbolicFunction

ENUMERATION_LIMIT = 2**20


class ProgramError(ValueError):
    """Program text rejected; carries the offending line number when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)
        self.line = line


class DegeneratePrefixError(ValueError):
    """Annotated-disjunction prefix already sums to 1 before a positive entry."""


class HornProgram:
    """Ground negation-free rules split into deterministic and probabilistic.

    Atoms are interned to dense integer ids at construction; rules keep their
    given order. ``m`` is the number of probabilistic rules, i.e. the number
    of binary random variables of the derived inference problem.
    """

    __slots__ = (
        "atom_names",
        "atom_ids",
        "det_rules",
        "prob_rules",
        "probs",
        "query",
        "_solver",
    )

    def __init__(
        self,
        deterministic: Iterable[tuple[str, Sequence[str]]],
        probabilistic: Iterable[tuple[float, str, Sequence[str]]],
        query: str,
    ):
        self.atom_names: list[str] = []
        self.atom_ids: dict[str, int] = {}
        self.det_rules: list[tuple[int, tuple[int, ...]]] = []
        self.prob_rules: list[tuple[int, tuple[int, ...]]] = []
        self.probs: list[float] = []
        for head, body in deterministic:
            self.det_rules.append(self._intern_rule(head, body))
        for p, head, body in probabilistic:
            p = float(p)
            if not 0.0 <= p <= 1.0:
                raise InvalidInstanceError("probability %r outside [0,1]" % (p,))
            self.prob_rules.append(self._intern_rule(head, body))
            self.probs.append(p)
        self.query = self._intern(query)
        self._solver = None

    def _intern(self, name: str) -> int:
        atom_id = self.atom_ids.get(name)
        if atom_id is None:
            atom_id = len(self.atom_names)
            self.atom_ids[name] = atom_id
            self.atom_names.append(name)
        return atom_id

    def _intern_rule(self, head: str, body: Sequence[str]) -> tuple[int, tuple[int, ...]]:
        head_id = self._intern(head)
        # duplicate body atoms would double-count in the propagation counters
        body_ids = tuple(dict.fromkeys(self._intern(b) for b in body))
        return head_id, body_ids

    @property
    def m(self) -> int:
        return len(self.prob_rules)

    @property
    def num_atoms(self) -> int:
        return len(self.atom_names)

    def solver(self) -> "_Solver":
        if self._solver is None:
            self._solver = _Solver(self)
        return self._solver

    def __repr__(self) -> str:
        return "HornProgram(det=%d, prob=%d, atoms=%d)" % (
            len(self.det_rules),
            self.m,
            self.num_atoms,
        )


class _Solver:
    """Counter-based forward chaining over a program's interned rules.

    Deterministic rules come first in the rule arrays, followed by the
    probabilistic ones; per call the caller says which probabilistic rules
    are active. A single-slot memo keeps the most recent committed fixpoint
    so the variable-order heuristic can reuse the oracle's work; the memo is
    immutable and advisory, so concurrent queries at worst recompute.
    """

    def __init__(self, prog: HornProgram):
        self.num_atoms = prog.num_atoms
        self.num_det = len(prog.det_rules)
        rules = list(prog.det_rules) + list(prog.prob_rules)
        self.heads = [h for h, _ in rules]
        self.bodies = [b for _, b in rules]
        self.query = prog.query
        self.prob_bodies = [b for _, b in prog.prob_rules]
        watchers: list[list[int]] = [[] for _ in range(self.num_atoms)]
        for r, body in enumerate(self.bodies):
            for a in body:
                watchers[a].append(r)
        self.watchers = watchers
        self.last_committed: Optional[tuple[tuple, bytes]] = None

    def fixpoint(self, enabled: Sequence[bool], seed: Optional[bytes] = None) -> bytearray:
        derived = bytearray(self.num_atoms) if seed is None else bytearray(seed)
        num_rules = len(self.bodies)
        missing = [-1] * num_rules
        agenda: list[int] = []
        # count missing body atoms against the seed only: everything derived
        # later passes through the agenda exactly once, so each counter is
        # decremented once per non-seed body atom
        for r in range(num_rules):
            if not enabled[r]:
                continue
            cnt = 0
            for a in self.bodies[r]:
                if not derived[a]:
                    cnt += 1
            missing[r] = cnt
        for r in range(num_rules):
            if missing[r] == 0:
                h = self.heads[r]
                if not derived[h]:
                    derived[h] = 1
                    agenda.append(h)
        watchers = self.watchers
        heads = self.heads
        while agenda:
            a = agenda.pop()
            for r in watchers[a]:
                if missing[r] > 0:
                    missing[r] -= 1
                    if missing[r] == 0:
                        h = heads[r]
                        if not derived[h]:
                            derived[h] = 1
                            agenda.append(h)
        return derived

    def committed_fixpoint(self, cells: tuple) -> bytes:
        memo = self.last_committed
        if memo is not None and memo[0] == cells:
            return memo[1]
        enabled = [True] * self.num_det + [c == 1 for c in cells]
        derived = bytes(self.fixpoint(enabled))
        self.last_committed = (cells, derived)
        return derived

    def entails_committed(self, cells: tuple) -> bool:
        return bool(self.committed_fixpoint(cells)[self.query])


def entails(rules: Iterable[tuple[object, Sequence[object]]], query: object) -> bool:
    """Ground Horn entailment by forward chaining to fixpoint.

    ``rules`` are (head, body) pairs over arbitrary hashable atoms; facts have
    empty bodies. True iff the query atom is derivable; an atom never
    mentioned is simply not derivable.
    """
    ids: dict[object, int] = {}

    def intern(a):
        i = ids.get(a)
        if i is None:
            i = len(ids)
            ids[a] = i
        return i

    interned = [(intern(h), tuple(dict.fromkeys(intern(b) for b in body))) for h, body in rules]
    q = ids.get(query)
    if q is None:
        return False
    num_atoms = len(ids)
    watchers: list[list[int]] = [[] for _ in range(num_atoms)]
    missing = []
    derived = bytearray(num_atoms)
    agenda = []
    for r, (h, body) in enumerate(interned):
        missing.append(len(body))
        for a in body:
            watchers[a].append(r)
        if not body and not derived[h]:
            derived[h] = 1
            agenda.append(h)
    while agenda:
        a = agenda.pop()
        if a == q:
            return True
        for r in watchers[a]:
            missing[r] -= 1
            if missing[r] == 0:
                h = interned[r][0]
                if not derived[h]:
                    derived[h] = 1
                    agenda.append(h)
    return bool(derived[q])


def logic_oracle(prog: HornProgram) -> Oracle:
    """Valid and complete oracle for the program's query function.

    For an output of 1: certain once the committed rules (assigned 1) entail
    the query, impossible once even the optimistic set (assigned 1 plus
    unassigned) fails to entail it, undecided otherwise; the answer is
    inverted for an output of 0. Monotonicity of Horn logic makes both
    decisions sound. The optimistic run is seeded with the committed
    fixpoint, so a call costs at most two propagations.
    """
    solver = prog.solver()
    num_det = solver.num_det
    q = solver.query

    def query(v: Valuation, o: int) -> OracleVerdict:
        if o not in (0, 1):
            raise InvalidInstanceError("query output must be 0 or 1, got %r" % (o,))
        cells = v.cells
        committed = solver.committed_fixpoint(cells)
        if committed[q]:
            res = 1
        else:
            has_unknown = None in cells
            if not has_unknown:
                res = 0
            else:
                enabled = [True] * num_det + [c is None or c == 1 for c in cells]
                optimistic = solver.fixpoint(enabled, seed=committed)
                res = None if optimistic[q] else 0
        if res is None:
            return VERDICT_UNKNOWN
        if o == 0:
            res = 1 - res
        return VERDICT_TRUE if res == 1 else VERDICT_FALSE

    return Oracle(query, claims_complete=True, name="horn")


def applicable_rule_order(prog: HornProgram) -> VariableOrder:
    """Branch on the first unassigned probabilistic rule whose body is already
    derivable from the committed rules.

    Such a rule can extend the derived set immediately, which keeps the
    search aligned with how proofs grow; on reachability programs this picks
    frontier edges. Falls back to the first unassigned index when nothing is
    applicable (only possible before any oracle pruning).
    """
    solver = prog.solver()
    prob_bodies = solver.prob_bodies

    def choose(v: Valuation) -> int:
        cells = v.cells
        derived = solver.committed_fixpoint(cells)
        fallback = None
        for k, c in enumerate(cells):
            if c is not None:
                continue
            if fallback is None:
                fallback = k
            if all(derived[a] for a in prob_bodies[k]):
                return k
        if fallback is None:
            raise InvalidInstanceError("no unassigned variable to choose")
        return fallback

    return CustomOrder(choose)


def logic_instance(prog: HornProgram) -> tuple[Instance, SymbolicFunction, Oracle]:
    """Inference problem for the query: one binary variable per probabilistic
    rule (1 = present, with the annotated probability), output 1 = success."""
    if prog.m == 0:
        raise InvalidInstanceError("program has no probabilistic rules")
    solver = prog.solver()
    domains = [Domain(2)] * prog.m
    dists = [DiscreteDistribution([1.0 - p, p]) for p in prog.probs]

    def fn(args: tuple[int, ...]) -> int:
        return 1 if solver.entails_committed(args) else 0

    sfn = SymbolicFunction(domains, Domain(2), fn, name="horn")
    inst = Instance(domains, dists, Domain(2))
    return inst, sfn, logic_oracle(prog)


def success_probability(
    prog: HornProgram,
    order: Optional[VariableOrder] = None,
) -> tuple[float, QueryStats]:
    """Probability that the query succeeds, by oracle-guided search."""
    if prog.m == 0:
        start = time.perf_counter()
        value = 1.0 if prog.solver().entails_committed(()) else 0.0
        stats = QueryStats(wall_time=time.perf_counter() - start)
        return value, stats
    inst, _, oracle = logic_instance(prog)
    if order is None:
        order = applicable_rule_order(prog)
    return dpnl(inst, 1, oracle, order=order)


def success_probability_bruteforce(prog: HornProgram) -> float:
    """Definitional success probability: sum over all rule subsets that
    entail the query of the product of presence/absence probabilities.

    Enumerates 2^m subsets; refuses programs beyond ``ENUMERATION_LIMIT``.
    Independent of the oracle-guided search.
    """
    m = prog.m
    if 2**m > ENUMERATION_LIMIT:
        raise SizeLimitError("enumeration refuses 2^%d subsets" % m)
    solver = prog.solver()
    probs = prog.probs
    total = 0.0
    for mask in range(2**m):
        cells = tuple((mask >> k) & 1 for k in range(m))
        w = 1.0
        for k, p in enumerate(probs):
            w *= p if cells[k] else 1.0 - p
        if w != 0.0 and solver.entails_committed(cells):
            total += w
    return total


# ---------------------------------------------------------------------------
# program text format

_ATOM_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*(\((.*)\))?$")
_CONST_RE = re.compile(r"^[a-z0-9][A-Za-z0-9_]*$")


def _split_top_level(s: str, sep: str = ",") -> list[str]:
    parts = []
    depth = 0
    current = []
    for ch in s:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(current))
            current = []
        else:
            current.append(ch)
    parts.append("".join(current))
    return parts


def _parse_atom(text: str, lineno: int) -> str:
    text = text.strip()
    match = _ATOM_RE.match(text)
    if not match:
        raise ProgramError("cannot parse atom %r" % text, lineno)
    name = match.group(1)
    if name[0].isupper() or name[0] == "_":
        raise ProgramError(
            "ground programs only: %r looks like a variable" % name, lineno
        )
    args_text = match.group(3)
    if args_text is None:
        return name
    args = [a.strip() for a in _split_top_level(args_text)]
    if any(not a for a in args):
        raise ProgramError("empty argument in %r" % text, lineno)
    for a in args:
        if not _CONST_RE.match(a):
            raise ProgramError(
                "ground programs only: argument %r is not a constant" % a, lineno
            )
    return "%s(%s)" % (name, ",".join(args))


def parse_program(text: str) -> HornProgram:
    """Parse the line-oriented program format.

    Statements end with a period, one per line; ``%`` starts a comment.
    Facts are ``atom.``, rules ``head :- b1, ..., bn.``, probabilistic facts
    ``0.85 :: atom.`` and the single required query ``query(atom).``.
    Variables (uppercase-initial arguments) are rejected: inputs must be
    ground.
    """
    deterministic: list[tuple[str, list[str]]] = []
    probabilistic: list[tuple[float, str, list[str]]] = []
    query: Optional[str] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        if not line.endswith("."):
            raise ProgramError("statement does not end with '.'", lineno)
        stmt = line[:-1].strip()
        if not stmt:
            raise ProgramError("empty statement", lineno)
        query_match = re.match(r"^query\s*\((.*)\)$", stmt)
        if query_match:
            if query is not None:
                raise ProgramError("duplicate query", lineno)
            query = _parse_atom(query_match.group(1), lineno)
            continue
        if "::" in stmt:
            prob_text, _, rest = stmt.partition("::")
            try:
                prob = float(prob_text.strip())
            except ValueError:
                raise ProgramError("malformed probability %r" % prob_text.strip(), lineno) from None
            if not 0.0 <= prob <= 1.0:
                raise ProgramError("probability %r outside [0,1]" % prob, lineno)
            if ":-" in rest:
                raise ProgramError("probabilistic rules with bodies are not supported", lineno)
            probabilistic.append((prob, _parse_atom(rest, lineno), []))
            continue
        if ":-" in stmt:
            head_text, _, body_text = stmt.partition(":-")
            head = _parse_atom(head_text, lineno)
            body = [_parse_atom(b, lineno) for b in _split_top_level(body_text)]
            deterministic.append((head, body))
            continue
        deterministic.append((_parse_atom(stmt, lineno), []))
    if query is None:
        raise ProgramError("program declares no query")
    return HornProgram(deterministic, probabilistic, query)


# ---------------------------------------------------------------------------
# graph reachability demonstrator

def reachability_program(
    n: int,
    edge_probs: Sequence[Sequence[float]],
    self_loops: bool = False,
) -> HornProgram:
    """Program asking whether node n is reachable from node 1.

    One probabilistic fact per directed edge, read from the n x n table;
    self loops are omitted by default since they can never affect
    reachability. Deterministic rules ground the transitive step for every
    generated edge.
    """
    if n < 2:
        raise InvalidInstanceError("need at least 2 nodes")
    if len(edge_probs) != n or any(len(row) != n for row in edge_probs):
        raise InvalidInstanceError("edge probability table must be %d x %d" % (n, n))

    def node(i: int) -> str:
        return "e%d" % (i + 1)

    deterministic: list[tuple[str, list[str]]] = [("reach(%s)" % node(0), [])]
    probabilistic: list[tuple[float, str, list[str]]] = []
    for i in range(n):
        for j in range(n):
            if i == j and not self_loops:
                continue
            edge = "edge(%s,%s)" % (node(i), node(j))
            probabilistic.append((float(edge_probs[i][j]), edge, []))
            deterministic.append(
                ("reach(%s)" % node(j), ["reach(%s)" % node(i), edge])
            )
    return HornProgram(deterministic, probabilistic, "reach(%s)" % node(n - 1))


def provenance_clause_count(n: int) -> int:
    """Number of proofs (loop-free paths) of reachability on the complete
    graph with n nodes: sum over i of C(n-2, i) * i! choices of intermediate
    nodes and their visit order. Grows factorially; exact big-int arithmetic.
    """
    if n < 2:
        raise InvalidInstanceError("need at least 2 nodes")
    return sum(math.comb(n - 2, i) * math.factorial(i) for i in range(n - 1))


# ---------------------------------------------------------------------------
# annotated disjunctions

def ad_transform(p: Sequence[float]) -> list[float]:
    """Switch probabilities for a categorical choice compiled to sequential
    independent facts: entry i is divided by the mass its prefix leaves over.

    Zero entries stay zero. Raises ``DegeneratePrefixError`` when a positive
    entry follows a prefix that already consumed all mass.
    """
    ps = [float(x) for x in p]
    if any(x < 0 for x in ps):
        raise InvalidInstanceError("negative category probability")
    if math.fsum(ps) > 1.0 + 1e-9:
        raise InvalidInstanceError("category probabilities sum beyond 1")
    out = []
    prefix = 0.0
    for pi in ps:
        if pi == 0.0:
            out.append(0.0)
        else:
            denom = 1.0 - prefix
            if denom <= 0.0:
                raise DegeneratePrefixError(
                    "prefix mass already 1 before positive entry %r" % pi
                )
            out.append(pi / denom)
        prefix += pi
    return out


def ad_recover(p_tilde: Sequence[float]) -> list[float]:
    """Inverse of ``ad_transform``: rebuild category probabilities from
    switch probabilities."""
    out = []
    prefix = 0.0
    for pt in p_tilde:
        pt = float(pt)
        if not -1e-9 <= pt <= 1.0 + 1e-9:
            raise InvalidInstanceError("switch probability %r outside [0,1]" % pt)
        pi = pt * (1.0 - prefix)
        out.append(pi)
        prefix += pi
    return out
