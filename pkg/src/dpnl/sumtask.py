"""Multi-digit addition task: symbolic function, hand-crafted oracle, builders.

Two N-digit numbers are encoded as 2N digit variables (most significant
first): positions 1..N form the first summand, N+1..2N the second. The
output is their sum, at most N+1 digits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (
    Domain,
    DiscreteDistribution,
    Instance,
    InvalidInstanceError,
    Valuation,
    OracleVerdict,
    VERDICT_FALSE,
    VERDICT_TRUE,
    VERDICT_UNKNOWN,
)
from .inference import SequentialOrder, VariableOrder
from .oracle import Oracle, SymbolicFunction


def addition(digits: Sequence[int]) -> int:
    """Sum of the two numbers encoded by ``2N`` digits, by carry addition.

    Scans position pairs right to left, keeping the running carry; the result
    is returned as an integer in [0, 2*10^N - 2].
    """
    if len(digits) == 0 or len(digits) % 2 != 0:
        raise InvalidInstanceError("need a positive even digit count, got %d" % len(digits))
    n = len(digits) // 2
    for d in digits:
        if not 0 <= d <= 9:
            raise InvalidInstanceError("digit %r out of range" % (d,))
    carry = 0
    result = 0
    scale = 1
    for i in range(n - 1, -1, -1):
        d = carry + digits[i] + digits[n + i]
        result += (d % 10) * scale
        carry = d // 10
        scale *= 10
    return result + carry * scale


def _result_digits(r: int, n: int) -> list[int]:
    # fixed-width base-10 representation, n+1 digits with leading zeros
    digits = [0] * (n + 1)
    for i in range(n, -1, -1):
        digits[i] = r % 10
        r //= 10
    return digits


def addition_oracle(v: Valuation, r: int, n: int) -> OracleVerdict:
    """Oracle for the digit-sum function, scanning right to left.

    Replays the carry addition on the valuation: undecided at the first
    unassigned digit of the current position, 0 at the first result-digit
    mismatch, and after a full scan 1 iff the final carry matches the leading
    result digit. Cheap (no completion enumeration) and returns no witnesses.
    """
    if not 0 <= r < 2 * 10**n:
        raise InvalidInstanceError("output %d out of range for %d digits" % (r, n))
    digits = _result_digits(r, n)
    cells = v.cells
    carry = 0
    for i in range(n - 1, -1, -1):
        a = cells[i]
        b = cells[n + i]
        if a is None or b is None:
            return VERDICT_UNKNOWN
        d = carry + a + b
        if d % 10 != digits[i + 1]:
            return VERDICT_FALSE
        carry = d // 10
    return VERDICT_TRUE if carry == digits[0] else VERDICT_FALSE


def right_to_left_order(n: int) -> VariableOrder:
    """Fixed order pairing digit positions from least to most significant.

    Under this order the cheap addition oracle behaves like a complete one:
    whenever it is undecided, completions of both kinds exist.
    """
    if n < 1:
        raise InvalidInstanceError("digit count must be >= 1")
    perm = []
    for i in range(n - 1, -1, -1):
        perm.append(i)
        perm.append(n + i)
    return SequentialOrder(perm)


@dataclass
class SumInstanceSpec:
    """Digit count per summand plus one probability row per digit position."""

    n: int
    dists: Sequence[Sequence[float]]

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInstanceError("digit count must be >= 1")
        rows = [tuple(float(p) for p in row) for row in self.dists]
        if len(rows) != 2 * self.n:
            raise InvalidInstanceError(
                "expected %d distribution rows, got %d" % (2 * self.n, len(rows))
            )
        for row in rows:
            if len(row) != 10:
                raise InvalidInstanceError("each digit row needs 10 entries")
        self.dists = rows

    @classmethod
    def uniform(cls, n: int) -> "SumInstanceSpec":
        return cls(n, [[0.1] * 10 for _ in range(2 * n)])


def sum_function(n: int) -> SymbolicFunction:
    digit = Domain(10)
    return SymbolicFunction(
        domains=[digit] * (2 * n),
        output_domain=Domain(2 * 10**n),
        fn=addition,
        name="sum%d" % n,
    )


def sum_oracle(n: int) -> Oracle:
    def query(v: Valuation, o: int) -> OracleVerdict:
        return addition_oracle(v, o, n)

    return Oracle(query, claims_complete=False, name="addition%d" % n)


def build_sum_instance(spec: SumInstanceSpec) -> tuple[Instance, SymbolicFunction, Oracle]:
    """Wire the addition function, its oracle and the digit distributions."""
    sfn = sum_function(spec.n)
    inst = Instance(
        domains=sfn.domains,
        dists=[DiscreteDistribution(row) for row in spec.dists],
        output_domain=sfn.output_domain,
    )
    return inst, sfn, sum_oracle(spec.n)


def sum_distribution_reference(spec: SumInstanceSpec) -> list[float]:
    """Exact output distribution by dynamic programming, no search involved.

    Builds each summand's value distribution digit by digit, then convolves
    the two; O(N * 10^N) work. Valid because the summands are independent
    products of independent digits, which makes this the test oracle for the
    recursive computation on sum instances.
    """
    n = spec.n

    def summand(rows: Sequence[Sequence[float]]) -> list[float]:
        values = [1.0]
        for row in rows:
            nxt = [0.0] * (len(values) * 10)
            for value, pv in enumerate(values):
                if pv == 0.0:
                    continue
                base = value * 10
                for d, pd in enumerate(row):
                    nxt[base + d] = pv * pd
            values = nxt
        return values

    first = summand(spec.dists[:n])
    second = summand(spec.dists[n:])
    # summand values range over [0, 10^n - 1], so their sum never reaches
    # 2*10^n - 1; that last output keeps probability zero
    conv = np.convolve(np.asarray(first), np.asarray(second))
    return [float(p) for p in conv] + [0.0]


def parse_dist_rows(rows, n: Optional[int] = None, tol: float = 1e-6) -> list[list[float]]:
    """Validate raw distribution rows: right shape, rows sum to 1 within tol."""
    rows = [list(map(float, row)) for row in rows]
    if n is not None and len(rows) != 2 * n:
        raise InvalidInstanceError("expected %d rows, got %d" % (2 * n, len(rows)))
    for i, row in enumerate(rows):
        if len(row) != 10:
            raise InvalidInstanceError("row %d has %d entries, expected 10" % (i, len(row)))
        total = sum(row)
        if abs(total - 1.0) > tol:
            raise InvalidInstanceError("row %d sums to %.9f, not 1" % (i, total))
        if any(p < 0 for p in row):
            raise InvalidInstanceError("row %d has a negative entry" % i)
    return rows
