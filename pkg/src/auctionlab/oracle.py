"""Exact ground truth for desk-scale instances.

``brute_force_opt`` returns the welfare-maximizing assignment of items to
bidders (items may stay unassigned), its welfare, and per-item supporting
prices of the winning bundles. The optimum is found by exact dynamic
programming over item subsets and the returned assignment is the
lexicographically smallest optimal assignment vector, item by item, with
"unassigned" ordered after all bidder indices. That is observably identical
to scanning all (n+1)^m assignment vectors in lexicographic order and keeping
the first maximizer, which the test suite verifies at small sizes.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence, Union

from .auction import Allocation
from .errors import CapabilityError, InvariantViolationError
from .rationals import common_scale
from .valuations import (
    BudgetAdditiveValuation,
    Valuation,
    XosValuation,
    supporting_prices,
    value_query,
)


@dataclass(frozen=True)
class OptimalSolution:
    """An optimal allocation, its welfare, and supporting prices.

    ``assignment[j]`` is the bidder receiving item j, or n (the bidder count)
    when j is unassigned. ``supporting_prices[j]`` is item j's price in a
    maximizing clause of its winner's bundle, 0 for unassigned items.
    """

    allocation: Allocation
    welfare: Fraction
    supporting_prices: tuple[Fraction, ...]
    assignment: tuple[int, ...]


def welfare(
    allocation: Allocation,
    valuations: Union[Sequence[Valuation], Mapping[int, Valuation]],
) -> Fraction:
    """Sum of each bidder's value for its bundle; bundles must be disjoint."""
    seen: set[int] = set()
    total = Fraction(0)
    lookup = (
        valuations if isinstance(valuations, Mapping) else dict(enumerate(valuations))
    )
    for bidder, bundle in allocation.bundles.items():
        if seen & bundle:
            raise InvariantViolationError("overlapping bundles in allocation")
        seen |= bundle
        if bundle:
            total += value_query(lookup[bidder], bundle)
    return total


def _value_tables(
    valuations: Sequence[Valuation], m: int
) -> tuple[list[list[int]], int]:
    """Per-bidder bundle-value tables over all 2^m masks, on one integer grid."""
    entries: list[Fraction] = []
    for v in valuations:
        if isinstance(v, XosValuation):
            for c in v.clauses:
                entries.extend(c.item_values)
        else:
            entries.extend(v.item_values)
            entries.append(v.budget)
    scale = common_scale(entries)

    nmask = 1 << m
    tables: list[list[int]] = []
    for v in valuations:
        table = [0] * nmask
        if isinstance(v, XosValuation):
            for clause in v.clauses:
                row = [int(x * scale) for x in clause.item_values]
                acc = [0] * nmask
                for mask in range(1, nmask):
                    low = mask & -mask
                    total = acc[mask ^ low] + row[low.bit_length() - 1]
                    acc[mask] = total
                    if total > table[mask]:
                        table[mask] = total
        else:
            row = [int(x * scale) for x in v.item_values]
            cap = int(v.budget * scale)
            for mask in range(1, nmask):
                low = mask & -mask
                table[mask] = table[mask ^ low] + row[low.bit_length() - 1]
            table = [min(cap, t) for t in table]
        tables.append(table)
    return tables, scale


def _best_completion(
    tables: Sequence[list[int]],
    preassigned: Sequence[int],
    free_bits: int,
    shift: int,
) -> int:
    """Max scaled welfare when bidder i already holds mask ``preassigned[i]``
    and the ``free_bits`` items at bit positions shift..shift+free_bits-1 may
    go to anyone or stay unassigned.

    Classic subset-splitting DP, O(n * 3^free_bits): state S is the set of
    free items already handed out, and each bidder in turn takes some T in S.
    """
    nmask = 1 << free_bits
    prev = [0] * nmask
    for table, held in zip(tables, preassigned):
        base = table[held]
        cur = [0] * nmask
        for s in range(nmask):
            best = prev[s] + base  # this bidder takes no free item
            t = s
            while t:
                total = prev[s ^ t] + table[held | (t << shift)]
                if total > best:
                    best = total
                t = (t - 1) & s
            cur[s] = best
        prev = cur
    return prev[nmask - 1]


def brute_force_opt(
    valuations: Sequence[Valuation],
    m: int,
    *,
    assignment_cap: int = 10**8,
) -> OptimalSolution:
    """Globally optimal allocation of m items among the given bidders.

    Raises ``CapabilityError`` when the assignment space (n+1)^m exceeds the
    cap. n = 0 yields the empty allocation with welfare 0.
    """
    n = len(valuations)
    if (n + 1) ** m > assignment_cap:
        raise CapabilityError(
            f"(n+1)^m = {(n + 1) ** m} assignments exceed the cap {assignment_cap}"
        )
    if n == 0 or m == 0:
        return OptimalSolution(
            Allocation({i: frozenset() for i in range(n)}, {}),
            Fraction(0),
            (Fraction(0),) * m,
            (n,) * m,
        )

    tables, scale = _value_tables(valuations, m)
    opt_scaled = _best_completion(tables, [0] * n, m, 0)

    # Fix the assignment vector item by item: the smallest assignee (bidders
    # first, then "unassigned" = n) that still admits an optimal completion.
    assignment: list[int] = []
    held = [0] * n
    for j in range(m):
        for cand in list(range(n)) + [n]:
            if cand < n:
                held[cand] |= 1 << j
            best = _best_completion(tables, held, m - j - 1, j + 1)
            if best == opt_scaled:
                assignment.append(cand)
                break
            if cand < n:
                held[cand] &= ~(1 << j)
        else:
            raise InvariantViolationError("no completion reaches the optimum")

    bundles = {
        i: frozenset(j for j in range(m) if assignment[j] == i) for i in range(n)
    }
    allocation = Allocation(bundles, {})
    prices = [Fraction(0)] * m
    for i, bundle in bundles.items():
        if bundle:
            for j, q in _bundle_supporting_prices(valuations[i], bundle).items():
                prices[j] = q
    return OptimalSolution(
        allocation,
        Fraction(opt_scaled, scale),
        tuple(prices),
        tuple(assignment),
    )


def _bundle_supporting_prices(
    valuation: Valuation, bundle: frozenset[int]
) -> dict[int, Fraction]:
    """Supporting prices of a winner's bundle.

    XOS valuations expose a maximizing clause directly. For budget-additive
    winners the per-item values are a valid clause when they fit the budget;
    otherwise scaling them down proportionally to sum to the budget yields
    one, and that is what the analysis quantities need.
    """
    if isinstance(valuation, XosValuation):
        return supporting_prices(valuation, bundle)
    assert isinstance(valuation, BudgetAdditiveValuation)
    total = sum((valuation.item_values[j] for j in bundle), Fraction(0))
    if total <= valuation.budget or total == 0:
        return {j: valuation.item_values[j] for j in bundle}
    ratio = valuation.budget / total
    return {j: valuation.item_values[j] * ratio for j in bundle}
