"""Auction primitives: fixed-price, second-price grand bundle, greedy.

These are the three building blocks the mechanism composes. They are pure
functions of an *ordered* bidder list ``[(bidder_id, valuation), ...]``; any
randomization (arrival order, coin flips) happens in the caller.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .errors import DomainError, InvariantViolationError
from .valuations import (
    DEFAULT_DEMAND_CONFIG,
    DemandConfig,
    ItemSet,
    Valuation,
    demand_query,
    value_query,
)

PriceVector = tuple[Fraction, ...]
Bidder = tuple[int, Valuation]


@dataclass(frozen=True)
class Allocation:
    """Disjoint per-bidder bundles plus nonnegative payments.

    Bidders absent from ``bundles`` implicitly hold the empty bundle and pay
    nothing; the accessors below treat both cases alike.
    """

    bundles: Mapping[int, ItemSet]
    payments: Mapping[int, Fraction]

    def __post_init__(self) -> None:
        seen: set[int] = set()
        for bidder, bundle in self.bundles.items():
            overlap = seen & bundle
            if overlap:
                raise InvariantViolationError(
                    f"items {sorted(overlap)} allocated twice (bidder {bidder})"
                )
            seen |= bundle
        for bidder, pay in self.payments.items():
            if pay < 0:
                raise InvariantViolationError(f"bidder {bidder} pays {pay} < 0")

    def bundle(self, bidder: int) -> ItemSet:
        return self.bundles.get(bidder, frozenset())

    def payment(self, bidder: int) -> Fraction:
        return self.payments.get(bidder, Fraction(0))

    @property
    def allocated_items(self) -> ItemSet:
        out: set[int] = set()
        for bundle in self.bundles.values():
            out |= bundle
        return frozenset(out)

    @property
    def total_payments(self) -> Fraction:
        return sum(self.payments.values(), Fraction(0))


EMPTY_ALLOCATION = Allocation({}, {})


@dataclass
class QueryLog:
    """Per-bidder demand/value query tally, filled in by the auctions."""

    demand: Counter = field(default_factory=Counter)
    value: Counter = field(default_factory=Counter)

    def merge(self, other: "QueryLog") -> None:
        self.demand.update(other.demand)
        self.value.update(other.value)

    @property
    def total_demand(self) -> int:
        return sum(self.demand.values())


def fixed_price_auction(
    bidders: Sequence[Bidder],
    items: Iterable[int],
    prices: PriceVector,
    *,
    config: DemandConfig = DEFAULT_DEMAND_CONFIG,
    query_log: Optional[QueryLog] = None,
) -> Allocation:
    """Sequential posted-price sale.

    Bidders arrive in list order; each takes a profit-maximizing bundle from
    the items still available at the posted prices and pays the posted price
    of what it takes. One demand query per bidder. Individually rational by
    construction: the empty bundle is always available.
    """
    remaining = set(items)
    bundles: dict[int, ItemSet] = {}
    payments: dict[int, Fraction] = {}
    for bidder_id, valuation in bidders:
        taken = demand_query(valuation, prices, allowed=remaining, config=config)
        if query_log is not None:
            query_log.demand[bidder_id] += 1
        bundles[bidder_id] = taken
        payments[bidder_id] = sum((prices[j] for j in taken), Fraction(0))
        remaining -= taken
    return Allocation(bundles, payments)


def second_price_grand_bundle(
    bidders: Sequence[Bidder],
    items: Iterable[int],
    *,
    query_log: Optional[QueryLog] = None,
) -> Allocation:
    """Sell all items as one lot to the highest grand-bundle value.

    The winner (lowest index on ties) pays the second-highest grand-bundle
    value, or 0 when alone. One value query per bidder.
    """
    if not bidders:
        raise DomainError("second-price auction needs at least one bidder")
    grand = frozenset(items)
    values = []
    for bidder_id, valuation in bidders:
        values.append(value_query(valuation, grand))
        if query_log is not None:
            query_log.value[bidder_id] += 1
    winner_pos = max(range(len(bidders)), key=lambda i: (values[i], -i))
    price = Fraction(0)
    if len(bidders) > 1:
        price = max(v for i, v in enumerate(values) if i != winner_pos)
    winner_id = bidders[winner_pos][0]
    bundles = {bidder_id: frozenset() for bidder_id, _ in bidders}
    payments = {bidder_id: Fraction(0) for bidder_id, _ in bidders}
    bundles[winner_id] = grand
    payments[winner_id] = price
    return Allocation(bundles, payments)


def greedy_marginal_value(
    bidders: Sequence[Bidder],
    items: Iterable[int],
    *,
    query_log: Optional[QueryLog] = None,
) -> Allocation:
    """Greedy welfare 2-approximation for submodular-like inputs.

    Items are scanned in increasing index order and each goes to the bidder
    whose current bundle gains the most from it (lowest index on ties); items
    with zero marginal value everywhere stay unassigned so the welfare of the
    result is unambiguous. Payments are all zero: the caller only ever uses
    the welfare of this allocation, never the allocation itself.
    """
    bundles: dict[int, set[int]] = {bidder_id: set() for bidder_id, _ in bidders}
    current: dict[int, Fraction] = {bidder_id: Fraction(0) for bidder_id, _ in bidders}
    for j in sorted(set(items)):
        best_gain = Fraction(0)
        best_bidder: Optional[int] = None
        for bidder_id, valuation in bidders:
            gain = value_query(valuation, bundles[bidder_id] | {j}) - current[bidder_id]
            if query_log is not None:
                query_log.value[bidder_id] += 1
            if gain > best_gain:
                best_gain, best_bidder = gain, bidder_id
        if best_bidder is not None:
            bundles[best_bidder].add(j)
            current[best_bidder] += best_gain
    return Allocation(
        {b: frozenset(s) for b, s in bundles.items()},
        {b: Fraction(0) for b in bundles},
    )
