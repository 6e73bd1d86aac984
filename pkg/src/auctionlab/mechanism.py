"""The randomized price-learning mechanism and its top-level wrapper.

Randomness discipline: every coin the mechanism ever flips comes from a
``CoinTape`` -- named, seed-deterministic streams whose draws are consumed in
a fixed order that does not depend on any bidder's report. Fixing the tape
therefore fixes a *deterministic* mechanism, and truthfulness can be tested
by replaying the same tape against deviating reports.

The learning mechanism proper:

1. partition the bidders into beta+1 groups by repeated random prefixes;
2. flip the parity coin and build the modified price tree;
3. starting from the root price vector, run alpha posted-price auctions per
   iteration on that iteration's group (at half prices), then either stop and
   keep one of the alpha outcomes (stop coin, probability 1/beta) or refine
   the vector with the per-item "highest auction that sold it" rule;
4. if no stop coin fired, sell to the last group at the learned leaf prices.

Only the returned auction's allocation and payments count; auctions that ran
but were not selected allocate nothing and charge nothing.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .auction import (
    Allocation,
    Bidder,
    PriceVector,
    QueryLog,
    fixed_price_auction,
    greedy_marginal_value,
    second_price_grand_bundle,
)
from .errors import DomainError, InvariantViolationError
from .oracle import welfare
from .price_tree import (
    EVEN,
    ODD,
    Params,
    PriceTree,
    build_bins,
    build_modified_tree,
    canonical_vectors,
    solve_parameters,
)
from .rationals import RationalLike
from .valuations import DEFAULT_DEMAND_CONFIG, DemandConfig, Valuation, value_query

SECOND_PRICE = "second-price"
LEARNING_STOPPED = "learning-stopped"
LEARNING_COMPLETED = "learning-completed"


class CoinTape:
    """Named, replayable random streams, all derived from one 64-bit seed.

    Each stream is an independent PRNG seeded by hashing (seed, stream name),
    so the draws of one stream do not shift when another stream draws more or
    less. Draw order within each stream is fixed by the mechanism structure,
    never by bidder reports.
    """

    STREAMS = (
        "top-level-branch",
        "stat-sampling",
        "partition-permutations",
        "tree-parity",
        "stop-coin",
        "j-star",
    )

    def __init__(self, seed: int):
        self.seed = seed
        self._rngs: dict[str, random.Random] = {}

    def _stream(self, name: str) -> random.Random:
        if name not in self.STREAMS:
            raise DomainError(f"unknown coin stream {name!r}")
        if name not in self._rngs:
            digest = hashlib.sha256(f"{self.seed}:{name}".encode()).digest()
            self._rngs[name] = random.Random(int.from_bytes(digest[:8], "big"))
        return self._rngs[name]

    def second_price_branch(self) -> bool:
        return self._stream("top-level-branch").random() < 0.5

    def sample_statistics_group(self, count: int) -> list[bool]:
        rng = self._stream("stat-sampling")
        return [rng.random() < 0.5 for _ in range(count)]

    def tree_parity(self) -> str:
        return ODD if self._stream("tree-parity").random() < 0.5 else EVEN

    def partition_permutation(self, ids: Sequence[int]) -> list[int]:
        out = list(ids)
        self._stream("partition-permutations").shuffle(out)
        return out

    def stop_coin(self, beta: int) -> bool:
        return self._stream("stop-coin").random() < 1.0 / beta

    def pick_auction(self, alpha: int) -> int:
        """Uniform auction index in 0..alpha-1."""
        return self._stream("j-star").randrange(alpha)


def partition_bidders(
    ids: Sequence[int], beta: int, tape: CoinTape
) -> list[list[int]]:
    """Split bidder ids into beta+1 groups.

    Each of the first beta rounds permutes the remaining ids uniformly and
    peels off the first floor(remaining / (10*beta)) of them (possibly none);
    whatever is left is the final group. The permuted order is kept: it is
    the arrival order for that group's auctions, and the random arrival is
    what the welfare analysis leans on.
    """
    if beta < 1:
        raise DomainError(f"beta must be >= 1, got {beta}")
    remaining = list(ids)
    groups: list[list[int]] = []
    for _ in range(beta):
        perm = tape.partition_permutation(remaining)
        cut = len(perm) // (10 * beta)
        groups.append(perm[:cut])
        remaining = perm[cut:]
    groups.append(remaining)
    return groups


def price_update(
    allocations: Sequence[Allocation], vectors: Sequence[PriceVector]
) -> PriceVector:
    """Per item, keep the price of the highest-indexed auction that sold it.

    Items no auction sold keep their price from the first vector.
    """
    if len(allocations) != len(vectors):
        raise InvariantViolationError(
            f"{len(allocations)} allocations vs {len(vectors)} price vectors"
        )
    if not vectors:
        raise InvariantViolationError("price update needs at least one auction")
    m = len(vectors[0])
    for v in vectors:
        if len(v) != m:
            raise InvariantViolationError("price vectors disagree on length")
    sold = [a.allocated_items for a in allocations]
    out = []
    for j in range(m):
        pick = 0
        for k, items in enumerate(sold):
            if j in items:
                pick = k
        out.append(vectors[pick][j])
    return tuple(out)


@dataclass(frozen=True)
class IterationRecord:
    """Everything iteration i produced: the alpha refined price vectors and
    the alpha allocations of this iteration's auctions."""

    level: int
    vectors: tuple[PriceVector, ...]
    allocations: tuple[Allocation, ...]


@dataclass(frozen=True)
class MechanismOutcome:
    allocation: Allocation
    welfare: Fraction
    branch: str
    stop_iteration: Optional[int]
    j_star: Optional[int]  # 1-based auction index when stopped
    demand_queries: dict[int, int]
    value_queries: dict[int, int]
    learned_prices: tuple[PriceVector, ...]
    bidder_ids: tuple[int, ...]
    bidders: tuple[Bidder, ...]
    params: Optional[Params] = None
    parity: Optional[str] = None
    tree: Optional[PriceTree] = None
    groups: tuple[tuple[int, ...], ...] = ()
    iterations: tuple[IterationRecord, ...] = ()
    statistics_group: tuple[int, ...] = ()
    statistics_welfare: Optional[Fraction] = None

    @property
    def total_demand_queries(self) -> int:
        return sum(self.demand_queries.values())


def _halve(vector: PriceVector) -> PriceVector:
    return tuple(p / 2 for p in vector)


def _full_allocation(
    selected: Allocation, all_ids: Sequence[int]
) -> Allocation:
    bundles = {b: selected.bundle(b) for b in all_ids}
    payments = {b: selected.payment(b) for b in all_ids}
    return Allocation(bundles, payments)


def price_learning_mechanism(
    bidders: Sequence[Bidder],
    m: int,
    psi_min: RationalLike,
    psi_max: RationalLike,
    tape: CoinTape,
    *,
    alpha: int = 2,
    config: DemandConfig = DEFAULT_DEMAND_CONFIG,
) -> MechanismOutcome:
    """Iterative price learning over [psi_min, psi_max].

    Works for an empty bidder list (every auction is empty). Each bidder is
    demand-queried at most alpha times: alpha times if its group's iteration
    was reached, once for the final group, never otherwise.
    """
    params = solve_parameters(psi_min, psi_max, alpha)
    tree = build_modified_tree(build_bins(params), tape.tree_parity())
    ids = [b for b, _ in bidders]
    by_id = dict(bidders)
    groups = partition_bidders(ids, params.beta, tape)
    items = range(m)

    log = QueryLog()
    prices = tree.root_price_vector(m)
    learned = [prices]
    records: list[IterationRecord] = []
    selected: Optional[Allocation] = None
    branch = LEARNING_COMPLETED
    stop_iteration: Optional[int] = None
    j_star: Optional[int] = None

    for i in range(1, params.beta + 1):
        vectors = canonical_vectors(tree, prices, i)
        group = [(b, by_id[b]) for b in groups[i - 1]]
        allocations = tuple(
            fixed_price_auction(group, items, _halve(v), config=config, query_log=log)
            for v in vectors
        )
        records.append(IterationRecord(i, tuple(vectors), allocations))
        stop = tape.stop_coin(params.beta)
        pick = tape.pick_auction(params.alpha)
        if stop:
            selected = allocations[pick]
            branch = LEARNING_STOPPED
            stop_iteration = i
            j_star = pick + 1
            break
        prices = price_update(allocations, vectors)
        learned.append(prices)

    if selected is None:
        final_group = [(b, by_id[b]) for b in groups[params.beta]]
        selected = fixed_price_auction(
            final_group, items, _halve(prices), config=config, query_log=log
        )

    allocation = _full_allocation(selected, ids)
    return MechanismOutcome(
        allocation=allocation,
        welfare=welfare(allocation, by_id),
        branch=branch,
        stop_iteration=stop_iteration,
        j_star=j_star,
        demand_queries=dict(log.demand),
        value_queries=dict(log.value),
        learned_prices=tuple(learned),
        bidder_ids=tuple(ids),
        bidders=tuple(bidders),
        params=params,
        parity=tree.parity,
        tree=tree,
        groups=tuple(tuple(g) for g in groups),
        iterations=tuple(records),
    )


def final_mechanism(
    bidders: Sequence[Bidder],
    m: int,
    tape: CoinTape,
    *,
    alpha: int = 2,
    config: DemandConfig = DEFAULT_DEMAND_CONFIG,
) -> MechanismOutcome:
    """Top-level mechanism over all bidders.

    Heads: a second-price auction on the grand bundle. Tails: sample a
    statistics group (each bidder independently with probability 1/2), use
    the greedy welfare of that group to pick the price range
    [A/m^2, 8A], and run the learning mechanism on everyone else. The
    statistics group never receives items and never pays. A zero statistic
    (all sampled valuations worthless) degenerates the range to [1, 1].
    """
    if not bidders:
        raise DomainError("the mechanism needs at least one bidder")
    if m < 1:
        raise DomainError("the mechanism needs at least one item")
    ids = [b for b, _ in bidders]

    if tape.second_price_branch():
        log = QueryLog()
        allocation = _full_allocation(
            second_price_grand_bundle(bidders, range(m), query_log=log), ids
        )
        return MechanismOutcome(
            allocation=allocation,
            welfare=welfare(allocation, dict(bidders)),
            branch=SECOND_PRICE,
            stop_iteration=None,
            j_star=None,
            demand_queries={},
            value_queries=dict(log.value),
            learned_prices=(),
            bidder_ids=tuple(ids),
            bidders=tuple(bidders),
        )

    flags = tape.sample_statistics_group(len(bidders))
    stat = [b for b, f in zip(bidders, flags) if f]
    mech = [b for b, f in zip(bidders, flags) if not f]

    log = QueryLog()
    stat_welfare = welfare(
        greedy_marginal_value(stat, range(m), query_log=log), dict(stat)
    )
    if stat_welfare > 0:
        psi_min = stat_welfare / (m * m)
        psi_max = 8 * stat_welfare
    else:
        psi_min = psi_max = Fraction(1)

    inner = price_learning_mechanism(
        mech, m, psi_min, psi_max, tape, alpha=alpha, config=config
    )
    allocation = _full_allocation(inner.allocation, ids)
    value_counts = dict(log.value)
    for b, c in inner.value_queries.items():
        value_counts[b] = value_counts.get(b, 0) + c
    return MechanismOutcome(
        allocation=allocation,
        welfare=inner.welfare,
        branch=inner.branch,
        stop_iteration=inner.stop_iteration,
        j_star=inner.j_star,
        demand_queries=inner.demand_queries,
        value_queries=value_counts,
        learned_prices=inner.learned_prices,
        bidder_ids=tuple(ids),
        bidders=tuple(bidders),
        params=inner.params,
        parity=inner.parity,
        tree=inner.tree,
        groups=inner.groups,
        iterations=inner.iterations,
        statistics_group=tuple(b for b, _ in stat),
        statistics_welfare=stat_welfare,
    )


def bidder_utility(
    outcome: MechanismOutcome, bidder: int, true_valuation: Valuation
) -> Fraction:
    """Quasi-linear utility: true value of the received bundle minus payment."""
    if bidder not in outcome.bidder_ids:
        raise DomainError(f"bidder {bidder} did not participate")
    bundle = outcome.allocation.bundle(bidder)
    return value_query(true_valuation, bundle) - outcome.allocation.payment(bidder)
