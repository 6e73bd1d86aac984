"""Diagnostic reconstruction of the welfare analysis, run against the oracle.

Given a learning-mechanism run, the oracle's optimal allocation O with
supporting prices q, and the modified tree the run used, this module chases
the analysis definitions directly:

* *star items*: items allocated by O whose supporting price lands in one of
  the tree's retained bins (the wrong-parity half is invisible to this run);
  ``q_star`` zeroes q outside them.
* ``q_vector(i)``: ``q_star`` with items owned by the groups already consumed
  (groups 1..i-1) zeroed out.
* *refinement-correct through i*: star items whose ``q_star`` price sits in
  the same level-k node as the learned price vector's k-th coordinate for
  every k <= i. The *correctly priced* set C(i) additionally drops items
  whose ``q_vector(i)`` price is zero, so every member satisfies
  learned price <= supporting price.
* the demand partition D(i)_j: correctly priced items split by which child of
  their level-i node holds their supporting price.

Two kinds of diagnostics are produced. The *overestimate accounting* bounds
how much correctly-priced mass the alpha auctions of one iteration can push
past its true price; evaluated against the refinement-correct set *before*
group removal it holds deterministically for every run (group removal is a
separate, in-expectation effect), so it is asserted. The
*learnable-or-allocatable* dichotomy is a statement about expectations, so
it is estimated over many seeds and reported with confidence intervals,
never asserted.

For a run that stopped mid-way, the price vector the stopped iteration would
have produced is reconstructed from its recorded auctions so that the
iteration's diagnostics still exist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import DomainError, InvariantViolationError
from .mechanism import MechanismOutcome, price_update
from .oracle import OptimalSolution, welfare
from .price_tree import PriceTree, TreeNode

ItemSet = frozenset[int]


@dataclass(frozen=True)
class LevelTrace:
    """Per-level analysis state (levels 1..beta+1, as far as the run got)."""

    level: int
    q_vector: tuple[Fraction, ...]
    refinement_correct: ItemSet
    correct: ItemSet
    correct_mass: Fraction


@dataclass(frozen=True)
class IterationDiagnostics:
    """Per-iteration quantities (iterations carry the alpha auctions)."""

    level: int
    demand_partition: tuple[ItemSet, ...]
    sold_in_partition: tuple[ItemSet, ...]
    auction_welfares: tuple[Fraction, ...]
    learnable_change: Fraction
    learnable_realized: bool
    allocatable_realized: bool
    overestimate_ok: bool


@dataclass(frozen=True)
class AnalysisTrace:
    star_items: ItemSet
    q_star: tuple[Fraction, ...]
    opt_welfare: Fraction
    levels: tuple[LevelTrace, ...]
    iterations: tuple[IterationDiagnostics, ...]

    def level(self, index: int) -> LevelTrace:
        return self.levels[index - 1]


def build_trace(
    run: MechanismOutcome, optimal: OptimalSolution, tree: PriceTree
) -> AnalysisTrace:
    """Chase the analysis definitions for one recorded run.

    ``optimal`` must have been computed over ``run.bidders`` in run order
    (oracle bidder k is the k-th participant). Items the optimum assigns to
    bidders outside the run's groups (possible when tracing a top-level run
    whose statistics group is ineligible) are never star items. The three
    structural invariants (nested correct sets, partitioned demand sets,
    learned price below supporting price on correct items) and the per-run
    overestimate inequality are verified here and raise on violation.
    """
    if not run.iterations or run.params is None:
        raise DomainError(
            "the run carries no learning history (second-price branch?)"
        )
    params = run.params
    m = len(optimal.supporting_prices)
    n = len(run.bidders)

    # Map each item to the group (1-based) of its optimal owner.
    group_of: dict[int, int] = {}
    for gi, group in enumerate(run.groups, start=1):
        for b in group:
            group_of[b] = gi
    owner_group = [
        group_of.get(run.bidders[optimal.assignment[j]][0])
        if optimal.assignment[j] < n
        else None
        for j in range(m)
    ]

    q = optimal.supporting_prices
    star = frozenset(
        j for j in range(m) if owner_group[j] is not None and tree.root.belongs(q[j])
    )
    q_star = tuple(q[j] if j in star else Fraction(0) for j in range(m))

    # Learned price vectors, extended past a stop coin for diagnostics.
    prices = list(run.learned_prices)
    if len(prices) == len(run.iterations):
        last = run.iterations[-1]
        prices.append(price_update(last.allocations, last.vectors))

    def q_vector(level: int) -> tuple[Fraction, ...]:
        return tuple(
            q_star[j]
            if owner_group[j] is not None and owner_group[j] >= level
            else Fraction(0)
            for j in range(m)
        )

    levels: list[LevelTrace] = []
    refined = star
    strong_nodes: list[dict[int, TreeNode]] = []
    for level in range(1, len(prices) + 1):
        vector = prices[level - 1]
        nodes = {}
        for j in range(m):
            node = tree.strong_node(vector[j], level)
            if node is None:
                raise InvariantViolationError(
                    f"learned price {vector[j]} is not a level-{level} price"
                )
            nodes[j] = node
        strong_nodes.append(nodes)
        refined = frozenset(j for j in refined if nodes[j].belongs(q_star[j]))
        qv = q_vector(level)
        correct = frozenset(j for j in refined if qv[j] != 0)
        for j in correct:
            if not vector[j] <= qv[j]:
                raise InvariantViolationError(
                    f"correctly priced item {j} has learned price {vector[j]} "
                    f"above supporting price {qv[j]}"
                )
        if levels and not correct <= levels[-1].correct:
            raise InvariantViolationError("correct sets are not nested")
        levels.append(
            LevelTrace(
                level=level,
                q_vector=qv,
                refinement_correct=refined,
                correct=correct,
                correct_mass=sum((qv[j] for j in correct), Fraction(0)),
            )
        )

    iterations: list[IterationDiagnostics] = []
    for record in run.iterations:
        i = record.level
        this, nxt = levels[i - 1], levels[i]
        nodes = strong_nodes[i - 1]

        partition: list[set[int]] = [set() for _ in range(params.alpha)]
        for j in this.correct:
            children = nodes[j].children
            homes = [k for k, child in enumerate(children) if child.belongs(q_star[j])]
            if len(homes) != 1:
                raise InvariantViolationError(
                    f"item {j} belongs to {len(homes)} children of its node"
                )
            partition[homes[0]].add(j)
        if frozenset().union(*partition) != this.correct or sum(
            len(p) for p in partition
        ) != len(this.correct):
            raise InvariantViolationError("demand sets do not partition")

        sold = []
        welfares = []
        for k, alloc in enumerate(record.allocations):
            sold.append(frozenset(partition[k]) & alloc.allocated_items)
            welfares.append(welfare(alloc, dict(run.bidders)))

        sold_mass = sum(
            (this.q_vector[j] for k in range(params.alpha) for j in sold[k]),
            Fraction(0),
        )
        kept_mass = sum(
            (this.q_vector[j] for j in nxt.refinement_correct), Fraction(0)
        )
        bound = optimal.welfare / (10 * params.beta)
        overestimate_ok = kept_mass >= sold_mass - bound
        if not overestimate_ok:
            raise InvariantViolationError(
                f"iteration {i} overestimate accounting failed: kept {kept_mass} "
                f"< sold {sold_mass} - {bound}"
            )

        change = nxt.correct_mass - this.correct_mass
        learnable = change >= -optimal.welfare / (3 * params.beta)
        mean_welfare = sum(welfares, Fraction(0)) / params.alpha
        allocatable = mean_welfare >= optimal.welfare / (
            200 * params.alpha * params.beta**2
        )
        iterations.append(
            IterationDiagnostics(
                level=i,
                demand_partition=tuple(frozenset(p) for p in partition),
                sold_in_partition=tuple(sold),
                auction_welfares=tuple(welfares),
                learnable_change=change,
                learnable_realized=learnable,
                allocatable_realized=allocatable,
                overestimate_ok=overestimate_ok,
            )
        )

    return AnalysisTrace(
        star_items=star,
        q_star=q_star,
        opt_welfare=optimal.welfare,
        levels=tuple(levels),
        iterations=tuple(iterations),
    )


@dataclass(frozen=True)
class IterationBranchStats:
    iteration: int
    samples: int
    learnable_mean_change: float
    learnable_threshold: float
    learnable_ci_low: float
    learnable_holds_95: bool
    allocatable_mean: float
    allocatable_threshold: float
    allocatable_ci_low: float
    allocatable_holds_95: bool

    @property
    def either_holds_95(self) -> bool:
        return self.learnable_holds_95 or self.allocatable_holds_95


@dataclass(frozen=True)
class BranchReport:
    iterations: tuple[IterationBranchStats, ...]
    seed_count: int
    power_warning: bool


def _ci_low(values: Sequence[float]) -> float:
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean - 1.96 * math.sqrt(var / n)


def check_learnable_or_allocatable(
    traces: Sequence[AnalysisTrace],
    opt: Fraction,
    alpha: int,
    beta: int,
    *,
    min_seeds: int = 100,
) -> BranchReport:
    """Monte Carlo estimate of the learnable-or-allocatable dichotomy.

    All traces must come from the same instance (same ``opt``). Expectations
    are estimated per iteration over the traces that reached it; the verdicts
    use one-sided 95% normal intervals. This is a diagnostic report --
    sampling noise cannot refute a disjunction of expectations, so nothing
    here asserts.
    """
    stats = []
    for i in range(1, beta + 1):
        changes = []
        per_auction_welfares = []
        for trace in traces:
            for diag in trace.iterations:
                if diag.level == i:
                    changes.append(float(diag.learnable_change))
                    per_auction_welfares.extend(
                        float(w) for w in diag.auction_welfares
                    )
        if not changes:
            continue
        learn_thresh = float(-opt / (3 * beta))
        alloc_thresh = float(opt / (200 * alpha * beta**2))
        learn_low = _ci_low(changes)
        alloc_low = _ci_low(per_auction_welfares)
        stats.append(
            IterationBranchStats(
                iteration=i,
                samples=len(changes),
                learnable_mean_change=sum(changes) / len(changes),
                learnable_threshold=learn_thresh,
                learnable_ci_low=learn_low,
                learnable_holds_95=learn_low >= learn_thresh,
                allocatable_mean=sum(per_auction_welfares)
                / len(per_auction_welfares),
                allocatable_threshold=alloc_thresh,
                allocatable_ci_low=alloc_low,
                allocatable_holds_95=alloc_low >= alloc_thresh,
            )
        )
    return BranchReport(
        iterations=tuple(stats),
        seed_count=len(traces),
        power_warning=len(traces) < min_seeds,
    )
