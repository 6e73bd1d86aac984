"""Geometric price bins and the nested price-discretization trees.

The price range [psi_min, psi_max] is split into t geometric *bins*, each
spanning a factor gamma. A *price tree* arranges a retained subset of these
bins into a perfect alpha-ary tree with beta+1 levels (root = level 1,
leaves = level beta+1): every level partitions the retained bins at a coarser
or finer granularity, and a node's price is the price of its smallest bin.

*Modified* trees retain only the odd- or even-indexed bins, so prices sitting
in different nodes of the same level are at least a factor gamma apart; the
mechanism flips a coin between the two parities. Retained bins are spread over
the alpha^beta leaf slots by repeated ceil-splits into contiguous blocks; leaf
slots left over are filled with *dummy* bins priced above psi_max so that no
real price ever belongs to them.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import DomainError, InvariantViolationError
from .rationals import RationalLike, as_rational

ODD = "odd"
EVEN = "even"


@dataclass(frozen=True)
class Params:
    """Discretization parameters.

    The constructor checks basic sanity only; the coupled bounds
    20*alpha*beta <= gamma <= 30*alpha*beta and alpha^beta >= t are guaranteed
    for solver output and can be asserted via ``validate_parameter_equations``
    (tests exercise tree mechanics with small hand-picked gammas).
    """

    alpha: int
    beta: int
    gamma: Fraction
    psi_min: Fraction
    psi_max: Fraction

    def __post_init__(self) -> None:
        if self.alpha < 2:
            raise DomainError(f"alpha must be an integer >= 2, got {self.alpha}")
        if self.beta < 1:
            raise DomainError(f"beta must be an integer >= 1, got {self.beta}")
        if self.gamma <= 1:
            raise DomainError(f"gamma must exceed 1, got {self.gamma}")
        if self.psi_min <= 0:
            raise DomainError(f"psi_min must be positive, got {self.psi_min}")
        if self.psi_max < self.psi_min:
            raise DomainError("psi_max must be at least psi_min")

    @property
    def psi_ratio(self) -> Fraction:
        return self.psi_max / self.psi_min

    @property
    def bin_count(self) -> int:
        """t: number of bins covering [psi_min, psi_max] (at least 1)."""
        return max(1, ceil_log(self.gamma, self.psi_ratio))

    @property
    def leaf_capacity(self) -> int:
        return self.alpha**self.beta


def ceil_log(gamma: Fraction, ratio: Fraction) -> int:
    """Smallest k >= 0 with gamma^k >= ratio, by exact repeated multiplication."""
    if ratio <= 0:
        raise DomainError(f"ratio must be positive, got {ratio}")
    k = 0
    power = Fraction(1)
    while power < ratio:
        power *= gamma
        k += 1
    return k


def validate_parameter_equations(params: Params) -> None:
    """Assert the coupled parameter bounds the solver promises."""
    lo = 20 * params.alpha * params.beta
    hi = 30 * params.alpha * params.beta
    if not lo <= params.gamma <= hi:
        raise InvariantViolationError(
            f"gamma {params.gamma} outside [{lo}, {hi}]"
        )
    if params.leaf_capacity < params.bin_count:
        raise InvariantViolationError(
            f"alpha^beta = {params.leaf_capacity} cannot hold t = {params.bin_count} bins"
        )


def solve_parameters(
    psi_min: RationalLike, psi_max: RationalLike, alpha_default: int = 2
) -> Params:
    """Pick (alpha, beta, gamma) for a price range.

    alpha is fixed; beta is the smallest integer >= 1 such that, with
    gamma = 20*alpha*beta, the tree capacity alpha^beta covers the resulting
    bin count. gamma grows with beta, so the bin count shrinks as the
    capacity grows and the search always terminates.
    """
    lo = as_rational(psi_min)
    hi = as_rational(psi_max)
    if lo <= 0:
        raise DomainError(f"psi_min must be positive, got {lo}")
    if hi < lo:
        raise DomainError("psi_max must be at least psi_min")
    ratio = hi / lo
    beta = 1
    while True:
        gamma = Fraction(20 * alpha_default * beta)
        if alpha_default**beta >= ceil_log(gamma, ratio):
            return Params(alpha_default, beta, gamma, lo, hi)
        beta += 1


@dataclass(frozen=True)
class BinCell:
    """One bin: a half-open geometric interval, closed at psi_max for the last
    real bin. ``index`` is the 1-based bin index, None for a dummy cell; dummy
    cells contain no price by definition."""

    index: Optional[int]
    price: Fraction
    upper: Fraction
    closed: bool

    def contains(self, price: Fraction) -> bool:
        if self.index is None:
            return False
        if self.closed:
            return self.price <= price <= self.upper
        return self.price <= price < self.upper


@dataclass(frozen=True)
class Bins:
    """The t real bins partitioning [psi_min, psi_max]."""

    params: Params
    cells: tuple[BinCell, ...]

    @property
    def count(self) -> int:
        return len(self.cells)

    def price(self, index: int) -> Fraction:
        """Price (minimum value) of the 1-based bin ``index``."""
        return self.cells[index - 1].price

    def index_of(self, price: Fraction) -> Optional[int]:
        for cell in self.cells:
            if cell.contains(price):
                return cell.index
        return None

    def retained(self, parity: Optional[str]) -> tuple[BinCell, ...]:
        if parity is None:
            return self.cells
        if parity not in (ODD, EVEN):
            raise DomainError(f"parity must be {ODD!r} or {EVEN!r}, got {parity!r}")
        wanted = 1 if parity == ODD else 0
        return tuple(c for c in self.cells if c.index % 2 == wanted)


def build_bins(params: Params) -> Bins:
    t = params.bin_count
    cells = []
    lower = params.psi_min
    for i in range(1, t + 1):
        if i == t:
            cells.append(BinCell(i, lower, params.psi_max, True))
        else:
            upper = lower * params.gamma
            cells.append(BinCell(i, lower, upper, False))
            lower = upper
    return Bins(params, tuple(cells))


@dataclass(frozen=True)
class TreeNode:
    level: int
    cells: tuple[BinCell, ...]
    children: tuple["TreeNode", ...]

    @property
    def price(self) -> Fraction:
        return self.cells[0].price

    @property
    def bin_indices(self) -> tuple[int, ...]:
        """1-based indices of the real bins under this node."""
        return tuple(c.index for c in self.cells if c.index is not None)

    def belongs(self, price: Fraction) -> bool:
        return any(c.contains(price) for c in self.cells)

    def strongly_belongs(self, price: Fraction) -> bool:
        return price == self.price


def belongs(price: RationalLike, node: TreeNode) -> bool:
    """True iff the price falls inside one of the node's real bins."""
    return node.belongs(as_rational(price))


def strongly_belongs(price: RationalLike, node: TreeNode) -> bool:
    """True iff the price equals the node's own price (its smallest bin's)."""
    return node.strongly_belongs(as_rational(price))


@dataclass(frozen=True)
class PriceTree:
    """A perfect alpha-ary discretization tree over retained bins.

    ``parity`` is None for the tree over all bins, "odd"/"even" for the
    modified trees. ``levels[i]`` holds the nodes of level i+1 left to right.
    """

    params: Params
    parity: Optional[str]
    levels: tuple[tuple[TreeNode, ...], ...]

    @property
    def root(self) -> TreeNode:
        return self.levels[0][0]

    @property
    def leaves(self) -> tuple[TreeNode, ...]:
        return self.levels[-1]

    @property
    def depth(self) -> int:
        return len(self.levels)

    def level(self, index: int) -> tuple[TreeNode, ...]:
        """Nodes of 1-based level ``index`` (1 = root, beta+1 = leaves)."""
        if not 1 <= index <= len(self.levels):
            raise DomainError(f"level {index} outside 1..{len(self.levels)}")
        return self.levels[index - 1]

    def strong_node(self, price: Fraction, level: int) -> Optional[TreeNode]:
        for node in self.level(level):
            if node.strongly_belongs(price):
                return node
        return None

    def containing_node(self, price: Fraction, level: int) -> Optional[TreeNode]:
        for node in self.level(level):
            if node.belongs(price):
                return node
        return None

    def root_price_vector(self, m: int) -> tuple[Fraction, ...]:
        return (self.root.price,) * m


def _spread(
    retained: tuple[BinCell, ...], alpha: int, levels_below: int
) -> list[Optional[BinCell]]:
    """Distribute retained bins over alpha^levels_below leaf slots by repeated
    ceil-splits into contiguous blocks; empty slots become dummies later."""
    if levels_below == 0:
        return [retained[0] if retained else None]
    block = -(-len(retained) // alpha) if retained else 0
    out: list[Optional[BinCell]] = []
    for k in range(alpha):
        piece = retained[k * block : (k + 1) * block]
        out.extend(_spread(piece, alpha, levels_below - 1))
    return out


def _build_tree(bins: Bins, parity: Optional[str]) -> PriceTree:
    params = bins.params
    retained = bins.retained(parity)
    if len(retained) > params.leaf_capacity:
        raise InvariantViolationError(
            f"{len(retained)} retained bins exceed the {params.leaf_capacity} "
            f"leaves of an alpha={params.alpha}, beta={params.beta} tree"
        )
    slots = _spread(retained, params.alpha, params.beta)

    dummy_counter = 0
    leaf_cells: list[BinCell] = []
    for slot in slots:
        if slot is not None:
            leaf_cells.append(slot)
        else:
            dummy_counter += 1
            price = params.psi_max * params.gamma**dummy_counter
            leaf_cells.append(BinCell(None, price, price * params.gamma, False))

    level = tuple(TreeNode(params.beta + 1, (cell,), ()) for cell in leaf_cells)
    levels = [level]
    for depth in range(params.beta, 0, -1):
        grouped = []
        for k in range(0, len(level), params.alpha):
            children = level[k : k + params.alpha]
            cells = tuple(c for child in children for c in child.cells)
            grouped.append(TreeNode(depth, cells, children))
        level = tuple(grouped)
        levels.append(level)
    levels.reverse()
    return PriceTree(params, parity, tuple(levels))


def build_price_tree(bins: Bins) -> PriceTree:
    """The tree over all bins (no parity filtering)."""
    return _build_tree(bins, None)


def build_modified_tree(bins: Bins, parity: str) -> PriceTree:
    """The tree over only the odd- or even-indexed bins.

    With t = 1 the even tree retains nothing and is built purely from dummy
    bins: its prices match no real price, so a mechanism run that drew it
    learns nothing, which the parity coin already accounts for.
    """
    if parity not in (ODD, EVEN):
        raise DomainError(f"parity must be {ODD!r} or {EVEN!r}, got {parity!r}")
    return _build_tree(bins, parity)


def canonical_vectors(
    tree: PriceTree, prices: tuple[Fraction, ...], level: int
) -> list[tuple[Fraction, ...]]:
    """The alpha refinements of a level-``level`` price vector.

    Coordinate j of the k-th result is the price of the k-th child of the
    level-``level`` node that prices[j] strongly belongs to. Every entry of
    ``prices`` must strongly belong to some node of that level, and the level
    must not be the leaf level.
    """
    if level >= tree.depth:
        raise InvariantViolationError(
            f"level {level} has no children to refine into"
        )
    columns: list[tuple[Fraction, ...]] = []
    for j, price in enumerate(prices):
        node = tree.strong_node(price, level)
        if node is None:
            raise InvariantViolationError(
                f"price {price} (coordinate {j}) strongly belongs to no "
                f"level-{level} node"
            )
        columns.append(tuple(child.price for child in node.children))
    return [
        tuple(columns[j][k] for j in range(len(prices)))
        for k in range(tree.params.alpha)
    ]
