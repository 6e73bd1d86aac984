"""Instance generation, Monte Carlo experiments, and truthfulness sweeps.

Everything here is deterministic given its seeds: generated instances depend
only on the generator seed, trial tapes are seeded ``base_seed + trial``, and
reports aggregate per-seed results in seed order, so a rerun of the same
configuration reproduces its CSV byte for byte.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .errors import ConfigError, DomainError, InvariantViolationError
from .instances import Instance
from .mechanism import CoinTape, MechanismOutcome, bidder_utility, final_mechanism
from .oracle import brute_force_opt
from .rationals import as_rational, format_rational
from .valuations import Valuation, budget_additive, xos

FAMILIES = ("xos-random", "additive", "budget-additive")


@dataclass(frozen=True)
class GeneratorSpec:
    """Recipe for a random instance.

    Clause entries are drawn log-uniformly from ``value_range`` and quantized
    to two decimals, so supporting prices spread over several geometric bins
    instead of clumping at one scale.
    """

    bidder_count: int
    item_count: int
    family: str = "xos-random"
    clause_count: tuple[int, int] = (2, 3)
    value_range: tuple[Fraction, Fraction] = (Fraction(1), Fraction(100))
    seed: int = 0

    def __post_init__(self) -> None:
        if self.bidder_count < 0 or self.item_count < 0:
            raise ConfigError("bidder and item counts must be nonnegative")
        if self.family not in FAMILIES:
            raise ConfigError(f"family must be one of {FAMILIES}, got {self.family!r}")
        lo, hi = self.clause_count
        if not 1 <= lo <= hi:
            raise ConfigError(f"invalid clause count range {self.clause_count}")
        lo, hi = self.value_range
        if not 0 < lo <= hi:
            raise ConfigError(
                f"value range must satisfy 0 < lo <= hi, got {self.value_range}"
            )

    @staticmethod
    def from_dict(data: dict) -> "GeneratorSpec":
        try:
            return GeneratorSpec(
                bidder_count=data["n"],
                item_count=data["m"],
                family=data.get("family", "xos-random"),
                clause_count=tuple(data.get("clause_count", (2, 3))),
                value_range=tuple(
                    as_rational(x) for x in data.get("value_range", ("1", "100"))
                ),
                seed=data.get("seed", 0),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad generator spec: {exc}") from None


def _log_uniform(rng: random.Random, lo: Fraction, hi: Fraction) -> Fraction:
    """Log-uniform draw from [lo, hi], quantized to cents, exactly in range."""
    if lo == hi:
        return lo
    x = math.exp(rng.uniform(math.log(float(lo)), math.log(float(hi))))
    quantized = Fraction(round(x * 100), 100)
    return min(max(quantized, lo), hi)


def generate_instance(spec: GeneratorSpec) -> Instance:
    rng = random.Random(spec.seed)
    lo, hi = spec.value_range
    m = spec.item_count

    def draw_row() -> list[Fraction]:
        return [_log_uniform(rng, lo, hi) for _ in range(m)]

    valuations: list[Valuation] = []
    for _ in range(spec.bidder_count):
        if spec.family == "additive":
            valuations.append(xos(draw_row()))
        elif spec.family == "xos-random":
            clauses = rng.randint(*spec.clause_count)
            valuations.append(xos(*[draw_row() for _ in range(clauses)]))
        else:
            values = draw_row()
            top = max(values, default=Fraction(0))
            total = sum(values, Fraction(0))
            budget = _log_uniform(rng, top, total) if total > 0 else Fraction(0)
            valuations.append(budget_additive(values, budget))
    return Instance(m, tuple(valuations))


@dataclass(frozen=True)
class ExperimentConfig:
    instance: Instance
    trials: int
    base_seed: int = 0
    measure_ratio: bool = True
    oracle_cap: int = 10**8

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")


@dataclass(frozen=True)
class TrialResult:
    seed: int
    branch: str
    welfare: Fraction
    payments_total: Fraction
    demand_queries: int
    value_queries: int


@dataclass(frozen=True)
class ExperimentReport:
    trials: tuple[TrialResult, ...]
    mean_welfare: Fraction
    opt: Optional[Fraction]
    ratio_of_means: Optional[Fraction]
    ratio_quantiles: dict[str, str] = field(default_factory=dict)

    def to_summary(self) -> dict:
        out = {
            "trials": len(self.trials),
            "mean_welfare": format_rational(self.mean_welfare),
            "opt": None if self.opt is None else format_rational(self.opt),
            "ratio_of_means": None
            if self.ratio_of_means is None
            else format_rational(self.ratio_of_means),
            "ratio_quantiles": self.ratio_quantiles,
            "branch_counts": {},
        }
        for t in self.trials:
            out["branch_counts"][t.branch] = out["branch_counts"].get(t.branch, 0) + 1
        return out


CSV_HEADER = "trial_seed,branch,welfare,payments_total,demand_queries,value_queries"

QUANTILES = (("q00", 0.0), ("q25", 0.25), ("q50", 0.5), ("q75", 0.75), ("q90", 0.9), ("q100", 1.0))


def _quantile(sorted_values: Sequence, level: float):
    if not sorted_values:
        return None
    rank = max(1, math.ceil(level * len(sorted_values)))
    return sorted_values[rank - 1]


def run_trial(instance: Instance, seed: int) -> TrialResult:
    outcome = final_mechanism(instance.bidders(), instance.item_count, CoinTape(seed))
    return TrialResult(
        seed=seed,
        branch=outcome.branch,
        welfare=outcome.welfare,
        payments_total=outcome.allocation.total_payments,
        demand_queries=sum(outcome.demand_queries.values()),
        value_queries=sum(outcome.value_queries.values()),
    )


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run the mechanism over ``trials`` independent tapes and aggregate.

    The optimum comes from the exact oracle; requesting the ratio on an
    instance beyond the oracle cap raises ``CapabilityError`` (rerun with
    ``measure_ratio=False`` for welfare-only reports). Convention: a zero
    optimum reports ratio 1.
    """
    instance = config.instance
    opt: Optional[Fraction] = None
    if config.measure_ratio:
        opt = brute_force_opt(
            list(instance.valuations),
            instance.item_count,
            assignment_cap=config.oracle_cap,
        ).welfare

    trials = [
        run_trial(instance, config.base_seed + k) for k in range(config.trials)
    ]
    mean_welfare = sum((t.welfare for t in trials), Fraction(0)) / len(trials)

    ratio = None
    quantiles: dict[str, str] = {}
    if opt is not None:
        for t in trials:
            if t.welfare > opt:
                raise InvariantViolationError(
                    f"trial {t.seed} produced welfare {t.welfare} above the "
                    f"optimum {opt}; the oracle or mechanism is broken"
                )
        if opt == 0:
            ratio = Fraction(1)
        elif mean_welfare > 0:
            ratio = opt / mean_welfare
        per_trial = sorted(
            (opt / t.welfare if t.welfare > 0 else None for t in trials),
            key=lambda r: (r is None, r),
        )
        for name, level in QUANTILES:
            value = _quantile(per_trial, level)
            if opt == 0:
                quantiles[name] = "1"
            else:
                quantiles[name] = "inf" if value is None else format_rational(value)
    return ExperimentReport(tuple(trials), mean_welfare, opt, ratio, quantiles)


def report_to_csv(report: ExperimentReport) -> str:
    lines = [CSV_HEADER]
    for t in report.trials:
        lines.append(
            ",".join(
                (
                    str(t.seed),
                    t.branch,
                    format_rational(t.welfare),
                    format_rational(t.payments_total),
                    str(t.demand_queries),
                    str(t.value_queries),
                )
            )
        )
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class TruthfulnessReport:
    runs: int
    deviations_checked: int
    violations: tuple[dict, ...]
    query_budget_violations: tuple[dict, ...]

    @property
    def clean(self) -> bool:
        return not self.violations and not self.query_budget_violations


def _deviation(rng: random.Random, m: int, lo: Fraction, hi: Fraction) -> Valuation:
    kind = rng.random()
    if kind < 0.15:
        return xos([0] * m)  # hide entirely
    if kind < 0.55:
        rows = [
            [_log_uniform(rng, lo / 2, hi * 2) for _ in range(m)]
            for _ in range(rng.randint(1, 3))
        ]
        return xos(*rows)
    values = [_log_uniform(rng, lo / 2, hi * 2) for _ in range(m)]
    return budget_additive(values, _log_uniform(rng, lo / 2, hi * m))


def _query_budget_check(outcome: MechanismOutcome, seed: int) -> list[dict]:
    if outcome.params is None:
        return []
    alpha = outcome.params.alpha
    bad = []
    for bidder, count in outcome.demand_queries.items():
        if count > alpha:
            bad.append({"seed": seed, "bidder": bidder, "demand_queries": count})
    if outcome.total_demand_queries > alpha * len(outcome.bidder_ids):
        bad.append({"seed": seed, "total_demand_queries": outcome.total_demand_queries})
    return bad


def truthfulness_report(
    instance: Instance,
    seeds: int,
    deviations: int,
    *,
    deviation_seed: int = 0,
    value_range: tuple[Fraction, Fraction] = (Fraction(1), Fraction(100)),
) -> TruthfulnessReport:
    """Replay every tape against deviating reports; collect any utility gain.

    For each tape seed, each bidder, and each of ``deviations`` random
    alternative reports, the deviator's utility (measured with its true
    valuation) must not exceed its truthful utility -- exactly. Also audits
    the per-bidder demand-query budget of every run touched.
    """
    if instance.bidder_count == 0 or instance.item_count == 0:
        raise DomainError("truthfulness sweep needs at least one bidder and item")
    rng = random.Random(deviation_seed)
    bidders = instance.bidders()
    m = instance.item_count
    lo, hi = value_range
    violations: list[dict] = []
    budget_violations: list[dict] = []
    runs = 0
    checked = 0

    for seed in range(seeds):
        honest = final_mechanism(bidders, m, CoinTape(seed))
        runs += 1
        budget_violations.extend(_query_budget_check(honest, seed))
        base = {
            b: bidder_utility(honest, b, v) for b, v in bidders
        }
        for b, truth in bidders:
            for _ in range(deviations):
                lie = _deviation(rng, m, lo, hi)
                twisted = list(bidders)
                twisted[b] = (b, lie)
                outcome = final_mechanism(twisted, m, CoinTape(seed))
                runs += 1
                checked += 1
                budget_violations.extend(_query_budget_check(outcome, seed))
                utility = bidder_utility(outcome, b, truth)
                if utility > base[b]:
                    violations.append(
                        {
                            "seed": seed,
                            "bidder": b,
                            "gain": format_rational(utility - base[b]),
                        }
                    )
    return TruthfulnessReport(
        runs=runs,
        deviations_checked=checked,
        violations=tuple(violations),
        query_budget_violations=tuple(budget_violations),
    )
