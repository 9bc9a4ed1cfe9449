"""Consequence-function unit costs and Monte Carlo repair-cost simulation.

Each fragility entry maps a damage state to a repair consequence: a unit
cost that decreases linearly from cost_at_min_qty down to cost_at_max_qty
as the repair quantity grows (economies of scale), plus a dispersion and a
distribution family for sampling. Building totals are simulated per
realization, each realization drawing from its own counter-derived random
stream so that results are reproducible and independent of evaluation
order across realizations.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .fusion import DamageState

DISTRIBUTIONS = ("lognormal", "normal")


@dataclass(frozen=True)
class DamageConsequence:
    """Repair consequence for one damage state of one component type.

    cost_at_min_qty is the unit cost with no economies of scale (small
    repair quantities) and cost_at_max_qty the fully discounted unit cost,
    so cost_at_min_qty >= cost_at_max_qty. dispersion is the standard
    deviation of log cost for the lognormal family, or the coefficient of
    variation for the normal family.
    """

    cost_at_min_qty: float
    cost_at_max_qty: float
    dispersion: float
    distribution: str = "lognormal"

    def __post_init__(self) -> None:
        if self.cost_at_max_qty < 0:
            raise InputError(f"costs must be >= 0, got {self.cost_at_max_qty}")
        if self.cost_at_min_qty < self.cost_at_max_qty:
            raise InputError(
                f"cost_at_min_qty {self.cost_at_min_qty} must be >= "
                f"cost_at_max_qty {self.cost_at_max_qty}"
            )
        if self.dispersion < 0:
            raise InputError(f"dispersion must be >= 0, got {self.dispersion}")
        if self.distribution not in DISTRIBUTIONS:
            raise InputError(
                f"distribution must be one of {DISTRIBUTIONS}, got {self.distribution!r}"
            )


@dataclass(frozen=True)
class FragilityEntry:
    """Per-damage-state repair consequences for one component type."""

    component_id: str
    q_min: float
    q_max: float
    consequences: Mapping[DamageState, DamageConsequence]

    def __post_init__(self) -> None:
        if not self.q_min < self.q_max:
            raise InputError(
                f"q_min {self.q_min} must be strictly below q_max {self.q_max}"
            )
        object.__setattr__(self, "consequences", dict(self.consequences))
        ds0 = self.consequences.get(DamageState.DS0)
        if ds0 is not None and (
            ds0.cost_at_min_qty != 0 or ds0.cost_at_max_qty != 0 or ds0.dispersion != 0
        ):
            raise InputError("the DS0 consequence must have zero costs and dispersion")


@dataclass(frozen=True)
class PerformanceGroup:
    """A set of identical components sharing one fragility entry.

    quantity is the repair quantity used to pick the unit cost on the
    consequence function, in the fragility entry's quantity units.
    """

    fragility_id: str
    quantity: float
    component_states: tuple[DamageState, ...]

    def __post_init__(self) -> None:
        if not self.quantity > 0:
            raise InputError(f"quantity must be positive, got {self.quantity}")


@dataclass(eq=False)
class LossCurve:
    """Simulated repair-cost realizations, sorted ascending."""

    realizations: np.ndarray
    fitted_median: float  # exp(mean(log cost)); nan when a realization is <= 0
    fitted_dispersion: float  # sample stdev of log cost; nan likewise
    seed: int


def unit_cost(entry: FragilityEntry, ds: DamageState, quantity: float) -> float:
    """Unit repair cost from the consequence function, linear between knees.

    Quantities at or below q_min pay cost_at_min_qty, quantities at or above
    q_max pay cost_at_max_qty, and costs interpolate linearly in between,
    so the function is continuous and non-increasing in quantity.
    """
    if not quantity > 0:
        raise InputError(f"quantity must be positive, got {quantity}")
    record = entry.consequences.get(ds)
    if record is None:
        raise InputError(
            f"fragility entry '{entry.component_id}' has no consequence for {ds.name}"
        )
    if quantity <= entry.q_min:
        return record.cost_at_min_qty
    if quantity >= entry.q_max:
        return record.cost_at_max_qty
    fraction = (quantity - entry.q_min) / (entry.q_max - entry.q_min)
    return record.cost_at_min_qty + fraction * (
        record.cost_at_max_qty - record.cost_at_min_qty
    )


def realization_stream(seed: int, index: int) -> np.random.Generator:
    """Independent random stream for one realization.

    The Philox counter is derived from (seed, index), so any realization's
    stream can be reconstructed in isolation and parallel or serial
    evaluation orders draw identical samples.
    """
    if seed < 0:
        raise InputError(f"seed must be >= 0, got {seed}")
    if index < 0:
        raise InputError(f"realization index must be >= 0, got {index}")
    bit_generator = np.random.Philox(key=seed % (1 << 128), counter=index << 128)
    return np.random.Generator(bit_generator)


def sample_cost(
    central: float,
    dispersion: float,
    distribution: str,
    rng: np.random.Generator,
) -> float:
    """Draw one repair cost around a central value.

    Zero dispersion returns the central value exactly and consumes no
    randomness. The lognormal family treats the central value as the median
    theta and draws theta * exp(dispersion * z). The normal family uses
    mean central and standard deviation dispersion * central, resampling
    any negative draw.
    """
    if central < 0:
        raise InputError(f"central cost must be >= 0, got {central}")
    if dispersion < 0:
        raise InputError(f"dispersion must be >= 0, got {dispersion}")
    if distribution not in DISTRIBUTIONS:
        raise InputError(
            f"distribution must be one of {DISTRIBUTIONS}, got {distribution!r}"
        )
    if dispersion == 0.0:
        return float(central)
    if distribution == "lognormal":
        return float(central * math.exp(dispersion * rng.standard_normal()))
    while True:
        draw = float(rng.normal(central, dispersion * central))
        if draw >= 0.0:
            return draw


def simulate_total(
    groups: Sequence[PerformanceGroup],
    db: Mapping[str, FragilityEntry],
    realizations: int,
    seed: int,
    replacement: float | None = None,
    costs_are_means: bool = False,
) -> LossCurve:
    """Monte Carlo total repair cost over all groups and components.

    Passing a replacement cost marks the building collapsed: every
    realization then equals that cost and no sampling occurs. Otherwise
    realization r sums one draw per component, tied to the stream derived
    from (seed, r). With costs_are_means set, lognormal central values are
    interpreted as distribution means and converted to medians via
    value / exp(dispersion^2 / 2) before sampling.
    """
    if realizations < 1:
        raise InputError(f"realizations must be >= 1, got {realizations}")
    if seed < 0:
        raise InputError(f"seed must be >= 0, got {seed}")

    if replacement is not None:
        if replacement < 0:
            raise InputError(f"replacement cost must be >= 0, got {replacement}")
        totals = np.full(realizations, float(replacement), dtype=np.float64)
        return _fit_curve(totals, seed)

    plan: list[tuple[float, float, str]] = []
    for group in groups:
        entry = db.get(group.fragility_id)
        if entry is None:
            raise InputError(f"fragility id '{group.fragility_id}' not in the database")
        for ds in group.component_states:
            record = entry.consequences.get(ds)
            if record is None:
                raise InputError(
                    f"fragility entry '{group.fragility_id}' has no consequence "
                    f"for {ds.name}"
                )
            central = unit_cost(entry, ds, group.quantity)
            if costs_are_means and record.distribution == "lognormal":
                central = central / math.exp(record.dispersion**2 / 2.0)
            plan.append((central, record.dispersion, record.distribution))

    totals = np.empty(realizations, dtype=np.float64)
    for r in range(realizations):
        rng = realization_stream(seed, r)
        total = 0.0
        for central, dispersion, distribution in plan:
            total += sample_cost(central, dispersion, distribution, rng)
        totals[r] = total
    return _fit_curve(totals, seed)


def _fit_curve(totals: np.ndarray, seed: int) -> LossCurve:
    ordered = np.sort(totals)
    if ordered[0] > 0:
        logs = np.log(ordered)
        fitted_median = float(np.exp(logs.mean()))
        fitted_dispersion = float(logs.std(ddof=1)) if logs.size > 1 else 0.0
    else:
        fitted_median = float("nan")
        fitted_dispersion = float("nan")
    return LossCurve(
        realizations=ordered,
        fitted_median=fitted_median,
        fitted_dispersion=fitted_dispersion,
        seed=seed,
    )


def quantile(curve: LossCurve, p: float) -> float:
    """Empirical quantile with linear interpolation between order statistics."""
    if not 0.0 < p < 1.0:
        raise InputError(f"quantile level must lie in (0, 1), got {p}")
    return float(np.quantile(curve.realizations, p))
