"""Worst-case cost under the deviation budget, independent of the LP route.

For a fixed purchase profile the adversary raises prices where it hurts most:
the worst case is a continuous knapsack over the per-slot exposure terms.
This module evaluates it directly (sort, take the largest terms up to the
budget) so schedules can be scored without trusting the dual reformulation,
and provides the cross-check that both routes agree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lp import GREATER_EQUAL, Constraint, LinearProgram, LpSolverError, LpStatus, solve_lp


class DualityGapError(Exception):
    """Knapsack oracle and dual LP disagree beyond tolerance."""


@dataclass(frozen=True)
class UncertaintyBudget:
    """Deviation budget ``gamma`` with per-slot price deviation bounds (EUR/kWh)."""

    gamma: float
    deviation_bound: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "deviation_bound", np.asarray(self.deviation_bound, dtype=float)
        )
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if np.any(self.deviation_bound < 0):
            raise ValueError("deviation bounds must be nonnegative")


def _exposure_terms(net_purchase, dt, budget: UncertaintyBudget) -> np.ndarray:
    purchase = np.asarray(net_purchase, dtype=float)
    if purchase.shape != budget.deviation_bound.shape:
        raise ValueError("net purchase and deviation bounds differ in length")
    if np.any(purchase < 0):
        raise ValueError("net purchase must be nonnegative")
    if dt <= 0:
        raise ValueError("slot length must be positive")
    return budget.deviation_bound * purchase * dt


def worst_case_extra_cost(net_purchase, dt: float, budget: UncertaintyBudget) -> float:
    """Maximal adversarial extra cost for a fixed purchase profile (EUR).

    Continuous knapsack: sort the per-slot exposures descending, take the
    ``floor(gamma)`` largest in full plus the fractional remainder of the
    next.  Supports fractional budgets.
    """
    terms = _exposure_terms(net_purchase, dt, budget)
    t = len(terms)
    if budget.gamma == 0 or t == 0:
        return 0.0
    if budget.gamma >= t:
        return float(terms.sum())
    order = np.sort(terms)[::-1]
    whole = int(np.floor(budget.gamma))
    frac = budget.gamma - whole
    total = float(order[:whole].sum())
    if frac > 0:
        total += frac * float(order[whole])
    return total


def worst_case_total_cost(schedule, prices, dt: float, budget: UncertaintyBudget) -> float:
    """Nominal cost plus the worst-case premium, both recomputed from the schedule."""
    purchase = np.asarray(schedule.net_purchase, dtype=float)
    nominal = float(np.asarray(prices.nominal) @ purchase) * dt
    return nominal + worst_case_extra_cost(purchase, dt, budget)


def verify_dual_equivalence(
    net_purchase, dt: float, budget: UncertaintyBudget, rtol: float = 1e-6
) -> float:
    """Check the dual route against the knapsack oracle; return the residual.

    Solves ``min gamma*lam + sum(mu)`` with ``mu[t] + lam >= exposure[t]``
    through the LP engine and compares with :func:`worst_case_extra_cost`.
    Raises :class:`DualityGapError` if the residual exceeds
    ``rtol * (1 + oracle)``.
    """
    terms = _exposure_terms(net_purchase, dt, budget)
    oracle = worst_case_extra_cost(net_purchase, dt, budget)
    t = len(terms)
    obj = np.concatenate([[budget.gamma], np.ones(t)])
    bounds = np.zeros((t + 1, 2))
    bounds[:, 1] = np.inf
    rows = [
        Constraint((0, k + 1), (1.0, 1.0), GREATER_EQUAL, float(terms[k])) for k in range(t)
    ]
    sol = solve_lp(LinearProgram(t + 1, obj, bounds, rows))
    if sol.status is not LpStatus.OPTIMAL:
        raise LpSolverError(f"protection dual LP ended {sol.status.value}")
    residual = abs(sol.objective_value - oracle)
    if residual > rtol * (1 + oracle):
        raise DualityGapError(
            f"dual optimum {sol.objective_value!r} vs oracle {oracle!r} (residual {residual:.3e})"
        )
    return residual
