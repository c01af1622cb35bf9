"""Online receding-horizon controller with dual re-solve triggers.

Walks the time grid slot by slot: registers arrivals, re-optimizes over the
remaining presence window whenever an arrival or departure occurs or the
periodic interval elapses, applies only the current slot of the latest plan,
and rolls residual demands forward.  Prices and solar over the prediction
horizon are their true future values (no forecaster), which isolates the
scheduling behavior itself.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field
from datetime import timedelta

import numpy as np

from .model import DemandAdjustment, Schedule, solve_offline
from .scenario import DeviationRule, Scenario, SolarSeries, TimeGrid, build_scenario

RESIDUAL_TOL = 1e-9

TRIGGER_ARRIVAL = "arrival"
TRIGGER_DEPARTURE = "departure"
TRIGGER_PERIODIC = "periodic"


@dataclass(frozen=True)
class MpcConfig:
    """Controller knobs: re-solve every ``resolve_interval`` slots; ``gamma=None`` keeps
    the inner optimizer nominal, a number makes it robust with that budget."""

    resolve_interval: int = 1
    gamma: float | None = None
    demand_policy: str = "clamp"

    def __post_init__(self):
        if self.resolve_interval < 1:
            raise ValueError("resolve interval must be at least one slot")


@dataclass(frozen=True)
class SolveEvent:
    slot: int
    trigger: str
    horizon_slots: int
    wall_seconds: float


@dataclass(frozen=True)
class PlanRecord:
    """One optimizer run: planned powers over [start, end) for the listed sessions."""

    start: int
    end: int
    session_indices: tuple[int, ...]
    charging_power: np.ndarray  # (len(sessions), end - start)
    solar_used: np.ndarray  # (end - start,)


@dataclass(frozen=True)
class MpcTrace:
    applied_power: np.ndarray  # (N, T) kW actually commanded
    applied_solar: np.ndarray  # (T,) kW
    solve_events: tuple[SolveEvent, ...]
    residual_demand_history: np.ndarray  # (T, N) kWh after each slot's update
    total_cost: float  # EUR at realized prices
    unmet_energy: np.ndarray  # (N,) kWh still owed at the end
    demand_adjustments: tuple[tuple[int, DemandAdjustment], ...]  # (slot, adjustment)
    plans: tuple[PlanRecord, ...]


def detect_trigger(k: int, last_solve: float, events_at_k, cfg: MpcConfig) -> str | None:
    """Why slot ``k`` re-solves, or ``None``; events dominate the periodic label."""
    if TRIGGER_ARRIVAL in events_at_k:
        return TRIGGER_ARRIVAL
    if TRIGGER_DEPARTURE in events_at_k:
        return TRIGGER_DEPARTURE
    if k - last_solve >= cfg.resolve_interval:
        return TRIGGER_PERIODIC
    return None


def _window_scenario(sc: Scenario, members, k: int, end: int, residual) -> Scenario:
    grid = TimeGrid(
        sc.grid.slot_start(k), end - k, sc.grid.slot_hours
    )
    sessions = []
    for i in members:
        s = sc.sessions[i]
        sessions.append(
            dataclasses.replace(
                s,
                arrival=max(s.arrival, grid.start),
                departure=min(s.departure, grid.end),
                required_energy=float(residual[i]),
            )
        )
    return build_scenario(
        sessions,
        sc.prices.nominal[k:end],
        SolarSeries(sc.solar.cap[k:end]),
        grid,
        sc.station,
        DeviationRule.fixed(sc.prices.deviation_bound[k:end]),
    )


def run_online(sc: Scenario, cfg: MpcConfig) -> MpcTrace:
    """Simulate the controller over the scenario's whole grid.

    Residual demands always track true delivered energy; when the demand
    policy clamps an unreachable requirement, the clamp applies to that
    solve's input only and is recorded, so the final unmet energy is honest.
    """
    n, T = sc.num_sessions, sc.num_slots
    dt = sc.grid.slot_hours
    eta = sc.station.charge_efficiency

    first_slot = np.full(n, -1, dtype=int)
    last_slot = np.full(n, -1, dtype=int)
    for i in range(n):
        present = np.nonzero(sc.availability[i] > 0)[0]
        first_slot[i], last_slot[i] = int(present[0]), int(present[-1])

    demand = np.array([s.required_energy for s in sc.sessions], dtype=float)
    residual = np.zeros(n)
    applied = np.zeros((n, T))
    applied_solar = np.zeros(T)
    history = np.zeros((T, n))
    events: list[SolveEvent] = []
    adjustments: list[tuple[int, DemandAdjustment]] = []
    plans: list[PlanRecord] = []
    plan: PlanRecord | None = None
    last_solve = -np.inf
    total_cost = 0.0

    for k in range(T):
        arrivals = np.nonzero(first_slot == k)[0]
        residual[arrivals] = demand[arrivals]
        departures = np.nonzero(last_slot == k - 1)[0]
        members = [
            i for i in range(n) if sc.availability[i, k] > 0 and residual[i] > RESIDUAL_TOL
        ]
        labels = set()
        if len(arrivals):
            labels.add(TRIGGER_ARRIVAL)
        if len(departures):
            labels.add(TRIGGER_DEPARTURE)
        trigger = detect_trigger(k, last_solve, labels, cfg)
        if trigger is not None and members:
            end = int(max(last_slot[i] for i in members)) + 1
            window = _window_scenario(sc, members, k, end, residual)
            t0 = time.perf_counter()
            schedule, adjs = solve_offline(window, cfg.gamma, cfg.demand_policy)
            wall = time.perf_counter() - t0
            events.append(SolveEvent(k, trigger, end - k, wall))
            adjustments.extend((k, a) for a in adjs)
            plan = PlanRecord(
                k, end, tuple(members), schedule.charging_power, schedule.solar_used
            )
            plans.append(plan)
            last_solve = k

        if plan is not None and plan.start <= k < plan.end:
            col = k - plan.start
            applied_solar[k] = plan.solar_used[col]
            in_plan = {i: row for i, row in zip(plan.session_indices, plan.charging_power)}
            for i in members:
                if i in in_plan:
                    applied[i, k] = in_plan[i][col]
        for i in members:
            residual[i] = max(0.0, residual[i] - eta * applied[i, k] * dt)
        history[k] = residual
        total_cost += (
            sc.prices.nominal[k] * max(applied[:, k].sum() - applied_solar[k], 0.0) * dt
        )

    return MpcTrace(
        applied_power=applied,
        applied_solar=applied_solar,
        solve_events=tuple(events),
        residual_demand_history=history,
        total_cost=float(total_cost),
        unmet_energy=residual.copy(),
        demand_adjustments=tuple(adjustments),
        plans=tuple(plans),
    )


def trace_to_json_dict(trace: MpcTrace) -> dict:
    """JSON-serializable view of a trace (plans kept out; see events CSV for solves)."""
    return {
        "total_cost": trace.total_cost,
        "applied_power": trace.applied_power.tolist(),
        "applied_solar": trace.applied_solar.tolist(),
        "unmet_energy": trace.unmet_energy.tolist(),
        "residual_demand_history": trace.residual_demand_history.tolist(),
        "solve_events": [
            {
                "slot": e.slot,
                "trigger": e.trigger,
                "horizon_slots": e.horizon_slots,
                "wall_seconds": e.wall_seconds,
            }
            for e in trace.solve_events
        ],
        "demand_adjustments": [
            {
                "slot": slot,
                "session_id": a.session_id,
                "required": a.required,
                "deliverable": a.deliverable,
            }
            for slot, a in trace.demand_adjustments
        ],
    }


def write_events_csv(trace: MpcTrace, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["slot", "trigger", "horizon_slots", "wall_seconds"])
        for e in trace.solve_events:
            writer.writerow([e.slot, e.trigger, e.horizon_slots, repr(e.wall_seconds)])
