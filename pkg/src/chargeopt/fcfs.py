"""First-come-first-served baseline: greedy power allocation in arrival order.

Prices play no role; each slot hands every present vehicle the most power its
socket, its remaining demand, and the station headroom allow, earlier
arrivals first (ties broken by session id).  Available solar extends the
headroom and offsets the metered grid draw.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import Scenario


@dataclass(frozen=True)
class FcfsResult:
    allocation: np.ndarray  # (N, T) kW
    unmet_energy: np.ndarray  # (N,) kWh
    cost: float  # EUR
    grid_draw: np.ndarray  # (T,) kW


def run_fcfs(sc: Scenario) -> FcfsResult:
    n, T = sc.num_sessions, sc.num_slots
    dt = sc.grid.slot_hours
    eta = sc.station.charge_efficiency
    order = sorted(range(n), key=lambda i: (sc.sessions[i].arrival, sc.sessions[i].id))
    residual = np.array([s.required_energy for s in sc.sessions], dtype=float)
    allocation = np.zeros((n, T))
    draw = np.zeros(T)
    for t in range(T):
        headroom = sc.station.grid_capacity + sc.solar.cap[t]
        for i in order:
            if residual[i] <= 1e-12 or sc.availability[i, t] <= 0 or headroom <= 1e-12:
                continue
            power = min(
                sc.sessions[i].max_power * sc.availability[i, t],
                residual[i] / (eta * dt),
                headroom,
            )
            allocation[i, t] = power
            residual[i] -= eta * power * dt
            headroom -= power
        draw[t] = max(allocation[:, t].sum() - sc.solar.cap[t], 0.0)
    cost = float(sc.prices.nominal @ draw) * dt
    return FcfsResult(allocation, np.maximum(residual, 0.0), cost, draw)
