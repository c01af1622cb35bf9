"""Controller tests: offline equivalence, triggers, plan consistency, residuals."""

import dataclasses
from datetime import datetime, timezone

import numpy as np
import pytest

from chargeopt.model import DemandInfeasibleError, solve_offline
from chargeopt.mpc import (
    MpcConfig,
    detect_trigger,
    run_online,
    trace_to_json_dict,
)
from chargeopt.scenario import SolarSeries, StationConfig, TimeGrid, build_scenario
from chargeopt.synth import random_scenario

UTC = timezone.utc


class TestDetectTrigger:
    CFG = MpcConfig(resolve_interval=4)

    def test_periodic_when_interval_elapsed(self):
        assert detect_trigger(8, 4, set(), self.CFG) == "periodic"

    def test_arrival_dominates(self):
        assert detect_trigger(2, 0, {"arrival"}, self.CFG) == "arrival"
        assert detect_trigger(2, 0, {"arrival", "departure"}, self.CFG) == "arrival"

    def test_departure_between_intervals(self):
        assert detect_trigger(2, 0, {"departure"}, self.CFG) == "departure"

    def test_none_when_quiet(self):
        assert detect_trigger(2, 0, set(), self.CFG) is None

    def test_first_slot_fires_periodic(self):
        assert detect_trigger(0, -np.inf, set(), self.CFG) == "periodic"


class TestOnlineRun:
    def test_matches_offline_when_all_arrive_at_start(self):
        for seed in range(6):
            sc = random_scenario(4, seed=seed, all_at_start=True)
            trace = run_online(sc, MpcConfig(resolve_interval=10 * sc.num_slots))
            offline, _ = solve_offline(sc)
            assert trace.total_cost == pytest.approx(offline.nominal_cost, rel=1e-6)
            assert trace.unmet_energy.sum() == pytest.approx(0.0, abs=1e-6)

    def test_empty_scenario(self):
        grid = TimeGrid(datetime(2019, 6, 3, tzinfo=UTC), 6, 1.0)
        sc = build_scenario([], np.full(6, 0.1), SolarSeries(np.zeros(6)), grid, StationConfig())
        trace = run_online(sc, MpcConfig())
        assert trace.total_cost == 0.0
        assert trace.solve_events == ()
        assert trace.applied_power.shape == (0, 6)

    def test_single_midday_arrival_single_solve(self):
        sc = random_scenario(1, seed=42)
        trace = run_online(sc, MpcConfig(resolve_interval=10 * sc.num_slots))
        kinds = [(e.slot, e.trigger) for e in trace.solve_events]
        assert len(kinds) == 1
        arrival_slot = int(np.nonzero(sc.availability[0] > 0)[0][0])
        assert kinds[0] == (arrival_slot, "arrival")

    def test_periodic_resolves_with_small_interval(self):
        sc = random_scenario(1, seed=42)
        trace = run_online(sc, MpcConfig(resolve_interval=1))
        triggers = {e.trigger for e in trace.solve_events}
        assert "periodic" in triggers

    def test_applied_power_between_solves_comes_from_latest_plan(self):
        sc = random_scenario(3, seed=9, all_at_start=True)
        trace = run_online(sc, MpcConfig(resolve_interval=10 * sc.num_slots))
        solve_slots = {e.slot for e in trace.solve_events}
        by_start = {p.start: p for p in trace.plans}
        current = None
        for k in range(sc.num_slots):
            if k in solve_slots:
                current = by_start[k]
            if current is None or not (current.start <= k < current.end):
                assert np.allclose(trace.applied_power[:, k], 0.0)
                continue
            col = k - current.start
            for local, i in enumerate(current.session_indices):
                planned = current.charging_power[local, col]
                applied = trace.applied_power[i, k]
                # applied power may be zero if the session already finished
                assert applied == pytest.approx(planned, abs=1e-9) or applied == 0.0

    def test_residuals_monotone_and_consistent(self):
        for seed in range(4):
            sc = random_scenario(5, seed=seed)
            trace = run_online(sc, MpcConfig(resolve_interval=3))
            hist = trace.residual_demand_history
            eta, dt = sc.station.charge_efficiency, sc.grid.slot_hours
            for i in range(sc.num_sessions):
                first = int(np.nonzero(sc.availability[i] > 0)[0][0])
                series = hist[first:, i]
                assert np.all(np.diff(series) <= 1e-12)
            delivered = eta * dt * trace.applied_power.sum(axis=1)
            for i, sess in enumerate(sc.sessions):
                assert delivered[i] + trace.unmet_energy[i] >= sess.required_energy - 1e-6
                if trace.unmet_energy[i] > 1e-9:
                    assert delivered[i] + trace.unmet_energy[i] == pytest.approx(
                        sess.required_energy, abs=1e-6
                    )

    def test_applied_power_respects_caps(self):
        for seed in range(4):
            sc = random_scenario(5, seed=seed)
            trace = run_online(sc, MpcConfig(resolve_interval=2))
            caps = np.array([s.max_power for s in sc.sessions])[:, None] * sc.availability
            assert np.all(trace.applied_power <= caps + 1e-6)
            net = trace.applied_power.sum(axis=0) - trace.applied_solar
            assert np.all(net <= sc.station.grid_capacity + 1e-6)

    def test_clamped_residuals_recorded(self):
        sc = random_scenario(3, seed=4, demand_fill=(1.4, 1.6))  # unreachable on purpose
        trace = run_online(sc, MpcConfig(resolve_interval=1, demand_policy="clamp"))
        assert len(trace.demand_adjustments) > 0
        assert trace.unmet_energy.sum() > 0

    def test_strict_policy_surfaces_infeasibility(self):
        sc = random_scenario(3, seed=4, demand_fill=(1.4, 1.6))
        with pytest.raises(DemandInfeasibleError):
            run_online(sc, MpcConfig(resolve_interval=1, demand_policy="strict"))

    def test_trace_serializes(self):
        import json

        sc = random_scenario(2, seed=1)
        trace = run_online(sc, MpcConfig(resolve_interval=2))
        blob = json.dumps(trace_to_json_dict(trace))
        back = json.loads(blob)
        assert back["total_cost"] == trace.total_cost
        assert len(back["solve_events"]) == len(trace.solve_events)

    def test_bad_interval_rejected(self):
        with pytest.raises(ValueError):
            MpcConfig(resolve_interval=0)
