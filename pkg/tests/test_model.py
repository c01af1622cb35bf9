"""LP assembly and schedule decoding: worked examples and structural checks."""

import dataclasses
from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from chargeopt.fcfs import run_fcfs
from chargeopt.lp import LpStatus, check_point, solve_lp
from chargeopt.model import (
    DemandInfeasibleError,
    ScheduleConsistencyError,
    allocation_to_point,
    apply_demand_policy,
    build_nominal_lp,
    build_robust_lp,
    extract_schedule,
    max_delivery,
    solve_offline,
)
from chargeopt.scenario import (
    ChargingSession,
    PriceSeries,
    SolarSeries,
    StationConfig,
    TimeGrid,
    build_scenario,
)
from chargeopt.synth import random_scenario

UTC = timezone.utc
DAY = datetime(2019, 6, 3, tzinfo=UTC)


def two_slot_scenario():
    grid = TimeGrid(DAY, 2, 1.0)
    station = StationConfig(grid_capacity=100.0, charge_efficiency=1.0, default_max_power=10.0)
    sess = ChargingSession("a", DAY, DAY + timedelta(hours=2), 10.0, 10.0)
    return build_scenario([sess], [0.2, 0.1], SolarSeries(np.zeros(2)), grid, station)


def inflated(sc):
    prices = PriceSeries(sc.prices.nominal + sc.prices.deviation_bound, np.zeros(sc.num_slots))
    return dataclasses.replace(sc, prices=prices)


class TestNominal:
    def test_two_slot_charges_in_cheap_slot(self):
        # enumeration of the two extreme schedules: all in slot 1 costs 2.0,
        # all in slot 2 costs 1.0
        sched, adjustments = solve_offline(two_slot_scenario())
        assert adjustments == []
        assert sched.objective_value == pytest.approx(1.0, abs=1e-9)
        assert np.allclose(sched.charging_power, [[0.0, 10.0]], atol=1e-9)
        assert np.allclose(sched.net_purchase, [0.0, 10.0], atol=1e-9)
        assert sched.protection_cost == 0.0
        assert sched.budget_dual is None and sched.deviation_duals is None

    def test_solar_covers_everything(self):
        grid = TimeGrid(DAY, 2, 1.0)
        station = StationConfig(grid_capacity=100.0, charge_efficiency=1.0, default_max_power=10.0)
        sess = ChargingSession("a", DAY, DAY + timedelta(hours=2), 10.0, 10.0)
        sc = build_scenario([sess], [0.2, 0.1], SolarSeries(np.full(2, 50.0)), grid, station)
        sched, _ = solve_offline(sc)
        assert sched.objective_value == pytest.approx(0.0, abs=1e-9)

    def test_zero_demand_zero_cost(self):
        sc = two_slot_scenario()
        sessions = tuple(dataclasses.replace(s, required_energy=0.0) for s in sc.sessions)
        sc = dataclasses.replace(sc, sessions=sessions)
        sched, _ = solve_offline(sc)
        assert sched.objective_value == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(sched.charging_power, 0.0, atol=1e-9)

    def test_variable_and_constraint_counts(self):
        for seed, n_evs in [(1, 2), (2, 5)]:
            sc = random_scenario(n_evs, seed=seed)
            n, t = sc.num_sessions, sc.num_slots
            lp, vm = build_nominal_lp(sc)
            assert lp.num_vars == n * t + 2 * t == vm.num_vars
            assert len(lp.constraints) == n + n * t + t + t
            lp, vm = build_robust_lp(sc, 3.0)
            assert lp.num_vars == n * t + 3 * t + 1 == vm.num_vars
            assert len(lp.constraints) == n + n * t + t + t + t

    def test_variable_map_json(self):
        sc = two_slot_scenario()
        _, vm = build_robust_lp(sc, 1.0)
        names = vm.to_json_dict()
        assert names["charge[0,1]"] == 1
        assert names["budget_dual"] == 1 * 2 + 2 * 2
        assert len(names) == vm.num_vars


class TestRobust:
    def test_gamma_zero_equals_nominal(self):
        sc = two_slot_scenario()
        nominal, _ = solve_offline(sc)
        robust, _ = solve_offline(sc, gamma=0.0)
        assert robust.objective_value == pytest.approx(nominal.objective_value, rel=1e-9)
        assert robust.protection_cost == pytest.approx(0.0, abs=1e-9)

    def test_gamma_at_horizon_equals_inflated_prices(self):
        for seed in range(3):
            sc = random_scenario(3, seed=seed, num_slots=12)
            robust, _ = solve_offline(sc, gamma=float(sc.num_slots))
            infl, _ = solve_offline(inflated(sc))
            assert robust.objective_value == pytest.approx(infl.objective_value, rel=1e-6)

    def test_zero_deviation_bound_any_gamma(self):
        sc = two_slot_scenario()
        sc = dataclasses.replace(sc, prices=PriceSeries(sc.prices.nominal, np.zeros(2)))
        nominal, _ = solve_offline(sc)
        robust, _ = solve_offline(sc, gamma=7.0)
        assert robust.objective_value == pytest.approx(nominal.objective_value, rel=1e-9)

    def test_objective_nondecreasing_in_gamma(self):
        sc = random_scenario(4, seed=12, num_slots=12)
        values = [solve_offline(sc, gamma=float(g))[0].objective_value for g in range(0, 13, 3)]
        for lo, hi in zip(values, values[1:]):
            assert lo <= hi + 1e-9

    def test_negative_gamma_rejected(self):
        with pytest.raises(ValueError):
            build_robust_lp(two_slot_scenario(), -1.0)


class TestDemandPolicy:
    def unreachable_scenario(self):
        grid = TimeGrid(DAY, 2, 1.0)
        station = StationConfig(grid_capacity=100.0, charge_efficiency=0.9, default_max_power=10.0)
        sess = ChargingSession("b", DAY, DAY + timedelta(hours=1), 20.0, 10.0)
        return build_scenario([sess], [0.1, 0.1], SolarSeries(np.zeros(2)), grid, station)

    def test_clamp_to_max_deliverable(self):
        sc = self.unreachable_scenario()
        clamped, adjustments = apply_demand_policy(sc, "clamp")
        assert clamped.sessions[0].required_energy == pytest.approx(9.0, abs=1e-9)
        assert len(adjustments) == 1
        assert adjustments[0].session_id == "b"
        assert adjustments[0].deliverable == pytest.approx(9.0, abs=1e-9)

    def test_reachable_demands_unchanged(self):
        sc = two_slot_scenario()
        for policy in ("strict", "clamp"):
            out, adjustments = apply_demand_policy(sc, policy)
            assert out is sc
            assert adjustments == []

    def test_strict_raises_listing_deliverable(self):
        with pytest.raises(DemandInfeasibleError) as err:
            apply_demand_policy(self.unreachable_scenario(), "strict")
        assert err.value.shortfalls[0].deliverable == pytest.approx(9.0, abs=1e-9)

    def test_max_delivery_respects_grid_cap(self):
        grid = TimeGrid(DAY, 1, 1.0)
        station = StationConfig(grid_capacity=10.0, charge_efficiency=1.0, default_max_power=8.0)
        sessions = [
            ChargingSession("a", DAY, DAY + timedelta(hours=1), 8.0, 8.0),
            ChargingSession("b", DAY, DAY + timedelta(hours=1), 8.0, 8.0),
        ]
        sc = build_scenario(sessions, [0.1], SolarSeries(np.zeros(1)), grid, station)
        total = max_delivery(sc).sum()
        assert total == pytest.approx(10.0, abs=1e-6)


class TestExtract:
    def test_cross_check_catches_tampered_objective(self):
        sc = two_slot_scenario()
        lp, vm = build_nominal_lp(sc)
        sol = solve_lp(lp)
        broken = dataclasses.replace(sol, objective_value=sol.objective_value + 1.0)
        with pytest.raises(ScheduleConsistencyError):
            extract_schedule(broken, vm, sc)

    def test_rejects_non_optimal(self):
        sc = two_slot_scenario()
        lp, vm = build_nominal_lp(sc)
        sol = solve_lp(lp)
        bad = dataclasses.replace(sol, status=LpStatus.INFEASIBLE)
        with pytest.raises(ValueError):
            extract_schedule(bad, vm, sc)

    def test_delivered_energy_property(self):
        for seed in range(5):
            sc = random_scenario(4, seed=seed)
            sched, _ = solve_offline(sc)
            dt, eta = sc.grid.slot_hours, sc.station.charge_efficiency
            delivered = eta * dt * sched.charging_power.sum(axis=1)
            for i, s in enumerate(sc.sessions):
                assert delivered[i] >= s.required_energy - 1e-6

    def test_grid_draw_recomputed_not_copied(self):
        # zero price in one slot lets the purchase variable exceed the real draw
        grid = TimeGrid(DAY, 2, 1.0)
        station = StationConfig(grid_capacity=100.0, charge_efficiency=1.0, default_max_power=10.0)
        sess = ChargingSession("a", DAY, DAY + timedelta(hours=2), 5.0, 10.0)
        sc = build_scenario([sess], [0.0, 0.5], SolarSeries(np.zeros(2)), grid, station)
        sched, _ = solve_offline(sc)
        assert np.allclose(sched.grid_draw, np.maximum(sched.charging_power.sum(axis=0) - sched.solar_used, 0))
        assert sched.grid_draw[1] == pytest.approx(0.0, abs=1e-9)


class TestFcfsDominance:
    def test_fcfs_point_feasible_and_dominated(self):
        for seed in range(8):
            sc = random_scenario(4, seed=seed, ample_grid=True)
            result = run_fcfs(sc)
            assert result.unmet_energy.sum() == pytest.approx(0.0, abs=1e-9)
            lp, vm = build_nominal_lp(sc)
            point = allocation_to_point(result.allocation, sc, vm)
            assert check_point(lp, point, 1e-6) == []
            sched, _ = solve_offline(sc)
            assert sched.nominal_cost <= result.cost + 1e-6 * (1 + result.cost)
