"""Slot-by-slot simulation driver.

The time hierarchy is integer slot arithmetic throughout: arrivals land at
the start of every packet cycle, the subsatellite point moves at the start
of every epoch, and each slot runs preselection, scheduling, power
allocation, service, and logging in that order.  All randomness flows from
three named streams spawned off the run seed (sink placement, arrivals,
scheduler), so two runs that differ only in algorithm see identical
scenarios, which is what makes algorithm comparisons paired.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, fields

import numpy as np

from . import baselines, metrics
from .channel import AntennaPattern, LinkBudget, antenna_gain, path_loss_linear
from .config import SimConfig
from .game import GameContext, find_ne
from .geometry import (GeoPoint, OrbitState, build_grid,
                       circular_orbit_ground_speed, geo_to_ecef, sample_sinks,
                       subsatellite_at)
from .power import PowerProblem, optimize
from .traffic import DemandState

POWER_OPTIMIZED = ("JBSPO-BH", "G-BHPO", "GA-BH")


@dataclass
class SlotLog:
    """One slot's outcome; positions, powers and sinr are beam-parallel."""

    slot: int
    positions: np.ndarray
    powers: np.ndarray
    sinr: np.ndarray
    offered_bits: np.ndarray
    served_bits: np.ndarray
    sod: float
    sweeps: int = 0
    converged: bool = True


@dataclass
class RunResult:
    summary: metrics.RunSummary
    config: SimConfig
    n_sinks: int
    scheduler_time_s: float
    power_time_s: float
    wall_time_s: float
    final_queued_bits: int
    ne_converged_slots: int
    game_slots: int
    sink_counts: np.ndarray
    slot_logs: list[SlotLog] | None = None


class _Scenario:
    """Everything about the run that does not change across algorithms."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        center = _grid_center(cfg)
        self.grid = build_grid(center, cfg.rings, cfg.footprint_m)
        self.orbit = OrbitState(
            altitude_m=cfg.altitude_m, start=center,
            ground_speed_mps=circular_orbit_ground_speed(cfg.altitude_m),
            track_azimuth_deg=cfg.track_azimuth_deg)
        self.link = LinkBudget(carrier_hz=cfg.carrier_hz,
                               bandwidth_hz=cfg.bandwidth_hz,
                               slot_s=cfg.slot_s,
                               other_loss_db=cfg.other_loss_db,
                               noise_w=cfg.noise_w)
        self.tx_pattern = AntennaPattern(peak_gain_dbi=cfg.tx_peak_gain_dbi,
                                         theta_3db_deg=cfg.theta_3db_deg)
        self.rx_gain_lin = 10.0 ** (cfg.rx_peak_gain_dbi / 10.0)
        self.center_ecef = np.stack([geo_to_ecef(c) for c in self.grid.centers])

    def place_sinks(self, rng: np.random.Generator):
        sinks = sample_sinks(self.grid, self.cfg.sink_density_per_m2, rng)
        sink_ecef = np.stack([geo_to_ecef(s.location) for s in sinks])
        return sinks, sink_ecef


def _grid_center(cfg: SimConfig) -> GeoPoint:
    return GeoPoint(cfg.center_lat_deg, cfg.center_lon_deg)


class _GainCache:
    """Per-epoch channel rows: gain from every beam position to one sink.

    Within an epoch the satellite is fixed, so a (sink, epoch) pair fully
    determines the row; rows are recomputed lazily after each epoch change.
    A row is the transmit pattern evaluated at the off-axis angles between
    each beam's boresight and the sink direction, times receive gain and
    the sink's distance-dependent losses.
    """

    def __init__(self, scenario: _Scenario, sink_ecef: np.ndarray):
        self.sc = scenario
        self.sink_ecef = sink_ecef
        self.rows: dict[int, np.ndarray] = {}
        self.sat_ecef = np.zeros(3)
        self.bore: np.ndarray | None = None

    def move_satellite(self, sim_time_s: float):
        point = subsatellite_at(self.sc.orbit, sim_time_s)
        self.sat_ecef = geo_to_ecef(point, self.sc.orbit.altitude_m)
        to_centers = self.sc.center_ecef - self.sat_ecef
        self.bore = to_centers / np.linalg.norm(to_centers, axis=1)[:, None]
        self.rows.clear()

    def row(self, sink_id: int) -> np.ndarray:
        cached = self.rows.get(sink_id)
        if cached is not None:
            return cached
        v = self.sink_ecef[sink_id] - self.sat_ecef
        dist = float(np.linalg.norm(v))
        cos_theta = np.clip(self.bore @ (v / dist), -1.0, 1.0)
        theta_deg = np.degrees(np.arccos(cos_theta))
        tx = antenna_gain(self.sc.tx_pattern, theta_deg)
        row = tx * self.rx_gain_path(dist)
        self.rows[sink_id] = row
        return row

    def rx_gain_path(self, dist: float) -> float:
        return self.sc.rx_gain_lin * path_loss_linear(dist, self.sc.link)


def run(cfg: SimConfig, *, slots: int | None = None,
        per_slot_log: bool = False) -> RunResult:
    """Simulate one algorithm over the configured horizon.

    ``slots`` truncates the run (for quick experiments and timing probes);
    the default executes horizon_s / slot_s slots exactly.
    """
    total_slots = cfg.total_slots if slots is None else int(slots)
    if total_slots < 1:
        raise ValueError("need at least one slot")

    t_wall = time.perf_counter()
    scenario = _Scenario(cfg)
    place_ss, arrive_ss, sched_ss = np.random.SeedSequence(cfg.seed).spawn(3)
    rng_place = np.random.default_rng(place_ss)
    rng_arrive = np.random.default_rng(arrive_ss)
    rng_sched = np.random.default_rng(sched_ss)

    sinks, sink_ecef = scenario.place_sinks(rng_place)
    state = DemandState.from_sinks(sinks, cfg.n_positions)
    cache = _GainCache(scenario, sink_ecef)

    k = cfg.n_beams
    n_pos = cfg.n_positions
    p_ave = cfg.p_max_w / k
    bits_scale = cfg.bits_scale
    ga_cfg = baselines.GaConfig(generations=cfg.ga_generations,
                                population=cfg.ga_population,
                                p_mut=cfg.ga_p_mut, p_cro=cfg.ga_p_cro)
    cursor = baselines.RoundRobinCursor(0)
    alg = cfg.algorithm

    logs: list[SlotLog] | None = [] if per_slot_log else None
    sod_per_slot = np.zeros(total_slots)
    sched_time = 0.0
    power_time = 0.0
    ne_converged = 0
    game_slots = 0

    for slot in range(total_slots):
        if slot % cfg.slots_per_epoch == 0:
            cache.move_satellite(slot * cfg.slot_s)
        if slot % cfg.slots_per_arrival_cycle == 0:
            state.add_arrivals(rng_arrive, cfg.arrival_rate_pps,
                               cfg.packet_bits, cfg.packet_interval_s)

        pos_demands = state.position_demands()
        backlog = np.flatnonzero(pos_demands > 0)
        sink_choice = state.select_sinks()
        # build the candidate channel matrix outside the scheduler timer;
        # it is shared infrastructure, not part of any algorithm's cost
        gains_b = None
        if alg != "RR-BH" and backlog.size > k:
            gains_b = _gain_matrix(cache, backlog, sink_choice, state)

        sweeps = 0
        converged = True
        t0 = time.perf_counter()
        if alg == "RR-BH":
            # the rotation ignores demand, so it runs even when B is empty
            positions, cursor = baselines.rr_schedule(cursor, k, n_pos)
        elif backlog.size == 0:
            positions = np.zeros(0, dtype=np.int64)
        elif backlog.size <= k:
            positions = backlog
        else:
            if alg == "JBSPO-BH":
                ctx = GameContext(gains=gains_b,
                                  demands=pos_demands[backlog].astype(float),
                                  power_per_beam=p_ave, noise_w=cfg.noise_w,
                                  bits_scale=bits_scale)
                ne = find_ne(ctx, k, rng=rng_sched, max_sweeps=cfg.max_sweeps)
                positions = backlog[ne.assignment]
                sweeps = ne.sweeps
                converged = ne.converged
                ne_converged += int(ne.converged)
                game_slots += 1
            elif alg in ("G-BH", "G-BHPO"):
                local = baselines.g_bh_schedule(pos_demands[backlog], k)
                positions = backlog[local]
            elif alg == "MAX-SINR-BH":
                local = baselines.max_sinr_schedule(gains_b, k, p_ave,
                                                    cfg.noise_w)
                positions = backlog[np.sort(local)]
            elif alg == "GA-BH":
                ctx = GameContext(gains=gains_b,
                                  demands=pos_demands[backlog].astype(float),
                                  power_per_beam=p_ave, noise_w=cfg.noise_w,
                                  bits_scale=bits_scale)
                res = baselines.ga_schedule(ctx, k, ga_cfg, rng_sched)
                positions = backlog[res.assignment]
            else:
                raise ValueError(f"unhandled algorithm {alg!r}")
        sched_time += time.perf_counter() - t0

        if positions.size == 0:
            d = pos_demands.astype(float)
            sod_per_slot[slot] = float(d @ d)
            if logs is not None:
                logs.append(SlotLog(slot=slot, positions=positions,
                                    powers=np.zeros(0), sinr=np.zeros(0),
                                    offered_bits=np.zeros(0),
                                    served_bits=np.zeros(0),
                                    sod=sod_per_slot[slot]))
            continue

        gains_a = _gain_matrix(cache, positions, sink_choice, state)
        n_active = positions.size

        if alg in POWER_OPTIMIZED:
            sink_queues = state.queues[positions,
                                       sink_choice[positions]].astype(float)
            problem = PowerProblem(gains=gains_a, demands=sink_queues,
                                   p_max=cfg.p_max_w, noise_w=cfg.noise_w,
                                   bits_scale=bits_scale)
            t0 = time.perf_counter()
            powers = optimize(problem, thorough=False).powers
            power_time += time.perf_counter() - t0
        else:
            powers = np.full(n_active, cfg.p_max_w / n_active)

        gp = gains_a * powers[None, :]
        own = np.diag(gp)
        interference = gp.sum(axis=1) - own + cfg.noise_w
        sinr = own / interference
        offered = bits_scale * np.log2(1.0 + sinr)

        served = np.zeros(n_active)
        for i, n in enumerate(positions):
            served[i] = state.serve(int(n), float(offered[i]),
                                    int(sink_choice[n]))

        d = pos_demands.astype(float)
        sod = float(d @ d)
        for i, n in enumerate(positions):
            # a beam parked on an idle position (round robin does this)
            # carries no traffic, so it cannot contribute a mismatch
            if d[n] > 0:
                sod += (offered[i] - d[n]) ** 2 - d[n] ** 2
        sod_per_slot[slot] = sod

        if logs is not None:
            logs.append(SlotLog(slot=slot, positions=positions.copy(),
                                powers=np.asarray(powers, dtype=float),
                                sinr=sinr, offered_bits=offered,
                                served_bits=served, sod=sod, sweeps=sweeps,
                                converged=converged))

    duration = total_slots * cfg.slot_s
    summary = metrics.RunSummary(
        algorithm=alg, slots=total_slots, duration_s=duration,
        total_arrived_bits=int(state.arrived.sum()),
        total_served_bits=int(state.served.sum()),
        per_position_demanded=state.arrived.copy(),
        per_position_served=state.served.copy(),
        sod_per_slot=sod_per_slot)
    assert state.conservation_gap() == 0
    return RunResult(summary=summary, config=cfg, n_sinks=len(sinks),
                     scheduler_time_s=sched_time, power_time_s=power_time,
                     wall_time_s=time.perf_counter() - t_wall,
                     final_queued_bits=state.total_queued(),
                     ne_converged_slots=ne_converged, game_slots=game_slots,
                     sink_counts=state.sink_counts.copy(), slot_logs=logs)


def _gain_matrix(cache: _GainCache, positions: np.ndarray,
                 sink_choice: np.ndarray, state: DemandState) -> np.ndarray:
    """Channel matrix restricted to ``positions``.

    Entry [i, j] is the gain from a beam pointing at positions[j] to the
    sink currently selected at positions[i].
    """
    rows = np.empty((positions.size, positions.size))
    for i, n in enumerate(positions):
        sink_id = int(state.sink_base[n] + sink_choice[n])
        rows[i] = cache.row(sink_id)[positions]
    return rows


def compare(configs) -> list[RunResult]:
    """Run several algorithm variants of the same scenario, paired.

    Every config must match the first in all fields except ``algorithm``;
    the shared seed then guarantees identical sink placement and arrivals,
    so differences in the outputs are attributable to the algorithms.
    """
    cfgs = list(configs)
    if not cfgs:
        raise ValueError("nothing to compare")
    base = cfgs[0]
    for other in cfgs[1:]:
        for f in fields(SimConfig):
            if f.name == "algorithm":
                continue
            if getattr(other, f.name) != getattr(base, f.name):
                raise ValueError(f"scenario mismatch on {f.name!r}: "
                                 f"{getattr(base, f.name)} vs "
                                 f"{getattr(other, f.name)}")
    return [run(c) for c in cfgs]


def compare_algorithms(cfg: SimConfig, algorithms,
                       slots: int | None = None,
                       per_slot_log: bool = False) -> list[RunResult]:
    """Convenience wrapper: one scenario, several schedulers."""
    return [run(cfg.with_algorithm(a), slots=slots, per_slot_log=per_slot_log)
            for a in algorithms]
