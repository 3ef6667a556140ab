"""Scenario configuration: validated defaults plus an INI file loader.

Defaults reproduce the reference desk-scale scenario: a 61-position grid
(4 hexagonal rings) served by 8 beams from a 508 km orbit at 20 GHz with
200 MHz of bandwidth, 0.5 ms slots, 250 W of total power, and Poisson
packet traffic of 10 kbit packets.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, fields, replace

ALGORITHMS = ("JBSPO-BH", "G-BH", "G-BHPO", "RR-BH", "MAX-SINR-BH", "GA-BH")


@dataclass(frozen=True)
class SimConfig:
    # scheduling
    algorithm: str = "JBSPO-BH"
    seed: int = 0
    max_sweeps: int = 50

    # time hierarchy (seconds)
    slot_s: float = 0.5e-3          # one hop slot
    packet_interval_s: float = 20e-3  # arrival batch cycle
    epoch_s: float = 200e-3         # subsatellite position update
    horizon_s: float = 20.0

    # beams and grid
    n_beams: int = 8
    rings: int = 4
    p_max_w: float = 250.0
    theta_3db_deg: float = 1.66
    tx_peak_gain_dbi: float = 36.2
    footprint_radius_m: float = 0.0   # 0 means altitude * tan(theta_3db)

    # link
    bandwidth_hz: float = 200e6
    carrier_hz: float = 20e9
    altitude_m: float = 508e3
    rx_peak_gain_dbi: float = 20.0
    other_loss_db: float = 7.0
    noise_w: float = 7.96e-13

    # traffic
    arrival_rate_pps: float = 3000.0  # packets per second per position
    packet_bits: int = 10000
    sink_density_per_m2: float = 1.5e-8

    # scenario geometry
    center_lat_deg: float = 0.0
    center_lon_deg: float = 0.0
    track_azimuth_deg: float = 90.0

    # genetic scheduler
    ga_generations: int = 200
    ga_population: int = 100
    ga_p_mut: float = 0.2
    ga_p_cro: float = 0.8

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; "
                             f"valid: {', '.join(ALGORITHMS)}")
        for name in ("slot_s", "packet_interval_s", "epoch_s", "horizon_s",
                     "p_max_w", "theta_3db_deg", "bandwidth_hz", "carrier_hz",
                     "altitude_m", "noise_w"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.arrival_rate_pps < 0 or self.sink_density_per_m2 < 0:
            raise ValueError("rates and densities cannot be negative")
        if self.packet_bits < 1:
            raise ValueError("packet_bits must be a positive bit count")
        if self.rings < 0:
            raise ValueError("rings cannot be negative")
        if not 1 <= self.n_beams <= self.n_positions:
            raise ValueError(f"n_beams must lie in [1, {self.n_positions}] "
                             f"for rings={self.rings}")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")
        if self.footprint_radius_m < 0:
            raise ValueError("footprint radius cannot be negative")
        _check_divides("slot_s", self.slot_s, "packet_interval_s",
                       self.packet_interval_s)
        _check_divides("packet_interval_s", self.packet_interval_s,
                       "epoch_s", self.epoch_s)
        if self.horizon_s < self.packet_interval_s:
            raise ValueError("horizon_s must cover at least one arrival cycle")
        if self.ga_generations < 1 or self.ga_population < 1:
            raise ValueError("GA generations and population must be >= 1")
        for name in ("ga_p_mut", "ga_p_cro"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be a probability in [0, 1]")
        if not -90.0 <= self.center_lat_deg <= 90.0:
            raise ValueError("latitude out of range")

    @property
    def n_positions(self) -> int:
        return 3 * self.rings * (self.rings + 1) + 1

    @property
    def total_slots(self) -> int:
        return int(round(self.horizon_s / self.slot_s))

    @property
    def slots_per_arrival_cycle(self) -> int:
        return int(round(self.packet_interval_s / self.slot_s))

    @property
    def slots_per_epoch(self) -> int:
        return int(round(self.epoch_s / self.slot_s))

    @property
    def bits_scale(self) -> float:
        """Bits one beam delivers per slot per unit of spectral efficiency."""
        return self.bandwidth_hz * self.slot_s

    @property
    def footprint_m(self) -> float:
        if self.footprint_radius_m > 0:
            return self.footprint_radius_m
        return self.altitude_m * math.tan(math.radians(self.theta_3db_deg))

    def with_algorithm(self, name: str) -> "SimConfig":
        return replace(self, algorithm=canonical_algorithm(name))


def _check_divides(small_name, small, big_name, big):
    ratio = big / small
    if abs(ratio - round(ratio)) > 1e-9 * ratio or round(ratio) < 1:
        raise ValueError(f"{small_name} ({small}) must divide "
                         f"{big_name} ({big}) evenly")


def canonical_algorithm(name: str) -> str:
    up = name.strip().upper()
    for alg in ALGORITHMS:
        if up == alg:
            return alg
    raise ValueError(f"unknown algorithm {name!r}; valid: {', '.join(ALGORITHMS)}")


# INI layout: which section each SimConfig field lives in
_SECTIONS = {
    "simulation": ("algorithm", "seed", "max_sweeps", "slot_s",
                   "packet_interval_s", "epoch_s", "horizon_s"),
    "beams": ("n_beams", "rings", "p_max_w", "theta_3db_deg",
              "tx_peak_gain_dbi", "footprint_radius_m"),
    "link": ("bandwidth_hz", "carrier_hz", "altitude_m", "rx_peak_gain_dbi",
             "other_loss_db", "noise_w"),
    "traffic": ("arrival_rate_pps", "packet_bits", "sink_density_per_m2"),
    "geometry": ("center_lat_deg", "center_lon_deg", "track_azimuth_deg"),
    "ga": ("ga_generations", "ga_population", "ga_p_mut", "ga_p_cro"),
}

_FIELD_SECTION = {f: s for s, names in _SECTIONS.items() for f in names}


def load_config(path: str) -> SimConfig:
    """Read a scenario file, applying defaults for everything unspecified.

    Unknown sections or keys are rejected with the list of valid names, so
    a typo cannot silently fall back to a default.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(f"cannot read scenario file {path!r}")

    types = {f.name: f.type for f in fields(SimConfig)}
    values = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ValueError(f"unknown section [{section}] in {path}; "
                             f"valid: {', '.join(sorted(_SECTIONS))}")
        for key, raw in parser.items(section):
            if key not in _SECTIONS[section]:
                raise ValueError(
                    f"unknown key {key!r} in [{section}] of {path}; "
                    f"valid: {', '.join(_SECTIONS[section])}")
            values[key] = _parse_value(key, raw, types[key])
    return SimConfig(**values)


def _parse_value(key, raw, type_name):
    raw = raw.strip()
    try:
        if type_name == "int":
            return int(raw)
        if type_name == "float":
            return float(raw)
    except ValueError as exc:
        raise ValueError(f"{key} expects a {type_name}, got {raw!r}") from exc
    if key == "algorithm":
        return canonical_algorithm(raw)
    return raw


def dump_example(path: str) -> None:
    """Write a fully commented scenario file with every default spelled out."""
    cfg = SimConfig()
    lines = ["# beamhop scenario file: every key is optional and shown at its",
             "# default value; delete what you do not need to change.", ""]
    for section, names in _SECTIONS.items():
        lines.append(f"[{section}]")
        for name in names:
            lines.append(f"{name} = {getattr(cfg, name)}")
        lines.append("")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))
