"""Per-sink traffic queues and the greedy service discipline.

Packets arrive in Poisson batches once per demand-update cycle, land on a
uniformly random sink of their beam position, and wait in per-sink queues.
When a position is illuminated, the sink with the largest queue (ties to the
lowest sink id) is served with whatever the link offers that slot, capped by
that sink's backlog so offered capacity beyond the queue is never counted.

Queues are kept in whole bits (packets are integer multiples of the packet
size, and served amounts are floored to whole bits), which makes the
conservation identity  arrived == served + queued  exact rather than
float-approximate over arbitrarily long runs.
"""

from __future__ import annotations

import math

import numpy as np


class DemandState:
    """Mutable queue state for every sink in the system.

    Layout is a padded (n_positions, max_sinks_per_position) int64 array;
    ``sink_counts[n]`` says how many columns of row n are real sinks.
    Global sink ids are assigned position-major, so position n's local sink
    j has id ``sink_base[n] + j``.
    """

    def __init__(self, sink_counts):
        counts = np.asarray(sink_counts, dtype=np.int64)
        if counts.ndim != 1 or (counts < 1).any():
            raise ValueError("every position needs at least one sink")
        self.sink_counts = counts
        self.n_positions = len(counts)
        self.queues = np.zeros((self.n_positions, int(counts.max())), dtype=np.int64)
        self.sink_base = np.concatenate(([0], np.cumsum(counts)[:-1]))
        self.arrived = np.zeros(self.n_positions, dtype=np.int64)
        self.served = np.zeros(self.n_positions, dtype=np.int64)

    @classmethod
    def from_sinks(cls, sinks, n_positions: int) -> "DemandState":
        counts = np.zeros(n_positions, dtype=np.int64)
        for s in sinks:
            counts[s.position_index] += 1
        return cls(counts)

    def add_arrivals(self, rng: np.random.Generator, lam_pps: float,
                     packet_bits: int, duration_s: float) -> int:
        """Draw one batch of Poisson arrivals and enqueue them.

        Each position receives Poisson(lam * duration) packets of
        ``packet_bits`` bits, spread over its sinks uniformly at random.
        Returns the total bits that arrived.
        """
        if lam_pps < 0 or duration_s < 0:
            raise ValueError("arrival rate and duration must be non-negative")
        packet_bits = int(packet_bits)
        if packet_bits <= 0:
            raise ValueError("packet size must be positive bits")
        counts = rng.poisson(lam_pps * duration_s, self.n_positions)
        total = 0
        for n in range(self.n_positions):
            c = int(counts[n])
            if c == 0:
                continue
            k = int(self.sink_counts[n])
            if k == 1:
                self.queues[n, 0] += c * packet_bits
            else:
                split = rng.multinomial(c, np.full(k, 1.0 / k))
                self.queues[n, :k] += split.astype(np.int64) * packet_bits
            bits = c * packet_bits
            self.arrived[n] += bits
            total += bits
        return total

    def position_demands(self) -> np.ndarray:
        """Total queued bits per position (int64 vector)."""
        return self.queues.sum(axis=1)

    def select_sinks(self) -> np.ndarray:
        """Greedy per-position sink choice: largest queue, ties to lowest id.

        Returns the local sink index for every position (argmax returns the
        first maximum, which is the lowest id by construction).  Positions
        with nothing queued still return a sink (index 0) so a receiver is
        always defined; serving it moves zero bits.
        """
        return np.argmax(self.queues, axis=1)

    def select_sink(self, position: int) -> int:
        return int(np.argmax(self.queues[position]))

    def serve(self, position: int, offered_bits: float,
              sink_local: int | None = None) -> int:
        """Serve one position for one slot; returns bits actually moved.

        Served bits are min(floor(offered), selected sink queue): the link
        cannot deliver more than it offers, and counting more than the sink
        has queued would fabricate throughput.
        """
        if offered_bits < 0:
            raise ValueError("offered bits must be non-negative")
        j = self.select_sink(position) if sink_local is None else int(sink_local)
        if not 0 <= j < self.sink_counts[position]:
            raise IndexError(f"position {position} has no sink {j}")
        served = min(int(math.floor(offered_bits)), int(self.queues[position, j]))
        self.queues[position, j] -= served
        self.served[position] += served
        return served

    def total_queued(self) -> int:
        return int(self.queues.sum())

    def conservation_gap(self) -> int:
        """arrived - served - queued; zero by construction, kept as a check."""
        return int(self.arrived.sum() - self.served.sum() - self.queues.sum())
