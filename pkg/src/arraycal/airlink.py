"""Bidirectional pilot exchanges between antenna groups.

Each group i transmits its pilot block P_i (M_i x L_i) while every other
group listens; the block received at group j is

    Y_{i->j} = R_j C_{i->j} T_i P_i + N_{i->j},   N ~ CN(0, sigma^2) per entry.

A MeasurementSet holds all ordered-pair blocks of one coherent slot.  For
non-coherent operation, a fresh channel is drawn per slot while the hardware
impairments stay fixed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import (
    AntennaPartition,
    ChannelRealization,
    GeometryConfig,
    IID_RAYLEIGH,
    RfImpairments,
    gen_channel,
)

UNIT_PHASE_RANDOM = "UNIT_PHASE_RANDOM"
ALL_ONES = "ALL_ONES"
IDENTITY = "IDENTITY"


@dataclass(frozen=True)
class PilotSet:
    """Per-group pilot matrices P_i of shape M_i x L_i."""

    blocks: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "blocks", tuple(np.asarray(b, dtype=complex) for b in self.blocks)
        )

    def __getitem__(self, i: int) -> np.ndarray:
        return self.blocks[i]

    def validate(self, partition: AntennaPartition) -> None:
        if len(self.blocks) != partition.num_groups:
            raise ValueError("one pilot block per group required")
        for b, m, l in zip(self.blocks, partition.group_sizes, partition.pilot_lengths):
            if b.shape != (m, l):
                raise ValueError(f"pilot block shape {b.shape} != ({m}, {l})")
            if np.linalg.matrix_rank(b) < min(m, l):
                raise ValueError("pilot block is rank deficient")


@dataclass
class MeasurementSet:
    """Received blocks Y_{i->j} for all ordered active pairs of one slot."""

    blocks: dict                 # (i, j) -> M_j x L_i array, i transmitting
    noise_variance: float
    slot_id: int = 0
    active_groups: tuple | None = None  # None means all groups

    def block(self, i: int, j: int) -> np.ndarray:
        try:
            return self.blocks[(i, j)]
        except KeyError:
            raise KeyError(f"no measurement block for pair {i}->{j}") from None

    def pairs(self):
        """Unordered active pairs (i, j), i < j, lexicographic."""
        seen = sorted({(min(i, j), max(i, j)) for (i, j) in self.blocks})
        return seen


@dataclass(frozen=True)
class NoncoherentSchedule:
    """Active group subsets per coherent slot; each slot needs >= 2 groups."""

    slots: tuple

    def __post_init__(self):
        slots = tuple(tuple(sorted(s)) for s in self.slots)
        object.__setattr__(self, "slots", slots)
        if not slots:
            raise ValueError("schedule must contain at least one slot")
        for s in slots:
            if len(s) < 2:
                raise ValueError("each slot must activate at least two groups")

    def covers(self, num_groups: int) -> bool:
        active = set()
        for s in self.slots:
            active.update(s)
        return active == set(range(num_groups))

    def active_pairs(self, t: int):
        s = self.slots[t]
        return [(i, j) for a, i in enumerate(s) for j in s[a + 1:]]


def default_pilots(partition: AntennaPartition, kind: str,
                   rng: np.random.Generator | None = None) -> PilotSet:
    """Standard pilot choices: unit-modulus random phases, all-ones columns, identity."""
    blocks = []
    for m, l in zip(partition.group_sizes, partition.pilot_lengths):
        if kind == UNIT_PHASE_RANDOM:
            if rng is None:
                raise ValueError("random pilots need an rng")
            blocks.append(np.exp(1j * rng.uniform(-np.pi, np.pi, size=(m, l))))
        elif kind == ALL_ONES:
            if l != 1:
                raise ValueError("all-ones pilots use a single channel use (L_i = 1)")
            blocks.append(np.ones((m, 1), dtype=complex))
        elif kind == IDENTITY:
            if l != m:
                raise ValueError("identity pilots require L_i = M_i")
            blocks.append(np.eye(m, dtype=complex))
        else:
            raise ValueError(f"unknown pilot kind {kind!r}")
    return PilotSet(tuple(blocks))


def noise_variance_from_snr(snr_db: float, chan: ChannelRealization) -> float:
    """sigma^2 such that the SNR at the strongest link equals snr_db.

    For the unit-variance i.i.d. Rayleigh model this reduces to 1 / SNR; for
    the geometric model the reference is the receive antenna nearest to the
    transmitter.
    """
    if np.isinf(snr_db):
        return 0.0
    return float(chan.ref_gain**2 / 10.0 ** (snr_db / 10.0))


def simulate_exchange(partition: AntennaPartition, pilots: PilotSet,
                      imp: RfImpairments, chan: ChannelRealization,
                      snr_db: float, rng: np.random.Generator,
                      slot_id: int = 0,
                      groups: tuple | None = None) -> MeasurementSet:
    """One coherent slot of bidirectional exchanges between the given groups.

    snr_db = +inf gives the exact noiseless blocks.  Diagonal (self) blocks
    are never produced: a group does not hear its own transmission.
    """
    pilots.validate(partition)
    m = partition.num_antennas
    if imp.num_antennas != m or chan.num_antennas != m:
        raise ValueError("impairments/channel size does not match partition")
    if not np.isfinite(snr_db) and not np.isposinf(snr_db):
        raise ValueError("snr_db must be finite or +inf")
    active = tuple(range(partition.num_groups)) if groups is None else tuple(sorted(groups))
    if len(active) < 2:
        raise ValueError("at least two groups must be active")

    sigma2 = noise_variance_from_snr(snr_db, chan)
    sd = np.sqrt(sigma2 / 2.0)
    blocks = {}
    for i in active:
        si = partition.antennas_of(i)
        txi = imp.tx_gains[si]
        for j in active:
            if j == i:
                continue
            sj = partition.antennas_of(j)
            c_ij = chan.c[sj, si]                       # M_j x M_i
            y = (imp.rx_gains[sj, None] * c_ij * txi[None, :]) @ pilots[i]
            if sigma2 > 0:
                shp = y.shape
                y = y + sd * (rng.standard_normal(shp) + 1j * rng.standard_normal(shp))
            blocks[(i, j)] = y
    return MeasurementSet(blocks, sigma2, slot_id=slot_id,
                          active_groups=None if groups is None else active)


def simulate_noncoherent(partition: AntennaPartition, schedule: NoncoherentSchedule,
                         pilots: PilotSet, imp: RfImpairments, snr_db: float,
                         rng: np.random.Generator, channel_model: str = IID_RAYLEIGH,
                         geometry: GeometryConfig | None = None,
                         channels: list | None = None) -> list:
    """Measurements over several coherent slots with a fresh channel per slot.

    Impairments are held constant across slots.  A caller may supply the list
    of per-slot ChannelRealization objects (e.g. to force equal channels);
    otherwise they are drawn independently.
    """
    if not schedule.covers(partition.num_groups):
        raise ValueError("every group must be active in at least one slot")
    out = []
    for t, grp in enumerate(schedule.slots):
        if channels is not None:
            chan = channels[t]
        else:
            chan = gen_channel(partition.num_antennas, channel_model, rng, geometry)
        out.append(simulate_exchange(partition, pilots, imp, chan, snr_db, rng,
                                     slot_id=t, groups=grp))
    return out


def measurements_to_csv(ms: MeasurementSet, path) -> None:
    """Textual dump (pair, row, col, re, im) for cross-language comparison."""
    with open(path, "w") as fh:
        fh.write("tx_group,rx_group,row,col,re,im\n")
        for (i, j) in sorted(ms.blocks):
            y = ms.blocks[(i, j)]
            for r in range(y.shape[0]):
                for c in range(y.shape[1]):
                    v = y[r, c]
                    fh.write(f"{i},{j},{r},{c},{v.real:.17g},{v.imag:.17g}\n")
