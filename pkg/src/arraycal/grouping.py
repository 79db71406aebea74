"""Antenna group schemes and optimal-grouping computations.

For a fixed budget of K channel uses, the pair count sum_{i<j} L_i L_j is
maximized by K single-channel-use groups, so up to K(K-1)/2 + 1 antennas can
be calibrated in K uses (T times more over T non-coherent slots).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .model import AntennaPartition, GeometryConfig

FC_I = "FC_I"
FC_II = "FC_II"
SINGLETON = "SINGLETON"
ARGOS = "ARGOS"
AVALANCHE = "AVALANCHE"
INTERLEAVED = "INTERLEAVED"
NON_INTERLEAVED = "NON_INTERLEAVED"
CUSTOM = "CUSTOM"

_LABELS = (FC_I, FC_II, SINGLETON, ARGOS, AVALANCHE, INTERLEAVED, NON_INTERLEAVED, CUSTOM)


@dataclass(frozen=True)
class GroupScheme:
    partition: AntennaPartition
    assignment: tuple       # per-antenna group index (grid/global numbering)
    label: str

    def __post_init__(self):
        if self.label not in _LABELS:
            raise ValueError(f"unknown scheme label {self.label!r}")
        assignment = tuple(int(a) for a in self.assignment)
        object.__setattr__(self, "assignment", assignment)
        counts = np.bincount(assignment, minlength=self.partition.num_groups)
        if tuple(counts) != self.partition.group_sizes:
            raise ValueError("assignment inconsistent with group sizes")

    @property
    def permutation(self) -> np.ndarray:
        """Antenna ordering that makes groups contiguous (stable within a group)."""
        return np.argsort(np.asarray(self.assignment), kind="stable")


def pair_count(pilot_lengths) -> int:
    return sum(a * b for a, b in combinations(pilot_lengths, 2))


def optimal_group_sizes(k: int) -> list:
    """The pilot-length allocation maximizing the pair count for K channel uses."""
    if k < 2:
        raise ValueError("need at least 2 channel uses")
    return [1] * k


def max_calibratable(k: int, t: int = 1) -> int:
    """Most antennas calibratable with k channel uses per slot over t slots."""
    if k < 2 or t < 1:
        raise ValueError("need k >= 2 channel uses and t >= 1 slots")
    return t * k * (k - 1) // 2 + 1


def _contiguous_assignment(sizes) -> tuple:
    out = []
    for g, s in enumerate(sizes):
        out.extend([g] * s)
    return tuple(out)


def _fc1_sizes(m: int, g: int) -> tuple:
    """Avalanche-style sizes (1, 1, 2, ..., g-1), capped from the end to sum to m."""
    sizes = [max(1, i) for i in range(g)]
    excess = sum(sizes) - m
    if excess < 0:
        raise ValueError(f"{g} groups can cover at most {sum(sizes)} antennas")
    idx = g - 1
    while excess > 0:
        take = min(excess, sizes[idx] - 1)
        sizes[idx] -= take
        excess -= take
        idx -= 1
        if idx < 0 and excess > 0:
            raise ValueError("cannot reduce group sizes to match antenna count")
    return tuple(sizes)


def _fc2_sizes(m: int, g: int) -> tuple:
    """As equal as possible, smaller groups first."""
    base, extra = divmod(m, g)
    if base < 1:
        raise ValueError("more groups than antennas")
    return tuple([base] * (g - extra) + [base + 1] * extra)


def make_scheme(label: str, m: int, g: int | None = None,
                geometry: GeometryConfig | None = None) -> GroupScheme:
    """Construct one of the named grouping schemes for m antennas.

    FC_I/FC_II need g; INTERLEAVED/NON_INTERLEAVED need g and a grid geometry
    (same size vectors, assignments differ: interleaved spreads each group
    across the grid in column-major stride-g fashion, non-interleaved takes
    column-contiguous runs).  All schemes use one channel use per group.
    """
    if label == SINGLETON:
        part = AntennaPartition((1,) * m, (1,) * m)
        return GroupScheme(part, _contiguous_assignment(part.group_sizes), label)
    if label == ARGOS:
        part = AntennaPartition((1, m - 1), (1, m - 1))
        return GroupScheme(part, _contiguous_assignment(part.group_sizes), label)
    if label == AVALANCHE:
        if g is None:
            raise ValueError("avalanche scheme needs the group count")
        sizes = tuple(max(1, i) for i in range(g))
        if sum(sizes) != m:
            raise ValueError(f"avalanche with {g} groups covers {sum(sizes)} antennas, not {m}")
        part = AntennaPartition(sizes, (1,) * g)
        return GroupScheme(part, _contiguous_assignment(sizes), label)
    if label in (FC_I, FC_II):
        if g is None:
            raise ValueError(f"{label} needs the group count")
        sizes = _fc1_sizes(m, g) if label == FC_I else _fc2_sizes(m, g)
        part = AntennaPartition(sizes, (1,) * g)
        return GroupScheme(part, _contiguous_assignment(sizes), label)
    if label in (INTERLEAVED, NON_INTERLEAVED):
        if g is None or geometry is None:
            raise ValueError(f"{label} needs a group count and a grid geometry")
        if geometry.num_antennas != m or m % g:
            raise ValueError("grid size must match m and m must be divisible by g")
        size = m // g
        part = AntennaPartition((size,) * g, (1,) * g)
        idx = np.arange(m)              # column-major grid numbering
        if label == INTERLEAVED:
            assignment = tuple(int(a) for a in idx % g)
        else:
            assignment = tuple(int(a) for a in idx // size)
        return GroupScheme(part, assignment, label)
    raise ValueError(f"unsupported scheme label {label!r}")


def custom_scheme(sizes, pilot_lengths=None) -> GroupScheme:
    sizes = tuple(int(s) for s in sizes)
    lens = tuple(pilot_lengths) if pilot_lengths is not None else (1,) * len(sizes)
    part = AntennaPartition(sizes, lens)
    return GroupScheme(part, _contiguous_assignment(sizes), CUSTOM)


def scheme_to_text(scheme: GroupScheme) -> str:
    """Structured-text serialization (label, sizes, pilot lengths, assignment)."""
    p = scheme.partition
    return "\n".join([
        f"label = {scheme.label}",
        f"group_sizes = {','.join(map(str, p.group_sizes))}",
        f"pilot_lengths = {','.join(map(str, p.pilot_lengths))}",
        f"assignment = {','.join(map(str, scheme.assignment))}",
    ]) + "\n"


def scheme_from_text(text: str) -> GroupScheme:
    fields = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        fields[key.strip()] = value.strip()
    try:
        label = fields["label"]
        sizes = tuple(int(x) for x in fields["group_sizes"].split(","))
        lens = tuple(int(x) for x in fields["pilot_lengths"].split(","))
        assignment = tuple(int(x) for x in fields["assignment"].split(","))
    except (KeyError, ValueError) as e:
        raise ValueError(f"malformed scheme text: {e}") from e
    return GroupScheme(AntennaPartition(sizes, lens), assignment, label)


def brute_force_best_pair_count(k: int) -> tuple:
    """Exhaustive max of sum_{i<j} L_i L_j over integer compositions of k."""
    best, best_comp = -1, None

    def rec(remaining, comp):
        nonlocal best, best_comp
        if remaining == 0:
            if len(comp) >= 2:
                v = pair_count(comp)
                if v > best:
                    best, best_comp = v, tuple(comp)
            return
        for nxt in range(1, remaining + 1):
            comp.append(nxt)
            rec(remaining - nxt, comp)
            comp.pop()

    rec(k, [])
    return best, best_comp
