"""Stacked homogeneous system for joint calibration estimation.

Eliminating the reciprocal channel from the pair (i, j) exchanges gives

    (Y_{j->i}^T * P_i^T) f_i - (P_j^T * Y_{i->j}^T) f_j = n_ij

(* is the Khatri-Rao, i.e. column-wise Kronecker, product).  Stacking all
pairs i < j yields Y(P) f = n, a matrix with sum_{i<j} L_i L_j rows whose
null space is spanned by the true f in the noiseless case.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import khatri_rao

from .model import AntennaPartition


@dataclass
class StackedSystem:
    """The matrix Y(P); pair_index maps each row block to (slot, i, j)."""

    y_matrix: np.ndarray
    pair_index: list          # [(slot, i, j), ...] in row-block order
    m: int

    @property
    def rows(self) -> int:
        return self.y_matrix.shape[0]

    def gram(self) -> np.ndarray:
        return self.y_matrix.conj().T @ self.y_matrix


def pair_equation_block(y_ji: np.ndarray, y_ij: np.ndarray,
                        p_i: np.ndarray, p_j: np.ndarray):
    """Khatri-Rao coefficient blocks of the pair equation, for (f_i, f_j).

    Rows follow the column-major vectorization of the L_i x L_j residual
    matrix P_i^T F_i Y_{j->i} - Y_{i->j}^T F_j P_j.
    """
    block_i = khatri_rao(y_ji.T, p_i.T)      # (L_i L_j) x M_i
    block_j = -khatri_rao(p_j.T, y_ij.T)     # (L_i L_j) x M_j
    return block_i, block_j


def build_stacked(measurements, pilots, partition: AntennaPartition,
                  pairs=None, slot: int = 0) -> StackedSystem:
    """Assemble Y(P) from one slot's measurements (pairs i<j, lexicographic)."""
    m = partition.num_antennas
    if pairs is None:
        pairs = partition.pairs()
    row_blocks = []
    index = []
    for (i, j) in pairs:
        y_ij = measurements.block(i, j)
        y_ji = measurements.block(j, i)
        bi, bj = pair_equation_block(y_ji, y_ij, pilots[i], pilots[j])
        rows = np.zeros((bi.shape[0], m), dtype=complex)
        rows[:, partition.antennas_of(i)] = bi
        rows[:, partition.antennas_of(j)] = bj
        row_blocks.append(rows)
        index.append((slot, i, j))
    return StackedSystem(np.vstack(row_blocks), index, m)


def build_stacked_noncoherent(slot_measurements: list, pilots,
                              partition: AntennaPartition,
                              schedule=None) -> StackedSystem:
    """Vertically concatenate per-slot stacks, restricted to each slot's active pairs."""
    if not slot_measurements:
        raise ValueError("no slots to stack")
    systems = []
    for t, ms in enumerate(slot_measurements):
        if schedule is not None:
            pairs = schedule.active_pairs(t)
        elif ms.active_groups is not None:
            g = ms.active_groups
            pairs = [(i, j) for a, i in enumerate(g) for j in g[a + 1:]]
        else:
            pairs = partition.pairs()
        systems.append(build_stacked(ms, pilots, partition, pairs=pairs, slot=ms.slot_id))
    y = np.vstack([s.y_matrix for s in systems])
    index = [e for s in systems for e in s.pair_index]
    return StackedSystem(y, index, partition.num_antennas)


def check_identifiability(partition: AntennaPartition, schedule=None) -> dict:
    """Bidirectional equation count vs. the M-1 unknown directions.

    rows = sum_{i<j} L_i L_j (summed per slot for a non-coherent schedule);
    the problem is determined up to scale iff rows >= M - 1.
    """
    lens = partition.pilot_lengths
    if schedule is None:
        rows = sum(lens[i] * lens[j] for (i, j) in partition.pairs())
    else:
        rows = 0
        for t in range(len(schedule.slots)):
            rows += sum(lens[i] * lens[j] for (i, j) in schedule.active_pairs(t))
    needed = partition.num_antennas - 1
    return {"rows": rows, "needed": needed, "ok": rows >= needed}


def numerical_rank(a: np.ndarray) -> int:
    """Rank via singular values above max_dim * eps * sigma_max."""
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    tol = max(a.shape) * np.finfo(float).eps * s[0]
    return int(np.sum(s > tol))
