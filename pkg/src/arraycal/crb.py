"""Bilinear estimation model, Fisher information, and constrained Cramer-Rao bounds.

The received pilot blocks are linear in the calibration vector f for a fixed
auxiliary channel h, and linear in h for fixed f:

    y = H(h, P) f + n = F(f, P) h + n,

where the auxiliary (nuisance) channel per pair is the reciprocal
Hc_{i->j} = R_j C_{i->j} R_i^T.  The joint FIM is singular (scale ambiguity),
so the CRB is computed under either the first-coefficient constraint or a
norm-plus-phase / f-linear constraint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import khatri_rao, null_space, orth

from .model import AntennaPartition, ChannelRealization, RfImpairments


def vec(a: np.ndarray) -> np.ndarray:
    """Column-major vectorization."""
    return np.asarray(a).reshape(-1, order="F")


def vec_transpose_perm(m: int, n: int) -> np.ndarray:
    """Permutation T with T @ vec(X) = vec(X^T) for X of shape (m, n)."""
    t = np.zeros((m * n, m * n))
    rows = np.arange(m * n) % m
    cols = np.arange(m * n) // m
    t[cols + rows * n, rows + cols * m] = 1.0
    return t


def aux_channel_blocks(imp: RfImpairments, chan: ChannelRealization,
                       partition: AntennaPartition) -> dict:
    """Hc_{i->j} = R_j C_{i->j} R_i^T for every pair i < j (M_j x M_i each)."""
    out = {}
    rx = imp.rx_gains
    for (i, j) in partition.pairs():
        si, sj = partition.antennas_of(i), partition.antennas_of(j)
        out[(i, j)] = rx[sj, None] * chan.c[sj, si] * rx[si, None].T
    return out


def split_h(h: np.ndarray, partition: AntennaPartition) -> dict:
    """Inverse of stacking vec(Hc_{i->j}) blocks in lexicographic pair order."""
    out = {}
    pos = 0
    sizes = partition.group_sizes
    for (i, j) in partition.pairs():
        n = sizes[i] * sizes[j]
        out[(i, j)] = h[pos:pos + n].reshape(sizes[j], sizes[i], order="F")
        pos += n
    return out


def stack_h(h_blocks: dict, partition: AntennaPartition) -> np.ndarray:
    return np.concatenate([vec(h_blocks[p]) for p in partition.pairs()])


def stack_observations(measurements, partition: AntennaPartition) -> np.ndarray:
    """y = [vec(Y_{1->2}); vec(Y_{2->1}^T); vec(Y_{1->3}); ...] (pairs lexicographic)."""
    parts = []
    for (i, j) in partition.pairs():
        parts.append(vec(measurements.block(i, j)))
        parts.append(vec(measurements.block(j, i).T))
    return np.concatenate(parts)


def build_h_composite(h_blocks: dict, pilots, partition: AntennaPartition) -> np.ndarray:
    """H(h, P): y = H f.  Per pair, Khatri-Rao blocks hit groups i and j."""
    m = partition.num_antennas
    rows = []
    for (i, j) in partition.pairs():
        hc = h_blocks[(i, j)]
        bi = khatri_rao(pilots[i].T, hc)            # L_i M_j x M_i
        bj = khatri_rao(hc.T, pilots[j].T)          # M_i L_j x M_j
        top = np.zeros((bi.shape[0], m), dtype=complex)
        top[:, partition.antennas_of(i)] = bi
        bot = np.zeros((bj.shape[0], m), dtype=complex)
        bot[:, partition.antennas_of(j)] = bj
        rows.extend([top, bot])
    return np.vstack(rows)


def build_f_composite(f: np.ndarray, pilots, partition: AntennaPartition) -> np.ndarray:
    """F(f, P): y = F h.  Block diagonal over pairs in the h ordering."""
    f = np.asarray(f, dtype=complex)
    sizes = partition.group_sizes
    pairs = partition.pairs()
    col_off = np.cumsum([0] + [sizes[i] * sizes[j] for (i, j) in pairs])
    n_rows = sum(partition.pilot_lengths[i] * sizes[j] + sizes[i] * partition.pilot_lengths[j]
                 for (i, j) in pairs)
    out = np.zeros((n_rows, col_off[-1]), dtype=complex)
    r = 0
    for k, (i, j) in enumerate(pairs):
        pi_fi = pilots[i].T * f[partition.antennas_of(i)][None, :]   # P_i^T F_i
        pj_fj = pilots[j].T * f[partition.antennas_of(j)][None, :]
        top = np.kron(pi_fi, np.eye(sizes[j]))
        bot = np.kron(np.eye(sizes[i]), pj_fj)
        blk = np.vstack([top, bot])
        out[r:r + blk.shape[0], col_off[k]:col_off[k + 1]] = blk
        r += blk.shape[0]
    return out


@dataclass
class CrbContext:
    composite_h: np.ndarray
    composite_f: np.ndarray
    f: np.ndarray
    h: np.ndarray
    noise_variance: float
    partition: AntennaPartition
    v_f: np.ndarray          # orthonormal complement of span{f}, M x (M-1)


@dataclass
class CrbResult:
    crb_matrix: np.ndarray
    trace: float
    constraint_kind: str


def build_composites(f: np.ndarray, h_blocks: dict, pilots,
                     partition: AntennaPartition, noise_variance: float) -> CrbContext:
    """Assemble both composites; checks the bilinear identity H f = F h."""
    f = np.asarray(f, dtype=complex)
    if f.size != partition.num_antennas:
        raise ValueError("f length must equal the antenna count")
    hmat = build_h_composite(h_blocks, pilots, partition)
    fmat = build_f_composite(f, pilots, partition)
    h = stack_h(h_blocks, partition)
    v_f = null_space(f.conj()[None, :])
    return CrbContext(hmat, fmat, f, h, float(noise_variance), partition, v_f)


def context_from_model(imp: RfImpairments, chan: ChannelRealization, pilots,
                       partition: AntennaPartition, noise_variance: float) -> CrbContext:
    f = imp.tx_gains / imp.rx_gains
    return build_composites(f, aux_channel_blocks(imp, chan, partition),
                            pilots, partition, noise_variance)


def fim(ctx: CrbContext) -> np.ndarray:
    """Joint FIM over (f, h): J = (1/sigma^2) [H F]^H [H F].  Singular by scale."""
    if ctx.noise_variance <= 0:
        raise ValueError("FIM requires a positive noise variance")
    hf = np.hstack([ctx.composite_h, ctx.composite_f])
    return hf.conj().T @ hf / ctx.noise_variance


def _perp_projector(a: np.ndarray) -> np.ndarray:
    q = orth(a)
    return np.eye(a.shape[0]) - q @ q.conj().T


def _constrained_inverse(b: np.ndarray, v: np.ndarray, sigma2: float) -> np.ndarray:
    inner = v.conj().T @ b @ v
    try:
        inv = np.linalg.inv(inner)
    except np.linalg.LinAlgError as e:
        raise np.linalg.LinAlgError(f"unidentifiable configuration: {e}") from e
    return sigma2 * v @ inv @ v.conj().T


def crb_f(ctx: CrbContext, constraint: str = "FCC") -> CrbResult:
    """Constrained CRB for f with h as nuisance.

    FCC uses the identity-minus-first-column subspace; NPC (or an f-aligned
    linear constraint) yields the pseudo-inverse of the nuisance-compressed
    information sigma^-2 H^H P_F_perp H.
    """
    p_perp = _perp_projector(ctx.composite_f)
    b = ctx.composite_h.conj().T @ p_perp @ ctx.composite_h
    b = (b + b.conj().T) / 2
    if constraint == "FCC":
        v = np.eye(ctx.f.size, dtype=complex)[:, 1:]
        crb = _constrained_inverse(b, v, ctx.noise_variance)
    elif constraint in ("NPC", "F_LINEAR", "NPC_OR_F_LINEAR"):
        crb = ctx.noise_variance * np.linalg.pinv(b, hermitian=True)
    else:
        raise ValueError(f"unknown CRB constraint {constraint!r}")
    return CrbResult(crb, float(np.real(np.trace(crb))), constraint)


def crb_f_known_h(ctx: CrbContext, constraint: str = "FCC") -> CrbResult:
    """Comparison bound assuming the internal channel h is known.

    Replaces the nuisance projector by identity; this underestimates the
    achievable MSE of joint estimators.
    """
    b = ctx.composite_h.conj().T @ ctx.composite_h
    b = (b + b.conj().T) / 2
    if constraint == "FCC":
        v = np.eye(ctx.f.size, dtype=complex)[:, 1:]
    else:
        v = ctx.v_f
    crb = _constrained_inverse(b, v, ctx.noise_variance)
    return CrbResult(crb, float(np.real(np.trace(crb))), constraint)


def build_f_perp(f: np.ndarray, pilots, partition: AntennaPartition) -> np.ndarray:
    """Basis of the orthogonal complement of the column space of F(f, P).

    Block diagonal over pairs; signs and row order are fixed so that
    F_perp^H y reproduces the stacked residual Y(P) f exactly (including the
    noise realization).  Requires full-rank pilots and, per group, either
    L_i >= M_i or M_i >= L_i (always true) with P_i^T F_i full rank.
    """
    f = np.asarray(f, dtype=complex)
    sizes = partition.group_sizes
    lens = partition.pilot_lengths
    pairs = partition.pairs()
    for k, p in enumerate(pilots.blocks):
        if np.linalg.matrix_rank(p) < min(sizes[k], lens[k]):
            raise ValueError(f"pilot block {k} is rank deficient")
    n_rows = sum(lens[i] * sizes[j] + sizes[i] * lens[j] for (i, j) in pairs)
    n_cols = sum(lens[i] * lens[j] for (i, j) in pairs)
    out = np.zeros((n_rows, n_cols), dtype=complex)
    r = c = 0
    for (i, j) in pairs:
        mi, mj, li, lj = sizes[i], sizes[j], lens[i], lens[j]
        a_i = pilots[i].T * f[partition.antennas_of(i)][None, :]    # P_i^T F_i
        b_j = f[partition.antennas_of(j)][:, None] * pilots[j]      # F_j P_j
        # rows of Y(P)f block as a map on [vec(Y_{i->j}); vec(Y_{j->i}^T)]
        top = -np.kron(b_j.T, np.eye(li)) @ vec_transpose_perm(mj, li)
        bot = np.kron(np.eye(lj), a_i) @ vec_transpose_perm(lj, mi)
        blk_h = np.hstack([top, bot])                               # L_iL_j x pair rows
        out[r:r + blk_h.shape[1], c:c + blk_h.shape[0]] = blk_h.conj().T
        r += blk_h.shape[1]
        c += blk_h.shape[0]
    return out


def ml_compressed_cost(y: np.ndarray, f: np.ndarray, pilots,
                       partition: AntennaPartition, rel_tol: float = 1e-8) -> float:
    """y^H P_F_perp y, evaluated both through F and through the weighted F_perp form.

    The two routes must agree (the compressed ML cost equals an optimally
    weighted LS cost on Y(P) f); disagreement beyond rel_tol raises.
    """
    fmat = build_f_composite(f, pilots, partition)
    cost_direct = float(np.real(y.conj() @ (_perp_projector(fmat) @ y)))
    fperp = build_f_perp(f, pilots, partition)
    w = fperp.conj().T @ y
    gram = fperp.conj().T @ fperp
    cost_weighted = float(np.real(w.conj() @ np.linalg.pinv(gram, hermitian=True) @ w))
    tol = rel_tol * max(abs(cost_direct), abs(cost_weighted)) \
        + 1e-12 * float(np.real(y.conj() @ y))
    if abs(cost_direct - cost_weighted) > tol:
        raise ArithmeticError(
            f"compressed-cost routes disagree: {cost_direct} vs {cost_weighted}")
    return cost_direct
