"""Calibration estimators: constrained LS, Argos, Rogalin, daisy chain, Avalanche, AML.

All estimators determine f only up to one complex scale; a ConstraintSpec
resolves the ambiguity.  FCC pins the first coefficient to 1; NPC pins the
norm and the phase of f_hat^H f_true; UNIT_NORM takes the smallest
eigenvector of Y^H Y.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from .model import AntennaPartition, CalibrationVector
from . import crb as _crb
from .stacking import StackedSystem, pair_equation_block

FCC = "FCC"
NPC = "NPC"
UNIT_NORM = "UNIT_NORM"
LINEAR = "LINEAR"


@dataclass(frozen=True)
class ConstraintSpec:
    kind: str
    g: np.ndarray | None = None
    c: complex | None = None
    true_f: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in (FCC, NPC, UNIT_NORM, LINEAR):
            raise ValueError(f"unknown constraint kind {self.kind!r}")
        if self.kind == LINEAR and (self.g is None or self.c is None):
            raise ValueError("LINEAR constraint requires g and c")
        if self.kind == NPC and self.true_f is None:
            raise ValueError("NPC requires the reference vector for phase alignment")

    @staticmethod
    def fcc() -> "ConstraintSpec":
        return ConstraintSpec(FCC, c=1.0)

    @staticmethod
    def npc(true_f: np.ndarray, c: float | None = None) -> "ConstraintSpec":
        true_f = np.asarray(true_f, dtype=complex)
        if c is None:
            c = float(np.linalg.norm(true_f) ** 2)
        return ConstraintSpec(NPC, c=c, true_f=true_f)

    @staticmethod
    def unit_norm() -> "ConstraintSpec":
        return ConstraintSpec(UNIT_NORM, c=1.0)

    @staticmethod
    def linear(g: np.ndarray, c: complex) -> "ConstraintSpec":
        return ConstraintSpec(LINEAR, g=np.asarray(g, dtype=complex), c=c)

    def resolved_g_c(self, m: int):
        if self.kind == FCC:
            g = np.zeros(m, dtype=complex)
            g[0] = 1.0
            return g, 1.0 + 0.0j
        return np.asarray(self.g, dtype=complex), complex(self.c)


@dataclass
class EstimationReport:
    f_hat: CalibrationVector
    iterations: int
    final_cost: float
    converged: bool


def normalize_for_constraint(f: np.ndarray, constraint: ConstraintSpec) -> np.ndarray:
    """Rescale an estimate (defined up to scale) to satisfy the constraint."""
    f = np.asarray(f, dtype=complex)
    if constraint.kind == FCC:
        return f / f[0]
    if constraint.kind == UNIT_NORM:
        return f / np.linalg.norm(f)
    if constraint.kind == NPC:
        fu = f / np.linalg.norm(f)
        c = float(np.real(constraint.c))
        phi = np.angle(fu.conj() @ constraint.true_f)
        return np.sqrt(c) * np.exp(1j * phi) * fu
    if constraint.kind == LINEAR:
        g, c = constraint.g, complex(constraint.c)
        return f * np.conj(c / (f.conj() @ g))
    raise ValueError(constraint.kind)


def _smallest_eigvec(a: np.ndarray):
    """Eigenvector for the smallest eigenvalue of a Hermitian PSD matrix."""
    w, v = np.linalg.eigh(a)
    scale = max(w[-1], 1.0)
    tie = a.shape[0] > 1 and (w[1] - w[0]) <= a.shape[0] * np.finfo(float).eps * scale
    return v[:, 0], float(w[0].real), tie


def _solve_linear_constrained(y_matrix: np.ndarray, g: np.ndarray, c: complex):
    """min ||Y f||^2 s.t. f^H g = c, robust to a singular Gram matrix.

    Equivalent to the closed form c / (g^H A^{-1} g) * A^{-1} g whenever
    A = Y^H Y is invertible, but also exact in the noiseless (singular-A)
    case, where the closed form degenerates.
    """
    gnorm2 = np.real(g.conj() @ g)
    if gnorm2 == 0:
        raise ValueError("degenerate constraint: g = 0")
    f_part = np.conj(c) * g / gnorm2          # satisfies f^H g = c
    v = null_space(g.conj()[None, :])         # orthonormal complement of g
    z, *_ = np.linalg.lstsq(y_matrix @ v, -(y_matrix @ f_part), rcond=None)
    return f_part + v @ z


def ls_estimate(sys: StackedSystem, constraint: ConstraintSpec) -> EstimationReport:
    """Constrained least-squares over the stacked system.

    FCC/LINEAR solve the equality-constrained quadratic program; UNIT_NORM
    takes the smallest eigenvector of Y^H Y; NPC rescales the unit-norm
    solution in norm and phase against the true f.
    """
    m = sys.m
    identifiable = sys.rows >= m - 1
    if constraint.kind in (FCC, LINEAR):
        g, c = constraint.resolved_g_c(m)
        f = _solve_linear_constrained(sys.y_matrix, g, c)
        tie = False
    else:
        f, _, tie = _smallest_eigvec(sys.gram())
        if constraint.kind == NPC:
            f = normalize_for_constraint(f, constraint)
    cost = float(np.linalg.norm(sys.y_matrix @ f) ** 2)
    tag = constraint.kind if constraint.kind != LINEAR else "NONE"
    return EstimationReport(CalibrationVector(f, tag), 1, cost,
                            converged=identifiable and not tie)


def argos_estimate(measurements, partition: AntennaPartition,
                   ref_value: complex = 1.0) -> CalibrationVector:
    """Ratio estimator against a reference antenna: f_i = f_1 y_{i->1} / y_{1->i}.

    Accepts either the native 2-group partition ({reference} + rest, with
    identity pilots for the big group) or an all-singleton partition, from
    which only the links with antenna 0 are used.
    """
    m = partition.num_antennas
    f = np.empty(m, dtype=complex)
    f[0] = ref_value
    if partition.num_groups == 2 and partition.group_sizes[0] == 1:
        y_to_ref = measurements.block(1, 0).ravel()    # 1 x (M-1) row, antenna k -> ref
        y_from_ref = measurements.block(0, 1).ravel()  # (M-1) x 1 col, ref -> antenna k
    elif all(s == 1 for s in partition.group_sizes):
        y_to_ref = np.array([measurements.block(k, 0).item() for k in range(1, m)])
        y_from_ref = np.array([measurements.block(0, k).item() for k in range(1, m)])
    else:
        raise ValueError("argos needs a {reference} + rest or all-singleton partition")
    if np.any(y_from_ref == 0):
        raise ZeroDivisionError("zero received sample on a reference link")
    f[1:] = ref_value * y_to_ref / y_from_ref
    return CalibrationVector(f, "FCC" if ref_value == 1.0 else "NONE")


def rogalin_gram(measurements, partition: AntennaPartition) -> np.ndarray:
    """A = Y(P)^H Y(P) for the all-singleton partition, assembled directly:

    A[i,i] = sum_{k != i} |y_{k->i}|^2,  A[i,j] = -conj(y_{j->i}) y_{i->j}.
    """
    if any(s != 1 for s in partition.group_sizes):
        raise ValueError("rogalin estimator needs single-antenna groups")
    m = partition.num_antennas
    a = np.zeros((m, m), dtype=complex)
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            y_ji = measurements.block(j, i).item()
            y_ij = measurements.block(i, j).item()
            a[i, i] += abs(y_ji) ** 2
            a[i, j] = -np.conj(y_ji) * y_ij
    return a


def rogalin_estimate(measurements, partition: AntennaPartition,
                     constraint: ConstraintSpec) -> EstimationReport:
    """Joint estimation from round-robin single-antenna broadcasts."""
    a = rogalin_gram(measurements, partition)
    m = partition.num_antennas
    tie = False
    if constraint.kind == FCC:
        # min f^H A f with f_0 = 1: f_rest = -A22^+ a21
        rest, *_ = np.linalg.lstsq(a[1:, 1:], -a[1:, 0], rcond=None)
        f = np.concatenate(([1.0 + 0.0j], rest))
    elif constraint.kind in (UNIT_NORM, NPC):
        f, _, tie = _smallest_eigvec(a)
        if constraint.kind == NPC:
            f = normalize_for_constraint(f, constraint)
    else:
        raise ValueError("unsupported constraint for rogalin estimator")
    cost = float(np.real(f.conj() @ a @ f))
    return EstimationReport(CalibrationVector(f, constraint.kind), 1, cost, not tie)


def daisy_chain_estimate(measurements, partition: AntennaPartition,
                         ref_value: complex = 1.0) -> CalibrationVector:
    """Sequential ratio chain over adjacent single antennas: f_i from f_{i-1}."""
    if any(s != 1 for s in partition.group_sizes):
        raise ValueError("daisy chain needs single-antenna groups")
    m = partition.num_antennas
    f = np.empty(m, dtype=complex)
    f[0] = ref_value
    for i in range(1, m):
        up = measurements.block(i, i - 1).item()     # i transmits, i-1 receives
        down = measurements.block(i - 1, i).item()
        if down == 0:
            raise ZeroDivisionError(f"zero received sample on link {i - 1}->{i}")
        f[i] = f[i - 1] * up / down
    return CalibrationVector(f, "FCC" if ref_value == 1.0 else "NONE")


def avalanche_estimate(measurements, pilots, partition: AntennaPartition) -> CalibrationVector:
    """Online recursion: each group is solved from already-calibrated groups.

    Requires L_i = 1 pilots, a single-antenna first group seeding f_1 = 1, and
    M_i <= i-1 so each group's LS subproblem is (at least) exactly determined.
    """
    if any(l != 1 for l in partition.pilot_lengths):
        raise ValueError("avalanche uses single-channel-use pilots (L_i = 1)")
    if partition.group_sizes[0] != 1:
        raise ValueError("avalanche seeds the recursion with a single-antenna group")
    for g0, sz in enumerate(partition.group_sizes):
        if g0 >= 1 and sz > g0:
            raise ValueError(f"group {g0} has {sz} antennas > {g0} calibrated equations")
    m = partition.num_antennas
    f = np.empty(m, dtype=complex)
    f_groups = [np.ones(1, dtype=complex)]
    f[partition.antennas_of(0)] = f_groups[0]
    for g0 in range(1, partition.num_groups):
        pg = pilots[g0][:, 0]
        rows = []
        rhs = []
        for j in range(g0):
            y_jg = measurements.block(j, g0)[:, 0]   # received at group g0
            y_gj = measurements.block(g0, j)[:, 0]   # received at group j
            rows.append(y_jg * pg)
            rhs.append((pilots[j][:, 0] * y_gj) @ f_groups[j])
        y_mat = np.array(rows)
        sol, _, rank, _ = np.linalg.lstsq(y_mat, np.array(rhs), rcond=None)
        if rank < partition.group_sizes[g0]:
            raise np.linalg.LinAlgError(f"avalanche: rank-deficient system at group {g0}")
        f_groups.append(sol)
        f[partition.antennas_of(g0)] = sol
    return CalibrationVector(f, "FCC")


def aml_estimate(measurements, pilots, partition: AntennaPartition,
                 init: np.ndarray | None = None, tol: float = 1e-6,
                 max_iter: int = 100,
                 constraint: ConstraintSpec | None = None) -> EstimationReport:
    """Alternating maximum likelihood on the bilinear model y = H(h) f = F(f) h.

    Each half-step is an exact quadratic solve, so the residual cost
    ||y - H f||^2 is non-increasing.  Least-squares solves tolerate a singular
    F^H F (minimum-norm solution).  Non-convergence is reported, not raised.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    y = _crb.stack_observations(measurements, partition)
    f = np.ones(partition.num_antennas, dtype=complex) if init is None \
        else np.asarray(init, dtype=complex).copy()
    if not np.any(f):
        raise ValueError("init must be nonzero")
    cost = np.inf
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        f_mat = _crb.build_f_composite(f, pilots, partition)
        h, *_ = np.linalg.lstsq(f_mat, y, rcond=None)
        h_mat = _crb.build_h_composite(_crb.split_h(h, partition), pilots, partition)
        f_new, *_ = np.linalg.lstsq(h_mat, y, rcond=None)
        cost = float(np.linalg.norm(y - h_mat @ f_new) ** 2)
        delta = np.linalg.norm(f_new - f) / np.linalg.norm(f)
        f = f_new
        if delta < tol:
            converged = True
            break
    tag = "NONE"
    if constraint is not None:
        f = normalize_for_constraint(f, constraint)
        tag = constraint.kind if constraint.kind in ("FCC", "NPC", "UNIT_NORM") else "NONE"
    return EstimationReport(CalibrationVector(f, tag), it, cost, converged)


def mse(f_hat, f_true) -> float:
    """Squared Euclidean error ||f_hat - f_true||^2 (one trial's contribution)."""
    a = f_hat.f if isinstance(f_hat, CalibrationVector) else np.asarray(f_hat)
    b = f_true.f if isinstance(f_true, CalibrationVector) else np.asarray(f_true)
    if a.shape != b.shape:
        raise ValueError("estimate and reference must have the same length")
    return float(np.linalg.norm(a - b) ** 2)
