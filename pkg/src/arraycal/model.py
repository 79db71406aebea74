"""Domain types and random generation of RF impairments and intra-array channels.

The digital channel between two antenna subsets A and B is the cascade
H_{A->B} = R_B C_{A->B} T_A, where T and R are the diagonal Tx/Rx front-end
responses and C is the reciprocal over-the-air propagation channel
(C_{A->B} = C_{B->A}^T).  The calibration vector is f_m = t_m / r_m; it maps
the two link directions onto each other and is identifiable up to one complex
scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

IID_RAYLEIGH = "IID_RAYLEIGH"
GEOMETRIC = "GEOMETRIC"


@dataclass(frozen=True)
class AntennaPartition:
    """Partition of M antennas into G groups with per-group pilot lengths."""

    group_sizes: tuple
    pilot_lengths: tuple

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.group_sizes)
        lens = tuple(int(l) for l in self.pilot_lengths)
        object.__setattr__(self, "group_sizes", sizes)
        object.__setattr__(self, "pilot_lengths", lens)
        if len(sizes) != len(lens):
            raise ValueError("group_sizes and pilot_lengths must have equal length")
        if len(sizes) < 2:
            raise ValueError("need at least two antenna groups")
        if any(s < 1 for s in sizes) or any(l < 1 for l in lens):
            raise ValueError("group sizes and pilot lengths must be positive")

    @property
    def num_groups(self) -> int:
        return len(self.group_sizes)

    @property
    def num_antennas(self) -> int:
        return sum(self.group_sizes)

    @property
    def offsets(self) -> tuple:
        """Start index of each group in the global antenna ordering."""
        out, acc = [], 0
        for s in self.group_sizes:
            out.append(acc)
            acc += s
        return tuple(out)

    def antennas_of(self, i: int) -> slice:
        o = self.offsets[i]
        return slice(o, o + self.group_sizes[i])

    def pairs(self):
        """All group pairs (i, j) with i < j, in lexicographic order."""
        g = self.num_groups
        return [(i, j) for i in range(g) for j in range(i + 1, g)]

    @staticmethod
    def singleton(m: int, pilot_length: int = 1) -> "AntennaPartition":
        return AntennaPartition((1,) * m, (pilot_length,) * m)


@dataclass(frozen=True)
class RfImpairments:
    """Diagonals of the Tx and Rx front-end response matrices."""

    tx_gains: np.ndarray
    rx_gains: np.ndarray

    def __post_init__(self):
        tx = np.asarray(self.tx_gains, dtype=complex)
        rx = np.asarray(self.rx_gains, dtype=complex)
        object.__setattr__(self, "tx_gains", tx)
        object.__setattr__(self, "rx_gains", rx)
        if tx.shape != rx.shape or tx.ndim != 1:
            raise ValueError("tx_gains and rx_gains must be 1-d and of equal length")
        if np.any(tx == 0) or np.any(rx == 0):
            raise ValueError("front-end gains must be nonzero")

    @property
    def num_antennas(self) -> int:
        return self.tx_gains.size


@dataclass(frozen=True)
class CalibrationVector:
    """Per-antenna Tx/Rx ratio, together with the constraint it satisfies."""

    f: np.ndarray
    constraint_tag: str = "NONE"

    def __post_init__(self):
        object.__setattr__(self, "f", np.asarray(self.f, dtype=complex))
        if self.constraint_tag not in ("FCC", "NPC", "UNIT_NORM", "NONE"):
            raise ValueError(f"unknown constraint tag {self.constraint_tag!r}")


@dataclass(frozen=True)
class GeometryConfig:
    """Rectangular antenna grid; spacing given in wavelengths (d / lambda)."""

    rows: int
    cols: int
    spacing_over_wavelength: float

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid dimensions must be positive")
        if self.spacing_over_wavelength <= 0:
            raise ValueError("antenna spacing must be positive")

    @property
    def num_antennas(self) -> int:
        return self.rows * self.cols

    def positions(self) -> np.ndarray:
        """(M, 2) coordinates in wavelengths, column-major antenna numbering."""
        d = self.spacing_over_wavelength
        cc, rr = np.meshgrid(np.arange(self.cols), np.arange(self.rows))
        # column-major: antenna index runs down each column first
        return np.stack([rr.ravel(order="F") * d, cc.ravel(order="F") * d], axis=1)


@dataclass(frozen=True)
class ImpairmentConfig:
    """Amplitude spread delta in [0, 1); phases are always uniform in [-pi, pi]."""

    amplitude_spread: float = 0.1
    fix_first_to_one: bool = False

    def __post_init__(self):
        if not (0.0 <= self.amplitude_spread < 1.0):
            raise ValueError("amplitude spread must lie in [0, 1)")


@dataclass(frozen=True)
class ChannelRealization:
    """Reciprocal intra-array channel: c is symmetric (c = c^T, not Hermitian).

    ref_gain is the magnitude of the strongest link; the SNR definition of the
    simulator is referenced to it (for the geometric model this is the gain at
    the receive antenna nearest to the transmitter).
    """

    c: np.ndarray
    model_tag: str
    ref_gain: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "c", np.asarray(self.c, dtype=complex))
        if self.model_tag not in (IID_RAYLEIGH, GEOMETRIC):
            raise ValueError(f"unknown channel model {self.model_tag!r}")

    @property
    def num_antennas(self) -> int:
        return self.c.shape[0]


def gen_impairments(config: ImpairmentConfig, m: int, rng: np.random.Generator) -> RfImpairments:
    """Draw Tx/Rx gains with amplitude uniform in [1-delta, 1+delta] and uniform phase.

    With fix_first_to_one, the first Rx gain is tied to the first Tx gain so
    that f[0] = t_0 / r_0 = 1 exactly (amplitudes stay in range).
    """
    if m < 2:
        raise ValueError("need at least 2 antennas")
    d = config.amplitude_spread

    def draw():
        amp = rng.uniform(1.0 - d, 1.0 + d, size=m)
        ph = rng.uniform(-np.pi, np.pi, size=m)
        return amp * np.exp(1j * ph)

    tx = draw()
    rx = draw()
    if config.fix_first_to_one:
        rx[0] = tx[0]
    return RfImpairments(tx, rx)


def calibration_vector(imp: RfImpairments) -> CalibrationVector:
    """f_m = t_m / r_m, the diagonal case of R^{-T} T."""
    if np.any(imp.rx_gains == 0):
        raise ZeroDivisionError("rx gain is zero; calibration vector undefined")
    return CalibrationVector(imp.tx_gains / imp.rx_gains, "NONE")


def gen_channel(m: int, model: str, rng: np.random.Generator,
                geometry: GeometryConfig | None = None) -> ChannelRealization:
    """Draw one reciprocal intra-array channel realization.

    IID_RAYLEIGH: upper-triangle entries are unit-variance circularly-symmetric
    complex Gaussian, mirrored.  GEOMETRIC: |c_ij| = lambda / (4 pi d_ij) with
    i.i.d. uniform phases, mirrored.  The diagonal is unused and left at zero.
    """
    if model == IID_RAYLEIGH:
        g = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / np.sqrt(2)
        c = np.triu(g, 1)
        c = c + c.T
        return ChannelRealization(c, model, ref_gain=1.0)
    if model == GEOMETRIC:
        if geometry is None:
            raise ValueError("geometric channel model requires a GeometryConfig")
        if geometry.num_antennas != m:
            raise ValueError("geometry grid size does not match antenna count")
        pos = geometry.positions()
        dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=2)
        with np.errstate(divide="ignore"):
            mag = 1.0 / (4.0 * np.pi * dist)
        np.fill_diagonal(mag, 0.0)
        ph = rng.uniform(-np.pi, np.pi, size=(m, m))
        c = np.triu(mag * np.exp(1j * ph), 1)
        c = c + c.T
        ref = 1.0 / (4.0 * np.pi * dist[dist > 0].min())
        return ChannelRealization(c, model, ref_gain=ref)
    raise ValueError(f"unknown channel model {model!r}")


def compose_digital_channel(imp_tx: RfImpairments, imp_rx: RfImpairments,
                            c: np.ndarray) -> np.ndarray:
    """Digital channel R_B C T_A for diagonal impairments (side A transmits)."""
    c = np.asarray(c, dtype=complex)
    if c.ndim != 2 or c.shape != (imp_rx.num_antennas, imp_tx.num_antennas):
        raise ValueError("channel block shape must be (rx antennas, tx antennas)")
    return imp_rx.rx_gains[:, None] * c * imp_tx.tx_gains[None, :]
