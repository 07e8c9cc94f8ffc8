"""Periodic spatial discretization: transforms, multipliers, dealiasing, norms.

Fields live on [-L, L)^n with n in {1, 2}; spectral storage uses the
real-to-complex layout with amplitude normalization, so the zero mode is the
spatial mean and mass(u) = (2L)^n * c[0].  The top third of modes is zeroed
after every nonlinear product (2/3 rule).
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .params import OperatorParams

SNAPSHOT_MAGIC = b"MWSN"
SNAPSHOT_VERSION = 1


class BlowUpDetected(RuntimeError):
    """Non-finite physical values encountered; consumed by the time stepper."""

    def __init__(self, t: float):
        super().__init__(f"non-finite field values at t = {t}")
        self.t = t


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [-L, L)^n, N points per dimension."""

    n: int
    N: int
    L: float

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"dimension n must be 1 or 2, got {self.n}")
        if self.N < 64 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two >= 64, got {self.N}")
        if not self.L > 0:
            raise ValueError("box half-length L must be positive")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def cell_volume(self) -> float:
        return self.dx**self.n

    @property
    def volume(self) -> float:
        return (2.0 * self.L) ** self.n

    @cached_property
    def x(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.N)

    @cached_property
    def spectral_shape(self) -> tuple[int, ...]:
        if self.n == 1:
            return (self.N // 2 + 1,)
        return (self.N, self.N // 2 + 1)

    @cached_property
    def wavenumbers(self) -> list[np.ndarray]:
        """Integer mode index along each axis, rfft layout on the last axis."""
        full = np.fft.fftfreq(self.N, d=1.0 / self.N)
        half = np.arange(self.N // 2 + 1, dtype=float)
        if self.n == 1:
            return [half]
        return [full, half]

    @cached_property
    def radii(self) -> np.ndarray:
        """|xi| on the spectral grid; frequencies are k*pi/L."""
        ks = self.wavenumbers
        if self.n == 1:
            return ks[0] * (math.pi / self.L)
        kx = ks[0][:, None]
        ky = ks[1][None, :]
        return np.hypot(kx, ky) * (math.pi / self.L)

    @cached_property
    def conjugate_weights(self) -> np.ndarray:
        """Multiplicity of each stored mode in the full spectral lattice."""
        w = np.full(self.spectral_shape, 2.0)
        if self.n == 1:
            w[0] = 1.0
            w[-1] = 1.0
        else:
            w[:, 0] = 1.0
            w[:, -1] = 1.0
        return w

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        keep = self.N // 3
        ks = self.wavenumbers
        if self.n == 1:
            return np.abs(ks[0]) <= keep
        return (np.abs(ks[0][:, None]) <= keep) & (np.abs(ks[1][None, :]) <= keep)

    @cached_property
    def origin_phase(self) -> np.ndarray:
        """Coefficient phase of a point mass at x = 0 (grid index N/2): (-1)^k."""
        ks = self.wavenumbers
        if self.n == 1:
            return (-1.0) ** ks[0]
        return (-1.0) ** ks[0][:, None] * (-1.0) ** ks[1][None, :]


def to_spectral(grid: Grid, u: np.ndarray) -> np.ndarray:
    """Physical field -> amplitude coefficients (zero mode = spatial mean)."""
    return np.fft.rfftn(u) / grid.N**grid.n


def to_physical(grid: Grid, c: np.ndarray) -> np.ndarray:
    shape = (grid.N,) * grid.n
    return np.fft.irfftn(c * grid.N**grid.n, s=shape, axes=tuple(range(grid.n)))


def enforce_symmetry(grid: Grid, c: np.ndarray) -> np.ndarray:
    """Project onto the exactly conjugate-symmetric subspace (real fields).

    The rfft layout is symmetric by construction except on the self-conjugate
    columns, where drift would make irfftn silently discard energy.
    """
    if grid.n == 1:
        c[0] = c[0].real
        c[-1] = c[-1].real
        return c
    for j in (0, c.shape[1] - 1):
        col = c[:, j]
        sym = 0.5 * (col + np.conj(col[np.r_[0, c.shape[0] - 1:0:-1]]))
        c[:, j] = sym
    c[0, 0] = c[0, 0].real
    return c


@dataclass
class FieldState:
    """Spectral coefficients of (u, u_t) plus the clock time."""

    uhat: np.ndarray
    vhat: np.ndarray
    t: float
    grid: Grid

    @classmethod
    def from_fields(cls, grid: Grid, u: np.ndarray, v: np.ndarray, t: float = 0.0):
        return cls(to_spectral(grid, u), to_spectral(grid, v), t, grid)

    def copy(self) -> "FieldState":
        return FieldState(self.uhat.copy(), self.vhat.copy(), self.t, self.grid)

    def physical_u(self) -> np.ndarray:
        return to_physical(self.grid, self.uhat)

    def physical_v(self) -> np.ndarray:
        return to_physical(self.grid, self.vhat)


def apply_multiplier(state_or_hat, m, grid: Grid | None = None):
    """Multiply spectrally by m(|xi|) (callable on radii or precomputed array)."""
    if isinstance(state_or_hat, FieldState):
        g = state_or_hat.grid
        vals = m(g.radii) if callable(m) else m
        return FieldState(state_or_hat.uhat * vals, state_or_hat.vhat * vals,
                          state_or_hat.t, g)
    vals = m(grid.radii) if callable(m) else m
    return state_or_hat * vals


def apply_operator(params: OperatorParams, grid: Grid, chat: np.ndarray) -> np.ndarray:
    """Apply the mixed diffusion operator a|xi|^2 + b|xi|^(2 sigma) spectrally."""
    r = grid.radii
    return chat * (params.a * r**2 + params.b * r ** (2.0 * params.sigma))


def dealias(grid: Grid, chat: np.ndarray) -> np.ndarray:
    return chat * grid.dealias_mask


def nonlinearity(grid: Grid, uhat: np.ndarray, p: float, t: float = 0.0):
    """Spectral coefficients of |u|^p, dealiased.

    Returns (F_hat, sup|u|, integral |u|^p dx); raises BlowUpDetected on
    non-finite physical values.
    """
    if p < 1:
        raise ValueError("nonlinearity power p must be >= 1")
    with np.errstate(invalid="ignore", over="ignore"):
        u = to_physical(grid, uhat)
    if not np.all(np.isfinite(u)):
        raise BlowUpDetected(t)
    f = np.abs(u) ** p
    fhat = to_spectral(grid, f)
    n_mass = grid.volume * fhat.flat[0].real   # zero mode unaffected by dealiasing
    fhat = dealias(grid, fhat)
    return enforce_symmetry(grid, fhat), float(np.max(np.abs(u))), float(n_mass)


@dataclass(frozen=True)
class NormSample:
    l2: float
    hs: float
    linf: float
    l1: float


def spectral_norm(grid: Grid, chat: np.ndarray, s: float) -> float:
    """Homogeneous Sobolev norm from the spectral sum with weight r^(2s)."""
    r = grid.radii
    w = grid.conjugate_weights
    if s == 0:
        weight = w
    else:
        weight = w * r ** (2.0 * s)   # zero mode drops out of homogeneous norms
    total = float(np.sum(weight * np.abs(chat) ** 2))
    return math.sqrt(grid.volume * total)


def norms(state: FieldState, s: float) -> NormSample:
    if not 0 <= s:
        raise ValueError("s must be nonnegative")
    u = state.physical_u()
    g = state.grid
    return NormSample(
        l2=spectral_norm(g, state.uhat, 0.0),
        hs=spectral_norm(g, state.uhat, s),
        linf=float(np.max(np.abs(u))),
        l1=float(np.sum(np.abs(u)) * g.cell_volume),
    )


def mass(state: FieldState) -> float:
    """Spatial integral of u: (2L)^n times the zero-mode amplitude."""
    return state.grid.volume * float(np.real(state.uhat.flat[0]))


def gaussian_field(grid: Grid, width: float = 1.0, total_mass: float = 1.0) -> np.ndarray:
    """Normalized Gaussian bump centered at the origin (analytic L1 mass)."""
    x = grid.x
    if grid.n == 1:
        q = x**2
    else:
        q = x[:, None] ** 2 + x[None, :] ** 2
    return total_mass * (2.0 * math.pi * width**2) ** (-grid.n / 2.0) * np.exp(
        -q / (2.0 * width**2))


# --- snapshot I/O -----------------------------------------------------------

def write_snapshot(path, grid: Grid, t: float, u: np.ndarray) -> None:
    """Binary dump: magic, version, n, N, L, t, then the row-major field."""
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<IIId", SNAPSHOT_VERSION, grid.n, grid.N, grid.L))
        fh.write(struct.pack("<d", t))
        fh.write(np.ascontiguousarray(u, dtype=np.float64).tobytes())


def read_snapshot(path):
    """Returns (grid, t, field); raises ValueError on malformed files."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != SNAPSHOT_MAGIC:
            raise ValueError(f"not a snapshot file: bad magic {magic!r}")
        version, n, N = struct.unpack("<III", fh.read(12))
        if version != SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot version {version}")
        (L,) = struct.unpack("<d", fh.read(8))
        (t,) = struct.unpack("<d", fh.read(8))
        grid = Grid(n, N, L)
        data = np.frombuffer(fh.read(), dtype=np.float64)
        expected = N**n
        if data.size != expected:
            raise ValueError(f"snapshot payload has {data.size} values, expected {expected}")
        return grid, t, data.reshape((N,) * n)


def write_slice_csv(path, grid: Grid, t: float, u: np.ndarray) -> None:
    """Physical-space slice (full line in 1D, y=0 row in 2D) for plotting."""
    line = u if grid.n == 1 else u[:, grid.N // 2]
    with open(path, "w") as fh:
        fh.write(f"# t = {t!r}\n")
        fh.write("x,u\n")
        for xv, uv in zip(grid.x, line):
            fh.write(f"{xv!r},{uv!r}\n")
