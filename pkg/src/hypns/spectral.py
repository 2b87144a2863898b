"""Fourier representation of mean-free vector fields on the 2*pi-periodic torus.

All fields are stored by their Fourier coefficients under the unitary
convention: the sum of squared coefficient moduli equals the continuum
L^2 norm squared over [0, 2*pi)^dim, so Parseval holds with constant 1
and homogeneous Sobolev norms are plain |k|^sigma multiplier sums.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform collocation grid with its precomputed spectral quantities.

    Parameters
    ----------
    dim : int
        Spatial dimension, 2 or 3.
    n : int
        Collocation points per axis; must be even and >= 8.  The domain
        period is fixed at 2*pi per axis, so wavenumbers are integers.
    """

    dim: int
    n: int

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if self.n < 8 or self.n % 2 != 0:
            raise ValueError(f"n must be even and >= 8, got {self.n}")

        k1 = np.fft.fftfreq(self.n, 1.0 / self.n)  # integer lattice as floats
        kvec = np.meshgrid(*([k1] * self.dim), indexing="ij")
        k2 = np.zeros_like(kvec[0])
        for k in kvec:
            k2 += k * k
        kmag = np.sqrt(k2)

        # 2/3-rule mask; (n-1)//3 keeps quadratic products of masked fields
        # alias-free on even grids.
        cutoff = (self.n - 1) // 3
        dealias = np.ones(kvec[0].shape, dtype=bool)
        for k in kvec:
            dealias &= np.abs(k) <= cutoff

        # Odd-order derivative symbols must vanish on the unpaired Nyquist
        # row to keep real fields real; the Leray projector uses the same
        # effective wavenumber so divergence(projection) is exactly zero.
        keff = []
        for k in kvec:
            kd = k.copy()
            kd[np.abs(k) == self.n // 2] = 0.0
            keff.append(kd)
        k2eff = np.zeros_like(keff[0])
        for kd in keff:
            k2eff += kd * kd
        ik = [1j * kd for kd in keff]

        object.__setattr__(self, "k", tuple(kvec))
        object.__setattr__(self, "keff", tuple(keff))
        object.__setattr__(self, "k2eff", k2eff)
        object.__setattr__(self, "k2", k2)
        object.__setattr__(self, "kmag", kmag)
        object.__setattr__(self, "dealias_mask", dealias)
        object.__setattr__(self, "dealias_cutoff", cutoff)
        object.__setattr__(self, "ik", tuple(ik))
        object.__setattr__(self, "shape", kvec[0].shape)
        object.__setattr__(self, "cell_volume", (TWO_PI / self.n) ** self.dim)
        # unitary convention: coeffs = fftn(values) * fwd_scale
        object.__setattr__(self, "fwd_scale", TWO_PI ** (self.dim / 2) / self.n**self.dim)

    @property
    def npoints(self) -> int:
        return self.n**self.dim

    def axes(self):
        """Collocation coordinates along one axis (same for every axis)."""
        return np.arange(self.n) * (TWO_PI / self.n)

    def meshgrid(self):
        x = self.axes()
        return np.meshgrid(*([x] * self.dim), indexing="ij")


def make_grid(dim: int, n: int) -> Grid:
    """Build a grid; rejects odd or too-small n."""
    return Grid(dim, n)


def _zero_mode_index(dim: int):
    return (slice(None),) + (0,) * dim


@dataclass(frozen=True, eq=False)
class SpectralField:
    """A real vector (or scalar) field stored by Fourier coefficients.

    Coefficient array has shape (ncomp, n, ..., n).  The zero mode is
    forced to 0 on construction (fields are mean-free) and coefficients
    of fields built from real data satisfy Hermitian symmetry.
    """

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.ndim != self.grid.dim + 1 or c.shape[1:] != self.grid.shape:
            raise ValueError(f"coefficient shape {c.shape} does not match grid {self.grid.shape}")
        c = c.copy()
        c[_zero_mode_index(self.grid.dim)] = 0.0
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def ncomp(self) -> int:
        return self.coeffs.shape[0]

    def values(self) -> np.ndarray:
        """Collocation values, shape (ncomp, n, ..., n)."""
        return inverse_transform(self)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, c: float) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * c)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.grid, -self.coeffs)


def zero_field(grid: Grid, ncomp: int | None = None) -> SpectralField:
    ncomp = grid.dim if ncomp is None else ncomp
    return SpectralField(grid, np.zeros((ncomp,) + grid.shape, dtype=np.complex128))


def transform(grid: Grid, values: np.ndarray):
    """Forward transform of real collocation values.

    Returns (field, mean) where ``mean`` is the removed per-component
    spatial average; the stored zero mode is exactly 0.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim == grid.dim:
        v = v[None]
    if v.ndim != grid.dim + 1 or v.shape[1:] != grid.shape:
        raise ValueError(f"value shape {np.shape(values)} does not match grid {grid.shape}")
    axes = tuple(range(1, grid.dim + 1))
    c = np.fft.fftn(v, axes=axes) * grid.fwd_scale
    mean = c[_zero_mode_index(grid.dim)].real / grid.fwd_scale / grid.npoints
    return SpectralField(grid, c), mean


def inverse_transform(f: SpectralField) -> np.ndarray:
    axes = tuple(range(1, f.grid.dim + 1))
    v = np.fft.ifftn(f.coeffs / f.grid.fwd_scale, axes=axes)
    return v.real


def hermitian_defect(f: SpectralField) -> float:
    """Max deviation from conj(c(k)) == c(-k); 0 for real-valued fields."""
    c = f.coeffs
    flipped = c
    for ax in range(1, f.grid.dim + 1):
        flipped = np.roll(np.flip(flipped, axis=ax), 1, axis=ax)
    return float(np.max(np.abs(c - np.conj(flipped))))


def lambda_power(f: SpectralField, sigma: float) -> SpectralField:
    """Multiplier |k|^sigma (the operator sqrt(-Laplace) to a real power).

    The zero mode stays 0 for every sigma, including negative ones.
    """
    g = f.grid
    if sigma == 0.0:
        return f
    mult = np.where(g.k2 > 0, g.k2, 1.0) ** (sigma / 2.0)
    mult[g.k2 == 0] = 0.0
    return SpectralField(g, f.coeffs * mult)


def sobolev_norm(f: SpectralField, sigma: float) -> float:
    """Homogeneous Sobolev norm: (sum_k |k|^(2 sigma) |f_hat(k)|^2)^(1/2)."""
    g = f.grid
    mag2 = np.sum(np.abs(f.coeffs) ** 2, axis=0)
    if sigma == 0.0:
        return float(np.sqrt(np.sum(mag2)))
    w = np.where(g.k2 > 0, g.k2, 1.0) ** sigma
    w[g.k2 == 0] = 0.0
    return float(np.sqrt(np.sum(w * mag2)))


def l2_norm(f: SpectralField) -> float:
    return sobolev_norm(f, 0.0)


def l2_inner(f: SpectralField, g: SpectralField) -> float:
    """L^2 inner product of two real fields, computed spectrally."""
    return float(np.real(np.sum(np.conj(f.coeffs) * g.coeffs)))


def hs_inner(f: SpectralField, g: SpectralField, sigma: float) -> float:
    """Homogeneous pairing sum_k |k|^(2 sigma) Re conj(f_hat) g_hat."""
    if sigma == 0.0:
        return l2_inner(f, g)
    gr = f.grid
    w = np.where(gr.k2 > 0, gr.k2, 1.0) ** sigma
    w[gr.k2 == 0] = 0.0
    return float(np.real(np.sum(w * np.conj(f.coeffs) * g.coeffs)))


def linf_norm(f: SpectralField) -> float:
    """Max over collocation points of the pointwise Euclidean magnitude."""
    v = inverse_transform(f)
    return float(np.sqrt(np.max(np.sum(v * v, axis=0))))


def _leray_coeffs(grid: Grid, c: np.ndarray) -> np.ndarray:
    k2safe = np.where(grid.k2eff > 0, grid.k2eff, 1.0)
    kdotc = np.zeros(grid.shape, dtype=np.complex128)
    for i in range(grid.dim):
        kdotc += grid.keff[i] * c[i]
    kdotc /= k2safe
    out = c.copy()
    for i in range(grid.dim):
        out[i] -= grid.keff[i] * kdotc
    return out


def leray_project(f: SpectralField) -> SpectralField:
    """Projection onto divergence-free fields: c(k) -= k (k.c(k)) / |k|^2."""
    if f.ncomp != f.grid.dim:
        raise ValueError("Leray projection needs one component per spatial axis")
    return SpectralField(f.grid, _leray_coeffs(f.grid, f.coeffs))


def _divergence_coeffs(grid: Grid, c: np.ndarray) -> np.ndarray:
    d = np.zeros(grid.shape, dtype=np.complex128)
    for i in range(grid.dim):
        d += grid.ik[i] * c[i]
    return d


def divergence(f: SpectralField) -> SpectralField:
    """Spectral divergence, returned as a single-component field."""
    if f.ncomp != f.grid.dim:
        raise ValueError("divergence needs one component per spatial axis")
    return SpectralField(f.grid, _divergence_coeffs(f.grid, f.coeffs)[None])


def divergence_l2(grid: Grid, c: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.abs(_divergence_coeffs(grid, c)) ** 2)))


def dealias(f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, f.coeffs * f.grid.dealias_mask)


def _tensor_divergence_coeffs(grid: Grid, c: np.ndarray) -> np.ndarray:
    """Dealiased nabla : (u (x) u) on raw coefficients.

    Inputs are masked with the 2/3 rule, products formed pointwise on the
    collocation grid, and the output masked again, so no aliased content
    survives below the cutoff.
    """
    axes = tuple(range(1, grid.dim + 1))
    cm = c * grid.dealias_mask
    vals = np.fft.ifftn(cm / grid.fwd_scale, axes=axes).real
    out = np.zeros_like(c)
    for i in range(grid.dim):
        for j in range(i, grid.dim):
            tij = np.fft.fftn(vals[i] * vals[j], axes=(tuple(range(grid.dim)))) * grid.fwd_scale
            out[i] += grid.ik[j] * tij
            if j != i:
                out[j] += grid.ik[i] * tij
    out *= grid.dealias_mask
    return out


def _convection_coeffs(grid: Grid, c: np.ndarray) -> np.ndarray:
    return _leray_coeffs(grid, _tensor_divergence_coeffs(grid, c))


def convection_term(f: SpectralField, div_tol: float = 1e-8) -> SpectralField:
    """Leray-projected convection P nabla : (u (x) u), dealiased.

    Rejects input whose divergence exceeds ``div_tol`` relative to the
    H^1 size of the field.
    """
    g = f.grid
    if f.ncomp != g.dim:
        raise ValueError("convection_term needs one component per spatial axis")
    scale = max(sobolev_norm(f, 1.0), 1e-300)
    if divergence_l2(g, f.coeffs) > div_tol * scale:
        raise ValueError("convection_term requires a divergence-free field")
    return SpectralField(g, _convection_coeffs(g, f.coeffs))
