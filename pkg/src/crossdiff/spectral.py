"""Neumann Laplacian spectra on intervals and rectangles.

Analytic eigenvalues with exact multiplicities (collisions detected, not
split), plus a finite-difference discrete spectrum used as an
independent cross-check and by the verification oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import eigh_tridiagonal

from .model import ConfigError, Domain

TOL_COLLIDE = 1e-9
_MAX_LATTICE = 4096


@dataclass(frozen=True)
class SpectrumEntry:
    """One distinct Laplacian eigenvalue with its multiplicity.

    ``mode_indices`` lists the integer lattice tuples ``(k,)`` or
    ``(k1, k2)`` whose separated cosine products span the eigenspace.
    """

    lambda_hat: float
    M: int
    mode_indices: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class ModeSpectrum:
    """Ordered distinct eigenvalues of the Neumann Laplacian."""

    entries: tuple[SpectrumEntry, ...]
    domain: Domain

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[SpectrumEntry]:
        return iter(self.entries)

    def __getitem__(self, i: int) -> SpectrumEntry:
        return self.entries[i]

    @property
    def values(self) -> NDArray[np.float64]:
        return np.array([e.lambda_hat for e in self.entries])

    def nonzero(self) -> tuple[SpectrumEntry, ...]:
        """Entries with positive eigenvalue (drops the constant mode)."""
        return tuple(e for e in self.entries if e.lambda_hat > 0.0)

    @property
    def min_gap(self) -> float:
        """Minimal gap between consecutive distinct eigenvalues.

        Near-degenerate pairs from irrational side ratios can defeat the
        collision tolerance; a tiny gap is the caller's warning sign.
        """
        vals = self.values
        if vals.size < 2:
            return math.inf
        return float(np.diff(vals).min())


def _group_by_collision(
    values: NDArray[np.float64], indices: list[tuple[int, ...]]
) -> list[SpectrumEntry]:
    order = np.argsort(values, kind="stable")
    entries: list[SpectrumEntry] = []
    cur_val: float | None = None
    cur_idx: list[tuple[int, ...]] = []
    for pos in order:
        v = float(values[pos])
        if cur_val is None or v - cur_val > TOL_COLLIDE * max(1.0, abs(v)):
            if cur_val is not None:
                entries.append(
                    SpectrumEntry(cur_val, len(cur_idx), tuple(sorted(cur_idx)))
                )
            cur_val = v
            cur_idx = [indices[pos]]
        else:
            cur_idx.append(indices[pos])
    if cur_val is not None:
        entries.append(SpectrumEntry(cur_val, len(cur_idx), tuple(sorted(cur_idx))))
    return entries


def neumann_eigenvalues(domain: Domain, count: int) -> ModeSpectrum:
    """First ``count`` distinct Neumann eigenvalues of ``-Laplace``.

    Interval ``(0, L)``: ``lambda_k = (k pi / L)^2`` with eigenfunction
    ``cos(k pi x / L)``, all simple.  Rectangle: sums over both axes,
    with multiplicities from exact value collisions.
    """
    if count < 1:
        raise ConfigError(f"count must be >= 1, got {count}")
    if domain.kind == "interval":
        L = domain.lengths[0]
        entries = tuple(
            SpectrumEntry((k * math.pi / L) ** 2, 1, ((k,),)) for k in range(count)
        )
        return ModeSpectrum(entries=entries, domain=domain)

    L1, L2 = domain.lengths
    Lmax = max(L1, L2)
    K = max(4, count)
    while True:
        ks = np.arange(K + 1)
        v1 = (ks * math.pi / L1) ** 2
        v2 = (ks * math.pi / L2) ** 2
        values = (v1[:, None] + v2[None, :]).ravel()
        indices = [(int(a), int(b)) for a in ks for b in ks]
        entries = _group_by_collision(values, indices)
        # Any lattice point outside the K x K block exceeds this floor, so
        # distinct values strictly below it are complete with multiplicity.
        floor_next = ((K + 1) * math.pi / Lmax) ** 2
        safe = [e for e in entries if e.lambda_hat < floor_next * (1.0 - 1e-12)]
        if len(safe) >= count:
            return ModeSpectrum(entries=tuple(safe[:count]), domain=domain)
        if K > _MAX_LATTICE:
            raise ConfigError(
                f"rectangle spectrum enumeration exceeded {_MAX_LATTICE}^2 lattice"
            )
        K *= 2


def spectrum_through(domain: Domain, bound: float, extra: int = 0) -> ModeSpectrum:
    """All distinct eigenvalues with ``lambda_hat <= bound``, plus ``extra`` more."""
    count = 8
    while True:
        spec = neumann_eigenvalues(domain, count)
        above = [i for i, e in enumerate(spec.entries) if e.lambda_hat > bound]
        if len(above) > extra:
            keep = above[extra - 1] + 1 if extra > 0 else above[0]
            return ModeSpectrum(entries=spec.entries[:keep], domain=domain)
        if count > 16384:
            raise ConfigError(f"spectral bound {bound:.3e} requires too many modes")
        count *= 2


def eigenfunction(
    domain: Domain, mode_index: Sequence[int], points: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Neumann eigenfunction ``prod_a cos(k_a pi x_a / L_a)`` at points.

    ``points`` has shape ``(..., dim)`` (or ``(...,)`` for intervals).
    """
    pts = np.asarray(points, dtype=float)
    if domain.dimension == 1:
        x = pts[..., 0] if pts.ndim > 1 and pts.shape[-1] == 1 else pts
        return np.cos(mode_index[0] * math.pi * x / domain.lengths[0])
    out = np.ones(pts.shape[:-1])
    for axis, (k, L) in enumerate(zip(mode_index, domain.lengths)):
        out = out * np.cos(k * math.pi * pts[..., axis] / L)
    return out


def _fd_eigs_1d(n: int, L: float, bc: str) -> NDArray[np.float64]:
    """Eigenvalues of the cell-centered FD ``-d2/dx2`` on ``(0, L)``."""
    h = L / n
    diag = np.full(n, 2.0)
    if bc == "neumann":
        diag[0] = diag[-1] = 1.0
    elif bc == "dirichlet":
        diag[0] = diag[-1] = 3.0
    else:
        raise ConfigError(f"unknown boundary condition {bc!r}")
    off = np.full(n - 1, -1.0)
    vals = eigh_tridiagonal(diag, off, eigvals_only=True)
    return np.asarray(vals) / h**2


def discrete_laplacian_spectrum(
    domain: Domain, grid_n: int | Sequence[int], bc: str = "neumann"
) -> NDArray[np.float64]:
    """Sorted eigenvalues of the finite-difference ``-Laplace`` operator.

    Cell-centered grid; Neumann by ghost reflection, Dirichlet by
    zero-pinning at the wall.  On rectangles the operator is a Kronecker
    sum, so eigenvalues are all pairwise sums of the 1D spectra.
    """
    if isinstance(grid_n, int):
        ns = (grid_n,) * domain.dimension
    else:
        ns = tuple(int(n) for n in grid_n)
    if len(ns) != domain.dimension:
        raise ConfigError(
            f"grid_n needs {domain.dimension} entries, got {len(ns)}"
        )
    if any(n < 3 for n in ns):
        raise ConfigError(f"grid_n must be >= 3 per axis, got {ns}")
    spectra = [_fd_eigs_1d(n, L, bc) for n, L in zip(ns, domain.lengths)]
    if domain.dimension == 1:
        vals = spectra[0]
    else:
        vals = (spectra[0][:, None] + spectra[1][None, :]).ravel()
    vals = np.sort(vals)
    if bc == "neumann":
        vals[0] = 0.0  # exact zero mode (constant vector), not roundoff
    return vals
