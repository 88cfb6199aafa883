"""Hot numerical kernels: residual assembly and BMO ball scans.

Each kernel has a numba-compiled implementation and a pure-numpy
fallback.  The backend is chosen once from the ``CROSSDIFF_NUMBA``
environment variable (``1``/``true`` force numba, ``0``/``false`` force
numpy, anything else picks numba when importable) and can be overridden
at runtime via :func:`select_backend` for benchmarking.

The flux convention: on a cell-centered grid the face flux between
neighbours ``p`` and ``q`` is ``A(sigma * (u_p + u_q)/2) (u_q - u_p)/h``
and the residual is ``-(flux divergence) - f(sigma * u)``.  Neumann
walls carry zero flux; Dirichlet walls reflect the ghost state
(``u_ghost = -u_wall``) so the face value is pinned at 0.
"""

from __future__ import annotations

import os
import warnings

import numpy as np
from numpy.typing import NDArray

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(func):
            return func

        if args and callable(args[0]):
            return args[0]
        return wrap


def _env_backend() -> str:
    env = os.environ.get("CROSSDIFF_NUMBA", "auto").strip().lower()
    if env in ("0", "false", "no", "off", "numpy"):
        return "numpy"
    if env in ("1", "true", "yes", "on", "numba"):
        if not HAS_NUMBA:
            warnings.warn(
                "CROSSDIFF_NUMBA requested numba but it is not importable; "
                "falling back to numpy",
                RuntimeWarning,
            )
            return "numpy"
        return "numba"
    return "numba" if HAS_NUMBA else "numpy"


_BACKEND = _env_backend()


def get_backend() -> str:
    return _BACKEND


def select_backend(name: str) -> None:
    """Override the kernel backend (``"numba"`` or ``"numpy"``)."""
    global _BACKEND
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAS_NUMBA:
        raise ValueError("numba backend requested but numba is not importable")
    _BACKEND = name


# -- residual, numpy ------------------------------------------------------


def _reaction_np(
    u: NDArray[np.float64],
    r: NDArray[np.float64],
    c: NDArray[np.float64],
    sigma: float,
) -> NDArray[np.float64]:
    v = sigma * u
    return v * (r - v @ c.T)


def _face_flux_np(
    u_p: NDArray[np.float64],
    u_q: NDArray[np.float64],
    h: float,
    d: NDArray[np.float64],
    alpha: NDArray[np.float64],
    sigma: float,
) -> NDArray[np.float64]:
    v = 0.5 * sigma * (u_p + u_q)
    du = (u_q - u_p) / h
    s = v @ alpha.T
    t = du @ alpha.T
    return (d + s) * du + v * t


def residual_1d_numpy(
    u: NDArray[np.float64],
    h: float,
    d: NDArray[np.float64],
    alpha: NDArray[np.float64],
    r: NDArray[np.float64],
    c: NDArray[np.float64],
    sigma: float,
    dirichlet: bool,
) -> NDArray[np.float64]:
    R = -_reaction_np(u, r, c, sigma)
    flux = _face_flux_np(u[:-1], u[1:], h, d, alpha, sigma)
    R[:-1] -= flux / h
    R[1:] += flux / h
    if dirichlet:
        # Ghost reflection u_ghost = -u_wall pins the face value at zero,
        # so the wall coefficient is A(0) = diag(d).
        R[0] += 2.0 * d * u[0] / h**2
        R[-1] += 2.0 * d * u[-1] / h**2
    return R


def residual_2d_numpy(
    u: NDArray[np.float64],
    hx: float,
    hy: float,
    d: NDArray[np.float64],
    alpha: NDArray[np.float64],
    r: NDArray[np.float64],
    c: NDArray[np.float64],
    sigma: float,
    dirichlet: bool,
) -> NDArray[np.float64]:
    R = -_reaction_np(u, r, c, sigma)
    fx = _face_flux_np(u[:-1, :, :], u[1:, :, :], hx, d, alpha, sigma)
    R[:-1, :, :] -= fx / hx
    R[1:, :, :] += fx / hx
    fy = _face_flux_np(u[:, :-1, :], u[:, 1:, :], hy, d, alpha, sigma)
    R[:, :-1, :] -= fy / hy
    R[:, 1:, :] += fy / hy
    if dirichlet:
        R[0, :, :] += 2.0 * d * u[0, :, :] / hx**2
        R[-1, :, :] += 2.0 * d * u[-1, :, :] / hx**2
        R[:, 0, :] += 2.0 * d * u[:, 0, :] / hy**2
        R[:, -1, :] += 2.0 * d * u[:, -1, :] / hy**2
    return R


# -- residual, numba ------------------------------------------------------


@njit(cache=True)
def _residual_1d_nb(u, h, d, alpha, r, c, sigma, dirichlet):  # pragma: no cover
    N, m = u.shape
    R = np.zeros((N, m))
    v = np.zeros(m)
    du = np.zeros(m)
    for j in range(N - 1):
        for i in range(m):
            v[i] = 0.5 * sigma * (u[j, i] + u[j + 1, i])
            du[i] = (u[j + 1, i] - u[j, i]) / h
        for i in range(m):
            s = 0.0
            t = 0.0
            for l in range(m):
                s += alpha[i, l] * v[l]
                t += alpha[i, l] * du[l]
            flux = (d[i] + s) * du[i] + v[i] * t
            R[j, i] -= flux / h
            R[j + 1, i] += flux / h
    for j in range(N):
        for i in range(m):
            gi = r[i]
            for l in range(m):
                gi -= c[i, l] * sigma * u[j, l]
            R[j, i] -= sigma * u[j, i] * gi
    if dirichlet:
        for i in range(m):
            R[0, i] += 2.0 * d[i] * u[0, i] / h**2
            R[N - 1, i] += 2.0 * d[i] * u[N - 1, i] / h**2
    return R


@njit(cache=True)
def _residual_2d_nb(u, hx, hy, d, alpha, r, c, sigma, dirichlet):  # pragma: no cover
    Nx, Ny, m = u.shape
    R = np.zeros((Nx, Ny, m))
    v = np.zeros(m)
    du = np.zeros(m)
    for jx in range(Nx):
        for jy in range(Ny):
            if jx < Nx - 1:
                for i in range(m):
                    v[i] = 0.5 * sigma * (u[jx, jy, i] + u[jx + 1, jy, i])
                    du[i] = (u[jx + 1, jy, i] - u[jx, jy, i]) / hx
                for i in range(m):
                    s = 0.0
                    t = 0.0
                    for l in range(m):
                        s += alpha[i, l] * v[l]
                        t += alpha[i, l] * du[l]
                    flux = (d[i] + s) * du[i] + v[i] * t
                    R[jx, jy, i] -= flux / hx
                    R[jx + 1, jy, i] += flux / hx
            if jy < Ny - 1:
                for i in range(m):
                    v[i] = 0.5 * sigma * (u[jx, jy, i] + u[jx, jy + 1, i])
                    du[i] = (u[jx, jy + 1, i] - u[jx, jy, i]) / hy
                for i in range(m):
                    s = 0.0
                    t = 0.0
                    for l in range(m):
                        s += alpha[i, l] * v[l]
                        t += alpha[i, l] * du[l]
                    flux = (d[i] + s) * du[i] + v[i] * t
                    R[jx, jy, i] -= flux / hy
                    R[jx, jy + 1, i] += flux / hy
            for i in range(m):
                gi = r[i]
                for l in range(m):
                    gi -= c[i, l] * sigma * u[jx, jy, l]
                R[jx, jy, i] -= sigma * u[jx, jy, i] * gi
    if dirichlet:
        for jy in range(Ny):
            for i in range(m):
                R[0, jy, i] += 2.0 * d[i] * u[0, jy, i] / hx**2
                R[Nx - 1, jy, i] += 2.0 * d[i] * u[Nx - 1, jy, i] / hx**2
        for jx in range(Nx):
            for i in range(m):
                R[jx, 0, i] += 2.0 * d[i] * u[jx, 0, i] / hy**2
                R[jx, Ny - 1, i] += 2.0 * d[i] * u[jx, Ny - 1, i] / hy**2
    return R


def residual_field(
    u: NDArray[np.float64],
    h: tuple[float, ...],
    d: NDArray[np.float64],
    alpha: NDArray[np.float64],
    r: NDArray[np.float64],
    c: NDArray[np.float64],
    sigma: float,
    dirichlet: bool,
    backend: str | None = None,
) -> NDArray[np.float64]:
    """Dispatch the residual kernel for a 1D or 2D field ``u``."""
    backend = backend or _BACKEND
    args = (d, alpha, r, c, float(sigma), bool(dirichlet))
    if u.ndim == 2:
        if backend == "numba":
            return _residual_1d_nb(u, h[0], *args)
        return residual_1d_numpy(u, h[0], *args)
    if u.ndim == 3:
        if backend == "numba":
            return _residual_2d_nb(u, h[0], h[1], *args)
        return residual_2d_numpy(u, h[0], h[1], *args)
    raise ValueError(f"field must be 1D or 2D with components, got ndim {u.ndim}")


# -- BMO ball scan ---------------------------------------------------------


def bmo_scan_numpy(
    vals: NDArray[np.float64],
    pts: NDArray[np.float64],
    radii: NDArray[np.float64],
) -> float:
    sup = 0.0
    r2 = np.sort(radii) ** 2
    for center in range(pts.shape[0]):
        dist2 = ((pts - pts[center]) ** 2).sum(axis=1)
        for rr in r2:
            mask = dist2 <= rr
            ball = vals[mask]
            mean = ball.mean(axis=0)
            osc = float(np.linalg.norm(ball - mean, axis=1).mean())
            if osc > sup:
                sup = osc
    return sup


@njit(cache=True)
def _bmo_scan_nb(vals, pts, radii):  # pragma: no cover
    n, m = vals.shape
    dim = pts.shape[1]
    k = radii.shape[0]
    sup = 0.0
    mean = np.zeros(m)
    for center in range(n):
        for ri in range(k):
            r2 = radii[ri] * radii[ri]
            cnt = 0
            for i in range(m):
                mean[i] = 0.0
            for p in range(n):
                dist2 = 0.0
                for a in range(dim):
                    diff = pts[p, a] - pts[center, a]
                    dist2 += diff * diff
                if dist2 <= r2:
                    cnt += 1
                    for i in range(m):
                        mean[i] += vals[p, i]
            for i in range(m):
                mean[i] /= cnt
            osc = 0.0
            for p in range(n):
                dist2 = 0.0
                for a in range(dim):
                    diff = pts[p, a] - pts[center, a]
                    dist2 += diff * diff
                if dist2 <= r2:
                    acc = 0.0
                    for i in range(m):
                        diff = vals[p, i] - mean[i]
                        acc += diff * diff
                    osc += np.sqrt(acc)
            osc /= cnt
            if osc > sup:
                sup = osc
    return sup


def bmo_scan(
    vals: NDArray[np.float64],
    pts: NDArray[np.float64],
    radii: NDArray[np.float64],
    backend: str | None = None,
) -> float:
    """Supremum over centers and radii of the ball mean oscillation."""
    backend = backend or _BACKEND
    vals = np.ascontiguousarray(vals, dtype=float)
    pts = np.ascontiguousarray(pts, dtype=float)
    radii = np.ascontiguousarray(radii, dtype=float)
    if backend == "numba":
        return float(_bmo_scan_nb(vals, pts, radii))
    return bmo_scan_numpy(vals, pts, radii)
