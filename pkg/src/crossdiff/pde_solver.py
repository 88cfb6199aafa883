"""Finite-difference solver for the cross-diffusion steady-state system.

Cell-centered grids on intervals/rectangles; face fluxes use the
arithmetic mean of adjacent states inside ``A``; the Jacobian is
assembled analytically (flux blocks plus reaction blocks).  Solvers:
damped Newton, homotopy continuation in the coefficient-scaling
parameter ``sigma`` (the system ``-Div(A(sigma u) Du) = f(sigma u)``),
and a frozen-coefficient fixed-point iteration as an independent
cross-check.
"""

from __future__ import annotations

import warnings as _warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray
from scipy.sparse.linalg import splu

from . import _kernels
from .index_theory import ModeDecision
from .model import ConfigError, Domain, Model, ModelError
from .spectral import eigenfunction

TOL_NEWTON = 1e-10
TOL_ZERO = 1e-8
TOL_CONST = 1e-6
SIGMA_MIN_STEP = 1e-4
MIN_CELLS = 8


class ConvergenceError(RuntimeError):
    """Solver failed: stagnation, divergence, or iteration budget hit."""

    def __init__(self, message: str, result: "SolveResult | None" = None) -> None:
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class Grid:
    """Cell-centered tensor grid over an interval or rectangle."""

    domain: Domain
    n_cells: tuple[int, ...]
    h: tuple[float, ...]
    coords: tuple[NDArray[np.float64], ...]

    @property
    def ndim(self) -> int:
        return len(self.n_cells)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n_cells

    @property
    def n_nodes(self) -> int:
        out = 1
        for n in self.n_cells:
            out *= n
        return out

    @property
    def cell_volume(self) -> float:
        out = 1.0
        for h in self.h:
            out *= h
        return out

    def points(self) -> NDArray[np.float64]:
        """Node coordinates, shape ``grid.shape + (ndim,)``."""
        mesh = np.meshgrid(*self.coords, indexing="ij")
        return np.stack(mesh, axis=-1)


def make_grid(domain: Domain, n_cells: int | Sequence[int]) -> Grid:
    """Build a cell-centered grid with at least 8 cells per axis."""
    if isinstance(n_cells, (int, np.integer)):
        ns = (int(n_cells),) * domain.dimension
    else:
        ns = tuple(int(n) for n in n_cells)
    if len(ns) != domain.dimension:
        raise ConfigError(f"n_cells needs {domain.dimension} entries, got {len(ns)}")
    if any(n < MIN_CELLS for n in ns):
        raise ConfigError(f"grid too coarse (min {MIN_CELLS} cells per axis): {ns}")
    hs = tuple(L / n for L, n in zip(domain.lengths, ns))
    coords = tuple(
        (np.arange(n) + 0.5) * h for n, h in zip(ns, hs)
    )
    return Grid(domain=domain, n_cells=ns, h=hs, coords=coords)


@dataclass
class DiscreteField:
    """Vector field sampled at grid nodes, shape ``grid.shape + (m,)``."""

    grid: Grid
    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape[:-1] != self.grid.shape:
            raise ModelError(
                f"values shape {self.values.shape} does not match grid "
                f"{self.grid.shape} + (m,)"
            )
        if not np.all(np.isfinite(self.values)):
            raise ModelError("field contains non-finite values")

    @property
    def m(self) -> int:
        return self.values.shape[-1]

    def component(self, i: int) -> NDArray[np.float64]:
        return self.values[..., i]

    def copy(self) -> "DiscreteField":
        return DiscreteField(grid=self.grid, values=self.values.copy())


def constant_field(grid: Grid, u0: Sequence[float]) -> DiscreteField:
    u0 = np.asarray(u0, dtype=float)
    values = np.broadcast_to(u0, grid.shape + u0.shape).copy()
    return DiscreteField(grid=grid, values=values)


def random_field(
    grid: Grid,
    low: Sequence[float],
    high: Sequence[float],
    seed: int = 0,
) -> DiscreteField:
    """Componentwise-uniform random field with a deterministic seed."""
    low = np.atleast_1d(np.asarray(low, dtype=float))
    high = np.atleast_1d(np.asarray(high, dtype=float))
    if low.shape != high.shape:
        raise ModelError("low and high must have matching shapes")
    rng = np.random.default_rng(seed)
    values = low + rng.random(grid.shape + low.shape) * (high - low)
    return DiscreteField(grid=grid, values=values)


def _node_ids(shape: tuple[int, ...]) -> NDArray[np.intp]:
    return np.arange(int(np.prod(shape))).reshape(shape)


class DiscreteSystem:
    """Residual and Jacobian of the discretized system at fixed ``sigma``.

    ``residual(values)`` returns ``-(flux divergence) - f(sigma u)`` minus
    any forcing; ``jacobian(values)`` the sparse analytic derivative; and
    ``frozen_operator(values)`` the linear flux operator with coefficients
    frozen at the given state (the building block of the fixed-point map).
    """

    def __init__(
        self,
        model: Model,
        grid: Grid,
        sigma: float = 1.0,
        forcing: NDArray[np.float64] | None = None,
        relaxation: bool = False,
    ) -> None:
        if grid.domain.dimension != model.domain.dimension:
            raise ModelError("grid and model domains have different dimensions")
        self.model = model
        self.grid = grid
        self.sigma = float(sigma)
        self.relaxation = bool(relaxation)
        self.dirichlet = model.bc.kind == "dirichlet"
        if forcing is not None:
            forcing = np.asarray(forcing, dtype=float)
            if forcing.shape != grid.shape + (model.m,):
                raise ModelError(
                    f"forcing shape {forcing.shape} does not match field shape"
                )
        self.forcing = forcing
        self._ids = _node_ids(grid.shape)
        self.n_dof = grid.n_nodes * model.m

    # -- residual ---------------------------------------------------------

    def residual(self, values: NDArray[np.float64]) -> NDArray[np.float64]:
        m = self.model
        R = _kernels.residual_field(
            values, self.grid.h, m.d, m.alpha, m.r, m.c, self.sigma, self.dirichlet
        )
        if self.relaxation:
            R -= (self.sigma - 1.0) * values
        if self.forcing is not None:
            R = R - self.forcing
        return R

    # -- Jacobian ---------------------------------------------------------

    def _face_pairs(self, axis: int) -> tuple[NDArray[np.intp], NDArray[np.intp]]:
        ids = self._ids
        if axis == 0:
            if ids.ndim == 1:
                return ids[:-1], ids[1:]
            return ids[:-1, :].ravel(), ids[1:, :].ravel()
        return ids[:, :-1].ravel(), ids[:, 1:].ravel()

    def _wall_ids(self, axis: int) -> NDArray[np.intp]:
        ids = self._ids
        if axis == 0:
            if ids.ndim == 1:
                return np.array([ids[0], ids[-1]])
            return np.concatenate([ids[0, :], ids[-1, :]])
        return np.concatenate([ids[:, 0], ids[:, -1]])

    @staticmethod
    def _block_coo(
        rows_nodes: NDArray[np.intp],
        cols_nodes: NDArray[np.intp],
        blocks: NDArray[np.float64],
        m: int,
    ) -> tuple[NDArray[np.intp], NDArray[np.intp], NDArray[np.float64]]:
        i = np.arange(m)
        rows = (rows_nodes[:, None, None] * m + i[None, :, None]).repeat(m, axis=2)
        cols = (cols_nodes[:, None, None] * m + i[None, None, :]).repeat(m, axis=1)
        return rows.ravel(), cols.ravel(), blocks.reshape(-1)

    def jacobian(
        self, values: NDArray[np.float64], frozen: bool = False
    ) -> sp.csr_matrix:
        model = self.model
        m = model.m
        sigma = self.sigma
        flat = values.reshape(-1, m)
        rows_all: list[NDArray[np.intp]] = []
        cols_all: list[NDArray[np.intp]] = []
        data_all: list[NDArray[np.float64]] = []

        for axis in range(self.grid.ndim):
            h = self.grid.h[axis]
            p, q = self._face_pairs(axis)
            u_p = flat[p]
            u_q = flat[q]
            v = 0.5 * sigma * (u_p + u_q)
            A = model.A(v)
            K = A / h**2
            if frozen:
                Bpp, Bpq, Bqp, Bqq = K, -K, -K, K
            else:
                du = (u_q - u_p) / h
                G = model.alpha[None, :, :] * du[:, :, None]
                idx = np.arange(m)
                G[:, idx, idx] += du @ model.alpha.T
                S = (sigma / (2.0 * h)) * G
                Bpp = K - S
                Bpq = -K - S
                Bqp = -K + S
                Bqq = K + S
            for rn, cn, blk in (
                (p, p, Bpp),
                (p, q, Bpq),
                (q, p, Bqp),
                (q, q, Bqq),
            ):
                rr, cc, dd = self._block_coo(rn, cn, blk, m)
                rows_all.append(rr)
                cols_all.append(cc)
                data_all.append(dd)
            if self.dirichlet:
                w = self._wall_ids(axis)
                diag_rows = (w[:, None] * m + np.arange(m)[None, :]).ravel()
                rows_all.append(diag_rows)
                cols_all.append(diag_rows)
                data_all.append(
                    np.tile(2.0 * model.d / h**2, w.size)
                )

        if not frozen:
            Jr = -sigma * model.jacobian_f(sigma * flat)
            if self.relaxation:
                idx = np.arange(m)
                Jr[:, idx, idx] -= self.sigma - 1.0
            nodes = np.arange(flat.shape[0])
            rr, cc, dd = self._block_coo(nodes, nodes, Jr, m)
            rows_all.append(rr)
            cols_all.append(cc)
            data_all.append(dd)

        mat = sp.coo_matrix(
            (np.concatenate(data_all), (np.concatenate(rows_all), np.concatenate(cols_all))),
            shape=(self.n_dof, self.n_dof),
        )
        return mat.tocsr()

    def frozen_operator(self, values: NDArray[np.float64]) -> sp.csr_matrix:
        """Linear operator ``u -> -Div_h(A(sigma w) D u)`` frozen at ``w``."""
        return self.jacobian(values, frozen=True)


def discretize(
    model: Model,
    grid: Grid,
    sigma: float = 1.0,
    forcing: NDArray[np.float64] | None = None,
    relaxation: bool = False,
) -> DiscreteSystem:
    """Residual operator and Jacobian assembler on the given grid."""
    return DiscreteSystem(model, grid, sigma=sigma, forcing=forcing, relaxation=relaxation)


@dataclass(frozen=True)
class SolveResult:
    """Outcome of one nonlinear solve (possibly through a sigma path)."""

    field: DiscreteField
    converged: bool
    residual_norm: float
    iterations: int
    sigma_path: tuple[float, ...]
    classification: str
    grad_l2: float
    tolerance: float
    warnings: tuple[str, ...] = ()
    residual_history: tuple[float, ...] = ()


def classify_field(
    model: Model,
    values: NDArray[np.float64],
    tol_zero: float = TOL_ZERO,
    tol_const: float = TOL_CONST,
) -> str:
    """Constant/zero taxonomy of a field: trivial, semitrivial-constant,
    nontrivial-constant, or nonconstant."""
    flat = values.reshape(-1, model.m)
    comp_max = np.abs(flat).max(axis=0)
    means = flat.mean(axis=0)
    dev = np.abs(flat - means).max(axis=0)
    if np.any(dev >= tol_const * (1.0 + np.abs(means))):
        return "nonconstant"
    zero = comp_max < tol_zero
    if zero.all():
        return "trivial"
    if zero.any():
        return "semitrivial-constant"
    return "nontrivial-constant"


def _grad_l2(grid: Grid, values: NDArray[np.float64]) -> float:
    from .diagnostics import norms as _norms

    return _norms(DiscreteField(grid=grid, values=values))[1]


def _finalize(
    model: Model,
    grid: Grid,
    values: NDArray[np.float64],
    converged: bool,
    residual_norm: float,
    iterations: int,
    sigma_path: tuple[float, ...],
    tolerance: float,
    history: Sequence[float],
    extra_warnings: Sequence[str] = (),
) -> SolveResult:
    warns = list(extra_warnings)
    vmin = float(values.min())
    if vmin < -TOL_ZERO:
        warns.append(
            f"positivity violated: minimum component value {vmin:.3e} "
            "(reported, not clipped)"
        )
    return SolveResult(
        field=DiscreteField(grid=grid, values=values),
        converged=converged,
        residual_norm=residual_norm,
        iterations=iterations,
        sigma_path=sigma_path,
        classification=classify_field(model, values),
        grad_l2=_grad_l2(grid, values),
        tolerance=tolerance,
        warnings=tuple(warns),
        residual_history=tuple(history),
    )


def _seed_values(seed: DiscreteField | NDArray[np.float64], grid: Grid, m: int) -> NDArray[np.float64]:
    values = seed.values if isinstance(seed, DiscreteField) else np.asarray(seed, dtype=float)
    if values.shape != grid.shape + (m,):
        raise ModelError(
            f"seed shape {values.shape} does not match grid shape {grid.shape + (m,)}"
        )
    if not np.all(np.isfinite(values)):
        raise ModelError("seed contains non-finite values")
    return values.astype(float).copy()


def _newton_core(
    system: DiscreteSystem,
    values: NDArray[np.float64],
    tol: float,
    max_iter: int,
) -> tuple[NDArray[np.float64], float, float, int, list[float]]:
    """Damped Newton; returns (values, residual_norm, abs_tol, iters, history)."""
    R = system.residual(values)
    rn = float(np.linalg.norm(R))
    if not np.isfinite(rn):
        raise ConvergenceError("NaN in residual at the seed")
    # Relative convergence test: flux cancellations floor the achievable
    # absolute residual at roughly eps * ||A|| * ||u|| / h^2.
    abs_tol = tol * (1.0 + rn)
    history = [rn]
    for it in range(1, max_iter + 1):
        if rn <= abs_tol:
            return values, rn, abs_tol, it - 1, history
        J = system.jacobian(values)
        try:
            lu = splu(J.tocsc())
            delta = lu.solve(-R.reshape(-1))
        except RuntimeError as exc:
            raise ConvergenceError(f"linear solve failed: {exc}") from exc
        if not np.all(np.isfinite(delta)):
            raise ConvergenceError("non-finite Newton step (singular Jacobian)")
        delta = delta.reshape(values.shape)
        alpha = 1.0
        while True:
            trial = values + alpha * delta
            R_try = system.residual(trial)
            rt = float(np.linalg.norm(R_try))
            if np.isfinite(rt) and rt <= (1.0 - 1e-4 * alpha) * rn:
                break
            alpha *= 0.5
            if alpha < 1e-12:
                raise ConvergenceError(
                    f"line search stagnates at iteration {it} "
                    f"(residual {rn:.3e})"
                )
        values, R, rn = trial, R_try, rt
        history.append(rn)
    if rn <= abs_tol:
        return values, rn, abs_tol, max_iter, history
    raise ConvergenceError(
        f"no convergence within {max_iter} iterations (residual {rn:.3e}, "
        f"target {abs_tol:.3e})"
    )


def newton_solve(
    model: Model,
    grid: Grid,
    seed: DiscreteField | NDArray[np.float64],
    tol: float = TOL_NEWTON,
    max_iter: int = 100,
    sigma: float = 1.0,
    forcing: NDArray[np.float64] | None = None,
    relaxation: bool = False,
    strict: bool = True,
) -> SolveResult:
    """Damped-Newton solve from a seed field.

    With ``strict`` (default) solver failures raise
    :class:`ConvergenceError`; otherwise a non-converged
    :class:`SolveResult` is returned with the failure reason attached.
    """
    values = _seed_values(seed, grid, model.m)
    system = discretize(model, grid, sigma=sigma, forcing=forcing, relaxation=relaxation)
    try:
        values, rn, abs_tol, its, history = _newton_core(system, values, tol, max_iter)
    except ConvergenceError as exc:
        if strict:
            raise
        return _finalize(
            model, grid, values, False, float("nan"), 0, (sigma,), tol, (),
            extra_warnings=(str(exc),),
        )
    return _finalize(
        model, grid, values, True, rn, its, (sigma,), abs_tol, history
    )


def continuation_solve(
    model: Model,
    grid: Grid,
    seed: DiscreteField | NDArray[np.float64],
    sigma_schedule: Sequence[float] | None = None,
    steps: int = 8,
    tol: float = TOL_NEWTON,
    max_iter: int = 100,
    relaxation: bool = False,
    strict: bool = True,
) -> SolveResult:
    """Homotopy continuation in the coefficient scaling ``sigma``.

    Solves the family ``-Div(A(sigma u) Du) = f(sigma u)`` along an
    increasing schedule ending at 1, warm-starting each stage from the
    previous solution, bisecting the sigma step on failure down to
    ``SIGMA_MIN_STEP``.  The ``sigma = 0`` member is never solved
    directly (its Neumann linearization is singular); schedules start at
    a small positive value instead.
    """
    if sigma_schedule is None:
        if steps < 1:
            raise ModelError("steps must be >= 1")
        sigma_schedule = np.linspace(1.0 / steps, 1.0, steps)
    schedule = [float(s) for s in sigma_schedule]
    if not schedule or abs(schedule[-1] - 1.0) > 1e-12:
        raise ModelError("sigma schedule must end at 1")
    if schedule[0] <= 0.0:
        raise ModelError("sigma schedule must start above 0")
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ModelError("sigma schedule must be strictly increasing")

    values = _seed_values(seed, grid, model.m)
    path: list[float] = []
    total_iters = 0
    history: list[float] = []
    rn = float("nan")
    abs_tol = tol
    sigma_prev = 0.0
    queue = list(schedule)
    while queue:
        sigma = queue[0]
        system = discretize(model, grid, sigma=sigma, relaxation=relaxation)
        try:
            values_new, rn, abs_tol, its, history = _newton_core(
                system, values.copy(), tol, max_iter
            )
        except ConvergenceError as exc:
            mid = 0.5 * (sigma_prev + sigma)
            if sigma - mid < SIGMA_MIN_STEP:
                message = (
                    f"sigma step underflow below {SIGMA_MIN_STEP} near "
                    f"sigma = {sigma:.6g}: {exc}"
                )
                partial = _finalize(
                    model, grid, values, False, rn, total_iters, tuple(path),
                    tol, history, extra_warnings=(message,),
                )
                if strict:
                    raise ConvergenceError(message, result=partial) from exc
                return partial
            queue.insert(0, mid)
            continue
        values = values_new
        total_iters += its
        path.append(sigma)
        sigma_prev = sigma
        queue.pop(0)

    return _finalize(
        model, grid, values, True, rn, total_iters, tuple(path), abs_tol, history
    )


def fixed_point_solve(
    model: Model,
    grid: Grid,
    seed: DiscreteField | NDArray[np.float64],
    k: float | None = None,
    tol: float = TOL_NEWTON,
    max_iter: int = 400,
    damping: float = 1.0,
    strict: bool = True,
) -> SolveResult:
    """Frozen-coefficient fixed-point iteration (independent of Newton).

    Iterates ``u <- (L_w + k I)^{-1} (f(w) + k w)`` with ``L_w`` the flux
    operator frozen at ``w``; fixed points are exactly the discrete
    solutions.  The shift ``k`` defaults to ``1 + ||J_f||`` at the seed
    mean, which keeps the map positivity-friendly and well posed.
    """
    values = _seed_values(seed, grid, model.m)
    system = discretize(model, grid)
    if k is None:
        mean = values.reshape(-1, model.m).mean(axis=0)
        k = 1.0 + float(np.linalg.norm(model.jacobian_f(mean), 2))
    if k <= 0:
        raise ModelError(f"shift k must be positive, got {k}")
    R = system.residual(values)
    rn = float(np.linalg.norm(R))
    abs_tol = tol * (1.0 + rn)
    history = [rn]
    shift = sp.identity(system.n_dof, format="csr") * k
    for it in range(1, max_iter + 1):
        if rn <= abs_tol:
            return _finalize(
                model, grid, values, True, rn, it - 1, (1.0,), abs_tol, history
            )
        L = system.frozen_operator(values) + shift
        rhs = (model.f(values) + k * values).reshape(-1)
        try:
            new = splu(L.tocsc()).solve(rhs).reshape(values.shape)
        except RuntimeError as exc:
            raise ConvergenceError(f"linear solve failed: {exc}") from exc
        if not np.all(np.isfinite(new)):
            raise ConvergenceError("non-finite fixed-point iterate")
        values = (1.0 - damping) * values + damping * new
        R = system.residual(values)
        rn = float(np.linalg.norm(R))
        history.append(rn)
    if rn <= abs_tol:
        return _finalize(
            model, grid, values, True, rn, max_iter, (1.0,), abs_tol, history
        )
    message = f"fixed-point iteration did not converge in {max_iter} steps"
    partial = _finalize(
        model, grid, values, False, rn, max_iter, (1.0,), abs_tol, history,
        extra_warnings=(message,),
    )
    if strict:
        raise ConvergenceError(message, result=partial)
    return partial


def seed_from_mode(
    model: Model,
    u_star: NDArray[np.float64],
    mode: ModeDecision,
    amplitude: float,
    grid: Grid,
) -> DiscreteField:
    """Perturb a constant state along an unstable mode direction.

    ``u(x) = u* + amplitude * c * psi(x)`` with ``c`` the (real, unit)
    eigenvector of ``d_A^{-1} A_i`` at its most negative real eigenvalue
    and ``psi`` the Neumann eigenfunction of the mode.  When ``u*`` is
    positive the field is floored at a small positive fraction of
    ``min(u*)`` so the seed stays in the positive cone.
    """
    if model.bc.kind != "neumann":
        raise ModelError("mode seeding uses Neumann eigenfunctions")
    u_star = np.asarray(u_star, dtype=float)
    if mode.N_i < 1:
        _warnings.warn(
            f"mode lambda_hat={mode.lambda_hat:.6g} is not unstable (N=0); "
            "seeding along its least stable direction anyway",
            RuntimeWarning,
        )
    dvec = model.d_A(u_star)
    M = mode.A_i / dvec[:, None]
    w, V = np.linalg.eig(M)
    real = np.abs(w.imag) <= 1e-10 * max(1.0, float(np.abs(w).max()))
    if real.any():
        pick = np.where(real)[0][np.argmin(w.real[real])]
    else:
        pick = int(np.argmin(w.real))
    c = np.real(V[:, pick])
    norm_c = float(np.linalg.norm(c))
    if norm_c == 0.0:
        raise ModelError("mode eigenvector degenerated to zero")
    c = c / norm_c
    if c[np.argmax(np.abs(c))] < 0:
        c = -c
    psi = eigenfunction(model.domain, mode.mode_indices[0], grid.points())
    values = u_star + amplitude * psi[..., None] * c
    if np.all(u_star > 0.0):
        floor = 1e-3 * float(u_star.min())
        values = np.maximum(values, floor)
    return DiscreteField(grid=grid, values=values)
