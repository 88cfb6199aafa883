"""Model definition: flux matrix, reactions, and structure validation.

A model couples ``m`` species through the quasilinear flux matrix
``A(u) = dP/du`` with ``P_i(u) = u_i * (d_i + sum_j alpha_ij u_j)`` and
Lotka-Volterra reactions ``f_i(u) = u_i * g_i(u)``,
``g_i(u) = r_i - sum_j c_ij u_j``.  All evaluation helpers broadcast
over leading axes, so a field of shape ``(..., m)`` yields flux matrices
of shape ``(..., m, m)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
from numpy.typing import NDArray


class ModelError(ValueError):
    """Structural problem with model data (dimensions, signs, domain)."""


class ConfigError(ModelError):
    """Malformed or inconsistent model configuration input."""


_DOMAIN_KINDS = ("interval", "rectangle")
_BC_KINDS = ("neumann", "dirichlet")


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box domain: an interval ``(0, L)`` or a rectangle."""

    kind: str
    lengths: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.kind not in _DOMAIN_KINDS:
            raise ConfigError(f"unknown domain kind {self.kind!r}")
        lengths = tuple(float(L) for L in self.lengths)
        object.__setattr__(self, "lengths", lengths)
        expected = 1 if self.kind == "interval" else 2
        if len(lengths) != expected:
            raise ConfigError(
                f"{self.kind} domain needs {expected} length(s), got {len(lengths)}"
            )
        if any(not math.isfinite(L) or L <= 0 for L in lengths):
            raise ConfigError(f"domain lengths must be positive, got {lengths}")

    @property
    def dimension(self) -> int:
        return len(self.lengths)

    @property
    def diameter(self) -> float:
        return math.hypot(*self.lengths)

    @property
    def volume(self) -> float:
        return math.prod(self.lengths)


@dataclass(frozen=True)
class BoundaryCondition:
    """Homogeneous boundary condition: zero flux or zero trace."""

    kind: str = "neumann"

    def __post_init__(self) -> None:
        if self.kind not in _BC_KINDS:
            raise ConfigError(f"unknown boundary condition {self.kind!r}")


def _readonly(arr: NDArray[np.float64]) -> NDArray[np.float64]:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Model:
    """Cross-diffusion model with Lotka-Volterra reactions.

    Parameters
    ----------
    m : number of species
    d : linear diffusion rates, shape ``(m,)``, strictly positive
    alpha : self/cross-diffusion coefficients, shape ``(m, m)``, nonnegative
    r : intrinsic growth rates, shape ``(m,)``
    c : competition matrix, shape ``(m, m)``
    domain : spatial domain
    bc : boundary condition shared by all species
    """

    m: int
    d: NDArray[np.float64]
    alpha: NDArray[np.float64]
    r: NDArray[np.float64]
    c: NDArray[np.float64]
    domain: Domain
    bc: BoundaryCondition = field(default_factory=BoundaryCondition)

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ConfigError(f"m must be >= 1, got {self.m}")
        d = _readonly(self.d)
        alpha = _readonly(self.alpha)
        r = _readonly(self.r)
        c = _readonly(self.c)
        if d.shape != (self.m,):
            raise ConfigError(f"d must have shape ({self.m},), got {d.shape}")
        if r.shape != (self.m,):
            raise ConfigError(f"r must have shape ({self.m},), got {r.shape}")
        if alpha.shape != (self.m, self.m):
            raise ConfigError(
                f"alpha must have shape ({self.m}, {self.m}), got {alpha.shape}"
            )
        if c.shape != (self.m, self.m):
            raise ConfigError(f"c must have shape ({self.m}, {self.m}), got {c.shape}")
        for name, arr in (("d", d), ("alpha", alpha), ("r", r), ("c", c)):
            if not np.all(np.isfinite(arr)):
                raise ConfigError(f"{name} contains non-finite entries")
        if np.any(d <= 0):
            raise ConfigError(f"diffusion rates d must be strictly positive, got {d}")
        if np.any(alpha < 0):
            raise ConfigError(f"alpha coefficients must be nonnegative, got {alpha}")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "c", c)

    # -- evaluation -----------------------------------------------------

    def P(self, u: NDArray[np.float64]) -> NDArray[np.float64]:
        """Flux potential ``P_i(u) = u_i * (d_i + sum_j alpha_ij u_j)``."""
        u = np.asarray(u, dtype=float)
        return u * (self.d + u @ self.alpha.T)

    def A(self, u: NDArray[np.float64]) -> NDArray[np.float64]:
        """Flux matrix ``A(u) = dP/du``, shape ``(..., m, m)``.

        ``a_ij = delta_ij * (d_i + sum_l alpha_il u_l) + u_i * alpha_ij``.
        """
        u = np.asarray(u, dtype=float)
        out = u[..., :, None] * self.alpha
        diag = self.d + u @ self.alpha.T
        idx = np.arange(self.m)
        out[..., idx, idx] += diag
        return out

    def dA(self) -> NDArray[np.float64]:
        """Derivative tensor ``T[i, j, k] = d a_ij / d u_k`` (constant in u)."""
        T = np.zeros((self.m, self.m, self.m))
        idx = np.arange(self.m)
        T[idx, idx, :] += self.alpha
        T[idx, :, idx] += self.alpha
        return T

    def d_A(self, u: NDArray[np.float64]) -> NDArray[np.float64]:
        """Diagonal of the flux matrix as a vector, shape ``(..., m)``."""
        u = np.asarray(u, dtype=float)
        idx = np.arange(self.m)
        return self.d + u @ self.alpha.T + u * self.alpha[idx, idx]

    def g(self, u: NDArray[np.float64]) -> NDArray[np.float64]:
        """Per-capita growth ``g_i(u) = r_i - sum_j c_ij u_j``."""
        u = np.asarray(u, dtype=float)
        return self.r - u @ self.c.T

    def f(self, u: NDArray[np.float64]) -> NDArray[np.float64]:
        """Reaction ``f_i(u) = u_i * g_i(u)``."""
        u = np.asarray(u, dtype=float)
        return u * self.g(u)

    def jacobian_f(self, u: NDArray[np.float64]) -> NDArray[np.float64]:
        """Reaction Jacobian ``J_ij = delta_ij g_i(u) - u_i c_ij``."""
        u = np.asarray(u, dtype=float)
        out = -u[..., :, None] * self.c
        idx = np.arange(self.m)
        out[..., idx, idx] += self.g(u)
        return out

    # -- restriction and serialization ----------------------------------

    def restrict(self, support: Sequence[int]) -> "Model":
        """Submodel on the given component indices (same domain and bc)."""
        idx = np.asarray(sorted(support), dtype=int)
        if idx.size == 0:
            raise ModelError("cannot restrict a model to an empty support")
        return Model(
            m=int(idx.size),
            d=self.d[idx],
            alpha=self.alpha[np.ix_(idx, idx)],
            r=self.r[idx],
            c=self.c[np.ix_(idx, idx)],
            domain=self.domain,
            bc=self.bc,
        )

    def to_config(self) -> dict[str, Any]:
        """Plain-dict form accepted back by :func:`build_model`."""
        return {
            "m": self.m,
            "d": self.d.tolist(),
            "alpha": self.alpha.tolist(),
            "r": self.r.tolist(),
            "c": self.c.tolist(),
            "domain": {"kind": self.domain.kind, "lengths": list(self.domain.lengths)},
            "bc": self.bc.kind,
        }


_CONFIG_KEYS = {"m", "d", "alpha", "r", "c", "domain", "bc"}
_DOMAIN_KEYS = {"kind", "lengths"}


def build_model(config: Mapping[str, Any]) -> Model:
    """Construct a :class:`Model` from a plain configuration mapping.

    Unknown keys are rejected rather than ignored so that typos in
    configuration files fail loudly.
    """
    if not isinstance(config, Mapping):
        raise ConfigError(f"config must be a mapping, got {type(config).__name__}")
    unknown = set(config) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    missing = _CONFIG_KEYS - {"bc"} - set(config)
    if missing:
        raise ConfigError(f"missing config keys: {sorted(missing)}")

    dom_raw = config["domain"]
    if not isinstance(dom_raw, Mapping):
        raise ConfigError("domain must be a mapping with 'kind' and 'lengths'")
    unknown_dom = set(dom_raw) - _DOMAIN_KEYS
    if unknown_dom:
        raise ConfigError(f"unknown domain keys: {sorted(unknown_dom)}")
    if _DOMAIN_KEYS - set(dom_raw):
        raise ConfigError(f"missing domain keys: {sorted(_DOMAIN_KEYS - set(dom_raw))}")
    domain = Domain(kind=dom_raw["kind"], lengths=tuple(dom_raw["lengths"]))

    bc = BoundaryCondition(kind=config.get("bc", "neumann"))

    try:
        m = int(config["m"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"m must be an integer, got {config['m']!r}") from exc

    def _arr(key: str, shape: tuple[int, ...]) -> NDArray[np.float64]:
        try:
            arr = np.asarray(config[key], dtype=float)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{key} is not numeric: {config[key]!r}") from exc
        if arr.shape != shape:
            raise ConfigError(f"{key} must have shape {shape}, got {arr.shape}")
        return arr

    return Model(
        m=m,
        d=_arr("d", (m,)),
        alpha=_arr("alpha", (m, m)),
        r=_arr("r", (m,)),
        c=_arr("c", (m, m)),
        domain=domain,
        bc=bc,
    )


def evaluate(
    model: Model, u: NDArray[np.float64]
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """Evaluate ``(A(u), f(u), Jf(u))`` at a state or a field of states."""
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != model.m:
        raise ModelError(f"state last axis must be {model.m}, got shape {u.shape}")
    return model.A(u), model.f(u), model.jacobian_f(u)


@dataclass(frozen=True)
class StructureReport:
    """Sampled ellipticity and growth certificate for the flux matrix.

    ``lambda_floor`` is the sampled minimum over the box of the smallest
    eigenvalue of the symmetric part of ``A(u)``; ``C_star`` bounds
    ``||A(u)|| / lambda(u)``; ``growth_exponent`` is the fitted exponent
    ``k`` in ``lambda(u) ~ (1 + |u|)^k``; ``Lambda_sup`` bounds the
    relative gradient ``|grad lambda| / lambda``.  ``sg_check`` is
    ``"vacuous"`` when the spatial dimension is at most 4, otherwise a
    pass/fail verdict on the smallness condition for ``C_star``.
    """

    lambda_floor: float
    C_star: float
    growth_exponent: float
    Lambda_sup: float
    sg_check: str
    elliptic: bool
    box: tuple[tuple[float, float], ...]
    samples: int
    warnings: tuple[str, ...] = ()


def _min_sym_eig(A: NDArray[np.float64]) -> NDArray[np.float64]:
    sym = 0.5 * (A + np.swapaxes(A, -1, -2))
    return np.linalg.eigvalsh(sym)[..., 0]


def validate_structure(
    model: Model,
    box: Sequence[Sequence[float]],
    samples: int = 512,
    seed: int = 0,
) -> StructureReport:
    """Sample the flux matrix over a box and certify ellipticity bounds.

    ``box`` gives ``(low, high)`` bounds per component.  Sampling is
    deterministic for a fixed ``seed``.  A nonpositive ``lambda_floor``
    marks the model non-elliptic on the box; dependent quantities are
    then reported as infinities with a warning instead of going silent.
    """
    box_arr = np.asarray(box, dtype=float)
    if box_arr.shape != (model.m, 2):
        raise ModelError(f"box must have shape ({model.m}, 2), got {box_arr.shape}")
    if np.any(box_arr[:, 1] < box_arr[:, 0]):
        raise ModelError("box upper bounds must not be below lower bounds")
    if samples < 2:
        raise ModelError("need at least 2 samples")

    rng = np.random.default_rng(seed)
    u = box_arr[:, 0] + rng.random((samples, model.m)) * (
        box_arr[:, 1] - box_arr[:, 0]
    )
    # Corners are the extremal states for the affine family; always include.
    corners = np.stack(
        np.meshgrid(*[box_arr[i] for i in range(model.m)], indexing="ij"), axis=-1
    ).reshape(-1, model.m)
    if corners.shape[0] <= 4096:
        u = np.vstack([u, corners])

    A = model.A(u)
    lam = _min_sym_eig(A)
    lambda_floor = float(lam.min())
    norms = np.linalg.norm(A, ord=2, axis=(-2, -1))

    warnings: list[str] = []
    elliptic = lambda_floor > 0.0
    if elliptic:
        C_star = float((norms / lam).max())
    else:
        C_star = math.inf
        warnings.append(
            "flux matrix loses ellipticity on the box "
            f"(min symmetric eigenvalue {lambda_floor:.3e} <= 0)"
        )

    # Growth exponent: regress log lambda(u) on log(1 + |u|) over the samples.
    if elliptic:
        x = np.log1p(np.linalg.norm(u, axis=-1))
        y = np.log(lam)
        spread = x.max() - x.min()
        if spread > 1e-8 and np.ptp(y) > 1e-12:
            growth_exponent = float(np.polyfit(x, y, 1)[0])
        else:
            growth_exponent = 0.0
    else:
        growth_exponent = math.nan

    # Relative gradient of lambda via central differences at the samples.
    if elliptic:
        eps = 1e-6 * (1.0 + np.abs(u))
        grads = np.empty_like(u)
        for k in range(model.m):
            up = u.copy()
            dn = u.copy()
            up[:, k] += eps[:, k]
            dn[:, k] -= eps[:, k]
            grads[:, k] = (_min_sym_eig(model.A(up)) - _min_sym_eig(model.A(dn))) / (
                2.0 * eps[:, k]
            )
        Lambda_sup = float((np.linalg.norm(grads, axis=-1) / lam).max())
    else:
        Lambda_sup = math.inf

    # The smallness condition on C_* only bites in dimension > 4.
    n = model.domain.dimension
    if n <= 4:
        sg_check = "vacuous"
    elif elliptic and C_star < (n - 2.0) / (n - 4.0):
        sg_check = "pass"
    else:
        sg_check = "fail"

    return StructureReport(
        lambda_floor=lambda_floor,
        C_star=C_star,
        growth_exponent=growth_exponent,
        Lambda_sup=Lambda_sup,
        sg_check=sg_check,
        elliptic=elliptic,
        box=tuple((float(lo), float(hi)) for lo, hi in box_arr),
        samples=int(u.shape[0]),
        warnings=tuple(warnings),
    )
