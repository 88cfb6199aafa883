"""Enumeration and classification of constant steady states.

A constant state solves ``f(u) = 0``, i.e. ``g_i(u) = 0`` on its support
and ``u_j = 0`` elsewhere.  For the affine Lotka-Volterra reactions each
support subset gives one linear solve, so enumeration over all ``2^m``
subsets is exhaustive.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from numpy.typing import NDArray

from .model import Model, ModelError

TOL_ROOT = 1e-12
TOL_DEDUP = 1e-9
TOL_SIGN = 1e-10
MAX_SPECIES = 12


class EnumerationError(ModelError):
    """Constant-state enumeration cannot be carried out."""


@dataclass(frozen=True)
class ConstantState:
    """A constant solution of ``f(u) = 0``.

    ``support`` marks the strictly positive components; entries off the
    support are exactly zero.  ``classification`` is ``trivial`` (all
    zero), ``semitrivial`` (some zero), or ``nontrivial`` (all positive).
    """

    u_star: NDArray[np.float64]
    support: tuple[bool, ...]
    classification: str
    residual: float

    def __post_init__(self) -> None:
        u = np.array(self.u_star, dtype=float)
        u.setflags(write=False)
        object.__setattr__(self, "u_star", u)
        object.__setattr__(self, "support", tuple(bool(b) for b in self.support))

    @property
    def support_indices(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.support) if b)

    @property
    def mask(self) -> int:
        """Canonical integer encoding of the support (bit i = component i)."""
        return sum(1 << i for i, b in enumerate(self.support) if b)


def _classify_support(support: Sequence[bool]) -> str:
    if not any(support):
        return "trivial"
    if all(support):
        return "nontrivial"
    return "semitrivial"


def _make_state(model: Model, support: Sequence[bool], u: NDArray[np.float64]) -> ConstantState:
    residual = float(np.abs(model.f(u)).max())
    return ConstantState(
        u_star=u,
        support=tuple(support),
        classification=_classify_support(support),
        residual=residual,
    )


class StateEnumeration:
    """Result of exhaustive constant-state enumeration.

    Iterates over the states in canonical support order (trivial state
    first).  ``degenerate_subsets`` lists supports whose restricted
    interaction matrix was singular — no isolated state is attributed
    there, and index bookkeeping must treat the enumeration as
    inconclusive.
    """

    def __init__(
        self,
        states: Sequence[ConstantState],
        degenerate_subsets: Sequence[tuple[int, ...]] = (),
    ) -> None:
        self.states = sorted(states, key=lambda s: s.mask)
        self.degenerate_subsets = [tuple(s) for s in degenerate_subsets]

    def __iter__(self) -> Iterator[ConstantState]:
        return iter(self.states)

    def __len__(self) -> int:
        return len(self.states)

    def __getitem__(self, i: int) -> ConstantState:
        return self.states[i]

    @property
    def trivial(self) -> ConstantState:
        return self.states[0]

    def by_classification(self, classification: str) -> list[ConstantState]:
        return [s for s in self.states if s.classification == classification]


def find_constant_states(
    model: Model,
    tol_root: float = TOL_ROOT,
    tol_dedup: float = TOL_DEDUP,
) -> StateEnumeration:
    """Enumerate all constant steady states with positive support.

    Solves ``c|_S u_S = r|_S`` for every support subset ``S`` and keeps
    solutions that are strictly positive on ``S``.  Roots that fall on
    the boundary of the orthant are rejected here and re-attributed to
    the smaller support that finds them exactly.
    """
    if model.m > MAX_SPECIES:
        raise EnumerationError(
            f"subset enumeration bounded at m <= {MAX_SPECIES}, got m = {model.m}"
        )
    states: list[ConstantState] = []
    degenerate: list[tuple[int, ...]] = []
    seen: list[NDArray[np.float64]] = []

    states.append(_make_state(model, (False,) * model.m, np.zeros(model.m)))

    for size in range(1, model.m + 1):
        for subset in itertools.combinations(range(model.m), size):
            idx = np.array(subset, dtype=int)
            c_sub = model.c[np.ix_(idx, idx)]
            r_sub = model.r[idx]
            scale = np.abs(c_sub).sum(axis=1).prod()
            if scale == 0.0 or abs(np.linalg.det(c_sub)) <= 1e-12 * scale:
                degenerate.append(subset)
                continue
            u_sub = np.linalg.solve(c_sub, r_sub)
            # Strict positivity on the support; boundary roots belong to
            # a smaller subset and are attributed there.
            if np.any(u_sub <= tol_dedup * (1.0 + np.abs(u_sub).max())):
                continue
            u = np.zeros(model.m)
            u[idx] = u_sub
            if any(
                np.abs(u - v).max() <= tol_dedup * (1.0 + np.abs(v).max())
                for v in seen
            ):
                continue
            seen.append(u)
            state = _make_state(model, [i in subset for i in range(model.m)], u)
            if state.residual > tol_root * (1.0 + float(np.abs(model.r).max())):
                state = refine_root(model, state.support, u, tol_root=tol_root)
            states.append(state)

    return StateEnumeration(states, degenerate)


def refine_root(
    model: Model,
    support: Sequence[bool],
    u0: NDArray[np.float64],
    tol_root: float = TOL_ROOT,
    max_iter: int = 50,
) -> ConstantState:
    """Polish a constant-state candidate by damped Newton on ``g|_S``.

    The iterate stays inside the positive orthant on its support; leaving
    it by more than the sign tolerance aborts.
    """
    support = tuple(bool(b) for b in support)
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (model.m,):
        raise ModelError(f"u0 must have shape ({model.m},), got {u0.shape}")
    off = [i for i, b in enumerate(support) if not b]
    if off and np.abs(u0[off]).max() > TOL_SIGN:
        raise ModelError("u0 must vanish off the claimed support")

    idx = np.array([i for i, b in enumerate(support) if b], dtype=int)
    u = np.zeros(model.m)
    if idx.size == 0:
        return _make_state(model, support, u)

    x = u0[idx].copy()
    c_sub = model.c[np.ix_(idx, idx)]
    r_sub = model.r[idx]
    scale = 1.0 + float(np.abs(r_sub).max())

    for _ in range(max_iter):
        g = r_sub - c_sub @ x
        if np.abs(g).max() <= tol_root * scale:
            u[idx] = x
            if np.any(x <= 0):
                raise EnumerationError(
                    f"refined root leaves the positive orthant on support {support}"
                )
            return _make_state(model, support, u)
        try:
            # g is affine: dg/dx = -c_sub, so the undamped step is exact.
            step = np.linalg.solve(c_sub, g)
        except np.linalg.LinAlgError as exc:
            raise EnumerationError(
                f"no convergence: singular Jacobian on support {support}"
            ) from exc
        alpha = 1.0
        base = np.abs(g).max()
        while alpha > 1e-12:
            x_new = x + alpha * step
            if np.abs(r_sub - c_sub @ x_new).max() <= (1.0 - 1e-4 * alpha) * base:
                break
            alpha *= 0.5
        else:
            raise EnumerationError(
                f"no convergence: line search stagnates on support {support}"
            )
        x = x + alpha * step
        if np.any(x < -TOL_SIGN):
            raise EnumerationError(
                f"iterate leaves the positive orthant on support {support}"
            )

    raise EnumerationError(f"no convergence within {max_iter} iterations")
