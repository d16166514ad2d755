"""Composite Gauss-Legendre quadrature for array-valued integrands."""
from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .hermitian import ConvergenceError


class QuadratureError(ConvergenceError):
    pass


@functools.lru_cache(maxsize=None)
def _legendre(m: int):
    x, w = np.polynomial.legendre.leggauss(m)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def max_abs(v: np.ndarray) -> float:
    return float(np.max(np.abs(v))) if np.size(v) else 0.0


def operator_norm_any(v: np.ndarray) -> float:
    """Largest operator norm over a stack of Hermitian matrices ``(..., n, n)``."""
    return float(np.max(np.abs(np.linalg.eigvalsh(v))))


@dataclass(frozen=True)
class QuadratureScheme:
    """Composite Gauss-Legendre rule with panel doubling.

    Successive refinements are compared in ``norm``; the result of the finer
    rule is returned once they agree to ``convergence_tol * (1 + ||result||)``.
    """

    panels: int = 8
    nodes_per_panel: int = 8
    refinement_factor: int = 2
    convergence_tol: float = 1e-11
    max_refinements: int = 10

    def __post_init__(self):
        if self.panels < 1:
            raise ValueError("panels must be >= 1")
        if not 4 <= self.nodes_per_panel <= 16:
            raise ValueError("nodes_per_panel must lie in 4..16")
        if self.refinement_factor != 2:
            raise ValueError("only panel doubling is supported")

    def rule(self, lo: float, hi: float, panels: int | None = None,
             breakpoints: Sequence[float] = ()) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights on ``[lo, hi]``; each segment between breakpoints gets ``panels`` panels."""
        panels = panels or self.panels
        cuts = sorted({lo, hi, *(float(b) for b in breakpoints if lo < b < hi)})
        x, w = _legendre(self.nodes_per_panel)
        nodes, weights = [], []
        for a, b in zip(cuts, cuts[1:]):
            edges = np.linspace(a, b, panels + 1)
            half = 0.5 * np.diff(edges)
            mid = 0.5 * (edges[1:] + edges[:-1])
            nodes.append((mid[:, None] + half[:, None] * x[None, :]).ravel())
            weights.append((half[:, None] * w[None, :]).ravel())
        return np.concatenate(nodes), np.concatenate(weights)

    def apply(self, func: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
              panels: int | None = None, breakpoints: Sequence[float] = ()) -> np.ndarray:
        nodes, weights = self.rule(lo, hi, panels, breakpoints)
        vals = np.asarray(func(nodes))
        return np.tensordot(weights, vals, axes=(0, 0))

    def integrate(self, func: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, *,
                  norm: Callable[[np.ndarray], float] = max_abs, breakpoints: Sequence[float] = (),
                  tol: float | None = None) -> np.ndarray:
        """Integrate ``func`` over ``[lo, hi]``.

        ``func`` maps a 1-D array of nodes to an array whose leading axis runs
        over the nodes.  Raises :class:`QuadratureError` after
        ``max_refinements`` unsuccessful doublings.
        """
        tol = self.convergence_tol if tol is None else tol
        if hi == lo:
            return 0.0 * np.asarray(func(np.array([lo])))[0]
        panels = self.panels
        prev = self.apply(func, lo, hi, panels, breakpoints)
        diff = np.inf
        for _ in range(self.max_refinements):
            panels *= self.refinement_factor
            cur = self.apply(func, lo, hi, panels, breakpoints)
            diff = norm(cur - prev)
            if diff <= tol * (1.0 + norm(cur)):
                return cur
            prev = cur
        raise QuadratureError(f"no convergence after {self.max_refinements} refinements "
                              f"(last change {diff:.3e}, {panels} panels)")


DEFAULT_SCHEME = QuadratureScheme()
