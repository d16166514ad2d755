"""Sampled falsification of operator preinvexity.

A function ``f`` is operator preinvex for ``eta`` on ``S`` when
``f(B + t eta(A, B)) <= (1 - t) f(B) + t f(A)`` in the operator order for all
``A, B`` in ``S`` and ``t`` in ``[0, 1]``.  Nothing here proves that; a passing
report only means no counterexample was found within the sampling budget.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .functions import ScalarFunction
from .hermitian import (DomainError, HermitianMatrix, Interval, calculus_stack,
                        operator_norms)
from .invex import EtaMap, OperatorSet, _rng, eta_path, eval_eta

DEFAULT_T_GRID = tuple(np.linspace(0.0, 1.0, 33))
DEFAULT_VECTORS = 20
RETRY_CAP = 100


class SamplingError(RuntimeError):
    """The configuration admits no (or too few) valid random instances."""


def random_unit_vector(n: int, rng) -> np.ndarray:
    rng = _rng(rng)
    z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return z / np.linalg.norm(z)


def random_unit_vectors(m: int, n: int, rng) -> np.ndarray:
    rng = _rng(rng)
    z = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def check_unit(x, atol: float = 1e-12) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    norms = np.linalg.norm(np.atleast_2d(x), axis=1)
    if np.any(np.abs(norms - 1.0) > atol):
        raise ValueError(f"expected unit vector(s), got norms {norms}")
    return x


@dataclass(frozen=True)
class Counterexample:
    A: HermitianMatrix
    B: HermitianMatrix
    t: float
    min_eigenvalue: float

    def to_dict(self) -> dict:
        return {"A": self.A.to_dict(), "B": self.B.to_dict(), "t": self.t, "margin": self.min_eigenvalue}


@dataclass(frozen=True)
class PreinvexityReport:
    """Aggregate of sampled preinvexity checks.

    ``worst_margin`` is 0 when every check holds, otherwise the most negative
    Loewner margin seen; ``min_eigenvalue`` keeps the raw minimum either way.
    """

    trials: int
    worst_margin: float
    min_eigenvalue: float
    counterexample: Counterexample | None
    checks: int = 0
    resampled: int = 0
    sweep_checks: int = 0

    @property
    def verdict(self) -> str:
        return "fail" if self.counterexample is not None else "pass"

    @property
    def passed(self) -> bool:
        return self.counterexample is None

    def merge(self, other: "PreinvexityReport") -> "PreinvexityReport":
        """Combine two reports; ``self`` is taken to precede ``other``."""
        return PreinvexityReport(
            self.trials + other.trials,
            min(self.worst_margin, other.worst_margin),
            min(self.min_eigenvalue, other.min_eigenvalue),
            self.counterexample or other.counterexample,
            self.checks + other.checks,
            self.resampled + other.resampled,
            self.sweep_checks + other.sweep_checks,
        )


def _in_interval(stack: np.ndarray, interval: Interval) -> bool:
    return bool(np.all(interval.contains(np.linalg.eigvalsh(stack))))


def preinvex_margins(f: ScalarFunction, eta: EtaMap, S: OperatorSet, A: HermitianMatrix, B: HermitianMatrix,
                     t_grid: Sequence[float], scale_tol: float = 1e-9):
    """Loewner margins of ``f(B + t eta(A,B)) <= (1-t) f(B) + t f(A)`` over ``t_grid``.

    Returns ``(min_eigenvalues, tolerances)``, one entry per grid value.
    """
    ts = np.asarray(t_grid, dtype=float)
    d = eval_eta(eta, A, B, S)
    z = B.data[None] + ts[:, None, None] * d.data[None]
    lhs = calculus_stack(f, z)
    fab = calculus_stack(f, np.stack([A.data, B.data]))
    rhs = (1.0 - ts)[:, None, None] * fab[1][None] + ts[:, None, None] * fab[0][None]
    lam = np.linalg.eigvalsh(rhs - lhs)[:, 0]
    tol = scale_tol * (1.0 + operator_norms(lhs) + operator_norms(rhs))
    return lam, tol


def _sweep_scalars(S: OperatorSet, box: Interval) -> list[float]:
    vals = []
    for iv in S.branches().values():
        try:
            lo, hi = iv.intersect(box).sampling_bounds(S.margin)
        except DomainError:
            continue
        vals.extend(sorted({lo, 0.5 * (lo + hi), hi}))
    return vals


class _Tally:
    def __init__(self):
        self.min_eig = math.inf
        self.worst = 0.0
        self.cex = None
        self.checks = 0

    def add(self, A, B, ts, lam, tol):
        self.checks += len(lam)
        self.min_eig = min(self.min_eig, float(np.min(lam)))
        bad = lam < -tol
        if np.any(bad):
            self.worst = min(self.worst, float(np.min(lam[bad])))
            if self.cex is None:
                i = int(np.argmax(bad))
                self.cex = Counterexample(A, B, float(ts[i]), float(lam[i]))


def preinvex_sweep(f: ScalarFunction, eta: EtaMap, S: OperatorSet, I: Interval, n: int,
                   t_grid: Sequence[float] = DEFAULT_T_GRID, scale_tol: float = 1e-9,
                   *, sample_box: Interval | None = None) -> PreinvexityReport:
    """Deterministic pass over scalar pairs ``alpha 1, beta 1`` drawn from each branch.

    Same-branch and mixed-branch pairs are both covered; pairs whose path
    leaves ``I`` are skipped.
    """
    box = sample_box or I
    ts = np.asarray(t_grid, dtype=float)
    tally = _Tally()
    for a, b in itertools.product(_sweep_scalars(S, box), repeat=2):
        A, B = HermitianMatrix.scalar(a, n), HermitianMatrix.scalar(b, n)
        d = eval_eta(eta, A, B, S)
        if not _in_interval(B.data[None] + ts[:, None, None] * d.data[None], I):
            continue
        tally.add(A, B, ts, *preinvex_margins(f, eta, S, A, B, ts, scale_tol))
    return PreinvexityReport(0, tally.worst, tally.min_eig if tally.checks else 0.0, tally.cex,
                             tally.checks, 0, tally.checks)


def sample_pair(S: OperatorSet, I: Interval, n: int, rng, eta: EtaMap, ts, box: Interval,
                path: str = "forward", retry_cap: int = RETRY_CAP):
    """Draw ``A, B`` in ``S`` whose eta-path stays in ``I``.

    ``path="forward"`` tests ``B + t eta(A, B)`` (the preinvexity path);
    ``path="reverse"`` tests ``A + t eta(B, A)`` (the Hermite-Hadamard path).
    Returns ``(A, B, resampled)``.
    """
    ts = np.asarray(ts, dtype=float)
    for attempt in range(retry_cap):
        A = S.sample(n, rng, box)
        B = S.sample(n, rng, box)
        if not (_in_interval(np.stack([A.data, B.data]), I)):
            continue
        if path == "forward":
            base, d = B, eval_eta(eta, A, B, S)
        else:
            base, d = A, eval_eta(eta, B, A, S)
        if _in_interval(base.data[None] + ts[:, None, None] * d.data[None], I):
            return A, B, attempt
    raise SamplingError(f"no valid pair in {S.kind} with path inside {I} after {retry_cap} draws")


def check_operator_preinvex(f: ScalarFunction, eta: EtaMap, S: OperatorSet, I: Interval, n: int,
                            trials: int, t_grid: Sequence[float] = DEFAULT_T_GRID, seed=0,
                            scale_tol: float = 1e-9, *, sample_box: Interval | None = None,
                            sweep: bool = True, retry_cap: int = RETRY_CAP) -> PreinvexityReport:
    """Search for a violation of operator preinvexity.

    Pairs are drawn from ``S`` with spectra in ``sample_box`` (default ``I``);
    pairs whose path ``B + t eta(A, B)`` leaves ``I`` are redrawn and counted in
    ``resampled``.  With ``sweep`` the scalar-multiple pairs of
    :func:`preinvex_sweep` are checked first.
    """
    box = sample_box or I
    rng = _rng(seed)
    ts = np.asarray(t_grid, dtype=float)
    report = preinvex_sweep(f, eta, S, I, n, ts, scale_tol, sample_box=box) if sweep \
        else PreinvexityReport(0, 0.0, math.inf, None)
    tally = _Tally()
    resampled = 0
    for _ in range(trials):
        A, B, r = sample_pair(S, I, n, rng, eta, ts, box, "forward", retry_cap)
        resampled += r
        tally.add(A, B, ts, *preinvex_margins(f, eta, S, A, B, ts, scale_tol))
    rand = PreinvexityReport(trials, tally.worst, tally.min_eig, tally.cex, tally.checks, resampled)
    merged = report.merge(rand)
    if merged.checks == 0:
        merged = PreinvexityReport(merged.trials, 0.0, 0.0, None)
    return merged


def _path_values(f: ScalarFunction, A, B, eta, S, xs, ts) -> np.ndarray:
    """``<f(A + t eta(B,A)) x, x>`` for rows ``x`` of ``xs`` and each ``t``; shape (m, len(ts))."""
    path = eta_path(A, B, eta, S)
    F = calculus_stack(f, path.points(ts))
    xs = np.atleast_2d(xs)
    return np.real(np.einsum("mi,tij,mj->mt", xs.conj(), F, xs))


def phi_scalar(f: ScalarFunction, A: HermitianMatrix, B: HermitianMatrix, eta: EtaMap, S: OperatorSet,
               x, t: float) -> float:
    """Section function ``<f(A + t eta(B, A)) x, x>`` for a unit vector ``x``."""
    x = check_unit(x)
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t = {t} outside [0, 1]")
    return float(_path_values(f, A, B, eta, S, x, [t])[0, 0])


@dataclass(frozen=True)
class ConvexityCheck:
    convex: bool
    worst_violation: float
    at: tuple = field(default=())


def check_phi_convex(f: ScalarFunction, A: HermitianMatrix, B: HermitianMatrix, eta: EtaMap,
                     S: OperatorSet, x, grid: Sequence[float] = DEFAULT_T_GRID,
                     tol: float = 1e-9) -> ConvexityCheck:
    """Midpoint and second-difference convexity of the section function on ``grid``.

    A violation is an excess of the left side over the chord by more than
    ``tol * (1 + max |phi|)``.  ``x`` may hold several unit vectors as rows;
    the check then covers all of them.
    """
    xs = np.atleast_2d(check_unit(x))
    g = np.unique(np.asarray(grid, dtype=float))
    mids = np.unique([(s + t) / 2 for s, t in itertools.combinations(g, 2)])
    allt = np.unique(np.concatenate([g, mids]))
    vals = _path_values(f, A, B, eta, S, xs, allt)
    pos = {float(t): i for i, t in enumerate(allt)}
    scale = tol * (1.0 + np.max(np.abs(vals), axis=1))
    worst, at = -np.inf, ()
    for s, t in itertools.combinations(g, 2):
        exc = vals[:, pos[float((s + t) / 2)]] - 0.5 * (vals[:, pos[float(s)]] + vals[:, pos[float(t)]])
        k = int(np.argmax(exc - scale))
        if exc[k] - scale[k] > worst:
            worst, at = float(exc[k] - scale[k]), ("midpoint", float(s), float(t), k)
    for t1, t2, t3 in zip(g, g[1:], g[2:]):
        chord = ((t3 - t2) * vals[:, pos[float(t1)]] + (t2 - t1) * vals[:, pos[float(t3)]]) / (t3 - t1)
        exc = vals[:, pos[float(t2)]] - chord
        k = int(np.argmax(exc - scale))
        if exc[k] - scale[k] > worst:
            worst, at = float(exc[k] - scale[k]), ("second_difference", float(t1), float(t3), k)
    convex = worst <= 0.0
    # excess within tolerance counts as no violation
    violation = 0.0 if convex else worst + float(scale[at[3]])
    return ConvexityCheck(convex, violation, at)


def path_preinvex(f: ScalarFunction, A: HermitianMatrix, B: HermitianMatrix, eta: EtaMap, S: OperatorSet,
                  t_grid: Sequence[float], lambdas: Sequence[float] = (0.25, 0.5, 0.75),
                  scale_tol: float = 1e-9) -> PreinvexityReport:
    """Preinvexity restricted to operators on the eta-path from ``A`` to ``V``.

    For path points ``C1, C2`` checks
    ``f(C1 + lam eta(C2, C1)) <= (1 - lam) f(C1) + lam f(C2)``, evaluating eta on
    the path points themselves.
    """
    path = eta_path(A, B, eta, S)
    ts = np.asarray(t_grid, dtype=float)
    pts = [path.point(float(t)) for t in ts]
    fpts = calculus_stack(f, np.stack([p.data for p in pts]))
    lam = np.asarray(lambdas, dtype=float)
    tally = _Tally()
    for i, j in itertools.product(range(len(ts)), repeat=2):
        if i == j:
            continue
        c1, c2 = pts[i], pts[j]
        d = eval_eta(eta, c2, c1, S)
        z = c1.data[None] + lam[:, None, None] * d.data[None]
        lhs = calculus_stack(f, z)
        rhs = (1.0 - lam)[:, None, None] * fpts[i][None] + lam[:, None, None] * fpts[j][None]
        mins = np.linalg.eigvalsh(rhs - lhs)[:, 0]
        tol = scale_tol * (1.0 + operator_norms(lhs) + operator_norms(rhs))
        tally.add(c2, c1, lam, mins, tol)
    return PreinvexityReport(1, tally.worst, tally.min_eig, tally.cex, tally.checks)


@dataclass(frozen=True)
class EquivalenceResult:
    preinvex_on_path: bool
    phi_convex: bool
    preinvex_margin: float
    phi_violation: float

    @property
    def agree(self) -> bool:
        return self.preinvex_on_path == self.phi_convex


def equivalence_check(f: ScalarFunction, A: HermitianMatrix, B: HermitianMatrix, eta: EtaMap, S: OperatorSet,
                      rng, n_vectors: int = DEFAULT_VECTORS, grid: Sequence[float] = tuple(np.linspace(0, 1, 9)),
                      scale_tol: float = 1e-9) -> EquivalenceResult:
    """Compare path-restricted preinvexity with convexity of the section functions.

    The two verdicts are computed independently: one through Loewner margins
    of operator differences, one through scalar convexity of quadratic forms
    along ``n_vectors`` random unit vectors.
    """
    rep = path_preinvex(f, A, B, eta, S, grid, scale_tol=scale_tol)
    xs = random_unit_vectors(n_vectors, A.dim, rng)
    conv = check_phi_convex(f, A, B, eta, S, xs, grid, tol=scale_tol)
    return EquivalenceResult(rep.passed, conv.convex, rep.min_eigenvalue, conv.worst_violation)
