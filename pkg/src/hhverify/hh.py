"""Operator Hermite-Hadamard inequalities along eta-paths.

Every verifier works on the path ``P(t) = A + t eta(B, A)`` and reports the
computed terms next to their margins, so that a failed inequality can be
inspected rather than just flagged.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .functions import ScalarFunction, SignError
from .hermitian import (DomainError, HermitianMatrix, LoewnerVerdict, calculus_many,
                        calculus_stack, operator_norms)
from .invex import ConditionCReport, EtaMap, EtaPath, OperatorSet, check_condition_c, eta_path
from .preinvex import check_unit
from .quadrature import DEFAULT_SCHEME, QuadratureScheme, max_abs, operator_norm_any

log = logging.getLogger(__name__)

KP_CAP = 64
C_PRECHECK_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)


def checked_power(k: int, p: int, cap: int = KP_CAP) -> int:
    """``k**p`` as an int, refusing anything above ``cap``."""
    if k < 1 or p < 1:
        raise ValueError("k and p must be positive integers")
    kp = 1
    for _ in range(p):
        kp *= k
        if kp > cap:
            raise ValueError(f"k^p = {k}^{p} exceeds the cap {cap}")
    return kp


def _kinks(f: ScalarFunction, path: EtaPath) -> list[float]:
    # only one-dimensional paths have eigenvalues linear in t
    if path.base.dim != 1 or not f.kinks:
        return []
    a = float(path.base.data[0, 0].real)
    d = float(path.direction.data[0, 0].real)
    if d == 0.0:
        return []
    return [(k - a) / d for k in f.kinks if 0.0 < (k - a) / d < 1.0]


def _on_path(f: ScalarFunction, path: EtaPath, ts) -> np.ndarray:
    return calculus_stack(f, path.points(ts))


def _line_integral(f: ScalarFunction, path: EtaPath, q: QuadratureScheme) -> np.ndarray:
    return q.integrate(lambda ts: _on_path(f, path, ts), 0.0, 1.0,
                       norm=operator_norm_any, breakpoints=_kinks(f, path))


def operator_line_integral(f: ScalarFunction, A: HermitianMatrix, B: HermitianMatrix, eta: EtaMap,
                           S: OperatorSet, q: QuadratureScheme = DEFAULT_SCHEME) -> HermitianMatrix:
    """``int_0^1 f(A + t eta(B, A)) dt`` by converged composite quadrature.

    Every quadrature node's spectrum is checked against ``f.domain``.
    """
    return HermitianMatrix._trusted(_line_integral(f, eta_path(A, B, eta, S), q))


def _precheck(eta: EtaMap, S: OperatorSet, A: HermitianMatrix, B: HermitianMatrix) -> ConditionCReport:
    try:
        # the chain runs along A + t eta(B, A): x = B, y = A
        return check_condition_c(eta, S, B, A, C_PRECHECK_GRID)
    except DomainError as exc:
        log.warning("condition C pre-check aborted: %s", exc)
        return ConditionCReport(float("inf"), 0.0, ("left-set", float("nan"), float("nan")))


@dataclass(frozen=True)
class HHChainReport:
    """Terms ``T1 <= T2 <= T3 <= T4 <= T5`` of the refined Hermite-Hadamard chain."""

    terms: tuple[HermitianMatrix, ...]
    verdicts: tuple[LoewnerVerdict, ...]
    kp: int
    condition_c: ConditionCReport | None = None

    @property
    def holds(self) -> bool:
        return all(v.holds for v in self.verdicts)

    @property
    def margin(self) -> float:
        return min(v.min_eigenvalue for v in self.verdicts)


def hh_chain(f: ScalarFunction, A: HermitianMatrix, B: HermitianMatrix, eta: EtaMap, S: OperatorSet,
             k: int = 1, p: int = 1, q: QuadratureScheme = DEFAULT_SCHEME, scale_tol: float = 1e-9,
             *, check_c: bool = True) -> HHChainReport:
    """Midpoint value, midpoint sum, integral, trapezoid sum and endpoint mean.

    With ``m = k**p`` the two sums use the nodes ``(2i+1)/(2m)`` and ``i/m``
    on the path.  All four comparisons share the tolerance
    ``scale_tol * (1 + ||T5||)``.
    """
    kp = checked_power(k, p)
    cc = _precheck(eta, S, A, B) if check_c else None
    path = eta_path(A, B, eta, S)
    mids = (2.0 * np.arange(kp) + 1.0) / (2.0 * kp)
    grid = np.arange(kp + 1) / kp
    vals = _on_path(f, path, np.concatenate([[0.5], mids, grid]))
    t1 = vals[0]
    t2 = vals[1:kp + 1].sum(axis=0) / kp
    g = vals[kp + 1:]
    t4 = (g[1:].sum(axis=0) + g[:-1].sum(axis=0)) / (2.0 * kp)
    t3 = _line_integral(f, path, q)
    fa, fb = calculus_stack(f, np.stack([A.data, B.data]))
    t5 = 0.5 * (fa + fb)
    terms = tuple(HermitianMatrix._trusted(t) for t in (t1, t2, t3, t4, t5))
    tol = scale_tol * (1.0 + terms[4].norm)
    lam = np.linalg.eigvalsh(np.stack([terms[i + 1].data - terms[i].data for i in range(4)]))[:, 0]
    verdicts = tuple(LoewnerVerdict(float(x), tol) for x in lam)
    return HHChainReport(terms, verdicts, kp, cc)


@dataclass(frozen=True)
class CorollaryReport:
    left_gap: HermitianMatrix
    right_gap: HermitianMatrix
    verdicts: tuple[LoewnerVerdict, LoewnerVerdict]

    @property
    def holds(self) -> bool:
        return all(v.holds for v in self.verdicts)

    @property
    def margin(self) -> float:
        return min(v.min_eigenvalue for v in self.verdicts)


def corollary_gap(f: ScalarFunction, A: HermitianMatrix, B: HermitianMatrix, eta: EtaMap, S: OperatorSet,
                  q: QuadratureScheme = DEFAULT_SCHEME, scale_tol: float = 1e-9,
                  *, chain: HHChainReport | None = None) -> CorollaryReport:
    """``0 <= T3 - T1 <= T5 - T3``: the integral sits nearer the midpoint value."""
    chain = chain or hh_chain(f, A, B, eta, S, 1, 1, q, scale_tol)
    t1, _, t3, _, t5 = chain.terms
    left, right = t3 - t1, t5 - t3
    tol = scale_tol * (1.0 + t5.norm)
    lam = np.linalg.eigvalsh(np.stack([left.data, right.data - left.data]))[:, 0]
    return CorollaryReport(left, right, (LoewnerVerdict(float(lam[0]), tol), LoewnerVerdict(float(lam[1]), tol)))


@dataclass(frozen=True)
class ProductIneqReport:
    M: float
    N: float
    lhs: float
    rhs: float
    tolerance: float
    advisory: bool = False

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def holds(self) -> bool:
        return self.slack >= -self.tolerance


def _require_sign(f: ScalarFunction, g: ScalarFunction, what: str) -> None:
    for h in (f, g):
        if not h.nonnegative:
            raise SignError(f"{what} needs nonnegative functions; {h.name} is not flagged nonnegative")


def _product_terms(f, g, A, B, eta, S, xs, q):
    """Per-vector M, N, midpoint product and integral of the product of forms."""
    path = eta_path(A, B, eta, S)
    kinks = sorted(set(_kinks(f, path)) | set(_kinks(g, path)))

    def integrand(ts):
        F, G = calculus_many((f, g), path.points(ts))
        qf = np.real(np.einsum("mi,tij,mj->tm", xs.conj(), F, xs))
        qg = np.real(np.einsum("mi,tij,mj->tm", xs.conj(), G, xs))
        return qf * qg

    integral = q.integrate(integrand, 0.0, 1.0, norm=max_abs, breakpoints=kinks)
    ends = np.stack([A.data, B.data, path.point(0.5).data])
    F, G = calculus_many((f, g), ends)
    qf = np.real(np.einsum("mi,tij,mj->tm", xs.conj(), F, xs))
    qg = np.real(np.einsum("mi,tij,mj->tm", xs.conj(), G, xs))
    M = qf[0] * qg[0] + qf[1] * qg[1]
    N = qf[0] * qg[1] + qf[1] * qg[0]
    mid = qf[2] * qg[2]
    return M, N, mid, integral


def _as_rows(x) -> np.ndarray:
    return np.atleast_2d(check_unit(x)).astype(np.complex128)


def product_ineq_right_batch(f, g, A, B, eta, S, xs, q: QuadratureScheme = DEFAULT_SCHEME,
                             tol: float = 1e-9) -> list[ProductIneqReport]:
    _require_sign(f, g, "the product upper bound")
    M, N, _, integral = _product_terms(f, g, A, B, eta, S, _as_rows(xs), q)
    rhs = M / 3.0 + N / 6.0
    return [ProductIneqReport(float(m), float(n), float(l), float(r), tol)
            for m, n, l, r in zip(M, N, integral, rhs)]


def product_ineq_right(f: ScalarFunction, g: ScalarFunction, A: HermitianMatrix, B: HermitianMatrix,
                       eta: EtaMap, S: OperatorSet, x, q: QuadratureScheme = DEFAULT_SCHEME,
                       tol: float = 1e-9) -> ProductIneqReport:
    """``int_0^1 <f(P)x,x><g(P)x,x> dt <= M/3 + N/6`` for one unit vector ``x``."""
    return product_ineq_right_batch(f, g, A, B, eta, S, x, q, tol)[0]


def product_ineq_left_batch(f, g, A, B, eta, S, xs, q: QuadratureScheme = DEFAULT_SCHEME,
                            tol: float = 1e-9, *, require_nonnegative: bool = True) -> list[ProductIneqReport]:
    signed = f.nonnegative and g.nonnegative
    if require_nonnegative:
        _require_sign(f, g, "the product midpoint bound")
    M, N, mid, integral = _product_terms(f, g, A, B, eta, S, _as_rows(xs), q)
    rhs = 0.5 * integral + M / 12.0 + N / 6.0
    out = [ProductIneqReport(float(m), float(n), float(l), float(r), tol, advisory=not signed)
           for m, n, l, r in zip(M, N, mid, rhs)]
    if not signed:
        for rep in out:
            if not rep.holds:
                log.warning("midpoint product bound violated with sign-changing %s, %s (slack %.3e)",
                            f.name, g.name, rep.slack)
    return out


def product_ineq_left(f: ScalarFunction, g: ScalarFunction, A: HermitianMatrix, B: HermitianMatrix,
                      eta: EtaMap, S: OperatorSet, x, q: QuadratureScheme = DEFAULT_SCHEME,
                      tol: float = 1e-9, *, require_nonnegative: bool = True) -> ProductIneqReport:
    """``<f(P(1/2))x,x><g(P(1/2))x,x> <= (1/2) int <f(P)x,x><g(P)x,x> + M/12 + N/6``.

    With ``require_nonnegative=False`` sign-changing functions are accepted;
    the report is then marked advisory and violations are logged instead of
    raised.
    """
    return product_ineq_left_batch(f, g, A, B, eta, S, x, q, tol,
                                   require_nonnegative=require_nonnegative)[0]


@dataclass(frozen=True)
class TrapezoidReport:
    a: float
    b: float
    scalar_lhs: float
    scalar_rhs: float
    norm_lhs: float
    norm_mid: float
    norm_rhs: float
    tolerance: float
    open_set: bool

    @property
    def scalar_holds(self) -> bool:
        return self.scalar_lhs <= self.scalar_rhs + self.tolerance

    @property
    def norm_holds(self) -> bool:
        return (self.norm_lhs <= self.norm_mid + self.tolerance
                and self.norm_mid <= self.norm_rhs + self.tolerance)

    @property
    def holds(self) -> bool:
        return self.scalar_holds and self.norm_holds

    @property
    def margin(self) -> float:
        return min(self.scalar_rhs - self.scalar_lhs, self.norm_mid - self.norm_lhs,
                   self.norm_rhs - self.norm_mid)


def _primitive(f, path, ts, q, tol):
    """Operator values of ``Phi(t) = int_0^t f(P(s)) ds`` for each ``t`` in ``ts``; shape (m, n, n)."""
    ts = np.asarray(ts, dtype=float)

    def integrand(us):
        pts = path.points(np.outer(us, ts).ravel())
        F = calculus_stack(f, pts).reshape(len(us), len(ts), path.base.dim, path.base.dim)
        return F * ts[None, :, None, None]

    return q.integrate(integrand, 0.0, 1.0, norm=operator_norm_any, tol=tol)


def trapezoid_primitive(f: ScalarFunction, A, B, eta, S, ts, q: QuadratureScheme = DEFAULT_SCHEME) -> np.ndarray:
    """``Phi(t)`` at the given parameters, as a stack of matrices."""
    return _primitive(f, eta_path(A, B, eta, S), ts, q, q.convergence_tol)


def _trapezoid_operators(f, A, B, eta, S, a, b, q):
    if not (0.0 < a < b < 1.0):
        raise DomainError(f"need 0 < a < b < 1, got a={a}, b={b}")
    if not f.nonnegative:
        raise SignError(f"the trapezoid bound needs a nonnegative function; {f.name} is not flagged")
    path = eta_path(A, B, eta, S)
    inner_tol = q.convergence_tol / 10.0
    phi_ab = _primitive(f, path, [a, b], q, q.convergence_tol)
    outer = q.integrate(lambda ts: _primitive(f, path, ts, q, inner_tol), a, b, norm=operator_norm_any)
    avg = outer / (b - a)
    Fa, Fb = _on_path(f, path, [a, b])
    return phi_ab[0], phi_ab[1], avg, Fa, Fb


def trapezoid_bound_batch(f, A, B, eta, S, a: float, b: float, xs, q: QuadratureScheme = DEFAULT_SCHEME,
                          tol: float = 1e-9) -> list[TrapezoidReport]:
    xs = _as_rows(xs)
    pa, pb, avg, Fa, Fb = _trapezoid_operators(f, A, B, eta, S, a, b, q)
    X = 0.5 * pa + 0.5 * pb - avg
    norms = operator_norms(np.stack([X, Fa + Fb, Fa, Fb]))
    c = (b - a) / 8.0
    open_set = S.kind in ("whole_space", "v_union_w")
    quad = lambda M: np.real(np.einsum("mi,ij,mj->m", xs.conj(), M, xs))
    lhs = np.abs(quad(X))
    rhs = c * (quad(Fa) + quad(Fb))
    return [TrapezoidReport(a, b, float(l), float(r), float(norms[0]), c * float(norms[1]),
                            c * float(norms[2] + norms[3]), tol, open_set) for l, r in zip(lhs, rhs)]


def trapezoid_bound(f: ScalarFunction, A: HermitianMatrix, B: HermitianMatrix, eta: EtaMap, S: OperatorSet,
                    a: float, b: float, x, q: QuadratureScheme = DEFAULT_SCHEME,
                    tol: float = 1e-9) -> TrapezoidReport:
    """Trapezoid-type bound for ``phi(t) = int_0^t <f(P(s))x,x> ds`` on ``[a, b]``.

    Scalar form: ``|(phi(a)+phi(b))/2 - mean_[a,b] phi| <= (b-a)/8 (phi'(a)+phi'(b))``
    with ``phi'`` taken as the exact integrand value.  Norm form: the same
    with operator integrals and operator norms, plus the triangle-inequality
    bound.
    """
    return trapezoid_bound_batch(f, A, B, eta, S, a, b, x, q, tol)[0]


@dataclass(frozen=True)
class ReductionReport:
    chain: HHChainReport
    two_midpoint_error: float
    trapezoid_term_error: float
    identity_tol: float
    dragomir_chain: HHChainReport
    pachpatte: tuple[ProductIneqReport, ProductIneqReport] | None = None

    @property
    def pachpatte_holds(self) -> bool:
        return self.pachpatte is None or all(r.holds for r in self.pachpatte)

    @property
    def holds(self) -> bool:
        return (self.chain.holds and self.dragomir_chain.holds and self.pachpatte_holds
                and self.two_midpoint_error <= self.identity_tol
                and self.trapezoid_term_error <= self.identity_tol)


def classical_reductions(f: ScalarFunction, g: ScalarFunction | None, A: HermitianMatrix, B: HermitianMatrix,
                         q: QuadratureScheme = DEFAULT_SCHEME, tol: float = 1e-9, k: int = 2, p: int = 1,
                         identity_tol: float = 1e-12) -> ReductionReport:
    """Specialize the general verifiers to the difference map.

    * the refined chain for ``k, p`` on the segment from ``A`` to ``B``;
    * for ``k^p = 2`` the midpoint sum equals the average of ``f`` at
      ``(3A+B)/4`` and ``(A+3B)/4``, and the trapezoid sum equals
      ``(f((A+B)/2) + (f(A)+f(B))/2) / 2``;
    * for scalars (``n = 1``) with ``g`` given, both product inequalities for
      nonnegative convex functions, the second one doubled.
    """
    eta, S = EtaMap.difference(), OperatorSet.whole_space()
    chain = hh_chain(f, A, B, eta, S, k, p, q, tol)
    two = hh_chain(f, A, B, eta, S, 2, 1, q, tol, check_c=False)
    quarter = calculus_stack(f, np.stack([(3 * A.data + B.data) / 4, (A.data + 3 * B.data) / 4,
                                          (A.data + B.data) / 2]))
    fa, fb = calculus_stack(f, np.stack([A.data, B.data]))
    t2_direct = 0.5 * (quarter[0] + quarter[1])
    t4_direct = 0.5 * (quarter[2] + 0.5 * (fa + fb))
    scale = 1.0 + two.terms[4].norm
    err2 = max_abs(two.terms[1].data - t2_direct) / scale
    err4 = max_abs(two.terms[3].data - t4_direct) / scale
    pach = None
    if g is not None and A.dim == 1:
        x = np.ones(1)
        right = product_ineq_right(f, g, A, B, eta, S, x, q, tol)
        left = product_ineq_left(f, g, A, B, eta, S, x, q, tol)
        doubled = ProductIneqReport(left.M, left.N, 2.0 * left.lhs, 2.0 * left.rhs, tol)
        pach = (right, doubled)
    return ReductionReport(chain, err2, err4, identity_tol, two, pach)
