"""Finite-dimensional selfadjoint operators.

Complex Hermitian matrices stand in for bounded selfadjoint operators.  The
continuous functional calculus is realized through a spectral decomposition
and the operator order is tested through the smallest eigenvalue of a
difference.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

HERMITICITY_RTOL = 1e-12
# closed endpoints accept eigenvalues this far (relative) outside the bound
ENDPOINT_SLACK = 1e-12


class NotHermitianError(ValueError):
    pass


class DimensionError(ValueError):
    pass


class DomainError(ValueError):
    """Raised when a spectrum, an operand or a parameter leaves its domain."""


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class Interval:
    """Real interval with independently open or closed endpoints."""

    lo: float
    hi: float
    lo_open: bool = False
    hi_open: bool = False

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi) or self.lo > self.hi:
            raise ValueError(f"invalid interval endpoints {self.lo}, {self.hi}")

    @classmethod
    def closed(cls, lo: float, hi: float) -> "Interval":
        return cls(float(lo), float(hi))

    @classmethod
    def open(cls, lo: float, hi: float) -> "Interval":
        return cls(float(lo), float(hi), True, True)

    @classmethod
    def real_line(cls) -> "Interval":
        return cls(-math.inf, math.inf, True, True)

    @property
    def finite(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def contains(self, values, margin: float = 0.0) -> np.ndarray:
        """Elementwise membership.

        Open endpoints require a distance of at least ``margin`` (strict
        inequality when ``margin`` is zero).  Closed endpoints tolerate a
        relative rounding slack of ``ENDPOINT_SLACK``.
        """
        if margin < 0:
            raise ValueError("margin must be nonnegative")
        v = np.asarray(values, dtype=float)
        if self.lo_open:
            ok_lo = v >= self.lo + margin if margin > 0 else v > self.lo
        else:
            ok_lo = v >= self.lo - ENDPOINT_SLACK * (1.0 + abs(self.lo))
        if self.hi_open:
            ok_hi = v <= self.hi - margin if margin > 0 else v < self.hi
        else:
            ok_hi = v <= self.hi + ENDPOINT_SLACK * (1.0 + abs(self.hi))
        return ok_lo & ok_hi

    def sampling_bounds(self, margin: float = 0.0) -> tuple[float, float]:
        """Closed bounds usable for uniform sampling; open ends shrink by ``margin``."""
        lo = self.lo + margin if self.lo_open else self.lo
        hi = self.hi - margin if self.hi_open else self.hi
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise DomainError(f"cannot sample from unbounded interval {self}")
        if lo > hi or (lo == hi and (self.lo_open or self.hi_open)):
            raise DomainError(f"interval {self} is empty after margin {margin}")
        return lo, hi

    def intersect(self, other: "Interval") -> "Interval":
        if other.lo > self.lo or (other.lo == self.lo and other.lo_open):
            lo, lo_open = other.lo, other.lo_open
        else:
            lo, lo_open = self.lo, self.lo_open
        if other.hi < self.hi or (other.hi == self.hi and other.hi_open):
            hi, hi_open = other.hi, other.hi_open
        else:
            hi, hi_open = self.hi, self.hi_open
        if lo > hi:
            raise DomainError(f"intervals {self} and {other} do not intersect")
        return Interval(lo, hi, lo_open, hi_open)

    def __str__(self):
        return f"{'(' if self.lo_open else '['}{self.lo:g}, {self.hi:g}{')' if self.hi_open else ']'}"


class HermitianMatrix:
    """Immutable complex Hermitian matrix.

    Construction validates Hermiticity to ``1e-12 * (1 + max|entry|)`` and
    stores the exactly symmetrized array.  Eigen-data is computed lazily and
    cached; instances are safe to share between threads.
    """

    __slots__ = ("_a", "_eig")

    def __init__(self, data, *, check: bool = True):
        a = np.array(data, dtype=np.complex128)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise DimensionError(f"expected a nonempty square matrix, got shape {a.shape}")
        if check:
            if not np.all(np.isfinite(a)):
                raise NotHermitianError("matrix has non-finite entries")
            dev = np.max(np.abs(a - a.conj().T))
            bound = HERMITICITY_RTOL * (1.0 + np.max(np.abs(a)))
            if dev > bound:
                raise NotHermitianError(f"Hermiticity violated: |A - A*| = {dev:.3e} > {bound:.3e}")
        a = 0.5 * (a + a.conj().T)
        a.flags.writeable = False
        self._a = a
        self._eig = None

    @classmethod
    def _trusted(cls, a: np.ndarray) -> "HermitianMatrix":
        # caller guarantees a is Hermitian up to rounding
        return cls(a, check=False)

    @classmethod
    def identity(cls, n: int) -> "HermitianMatrix":
        return cls(np.eye(n))

    @classmethod
    def zeros(cls, n: int) -> "HermitianMatrix":
        return cls(np.zeros((n, n)))

    @classmethod
    def scalar(cls, c: float, n: int) -> "HermitianMatrix":
        return cls(float(c) * np.eye(n))

    @classmethod
    def diag(cls, values: Sequence[float]) -> "HermitianMatrix":
        return cls(np.diag(np.asarray(values, dtype=float)))

    @property
    def data(self) -> np.ndarray:
        return self._a

    @property
    def dim(self) -> int:
        return self._a.shape[0]

    def _spectral(self):
        if self._eig is None:
            w, u = np.linalg.eigh(self._a)
            self._eig = (w, u)
        return self._eig

    @property
    def eigenvalues(self) -> np.ndarray:
        return self._spectral()[0]

    @property
    def norm(self) -> float:
        return float(np.max(np.abs(self.eigenvalues)))

    def quad(self, x) -> float:
        """Quadratic form <A x, x>."""
        x = np.asarray(x, dtype=np.complex128)
        return float(np.real(np.vdot(x, self._a @ x)))

    def quad_many(self, xs) -> np.ndarray:
        """Quadratic forms for the rows of ``xs``."""
        xs = np.atleast_2d(np.asarray(xs, dtype=np.complex128))
        return np.real(np.einsum("mi,ij,mj->m", xs.conj(), self._a, xs))

    def __add__(self, other):
        if not isinstance(other, HermitianMatrix):
            return NotImplemented
        _same_dim(self, other)
        return HermitianMatrix._trusted(self._a + other._a)

    def __sub__(self, other):
        if not isinstance(other, HermitianMatrix):
            return NotImplemented
        _same_dim(self, other)
        return HermitianMatrix._trusted(self._a - other._a)

    def __neg__(self):
        return HermitianMatrix._trusted(-self._a)

    def __mul__(self, c):
        if isinstance(c, (int, float, np.floating, np.integer)):
            return HermitianMatrix._trusted(float(c) * self._a)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / float(c))

    def matmul(self, other: "HermitianMatrix") -> np.ndarray:
        """Plain matrix product (generally not Hermitian)."""
        return self._a @ other._a

    def allclose(self, other, atol: float) -> bool:
        b = other.data if isinstance(other, HermitianMatrix) else np.asarray(other)
        return bool(np.max(np.abs(self._a - b)) <= atol)

    def to_dict(self) -> dict:
        """Matrix exchange record: ``{"n": n, "re": [[...]], "im": [[...]]}``."""
        return {"n": self.dim, "re": self._a.real.tolist(), "im": self._a.imag.tolist()}

    @classmethod
    def from_dict(cls, record: dict) -> "HermitianMatrix":
        n = int(record["n"])
        re = np.asarray(record["re"], dtype=float)
        im = np.asarray(record.get("im", np.zeros((n, n))), dtype=float)
        if re.shape != (n, n) or im.shape != (n, n):
            raise DimensionError(f"exchange record declares n={n} but arrays have shapes {re.shape}, {im.shape}")
        return cls(re + 1j * im)

    def __repr__(self):
        return f"HermitianMatrix(dim={self.dim}, data={self._a.tolist()!r})"

    def __eq__(self, other):
        return isinstance(other, HermitianMatrix) and np.array_equal(self._a, other._a)

    __hash__ = None


def _same_dim(a: HermitianMatrix, b: HermitianMatrix) -> None:
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch: {a.dim} vs {b.dim}")


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int = 0

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.conj().T


@dataclass(frozen=True)
class LoewnerVerdict:
    """Outcome of testing ``A <= B``: holds iff ``min_eigenvalue >= -tolerance``."""

    min_eigenvalue: float
    tolerance: float

    @property
    def holds(self) -> bool:
        return self.min_eigenvalue >= -self.tolerance

    def to_dict(self) -> dict:
        return {"min_eigenvalue": self.min_eigenvalue, "tolerance": self.tolerance, "holds": self.holds}


def jacobi_eigh(a, tol: float = 1e-13, max_sweeps: int = 100):
    """Cyclic Jacobi eigensolver for a complex Hermitian matrix.

    Each pivot ``(p, q)`` is annihilated by a phase correction followed by a
    real plane rotation.  Iteration stops once the off-diagonal Frobenius norm
    drops below ``tol * ||A||_F``.

    Returns
    -------
    (eigenvalues, eigenvectors, sweeps), eigenvalues in the order of the
    final diagonal (unsorted).
    """
    a = np.array(a, dtype=np.complex128)
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    fro = np.linalg.norm(a)
    thresh = tol * fro
    offmask = ~np.eye(n, dtype=bool)
    for sweep in range(max_sweeps + 1):
        off = math.sqrt(float(np.sum(np.abs(a[offmask]) ** 2)))
        if off <= thresh:
            return np.real(np.diag(a)).copy(), v, sweep
        if sweep == max_sweeps:
            break
        skip = thresh / n
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= skip or r == 0.0:
                    continue
                tau = (a[q, q].real - a[p, p].real) / (2.0 * r)
                if tau == 0.0:
                    t = 1.0
                else:
                    t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                ph = np.conj(apq) / r
                g = np.array([[c, s], [-s * ph, c * ph]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = g.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                v[:, idx] = v[:, idx] @ g
    raise ConvergenceError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps (off-norm {off:.3e})")


def decompose(A: HermitianMatrix, method: str = "lapack") -> SpectralDecomposition:
    """Spectral decomposition with eigenvalues sorted ascending (stable).

    ``method="lapack"`` uses ``numpy.linalg.eigh``; ``method="jacobi"`` uses
    the cyclic Jacobi solver in this module.
    """
    if method == "lapack":
        w, u = np.linalg.eigh(A.data)
        sweeps = 0
    elif method == "jacobi":
        w, u, sweeps = jacobi_eigh(A.data)
        order = np.argsort(w, kind="stable")
        w, u = w[order], u[:, order]
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    return SpectralDecomposition(w, u, sweeps)


def _rule_and_domain(f):
    rule = getattr(f, "rule", f)
    domain = getattr(f, "domain", None)
    return rule, domain


def _check_domain(w: np.ndarray, domain, name: str) -> None:
    if domain is None:
        return
    ok = domain.contains(w)
    if not np.all(ok):
        bad = np.asarray(w)[~ok].ravel()[0]
        raise DomainError(f"eigenvalue {bad:.17g} lies outside the domain {domain} of {name}")


def calculus_stack(f, stack: np.ndarray) -> np.ndarray:
    """Apply ``f`` through the functional calculus to a stack ``(m, n, n)``."""
    rule, domain = _rule_and_domain(f)
    w, u = np.linalg.eigh(stack)
    _check_domain(w, domain, getattr(f, "name", "f"))
    fw = np.asarray(rule(w), dtype=float)
    out = (u * fw[..., None, :]) @ np.swapaxes(u.conj(), -1, -2)
    return 0.5 * (out + np.swapaxes(out.conj(), -1, -2))


def calculus_many(fs, stack: np.ndarray) -> list[np.ndarray]:
    """Apply several functions to one stack, sharing the eigendecompositions."""
    w, u = np.linalg.eigh(stack)
    uh = np.swapaxes(u.conj(), -1, -2)
    out = []
    for f in fs:
        rule, domain = _rule_and_domain(f)
        _check_domain(w, domain, getattr(f, "name", "f"))
        fw = np.asarray(rule(w), dtype=float)
        m = (u * fw[..., None, :]) @ uh
        out.append(0.5 * (m + np.swapaxes(m.conj(), -1, -2)))
    return out


def apply_function(f, A: HermitianMatrix) -> HermitianMatrix:
    """``f(A) = U diag(f(lambda)) U*``.

    ``f`` is a :class:`~hhverify.functions.ScalarFunction` or a plain
    vectorized callable (no domain check in that case).
    """
    rule, domain = _rule_and_domain(f)
    w, u = A._spectral()
    _check_domain(w, domain, getattr(f, "name", "f"))
    fw = np.asarray(rule(w), dtype=float)
    return HermitianMatrix._trusted((u * fw) @ u.conj().T)


def min_eigenvalues(stack: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(stack)[..., 0]


def operator_norms(stack: np.ndarray) -> np.ndarray:
    w = np.linalg.eigvalsh(stack)
    return np.max(np.abs(w), axis=-1)


def loewner_leq(A: HermitianMatrix, B: HermitianMatrix, scale_tol: float = 1e-9,
                *, tolerance: float | None = None) -> LoewnerVerdict:
    """Test ``A <= B`` in the operator order.

    The default tolerance is ``scale_tol * (1 + ||A|| + ||B||)``; an explicit
    ``tolerance`` overrides it.
    """
    _same_dim(A, B)
    lam = float(np.linalg.eigvalsh(B.data - A.data)[0])
    if tolerance is None:
        tolerance = scale_tol * (1.0 + A.norm + B.norm)
    return LoewnerVerdict(lam, float(tolerance))


def operator_norm(A: HermitianMatrix) -> float:
    return A.norm


def spectrum_in(A: HermitianMatrix, interval: Interval, margin: float = 0.0) -> bool:
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    return bool(np.all(interval.contains(A.eigenvalues, margin)))
