"""Invex sets of Hermitian matrices and the maps eta they are invex for.

The concrete maps are the difference map and three piecewise maps defined by
case tables over branches of a set:

* ``eta1`` on T u U, where T = {A <= -1} and U = {A >= 1};
* ``eta2`` on V u W, the open spectral bands (-2, 0) and (0, 2);
* ``eta3`` on semidefinite matrices of either sign.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .hermitian import DimensionError, DomainError, HermitianMatrix, Interval

# T/U classification slack on the +-1 bounds
TU_SLACK = 1e-12
# open-band margin for V and W
VW_MARGIN = 1e-6


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_unitary(n: int, rng) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix."""
    rng = _rng(rng)
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    ph = d / np.abs(d)
    return q * ph


def random_hermitian_in(interval: Interval, n: int, seed, margin: float = VW_MARGIN) -> HermitianMatrix:
    """``U diag(lambda) U*`` with eigenvalues uniform in ``interval`` and ``U`` Haar.

    Open endpoints are kept at distance ``margin``.  ``seed`` may be an int or
    a ``numpy.random.Generator`` (which is advanced).
    """
    if n < 1:
        raise DimensionError("n must be >= 1")
    rng = _rng(seed)
    lo, hi = interval.sampling_bounds(margin)
    lam = rng.uniform(lo, hi, size=n)
    if n == 1:
        return HermitianMatrix(lam.reshape(1, 1))
    u = random_unitary(n, rng)
    return HermitianMatrix._trusted((u * lam) @ u.conj().T)


@dataclass(frozen=True)
class OperatorSet:
    """A set of Hermitian matrices that is a union of spectral branches.

    ``classify`` returns the branch label used by the eta case tables, and
    raises :class:`DomainError` for non-members.
    """

    kind: str
    margin: float = VW_MARGIN
    classifier: Callable[[HermitianMatrix], str] | None = None
    description: str = ""

    KINDS = ("whole_space", "t_union_u", "v_union_w", "semidefinite_signed", "custom")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown operator set kind {self.kind!r}")
        if self.margin <= 0:
            raise ValueError("classification margin must be positive")
        if self.kind == "custom" and self.classifier is None:
            raise ValueError("custom operator set needs a classifier")

    @classmethod
    def whole_space(cls) -> "OperatorSet":
        return cls("whole_space")

    @classmethod
    def t_union_u(cls) -> "OperatorSet":
        return cls("t_union_u")

    @classmethod
    def v_union_w(cls, margin: float = VW_MARGIN) -> "OperatorSet":
        return cls("v_union_w", margin)

    @classmethod
    def semidefinite_signed(cls) -> "OperatorSet":
        return cls("semidefinite_signed")

    def branches(self) -> dict[str, Interval]:
        """Spectral interval of each branch (membership: whole spectrum inside)."""
        inf = math.inf
        if self.kind == "whole_space":
            return {"all": Interval.real_line()}
        if self.kind == "t_union_u":
            return {"T": Interval(-inf, -1.0, True, False), "U": Interval(1.0, inf, False, True)}
        if self.kind == "v_union_w":
            return {"V": Interval.open(-2.0, 0.0), "W": Interval.open(0.0, 2.0)}
        if self.kind == "semidefinite_signed":
            return {"psd": Interval(0.0, inf, False, True), "nsd": Interval(-inf, 0.0, True, False)}
        raise ValueError("custom sets have no spectral branches")

    def classify(self, A: HermitianMatrix) -> str:
        if self.kind == "custom":
            return self.classifier(A)
        if self.kind == "whole_space":
            return "all"
        w = A.eigenvalues
        lo, hi = float(w[0]), float(w[-1])
        if self.kind == "t_union_u":
            if hi <= -1.0 + TU_SLACK:
                return "T"
            if lo >= 1.0 - TU_SLACK:
                return "U"
        elif self.kind == "v_union_w":
            d = self.margin
            if lo >= -2.0 + d and hi <= -d:
                return "V"
            if lo >= d and hi <= 2.0 - d:
                return "W"
        else:
            tol = 1e-12 * (1.0 + max(abs(lo), abs(hi)))
            if lo >= -tol:
                return "psd"
            if hi <= tol:
                return "nsd"
        raise DomainError(f"matrix with spectrum [{lo:.6g}, {hi:.6g}] is not in {self.kind}")

    def contains(self, A: HermitianMatrix) -> bool:
        try:
            self.classify(A)
        except DomainError:
            return False
        return True

    def sample(self, n: int, rng, box: Interval) -> HermitianMatrix:
        """Random member with spectrum inside ``box``; branch chosen uniformly."""
        rng = _rng(rng)
        options = []
        for label, iv in self.branches().items():
            try:
                iv = iv.intersect(box)
                iv.sampling_bounds(self.margin)
            except DomainError:
                continue
            options.append(iv)
        if not options:
            raise DomainError(f"sampling box {box} misses every branch of {self.kind}")
        iv = options[int(rng.integers(len(options)))]
        return random_hermitian_in(iv, n, rng, self.margin)


def _psd(A: HermitianMatrix) -> bool:
    w = A.eigenvalues
    return bool(w[0] >= -1e-12 * (1.0 + abs(w[-1])))


def _nsd(A: HermitianMatrix) -> bool:
    w = A.eigenvalues
    return bool(w[-1] <= 1e-12 * (1.0 + abs(w[0])))


@dataclass(frozen=True)
class EtaMap:
    kind: str
    rule: Callable[[HermitianMatrix, HermitianMatrix], HermitianMatrix] | None = None
    description: str = ""

    KINDS = ("difference", "eta1", "eta2", "eta3", "custom")
    _DEFAULT_SETS = {"difference": "whole_space", "eta1": "t_union_u", "eta2": "v_union_w",
                     "eta3": "semidefinite_signed", "custom": "whole_space"}
    _SET_FOR = {"eta1": "t_union_u", "eta2": "v_union_w", "eta3": "semidefinite_signed"}

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown eta map {self.kind!r}")
        if self.kind == "custom" and self.rule is None:
            raise ValueError("custom eta map needs a rule")

    @classmethod
    def difference(cls) -> "EtaMap":
        return cls("difference", description="eta(A, B) = A - B")

    @classmethod
    def custom(cls, rule, description: str = "custom") -> "EtaMap":
        return cls("custom", rule, description)

    @property
    def name(self) -> str:
        return self.kind if self.kind != "custom" else self.description

    def default_set(self) -> OperatorSet:
        return OperatorSet(self._DEFAULT_SETS[self.kind])

    def __call__(self, A: HermitianMatrix, B: HermitianMatrix, S: OperatorSet) -> HermitianMatrix:
        return eval_eta(self, A, B, S)


ETA_NAMES = ("difference", "eta1", "eta2", "eta3")
SET_NAMES = {"whole": "whole_space", "whole_space": "whole_space", "tu": "t_union_u",
             "t_union_u": "t_union_u", "vw": "v_union_w", "v_union_w": "v_union_w",
             "semidefinite": "semidefinite_signed", "semidefinite_signed": "semidefinite_signed"}


def parse_eta(name: str) -> EtaMap:
    if name not in ETA_NAMES:
        raise ValueError(f"unknown eta map {name!r}; choose from {', '.join(ETA_NAMES)}")
    return EtaMap(name)


def parse_set(name: str) -> OperatorSet:
    try:
        return OperatorSet(SET_NAMES[name])
    except KeyError:
        raise ValueError(f"unknown operator set {name!r}; choose from {', '.join(sorted(SET_NAMES))}") from None


def eval_eta(eta: EtaMap, A: HermitianMatrix, B: HermitianMatrix, S: OperatorSet) -> HermitianMatrix:
    """Evaluate ``eta(A, B)`` for ``A, B`` in ``S`` via the map's case table."""
    if A.dim != B.dim:
        raise DimensionError(f"dimension mismatch: {A.dim} vs {B.dim}")
    need = EtaMap._SET_FOR.get(eta.kind)
    if need is not None and S.kind != need:
        raise ValueError(f"{eta.kind} is defined on {need}, not on {S.kind}")
    if eta.kind == "custom":
        return eta.rule(A, B)
    ca, cb = S.classify(A), S.classify(B)
    if eta.kind == "difference":
        return A - B
    n = A.dim
    if eta.kind == "eta1":
        if ca == cb:
            return A - B
        if ca == "T":
            return HermitianMatrix.identity(n) - B
        return -HermitianMatrix.identity(n) - B
    if eta.kind == "eta2":
        return A - B if ca == cb else HermitianMatrix.zeros(n)
    # eta3: the zero matrix counts as both signs
    same = (_psd(A) and _psd(B)) or (_nsd(A) and _nsd(B))
    return A - B if same else B - A


@dataclass(frozen=True)
class EtaPath:
    """The curve ``t -> A + t eta(B, A)`` from ``A`` to ``V = A + eta(B, A)``."""

    base: HermitianMatrix
    direction: HermitianMatrix
    pair: tuple[HermitianMatrix, HermitianMatrix]

    @property
    def endpoint(self) -> HermitianMatrix:
        return self.point(1.0)

    def point(self, t: float) -> HermitianMatrix:
        if not 0.0 <= t <= 1.0:
            raise DomainError(f"path parameter {t} outside [0, 1]")
        return HermitianMatrix._trusted(self.base.data + t * self.direction.data)

    def points(self, ts) -> np.ndarray:
        """Stack ``(m, n, n)`` of path points at parameters ``ts`` (no range check)."""
        ts = np.asarray(ts, dtype=float).reshape(-1, 1, 1)
        return self.base.data[None] + ts * self.direction.data[None]


def eta_path(A: HermitianMatrix, B: HermitianMatrix, eta: EtaMap, S: OperatorSet) -> EtaPath:
    return EtaPath(A, eval_eta(eta, B, A, S), (A, B))


def path_point(A: HermitianMatrix, B: HermitianMatrix, eta: EtaMap, S: OperatorSet, t: float) -> HermitianMatrix:
    """``A + t eta(B, A)``; note the argument order of eta."""
    return eta_path(A, B, eta, S).point(t)


@dataclass(frozen=True)
class ConditionCReport:
    max_residual: float
    tolerance: float
    worst: tuple  # (identity label, t1, t2)

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance


def _opnorm(M: HermitianMatrix) -> float:
    return float(np.max(np.abs(np.linalg.eigvalsh(M.data))))


def check_condition_c(eta: EtaMap, S: OperatorSet, A: HermitianMatrix, B: HermitianMatrix,
                      t_grid: Sequence[float], tol: float = 1e-10) -> ConditionCReport:
    """Residuals of condition C (and its two-parameter consequence) at ``(x, y) = (A, B)``.

    For ``Z_t = B + t eta(A, B)`` the identities checked are
    ``eta(B, Z_t) = -t eta(A, B)``, ``eta(A, Z_t) = (1 - t) eta(A, B)`` and
    ``eta(Z_s, Z_t) = (s - t) eta(A, B)`` for all grid pairs.

    Raises :class:`DomainError` if some ``Z_t`` leaves ``S``.
    """
    d = eval_eta(eta, A, B, S)
    ts = [float(t) for t in t_grid]
    z = {}
    for t in ts:
        zt = HermitianMatrix._trusted(B.data + t * d.data)
        if not S.contains(zt):
            raise DomainError(f"path point B + {t:g} eta(A, B) leaves {S.kind}")
        z[t] = zt
    worst = (0.0, ("none", 0.0, 0.0))

    def note(res, label):
        nonlocal worst
        if res > worst[0]:
            worst = (res, label)

    for t in ts:
        note(_opnorm(eval_eta(eta, B, z[t], S) + t * d), ("C1", t, t))
        note(_opnorm(eval_eta(eta, A, z[t], S) - (1.0 - t) * d), ("C2", t, t))
    for t1, t2 in itertools.product(ts, repeat=2):
        note(_opnorm(eval_eta(eta, z[t2], z[t1], S) - (t2 - t1) * d), ("pairs", t1, t2))
    return ConditionCReport(worst[0], tol * (1.0 + _opnorm(d)), worst[1])


@dataclass(frozen=True)
class ClosureResult:
    holds: bool
    violation: tuple[int, float] | None = None  # (pair index, t)


def check_invex_closure(eta: EtaMap, S: OperatorSet, pairs: Iterable[tuple[HermitianMatrix, HermitianMatrix]],
                        t_grid: Sequence[float]) -> ClosureResult:
    """Sampled test that ``y + t eta(x, y)`` stays in ``S`` for pairs ``(x, y)``."""
    for i, (x, y) in enumerate(pairs):
        d = eval_eta(eta, x, y, S)
        for t in t_grid:
            if not S.contains(HermitianMatrix._trusted(y.data + float(t) * d.data)):
                return ClosureResult(False, (i, float(t)))
    return ClosureResult(True)
