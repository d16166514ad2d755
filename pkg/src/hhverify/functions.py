"""Real scalar functions fed to the functional calculus, and the name registry
used by the command line (``square``, ``affine:a,b``, ``table:x:y,...``)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .hermitian import DomainError, Interval

SPOT_CHECK_POINTS = 1000
# infinite domains are spot-checked on this finite window
_SPOT_WINDOW = 100.0


class SignError(ValueError):
    """A function flagged nonnegative takes a negative value on its domain."""


@dataclass(frozen=True)
class ScalarFunction:
    """A real continuous function with a domain interval.

    ``rule`` must accept numpy arrays.  ``kinks`` lists points where the
    function is not smooth; the quadrature splits panels there when the
    path is one-dimensional.
    """

    name: str
    rule: Callable[[np.ndarray], np.ndarray]
    domain: Interval = field(default_factory=Interval.real_line)
    nonnegative: bool = False
    kinks: tuple[float, ...] = ()

    def __post_init__(self):
        grid = self._spot_grid()
        with np.errstate(all="ignore"):
            vals = np.asarray(self.rule(grid), dtype=float)
        if vals.shape != grid.shape or not np.all(np.isfinite(vals)):
            raise DomainError(f"function {self.name} is not finite on its domain {self.domain}")
        if self.nonnegative and np.min(vals) < 0:
            i = int(np.argmin(vals))
            raise SignError(f"function {self.name} is negative at {grid[i]:g}: {vals[i]:g}")

    def _spot_grid(self) -> np.ndarray:
        lo = max(self.domain.lo, -_SPOT_WINDOW)
        hi = min(self.domain.hi, _SPOT_WINDOW)
        if lo > hi:
            lo = hi = self.domain.lo if math.isfinite(self.domain.lo) else self.domain.hi
        g = np.linspace(lo, hi, SPOT_CHECK_POINTS)
        return g[self.domain.contains(g)] if g.size else g

    def __call__(self, t):
        return self.rule(np.asarray(t, dtype=float))

    def restrict(self, domain: Interval, nonnegative: bool | None = None) -> "ScalarFunction":
        """Same rule on a new domain, optionally re-flagged (and re-checked)."""
        flag = self.nonnegative if nonnegative is None else nonnegative
        return ScalarFunction(self.name, self.rule, domain, flag, self.kinks)

    def with_sign(self, nonnegative: bool = True) -> "ScalarFunction":
        return self.restrict(self.domain, nonnegative)


def square(domain: Interval | None = None) -> ScalarFunction:
    return ScalarFunction("square", np.square, domain or Interval.real_line(), True)


def identity(domain: Interval | None = None) -> ScalarFunction:
    return ScalarFunction("identity", lambda t: np.asarray(t, dtype=float), domain or Interval.real_line())


def affine(a: float, b: float, domain: Interval | None = None) -> ScalarFunction:
    """t -> a + b t."""
    a, b = float(a), float(b)
    return ScalarFunction(f"affine:{a:g},{b:g}", lambda t: a + b * np.asarray(t, dtype=float),
                          domain or Interval.real_line())


def neg_abs(domain: Interval | None = None) -> ScalarFunction:
    return ScalarFunction("neg_abs", lambda t: -np.abs(t), domain or Interval.real_line(), kinks=(0.0,))


def neg_square(domain: Interval | None = None) -> ScalarFunction:
    return ScalarFunction("neg_square", lambda t: -np.square(t), domain or Interval.real_line())


def const(c: float, domain: Interval | None = None) -> ScalarFunction:
    c = float(c)
    return ScalarFunction(f"const:{c:g}", lambda t: np.full(np.shape(t), c), domain or Interval.real_line(), c >= 0)


def exp(domain: Interval | None = None) -> ScalarFunction:
    return ScalarFunction("exp", np.exp, domain or Interval.real_line(), True)


def table(xs, ys) -> ScalarFunction:
    """Piecewise-linear interpolation of samples; domain is the closed hull of ``xs``."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
        raise ValueError("table needs at least two (x, y) samples")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("table abscissae must be strictly increasing")
    name = "table:" + ",".join(f"{x:g}:{y:g}" for x, y in zip(xs, ys))
    return ScalarFunction(name, lambda t: np.interp(t, xs, ys), Interval.closed(xs[0], xs[-1]),
                          bool(np.all(ys >= 0)), tuple(float(x) for x in xs[1:-1]))


def parse_function(text: str, domain: Interval | None = None) -> ScalarFunction:
    """Resolve a function name as accepted by the CLI.

    >>> parse_function("affine:1,2")(np.array([0.0, 1.0]))
    array([1., 3.])
    """
    name, _, args = text.strip().partition(":")
    try:
        if name == "square":
            return square(domain)
        if name == "identity":
            return identity(domain)
        if name == "neg_abs":
            return neg_abs(domain)
        if name == "neg_square":
            return neg_square(domain)
        if name == "exp":
            return exp(domain)
        if name == "const":
            return const(float(args), domain)
        if name == "affine":
            a, b = (float(s) for s in args.split(","))
            return affine(a, b, domain)
        if name == "table":
            pairs = [p.split(":") for p in args.split(",")]
            f = table([float(x) for x, _ in pairs], [float(y) for _, y in pairs])
            return f if domain is None else f.restrict(f.domain.intersect(domain))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, (DomainError, SignError)):
            raise
        raise ValueError(f"malformed function spec {text!r}: {exc}") from None
    raise ValueError(f"unknown function {text!r}")
