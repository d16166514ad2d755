"""Seeded verification campaigns.

Usage::

    hhverify --suite hh-chain --f square --eta eta1 --dim 1,2,4 --k 2 --p 1,2 --trials 50
    hhverify --config campaign.cfg --format machine --report out.jsonl

Exit status: 0 when the outcome matches ``expected``, 1 when it does not,
2 on configuration or runtime errors (partial records are still written).
"""
from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .functions import parse_function
from .hermitian import HermitianMatrix, Interval
from .hh import (classical_reductions, corollary_gap, hh_chain, product_ineq_left_batch,
                 product_ineq_right_batch, trapezoid_bound_batch)
from .invex import check_condition_c, parse_eta, parse_set
from .preinvex import (preinvex_margins, preinvex_sweep, random_unit_vectors,
                       sample_pair)
from .quadrature import QuadratureScheme

log = logging.getLogger("hhverify")

SUITES = ("hh-chain", "corollary", "product-right", "product-left", "trapezoid", "preinvex",
          "condition-c", "reductions")
EXIT_OK, EXIT_MISMATCH, EXIT_ERROR = 0, 1, 2


class ConfigError(ValueError):
    pass


def _ints(text) -> tuple[int, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    return tuple(int(v) for v in str(text).split(",") if v.strip())


def _pair(text) -> tuple[float, float] | None:
    if text in (None, ""):
        return None
    lo, hi = (float(v) for v in str(text).split(","))
    return lo, hi


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    return str(text).strip().lower() in ("1", "true", "yes", "on")


@dataclass(frozen=True)
class CampaignConfig:
    suite: str
    f: str = "square"
    g: str | None = None
    eta: str = "difference"
    set: str | None = None
    lo: float = -3.0
    hi: float = 3.0
    domain: tuple[float, float] | None = None
    dim: tuple[int, ...] = (2,)
    trials: int = 10
    start: int = 0
    t_grid: int = 33
    k: tuple[int, ...] = (1,)
    p: tuple[int, ...] = (1,)
    a: float = 0.25
    b: float = 0.75
    seed: int = 0
    tol: float = 1e-9
    vectors: int = 20
    panels: int = 8
    nodes: int = 8
    signed: bool = False
    expected: str = "pass"

    _CONVERTERS = {"dim": _ints, "k": _ints, "p": _ints, "domain": _pair, "signed": _bool,
                   "lo": float, "hi": float, "a": float, "b": float, "tol": float,
                   "trials": int, "start": int, "t_grid": int, "seed": int, "vectors": int,
                   "panels": int, "nodes": int}

    @classmethod
    def from_mapping(cls, values: dict) -> "CampaignConfig":
        names = {f.name for f in fields(cls)}
        kwargs = {}
        for key, val in values.items():
            key = key.replace("-", "_")
            if key not in names:
                raise ConfigError(f"unknown config key {key!r}")
            if val is None:
                continue
            conv = cls._CONVERTERS.get(key)
            try:
                kwargs[key] = conv(val) if conv else val
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {val!r} ({exc})") from None
        if "suite" not in kwargs:
            raise ConfigError("no suite given")
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.suite not in SUITES:
            raise ConfigError(f"unknown suite {self.suite!r}; choose from {', '.join(SUITES)}")
        if self.expected not in ("pass", "fail"):
            raise ConfigError("expected must be 'pass' or 'fail'")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.t_grid < 2:
            raise ConfigError("t_grid needs at least two points")
        if not self.dim or min(self.dim) < 1:
            raise ConfigError("dimensions must be positive")
        try:
            self.resolve()
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from None

    def resolve(self):
        """Resolve names into ``(f, g, eta, S, box)``."""
        dom = Interval.closed(*self.domain) if self.domain else None
        needs_sign = self.suite in ("product-right", "trapezoid") or \
            (self.suite == "product-left" and not self.signed) or \
            (self.suite == "reductions" and self.g is not None)
        f = parse_function(self.f, dom)
        g = parse_function(self.g or self.f, dom)
        if needs_sign:
            f, g = f.with_sign(True), g.with_sign(True)
        eta = parse_eta(self.eta)
        S = parse_set(self.set) if self.set else eta.default_set()
        if self.lo > self.hi:
            raise ValueError("sampling interval lo > hi")
        box = Interval.closed(self.lo, self.hi)
        return f, g, eta, S, box


def read_config_file(path: str | Path) -> dict:
    """Plain ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        values[key] = val
    return values


@dataclass(frozen=True)
class Record:
    suite: str
    instance: int
    dim: int
    kp: int | None
    margin: float
    verdict: str
    counterexample: dict | None = None
    note: str | None = None

    def sort_key(self):
        return (self.dim, -1 if self.kp is None else self.kp, self.instance)

    def to_dict(self) -> dict:
        d = {"suite": self.suite, "instance": self.instance, "dim": self.dim, "kp": self.kp,
             "margin": self.margin, "verdict": self.verdict}
        if self.counterexample is not None:
            d["counterexample"] = self.counterexample
        if self.note is not None:
            d["note"] = self.note
        return d


@dataclass
class CampaignResult:
    config: CampaignConfig
    records: list[Record] = field(default_factory=list)
    wall_time: float = 0.0
    error: str | None = None

    @property
    def instances(self) -> int:
        return len(self.records)

    @property
    def passed(self) -> int:
        return sum(r.verdict == "pass" for r in self.records)

    @property
    def worst_margin(self) -> float:
        return min((r.margin for r in self.records), default=0.0)

    @property
    def expectation_met(self) -> bool:
        if self.error is not None or not self.records:
            return False
        failed = self.passed < self.instances
        return failed if self.config.expected == "fail" else not failed

    def summary(self) -> dict:
        return {"instances": self.instances, "passed": self.passed, "worst_margin": self.worst_margin,
                "wall_time": round(self.wall_time, 3), "expected": self.config.expected,
                "expectation_met": self.expectation_met}


def instance_rng(seed: int, dim: int, kp: int | None, instance: int) -> np.random.Generator:
    """Counter-based split of the master seed; independent of execution order."""
    key = (dim, 0 if kp is None else kp, instance)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def _cex(A: HermitianMatrix, B: HermitianMatrix, t, margin: float, **extra) -> dict:
    d = {"A": A.to_dict(), "B": B.to_dict(), "t": t, "margin": margin}
    d.update(extra)
    return d


class _Runner:
    def __init__(self, cfg: CampaignConfig):
        self.cfg = cfg
        self.f, self.g, self.eta, self.S, self.box = cfg.resolve()
        self.q = QuadratureScheme(panels=cfg.panels, nodes_per_panel=cfg.nodes)
        self.ts = np.linspace(0.0, 1.0, cfg.t_grid)

    def pair(self, n, rng, path="reverse", I: Interval | None = None):
        A, B, _ = sample_pair(self.S, I or self.f.domain, n, rng, self.eta, self.ts, self.box, path)
        return A, B

    def hh_chain(self, n, kp, k, p, rng, i):
        A, B = self.pair(n, rng)
        rep = hh_chain(self.f, A, B, self.eta, self.S, k, p, self.q, self.cfg.tol)
        note = None
        if rep.condition_c is not None and not rep.condition_c.passed:
            note = f"condition C pre-check failed (residual {rep.condition_c.max_residual:.3e})"
        cex = None
        if not rep.holds:
            link = next(j for j, v in enumerate(rep.verdicts) if not v.holds)
            cex = _cex(A, B, None, rep.margin, link=link + 1)
        return Record("hh-chain", i, n, kp, rep.margin, "pass" if rep.holds else "fail", cex, note)

    def corollary(self, n, kp, k, p, rng, i):
        A, B = self.pair(n, rng)
        rep = corollary_gap(self.f, A, B, self.eta, self.S, self.q, self.cfg.tol)
        cex = None if rep.holds else _cex(A, B, None, rep.margin)
        return Record("corollary", i, n, None, rep.margin, "pass" if rep.holds else "fail", cex)

    def _product(self, batch, name, n, rng, i, **kw):
        A, B = self.pair(n, rng, I=self.f.domain.intersect(self.g.domain))
        xs = random_unit_vectors(self.cfg.vectors, n, rng)
        reps = batch(self.f, self.g, A, B, self.eta, self.S, xs, self.q, self.cfg.tol, **kw)
        j = int(np.argmin([r.slack for r in reps]))
        worst = reps[j]
        ok = all(r.holds or r.advisory for r in reps)
        cex = None
        if not all(r.holds for r in reps):
            cex = _cex(A, B, None, worst.slack, x={"re": xs[j].real.tolist(), "im": xs[j].imag.tolist()})
        return Record(name, i, n, None, worst.slack, "pass" if ok else "fail", cex,
                      "advisory: sign-changing functions" if worst.advisory else None)

    def product_right(self, n, kp, k, p, rng, i):
        return self._product(product_ineq_right_batch, "product-right", n, rng, i)

    def product_left(self, n, kp, k, p, rng, i):
        return self._product(product_ineq_left_batch, "product-left", n, rng, i,
                             require_nonnegative=not self.cfg.signed)

    def trapezoid(self, n, kp, k, p, rng, i):
        A, B = self.pair(n, rng)
        xs = random_unit_vectors(self.cfg.vectors, n, rng)
        reps = trapezoid_bound_batch(self.f, A, B, self.eta, self.S, self.cfg.a, self.cfg.b, xs, self.q,
                                     self.cfg.tol)
        margin = min(r.margin for r in reps)
        ok = all(r.holds for r in reps)
        return Record("trapezoid", i, n, None, margin, "pass" if ok else "fail",
                      None if ok else _cex(A, B, None, margin))

    def preinvex(self, n, kp, k, p, rng, i):
        A, B = self.pair(n, rng, path="forward")
        lam, tol = preinvex_margins(self.f, self.eta, self.S, A, B, self.ts, self.cfg.tol)
        bad = lam < -tol
        cex = None
        if np.any(bad):
            j = int(np.argmax(bad))
            cex = _cex(A, B, float(self.ts[j]), float(lam[j]))
        return Record("preinvex", i, n, None, float(np.min(lam)), "fail" if cex else "pass", cex)

    def preinvex_sweep(self, n):
        rep = preinvex_sweep(self.f, self.eta, self.S, self.f.domain, n, self.ts, self.cfg.tol,
                             sample_box=self.box)
        cex = rep.counterexample.to_dict() if rep.counterexample else None
        return Record("preinvex", -1, n, None, rep.min_eigenvalue, rep.verdict, cex, "scalar sweep")

    def condition_c(self, n, kp, k, p, rng, i):
        A, B = self.pair(n, rng, path="forward", I=Interval.real_line())
        try:
            rep = check_condition_c(self.eta, self.S, A, B, self.ts, self.cfg.tol)
        except ValueError as exc:
            return Record("condition-c", i, n, None, float("-inf"), "fail", _cex(A, B, None, float("-inf")),
                          str(exc))
        cex = None if rep.passed else _cex(A, B, rep.worst[1], -rep.max_residual, identity=rep.worst[0])
        return Record("condition-c", i, n, None, -rep.max_residual, "pass" if rep.passed else "fail", cex)

    def reductions(self, n, kp, k, p, rng, i):
        A = self.S.sample(n, rng, self.box)
        B = self.S.sample(n, rng, self.box)
        g = self.g if (self.cfg.g is not None and n == 1) else None
        rep = classical_reductions(self.f, g, A, B, self.q, self.cfg.tol, k, p)
        margin = rep.chain.margin
        if rep.pachpatte:
            margin = min(margin, *(r.slack for r in rep.pachpatte))
        return Record("reductions", i, n, kp, margin, "pass" if rep.holds else "fail",
                      None if rep.holds else _cex(A, B, None, margin))


def run_campaign(cfg: CampaignConfig) -> CampaignResult:
    """Run every instance of the configured suite, in a fixed order."""
    result = CampaignResult(cfg)
    t0 = time.perf_counter()
    try:
        runner = _Runner(cfg)
        if cfg.suite in ("reductions",) and cfg.eta != "difference":
            raise ConfigError("the reductions suite uses the difference map")
        method = getattr(runner, cfg.suite.replace("-", "_"))
        uses_kp = cfg.suite in ("hh-chain", "reductions")
        kps = list(itertools.product(cfg.k, cfg.p)) if uses_kp else [(1, 1)]
        for n in cfg.dim:
            if cfg.suite == "preinvex" and cfg.start == 0:
                result.records.append(runner.preinvex_sweep(n))
            for k, p in kps:
                kp = k ** p if uses_kp else None
                for i in range(cfg.start, cfg.start + cfg.trials):
                    rng = instance_rng(cfg.seed, n, kp, i)
                    result.records.append(method(n, kp, k, p, rng, i))
    except Exception as exc:  # partial results are still reported
        log.error("campaign aborted: %s", exc)
        result.error = f"{type(exc).__name__}: {exc}"
    result.records.sort(key=Record.sort_key)
    result.wall_time = time.perf_counter() - t0
    return result


def format_machine(result: CampaignResult) -> str:
    return "".join(json.dumps(r.to_dict(), sort_keys=True, separators=(",", ":")) + "\n"
                   for r in result.records)


TABLE_COLUMNS = ("suite", "instance", "dim", "kp", "margin", "verdict")


def format_table(result: CampaignResult) -> str:
    rows = [[r.suite, str(r.instance), str(r.dim), "-" if r.kp is None else str(r.kp),
             f"{r.margin:.3e}", r.verdict + (" *" if r.note else "")] for r in result.records]
    widths = [max(len(h), *(len(row[c]) for row in rows)) if rows else len(h)
              for c, h in enumerate(TABLE_COLUMNS)]
    line = lambda cells: "  ".join(c.rjust(w) if j in (1, 2, 3, 4) else c.ljust(w)
                                   for j, (c, w) in enumerate(zip(cells, widths))).rstrip()
    out = [line(TABLE_COLUMNS)]
    out += [line(row) for row in rows]
    if rows:
        s = result.summary()
        out.append(f"# {s['passed']}/{s['instances']} pass, worst margin {s['worst_margin']:.3e}, "
                   f"expected {s['expected']}: {'met' if s['expectation_met'] else 'NOT met'}, "
                   f"{s['wall_time']:.2f}s")
        notes = sorted({r.note for r in result.records if r.note})
        out += [f"# * {n}" for n in notes]
    return "\n".join(out) + "\n"


def write_report(result: CampaignResult, path: str | Path | None, fmt: str = "table") -> None:
    """Write the report to ``path`` (``None`` or ``"-"`` for stdout)."""
    if fmt not in ("machine", "table"):
        raise ValueError(f"unknown report format {fmt!r}")
    text = format_machine(result) if fmt == "machine" else format_table(result)
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc.strerror or exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hhverify", description="Seeded operator Hermite-Hadamard campaigns.")
    ap.add_argument("--config", help="key = value campaign file; flags override it")
    ap.add_argument("--suite", choices=SUITES)
    ap.add_argument("--f")
    ap.add_argument("--g")
    ap.add_argument("--eta", choices=("difference", "eta1", "eta2", "eta3"))
    ap.add_argument("--set", dest="set")
    ap.add_argument("--interval", help="sampling interval lo,hi")
    ap.add_argument("--domain", help="restrict f and g to the closed interval lo,hi")
    ap.add_argument("--dim", help="comma-separated dimensions")
    ap.add_argument("--trials", type=int)
    ap.add_argument("--start", type=int, help="first instance index (for split campaigns)")
    ap.add_argument("--t-grid", type=int, dest="t_grid")
    ap.add_argument("--k", help="comma-separated k values")
    ap.add_argument("--p", help="comma-separated p values")
    ap.add_argument("--a", type=float)
    ap.add_argument("--b", type=float)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--tol", type=float)
    ap.add_argument("--vectors", type=int)
    ap.add_argument("--panels", type=int)
    ap.add_argument("--nodes", type=int)
    ap.add_argument("--signed", action="store_const", const=True, default=None,
                    help="allow sign-changing f, g in product-left (violations are logged)")
    ap.add_argument("--expected", choices=("pass", "fail"))
    ap.add_argument("--report", default="-")
    ap.add_argument("--format", choices=("machine", "table"), default="table")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def config_from_args(args: argparse.Namespace) -> CampaignConfig:
    values = read_config_file(args.config) if args.config else {}
    if "interval" in values:
        values["lo"], values["hi"] = values.pop("interval").split(",")
    for key in ("suite", "f", "g", "eta", "set", "domain", "dim", "trials", "start", "t_grid", "k", "p",
                "a", "b", "seed", "tol", "vectors", "panels", "nodes", "signed", "expected"):
        val = getattr(args, key)
        if val is not None:
            values[key] = val
    if args.interval:
        values["lo"], values["hi"] = args.interval.split(",")
    return CampaignConfig.from_mapping(values)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"hhverify: configuration error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    result = run_campaign(cfg)
    try:
        write_report(result, args.report, args.format)
    except OSError as exc:
        print(f"hhverify: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.format == "machine":
        print(json.dumps(result.summary()), file=sys.stderr)
    if result.error is not None:
        print(f"hhverify: {result.error}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK if result.expectation_met else EXIT_MISMATCH


if __name__ == "__main__":
    sys.exit(main())
