"""Verification suites, the report they produce and its exit code."""

from __future__ import annotations

import itertools
import logging
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Optional

from . import __version__
from .cache import cached_curve
from .certificate import Certificate, Verdict, check, expect, unknown
from .curve import (
    CurveCtx,
    DivisorSpec,
    Point,
    TwoTorsion,
    curve_residual,
    default_depth,
    make_curve,
    parse_divisor_spec,
    weierstrass_points,
)
from .dwork import (
    SplitResult,
    certify_eigenline,
    certify_ptorsion,
    check_decay,
    dwork_loop,
    exact_context,
    factor_hp,
    factor_twist,
    gap_vector,
    negative_control,
    split_Tp,
    theta_avoid,
)
from .errors import ContextError, DomainError, LemmaViolation, PrecisionError
from .grassmann import (
    WSpace,
    default_count,
    index_via_fV,
    product_space,
    space_A,
    space_divisor,
    theta_member,
)
from .laurent import Series, invert
from .padic import PrimeCtx, Scalar, make_context

logger = logging.getLogger(__name__)

SCHEMA = 1

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_UNKNOWN = 2
EXIT_USAGE = 64

CORE_SUITES = (
    "curve-identities",
    "bases-partitions",
    "lemma42",
    "dwork-bounds",
    "prop43",
    "theta",
    "ptorsion",
)
EXACT_ONLY = ("prop43", "ptorsion", "eigenline")
SUITES = CORE_SUITES + ("eigenline", "all")

DEFAULT_Q = "Q=(1,sqrt2)"
BOUNDS_DEPTH = 300
PRODUCT_SAMPLES = 20


@dataclass(frozen=True)
class SuiteConfig:
    g: int = 2
    p: int = 17
    k: int = 6
    window: Optional[int] = None
    M: Optional[int] = None
    suite: str = "all"
    specs: tuple[str, ...] = ()
    mode: str = "exact-eps"
    out: Optional[str] = None
    jobs: int = 1
    strict: bool = False
    orbit: Optional[tuple[int, ...]] = None
    use_cache: bool = False

    @property
    def N(self) -> int:
        return self.window or default_depth(self.g, default_count(self.g))

    def validate(self) -> PrimeCtx:
        if self.suite not in SUITES:
            raise ContextError(f"unknown suite {self.suite!r}; choose from {', '.join(SUITES)}")
        if self.mode not in ("generic-u", "exact-eps"):
            raise ContextError(f"unknown mode {self.mode!r}")
        if self.mode != "exact-eps" and self.suite in EXACT_ONLY:
            raise ContextError(f"suite {self.suite} requires --mode exact-eps")
        if self.window is not None and self.window < 1:
            raise ContextError(f"window must be >= 1, got {self.window}")
        if self.M is not None and self.M < 1:
            raise ContextError(f"M must be >= 1, got {self.M}")
        if self.jobs < 1:
            raise ContextError(f"jobs must be >= 1, got {self.jobs}")
        return make_context(self.g, self.p, self.k)

    def to_json(self) -> dict:
        return {
            "g": self.g,
            "p": self.p,
            "k": self.k,
            "window": self.N,
            "M": self.M,
            "suite": self.suite,
            "specs": list(self.specs),
            "mode": self.mode,
            "orbit": None if self.orbit is None else list(self.orbit),
        }


class Session:
    """Shared, lazily built inputs for one configuration."""

    def __init__(self, cfg: SuiteConfig):
        self.cfg = cfg
        self.prime = cfg.validate()
        for text in cfg.specs:
            try:
                parse_divisor_spec(self.prime, text)
            except DomainError as e:
                raise ContextError(f"invalid --spec {text!r}: {e}") from e

    @cached_property
    def curve(self) -> CurveCtx:
        if self.cfg.use_cache:
            return cached_curve(self.prime, self.cfg.N)
        return make_curve(self.prime, self.cfg.N)

    @cached_property
    def split(self) -> SplitResult:
        return split_Tp(self.curve)

    @cached_property
    def exact(self) -> CurveCtx:
        return exact_context(self.curve, self.split)[0]

    @property
    def working(self) -> CurveCtx:
        """Curve over the context the loop unit lives in."""
        return self.exact if self.cfg.mode == "exact-eps" else self.curve

    def unit(self) -> Scalar:
        ctx = self.working.prime
        return Scalar.epsilon(ctx) if ctx.has_epsilon else Scalar.of(ctx, 1)

    def specs(self) -> list[DivisorSpec]:
        return [parse_divisor_spec(self.working.prime, s) for s in self.cfg.specs]

    def default_q(self) -> Optional[DivisorSpec]:
        """Q = (1, √2) when 2 is a square mod p."""
        try:
            return parse_divisor_spec(self.working.prime, DEFAULT_Q)
        except DomainError:
            logger.info(f"no point {DEFAULT_Q} over p = {self.prime.p}; skipping L_Q")
            return None

    def two_torsion_specs(self) -> list[TwoTorsion]:
        g = self.prime.g
        out = []
        for s in range(1, g + 1):
            for indices in itertools.combinations(range(2 * g + 1), s):
                out.append(TwoTorsion(indices))
        return out

    def divisor_specs(self) -> list[DivisorSpec]:
        if self.cfg.specs:
            return self.specs()
        specs: list[DivisorSpec] = list(self.two_torsion_specs())
        q = self.default_q()
        if q is not None:
            specs.append(q)
        return specs

    def resolved_points(self) -> list[dict]:
        """Coordinates of every point divisor in play, over the base prime context."""
        texts = [s for s in self.cfg.specs if s.strip().startswith("Q")] if self.cfg.specs else [DEFAULT_Q]
        out = []
        for text in texts:
            try:
                out.append(parse_divisor_spec(self.prime, text).to_json())
            except DomainError:
                continue
        return out


Task = tuple[str, Callable[[], Certificate]]


# -- suites -------------------------------------------------------------------

def _curve_identities(session: Session) -> list[Task]:
    curve = session.curve
    g = curve.g

    def residual() -> Certificate:
        r = curve_residual(curve)
        return check("curve_residual", not any(r.coeffs), window=[r.lo, r.hi], N=curve.N)

    def u_leading() -> Certificate:
        u = curve.u
        return check("u_leading", u.coeff(0) == 1 and u.coeff(-4 * g) == -1,
                     t0=u.coeff(0), t4g=u.coeff(-4 * g))

    def local_parameter() -> Certificate:
        # T = -y/x^g
        T = -(curve.y * invert(curve.x) ** g)
        return check("local_parameter", T.agrees_with(Series.monomial(1, 1)), window=[T.lo, T.hi])

    def weierstrass() -> Certificate:
        pts = weierstrass_points(session.working)
        bad = [pt.label for pt in pts[1:] if pt.y * pt.y != pt.x ** (2 * g + 1) + pt.x]
        return check("weierstrass_points", not bad, count=len(pts), off_curve=bad)

    return [("curve_residual", residual), ("u_leading", u_leading),
            ("local_parameter", local_parameter), ("weierstrass_points", weierstrass)]


def _space_check(W: WSpace, expected: tuple[int, ...]) -> Certificate:
    g = W.ctx.g
    via_fv = index_via_fV(W)
    ok = W.partition == expected and W.index == via_fv == 1 - g
    return check(f"partition:{W.label}", ok, partition=list(W.partition), expected=list(expected),
                 index=W.index, index_via_fV=via_fv, a1_all=W.a1_all)


def _bases_partitions(session: Session) -> list[Task]:
    curve = session.working
    g = curve.g
    tasks: list[Task] = [("partition:A", lambda: _space_check(space_A(curve), tuple(range(g, -1, -1))))]
    for spec in session.divisor_specs():
        if isinstance(spec, TwoTorsion):
            expected = tuple(range(g - len(spec.indices), -1, -1))
        else:
            expected = tuple(range(g - 1, -1, -1))
        tasks.append((f"partition:{spec.label}",
                      lambda spec=spec, expected=expected: _space_check(space_divisor(curve, spec), expected)))

    built: dict[str, WSpace] = {}

    def space(spec: Optional[DivisorSpec]) -> WSpace:
        key = "A" if spec is None else spec.label
        if key not in built:
            built[key] = space_A(curve) if spec is None else space_divisor(curve, spec)
        return built[key]

    pool: list[Optional[DivisorSpec]] = [None, *session.divisor_specs()]
    pairs = list(itertools.combinations_with_replacement(range(len(pool)), 2))
    rng = random.Random(0)
    for i, j in rng.sample(pairs, min(PRODUCT_SAMPLES, len(pairs))):
        a, b = pool[i], pool[j]
        name = f"additivity:{space_label(a)}*{space_label(b)}"

        def product(a=a, b=b, name=name) -> Certificate:
            V = product_space(space(a), space(b))
            additivity = V.certificate.evidence["additivity"]
            return check(name, V.certificate.verdict == Verdict.PASS, **additivity)

        tasks.append((name, product))
    return tasks


def space_label(spec: Optional[DivisorSpec]) -> str:
    return "A" if spec is None else f"L[{spec.label}]"


def _lemma42(session: Session) -> list[Task]:
    curve = session.curve
    ctx = curve.prime
    g, p = ctx.g, ctx.p

    def splitting() -> Certificate:
        return session.split.certificate

    def binomial_value() -> Certificate:
        pp = (p - 1) // (4 * g)
        expected = math.comb(2 * g * pp, pp)
        return check("e0_binomial", session.split.e0 == expected, e0=session.split.e0,
                     expected=expected, unit=expected % p != 0)

    def gap_shape() -> Certificate:
        gap = gap_vector(curve, p)
        return check("gap_vector:T^p", gap[0] == session.split.e0 and not any(gap[1:]), gap=list(gap))

    return [("split_Tp", splitting), ("e0_binomial", binomial_value), ("gap_vector", gap_shape)]


def _dwork_bounds(session: Session) -> list[Task]:
    ctx = session.curve.prime

    def bounds() -> Certificate:
        return check_decay(dwork_loop(ctx, 1, BOUNDS_DEPTH))

    def first_coefficient() -> Certificate:
        h = dwork_loop(ctx, 1, 2).expansion
        return check("h1_is_pi", h.coeff(1) == Scalar.pi(ctx), h1=h.coeff(1))

    def inverse() -> Certificate:
        loop = dwork_loop(ctx, 1, session.cfg.M)
        prod = loop.expansion * loop.inverse().expansion
        ok = prod.agrees_with(Series.one(), hi=loop.M)
        return check("loop_inverse", ok, window=[0, loop.M])

    return [("dwork_bounds", bounds), ("h1_is_pi", first_coefficient), ("loop_inverse", inverse)]


def _prop43(session: Session) -> list[Task]:
    curve, split, M = session.exact, session.split, session.cfg.M
    s = curve.prime.s0
    return [
        ("factor_hp", lambda: factor_hp(curve, split, M=M).certificate),
        ("factor_twist:1", lambda: factor_twist(curve, split, 1, M=M).certificate),
        (f"factor_twist:{s}", lambda: factor_twist(curve, split, s, M=M).certificate),
        ("negative_control", lambda: negative_control(curve, split, M=M)),
    ]


def _theta(session: Session) -> list[Task]:
    curve = session.working
    g = curve.g
    u = session.unit()
    spaces: list[tuple[str, Callable[[], WSpace], Verdict]] = []
    if not session.cfg.specs:
        spaces.append(("A", lambda: space_A(curve), Verdict.IN))
    for spec in session.divisor_specs():
        kappa1 = g - len(spec.indices) if isinstance(spec, TwoTorsion) else g - 1
        spaces.append((spec.label, lambda spec=spec: space_divisor(curve, spec),
                       Verdict.IN if kappa1 >= 1 else Verdict.OUT))
    tasks: list[Task] = []
    for label, build, member in spaces:
        tasks.append((f"theta_member:{label}", lambda build=build, member=member: expect(theta_member(build()), member)))
        tasks.append((f"theta_avoid:{label}", lambda build=build: expect(theta_avoid(curve, build(), u), Verdict.OUT)))
    return tasks


def _ptorsion(session: Session) -> list[Task]:
    return [("ptorsion", lambda: certify_ptorsion(session.exact, session.split, M=session.cfg.M))]


def _eigenline(session: Session) -> list[Task]:
    orbit = session.cfg.orbit
    return [("eigenline", lambda: certify_eigenline(session.exact, session.split, orbit, M=session.cfg.M))]


REGISTRY: dict[str, Callable[[Session], list[Task]]] = {
    "curve-identities": _curve_identities,
    "bases-partitions": _bases_partitions,
    "lemma42": _lemma42,
    "dwork-bounds": _dwork_bounds,
    "prop43": _prop43,
    "theta": _theta,
    "ptorsion": _ptorsion,
    "eigenline": _eigenline,
}


# -- running --------------------------------------------------------------------

def _guarded(name: str, run: Callable[[], Certificate]) -> Certificate:
    try:
        return run()
    except PrecisionError as e:
        logger.info(f"{name}: unknown at {e.stage or name}: {e}")
        return unknown(name, e.stage or name, str(e), e.analysis)
    except (LemmaViolation, DomainError) as e:
        logger.warning(f"{name}: {type(e).__name__}: {e}")
        return Certificate(name, Verdict.FAIL, stage=name,
                           evidence={"error": type(e).__name__, "reason": str(e)})


@dataclass
class Report:
    config: SuiteConfig
    header: dict
    suites: dict[str, list[Certificate]] = field(default_factory=dict)
    points: list[dict] = field(default_factory=list)

    def certificates(self) -> list[Certificate]:
        return [c for certs in self.suites.values() for c in certs]

    def counts(self) -> dict[str, int]:
        out = {v.value: 0 for v in (Verdict.PASS, Verdict.FAIL, Verdict.UNKNOWN)}
        for c in self.certificates():
            key = c.verdict.value if c.verdict in (Verdict.FAIL, Verdict.UNKNOWN) else Verdict.PASS.value
            out[key] += 1
        return out

    def exit_code(self, strict: Optional[bool] = None) -> int:
        strict = self.config.strict if strict is None else strict
        counts = self.counts()
        if counts["fail"]:
            return EXIT_FAIL
        if counts["unknown"]:
            return EXIT_FAIL if strict else EXIT_UNKNOWN
        return EXIT_PASS

    def to_json(self) -> dict[str, Any]:
        return {
            "schema": SCHEMA,
            "version": __version__,
            "config": self.config.to_json(),
            "context": self.header,
            "points": self.points,
            "suites": {name: [c.to_json() for c in certs] for name, certs in self.suites.items()},
            "summary": {**self.counts(), "exit_code": self.exit_code()},
        }


def selected_suites(cfg: SuiteConfig) -> list[str]:
    if cfg.suite != "all":
        return [cfg.suite]
    if cfg.mode == "exact-eps":
        return list(CORE_SUITES)
    skipped = [s for s in CORE_SUITES if s in EXACT_ONLY]
    logger.warning(f"generic-u mode: skipping {', '.join(skipped)}")
    return [s for s in CORE_SUITES if s not in EXACT_ONLY]


def run_suite(cfg: SuiteConfig) -> Report:
    """Run the configured suite and collect its certificates in registry order."""
    session = Session(cfg)
    names = selected_suites(cfg)
    report = Report(config=cfg, header=session.prime.header(), points=session.resolved_points())
    # shared inputs are built once before the fan-out
    _warm(session, names)
    plan: list[tuple[str, str, Callable[[], Certificate]]] = []
    for name in names:
        logger.info(f"suite {name}: planning")
        try:
            tasks = REGISTRY[name](session)
        except (PrecisionError, LemmaViolation, DomainError) as e:
            tasks = [(name, lambda e=e: _reraise(e))]
        plan.extend((name, task_name, run) for task_name, run in tasks)
    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(lambda item: _guarded(item[1], item[2]), plan))
    else:
        results = [_guarded(task_name, run) for _, task_name, run in plan]
    for (name, _, _), cert in zip(plan, results):
        report.suites.setdefault(name, []).append(cert)
        logger.debug(f"{name}: {cert.name} -> {cert.verdict.value}")
    return report


def _reraise(e: Exception) -> Certificate:
    raise e


def _warm(session: Session, names: list[str]) -> None:
    try:
        session.curve
        if any(n in names for n in ("lemma42",) + EXACT_ONLY):
            session.split
        if session.cfg.mode == "exact-eps" and any(n in names for n in EXACT_ONLY + ("theta", "bases-partitions")):
            session.exact
    except (PrecisionError, LemmaViolation, DomainError) as e:
        logger.warning(f"shared inputs incomplete: {e}")


# -- dump -------------------------------------------------------------------------

DUMP_OBJECTS = ("u", "x", "y", "basis:A", "basis:I", "basis:Q", "loop", "gap")


def _dump_basis(W: WSpace, ctx: PrimeCtx) -> dict:
    return {
        "label": W.label,
        "index": W.index,
        "partition": list(W.partition),
        "basis": [w.to_json(ctx) for w in W.basis],
    }


def dump(cfg: SuiteConfig, selector: str) -> dict:
    """The series or basis named by selector, in the laurent JSON format."""
    if selector not in DUMP_OBJECTS:
        raise ContextError(f"unknown object {selector!r}; choose from {', '.join(DUMP_OBJECTS)}")
    session = Session(cfg)
    curve = session.working
    ctx = curve.prime
    body: dict[str, Any] = {"schema": SCHEMA, "object": selector}
    if selector in ("u", "x", "y"):
        body["series"] = getattr(curve, selector).to_json(ctx)
    elif selector == "basis:A":
        body.update(_dump_basis(space_A(curve), ctx))
    elif selector in ("basis:I", "basis:Q"):
        kind = selector[-1]
        specs = [s for s in session.specs() if isinstance(s, TwoTorsion if kind == "I" else Point)]
        if specs:
            spec = specs[0]
        elif kind == "I":
            spec = TwoTorsion((0,))
        else:
            spec = session.default_q()
            if spec is None:
                raise ContextError(f"no default point {DEFAULT_Q} over p = {ctx.p}; pass --spec Q=(x,y)")
        body.update(_dump_basis(space_divisor(curve, spec), ctx))
    elif selector == "loop":
        loop = dwork_loop(ctx, session.unit(), cfg.M)
        body["unit"] = loop.unit.to_json()
        body["head_certified"] = loop.head_certified
        body["series"] = loop.expansion.to_json(ctx)
    else:
        body["gaps"] = [{"n": n, "gap": [str(c) for c in gap_vector(session.curve, n)]}
                        for n in range(1, ctx.p + 1)]
    return body
