"""Closest approach of the critical orbit, anchor points and the geometry checks.

The anchors ``x(n)`` sit in the annuli between consecutive closest-approach
windows; every check below reports a measured number together with a
verdict, and a failed precondition is a reported outcome, not an exception.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from gmpy2 import mpfr

from .branches import (
    Interval,
    _at_least,
    branch_of_word,
    estimate_distortion,
    koebe_bound,
    scaled_factor,
)
from .errors import (
    DegenerateInterval,
    DomainError,
    LabError,
    NoPeriodicPoint,
    RenormalizationSuspected,
)
from .mapcore import LEFT, RIGHT, UnimodalMap, precise, reversing_fixed_point
from .returns import (
    Candidate,
    CentralDomain,
    _exact_orbit,
    _inside,
    _window,
    central_domain,
    central_image_orbit,
    disjointness_violations,
    entry_component,
    largest_nice_in,
)


class Termination(str, Enum):
    HORIZON_REACHED = "HorizonReached"
    NON_RECURRENT = "NonRecurrent"
    CRITICAL_PERIODIC = "CriticalPeriodic"


class Case(str, Enum):
    LOW = "LOW"
    HIGH = "HIGH"


@dataclass(frozen=True)
class ApproachRow:
    n: int
    q: int
    c_q: object
    dist: object
    V: Interval


@dataclass(frozen=True)
class ClosestApproachTable:
    rows: tuple
    termination: Termination
    max_steps: int
    trusted_horizon: int

    @property
    def q(self):
        return tuple(row.q for row in self.rows)


@precise
def closest_approach(m: UnimodalMap, max_steps: int) -> ClosestApproachTable:
    """Greedy scan for ``q(1) = 1`` and ``q(n+1) = min{t : c_t in V_{c_q(n)}}``."""
    if max_steps < 1:
        raise DomainError("max_steps must be at least 1")
    y = m.a
    best = abs(y - m.c)
    if best <= m.tol:
        return ClosestApproachTable((), Termination.CRITICAL_PERIODIC, max_steps, m.trusted_horizon)
    rows = [ApproachRow(1, 1, y, best, _window(m, y))]
    termination = Termination.HORIZON_REACHED
    for t in range(2, max_steps + 1):
        y = m._f(y)
        d = abs(y - m.c)
        if d <= m.tol:
            termination = Termination.CRITICAL_PERIODIC
            break
        if d < best - m.tol:
            best = d
            rows.append(ApproachRow(len(rows) + 1, t, y, d, _window(m, y)))
    if len(rows) == 1 and termination is Termination.HORIZON_REACHED:
        termination = Termination.NON_RECURRENT
    return ClosestApproachTable(tuple(rows), termination, max_steps, m.trusted_horizon)


@dataclass(frozen=True)
class AnchorPoint:
    n: int
    q: int
    x: object
    depth: int
    annulus: Interval
    case: Case
    central: CentralDomain
    V: Interval
    search_exhausted: bool = False

    @property
    def U(self):
        return self.central.U

    @property
    def psi(self):
        return self.central.psi

    @property
    def ratio(self):
        """``|V_x| / |U_x|``."""
        with _at_least(self.x):
            return self.V.length / self.U.length


@dataclass(frozen=True)
class Skipped:
    n: int
    reason: str


def _classify(m, cd: CentralDomain) -> Case:
    if cd.U.length < m.tol:
        raise DegenerateInterval("central domain narrower than eq_tolerance")
    lo, hi = sorted((cd.boundary_image, cd.critical_image))
    return Case.HIGH if lo + m.tol < m.c < hi - m.tol else Case.LOW


@precise
def classify_case(m: UnimodalMap, anchor_or_x) -> Case:
    """HIGH iff the image of the central branch contains ``c``."""
    if isinstance(anchor_or_x, AnchorPoint):
        return _classify(m, anchor_or_x.central)
    return _classify(m, central_domain(m, anchor_or_x))


@precise
def anchor_points(
    m: UnimodalMap,
    table: ClosestApproachTable,
    candidates=None,
    depth: int = 32,
    node_budget: int = 20_000,
    trusted_only: bool = True,
    horizon: int | None = None,
):
    """Largest certified-nice candidate in each annulus ``(V_{c_q(n-1)} - V_{c_q(n)}) ∩ [0, c)``.

    Returns ``(anchors, skipped)``.  ``candidates`` (from ``nice_candidates``)
    seed the local search; the search then deepens the preimage tree inside
    the annulus up to ``depth``.
    """
    anchors, skipped = [], []
    seeds = sorted(candidates or [], key=lambda cand: cand.point)
    rows = table.rows
    for prev, row in zip(rows, rows[1:]):
        if trusted_only and row.q > table.trusted_horizon:
            skipped.append(Skipped(row.n, "PrecisionExhausted"))
            continue
        lo, hi = prev.V.lo, row.V.lo
        start = None
        for cand in seeds:
            if lo < cand.point < hi:
                start = cand
        result = largest_nice_in(m, lo, hi, depth, node_budget, start)
        if result.best is None:
            skipped.append(Skipped(row.n, "CandidateExhausted"))
            continue
        x = result.best.point
        try:
            cd = central_domain(m, x, horizon or table.max_steps)
            case = _classify(m, cd)
        except LabError as err:
            skipped.append(Skipped(row.n, f"{type(err).__name__}: {err}"))
            continue
        anchors.append(
            AnchorPoint(
                n=row.n,
                q=row.q,
                x=x,
                depth=result.best.depth,
                annulus=Interval(lo, hi, True, False),
                case=case,
                central=cd,
                V=_window(m, x),
                search_exhausted=result.exhausted,
            )
        )
    return anchors, skipped


# -- geometry checks -----------------------------------------------------


@dataclass(frozen=True)
class Measurement:
    """One measured Koebe space (or constant) with its verdict."""

    delta: object = None
    passed: bool | None = None
    status: str = "ok"
    samples: int = 0
    extra: dict = field(default_factory=dict)


def _not_met(reason):
    return Measurement(None, None, f"PreconditionNotMet: {reason}")


def _random_component(m, target: Interval, rng, max_depth):
    """Random first-entry component of ``target`` built by a backward walk.

    Returns ``(interval, word)`` or ``None`` if the walk leaves the range of
    ``f`` or re-enters the target before it ends.
    """
    depth = int(rng.integers(1, max_depth + 1))
    lo, hi = target.lo, target.hi
    word = ""
    for _ in range(depth):
        if hi > m.a:
            return None
        side = LEFT if rng.random() < 0.5 else RIGHT
        a, b = m._inv(lo, side), m._inv(hi, side)
        lo, hi = (a, b) if a < b else (b, a)
        word = side + word
        if hi > target.lo and lo < target.hi:
            return None
    return Interval(lo, hi), word


@precise
def verify_prop35(
    m: UnimodalMap,
    anchor: AnchorPoint,
    rho=0.1,
    samples: int = 50,
    seed: int = 0,
    max_depth: int = 24,
    delta_min=1e-3,
) -> Measurement:
    """Koebe space of monotone extensions of transfer branches.

    HIGH anchors: components of the transfer domain of ``U_x`` (sampled by
    backward walks) and ``delta`` of their extension image around ``U_x``.
    LOW anchors with ``|V| <= (1 + rho)|U|``: the extension of ``f^n`` over
    ``S_x`` and ``delta`` around ``[R_x(U_x), c]``.
    """
    rho, delta_min = mpfr(rho), mpfr(delta_min)
    cd = anchor.central
    if anchor.case is Case.HIGH:
        rng = np.random.default_rng(seed)
        deltas = []
        attempts = 0
        while len(deltas) < samples and attempts < 50 * samples:
            attempts += 1
            got = _random_component(m, cd.U, rng, max_depth)
            if got is None:
                continue
            _, word = got
            ext = branch_of_word(m, word)
            try:
                deltas.append(scaled_factor(ext.image, cd.U, m.tol))
            except LabError:
                deltas.append(mpfr(0))
        if not deltas:
            return Measurement(None, None, "NoComponentSampled")
        d = min(deltas)
        return Measurement(d, bool(d >= delta_min), "statement1", len(deltas))
    if anchor.V.length > (1 + rho) * anchor.U.length:
        return _not_met(f"LOW anchor with |V|/|U| = {float(anchor.ratio):.4g} > 1 + rho")
    n = cd.time - 1
    word = cd.word[1:]
    ext = branch_of_word(m, word)
    core = Interval.hull(cd.boundary_image, cd.critical_image, m.c)
    try:
        d = scaled_factor(ext.image, core, m.tol)
    except LabError:
        d = mpfr(0)
    return Measurement(d, bool(d >= delta_min), "statement2", 1, {"n": n})


@precise
def verify_lemma37(m: UnimodalMap, anchor: AnchorPoint, delta_min=1e-3) -> Measurement:
    """``delta`` of ``V_x`` around ``U_x`` when the central branch misses ``c``
    and ``R_x(c)`` lands in ``V_x - U_x``."""
    cd = anchor.central
    delta_min = mpfr(delta_min)
    if anchor.case is not Case.LOW:
        return _not_met("c lies in R_x(U_x)")
    if anchor.U.contains_point(cd.critical_image, m.tol) or not _inside(
        anchor.V, cd.critical_image, m.tol
    ):
        return _not_met("R_x(c) is not in V_x - U_x")
    d = scaled_factor(anchor.V, anchor.U, m.tol)
    return Measurement(d, bool(d >= delta_min), "ok", 1)


@dataclass(frozen=True)
class PeriodicPoint:
    p: object
    V: Interval
    U: Interval
    central: CentralDomain
    delta: object
    nice: bool


def _periodic_on_half(m, cd: CentralDomain, side_word):
    """Root of ``y - G(y)`` where ``G`` inverts ``f^m`` on one half of ``U``."""
    lo, hi = sorted((cd.boundary_image, cd.critical_image))
    half_lo, half_hi = (cd.psi, m.c) if side_word[0] == LEFT else (m.c, 1 - cd.psi)
    a, b = max(lo, half_lo), min(hi, half_hi)
    if not a < b:
        return None

    def h(y):
        return y - m._pullback(y, side_word)

    ha, hb = h(a), h(b)
    if ha == 0:
        return a
    if hb == 0:
        return b
    if (ha > 0) == (hb > 0):
        return None
    stop = mpfr(2) ** (-(m.ctx.precision_bits - 32))
    while b - a > stop:
        mid = (a + b) / 2
        hm = h(mid)
        if hm == 0:
            return mid
        if (hm > 0) == (ha > 0):
            a, ha = mid, hm
        else:
            b = mid
    return (a + b) / 2


@precise
def central_periodic_point(m: UnimodalMap, anchor: AnchorPoint, horizon: int = 10_000) -> PeriodicPoint:
    """Fixed point ``p`` of the central branch with ``V_p`` inside ``R_x(V_p)``."""
    cd = anchor.central
    tail = cd.word[1:]
    found = []
    for first in (LEFT, RIGHT):
        p = _periodic_on_half(m, cd, first + tail)
        if p is not None:
            found.append((p, first + tail))
    if not found:
        raise NoPeriodicPoint("f^m - id has no sign change on either half of U_x")
    for p, word in found:
        if abs(p - m.c) <= m.tol:
            continue
        far = 1 - p
        cm = cd.critical_image
        covers = cm >= far - m.tol if p < m.c else cm <= far + m.tol
        if not covers:
            continue
        Vp = _window(m, p)
        orbit = _exact_orbit(m, p, word)
        nice = not any(_inside(Vp, z, m.tol) for z in orbit[1:])
        cdp = central_domain(m, p, horizon)
        delta = scaled_factor(Vp, cdp.U, m.tol)
        return PeriodicPoint(p, Vp, cdp.U, cdp, delta, nice)
    raise RenormalizationSuspected("no central periodic point has V_p inside R_x(V_p)")


@precise
def verify_lemma38(m: UnimodalMap, anchor: AnchorPoint, rho=0.1, delta_min=1e-3):
    rho, delta_min = mpfr(rho), mpfr(delta_min)
    if anchor.case is not Case.HIGH:
        return _not_met("central branch image misses c"), None
    if anchor.V.length > (1 + rho) * anchor.U.length:
        return _not_met(f"|V|/|U| = {float(anchor.ratio):.4g} > 1 + rho"), None
    try:
        pp = central_periodic_point(m, anchor)
    except LabError as err:
        return Measurement(None, False, type(err).__name__), None
    return Measurement(pp.delta, bool(pp.delta >= delta_min), "ok", 1, {"nice": pp.nice}), pp


@dataclass(frozen=True)
class Cor36Row:
    K_branch: object
    A_sup: object
    qualifies: bool
    grid: int


@precise
def verify_cor36(m: UnimodalMap, anchor: AnchorPoint, rho=0.1, grid: int = 8) -> Cor36Row:
    """Distortion of ``f^n`` on ``f(U_x)`` and ``sup |Df^(n+1)|`` on ``U_x``.

    Measured for every anchor; ``qualifies`` records ``|V| <= (1 + rho)|U|``.
    """
    rho = mpfr(rho)
    cd = anchor.central
    n = cd.time - 1
    M = Interval(m._f(cd.psi), m.a, True, False)
    if n == 0:
        K = mpfr(1)
        g = grid
    else:
        est = estimate_distortion(m, M, n, grid)
        K, g = est.K, est.grid
    A = mpfr(0)
    pts = 4 * grid
    for k in range(pts + 1):
        y = cd.psi + (m.c - cd.psi) * k / pts
        d, z = mpfr(1), y
        for _ in range(n + 1):
            d *= m._df(z)
            z = m._f(z)
        A = max(A, abs(d))
    return Cor36Row(K, A, bool(anchor.V.length <= (1 + rho) * anchor.U.length), g)


@precise
def lemma24_violations(m: UnimodalMap, anchor: AnchorPoint) -> int:
    """Overlaps among ``M, f(M), ..., f^n(M)`` with ``M = f(U_x)``."""
    return disjointness_violations(central_image_orbit(m, anchor.central), m.tol)


# -- transfer ranges -----------------------------------------------------


@dataclass(frozen=True)
class TransferRange:
    n: int
    y: object
    U: Interval
    V: Interval
    delta: object
    source: str


@dataclass(frozen=True)
class TransferRangeSeq:
    ranges: tuple
    shrinking: bool
    approaching: bool
    reasons: tuple = ()


def _strictly_decreasing(vals):
    return all(b < a for a, b in zip(vals, vals[1:]))


@precise
def transfer_range_sequence(
    m: UnimodalMap, anchors, rho=0.1, delta_min=1e-3, table: ClosestApproachTable | None = None
) -> TransferRangeSeq:
    """Pairs ``(U_{y(n)}, V_{y(n)})``: ``y(n) = x(n)`` unless a HIGH anchor has
    ``|V| < (1 + rho)|U|``, in which case ``y(n)`` is the central periodic point."""
    rho, delta_min = mpfr(rho), mpfr(delta_min)
    reasons = []
    if table is not None and table.termination is Termination.NON_RECURRENT:
        return TransferRangeSeq((), True, True, ("NonRecurrent",))
    out = []
    for anc in anchors:
        if anc.case is Case.HIGH and anc.V.length < (1 + rho) * anc.U.length:
            try:
                pp = central_periodic_point(m, anc)
            except LabError as err:
                reasons.append(f"n={anc.n}: {type(err).__name__}")
                continue
            tr = TransferRange(anc.n, pp.p, pp.U, pp.V, pp.delta, "periodic")
        else:
            tr = TransferRange(anc.n, anc.x, anc.U, anc.V, scaled_factor(anc.V, anc.U, m.tol), "anchor")
        if not tr.delta >= delta_min:
            reasons.append(f"n={anc.n}: delta below floor")
            continue
        out.append(tr)
    shrinking = _strictly_decreasing([tr.V.length for tr in out])
    approaching = _strictly_decreasing([abs(tr.y - m.c) for tr in out])
    return TransferRangeSeq(tuple(out), shrinking, approaching, tuple(reasons))


# -- weak Markov property --------------------------------------------------


@dataclass(frozen=True)
class WmpPair:
    window: int
    sample: object
    time: int | None
    delta: object
    K: object
    ok: bool
    reason: str = ""


@dataclass(frozen=True)
class WmpReport:
    pairs: tuple
    success_fraction: float
    min_delta: object
    max_K: object
    koebe_violations: int

    @property
    def checked(self):
        return [p for p in self.pairs if p.K is not None]


@precise
def check_pair(m: UnimodalMap, s, y, horizon: int, grid: int = 8, index: int = 0) -> WmpPair:
    """Transfer ``s`` into ``V_y`` and compare measured distortion with the Koebe bound."""
    V = _window(m, mpfr(y))
    s = mpfr(s)
    try:
        got = entry_component(m, s, V, horizon)
    except LabError as err:
        return WmpPair(index, s, None, None, None, False, f"PrecisionLoss ({type(err).__name__})")
    if got is None:
        return WmpPair(index, s, None, None, None, False, "NoEntry")
    I, t, word = got
    if not I.contains_point(s, m.tol) and not (I.lo - m.tol <= s <= I.hi + m.tol):
        return WmpPair(index, s, t, None, None, False, "PrecisionLoss")
    if t == 0:
        ext_image = Interval(mpfr(0), mpfr(1), False, False)
    else:
        ext_image = branch_of_word(m, word).image
    try:
        delta = scaled_factor(ext_image, V, m.tol)
    except LabError:
        return WmpPair(index, s, t, mpfr(0), None, False, "NotNested")
    if I.length < m.tol:
        return WmpPair(index, s, t, delta, None, False, "DegenerateInterval")
    K = estimate_distortion(m, I, t, grid).K
    if not delta > 0:
        return WmpPair(index, s, t, delta, K, False, "NoKoebeSpace")
    ok = K <= koebe_bound(delta) * (1 + mpfr("1e-6"))
    return WmpPair(index, s, t, delta, K, bool(ok), "" if ok else "KoebeViolation")


@precise
def verify_weak_markov(m: UnimodalMap, sample_points, D_points, horizon: int, grid: int = 8) -> WmpReport:
    pairs = []
    for i, y in enumerate(D_points):
        for s in sample_points:
            pairs.append(check_pair(m, s, y, horizon, grid, i))
    return summarize_wmp(pairs)


def summarize_wmp(pairs) -> WmpReport:
    checked = [p for p in pairs if p.K is not None]
    ok = sum(1 for p in pairs if p.ok)
    violations = sum(1 for p in pairs if p.reason == "KoebeViolation")
    return WmpReport(
        pairs=tuple(pairs),
        success_fraction=ok / len(pairs) if pairs else 0.0,
        min_delta=min((p.delta for p in checked), default=None),
        max_K=max((p.K for p in checked), default=None),
        koebe_violations=violations,
    )


# -- density ratios --------------------------------------------------------


def full_set(y) -> bool:
    return True


def empty_set(y) -> bool:
    return False


def enters_window(m: UnimodalMap, ref: Interval, horizon: int):
    """Finite-horizon surrogate of an invariant set: orbits meeting ``ref`` within ``horizon`` steps."""

    def member(y):
        with m.ctx.precise():
            for _ in range(horizon + 1):
                if ref.lo < y < ref.hi:
                    return True
                y = m._f(y)
            return False

    return member


@dataclass(frozen=True)
class DensityRow:
    index: int
    window: Interval
    ratio: float
    stderr: float
    samples: int


@precise
def density_experiment(m: UnimodalMap, membership, windows, samples_per_window: int, seed: int = 0):
    """Monte Carlo estimate of ``|X ∩ V| / |V|`` for each window, one seeded stream per window."""
    streams = np.random.SeedSequence(seed).spawn(len(windows))
    rows = []
    for i, (V, ss) in enumerate(zip(windows, streams)):
        u = np.random.default_rng(ss).random(samples_per_window)
        hits = 0
        for val in u:
            y = V.lo + V.length * mpfr(float(val))
            if membership(y):
                hits += 1
        p = hits / samples_per_window
        se = (p * (1 - p) / samples_per_window) ** 0.5
        rows.append(DensityRow(i, V, p, se, samples_per_window))
    return rows


def median(values):
    return statistics.median(values)
