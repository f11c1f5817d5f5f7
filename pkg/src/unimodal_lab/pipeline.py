"""End-to-end verification run driven by a :class:`RunConfig`."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from gmpy2 import mpfr

from .branches import Interval, _iterate, _lobatto
from .config import RunConfig
from .errors import LabError
from .mapcore import (
    AdmissibilityReport,
    NumericContext,
    UnimodalMap,
    admissibility_check,
    detect_periodic_attractor,
    reversing_fixed_point,
)
from .returns import nice_candidates, return_components
from .wmp import (
    ClosestApproachTable,
    Cor36Row,
    Measurement,
    Termination,
    TransferRangeSeq,
    WmpReport,
    anchor_points,
    check_pair,
    closest_approach,
    density_experiment,
    enters_window,
    lemma24_violations,
    summarize_wmp,
    transfer_range_sequence,
    verify_cor36,
    verify_lemma37,
    verify_lemma38,
    verify_prop35,
)

log = logging.getLogger(__name__)

CURVE_COMPONENTS = 64
CURVE_NODES = 16


@dataclass(frozen=True)
class GeometryRow:
    n: int
    prop35: Measurement
    lemma37: Measurement
    lemma38: Measurement
    cor36: Cor36Row
    lemma24: int

    def deltas(self):
        """Every Koebe space actually measured for this anchor."""
        return [m.delta for m in (self.prop35, self.lemma37, self.lemma38) if m.delta is not None]


@dataclass(frozen=True)
class ReturnMap:
    x: object
    V: Interval
    components: tuple
    coverage: object
    curve: tuple


@dataclass
class ReportBundle:
    config: RunConfig
    versions: dict
    precision_warning: str = ""
    admissibility: AdmissibilityReport | None = None
    qtable: ClosestApproachTable | None = None
    anchors: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    geometry: list = field(default_factory=list)
    transfer: TransferRangeSeq | None = None
    wmp: WmpReport | None = None
    wmp_windows: list = field(default_factory=list)
    density: list = field(default_factory=list)
    return_map: ReturnMap | None = None
    reasons: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def ok(self) -> bool:
        return all(self.verdicts.values())


def versions() -> dict:
    import gmpy2
    import matplotlib

    from . import __version__

    return {
        "unimodal_lab": __version__,
        "gmpy2": gmpy2.version(),
        "mpfr": gmpy2.mpfr_version(),
        "numpy": np.__version__,
        "matplotlib": matplotlib.__version__,
    }


def make_map(cfg: RunConfig) -> UnimodalMap:
    ctx = NumericContext(cfg.precision_bits, horizon_default=cfg.orbit_horizon)
    return UnimodalMap(cfg.alpha, cfg.a, ctx)


def precision_warning(m: UnimodalMap, steps: int) -> str:
    need = steps * math.log2(float(m.sup_deriv))
    have = m.ctx.precision_bits - 64
    if need > have:
        return (f"{steps} forward steps can lose {need:.0f} bits but only {have} are spare; "
                f"orbit entries past step {m.trusted_horizon} are not trusted")
    return ""


def _stream(seed, *key):
    return np.random.default_rng(np.random.SeedSequence([seed, *key]))


def _seed_of(seed, *key) -> int:
    return int(np.random.SeedSequence([seed, *key]).generate_state(1)[0])


def _geometry(args) -> GeometryRow:
    m, anchor, cfg = args
    p35 = verify_prop35(m, anchor, cfg.rho, cfg.geometry_samples, _seed_of(cfg.seed, 1, anchor.n),
                        delta_min=cfg.delta_min)
    l37 = verify_lemma37(m, anchor, cfg.delta_min)
    l38, _ = verify_lemma38(m, anchor, cfg.rho, cfg.delta_min)
    cor = verify_cor36(m, anchor, cfg.rho, cfg.grid)
    return GeometryRow(anchor.n, p35, l37, l38, cor, lemma24_violations(m, anchor))


def _wmp_window(args):
    m, index, y, samples, horizon, grid = args
    return [check_pair(m, s, y, horizon, grid, index) for s in samples]


def _density(args):
    m, V, ref, horizon, samples, seed, index = args
    rows = density_experiment(m, enters_window(m, ref, horizon), [V], samples,
                              _seed_of(seed, 3, index))
    return rows[0]


def _pmap(fn, tasks, workers):
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


def return_map_table(m: UnimodalMap, x, max_time: int, min_width) -> ReturnMap:
    """Return components of ``V_x`` plus graph samples of ``R_x`` on the widest ones."""
    rs = return_components(m, x, max_time, min_width)
    widest = sorted(rs.components, key=lambda comp: -comp.interval.length)[:CURVE_COMPONENTS]
    curve = []
    with m.ctx.precise():
        for comp in sorted(widest, key=lambda comp: comp.interval.lo):
            lo, hi = comp.interval.lo, comp.interval.hi
            for k in range(CURVE_NODES + 1):
                y = _lobatto(lo, hi, CURVE_NODES, k)
                curve.append((y, _iterate(m, y, comp.time), comp.time))
    return ReturnMap(x, rs.V, tuple(rs.components), rs.coverage, tuple(curve))


def run_pipeline(cfg: RunConfig) -> ReportBundle:
    start = time.perf_counter()
    m = make_map(cfg)
    bundle = ReportBundle(cfg, versions())
    bundle.precision_warning = precision_warning(m, cfg.orbit_horizon)
    if bundle.precision_warning:
        log.warning(bundle.precision_warning)

    bundle.admissibility = admissibility_check(m, 1000)
    bundle.reasons.extend(bundle.admissibility.reasons)
    detect_periodic_attractor(m)

    log.info("closest approach over %d steps", cfg.orbit_horizon)
    table = closest_approach(m, cfg.orbit_horizon)
    bundle.qtable = table
    if table.termination is not Termination.HORIZON_REACHED:
        bundle.reasons.append(table.termination.value)

    if table.termination is Termination.HORIZON_REACHED:
        log.info("anchor search over %d annuli", len(table.rows) - 1)
        seeds = nice_candidates(m, cfg.base_depth)
        anchors, skipped = anchor_points(m, table, seeds, cfg.anchor_depth, cfg.node_budget,
                                         cfg.trusted_only, cfg.niceness_horizon)
        bundle.anchors, bundle.skipped = anchors, skipped
        bundle.reasons.extend(f"n={s.n}: {s.reason}" for s in skipped)

    anchors = bundle.anchors
    bundle.geometry = _pmap(_geometry, [(m, a, cfg) for a in anchors], cfg.workers)
    bundle.transfer = transfer_range_sequence(m, anchors, cfg.rho, cfg.delta_min, table)
    bundle.reasons.extend(bundle.transfer.reasons)

    log.info("weak Markov check on %d windows", len(anchors))
    samples = [mpfr(float(u)) for u in _stream(cfg.seed, 2).random(cfg.wmp_samples)]
    tasks = [(m, i, a.psi, samples, cfg.entry_horizon, cfg.grid) for i, a in enumerate(anchors)]
    per_window = _pmap(_wmp_window, tasks, cfg.workers)
    bundle.wmp = summarize_wmp([p for rows in per_window for p in rows])
    bundle.wmp_windows = [(a.n, a.psi, summarize_wmp(rows)) for a, rows in zip(anchors, per_window)]

    log.info("density ratios")
    ref = Interval(m.ctx.mpf(cfg.density_ref_lo), m.ctx.mpf(cfg.density_ref_hi))
    windows = sorted((a.U for a in anchors), key=lambda V: -V.length)
    tasks = [(m, V, ref, cfg.density_horizon, cfg.density_samples, cfg.seed, i)
             for i, V in enumerate(windows)]
    rows = _pmap(_density, tasks, cfg.workers)
    bundle.density = [type(r)(i, r.window, r.ratio, r.stderr, r.samples) for i, r in enumerate(rows)]

    try:
        p0 = reversing_fixed_point(m)
        bundle.return_map = return_map_table(m, p0, cfg.max_time, cfg.min_width)
    except LabError as err:
        bundle.reasons.append(f"return map: {type(err).__name__}: {err}")

    bundle.verdicts = verdicts(bundle)
    bundle.wall_time = time.perf_counter() - start
    return bundle


def verdicts(bundle: ReportBundle) -> dict:
    cfg = bundle.config
    floor = mpfr(cfg.delta_min)
    deltas = [d for row in bundle.geometry for d in row.deltas()]
    out = {
        "admissible": bool(bundle.admissibility and bundle.admissibility.passed),
        "delta_floor": all(d >= floor for d in deltas),
        "lemma24_disjoint": all(row.lemma24 == 0 for row in bundle.geometry),
        "koebe_consistent": bundle.wmp is None or bundle.wmp.koebe_violations == 0,
        "transfer_shrinking": bundle.transfer is None
        or (bundle.transfer.shrinking and bundle.transfer.approaching),
    }
    if bundle.wmp is not None and bundle.wmp.pairs:
        out["wmp_success"] = bundle.wmp.success_fraction >= float(cfg.wmp_success_min)
    if bundle.return_map is not None:
        out["return_coverage"] = bundle.return_map.coverage >= mpfr(cfg.coverage_min)
    return out

