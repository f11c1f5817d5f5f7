"""``lab``: command-line driver.

Exit codes: 0 all verdicts pass, 1 some verification failed, 2 configuration
or runtime error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .config import KEYS, RunConfig, dumps, load
from .errors import ConfigError, LabError
from .mapcore import orbit
from .pipeline import make_map, precision_warning, run_pipeline

log = logging.getLogger("unimodal_lab")

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2
ENV_PRECISION = "LAB_PRECISION_BITS"
ALIASES = {"family.a": ["--a"], "family.alpha": ["--alpha"], "output.dir": ["--out"]}


def _config_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("config overrides")
    for key in KEYS:
        g.add_argument(f"--{key}", *ALIASES.get(key, []), dest=f"cfg:{key}", metavar="VALUE",
                       default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lab", allow_abbrev=False,
                                     description="First-return and transfer maps of S-unimodal maps.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", allow_abbrev=False, help="full pipeline: reports and figures")
    p.add_argument("config")
    _config_flags(p)

    p = sub.add_parser("orbit", allow_abbrev=False, help="print an orbit as CSV")
    p.add_argument("config", nargs="?")
    p.add_argument("--x", required=True, help="starting point")
    p.add_argument("--n", type=int, required=True, help="number of iterates")
    _config_flags(p)

    p = sub.add_parser("qtable", allow_abbrev=False, help="closest-approach table as CSV")
    p.add_argument("config", nargs="?")
    _config_flags(p)

    p = sub.add_parser("verify-wmp", allow_abbrev=False, help="weak Markov check only")
    p.add_argument("config", nargs="?")
    _config_flags(p)

    p = sub.add_parser("plot", allow_abbrev=False, help="render one SVG figure")
    p.add_argument("config", nargs="?")
    p.add_argument("--kind", required=True,
                   choices=("return_map", "nested_intervals", "delta_trend"))
    _config_flags(p)
    return parser


def resolve_config(args) -> RunConfig:
    """Config file, then ``LAB_PRECISION_BITS``, then command-line flags."""
    cfg = load(args.config) if getattr(args, "config", None) else RunConfig()
    env = os.environ.get(ENV_PRECISION)
    if env:
        cfg = cfg.with_overrides({"numeric.precision_bits": env})
    flags = {key: getattr(args, f"cfg:{key}") for key in KEYS}
    return cfg.with_overrides({k: v for k, v in flags.items() if v is not None})


def _csv_out(header, rows, fmt):
    w = csv.writer(sys.stdout, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else fmt.dec(v) for v in row])


def _formatter(cfg):
    from .report import Formatter

    return Formatter(min(cfg.digits, int(cfg.precision_bits * 0.30103)), cfg.precision_bits)


def cmd_orbit(args, cfg) -> int:
    m = make_map(cfg)
    warn = precision_warning(m, args.n)
    if warn:
        log.warning(warn)
    pts = orbit(m, m.ctx.mpf(args.x), args.n)
    with m.ctx.precise():
        rows = [(i, x, m._side(x)) for i, x in enumerate(pts)]
    _csv_out(("i", "x", "side"), rows, _formatter(cfg))
    return EXIT_OK


def cmd_qtable(args, cfg) -> int:
    from .report import QTABLE_HEADER
    from .wmp import closest_approach

    m = make_map(cfg)
    warn = precision_warning(m, cfg.orbit_horizon)
    if warn:
        log.warning(warn)
    t = closest_approach(m, cfg.orbit_horizon)
    _csv_out(QTABLE_HEADER, [(r.n, r.q, r.c_q, r.dist, r.V.lo, r.V.hi) for r in t.rows],
             _formatter(cfg))
    print(f"# termination={t.termination.value} trusted_horizon={t.trusted_horizon}",
          file=sys.stderr)
    return EXIT_OK


def cmd_verify_wmp(args, cfg) -> int:
    from .pipeline import _stream
    from .returns import nice_candidates
    from .wmp import anchor_points, closest_approach, verify_weak_markov

    m = make_map(cfg)
    t = closest_approach(m, cfg.orbit_horizon)
    anchors, _ = anchor_points(m, t, nice_candidates(m, cfg.base_depth), cfg.anchor_depth,
                               cfg.node_budget, cfg.trusted_only, cfg.niceness_horizon)
    samples = [m.ctx.mpf(float(u)) for u in _stream(cfg.seed, 2).random(cfg.wmp_samples)]
    rep = verify_weak_markov(m, samples, [a.psi for a in anchors], cfg.entry_horizon, cfg.grid)
    fmt = _formatter(cfg)
    print(f"windows={len(anchors)} pairs={len(rep.pairs)}")
    print(f"success_fraction={rep.success_fraction:.6f}")
    print(f"min_delta={fmt.dec(rep.min_delta)}")
    print(f"max_K={fmt.dec(rep.max_K)}")
    print(f"koebe_violations={rep.koebe_violations}")
    ok = rep.koebe_violations == 0 and rep.success_fraction >= float(cfg.wmp_success_min)
    return EXIT_OK if ok and rep.pairs else EXIT_FAIL


def cmd_run(args, cfg) -> int:
    from .plotting import plot_all
    from .report import emit_report

    bundle = run_pipeline(cfg)
    out = Path(cfg.output_dir)
    paths = emit_report(bundle, out)
    figures = plot_all(bundle, out)
    (out / "config.txt").write_text(dumps(cfg), encoding="utf-8")
    # wall time lives outside the report so that reports stay byte-identical
    (out / "timing.log").write_text(f"wall_time_s={bundle.wall_time:.3f}\n", encoding="utf-8")
    for p in paths:
        print(p)
    for kind, res in figures.items():
        print(res if isinstance(res, Path) else f"{kind}: {res}")
    for name, ok in bundle.verdicts.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    return EXIT_OK if bundle.ok else EXIT_FAIL


def cmd_plot(args, cfg) -> int:
    from .plotting import plot_svg

    bundle = run_pipeline(cfg)
    print(plot_svg(bundle, args.kind, Path(cfg.output_dir) / f"{args.kind}.svg"))
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "orbit": cmd_orbit,
    "qtable": cmd_qtable,
    "verify-wmp": cmd_verify_wmp,
    "plot": cmd_plot,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](args, cfg)
    except ConfigError as err:
        print(f"lab: configuration error: {err}", file=sys.stderr)
    except LabError as err:
        print(f"lab: {type(err).__name__}: {err}", file=sys.stderr)
    except OSError as err:
        print(f"lab: IoError: {err}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
