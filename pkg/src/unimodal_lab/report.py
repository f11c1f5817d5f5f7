"""Machine-readable output: one JSON document and one CSV file per table.

Every real is written as a decimal string.  In JSON it travels with the
number of significant digits it was printed to, ``{"dec": ..., "digits": ...}``.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import gmpy2
from gmpy2 import mpfr

from .errors import IoError
from .mapcore import sci

FLOAT_DIGITS = 17
SCHEMA = "unimodal-lab-report/1"
# keys that change how a run executes but not what it computes
EXECUTION_KEYS = ("run.workers", "output.dir")

QTABLE_HEADER = ("n", "q", "c_q", "dist_to_c", "V_lo", "V_hi")
ANCHOR_HEADER = ("n", "q", "x", "depth", "search_exhausted", "case", "psi", "central_time",
                 "V_len", "U_len", "ratio")
GEOMETRY_HEADER = ("n", "prop35_delta", "prop35_status", "lemma37_delta", "lemma37_status",
                   "lemma38_delta", "lemma38_status", "K_branch", "A_sup", "cor36_qualifies",
                   "lemma24_violations")
TRANSFER_HEADER = ("n", "source", "y", "dist_to_c", "U_lo", "U_hi", "V_lo", "V_hi", "V_len",
                   "delta")
WMP_HEADER = ("window", "sample", "time", "delta", "K", "ok", "reason")
WMP_WINDOW_HEADER = ("window", "n", "y", "pairs", "success_fraction", "min_delta", "max_K",
                     "koebe_violations")
DENSITY_HEADER = ("index", "V_lo", "V_hi", "V_len", "ratio", "stderr", "samples")
RETURN_HEADER = ("lo", "hi", "time")
CURVE_HEADER = ("y", "R_y", "time")


class Formatter:
    """Decimal rendering at a fixed number of significant digits."""

    def __init__(self, digits: int, precision_bits: int):
        self.digits = digits
        self.bits = precision_bits

    def dec(self, x) -> str:
        if x is None:
            return ""
        if isinstance(x, bool):
            return "true" if x else "false"
        if isinstance(x, int):
            return str(x)
        if isinstance(x, float):
            return format(x, f".{FLOAT_DIGITS - 1}e")
        with gmpy2.context(precision=self.bits):
            return sci(mpfr(x), self.digits)

    def num(self, x):
        """JSON form of a number; ints stay ints, reals carry their digit count."""
        if x is None or isinstance(x, (bool, int)):
            return x
        digits = FLOAT_DIGITS if isinstance(x, float) else self.digits
        return {"dec": self.dec(x), "digits": digits}


def _formatter(bundle) -> Formatter:
    cfg = bundle.config
    bits = cfg.precision_bits
    return Formatter(min(cfg.digits, int(bits * 0.30103)), bits)


# -- tables ----------------------------------------------------------------


def qtable_rows(bundle):
    t = bundle.qtable
    if t is None:
        return []
    return [(r.n, r.q, r.c_q, r.dist, r.V.lo, r.V.hi) for r in t.rows]


def anchor_rows(bundle):
    return [
        (a.n, a.q, a.x, a.depth, a.search_exhausted, a.case.value, a.psi, a.central.time,
         a.V.length, a.U.length, a.ratio)
        for a in bundle.anchors
    ]


def geometry_rows(bundle):
    return [
        (g.n, g.prop35.delta, g.prop35.status, g.lemma37.delta, g.lemma37.status,
         g.lemma38.delta, g.lemma38.status, g.cor36.K_branch, g.cor36.A_sup,
         g.cor36.qualifies, g.lemma24)
        for g in bundle.geometry
    ]


def transfer_rows(bundle):
    if bundle.transfer is None:
        return []
    c = mpfr(1) / 2
    return [
        (t.n, t.source, t.y, abs(t.y - c), t.U.lo, t.U.hi, t.V.lo, t.V.hi, t.V.length, t.delta)
        for t in bundle.transfer.ranges
    ]


def wmp_rows(bundle):
    if bundle.wmp is None:
        return []
    return [(p.window, p.sample, p.time, p.delta, p.K, p.ok, p.reason) for p in bundle.wmp.pairs]


def wmp_window_rows(bundle):
    return [
        (i, n, y, len(w.pairs), w.success_fraction, w.min_delta, w.max_K, w.koebe_violations)
        for i, (n, y, w) in enumerate(bundle.wmp_windows)
    ]


def density_rows(bundle):
    return [
        (r.index, r.window.lo, r.window.hi, r.window.length, r.ratio, r.stderr, r.samples)
        for r in bundle.density
    ]


def return_rows(bundle):
    if bundle.return_map is None:
        return []
    return [(c.interval.lo, c.interval.hi, c.time) for c in bundle.return_map.components]


def curve_rows(bundle):
    if bundle.return_map is None:
        return []
    return list(bundle.return_map.curve)


TABLES = {
    "qtable": (QTABLE_HEADER, qtable_rows),
    "anchors": (ANCHOR_HEADER, anchor_rows),
    "geometry": (GEOMETRY_HEADER, geometry_rows),
    "transfer_ranges": (TRANSFER_HEADER, transfer_rows),
    "wmp_pairs": (WMP_HEADER, wmp_rows),
    "wmp_windows": (WMP_WINDOW_HEADER, wmp_window_rows),
    "density": (DENSITY_HEADER, density_rows),
    "return_map": (RETURN_HEADER, return_rows),
    "return_curve": (CURVE_HEADER, curve_rows),
}


def table(bundle, name):
    """``(header, rows)`` of a named table with raw (unformatted) cells."""
    header, build = TABLES[name]
    with gmpy2.context(precision=bundle.config.precision_bits):
        return header, build(bundle)


# -- JSON --------------------------------------------------------------------


def _records(header, rows, fmt):
    out = []
    for row in rows:
        out.append({k: (v if isinstance(v, str) else fmt.num(v))
                    for k, v in zip(header, row)})
    return out


def _measurement(m, fmt):
    return {"delta": fmt.num(m.delta), "passed": m.passed, "status": m.status,
            "samples": m.samples, "extra": {k: m.extra[k] for k in sorted(m.extra)}}


def to_document(bundle) -> dict:
    with gmpy2.context(precision=bundle.config.precision_bits):
        return _document(bundle)


def _document(bundle) -> dict:
    fmt = _formatter(bundle)
    cfg = bundle.config
    doc = {
        "schema": SCHEMA,
        "config": {k: (v if isinstance(v, (bool, int)) else str(v))
                   for k, v in cfg.items() if k not in EXECUTION_KEYS},
        "versions": {k: bundle.versions[k] for k in sorted(bundle.versions)},
        "precision": {"bits": cfg.precision_bits, "digits": fmt.digits,
                      "float_digits": FLOAT_DIGITS},
        "precision_warning": bundle.precision_warning,
    }
    adm = bundle.admissibility
    doc["admissibility"] = None if adm is None else {
        "passed": adm.passed, "unimodal": adm.unimodal, "samples": adm.samples,
        "max_schwarzian": fmt.num(adm.max_schwarzian), "argmax": fmt.num(adm.argmax),
        "reasons": list(adm.reasons),
    }
    t = bundle.qtable
    doc["qtable"] = {
        "termination": None if t is None else t.termination.value,
        "max_steps": None if t is None else t.max_steps,
        "trusted_horizon": None if t is None else t.trusted_horizon,
        "rows": _records(QTABLE_HEADER, qtable_rows(bundle), fmt),
    }
    doc["anchors"] = _records(ANCHOR_HEADER, anchor_rows(bundle), fmt)
    doc["skipped"] = [{"n": s.n, "reason": s.reason} for s in bundle.skipped]
    doc["geometry"] = [
        {"n": g.n, "prop35": _measurement(g.prop35, fmt), "lemma37": _measurement(g.lemma37, fmt),
         "lemma38": _measurement(g.lemma38, fmt),
         "cor36": {"K_branch": fmt.num(g.cor36.K_branch), "A_sup": fmt.num(g.cor36.A_sup),
                   "qualifies": g.cor36.qualifies, "grid": g.cor36.grid},
         "lemma24_violations": g.lemma24}
        for g in bundle.geometry
    ]
    tr = bundle.transfer
    doc["transfer_ranges"] = {
        "shrinking": None if tr is None else tr.shrinking,
        "approaching": None if tr is None else tr.approaching,
        "reasons": [] if tr is None else list(tr.reasons),
        "rows": _records(TRANSFER_HEADER, transfer_rows(bundle), fmt),
    }
    w = bundle.wmp
    doc["weak_markov"] = {
        "pairs": 0 if w is None else len(w.pairs),
        "success_fraction": None if w is None else fmt.num(float(w.success_fraction)),
        "min_delta": None if w is None else fmt.num(w.min_delta),
        "max_K": None if w is None else fmt.num(w.max_K),
        "koebe_violations": 0 if w is None else w.koebe_violations,
        "failure_reasons": {} if w is None else _reason_counts(w.pairs),
        "windows": _records(WMP_WINDOW_HEADER, wmp_window_rows(bundle), fmt),
    }
    doc["density"] = {
        "predicate": "finite-horizon surrogate: orbit enters the reference window",
        "ref_lo": cfg.density_ref_lo, "ref_hi": cfg.density_ref_hi,
        "horizon": cfg.density_horizon,
        "rows": _records(DENSITY_HEADER, density_rows(bundle), fmt),
    }
    rm = bundle.return_map
    doc["return_map"] = None if rm is None else {
        "x": fmt.num(rm.x), "V_lo": fmt.num(rm.V.lo), "V_hi": fmt.num(rm.V.hi),
        "coverage": fmt.num(rm.coverage), "components": len(rm.components),
    }
    doc["verdicts"] = dict(bundle.verdicts)
    doc["reasons"] = list(bundle.reasons)
    return doc


def _reason_counts(pairs):
    counts = {}
    for p in pairs:
        if p.reason:
            key = p.reason.split(" ")[0]
            counts[key] = counts.get(key, 0) + 1
    return {k: counts[k] for k in sorted(counts)}


def dumps_json(bundle) -> str:
    return json.dumps(to_document(bundle), indent=1, ensure_ascii=False) + "\n"


def dumps_csv(bundle, name) -> str:
    fmt = _formatter(bundle)
    header, rows = table(bundle, name)
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else fmt.dec(v) for v in row])
    return buf.getvalue()


def _write(path: Path, text: str):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as err:
        raise IoError(f"cannot write {path}: {err}") from err


def emit_report(bundle, outdir, formats=("json", "csv")) -> list:
    """Write ``report.json`` and/or ``<table>.csv`` files; returns the paths."""
    outdir = Path(outdir)
    paths = []
    if "json" in formats:
        p = outdir / "report.json"
        _write(p, dumps_json(bundle))
        paths.append(p)
    if "csv" in formats:
        for name in TABLES:
            p = outdir / f"{name}.csv"
            _write(p, dumps_csv(bundle, name))
            paths.append(p)
    return paths
