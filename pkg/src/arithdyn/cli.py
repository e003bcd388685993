"""Command-line front end: ``arithdyn <command> [options]``.

Every command writes a table (CSV) or a JSON document to stdout or to ``--out``.
Options can also come from a ``key = value`` config file given with ``--config``;
flags on the command line win. ``ARITHDYN_OUT_DIR`` relocates relative ``--out`` paths.

Exit codes: 0 success, 1 other library error, 2 malformed input, 3 budget exhausted.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

from . import __version__, freeness, henon, intersect, p1dyn, rittlab, skewprod
from .errors import ArithDynError, BudgetError, ParseError
from .heights import HeightValue, weil_height
from .henon import HenonMap
from .p1dyn import INF, RationalMapP1, SplitEndo
from .parsing import format_map, format_point, format_rational, format_upoly, parse_map, parse_point
from .places import ARCH, Place, parse_place
from .polymap import PolyMap2
from .skewprod import SkewProduct

OUT_DIR_ENV = "ARITHDYN_OUT_DIR"

# option name -> (type, default); shared by the parser, config files and RunConfig
OPTIONS = {
    "map": (str, None), "F": (str, None), "G": (str, None), "C": (str, None),
    "point": (list, None), "box": (int, None), "place": (list, None),
    "poly": (list, None), "m": (str, "1"), "n": (str, "1"),
    "period": (int, None), "law": (str, "circle"), "bins": (int, 32),
    "histogram": (str, None), "cap": (int, 3),
    "tol": (float, 1e-9), "max_len": (int, 6), "budget_bits": (int, None),
    "out": (str, None), "format": (str, "csv"),
}


# configuration ------------------------------------------------------------


@dataclass
class RunConfig:
    """A command plus its options; ``to_text`` and ``from_text`` are mutually inverse."""

    command: str
    options: dict = field(default_factory=dict)

    def get(self, key):
        if self.options.get(key) is not None:
            return self.options[key]
        return OPTIONS[key][1]

    def to_text(self) -> str:
        lines = [f"command = {self.command}"]
        for key in sorted(self.options):
            val = self.options[key]
            if val is None:
                continue
            if isinstance(val, list):
                lines += [f"{key} = {v}" for v in val]
            else:
                lines.append(f"{key} = {val}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, source: str = "config") -> "RunConfig":
        command = ""
        options: dict = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ParseError(f"expected 'key = value' on line {lineno}", raw, 0, source)
            key, val = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key == "command":
                command = val
                continue
            if key not in OPTIONS:
                raise ParseError(f"unknown key {key!r} on line {lineno}", raw, 0, source)
            kind = OPTIONS[key][0]
            if kind is list:
                options.setdefault(key, []).append(val)
            else:
                try:
                    options[key] = kind(val)
                except ValueError:
                    raise ParseError(f"bad value for {key!r} on line {lineno}", raw,
                                     raw.index("=") + 1, source) from None
        return cls(command, options)


def _parse_range(text: str, name: str) -> list[int]:
    """'3', '1..4' or '1,2,5'."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            out = list(range(int(lo), int(hi) + 1))
        else:
            out = [int(s) for s in text.split(",")]
    except ValueError:
        raise ParseError("expected an integer, a range a..b or a list", text, 0, name) from None
    if not out or min(out) < 1:
        raise ParseError("exponents must be positive", text, 0, name)
    return out


# emission -----------------------------------------------------------------


def _num(x) -> str:
    """Exact values as rational strings; floats with full round-trip precision."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, Fraction)):
        return format_rational(x)
    if x is INF:
        return "inf"
    if isinstance(x, float):
        return "0" if x == 0 else repr(x)
    return str(x)


def _height_str(h: HeightValue) -> str:
    return "0" if h.is_exact_zero() else _num(h.total())


def _finite_str(h: HeightValue) -> str:
    return " ".join(f"{e}*log({p})" for p, e in h.finite_items)


class Emitter:
    def __init__(self, cfg: RunConfig):
        self.fmt = cfg.get("format")
        if self.fmt not in ("csv", "json"):
            raise ParseError("format must be csv or json", self.fmt, 0, "--format")
        self.out = cfg.get("out")

    def table(self, columns: list[str], rows: list[dict], extra: dict | None = None):
        if self.fmt == "json":
            doc = {"columns": columns, "rows": [{c: _jsonable(r.get(c)) for c in columns} for r in rows]}
            if extra:
                doc.update(extra)
            self._write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
            return
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_num(r.get(c)) for c in columns])
        self._write(buf.getvalue())

    def document(self, doc: dict):
        self._write(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")

    def _write(self, text: str):
        if self.out is None:
            sys.stdout.write(text)
            return
        write_text(self.out, text)


def write_text(path: str, text: str):
    path = _out_path(path)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _out_path(path: str) -> str:
    base = os.environ.get(OUT_DIR_ENV)
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, (int, float)):
        return x
    return _num(x)


# shared helpers -------------------------------------------------------------


def _map(cfg: RunConfig, key: str = "map", required: bool = True):
    text = cfg.get(key)
    if text is None:
        if required:
            raise ParseError("missing map", "", None, f"--{key}")
        return None
    return parse_map(text, f"--{key}")


def _points(cfg: RunConfig, dim: int) -> list[tuple]:
    pts = [parse_point(t, "--point") for t in (cfg.get("point") or [])]
    box = cfg.get("box")
    if box is not None:
        if box < 1:
            raise ParseError("box size must be positive", str(box), 0, "--box")
        coords = _box(box)
        pts += [tuple(c) for c in product(coords, repeat=dim)]
    if not pts:
        raise ParseError("give at least one --point or a --box", "", None, "--point")
    for pt in pts:
        if len(pt) != dim:
            raise ParseError(f"expected {dim} coordinate(s), got {len(pt)}", format_point(pt), 0, "--point")
    return pts


def _box(bound: int) -> list[Fraction]:
    return sorted({Fraction(a, b) for b in range(1, bound + 1) for a in range(-bound, bound + 1)})


def _dimension(F) -> int:
    if isinstance(F, RationalMapP1):
        return 1
    if isinstance(F, SplitEndo):
        return F.dimension
    return 2


def _as_skew(F):
    if isinstance(F, PolyMap2):
        s = F.to_skew()
        if s is None:
            raise ArithDynError("this command needs a skew product; poly2 maps must have the form (p(x), q(x, y))")
        return s
    return F


def _preperiodic(F, pt):
    """(is_preperiodic, tail, cycle)."""
    if isinstance(F, RationalMapP1):
        c = p1dyn.is_preperiodic_p1(F, pt[0])
    elif isinstance(F, HenonMap):
        c = henon.is_periodic_henon(F, pt)
    elif isinstance(F, SkewProduct):
        c = skewprod.is_preperiodic_skew(F, pt)
    elif isinstance(F, SplitEndo):
        comps, _ = F.untwisted()
        ok = all(p1dyn.is_preperiodic_p1(f, x).value for f, x in zip(comps, pt))
        return ok, None, None
    else:
        raise ArithDynError(f"no preperiodicity test for {type(F).__name__}")
    return c.value, c.tail, c.cycle


# commands -----------------------------------------------------------------


def cmd_height(cfg: RunConfig, em: Emitter):
    F = _as_skew(_map(cfg))
    tol = cfg.get("tol")
    rows = []
    for pt in _points(cfg, _dimension(F)):
        tilde = None
        if isinstance(F, RationalMapP1):
            h = p1dyn.canonical_height_p1(F, pt[0], tol)
        elif isinstance(F, HenonMap):
            h, t = henon.canonical_heights_henon(F, pt, tol)
            tilde = _height_str(t)
        elif isinstance(F, SkewProduct):
            h = skewprod.height_skew(F, pt, tol)
        else:
            h = p1dyn.split_height(F, pt, tol)
        pre, tail, cycle = _preperiodic(F, pt)
        rows.append({"point": format_point(pt), "height": _height_str(h), "htilde": tilde,
                     "finite_part": _finite_str(h), "error_bound": h.error_bound(),
                     "preperiodic": pre, "tail": tail, "cycle": cycle})
    em.table(["point", "height", "htilde", "finite_part", "error_bound", "preperiodic", "tail", "cycle"],
             rows, {"map": format_map(F)})


def _places(cfg: RunConfig, F, pt) -> list[Place]:
    given = cfg.get("place")
    if given:
        try:
            return [parse_place(t) for t in given]
        except ValueError as exc:
            raise ParseError(str(exc), ",".join(given), 0, "--place") from None
    primes = set(F.bad_primes())
    for c in pt:
        if c is not INF:
            primes.update(p for p, _ in weil_height(c).finite_items)
            primes.update(_primes_of(c))
    return [ARCH] + [Place(p) for p in sorted(primes)]


def _primes_of(q: Fraction) -> list[int]:
    from .places import prime_divisors

    out = []
    for n in (q.numerator, q.denominator):
        if abs(n) > 1:
            out += prime_divisors(abs(n))
    return out


def cmd_green(cfg: RunConfig, em: Emitter):
    F = _as_skew(_map(cfg))
    tol = cfg.get("tol")
    rows = []
    for pt in _points(cfg, _dimension(F)):
        for v in _places(cfg, F, pt):
            if isinstance(F, RationalMapP1):
                vals = [("G", p1dyn.green_p1(F, pt[0], v, tol))]
            elif isinstance(F, HenonMap):
                g = henon.green_henon(F, pt, v, tol)
                vals = [("G+", g.g_plus), ("G-", g.g_minus)]
            elif isinstance(F, SkewProduct):
                vals = [("G", skewprod.green_skew(F, pt, v, tol))]
            else:
                raise ArithDynError("green needs a p1, henon or skew map")
            for name, g in vals:
                rows.append({"point": format_point(pt), "place": str(v), "function": name,
                             "value": "0" if g.is_exact_zero() else g.value,
                             "exponent": g.exponent, "error_bound": g.error + g.truncation_error,
                             "iterations": g.iterations})
    em.table(["point", "place", "function", "value", "exponent", "error_bound", "iterations"], rows)


def cmd_preperiodic(cfg: RunConfig, em: Emitter):
    F = _as_skew(_map(cfg))
    rows = []
    for pt in _points(cfg, _dimension(F)):
        pre, tail, cycle = _preperiodic(F, pt)
        rows.append({"point": format_point(pt), "preperiodic": pre, "tail": tail, "cycle": cycle})
    em.table(["point", "preperiodic", "tail", "cycle"], rows)


def cmd_common_zeros(cfg: RunConfig, em: Emitter):
    F = _map(cfg, "F")
    G = _map(cfg, "G", required=False)
    C = _map(cfg, "C", required=False)
    m = _parse_range(cfg.get("m"), "--m")[0]
    n = _parse_range(cfg.get("n"), "--n")[0]
    var = intersect.solve_equalizer(F, m, C) if G is None else intersect.solve_common(F, G, C, m, n)
    if em.fmt == "json":
        em.document(var.to_dict())
        return
    rows = []
    parts = var.product_parts if var.product_parts is not None else [var.orbits]
    for k, part in enumerate(parts):
        for o in part:
            coords = ["inf" if c is INF else format_upoly(c, "t") for c in o.coords]
            rows.append({"coordinate": k if var.product_parts is not None else None,
                         "field": format_upoly(o.field, "t"), "degree": o.degree,
                         "coords": "; ".join(coords), "multiplicity": o.multiplicity})
    em.table(["coordinate", "field", "degree", "coords", "multiplicity"], rows)


def cmd_decay(cfg: RunConfig, em: Emitter):
    F = _as_skew(_map(cfg))
    C = _as_skew(_map(cfg, "C", required=False))
    rows = [r.to_dict() for r in intersect.height_decay_report(F, C, _parse_range(cfg.get("m"), "--m"),
                                                                cfg.get("tol"))]
    em.table(["m", "count", "max_height", "d^m_times_max", "net_times_max", "error_bound"], rows)


def cmd_density_report(cfg: RunConfig, em: Emitter):
    F, G = _map(cfg, "F"), _map(cfg, "G")
    C = _map(cfg, "C", required=False)
    rep = intersect.density_report(F, G, C, _parse_range(cfg.get("m"), "--m"),
                                   _parse_range(cfg.get("n"), "--n"), cfg.get("cap"), cfg.get("tol"))
    curves = [" + ".join(f"({format_rational(c)})*x^{i}*y^{j}" for (i, j), c in sorted(cv.items()))
              for cv in rep.curves]
    em.table(["m", "n", "count", "max_height", "d^m_times_max", "curve_found"], rep.rows(),
             {"total_points": rep.total_points, "curve_degree": rep.curve_degree, "curves": curves})


def cmd_freeness(cfg: RunConfig, em: Emitter):
    F, G = _map(cfg, "F"), _map(cfg, "G")
    cert = freeness.find_relation(F, G, cfg.get("max_len"))
    if cert is None:
        row = {"found": False, "w1": None, "w2": None, "map": None, "verified": None, "equal_length": None}
    else:
        row = {"found": True, **cert.as_dict()}
    em.table(["found", "w1", "w2", "map", "verified", "equal_length"], [row])


def _polys(cfg: RunConfig, count: int) -> list:
    texts = cfg.get("poly") or []
    if len(texts) != count:
        raise ParseError(f"expected {count} --poly value(s), got {len(texts)}", "", None, "--poly")
    from .parsing import parse_upoly

    return [parse_upoly(t, None, "--poly") for t in texts]


def describe_special(v) -> str:
    if v.kind == "Power":
        return f"Power-conjugate via l(x)={v.conjugator}"
    if v.kind == "Chebyshev":
        return f"Chebyshev-conjugate via l(x)={v.conjugator}, sign {'+' if v.sign > 0 else '-'}"
    return "not special"


def cmd_ritt(cfg: RunConfig, em: Emitter, action: str):
    rows: list[dict] = []
    if action == "classify":
        for f in _polys(cfg, len(cfg.get("poly") or []) or 1):
            v = rittlab.is_special(f)
            rows.append({"poly": rittlab.format_poly(f), "verdict": v.kind,
                         "detail": describe_special(v)})
        em.table(["poly", "verdict", "detail"], rows)
    elif action == "chebyshev":
        d = cfg.get("period") or 2
        em.table(["d", "poly"], [{"d": d, "poly": rittlab.format_poly(rittlab.chebyshev(d))}])
    elif action == "conjugate":
        f, g = _polys(cfg, 2)
        em.table(["l"], [{"l": str(l)} for l in rittlab.linear_conjugation_solve(f, g)])
    elif action == "related":
        f, g = _polys(cfg, 2)
        rel = rittlab.linearly_related(f, g)
        em.table(["related", "l1", "l2"], [{"related": rel is not None, "l1": rel and str(rel.l1),
                                              "l2": rel and str(rel.l2)}])
    elif action == "normal-form":
        (f,) = _polys(cfg, 1)
        nf = rittlab.normal_form_xsht(f)
        em.table(["s", "t", "h", "phi"], [{"s": nf.s, "t": nf.t, "h": rittlab.format_poly(nf.h, "u"),
                                            "phi": str(nf.phi)}])
    elif action == "symmetry":
        (f,) = _polys(cfg, 1)
        g = rittlab.symmetry_group(f)
        elems = g.elements if g.kind == "Finite" else g.stabilizer
        em.table(["kind", "order", "element"], [{"kind": g.kind, "order": g.order or None, "element": str(e)}
                                               for e in elems])
    elif action == "first-step":
        A, C, D, B = _polys(cfg, 4)
        em.table(["mu"], [{"mu": str(mu)} for mu in rittlab.ritt_first_step(A, C, D, B)])
    elif action == "common":
        f, g = _polys(cfg, 2)
        res = rittlab.common_normal_form(f, g)
        row = {"found": res is not None}
        if res is not None:
            row.update(phi=str(res.phi), eps1=str(res.eps1), eps2=str(res.eps2),
                       R=rittlab.format_poly(res.R), s=res.s, t=res.t)
        em.table(["found", "phi", "eps1", "eps2", "R", "s", "t"], [row])
    else:
        raise ParseError(f"unknown ritt action {action!r}", action, 0, "action")


LAWS = {"circle": intersect.uniform_circle, "arcsine": intersect.arcsine}


def cmd_equidist(cfg: RunConfig, em: Emitter):
    f = _map(cfg)
    if not isinstance(f, RationalMapP1):
        raise ParseError("equidist needs a map on P^1", cfg.get("map"), 0, "--map")
    n = cfg.get("period")
    if n is None or n < 1:
        raise ParseError("missing or nonpositive --period", str(n), 0, "--period")
    law_name = cfg.get("law")
    if law_name.startswith("dirac"):
        at = law_name.partition(":")[2] or "0"
        law = intersect.dirac(complex(float(parse_point(at, "--law")[0])))
    elif law_name in LAWS:
        law = LAWS[law_name]()
    else:
        raise ParseError("law must be circle, arcsine or dirac[:x]", law_name, 0, "--law")
    res = intersect.equidistribution_check(f, n, law, cfg.get("bins"))
    em.table(["law", "period", "points", "ks"], [{"law": res.law, "period": res.n, "points": res.points,
                                                  "ks": res.ks}])
    if cfg.get("histogram"):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bin_center", "empirical_mass", "reference_mass"])
        for row in res.histogram:
            w.writerow([_num(v) for v in row])
        write_text(cfg.get("histogram"), buf.getvalue())


COMMANDS = {
    "height": cmd_height, "green": cmd_green, "preperiodic": cmd_preperiodic,
    "common-zeros": cmd_common_zeros, "decay": cmd_decay, "density-report": cmd_density_report,
    "freeness": cmd_freeness, "equidist": cmd_equidist,
}
RITT_ACTIONS = ("classify", "chebyshev", "conjugate", "related", "normal-form", "symmetry",
                "first-step", "common")


# argument parsing -----------------------------------------------------------


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key = value file; flags override its entries")
    p.add_argument("--tol", type=float, help="absolute tolerance for real-valued output")
    p.add_argument("--budget-bits", type=int, help="coefficient bit budget for exact elimination")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="arithdyn", description="Arithmetic dynamics over Q.")
    parser.add_argument("--version", action="version", version=f"arithdyn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("height", "green", "preperiodic"):
        p = sub.add_parser(name)
        p.add_argument("--map", help='e.g. "p1: x^2-29/16", "henon: P=y^2, delta=1", "skew: p=x^2; q=y^2"')
        p.add_argument("--point", action="append", help='a rational, "inf" or "(a, b)"; repeatable')
        p.add_argument("--box", type=int, help="all a/b with |a|, b <= BOX in every coordinate")
        if name == "green":
            p.add_argument("--place", action="append", help="inf or a prime; repeatable")
        _common(p)

    p = sub.add_parser("common-zeros")
    for k in ("F", "G", "C"):
        p.add_argument(f"--{k}")
    p.add_argument("--m")
    p.add_argument("--n")
    _common(p)

    p = sub.add_parser("decay")
    p.add_argument("--map")
    p.add_argument("--C")
    p.add_argument("--m", help="range such as 1..6")
    _common(p)

    p = sub.add_parser("density-report")
    for k in ("F", "G", "C"):
        p.add_argument(f"--{k}")
    p.add_argument("--m", help="range such as 1..2")
    p.add_argument("--n")
    p.add_argument("--cap", type=int, help="largest curve degree searched")
    _common(p)

    p = sub.add_parser("freeness")
    p.add_argument("--F")
    p.add_argument("--G")
    p.add_argument("--max-len", type=int)
    _common(p)

    p = sub.add_parser("ritt")
    p.add_argument("action", choices=RITT_ACTIONS)
    p.add_argument("--poly", action="append", help="repeatable; order follows the action")
    p.add_argument("--period", type=int, help="degree for the chebyshev action")
    _common(p)

    p = sub.add_parser("equidist")
    p.add_argument("--map")
    p.add_argument("--period", type=int)
    p.add_argument("--law", help="circle, arcsine or dirac[:x]")
    p.add_argument("--bins", type=int)
    p.add_argument("--histogram", help="CSV file for the binned empirical measure")
    _common(p)
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(ns.command)
    if getattr(ns, "config", None):
        try:
            with open(ns.config, encoding="utf-8") as fh:
                cfg = RunConfig.from_text(fh.read(), ns.config)
        except OSError as exc:
            raise ParseError(f"cannot read config: {exc.strerror}", ns.config, None, "--config") from None
        if cfg.command and cfg.command != ns.command:
            raise ParseError(f"config is for {cfg.command!r}", ns.config, None, "--config")
        cfg.command = ns.command
    for key in OPTIONS:
        val = getattr(ns, key, None)
        if val is not None:
            cfg.options[key] = val
    return cfg


def run(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    saved_budget = intersect.BIT_BUDGET
    try:
        cfg = config_from_args(ns)
        if cfg.get("tol") <= 0:
            raise ParseError("tolerance must be positive", str(cfg.get("tol")), 0, "--tol")
        if cfg.get("budget_bits") is not None:
            intersect.BIT_BUDGET = cfg.get("budget_bits")
        em = Emitter(cfg)
        if ns.command == "ritt":
            cmd_ritt(cfg, em, ns.action)
        else:
            COMMANDS[ns.command](cfg, em)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BudgetError as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return 3
    except (ArithDynError, ValueError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    finally:
        intersect.BIT_BUDGET = saved_budget
    return 0


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
