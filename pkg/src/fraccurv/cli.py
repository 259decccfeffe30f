"""Command-line interface: ``fraccurv <command> --config doc.json``.

Reports are JSON ``ResultTable`` documents; ledgers and scans are CSV.
Exit codes: 0 success, 2 configuration or usage error, 3 budget exceeded
(partial output is still written), 4 inconclusive certification.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from . import curvature as cv
from . import gaps as gp
from . import thermo as th
from .config import ConfigDocument, ConfigError, load_config, read_config
from .errors import BudgetExceededError, ClearanceError, FracCurvError, RangeError
from .symbolic import Lattice, Nonlattice, lattice_classify

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_INCONCLUSIVE = 0, 2, 3, 4


@dataclass
class ResultTable:
    """Machine-readable report; every limit value carries a tolerance."""

    command: dict
    constants: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def add_constant(self, name, value, tolerance, scan_range=None):
        entry = {"value": _jsonable(value), "tolerance": _jsonable(tolerance)}
        if scan_range is not None:
            entry["range"] = [_jsonable(v) for v in scan_range]
        self.constants[name] = entry

    def add_check(self, name, status, value, tolerance):
        if isinstance(status, bool):
            status = "pass" if status else "fail"
        self.checks.append({"name": name, "status": status, "value": _jsonable(value),
                            "tolerance": _jsonable(tolerance)})

    def to_dict(self) -> dict:
        return {"command": self.command, "constants": self.constants, "series": self.series,
                "checks": self.checks, "provenance": self.provenance}

    def to_json(self) -> str:
        # json writes floats with repr, which round-trips bit-exactly
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ResultTable":
        d = json.loads(text)
        return cls(d["command"], d["constants"], d["series"], d["checks"], d["provenance"])

    @property
    def status(self) -> int:
        if any(c["status"] == "inconclusive" for c in self.checks):
            return EXIT_INCONCLUSIVE
        return EXIT_OK


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


def _fmt(v) -> str:
    return str(v) if isinstance(v, Fraction) else format(float(v), ".17g")


def _table(cfg: ConfigDocument, name: str, args) -> ResultTable:
    echo = {"name": name}
    for k, v in sorted(vars(args).items()):
        if k not in ("func", "command") and v is not None:
            echo[k] = v
    return ResultTable(echo, provenance={"tool": "fraccurv", "version": __version__,
                                         "config_hash": cfg.hash})


def _grid(cfg: ConfigDocument, args, key, default):
    v = getattr(args, key, None)
    if v is not None:
        return v
    return cfg.grids.get(key, default)


# -- commands -------------------------------------------------------------

def cmd_dim(cfg: ConfigDocument, args) -> ResultTable:
    ifs = cfg.system
    out = _table(cfg, "dim", args)
    br = th.conformal_dimension(ifs)
    out.add_constant("delta_bracket_lo", br.lo, 0.0)
    out.add_constant("delta_bracket_hi", br.hi, 0.0)
    if ifs.is_affine:
        out.add_constant("delta", th.moran_dimension(ifs.ratios), 1e-15)
    else:
        out.add_constant("delta", cv.dimension_of(ifs), br.width)
    out.add_check("bracket_converged", bool(br.converged), br.width, 1e-10)
    return out


def cmd_gaps(cfg: ConfigDocument, args):
    ifs = cfg.system
    cutoff = _grid(cfg, args, "cutoff", None)
    if cutoff is None:
        raise ConfigError("gaps needs a cutoff (--cutoff or grids.cutoff)")
    if cfg.precision == "rational" and ifs.is_exact:
        cutoff = Fraction(repr(cutoff)) if isinstance(cutoff, float) else Fraction(cutoff)
    budget = args.budget_gaps or cfg.budgets.get("max_gaps", gp.DEFAULT_MAX_GAPS)
    code = EXIT_OK
    try:
        if cfg.image_level is not None:
            from .images import image_gap_ledger
            ledger = image_gap_ledger(ifs.symbolic, float(cutoff))
            if len(ledger.lengths) > budget:
                raise BudgetExceededError(f"more than {budget} gaps", ledger)
        else:
            ledger = gp.enumerate_gaps(ifs, cutoff, max_gaps=budget)
    except BudgetExceededError as exc:
        if exc.partial is None:
            raise
        ledger, code = exc.partial, EXIT_BUDGET
        print(f"budget exceeded: {exc}; writing partial ledger", file=sys.stderr)
    return ledger.to_csv(), code


def _profile_for(cfg: ConfigDocument, cutoff) -> gp.VolumeProfile:
    ifs = cfg.system
    if cfg.precision == "rational" and ifs.is_exact:
        cutoff = Fraction(repr(cutoff)) if isinstance(cutoff, float) else Fraction(cutoff)
    return gp.attractor_profile(ifs, cutoff,
                                max_gaps=cfg.budgets.get("max_gaps", gp.DEFAULT_MAX_GAPS))


def cmd_profile(cfg: ConfigDocument, args):
    lo = _grid(cfg, args, "eps_min", None)
    hi = _grid(cfg, args, "eps_max", None)
    if lo is None or hi is None or not 0 < lo < hi:
        raise ConfigError("profile needs a nonempty range 0 < eps_min < eps_max")
    ppd = _grid(cfg, args, "points_per_decade", 64)
    grid = cv.geometric_grid(lo, hi, ppd)
    prof = _profile_for(cfg, 2 * lo)
    delta = cv.dimension_of(cfg.system)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epsilon", "lambda1", "lambda0", "scaled1", "scaled0"])
    exact = prof.exact
    for e in grid:
        if exact:
            eq = Fraction(repr(float(e)))
            v, c = prof.volume(eq), prof.count(eq)
        else:
            v, c = prof.volume(float(e)), prof.count(float(e))
        w.writerow([_fmt(e), _fmt(v), str(int(c)), _fmt(e ** (delta - 1) * float(v)),
                    _fmt(e**delta * int(c) / 2)])
    return buf.getvalue(), EXIT_OK


def cmd_constants(cfg: ConfigDocument, args) -> ResultTable:
    ifs = cfg.system
    out = _table(cfg, "constants", args)
    depth = _grid(cfg, args, "depth", 10)
    const = cv.theoretical_constants(ifs, depth)
    out.add_constant("delta", const.delta, 1e-12)
    out.add_constant("c", const.c, const.c_width)
    out.add_constant("entropy", const.entropy, const.entropy_error)
    rel = const.c_width / const.c if const.c else 0.0
    out.add_constant("average_content", const.content, rel * const.content)
    out.add_constant("mass0", const.mass0, rel * const.mass0)
    out.add_constant("mass1", const.mass1, rel * const.mass1)
    seq = cv.gap_sum_sequence(ifs, const.delta, min(depth, 12))
    out.series["c_n"] = [{"depth": s.depth, "value": s.value, "width": s.width} for s in seq]
    return out


def cmd_average(cfg: ConfigDocument, args) -> ResultTable:
    ifs = cfg.system
    out = _table(cfg, "average", args)
    T = _grid(cfg, args, "T", 1e-10)
    tol = _grid(cfg, args, "tolerance", 0.005)
    const = cv.theoretical_constants(ifs)
    prof = _profile_for(cfg, T)
    content = cv.average_content(prof, const.delta, T)
    curv = cv.average_curvature0(prof, const.delta, T)
    out.add_constant("M_tilde", const.content, max(tol * const.content, 0.0), (T, 1.0))
    out.add_constant("average_content", content, tol * const.content, (T, 1.0))
    out.add_constant("mass0", const.mass0, tol * const.mass0, (T, 1.0))
    out.add_constant("average_curvature0", curv, tol * const.mass0, (T, 1.0))
    out.add_check("average_content", abs(content / const.content - 1) <= tol,
                  content / const.content - 1, tol)
    out.add_check("average_curvature0", abs(curv / const.mass0 - 1) <= tol,
                  curv / const.mass0 - 1, tol)
    for k, (win, clearance) in enumerate(cfg.windows):
        try:
            lp = gp.localized_profile(ifs, T, win)
        except ClearanceError as exc:
            raise ConfigError(f"window {k}: {exc}") from exc
        if float(lp.max_eps) < clearance:
            raise ConfigError(f"window {k}: declared clearance {clearance} exceeds the "
                              f"actual {float(lp.max_eps)}")
        nu_b, amb = cv.window_mass(ifs, const.delta, win)
        est = cv.average_content(lp, const.delta, T)
        pred = const.mass1 * nu_b
        out.add_constant(f"window{k}_average_content", est, tol * pred, (T, 1.0))
        out.add_constant(f"window{k}_nu", nu_b, amb)
        status = "inconclusive" if amb > tol * max(nu_b, 1e-300) else abs(est / pred - 1) <= tol
        out.add_check(f"window{k}_localization", status, est / pred - 1, tol)
    return out


def cmd_lattice(cfg: ConfigDocument, args) -> ResultTable:
    ifs = cfg.system
    out = _table(cfg, "lattice", args)
    if ifs.is_affine:
        lat = lattice_classify(ifs.ratios)
    else:
        lat = ifs.lattice if ifs.lattice is not None else Lattice(ifs.symbolic.a) \
            if ifs.symbolic is not None else None
    kind = type(lat).__name__.lower() if lat is not None else "unknown"
    out.series["classification"] = kind
    if isinstance(lat, Lattice):
        out.add_constant("period", lat.a, 1e-12)
    lo = _grid(cfg, args, "eps_min", 1e-9)
    hi = _grid(cfg, args, "eps_max", 1e-3)
    ppd = _grid(cfg, args, "points_per_decade", 64)
    const = cv.theoretical_constants(ifs)
    prof = _profile_for(cfg, 2 * lo)
    series = cv.content_scan(prof, const.delta, cv.geometric_grid(lo, hi, ppd))
    if isinstance(lat, Lattice):
        rep = cv.oscillation_profile(series, lat.a)
        out.add_constant("oscillation_min", rep.exact_min, 0.0, rep.window)
        out.add_constant("oscillation_max", rep.exact_max, 0.0, rep.window)
        out.add_check("brackets_average_content",
                      rep.exact_min < const.content < rep.exact_max, rep.ratio, 0.0)
        if ifs.is_affine:
            t_lo, t_hi = cfg.grids.get("predictor_T", [25.0, 30.0])
            deep = gp.attractor_profile(ifs, math.exp(-t_hi))
            worst = 0.0
            for T in np.linspace(t_lo, t_hi, 51):
                truth = math.exp(-const.delta * T) * float(deep.count(math.exp(-T))) / 2
                worst = max(worst, abs(cv.lattice_predictor(ifs, 1.0, T) / truth - 1))
            out.add_check("renewal_predictor", worst < 0.01, worst, 0.01)
    elif isinstance(lat, Nonlattice):
        last = series.content[series.eps <= lo * 10]
        out.add_constant("last_decade_mean", float(np.mean(last)), 0.02 * const.content, (lo, lo * 10))
    return out


def cmd_image(cfg: ConfigDocument, args) -> ResultTable:
    if cfg.image_level is None:
        raise ConfigError("image needs a system with an 'image' block")
    from .images import mass_condition_check, gn_eval, psi_decomposition
    gn = cfg.system.symbolic
    out = _table(cfg, "image", args)
    g1, err = gn_eval(gn, 1.0)
    out.add_constant("g_at_1", g1, err)
    out.add_constant("hull_length", gn.hull_length, gn.node_integral(())[1])
    depth = _grid(cfg, args, "depth", 12)
    if gn.level >= 1:
        pd = psi_decomposition(gn, min(depth, 10))
        out.add_constant("psi_max", pd.psi_range[1], 0.0)
        out.add_check("psi_range", 0.0 <= pd.psi_range[0] and pd.psi_range[1] <= gn.a * gn.level
                      + 1e-12, pd.psi_range[1], gn.a * gn.level)
        out.add_check("cocycle_identity", pd.residual < 1e-10, pd.residual, 1e-10)
    tp = _grid(cfg, args, "t_points", 32)
    rep = mass_condition_check(gn, depth, np.linspace(0.0, gn.a, tp, endpoint=False))
    out.series["mass_condition"] = {"t": rep.t.tolist(), "lhs_lo": rep.lhs_lo.tolist(),
                                   "lhs_hi": rep.lhs_hi.tolist(), "rhs_lo": rep.rhs_lo.tolist(),
                                   "rhs_hi": rep.rhs_hi.tolist()}
    out.add_check("mass_condition", rep.status, rep.max_gap, rep.max_ambiguity)
    cutoff = _grid(cfg, args, "cutoff", 1e-3)
    led = gn.gap_ledger(cutoff)
    out.series["largest_image_gaps"] = [float(v) for v in led.lengths[:8]]
    return out


COMMANDS = {
    "dim": cmd_dim,
    "gaps": cmd_gaps,
    "profile": cmd_profile,
    "constants": cmd_constants,
    "average": cmd_average,
    "lattice": cmd_lattice,
    "image": cmd_image,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fraccurv", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="JSON configuration document")
    src.add_argument("--system", help="shipped system name (e.g. cantor)")
    common.add_argument("--image-level", type=int, help="with --system: induced image system")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--threads", type=int, default=1, help="accepted; computations are serial")
    common.add_argument("--budget-gaps", type=int, help="maximum number of gaps to enumerate")
    common.add_argument("--precision", choices=["float", "rational"])
    common.add_argument("--seedless", action="store_true",
                        help="accepted; every algorithm is deterministic")
    common.add_argument("--cutoff", type=float)
    common.add_argument("--eps-min", dest="eps_min", type=float)
    common.add_argument("--eps-max", dest="eps_max", type=float)
    common.add_argument("--points-per-decade", dest="points_per_decade", type=int)
    common.add_argument("-T", dest="T", type=float, help="lower Cesaro limit")
    common.add_argument("--depth", type=int)
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=(fn.__doc__ or name).strip().splitlines()[0]
                            if fn.__doc__ else name)
        sp.set_defaults(func=fn)
    return p


def _load(args) -> ConfigDocument:
    if args.config:
        cfg = read_config(args.config)
        if args.precision:
            doc = dict(cfg.raw, precision=args.precision)
            cfg = load_config(doc)
        return cfg
    system = {"name": args.system}
    if args.image_level is not None:
        system["image"] = {"level": args.image_level}
    doc = {"system": system}
    if args.precision:
        doc["precision"] = args.precision
    return load_config(doc)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load(args)
        result = args.func(cfg, args)
    except (ConfigError, RangeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceededError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (FracCurvError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if isinstance(result, ResultTable):
        text, code = result.to_json() + "\n", result.status
    else:
        text, code = result
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
