"""Command-line driver: ``rmestab {run,scan,toy,spectra}``.

Every command writes CSV files (header row, ``.`` decimal, LF endings) into
``--out``. Floats are written in their shortest round-trip form, so reruns
with the same configuration are byte-identical. On failure a single JSON
line ``{"error": ..., "message": ...}`` goes to stderr and the exit code is
nonzero (2 for usage errors, 1 otherwise).

Settings may also come from ``--config FILE``, a flat ``key = value`` file
whose keys are the long flag names (``samples = 2000``); flags given on the
command line win. ``--ranges FILE`` holds one ``name = lo, hi`` per line; a
family prefix such as ``alpha`` sets every ``alpha_<i>``.
"""

import argparse
import csv
import json
import os
import re
import sys

import numpy as np

from . import ensembles as _ens
from . import equilibria as _eq
from . import models as _models
from . import stats as _stats
from . import toyplane as _toy
from .sampler import ParameterRanges, SamplerConfig, SamplingError, sample_fcs, stability_probability

ANALYTIC_SAMPLES = 100_000
NUMERIC_SAMPLES = 1000
TABLE_COLUMNS = ("model", "ensemble", "n", "N", "p_hat", "se")
SCAN_COLUMNS = ("family", "n", "ensemble", "N", "p_hat", "se", "median", "q1", "q3")
SUMMARY_COLUMNS = ("model", "ensemble", "n", "p_hat", "se", "median", "q1", "q3")

# settings shared by the sampling commands, with their final defaults
_COMMON_DEFAULTS = {
    "model": None,
    "branch": None,
    "ensemble": "fcs",
    "n": None,
    "samples": None,
    "seed": 0,
    "mode": "auto",
    "ranges": None,
    "range_scale": None,
    "out": ".",
    "workers": 1,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- small parsers ----------------------------------------------------------------

def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def parse_int_list(text):
    """``"1-6,20,30"`` -> ``[1, 2, 3, 4, 5, 6, 20, 30]``."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        m = re.fullmatch(r"(\d+)\s*-\s*(\d+)", part)
        if m:
            lo, hi = int(m.group(1)), int(m.group(2))
            if lo > hi:
                raise UsageError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        elif part.isdigit():
            out.append(int(part))
        else:
            raise UsageError(f"cannot parse {part!r} as an integer or a-b range")
    if not out:
        raise UsageError("empty integer list")
    return out


def parse_pair(text):
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 2:
        raise UsageError(f"expected 'lo, hi', got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise UsageError(f"expected two numbers, got {text!r}") from None


def read_key_values(path):
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def read_ranges(path):
    return {k: parse_pair(v) for k, v in read_key_values(path).items()}


def parse_kinds(text):
    kinds = [k.strip() for k in str(text).split(",") if k.strip()]
    for k in kinds:
        if k not in _ens.KINDS:
            raise UsageError(f"unknown ensemble kind {k!r}; expected one of {', '.join(_ens.KINDS)}")
    if not kinds:
        raise UsageError("no ensemble kinds given")
    return kinds


# -- configuration ------------------------------------------------------------------

def _merge_config(args):
    """Fill unset flags from ``--config`` and then from the built-in defaults."""
    file_values = read_key_values(args.config) if getattr(args, "config", None) else {}
    known = set(vars(args))
    for key in file_values:
        if key not in known or key in ("command", "config"):
            raise UsageError(f"unknown setting {key!r} in {args.config}")
    for key in known:
        if getattr(args, key) is None:
            if key in file_values:
                setattr(args, key, file_values[key])
            elif key in _COMMON_DEFAULTS:
                setattr(args, key, _COMMON_DEFAULTS[key])
    return args


def _resolve_model(name, n=None):
    name = str(name).strip().lower()
    if name in _models.FAMILIES:
        if n is None or len(n) != 1:
            raise UsageError(f"model {name} needs a single --n (or use {name}:<n>)")
        name = f"{name}:{n[0]}"
    elif n is not None:
        raise UsageError(f"--n only applies to the families {', '.join(_models.FAMILIES)}, not {name!r}")
    try:
        return _models.get_model(name)
    except (KeyError, ValueError) as exc:
        raise UsageError(str(exc).strip("'\"")) from None


def _resolve_mode(model, mode):
    mode = str(mode)
    big = model.family is not None and model.size_param > _eq.CLOSED_FORM_MAX_N
    if mode == "auto":
        return "numeric" if big else "analytic"
    if mode not in ("analytic", "numeric"):
        raise UsageError(f"--mode must be auto, analytic or numeric, got {mode!r}")
    if mode == "analytic" and big:
        raise UsageError(f"{model.name}: n > {_eq.CLOSED_FORM_MAX_N} requires --mode numeric")
    return mode


def _ranges_for(model, args):
    overrides = {}
    if args.range_scale is not None:
        try:
            base = ParameterRanges.scaled(model, float(args.range_scale))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        overrides.update(base.as_dict())
    if args.ranges:
        overrides.update(read_ranges(args.ranges))
    try:
        return ParameterRanges.for_model(model, overrides)
    except KeyError as exc:
        raise UsageError(str(exc).strip("'\"")) from None


def _sample(model, args):
    mode = _resolve_mode(model, args.mode)
    samples = int(args.samples) if args.samples is not None else (
        NUMERIC_SAMPLES if mode == "numeric" else ANALYTIC_SAMPLES
    )
    cfg = SamplerConfig(samples, seed=int(args.seed), mode=mode)
    branch = args.branch or model.default_branch
    if mode == "numeric" and branch != "endemic":
        raise UsageError("numeric mode only tracks the endemic branch")
    return sample_fcs(model, _ranges_for(model, args), cfg, branch=branch, workers=int(args.workers))


def _out_dir(args):
    os.makedirs(args.out, exist_ok=True)
    return args.out


# -- commands ------------------------------------------------------------------------

def cmd_run(args):
    n_list = parse_int_list(args.n) if args.n is not None else None
    model = _resolve_model(args.model or _fail("run needs --model"), n_list)
    kinds = parse_kinds(args.ensemble)
    fcs = _sample(model, args)
    rows = []
    for kind in kinds:
        ens = _ens.build_ensemble(kind, fcs, int(args.seed))
        est = stability_probability(ens)
        rows.append((model.name, kind, ens.order, len(ens), est.p_hat, est.se))
    out = _out_dir(args)
    write_csv(os.path.join(out, "table.csv"), TABLE_COLUMNS, rows)
    return rows


def cmd_scan(args):
    family = str(args.model or _fail("scan needs --model sneir or senir")).strip().lower()
    if family not in _models.FAMILIES:
        raise UsageError(f"scan needs a family model ({', '.join(_models.FAMILIES)}), got {family!r}")
    n_list = parse_int_list(args.n if args.n is not None else "1-6")
    kinds = parse_kinds(args.ensemble)
    rows = []
    for n in n_list:
        model = _models.get_model(f"{family}:{n}")
        fcs = _sample(model, args)
        for kind in kinds:
            ens = _ens.build_ensemble(kind, fcs, int(args.seed))
            s = _stats.leading_summary(ens)
            est = s.estimate
            rows.append((family, n, kind, len(ens), est.p_hat, est.se, s.median, s.q1, s.q3))
    out = _out_dir(args)
    write_csv(os.path.join(out, "scan.csv"), SCAN_COLUMNS, rows)
    return rows


def cmd_toy(args):
    out = _out_dir(args)
    a_range = parse_pair(args.a_range)
    b_range = parse_pair(args.b_range)
    grid = _toy.classify_plane(a_range, b_range, int(args.resolution))
    write_csv(os.path.join(out, "plane.csv"), ("a", "b", "stable"), grid.rows())
    for name, (a, b) in _toy.toy_loci(a_range, b_range).items():
        write_csv(os.path.join(out, f"locus_{name}.csv"), ("a", "b"), zip(a, b))
    samples = int(args.samples) if args.samples is not None else ANALYTIC_SAMPLES
    rows = []
    for name, spec in _toy.FIG2_SCENARIOS.items():
        est = _toy.gaussian2x2_stability(spec, samples, int(args.seed))
        (va, c), (_, vb) = spec.cov
        rho = c / np.sqrt(va * vb)
        rows.append((name, spec.mean[0], spec.mean[1], va, vb, rho, samples, est.p_hat, est.se))
    write_csv(os.path.join(out, "gaussian.csv"),
              ("scenario", "mean_a", "mean_b", "var_a", "var_b", "rho", "N", "p_hat", "se"), rows)
    return rows


def cmd_spectra(args):
    n_list = parse_int_list(args.n) if args.n is not None else None
    model = _resolve_model(args.model or _fail("spectra needs --model"), n_list)
    kinds = parse_kinds(args.ensemble)
    fcs = _sample(model, args)
    out = _out_dir(args)
    tag = model.name.replace(":", "")
    rows = []
    for kind in kinds:
        ens = _ens.build_ensemble(kind, fcs, int(args.seed))
        lam = _stats.spectra(ens)
        N, p = lam.shape
        write_csv(
            os.path.join(out, f"spectra_{tag}_{kind}.csv"), ("draw", "k", "re", "im"),
            ((d, k, lam[d, k].real, lam[d, k].imag) for d in range(N) for k in range(p)),
        )
        s = _stats.leading_summary(ens)
        write_csv(os.path.join(out, f"kde_{tag}_{kind}.csv"), ("x", "density"), zip(s.kde.x, s.kde.density))
        g = _stats.density_grid(lam, int(args.bins))
        nz = np.argwhere(g.counts)
        write_csv(
            os.path.join(out, f"density_{tag}_{kind}.csv"), ("re_lo", "re_hi", "im_lo", "im_hi", "count"),
            ((g.re_edges[i], g.re_edges[i + 1], g.im_edges[j], g.im_edges[j + 1], g.counts[i, j]) for i, j in nz),
        )
        rows.append((model.name, kind, p, s.estimate.p_hat, s.estimate.se, s.median, s.q1, s.q3))
    write_csv(os.path.join(out, "summary.csv"), SUMMARY_COLUMNS, rows)
    return rows


def _fail(message):
    raise UsageError(message)


# -- parser ------------------------------------------------------------------------

def _add_common(p, family=False):
    p.add_argument("--model", help="model name, e.g. lorenz, seir, sneir:3" + (" (family: sneir or senir)" if family else ""))
    p.add_argument("--branch", help="equilibrium branch (default: the model's studied branch)")
    p.add_argument("--ensemble", help="comma-separated ensemble kinds (default fcs)")
    p.add_argument("--n", help="family size(s), e.g. 3 or 1-6,20")
    p.add_argument("--samples", type=int, help="ensemble size N (default 100000 analytic, 1000 numeric)")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--mode", help="auto, analytic or numeric (default auto)")
    p.add_argument("--ranges", help="file of 'name = lo, hi' parameter ranges")
    p.add_argument("--range-scale", type=float, help="use the alternative ranges with scale i")
    p.add_argument("--out", help="output directory (default .)")
    p.add_argument("--workers", type=int, help="worker processes for sampling (default 1)")
    p.add_argument("--config", help="flat key = value settings file")


def build_parser():
    parser = _Parser(prog="rmestab", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("run", help="stability table for one model")
    _add_common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("scan", help="sweep a model family over n")
    _add_common(p, family=True)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("spectra", help="eigenvalue, KDE and density dumps")
    _add_common(p)
    p.add_argument("--bins", type=int, help="density grid bins per axis, odd (default 101)")
    p.set_defaults(func=cmd_spectra)

    p = sub.add_parser("toy", help="2x2 plane, loci and Gaussian scenarios")
    p.add_argument("--a-range", help="a range 'lo, hi' (default -3,3)")
    p.add_argument("--b-range", help="b range 'lo, hi' (default -3,3)")
    p.add_argument("--resolution", type=int, help="grid cells per axis (default 400)")
    p.add_argument("--samples", type=int, help="Gaussian scenario sample size (default 100000)")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--out", help="output directory (default .)")
    p.add_argument("--config", help="flat key = value settings file")
    p.set_defaults(func=cmd_toy)
    return parser


_TOY_DEFAULTS = {"a_range": "-3,3", "b_range": "-3,3", "resolution": 400, "bins": 101}


def _error(kind, message, code):
    sys.stderr.write(json.dumps({"error": kind, "message": str(message)}) + "\n")
    return code


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        _merge_config(args)
        for key, value in _TOY_DEFAULTS.items():
            if getattr(args, key, "") is None:
                setattr(args, key, value)
        args.func(args)
    except UsageError as exc:
        return _error("usage", exc, 2)
    except (SamplingError, _eq.DegenerateParameters, ValueError, KeyError, ArithmeticError, OSError) as exc:
        return _error(type(exc).__name__, exc, 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
