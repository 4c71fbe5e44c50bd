"""Command-line front end.

Every subcommand validates its configuration before computing, writes its
artifacts (CSV/JSON) and a ``manifest_<command>.json`` into ``--out``, and
exits with 0 when every enabled check passes, 1 when a check fails, 2 on a
configuration error, 3 when a resource budget is exceeded and 4 when an
upstream solver fails.
"""
import argparse
import csv
from dataclasses import dataclass, fields
import datetime
import io
import json
import math
import os
import platform
import sys
import time

import numpy as np

from . import __version__, _backend
from .errors import BlabError, ConfigError

COMMANDS = ("scatter", "kernels", "norms", "energy", "errbounds", "exponents", "fock-verify",
            "report")
SINGLE_POINT = ("scatter", "kernels", "energy")
DEFAULT_TOLERANCE = {"norms": 0.15, "errbounds": 0.1, "fock-verify": 1e-9}
SPREAD_LIMIT = 1e2


@dataclass
class RunConfig:
    """Effective configuration of one run; every field has a flag and a config-file key."""

    command: str = ""
    potential: str = "soft-sphere"
    v0: float = 1.0
    radius: float = 1.0
    kappa: str = "0.55"
    eps: str = None
    ell: float = 0.25
    N: str = None
    sweep: str = None
    cutoff: float = None
    conv_radius: int = None
    terms: str = None
    as_printed: bool = False
    cross_check: bool = False
    modes: str = None
    m_max: int = 3
    restrict: bool = True
    manifests: str = None
    out: str = "."
    threads: int = 1
    tolerance: float = None
    config: str = None

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    # derived views, validated in :func:`validate`
    def grid(self):
        if self.N is not None and self.sweep is not None:
            raise ConfigError("set either N or sweep, not both")
        if self.N is not None:
            return [_positive(self.N, "N")]
        spec = self.sweep or ("1e4:1e4:1" if self.command in SINGLE_POINT else "1e3:1e6:7")
        parts = spec.split(":")
        if len(parts) != 3:
            raise ConfigError(f"sweep must be lo:hi:count, got {spec!r}")
        lo, hi = _positive(parts[0], "sweep lo"), _positive(parts[1], "sweep hi")
        try:
            count = int(parts[2])
        except ValueError:
            raise ConfigError(f"sweep count must be an integer, got {parts[2]!r}") from None
        if count < 1:
            raise ConfigError(f"the N grid is empty (sweep count {count})")
        if hi < lo:
            raise ConfigError(f"sweep hi {hi:g} is below lo {lo:g}")
        from .pipeline import log_grid
        return log_grid(lo, hi, count)

    def template(self):
        from .params import ScalingParams
        return ScalingParams(self.grid()[0], self.kappa, self.eps, self.ell)

    def potential_spec(self):
        from .potential import MODELS, PotentialSpec, load_csv
        if self.potential in MODELS and self.potential != "tabulated":
            return PotentialSpec(self.potential, float(self.v0), float(self.radius))
        if not os.path.isfile(self.potential):
            raise ConfigError(f"potential must be one of soft-sphere, bump or a CSV file; "
                              f"{self.potential!r} is neither")
        return load_csv(self.potential, name=os.path.basename(self.potential))

    def term_ids(self):
        from .errbounds import ERROR_TERM_IDS
        if not self.terms:
            return ERROR_TERM_IDS
        ids = tuple(t.strip() for t in self.terms.split(",") if t.strip())
        bad = [i for i in ids if i not in ERROR_TERM_IDS]
        if bad:
            raise ConfigError(f"unknown error term ids: {', '.join(bad)}")
        return ids

    def tol(self):
        return DEFAULT_TOLERANCE.get(self.command) if self.tolerance is None else self.tolerance


def _positive(text, what):
    try:
        x = float(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{what} must be a number, got {text!r}") from None
    if not (x > 0 and math.isfinite(x)):
        raise ConfigError(f"{what} must be positive and finite, got {text!r}")
    return x


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key, value):
    kind = _TYPES[key]
    if value is None or kind is str:
        return None if value is None else str(value)
    text = str(value).strip()
    try:
        if kind is bool:
            if isinstance(value, bool):
                return value
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind is int:
            return int(text)
        return float(text)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None


def read_config_file(path):
    """Flat ``key = value`` file; ``#`` starts a comment, keys use - or _."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _TYPES or key in ("command", "config"):
            raise ConfigError(f"{path}:{n}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def build_config(command, flags):
    """Defaults, then the config file, then explicit flags."""
    cfg = RunConfig(command=command)
    if flags.get("config"):
        for k, v in read_config_file(flags["config"]).items():
            setattr(cfg, k, v)
    for k, v in flags.items():
        if v is not None and k in _TYPES:
            setattr(cfg, k, _coerce(k, v))
    return cfg


def validate(cfg):
    """Check the configuration up front; raises ConfigError naming the violated constraint."""
    if cfg.threads < 1:
        raise ConfigError(f"threads must be >= 1, got {cfg.threads}")
    if cfg.tolerance is not None and not cfg.tolerance > 0:
        raise ConfigError(f"tolerance must be > 0, got {cfg.tolerance}")
    if cfg.command == "exponents":
        from .energy import exponent_budget
        exponent_budget(cfg.kappa, "0" if cfg.eps is None else cfg.eps)
        return
    if cfg.command == "report":
        if not cfg.manifests:
            raise ConfigError("report needs at least one manifest")
        return
    if cfg.command == "fock-verify":
        if cfg.modes and not os.path.isfile(cfg.modes):
            raise ConfigError(f"mode set file {cfg.modes} does not exist")
        if not 0 <= cfg.m_max <= 6:
            raise ConfigError(f"m_max must be in 0..6, got {cfg.m_max}")
        return
    template = cfg.template()
    for N in cfg.grid():
        template.with_N(N)
    cfg.potential_spec()
    if cfg.command == "errbounds":
        cfg.term_ids()
        if len(cfg.grid()) < 4:
            raise ConfigError("errbounds needs a sweep of at least 4 points")


def q(value, tail=0.0, exact=False):
    """A reported number with its truncation estimate, or flagged exact."""
    if exact:
        return {"value": value, "exact": True}
    return {"value": float(value), "tail": float(tail)}


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json(obj):
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _check(name, passed, **detail):
    return dict(detail, name=name, passed=bool(passed))


class Run:
    """Collects outputs, checks and artifact contents; writing happens once at the end."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.outputs = {}
        self.checks = []
        self.files = {}
        self.timings = {}
        self._t = time.perf_counter()

    def stage(self, name):
        now = time.perf_counter()
        self.timings[name] = round(now - self._t, 6)
        self._t = now

    def manifest(self):
        failures = [c["name"] for c in self.checks if not c["passed"]]
        return {
            "header": {
                "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
                "versions": {"blab": __version__, "python": platform.python_version(),
                             "numpy": np.__version__, "backend": _backend.NAME},
                "timings": self.timings,
            },
            "command": self.cfg.command,
            "config": self.cfg.to_dict(),
            "outputs": self.outputs,
            "checks": self.checks,
            "failures": failures,
            "passed": not failures,
        }

    def write(self):
        out = self.cfg.out
        os.makedirs(out, exist_ok=True)
        man = self.manifest()
        for name, text in sorted(self.files.items()):
            with open(os.path.join(out, name), "w", newline="") as fh:
                fh.write(text)
        with open(os.path.join(out, f"manifest_{self.cfg.command}.json"), "w") as fh:
            fh.write(_json(man))
        return man


def _points(cfg):
    template = cfg.template()
    return [template.with_N(N) for N in cfg.grid()]


def _sweep_norms(run, cfg, potential):
    """NormReports over the grid; failed points are reported, all-failed re-raises."""
    from .pipeline import norms_at, parallel_map

    params = _points(cfg)
    results = parallel_map(norms_at, [(p, potential) for p in params], cfg.threads)
    good, errors = [], {}
    for p, (status, res) in zip(params, results):
        if status == "ok":
            good.append((p, res))
        else:
            errors[repr(p.N)] = res
    run.outputs["point_errors"] = errors
    if errors:
        run.checks.append(_check("sweep_complete", False, failed=sorted(errors)))
    if not good:
        first = next(iter(errors.values()))
        err = BlabError(f"every sweep point failed; first: {first['type']}: {first['message']}")
        err.exit_code = first["exit_code"]
        raise err
    return good


def cmd_scatter(run, cfg):
    from .pipeline import parseval_check
    from .potential import ODE_RTOL, solve_neumann

    pot = cfg.potential_spec()
    points, dumps = [], []
    for params in _points(cfg):
        sol = solve_neumann(pot, params)
        pv = parseval_check(sol, params)
        row = {
            "N": params.N,
            "scattering_length": q(sol.a, ODE_RTOL * sol.a),
            "lambda": q(sol.lam, ODE_RTOL * sol.lam),
            "parseval": {"lattice_sum": q(pv.lattice_sum, pv.tail), "integral": q(pv.integral),
                         "rel_gap": q(pv.rel_gap, pv.tail / pv.integral if pv.integral else 0.0),
                         "max_norm2": q(pv.max_norm2, exact=True)},
        }
        run.checks.append(_check(f"parseval@N={params.N!r}", pv.passed(), rel_gap=pv.rel_gap,
                                 threshold=1e-6))
        if pot.model == "soft-sphere" and pot.V0 > 0:
            s = math.sqrt(pot.V0 / 2)
            exact = pot.R - math.tanh(s * pot.R) / s
            gap = abs(sol.a - exact) / exact
            row["closed_form"] = q(exact)
            run.checks.append(_check("closed_form", gap < 1e-8, rel_gap=gap, threshold=1e-8))
        points.append(row)
        dumps.append(sol.to_dict())
    run.stage("solve")
    run.outputs["points"] = points
    run.files["scatter.json"] = _json({"solutions": dumps})


def cmd_kernels(run, cfg):
    from .kernels import tau_residual
    from .pipeline import evaluate

    pot = cfg.potential_spec()
    rows, points = [], []
    for params in _points(cfg):
        t = evaluate(params, pot, cfg.cutoff).table
        unit = float(np.max(np.abs(t.gamma ** 2 - t.sigma ** 2 - 1.0)))
        L = t.low
        g = 8 * math.pi * t.a * params.N ** params.k
        res = float(np.max(tau_residual(t.p[L], t.tau[L], params, t.a))) / g if np.any(L) else 0.0
        points.append({"N": params.N, "shells": q(int(t.norm2.size), exact=True),
                       "scattering_length": q(t.a), "unitarity_defect": q(unit),
                       "tau_residual": q(res), "boundary_jump": t.jump})
        run.checks.append(_check(f"unitarity@N={params.N!r}", unit < 1e-12, value=unit,
                                 threshold=1e-12))
        run.checks.append(_check(f"tau_residual@N={params.N!r}", res < 1e-12, value=res,
                                 threshold=1e-12))
        for r in csv.reader(io.StringIO(t.to_csv())):
            if r[0] != "shell":
                rows.append([repr(params.N)] + r)
    run.stage("kernels")
    run.outputs["points"] = points
    run.files["kernels.csv"] = _csv(["N", "shell", "mult", "tag", "eta", "nu", "sigma", "gamma"],
                                    rows)


def cmd_norms(run, cfg):
    from .lattice import NORM_FIELDS
    from .pipeline import fit_norm_slopes

    good = _sweep_norms(run, cfg, cfg.potential_spec())
    run.stage("norms")
    header = good[0][1].csv_header()
    run.files["norms.csv"] = _csv(header, [r.csv_row() for _, r in good])
    run.outputs["points"] = [
        {"N": p.N, "norms": {f: q(r.values[f], r.tails[f]) for f in NORM_FIELDS}}
        for p, r in good]
    if len(good) < 3:
        return
    Ns = [p.N for p, _ in good]
    fits = fit_norm_slopes(Ns, [r for _, r in good], cfg.template(), cfg.tol())
    run.outputs["fits"] = fits
    rows = []
    for name, f in fits.items():
        bound = f.get("target", f.get("cap"))
        rows.append([name, repr(f["slope"]), repr(bound),
                     "target" if "target" in f else "cap", repr(f.get("r2")),
                     str(f.get("flagged", "")).lower(), str(f["passed"]).lower()])
        run.checks.append(_check(f"slope:{name}", f["passed"], slope=f["slope"], bound=bound))
    run.files["norm_fits.csv"] = _csv(
        ["norm", "slope", "bound", "kind", "r2", "flagged", "passed"], rows)


def cmd_energy(run, cfg):
    from .energy import TERM_NAMES, c_gn_breakdown
    from .pipeline import evaluate

    pot = cfg.potential_spec()
    points, rows, dumps = [], [], []
    for params in _points(cfg):
        pt = evaluate(params, pot, cfg.cutoff)
        rep = c_gn_breakdown(params, pt.table, pot, K=cfg.conv_radius,
                             cross_check=cfg.cross_check)
        tails = rep.tails
        total_tail = math.fsum(tails.values())
        points.append({"N": params.N, "terms": {k: q(rep.terms[k], tails[k]) for k in TERM_NAMES},
                       "c_gn": q(rep.total, total_tail), "main_term": q(rep.main),
                       "lhy_factor": q(rep.lhy_factor), "conv_radius": rep.meta["conv_radius"]})
        for k in TERM_NAMES:
            rows.append([repr(params.N), k, repr(float(rep.terms[k])), repr(float(tails[k]))])
        ok = all(math.isfinite(t) and t >= 0 for t in tails.values())
        run.checks.append(_check(f"tails@N={params.N!r}", ok))
        if cfg.cross_check:
            gap = rep.meta["convolution_rel_gap"]
            run.checks.append(_check(f"fft_vs_direct@N={params.N!r}", gap < 1e-8, rel_gap=gap,
                                     threshold=1e-8))
        dumps.append(rep.to_dict())
    run.stage("energy")
    run.outputs["points"] = points
    run.files["energy.csv"] = _csv(["N", "term", "value", "tail"], rows)
    run.files["energy.json"] = _json({"reports": dumps})


def cmd_errbounds(run, cfg):
    from .errbounds import bound_tails, sweep_fit

    template = cfg.template()
    good = _sweep_norms(run, cfg, cfg.potential_spec())
    run.stage("norms")
    if len(good) < 4:
        raise ConfigError(f"only {len(good)} sweep points succeeded")
    Ns = [p.N for p, _ in good]
    res = sweep_fit(cfg.term_ids(), Ns, template, None, cfg.tol(), norms=[r for _, r in good],
                    as_printed=cfg.as_printed)
    tails = [bound_tails(r, p, cfg.as_printed) for p, r in good]
    run.stage("fit")
    rows, fit_rows, fits = [], [], {}
    for i in res.ids:
        for j, (N, v, nv) in enumerate(zip(res.Ns, res.values[i], res.normalized(i))):
            rows.append([i, repr(float(N)), repr(float(v)), repr(float(tails[j][i])),
                         repr(float(nv))])
        f = res.fits[i]
        spread = res.spread(i)
        ok_slope, ok_spread = res.passed(i), spread < SPREAD_LIMIT
        fit_rows.append([i, repr(f.slope), repr(res.target), repr(res.tolerance), repr(f.r2),
                         str(f.flagged).lower(), repr(spread), str(ok_slope).lower(),
                         str(ok_spread).lower()])
        fits[i] = dict(f.to_dict(), target=res.target, tolerance=res.tolerance,
                       normalized_spread=spread, excluded=res.excluded.get(i, []))
        run.checks.append(_check(f"slope:{i}", ok_slope, slope=f.slope,
                                 bound=res.target + res.tolerance))
        run.checks.append(_check(f"spread:{i}", ok_spread, spread=spread, threshold=SPREAD_LIMIT))
    run.outputs["fits"] = fits
    run.outputs["values"] = {i: [q(v, tails[j][i]) for j, v in enumerate(res.values[i])]
                             for i in res.ids}
    run.outputs["target_slope"] = q(res.target)
    run.files["errbounds.csv"] = _csv(["id", "N", "value", "tail", "normalized"], rows)
    run.files["errbounds_fits.csv"] = _csv(
        ["id", "slope", "target", "tolerance", "r2", "flagged", "spread", "slope_ok",
         "spread_ok"], fit_rows)


def cmd_exponents(run, cfg):
    from .energy import exponent_budget
    from .params import default_eps

    eps = default_eps(cfg.kappa) if cfg.eps is None else cfg.eps
    b = exponent_budget(cfg.kappa, eps)
    d = b.to_dict()
    run.outputs["budget"] = {
        "exponents": {k: q(v, exact=True) for k, v in d["exponents"].items()},
        "thresholds": {k: q(v, exact=True) for k, v in d["thresholds"].items()},
        "thresholds_at_eps": {k: q(v, exact=True) for k, v in d["thresholds_at_eps"].items()},
        "old_admissible": b.old_admissible, "new_admissible": b.new_admissible,
        "boundary": b.boundary, "kappa": d["kappa"], "eps": d["eps"],
    }
    run.files["exponents.csv"] = b.to_csv()
    run.files["exponents.json"] = _json(d)
    run.stage("budget")


def cmd_fock_verify(run, cfg):
    from .fock import ModeSet, generic_mode_set, verify

    if cfg.modes:
        sets = [ModeSet.from_json(cfg.modes)]
    else:
        sets = [generic_mode_set(seed) for seed in (0, 1, 2)]
    rows, summary = [], {}
    for k, ms in enumerate(sets):
        rep = verify(ms, cfg.m_max, rtol=cfg.tol(), restrict=cfg.restrict)
        key = f"{k}_{ms.name}"
        run.files[f"fock_{key}.json"] = _json(rep)
        for ident, v in rep["identities"].items():
            rows.append([key, ident, repr(v["matrix"]), repr(v["series"]), repr(v["abs_gap"]),
                         repr(v["rel_gap"]), str(v["passed"]).lower()])
            run.checks.append(_check(f"{key}:{ident}", v["passed"], rel_gap=v["rel_gap"]))
        summary[key] = {"size": rep["size"], "pairs": rep["pairs"], "m_max": rep["m_max"],
                        "restricted": rep["restricted"],
                        "identities": {i: {"matrix": q(v["matrix"]), "series": q(v["series"]),
                                           "passed": v["passed"]}
                                       for i, v in rep["identities"].items()}}
        run.stage(f"verify:{key}")
    run.outputs["sets"] = summary
    run.files["fock_summary.csv"] = _csv(
        ["set", "identity", "matrix", "series", "abs_gap", "rel_gap", "passed"], rows)


def cmd_report(run, cfg):
    from .report import emit_report, load_manifest, plot_series

    paths = [p.strip() for p in cfg.manifests.split(",") if p.strip()]
    merged = emit_report([m for p in paths for m in load_manifest(p)])
    run.files["report.json"] = _json(merged)
    for stem, pts in plot_series(merged).items():
        run.files[stem + ".dat"] = "# N value\n" + "".join(f"{x!r} {y!r}\n" for x, y in pts)
    run.outputs["merged_passed"] = merged["passed"]
    run.outputs["count"] = q(merged["count"], exact=True)
    run.checks.append(_check("inputs_passed", merged["passed"], failures=merged["failures"]))
    run.stage("merge")


HANDLERS = {"scatter": cmd_scatter, "kernels": cmd_kernels, "norms": cmd_norms,
            "energy": cmd_energy, "errbounds": cmd_errbounds, "exponents": cmd_exponents,
            "fock-verify": cmd_fock_verify, "report": cmd_report}


def run_subcommand(name, cfg, write=True):
    """Validate, compute and (optionally) write; returns the manifest dict."""
    if name not in HANDLERS:
        raise ConfigError(f"unknown subcommand {name!r}")
    cfg.command = name
    validate(cfg)
    run = Run(cfg)
    HANDLERS[name](run, cfg)
    return run.write() if write else run.manifest()


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    a = common.add_argument
    a("--config", help="flat key=value file; flags override its values")
    a("--potential", help="soft-sphere, bump, or a two-column r,V CSV file")
    a("--v0", type=float)
    a("--radius", type=float)
    a("--kappa", help="exponent kappa, decimal or p/q")
    a("--eps", help="exponent eps, decimal or p/q")
    a("--ell", type=float)
    a("--N", dest="N", help="single particle number")
    a("--sweep", help="log-spaced N grid lo:hi:count")
    a("--cutoff", type=float, help="momentum cutoff override")
    a("--conv-radius", dest="conv_radius", type=int, help="support radius of the FFT double sum")
    a("--terms", help="comma-separated error term ids")
    a("--as-printed", dest="as_printed", action="store_const", const=True)
    a("--cross-check", dest="cross_check", action="store_const", const=True,
      help="also evaluate the double sum directly")
    a("--modes", help="mode set JSON file for fock-verify")
    a("--m-max", dest="m_max", type=int)
    a("--no-restrict", dest="restrict", action="store_const", const=False,
      help="drop the coincidence restrictions (regression check)")
    a("--out", help="output directory")
    a("--threads", type=int)
    a("--tolerance", type=float)
    p = argparse.ArgumentParser(prog="blab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "report":
            sp.add_argument("inputs", nargs="*", help="manifest files or directories")
    return p


def main(argv=None):
    args = vars(_parser().parse_args(argv))
    name = args.pop("command")
    inputs = args.pop("inputs", None)
    try:
        if inputs:
            args["manifests"] = ",".join(inputs)
        cfg = build_config(name, args)
        cfg.command = name
        validate(cfg)
        print(_json({"effective_config": cfg.to_dict()}), end="")
        man = run_subcommand(name, cfg)
    except BlabError as exc:
        print(_json({"error": type(exc).__name__, "message": str(exc),
                     "exit_code": exc.exit_code}), end="", file=sys.stderr)
        return exc.exit_code
    if name == "exponents":
        with open(os.path.join(cfg.out, "exponents.csv")) as fh:
            sys.stdout.write(fh.read())
    print(_json({"passed": man["passed"], "failures": man["failures"]}), end="")
    return 0 if man["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
