"""Merge run manifests into one summary and write two-column plot data."""
import json
import os

from .errors import ConfigError

# fields that may differ between runs without changing the results
NEUTRAL_FIELDS = ("out", "threads", "config")


class MergeError(ConfigError):
    """Two manifests for the same subcommand and kappa disagree on their configuration."""

    def __init__(self, command, kappa, fields):
        self.fields = sorted(fields)
        super().__init__(f"conflicting {command} configs at kappa={kappa}: "
                         f"fields differ: {', '.join(self.fields)}")


def load_manifest(path):
    if os.path.isdir(path):
        names = sorted(n for n in os.listdir(path) if n.startswith("manifest") and n.endswith(".json"))
        if not names:
            raise ConfigError(f"no manifest files in {path}")
        return [m for n in names for m in load_manifest(os.path.join(path, n))]
    try:
        with open(path) as fh:
            return [json.load(fh)]
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read manifest {path}: {exc}") from None


def _body(manifest):
    return {k: manifest[k] for k in ("config", "outputs", "checks", "passed")}


def _conflicts(a, b):
    keys = set(a) | set(b)
    return {k for k in keys if k not in NEUTRAL_FIELDS and a.get(k) != b.get(k)}


def emit_report(manifests):
    """Group manifests by kappa and subcommand.

    Repeated runs of one subcommand at one kappa must agree on every
    configuration field except output directory and thread count; their
    results are kept in input order.  The merged flag is the conjunction
    of the inputs.
    """
    if not manifests:
        raise ConfigError("emit_report needs at least one manifest")
    groups = {}
    for m in manifests:
        cfg = m["config"]
        kappa, cmd = str(cfg.get("kappa")), m["command"]
        slot = groups.setdefault(kappa, {}).setdefault(cmd, [])
        if slot:
            bad = _conflicts(slot[0]["config"], cfg)
            if bad:
                raise MergeError(cmd, kappa, bad)
        slot.append(_body(m))
    merged = {
        "groups": {k: {c: (runs[0] if len(runs) == 1 else runs) for c, runs in sorted(g.items())}
                   for k, g in sorted(groups.items())},
        "passed": all(m["passed"] for m in manifests),
        "failures": sorted({f"{m['command']}@kappa={m['config'].get('kappa')}:{c}"
                            for m in manifests for c in m.get("failures", [])}),
        "count": len(manifests),
    }
    return merged


def plot_series(merged):
    """Two-column (N, value) series for every fitted quantity, keyed by file stem."""
    out = {}
    for kappa, group in merged["groups"].items():
        for cmd, runs in group.items():
            for i, run in enumerate(runs if isinstance(runs, list) else [runs]):
                fits = run["outputs"].get("fits", {})
                tag = f"_{i}" if isinstance(runs, list) else ""
                for name, f in sorted(fits.items()):
                    stem = f"plot_kappa{kappa.replace('/', '-')}_{cmd}{tag}_{name}"
                    out[stem] = list(zip(f["N"], f["values"]))
    return out


def write_report(merged, out_dir):
    """Write ``report.json`` and one ``.dat`` file per fitted quantity; return the paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = [os.path.join(out_dir, "report.json")]
    with open(paths[0], "w") as fh:
        json.dump(merged, fh, indent=1, sort_keys=True)
        fh.write("\n")
    for stem, rows in plot_series(merged).items():
        path = os.path.join(out_dir, stem + ".dat")
        with open(path, "w") as fh:
            fh.write("# N value\n")
            for x, y in rows:
                fh.write(f"{x!r} {y!r}\n")
        paths.append(path)
    return paths
