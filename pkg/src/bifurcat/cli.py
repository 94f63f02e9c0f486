"""Command-line interface.

    bifurcat <command> --scenario FILE [--out DIR] [--format csv|json] [--seed N]

Scenario files are YAML documents with a ``params`` mapping and optional
per-command sections; see README.md.  Exit status: 0 success, 1 malformed
input, 2 numerical failure (details in ``error.json``).
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from pathlib import Path

import click
import numpy as np
import yaml

from . import svg
from .continuation import (Branch, ContinuationError, CycleNotFound, StepControl,
                           continue_equilibrium, continue_hopf, cycle_family_sweep,
                           find_limit_cycle, hopf_point_in)
from .equilibria import Kind, all_equilibria, classify_region, coexistence_equilibria, lift
from .hopf import (PoleError, check_hopf_theorem, exact_transversality, hopf_alphas,
                   hopf_quadratic, kappa2_hat, nilpotent_kappa2, printed_transversality)
from .integrator import IntegrationConfig, integrate
from .lyapunov import NotAHopfPoint, criticality_verdict, hopf_normal_form
from .model import PARAM_NAMES, ModelParams, SingularStateError, jacobian
from .stability import char_coeffs_at, classify_equilibrium, coeffs_from_matrix, eigenvalues

COMMANDS = ("simulate", "equilibria", "stability", "hopf", "lyapunov", "continue-eq",
            "continue-hopf", "cycles", "figure")


class ScenarioError(ValueError):
    pass


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return float(format(f, ".17g")) if math.isfinite(f) else None
    if isinstance(v, complex):
        return [_jsonable(v.real), _jsonable(v.imag)]
    return v if v is None or isinstance(v, str) else str(v)


def dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=False) + "\n"


def dump_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# scenario


def load_scenario(path: Path) -> dict:
    try:
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise ScenarioError(f"cannot read scenario: {exc}")
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a mapping")
    if "params" not in doc or not isinstance(doc["params"], dict):
        raise ScenarioError("scenario needs a 'params' mapping")
    unknown = set(doc["params"]) - set(PARAM_NAMES)
    if unknown:
        raise ScenarioError(f"unknown parameter names: {sorted(unknown)}")
    missing = {"r1", "r2", "alpha", "kappa1", "kappa2"} - set(doc["params"])
    if missing:
        raise ScenarioError(f"missing parameters: {sorted(missing)}")
    try:
        doc["_params"] = ModelParams(**doc["params"])
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"schema violation: {exc}")
    return doc


def _section(doc, name) -> dict:
    sec = doc.get(name, {}) or {}
    if not isinstance(sec, dict):
        raise ScenarioError(f"section '{name}' must be a mapping")
    return sec


def _name(sec, key, default=None) -> str:
    v = sec.get(key, default)
    if v not in PARAM_NAMES:
        raise ScenarioError(f"'{key}' must be one of {PARAM_NAMES}, got {v!r}")
    return v


def _pair(sec, key, default=None):
    v = sec.get(key, default)
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        raise ScenarioError(f"'{key}' must be a two-element list")
    try:
        lo, hi = float(v[0]), float(v[1])
    except (TypeError, ValueError):
        raise ScenarioError(f"'{key}' must contain numbers")
    if not lo < hi:
        raise ScenarioError(f"'{key}' must be increasing")
    return lo, hi


def _step(sec, defaults: StepControl) -> StepControl:
    try:
        return StepControl(float(sec.get("h0", defaults.h0)), float(sec.get("hmin", defaults.hmin)),
                           float(sec.get("hmax", defaults.hmax)))
    except (TypeError, ValueError):
        raise ScenarioError("step sizes must be numbers")


# ---------------------------------------------------------------------------
# commands; each returns {filename: text}


def cmd_simulate(doc, p, fmt_):
    sec = _section(doc, "simulate")
    t_end = float(sec.get("t_end", 100.0))
    if "initial" in sec:
        s0 = np.array(sec["initial"], dtype=float)
        if s0.shape != (3,):
            raise ScenarioError("'initial' must have three components")
    else:
        eqs = coexistence_equilibria(p)
        if not eqs:
            raise ScenarioError("no coexistence equilibrium; give 'initial'")
        s0 = eqs[0].x * (1.0 + float(sec.get("perturbation", 1e-2)))
    n = int(sec.get("samples", 1001))
    cfg = IntegrationConfig((0.0, t_end), rtol=float(sec.get("rtol", 1e-9)),
                            atol=float(sec.get("atol", 1e-11)))
    tr = integrate(p, s0, cfg)
    if not tr.ok:
        raise NumericalFailure(f"integration stopped: {tr.status} {tr.message}",
                               {"t_last": tr.t[-1], "state_last": tr.y[-1]})
    ts = np.linspace(0.0, t_end, n)
    ys = tr(ts).T
    rows = [(t, *y) for t, y in zip(ts, ys)]
    return _table("trajectory", ["t", "E1", "E2", "M"], rows, fmt_)


def _table(stem, header, rows, fmt_):
    if fmt_ == "json":
        return {f"{stem}.json": dump_json([dict(zip(header, r)) for r in rows])}
    return {f"{stem}.csv": dump_csv(header, rows)}


def cmd_equilibria(doc, p, fmt_):
    rows = [(e.label, e.kind.value, e.multiplicity, *e.state) for e in all_equilibria(p)]
    out = _table("equilibria", ["label", "kind", "multiplicity", "E1", "E2", "M"], rows, fmt_)
    out["region.json"] = dump_json({"region": classify_region(p).value,
                                    "kappa1": p.kappa1, "kappa2": p.kappa2})
    return out


def cmd_stability(doc, p, fmt_):
    rows = []
    for e in all_equilibria(p):
        v = classify_equilibrium(p, e)
        ev = list(eigenvalues(p, e))
        cc = char_coeffs_at(p, e.E2) if e.kind is Kind.COEXISTENCE else \
            coeffs_from_matrix(jacobian(p, e.x))
        rows.append((e.label, *e.state, cc.A0, cc.A1, cc.A2,
                     *[c for z in ev for c in (z.real, z.imag)],
                     v.label.value, v.sub_label.value if v.sub_label else ""))
    header = ["label", "E1", "E2", "M", "A0", "A1", "A2", "eig1_re", "eig1_im", "eig2_re",
              "eig2_im", "eig3_re", "eig3_im", "verdict", "sub_label"]
    return _table("stability", header, rows, fmt_)


def cmd_hopf(doc, p, fmt_):
    recs = []
    reports = {r.label: r for r in check_hopf_theorem(p)}
    for e in coexistence_equilibria(p):
        q = hopf_quadratic(p, e.E2)
        roots = hopf_alphas(q)
        rec = {"label": e.label, "E2": e.E2, "h0": q.h0, "h1": q.h1, "h2": q.h2,
               "delta_h": q.delta_h, "printed_h0": q.printed[0], "printed_h1": q.printed[1],
               "printed_h2": q.printed[2], "alpha_minus": roots.alpha_minus,
               "alpha_plus": roots.alpha_plus, "alpha_star": roots.alpha_star,
               "H_at_alpha": q(p.alpha)}
        try:
            rec["kappa2_hat"] = kappa2_hat(p, e.E2)
        except PoleError:
            rec["kappa2_hat"] = None
        try:
            kt, ks = nilpotent_kappa2(p, e.E2)
            rec["kappa2_tilde"], rec["kappa2_s123"] = kt, ks
        except PoleError as exc:
            rec["kappa2_tilde"] = rec["kappa2_s123"] = None
            rec["pole"] = str(exc)
        rt = roots.admissible
        if rt:
            a = min(rt, key=lambda r: abs(r - p.alpha))
            rec["transversality"] = exact_transversality(p, e.E2, a)
            rec["printed_transversality"] = printed_transversality(p, e.E2, a)
        rep = reports.get(e.label)
        if rep is not None:
            rec["certificate"] = rep.certificate
            rec["notes"] = rep.notes
        recs.append(rec)
    return {"hopf.json": dump_json(recs)}


def cmd_lyapunov(doc, p, fmt_):
    recs = []
    for e in coexistence_equilibria(p):
        try:
            nf = hopf_normal_form(p, e)
        except NotAHopfPoint:
            continue
        recs.append({"label": e.label, "omega": nf.omega, "l1": nf.l1, "l2": nf.l2,
                     "re_c1": nf.c1.real, "re_c2": nf.c2.real,
                     "verdict": str(criticality_verdict(nf.l1, nf.l2))})
    if not recs:
        raise NumericalFailure("no equilibrium with a purely imaginary pair", {})
    return {"lyapunov.json": dump_json(recs)}


BRANCH_TAIL = ["E1", "E2", "M", "A0", "A1", "A2", "tau_LP", "tau_H", "l1"]


def _branch_outputs(br: Branch, fmt_, stem="branch"):
    header = ["s", *br.free_params, *BRANCH_TAIL]
    rows = [(pt.s, *pt.values, *pt.x, pt.coeffs.A0, pt.coeffs.A1, pt.coeffs.A2, pt.tau_lp,
             pt.tau_h, pt.l1) for pt in br.points]
    out = _table(stem, header, rows, fmt_)
    out["events.json"] = dump_json([e.to_json() for e in br.events])
    return out


def _eq_branch(doc, p):
    sec = _section(doc, "continuation")
    free = _name(sec, "free", "kappa1")
    bounds = _pair(sec, "range")
    eqs = coexistence_equilibria(p)
    idx = int(sec.get("start_index", 0))
    if not eqs or idx >= len(eqs):
        raise ScenarioError("no coexistence equilibrium to start from")
    return continue_equilibrium(p, eqs[idx], free, bounds, _step(sec, StepControl()),
                                int(sec.get("direction", 1)))


def cmd_continue_eq(doc, p, fmt_):
    return _branch_outputs(_eq_branch(doc, p), fmt_)


def _hopf_start(p):
    """Equilibrium and alpha where the scenario's equilibria are Hopf points
    (E2 does not depend on alpha)."""
    best = None
    for e in coexistence_equilibria(p):
        roots = hopf_alphas(hopf_quadratic(p, e.E2)).admissible
        for a in roots:
            q = p.with_(alpha=a)
            if char_coeffs_at(q, e.E2).A1 > 0:
                if best is None or abs(a - p.alpha) < abs(best[0] - p.alpha):
                    best = (a, e.E2)
    if best is None:
        raise NumericalFailure("no Hopf point in alpha at the scenario's equilibria", {})
    a, e2 = best
    q = p.with_(alpha=a)
    return q, lift(q, e2)


def _hopf_branches(doc, p):
    sec = _section(doc, "hopf_curve")
    free = sec.get("free", ["alpha", "kappa1"])
    if not (isinstance(free, list) and len(free) == 2 and all(f in PARAM_NAMES for f in free)):
        raise ScenarioError("'hopf_curve.free' must list two parameter names")
    bounds = sec.get("bounds", {})
    try:
        bounds = {n: _pair(bounds, n) for n in free}
    except ScenarioError:
        raise ScenarioError("'hopf_curve.bounds' needs a range for each free parameter")
    q, x = _hopf_start(p)
    step = _step(sec, StepControl(h0=0.02, hmax=0.2))
    both = []
    for d in (1, -1):
        both.append(continue_hopf(q, x, tuple(free), bounds, step, d,
                                  int(sec.get("max_points", 600))))
    return both


def cmd_continue_hopf(doc, p, fmt_):
    fwd, bwd = _hopf_branches(doc, p)
    # one branch ordered from the backward end through the start
    merged = Branch(fwd.free_params)
    back = list(reversed(bwd.points))
    for pt in back:
        pt.s = -pt.s
    merged.points = back + fwd.points[1:]
    for e in bwd.events:
        e.s = -e.s
    merged.events = sorted(bwd.events + fwd.events, key=lambda e: e.s)
    merged.terminated = f"{bwd.terminated}/{fwd.terminated}"
    return _branch_outputs(merged, fmt_)


def cmd_cycles(doc, p, fmt_):
    sec = _section(doc, "cycles")
    free = _name(sec, "free", "kappa1")
    search = _pair(sec, "search_range")
    offset = float(sec.get("offset", -1e-3))
    h = hopf_point_in(p, free, search, direction=int(sec.get("direction", 1)))
    cyc = find_limit_cycle(p, h, offset, free)
    out = {}
    rows = [(cyc.params.get(free), cyc.period, cyc.amplitude, *cyc.anchor,
             *[c for z in cyc.floquet for c in (complex(z).real, complex(z).imag)],
             cyc.stable, cyc.closure)]
    header = [free, "period", "amplitude", "E1", "E2", "M", "mu1_re", "mu1_im", "mu2_re",
              "mu2_im", "mu3_re", "mu3_im", "stable", "closure"]
    events = []
    if "sweep_range" in sec:
        lo, hi = _pair(sec, "sweep_range")
        fam = cycle_family_sweep(p, cyc, free, (lo, hi),
                                 _step(sec, StepControl(h0=1e-3, hmin=1e-9, hmax=0.05)),
                                 int(sec.get("sweep_direction", 1 if offset > 0 else -1)),
                                 int(sec.get("max_points", 200)),
                                 stop_after_lpc=sec.get("stop_after_lpc"))
        for fp in fam.points[1:]:
            mu = list(fp.multipliers)
            k = int(np.argmin(np.abs(np.array(mu) - 1.0)))
            others = [m for i, m in enumerate(mu) if i != k]
            rows.append((fp.value, fp.period, fp.amplitude, *fp.anchor,
                         *[c for z in mu for c in (complex(z).real, complex(z).imag)],
                         bool(all(abs(m) < 1 for m in others)), math.nan))
        events = [e.to_json() for e in fam.events]
    out.update(_table("cycles", header, rows, fmt_))
    out["events.json"] = dump_json(events)
    return out


def cmd_figure(doc, p, fmt_):
    sec = _section(doc, "figure")
    kind = sec.get("branch", "equilibrium")
    if kind == "equilibrium":
        br = _eq_branch(doc, p)
        x_name = br.free_params[0]
        y_name = sec.get("y", "E2")
        branches = [br]
    elif kind == "hopf":
        branches = _hopf_branches(doc, p)
        x_name, y_name = branches[0].free_params
    else:
        raise ScenarioError("'figure.branch' must be 'equilibrium' or 'hopf'")
    cols = {"E1": 0, "E2": 1, "M": 2}

    def coord(pt, name, names):
        if name in names:
            return pt.values[names.index(name)]
        if name in cols:
            return float(pt.x[cols[name]])
        raise ScenarioError(f"cannot plot {name!r}")

    series, events = [], []
    for k, br in enumerate(branches):
        names = list(br.free_params)
        series.append((f"branch {k}", [coord(pt, x_name, names) for pt in br.points],
                       [coord(pt, y_name, names) for pt in br.points]))
        for e in br.events:
            loc = e.to_json()["location"]
            events.append((e.kind, loc.get(x_name), loc.get(y_name)))
    events = [e for e in events if e[1] is not None and e[2] is not None]
    text = svg.render(series, events, x_name, y_name, sec.get("title", ""))
    out = {"figure.svg": text}
    for k, br in enumerate(branches):
        out.update({f"events_{k}.json": dump_json([e.to_json() for e in br.events])})
    return out


HANDLERS = {"simulate": cmd_simulate, "equilibria": cmd_equilibria, "stability": cmd_stability,
            "hopf": cmd_hopf, "lyapunov": cmd_lyapunov, "continue-eq": cmd_continue_eq,
            "continue-hopf": cmd_continue_hopf, "cycles": cmd_cycles, "figure": cmd_figure}


class NumericalFailure(RuntimeError):
    def __init__(self, msg, log):
        super().__init__(msg)
        self.log = log


def run(command: str, scenario: Path, out: Path, fmt_: str = "csv", seed: int = 0) -> int:
    """Execute one command; returns the exit status."""
    out = Path(out)
    try:
        doc = load_scenario(scenario)
        if command not in HANDLERS:
            raise ScenarioError(f"unknown command {command!r}")
        p = doc["_params"]
        np.random.seed(seed % 2 ** 32)
        files = HANDLERS[command](doc, p, fmt_)
    except ScenarioError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except (NumericalFailure, ContinuationError, CycleNotFound, NotAHopfPoint,
            SingularStateError, np.linalg.LinAlgError, PoleError) as exc:
        out.mkdir(parents=True, exist_ok=True)
        log = getattr(exc, "log", {})
        (out / "error.json").write_text(dump_json({"command": command, "error": str(exc),
                                                   "type": type(exc).__name__, "log": log}))
        click.echo(f"numerical failure: {exc}", err=True)
        return 2
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text, encoding="utf-8")
        click.echo(str(out / name))
    return 0


@click.command(context_settings={"help_option_names": ["-h", "--help"]})
@click.argument("command", type=click.Choice(COMMANDS))
@click.option("--scenario", required=True, type=click.Path(dir_okay=False, path_type=Path),
              help="YAML scenario file.")
@click.option("--out", "out", default=".", type=click.Path(file_okay=False, path_type=Path),
              help="Output directory.")
@click.option("--format", "fmt_", default="csv", type=click.Choice(["csv", "json"]),
              help="Format for tabular outputs.")
@click.option("--seed", default=0, type=click.IntRange(0, 2 ** 64 - 1),
              help="Seed for any randomised step (outputs are deterministic).")
def main(command, scenario, out, fmt_, seed):
    """Bifurcation analysis of the leafhopper / mite model."""
    sys.exit(run(command, scenario, out, fmt_, seed))


if __name__ == "__main__":  # pragma: no cover
    main()
