"""Command-line front end.

Every subcommand takes ``key=value`` settings, either on the command line or
from a file given with ``--config`` (command-line pairs win). Results go to
CSV files whose ``#`` header lines echo the resolved settings, and a short
report is printed to stdout.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 reference mismatch.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import evolution, perturbative, spectrum, static, tails
from .radial import NonFiniteError, RadialGrid, TimeSeries
from .reference import REFERENCES

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_MISMATCH = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


# -- configuration ---------------------------------------------------------------

def parse_pairs(items, source="command line"):
    out = {}
    for item in items:
        line = item.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}: expected key=value, got {item!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}: empty key in {item!r}")
        out[key] = value
    return out


def read_config_file(path):
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {path} not found")
    return parse_pairs(p.read_text(encoding="utf-8").splitlines(), source=str(p))


@dataclass
class RunConfig:
    command: str
    params: dict
    used: dict = field(default_factory=dict)

    def _raw(self, key, default):
        if key in self.params:
            return self.params[key]
        if default is _REQUIRED:
            raise ConfigError(f"missing required key {key!r} for {self.command}")
        return default

    def get(self, key, default=None, kind=str):
        raw = self._raw(key, default)
        if raw is None:
            self.used[key] = None
            return None
        try:
            value = kind(raw) if isinstance(raw, str) else raw
        except ValueError as exc:
            raise ConfigError(f"key {key!r}: cannot parse {raw!r}") from exc
        self.used[key] = value
        return value

    def number(self, key, default=None, positive=False):
        value = self.get(key, default, float)
        if value is not None and positive and not value > 0:
            raise ConfigError(f"key {key!r} must be positive, got {value}")
        return value

    def pair(self, key, default=None):
        raw = self._raw(key, default)
        if raw is None:
            self.used[key] = None
            return None
        if isinstance(raw, str):
            try:
                parts = tuple(float(x) for x in raw.split(","))
            except ValueError as exc:
                raise ConfigError(f"key {key!r}: expected two numbers, got {raw!r}") from exc
        else:
            parts = tuple(raw)
        if len(parts) != 2:
            raise ConfigError(f"key {key!r}: expected two comma-separated numbers, got {raw!r}")
        self.used[key] = parts
        return parts

    def numbers(self, key, default=""):
        raw = self._raw(key, default)
        if isinstance(raw, str):
            try:
                vals = tuple(float(x) for x in raw.split(",") if x.strip())
            except ValueError as exc:
                raise ConfigError(f"key {key!r}: expected numbers, got {raw!r}") from exc
        else:
            vals = tuple(raw)
        self.used[key] = vals
        return vals

    def check_unused(self):
        extra = sorted(set(self.params) - set(self.used))
        if extra:
            raise ConfigError(f"unknown key(s) for {self.command}: {', '.join(extra)}")


_REQUIRED = object()


@dataclass
class RunReport:
    command: str
    params: dict
    headline: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    files: list = field(default_factory=list)
    wall_time: float = 0.0

    def lines(self):
        yield f"command={self.command}"
        for k, v in self.params.items():
            yield f"param.{k}={_fmt(v)}"
        for k, v in self.headline.items():
            yield f"{k}={_fmt(v)}"
        for k, ok in self.verdicts.items():
            lo, hi = REFERENCES[k].band()
            yield f"check.{k}={'PASS' if ok else 'FAIL'} [{lo:.6g}, {hi:.6g}]"
        for f in self.files:
            yield f"file={f}"
        yield f"wall_time_s={self.wall_time:.3f}"


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, complex):
        return f"{v.real:.17g}{v.imag:+.17g}j"
    if isinstance(v, tuple):
        return ",".join(_fmt(x) for x in v)
    return str(v)


# -- output ---------------------------------------------------------------------------

def write_csv(path: Path, columns: dict, config: RunConfig, extra_header=()):
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    data = np.column_stack([np.asarray(columns[n], dtype=float) for n in names])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# command={config.command}\n")
        for k, v in config.used.items():
            fh.write(f"# {k}={_fmt(v)}\n")
        for line in extra_header:
            fh.write(f"# {line}\n")
        fh.write(",".join(names) + "\n")
        for row in data:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")
    return str(path)


def read_csv(path):
    """Read a CSV written by :func:`write_csv`; returns (columns dict, header dict)."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"input file {path} not found")
    header, names, rows = {}, None, []
    for line in p.read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                k, v = body.split("=", 1)
                header[k.strip()] = v.strip()
        elif names is None:
            names = line.split(",")
        elif line.strip():
            rows.append([float(x) for x in line.split(",")])
    if names is None:
        raise ConfigError(f"{path} has no column header")
    arr = np.array(rows, dtype=float).reshape(-1, len(names))
    return {n: arr[:, i] for i, n in enumerate(names)}, header


def _series_from_csv(path):
    cols, header = read_csv(path)
    if "t" not in cols or "value" not in cols:
        raise ConfigError(f"{path} needs columns t,value")
    return TimeSeries(cols["t"], cols["value"], Path(path).stem), header


def _out_dir(cfg):
    return Path(cfg.get("out", f"runs/{cfg.command}"))


# -- shared pieces -------------------------------------------------------------------------

def _profile(cfg):
    return static.solve_skyrmion(tolerance=cfg.number("tolerance", 1e-8, positive=True))


def _observer_name(spec: evolution.ObserverSpec):
    return spec.name.replace("@", "_at_").replace("-", "minus")


def _run_evolution(cfg: RunConfig, out: Path, report: RunReport):
    family = cfg.get("family", "degree1_perturbed_skyrmion")
    if family not in evolution.FAMILIES or family == "custom":
        raise ConfigError(f"key 'family': choose one of {evolution.FAMILIES[:-1]}")
    h = cfg.number("h", 0.01, positive=True)
    t_max = cfg.number("t_max", 100.0, positive=True)
    dt = cfg.number("dt", 0.5 * h, positive=True)
    A = cfg.number("A", evolution.DEFAULT_AMPLITUDE[family])
    rho = cfg.number("rho", 3.0, positive=True)
    cadence = cfg.number("cadence", 0.1, positive=True)
    causality = cfg.get("causality", "strict")
    try:
        observers = [evolution.ObserverSpec.parse(s, cadence)
                     for s in cfg.get("observers", "P@10").split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"key 'observers': {exc}") from exc
    snapshots = cfg.numbers("snapshots", "")
    profile = _profile(cfg) if family.startswith("degree1") else None
    # support radius from a probe grid, then size the real grid for causal isolation
    probe = RadialGrid.from_extent(60.0, h)
    support = evolution.support_radius(evolution.make_initial_data(family, probe, profile, A=A, rho=rho))
    r_obs = max(o.radius for o in observers)
    default_R = {"strict": t_max + r_obs + support, "reflection": 0.5 * (t_max + r_obs + support) + 5.0,
                 "off": max(60.0, r_obs + support)}.get(causality)
    if default_R is None:
        raise ConfigError(f"key 'causality': expected strict, reflection or off, got {causality!r}")
    R_max = cfg.number("R_max", np.ceil(default_R + 2.0), positive=True)
    grid = RadialGrid.from_extent(R_max, h)
    state = evolution.make_initial_data(family, grid, profile, A=A, rho=rho)
    attractor = None
    kind = cfg.get("attractor", "discrete")
    if kind not in ("discrete", "continuum"):
        raise ConfigError(f"key 'attractor': expected discrete or continuum, got {kind!r}")
    if state.degree == 1:
        # the continuum choice evolves the sampled profile as given
        attractor = evolution.discrete_attractor(profile, grid) if kind == "discrete" else state.background
    try:
        result = evolution.evolve(state, t_max, dt, observers, attractor=attractor,
                                  snapshot_times=snapshots, causality=causality, support=support,
                                  rebase=kind == "discrete")
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    for spec in observers:
        s = result.series[spec.name]
        report.files.append(write_csv(out / f"observer_{_observer_name(spec)}.csv",
                                      {"t": s.t, "value": s.values}, cfg,
                                      [f"observer={spec.name}", f"degree={state.degree}"]))
    e = result.energy
    report.files.append(write_csv(out / "energy.csv", {"t": e["t"], "E_sigma": e["E_sigma"],
                                                       "E_S": e["E_S"], "E_total": e["E_total"]}, cfg))
    bg = result.final.background.values if result.final.background is not None else np.zeros(grid.n)
    for t_snap, F, P in result.snapshots:
        report.files.append(write_csv(out / f"snapshot_t{t_snap:g}.csv",
                                      {"r": grid.r, "F": F, "P": P, "S": bg}, cfg, [f"t={t_snap:.17g}"]))
    E = e["E_total"]
    report.headline.update(grid_points=grid.n, R_max=grid.r_max, E_initial=float(E[0]),
                           energy_drift=float(np.max(np.abs(E - E[0])) / abs(E[0])) if E[0] else 0.0)
    return result, state


# -- subcommands --------------------------------------------------------------------------

def cmd_static(cfg, report):
    out = _out_dir(cfg)
    h = cfg.number("h", 0.01, positive=True)
    r_max = cfg.number("r_max", 60.0, positive=True)
    prof = static.solve_skyrmion(tolerance=cfg.number("tolerance", 1e-8, positive=True), h=h, r_max=r_max)
    report.headline.update(b=prof.b, c=prof.c)
    report.verdicts["skyrmion_slope_b"] = REFERENCES["skyrmion_slope_b"].accepts(prof.b)
    report.verdicts["skyrmion_far_c"] = REFERENCES["skyrmion_far_c"].accepts(prof.c)
    report.files.append(write_csv(out / "skyrmion.csv", {"r": prof.grid.r, "S": prof.S.values,
                                                         "dS": prof.dS.values}, cfg,
                                  [f"b={prof.b:.17g}", f"c={prof.c:.17g}"]))


def cmd_qnm(cfg, report):
    out = _out_dir(cfg)
    prof = _profile(cfg)
    pot = spectrum.effective_potential(prof)
    guess = cfg.pair("guess", "0.6,0.3")
    mode = spectrum.find_qnm(pot, guess=guess, r0=cfg.number("r0", 8.0, positive=True),
                             R=cfg.number("R", 40.0, positive=True),
                             tolerance=cfg.number("qnm_tolerance", 1e-10, positive=True),
                             seed=cfg.get("seed", "series"))
    report.headline.update(Omega=mode.Omega, Gamma=mode.Gamma, k=mode.k, residual=abs(mode.residual),
                           iterations=mode.iterations)
    report.verdicts["qnm_Omega"] = REFERENCES["qnm_Omega"].accepts(mode.Omega)
    report.verdicts["qnm_Gamma"] = REFERENCES["qnm_Gamma"].accepts(mode.Gamma)
    report.files.append(write_csv(out / "qnm.csv", {"Omega": [mode.Omega], "Gamma": [mode.Gamma],
                                                    "residual": [abs(mode.residual)]}, cfg))
    # robustness sweep over the matching point and the seed radius
    try:
        sweep = [tuple(float(x) for x in item.split(":")) for item in
                 cfg.get("sweep", "6:40,8:40,10:60").split(",") if item.strip()]
    except ValueError as exc:
        raise ConfigError(f"key 'sweep': expected r0:R pairs, {exc}") from exc
    if any(len(p) != 2 for p in sweep):
        raise ConfigError("key 'sweep': expected r0:R pairs separated by commas")
    rows = {"r0": [], "R": [], "Omega": [], "Gamma": [], "residual": []}
    for r0, R in sweep:
        m = spectrum.find_qnm(pot, guess=(mode.Omega, mode.Gamma), r0=r0, R=R,
                              tolerance=cfg.number("qnm_tolerance", 1e-10, positive=True),
                              seed=cfg.get("seed", "series"))
        for key, val in zip(rows, (r0, R, m.Omega, m.Gamma, abs(m.residual))):
            rows[key].append(val)
    if sweep:
        spread = max(np.ptp(rows["Omega"]), np.ptp(rows["Gamma"]))
        report.headline["sweep_spread"] = float(spread)
        report.files.append(write_csv(out / "qnm_sweep.csv", rows, cfg))


def cmd_evolve(cfg, report):
    _run_evolution(cfg, _out_dir(cfg), report)


def cmd_ringdown_fit(cfg, report):
    series, _ = _series_from_csv(cfg.get("input", _REQUIRED))
    fit = tails.fit_ringdown(series, cfg.pair("window", "20,60"))
    report.headline.update(A=fit.A, Gamma=fit.Gamma, Omega=fit.Omega, delta=fit.delta,
                           window=fit.window, residual=fit.residual)
    report.verdicts["ringdown_Omega"] = REFERENCES["ringdown_Omega"].accepts(fit.Omega)
    report.verdicts["ringdown_Gamma"] = REFERENCES["ringdown_Gamma"].accepts(fit.Gamma)
    report.files.append(write_csv(_out_dir(cfg) / "ringdown_fit.csv",
                                  {"A": [fit.A], "Gamma": [fit.Gamma], "Omega": [fit.Omega],
                                   "delta": [fit.delta], "t1": [fit.window[0]], "t2": [fit.window[1]],
                                   "residual": [fit.residual]}, cfg))


def cmd_tail_fit(cfg, report):
    series, _ = _series_from_csv(cfg.get("input", _REQUIRED))
    fit = tails.fit_power_law(series, cfg.pair("window", None), reference=cfg.number("floor_reference"))
    report.headline.update(a=fit.a, b=fit.b, c=fit.c, window=fit.window, residual=fit.residual)
    report.files.append(write_csv(_out_dir(cfg) / "tail_fit.csv",
                                  {"a": [fit.a], "b": [fit.b], "c": [fit.c], "t1": [fit.window[0]],
                                   "t2": [fit.window[1]], "residual": [fit.residual]}, cfg))


def _generating_function(cfg):
    family = cfg.get("family", "degree0_gaussian_cubed")
    if family != "degree0_gaussian_cubed":
        raise ConfigError("key 'family': the perturbative tail covers degree0_gaussian_cubed only")
    A = cfg.number("A", 1.0)
    return perturbative.invert_initial_data(perturbative.gaussian_cubed(A)), A


def cmd_tail_predict(cfg, report):
    gen, A = _generating_function(cfg)
    pred = perturbative.asymptotic_coefficient(gen)
    report.headline.update(c=pred.c)
    if A == 1.0:
        report.verdicts["tail_coefficient_quadrature"] = REFERENCES["tail_coefficient_quadrature"].accepts(pred.c)
    t_range = cfg.pair("t_range", None)
    if t_range is not None:
        r0 = cfg.number("r0", 10.0, positive=True)
        ts = np.arange(t_range[0], t_range[1] + 1e-9, cfg.number("t_step", 10.0, positive=True))
        F3 = [perturbative.green_convolve(gen, float(t), r0) for t in ts]
        report.files.append(write_csv(_out_dir(cfg) / "tail_prediction.csv",
                                      {"t": ts, "F3": F3, "asymptotic": pred(ts, r0)}, cfg,
                                      [f"c={pred.c:.17g}"]))


def cmd_compare(cfg, report):
    cfg.params.setdefault("family", "degree0_gaussian_cubed")
    r0 = cfg.number("r0", 10.0, positive=True)
    gen, A = _generating_function(cfg)
    pred = perturbative.asymptotic_coefficient(gen)
    cfg.params.setdefault("observers", f"F@{r0:g}")
    cfg.params.setdefault("t_max", "300")
    cfg.params.setdefault("h", "0.02")
    result, _ = _run_evolution(cfg, _out_dir(cfg), report)
    series = result.series[f"F@{r0:g}"]
    window = cfg.pair("window", None)
    if window is None:
        window = tails.late_tail_window(series)
    est = tails.estimate_tail_coefficient(series, r0, window)
    rel = abs(est.value - pred.c) / abs(pred.c) if pred.c else float("inf")
    t = series.t
    with np.errstate(divide="ignore"):
        prediction = np.where(t > 0, pred.c * r0 * np.maximum(t, 1e-300) ** -5.0, 0.0)
    report.headline.update(c_predicted=pred.c, c_measured=est.value, c_band=(est.lower, est.upper),
                           window=est.window, relative_error=rel)
    if A == 1.0:
        report.verdicts["degree0_tail_coefficient"] = REFERENCES["degree0_tail_coefficient"].accepts(est.value)
    report.files.append(write_csv(_out_dir(cfg) / "compare.csv",
                                  {"t": t, "abs_F": np.abs(series.values), "abs_prediction": np.abs(prediction)},
                                  cfg, [f"c_predicted={pred.c:.17g}", f"c_measured={est.value:.17g}"]))
    tol = cfg.number("max_relative_error", 0.10, positive=True)
    report.headline["within_tolerance"] = rel <= tol
    if rel > tol:
        report.verdicts.setdefault("degree0_tail_coefficient", False)


def cmd_figure(cfg, report):
    fig = cfg.get("figure", _REQUIRED, int)
    src = Path(cfg.get("runs", "runs"))
    out = _out_dir(cfg)

    def need(path, how):
        if not path.is_file():
            raise ConfigError(f"figure {fig} needs {path}; run `skyrmion {how}` first")
        return path

    if fig == 1:
        snaps = sorted((src / "evolve").glob("snapshot_t*.csv")) if (src / "evolve").is_dir() else []
        if not snaps:
            raise ConfigError(f"figure 1 needs snapshots in {src / 'evolve'}; run "
                              f"`skyrmion evolve snapshots=0,10,20,40 out={src / 'evolve'}` first")
        for p in snaps:
            cols, header = read_csv(p)
            report.files.append(write_csv(out / f"fig1_{p.stem}.csv",
                                          {"r": cols["r"], "F": cols["F"], "S": cols["S"]}, cfg,
                                          [f"t={header.get('t', '')}"]))
    elif fig in (2, 3):
        path = need(src / "evolve" / "observer_P_at_10.csv",
                    f"evolve observers=P@10 out={src / 'evolve'}" + (" t_max=1000 h=0.02" if fig == 3 else ""))
        series, _ = _series_from_csv(path)
        with np.errstate(divide="ignore"):
            ln_abs = np.log(np.abs(series.values))
        if fig == 2:
            fit = tails.fit_ringdown(series, cfg.pair("window", "20,60"))
            keep = series.t <= 100
            with np.errstate(divide="ignore"):
                model = np.log(np.abs(fit(series.t[keep])))
            report.headline.update(Omega=fit.Omega, Gamma=fit.Gamma)
            report.files.append(write_csv(out / "fig2.csv", {"t": series.t[keep], "ln_abs_P": ln_abs[keep],
                                                             "fit": model}, cfg,
                                          [f"Omega={fit.Omega:.17g}", f"Gamma={fit.Gamma:.17g}"]))
        else:
            fit = tails.fit_power_law(series, cfg.pair("window", None))
            keep = series.t > 0
            report.headline.update(b=fit.b, window=fit.window)
            report.files.append(write_csv(out / "fig3.csv",
                                          {"ln_t": np.log(series.t[keep]), "ln_abs_P": ln_abs[keep],
                                           "fit": fit.log_model(series.t[keep])}, cfg,
                                          [f"a={fit.a:.17g}", f"b={fit.b:.17g}", f"c={fit.c:.17g}",
                                           f"window={fit.window[0]:.17g},{fit.window[1]:.17g}"]))
    elif fig == 4:
        path = need(src / "compare" / "compare.csv", f"compare out={src / 'compare'}")
        cols, header = read_csv(path)
        A = float(header.get("A", "1"))
        pred = cols["abs_prediction"] if A != 0 else np.zeros_like(cols["t"])
        report.files.append(write_csv(out / "fig4.csv", {"t": cols["t"], "abs_F": cols["abs_F"],
                                                         "abs_prediction": pred}, cfg))
    else:
        raise ConfigError(f"key 'figure': expected 1, 2, 3 or 4, got {fig}")


COMMANDS = {
    "static": cmd_static,
    "qnm": cmd_qnm,
    "evolve": cmd_evolve,
    "ringdown-fit": cmd_ringdown_fit,
    "tail-fit": cmd_tail_fit,
    "tail-predict": cmd_tail_predict,
    "compare": cmd_compare,
    "figure": cmd_figure,
}


def run(config: RunConfig) -> tuple[RunReport, int]:
    """Execute one subcommand; returns the report and the exit code."""
    start = time.perf_counter()
    report = RunReport(config.command, config.used)
    try:
        _out_dir(config)
        COMMANDS[config.command](config, report)
        config.check_unused()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return report, EXIT_CONFIG
    except (NonFiniteError, FloatingPointError, RuntimeError, tails.FitError,
            static.ShootingError) as exc:
        print(f"numerical failure in {config.command}: {exc}", file=sys.stderr)
        return report, EXIT_NUMERICAL
    report.wall_time = time.perf_counter() - start
    code = EXIT_MISMATCH if not all(report.verdicts.values()) else EXIT_OK
    return report, code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="skyrmion", description=__doc__.split("\n")[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("settings", nargs="*", help="key=value overrides")
    parser.add_argument("--config", help="file of key=value lines")
    parser.add_argument("-v", "--verbose", action="store_true")
    try:
        args = parser.parse_intermixed_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors, which is reserved for numerical failures
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        params = read_config_file(args.config) if args.config else {}
        params.update(parse_pairs(args.settings))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report, code = run(RunConfig(args.command, params))
    if code in (EXIT_OK, EXIT_MISMATCH):
        out_dir = Path(params.get("out", f"runs/{args.command}"))
        out_dir.mkdir(parents=True, exist_ok=True)
        text = "\n".join(report.lines()) + "\n"
        (out_dir / "report.txt").write_text(text, encoding="utf-8")
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
