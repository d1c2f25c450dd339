"""Experiment catalog, configuration handling, CSV output and lab-time budgets.

A configuration is a TOML file of flat dotted keys (``model.g = 0.0006``),
optionally carrying ``experiment = "<id>"``.  Values override the catalog
defaults of the chosen experiment; keys that the experiment does not use are
rejected.  Energies are in units of the centre-of-mass frequency ``nu_1`` and
times in units of ``1/nu_1``.
"""
from __future__ import annotations

import csv
import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from pathlib import Path
from typing import Any, Callable

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .bounds import gate_count_bound, holstein_norm_bound
from .evolution import Propagator, TrotterPlan, trotter_evolve
from .fockspin import boson_annihilator, embed, fidelity
from .ions import IonChain, magnus_nnn
from .model import HolsteinParams, decompose, initial_state
from .observables import phonon_number, polaron_size_scan, sigma_z_trace
from .protocol import PulseProtocol, pair_drives, simulate_ising_gate

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "CatalogEntry",
    "CATALOG",
    "Table",
    "BudgetReport",
    "parse_config",
    "resolve_config",
    "run_table",
    "run_experiment",
    "emit_budget",
    "format_float",
]

NU1_HZ = 1.0e6
ROTATION_US = 7.0


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry when known."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


# key -> (kind, description); each catalog entry uses a subset
SCHEMA: dict[str, tuple[str, str]] = {
    "model.h": ("float", "hopping amplitude h"),
    "model.g": ("float", "electron-phonon coupling g"),
    "model.omega0": ("float", "phonon frequency omega0"),
    "model.n_sites": ("int", "number of Holstein sites N"),
    "model.cutoff": ("int", "Fock cutoff M per mode"),
    "trotter.steps": ("ints", "symmetric Trotter steps r"),
    "trotter.terms": ("strs", "Trotter terms in forward order"),
    "time.start": ("float", "first simulated time"),
    "time.stop": ("float", "last simulated time"),
    "time.step": ("float", "time-grid spacing"),
    "ion.pulse_level": ("bool", "run the pulse-level ion simulation"),
    "ion.lamb_dicke": ("float", "overall Lamb-Dicke scale"),
    "ion.mode_map": ("ints", "normal mode carrying each site's phonon (empty: 1..N)"),
    "ion.tabulated_nu2": ("float", "override of nu_2 (0: exact normal mode)"),
    "ion.detunings": ("floats", "pair detunings (empty: calibrate from ion.tau)"),
    "ion.tau": ("float", "gate time used to calibrate detunings"),
    "ion.spins": ("ints", "initial ion spins, +1 up / -1 down"),
    "ion.free_energy": ("bool", "keep the omega0/3 phonon energy in the drive frame"),
    "ion.samples_per_step": ("int", "trace samples inside each Trotter exponential"),
    "sweep.g_over_h": ("floats", "coupling sweep in units of h"),
    "sweep.n_sites": ("ints", "chain-length sweep"),
    "sweep.cutoffs": ("ints", "cutoff sweep"),
    "bounds.eps": ("float", "target Trotter error for the gate bound"),
    "bounds.k": ("int", "Suzuki fractal depth"),
    "integrator.dt": ("float", "RK4 step (0: 2 pi / fastest frequency / 50)"),
    "integrator.check": ("bool", "rerun at dt/2 and fail on a >1e-6 change"),
    "check.cutoff": ("bool", "rerun at cutoff M+1 and compare losses"),
    "output.dir": ("str", "output directory"),
}

_COMMON = {
    "model.h": 0.002,
    "model.g": 0.0002,
    "model.omega0": 0.0005,
    "model.n_sites": 2,
    "model.cutoff": 4,
    "trotter.steps": [10],
    "trotter.terms": ["H1", "H2", "H3"],
    "time.start": 0.0,
    "time.stop": 2000.0,
    "time.step": 50.0,
    "ion.pulse_level": False,
    "integrator.dt": 0.0,
    "integrator.check": False,
    "check.cutoff": False,
    "output.dir": "results",
    "bounds.eps": 0.01,
    "bounds.k": 1,
}

_ION = {
    "ion.lamb_dicke": 0.1,
    "ion.mode_map": [],
    "ion.tabulated_nu2": 0.0,
    "ion.free_energy": True,
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved settings of one experiment run.

    ``values`` holds every schema key the experiment uses; ``sources`` records
    where each value came from (``default``, ``file`` or ``cli``).
    """

    experiment: str
    params: HolsteinParams
    steps: tuple[int, ...]
    times: tuple[float, ...]
    pulse_level: bool
    out_dir: Path
    dt: float | None
    values: dict = field(default_factory=dict, compare=False)
    sources: dict = field(default_factory=dict, compare=False)

    def get(self, key: str):
        return self.values[key]

    def with_cutoff(self, cutoff: int) -> "ExperimentConfig":
        values = dict(self.values, **{"model.cutoff": cutoff})
        return replace(self, params=self.params.with_(cutoff=cutoff), values=values)


@dataclass
class Table:
    """Numeric result table; ``loss_columns`` take part in the cutoff check."""

    columns: list[str]
    rows: list[list[float]]
    meta: dict = field(default_factory=dict)
    loss_columns: tuple[str, ...] = ()

    def column(self, name: str) -> np.ndarray:
        k = self.columns.index(name)
        return np.array([r[k] for r in self.rows], dtype=float)


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    figure: str
    description: str
    defaults: dict
    runner: Callable[[ExperimentConfig, int], Table]
    budget: bool = False


# ---------------------------------------------------------------------------
# configuration


def _coerce(key: str, value: Any):
    kind = SCHEMA[key][0]
    try:
        if kind == "bool":
            if not isinstance(value, bool):
                raise TypeError
            return value
        if kind == "int":
            if isinstance(value, bool) or not float(value).is_integer():
                raise TypeError
            return int(value)
        if kind == "float":
            if isinstance(value, bool):
                raise TypeError
            out = float(value)
            if not math.isfinite(out):
                raise ConfigError("value must be finite", key)
            return out
        if kind == "str":
            if not isinstance(value, str):
                raise TypeError
            return value
        if not isinstance(value, (list, tuple)):
            value = [value]
        if kind == "ints":
            if any(isinstance(v, bool) or not float(v).is_integer() for v in value):
                raise TypeError
            return [int(v) for v in value]
        if kind == "floats":
            out = [float(v) for v in value if not isinstance(v, bool)]
            if len(out) != len(value) or not all(map(math.isfinite, out)):
                raise TypeError
            return out
        if kind == "strs":
            if not all(isinstance(v, str) for v in value):
                raise TypeError
            return list(value)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"expected {kind}, got {value!r}", key) from None
    raise AssertionError(kind)


def _flatten(tree: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in tree.items():
        name = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, name + "."))
        else:
            out[name] = v
    return out


def parse_config(path, experiment: str | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Read a TOML configuration and resolve it against the catalog.

    The experiment id comes from ``experiment`` or the file's ``experiment``
    key; both may be given only if they agree.  ``overrides`` (command-line
    values) win over the file.
    """
    try:
        text = Path(path).read_bytes().decode("utf-8")
        raw = tomllib.loads(text)
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    flat = _flatten(raw)
    file_id = flat.pop("experiment", None)
    if file_id is not None and not isinstance(file_id, str):
        raise ConfigError("must be a string", "experiment")
    if experiment and file_id and experiment != file_id:
        raise ConfigError(f"file names {file_id!r} but {experiment!r} was requested", "experiment")
    exp_id = experiment or file_id
    if exp_id is None:
        raise ConfigError("no experiment id given", "experiment")
    return resolve_config(exp_id, flat, overrides)


def resolve_config(experiment: str, file_values: dict | None = None,
                   overrides: dict | None = None) -> ExperimentConfig:
    """Merge catalog defaults, file values and overrides, then validate."""
    if experiment not in CATALOG:
        raise ConfigError(f"unknown experiment {experiment!r}; known: {', '.join(CATALOG)}", "experiment")
    entry = CATALOG[experiment]
    values = dict(entry.defaults)
    sources = {k: "default" for k in values}
    for origin, layer in (("file", file_values or {}), ("cli", overrides or {})):
        for key, value in layer.items():
            if key not in SCHEMA:
                raise ConfigError("unknown key", key)
            if key not in entry.defaults:
                raise ConfigError(f"not used by experiment {experiment!r}", key)
            values[key] = _coerce(key, value)
            sources[key] = origin
    return _validate(experiment, values, sources)


def _validate(exp_id: str, v: dict, sources: dict) -> ExperimentConfig:
    steps = v["trotter.steps"]
    if not steps:
        raise ConfigError("at least one value required", "trotter.steps")
    if any(r < 1 for r in steps):
        raise ConfigError(f"steps must be positive integers, got {steps}", "trotter.steps")
    bad = set(v["trotter.terms"]) - {"H1", "H2", "H3"}
    if bad or not v["trotter.terms"]:
        raise ConfigError(f"terms must be a non-empty subset of H1, H2, H3, got {v['trotter.terms']}",
                          "trotter.terms")
    if v["model.cutoff"] < 1 or v["model.cutoff"] > 12:
        raise ConfigError("cutoff must lie in 1..12", "model.cutoff")
    if v["model.n_sites"] < 1:
        raise ConfigError("must be >= 1", "model.n_sites")
    if v["integrator.dt"] < 0:
        raise ConfigError("must be >= 0 (0 selects the default step)", "integrator.dt")
    start, stop, step = v["time.start"], v["time.stop"], v["time.step"]
    if start < 0:
        raise ConfigError("must be >= 0", "time.start")
    if stop < start:
        raise ConfigError("must be >= time.start", "time.stop")
    if step <= 0:
        raise ConfigError("must be positive", "time.step")
    if not 0 < v["bounds.eps"] < 1:
        raise ConfigError("must lie in (0, 1)", "bounds.eps")
    if v["bounds.k"] < 1:
        raise ConfigError("must be >= 1", "bounds.k")
    for key in ("sweep.n_sites", "sweep.cutoffs"):
        if key in v and (not v[key] or min(v[key]) < 1):
            raise ConfigError("values must be positive and non-empty", key)
    if "sweep.g_over_h" in v and not v["sweep.g_over_h"]:
        raise ConfigError("at least one value required", "sweep.g_over_h")
    if "ion.lamb_dicke" in v and v["ion.lamb_dicke"] <= 0:
        raise ConfigError("must be positive", "ion.lamb_dicke")
    if "ion.tau" in v and v["ion.tau"] <= 0:
        raise ConfigError("must be positive", "ion.tau")
    if v.get("ion.samples_per_step", 0) < 0:
        raise ConfigError("must be >= 0", "ion.samples_per_step")
    n = int(round((stop - start) / step))
    times = tuple(float(x) for x in np.linspace(start, stop, n + 1)) if n else (float(start),)
    try:
        params = HolsteinParams(h=v["model.h"], g=v["model.g"], omega0=v["model.omega0"],
                                n_sites=v["model.n_sites"], cutoff=v["model.cutoff"])
    except ValueError as exc:
        raise ConfigError(str(exc), "model") from None
    return ExperimentConfig(exp_id, params, tuple(steps), times, v["ion.pulse_level"],
                            Path(v["output.dir"]), v["integrator.dt"] or None, v, sources)


# ---------------------------------------------------------------------------
# budget


@dataclass(frozen=True)
class BudgetReport:
    """Laboratory time of a pulse-level protocol with ``nu_1 = 2 pi x 1 MHz``.

    Each of the ``n_terms`` exponentials lasts ``t/2r`` and appears twice per
    symmetric step; every step adds four global rotations of 7 us when the
    electron-phonon term is present.
    """

    simulated_time: float
    simulated_time_us: float
    steps: int
    n_terms: int
    step_duration: float
    pulse_time_us: float
    rotations: int
    rotation_time_us: float
    total_time_ms: float
    gates: int
    gate_bound: int | None

    def lines(self) -> list[str]:
        return [f"{k} = {v}" for k, v in self.__dict__.items()]


def _units_to_us(t: float) -> float:
    return t / (2 * math.pi * NU1_HZ) * 1e6


def emit_budget(cfg: ExperimentConfig, steps: int | None = None, t: float | None = None) -> BudgetReport:
    """Budget for simulated time ``t`` (default: last grid time) with ``steps`` steps."""
    r = cfg.steps[0] if steps is None else int(steps)
    t = max(cfg.times) if t is None else float(t)
    if r < 0:
        raise ValueError("steps must be >= 0")
    terms = cfg.values.get("trotter.terms", ["H1", "H2", "H3"])
    m = len(terms)
    if r == 0 or t == 0:
        return BudgetReport(t, _units_to_us(t), r, m, 0.0, 0.0, 0, 0.0, 0.0, 0, None)
    tau = t / (2 * r)
    pulse_us = _units_to_us(m * tau * 2 * r)
    rotations = 4 * r if "H3" in terms else 0
    rot_us = rotations * ROTATION_US
    eps, k = cfg.values.get("bounds.eps", 0.01), cfg.values.get("bounds.k", 1)
    bound = gate_count_bound(cfg.params, t, eps, k)
    return BudgetReport(t, _units_to_us(t), r, m, tau, pulse_us, rotations, rot_us,
                        (pulse_us + rot_us) / 1e3, 2 * m * r, bound)


# ---------------------------------------------------------------------------
# runners


def _pmap(fn, items, jobs: int) -> list:
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _terms(p: HolsteinParams, labels) -> list:
    table = dict(zip(("H1", "H2", "H3"), decompose(p)))
    return [table[lab] for lab in labels]


def ideal_losses(p: HolsteinParams, times, steps: int, labels=("H1", "H2", "H3")) -> np.ndarray:
    """``1 - F`` between exact and symmetric-Trotter evolution of ``sum(labels)``."""
    terms = _terms(p, labels)
    H = sum(terms[1:], terms[0])
    psi0 = initial_state(p)
    exact = Propagator(H)
    plan = TrotterPlan(terms, 1.0, steps)
    out = []
    for t in times:
        if t == 0:
            out.append(0.0)
            continue
        out.append(1.0 - fidelity(exact.evolve(psi0, t), trotter_evolve(plan.at(t), psi0)))
    return np.array(out)


def _sweep_loss(cfg: ExperimentConfig, p: HolsteinParams) -> np.ndarray:
    return ideal_losses(p, cfg.times, cfg.steps[0], cfg.get("trotter.terms"))


def _fig1(cfg: ExperimentConfig, jobs: int, sweep: str) -> Table:
    p = cfg.params
    if sweep == "g":
        labels = [f"loss_g{x:g}h" for x in cfg.get("sweep.g_over_h")]
        variants = [p.with_(g=x * p.h) for x in cfg.get("sweep.g_over_h")]
    else:
        labels = [f"loss_N{n}" for n in cfg.get("sweep.n_sites")]
        variants = [p.with_(n_sites=n) for n in cfg.get("sweep.n_sites")]
    losses = _pmap(partial(_sweep_loss, cfg), variants, jobs)
    rows = [[t, *(float(l[k]) for l in losses)] for k, t in enumerate(cfg.times)]
    return Table(["t", *labels], rows, {"steps": cfg.steps[0]}, tuple(labels))


def _chain(cfg: ExperimentConfig, n_ions: int, omega0: float) -> IonChain:
    nu2 = cfg.get("ion.tabulated_nu2")
    mode_map = cfg.get("ion.mode_map") or None
    return IonChain.build(n_ions, omega0, cfg.get("ion.lamb_dicke"), mode_map=mode_map,
                          nu_override={2: nu2} if nu2 else None)


def _ising_gate(cfg: ExperimentConfig, jobs: int) -> Table:
    if not cfg.pulse_level:
        raise ConfigError("this experiment is pulse-level only", "ion.pulse_level")
    p = cfg.params
    J = p.h / 2
    chain = _chain(cfg, p.n_sites + 1, p.omega0)
    spins = cfg.get("ion.spins")
    if len(spins) != chain.n_ions or any(s not in (-1, 1) for s in spins):
        raise ConfigError(f"need {chain.n_ions} entries of +1/-1", "ion.spins")
    det = cfg.get("ion.detunings") or None
    if det is not None and len(det) != chain.n_sites - 1:
        raise ConfigError(f"need {chain.n_sites - 1} detunings", "ion.detunings")
    try:
        drives = pair_drives(chain, J, cfg.get("ion.tau"), "xx", det)
    except ValueError as exc:
        raise ConfigError(str(exc), "ion.detunings") from None
    run = simulate_ising_gate(chain, drives, p.cutoff, cfg.times, spins, J, dt=cfg.dt,
                              check=cfg.get("integrator.check"))
    fid = run.fidelity
    exact = run.exact_states()
    cols, data = ["t", "fidelity", "loss"], [run.times, fid, 1 - fid]
    for ion in range(1, chain.n_sites + 1):
        cols += [f"sz{ion}_ion", f"sz{ion}_exact"]
        data += [sigma_z_trace(run.ion_states, ion, run.basis), sigma_z_trace(exact, ion, run.basis)]
    meta = {"nu": _fmt_list(chain.nu), "mode_map": list(chain.mode_map), "dt": run.dt}
    for k, d in enumerate(drives, 1):
        meta[f"drive{k}"] = (f"ions={d.ions} mode={d.mode} detuning={format_float(d.detuning)} "
                             f"rabi={format_float(d.rabi[0])}")
    if len(drives) == 2:
        mag = magnus_nnn(chain, drives[0].detuning, drives[1].detuning, cfg.get("ion.tau"),
                         modes=(drives[0].mode, drives[1].mode))
        meta["magnus_nnn_over_nn"] = format_float(mag.ratio)
        meta["magnus_critical_time"] = format_float(mag.critical_time)
    rows = [list(map(float, r)) for r in zip(*data)]
    return Table(cols, rows, meta, ("loss",))


def _protocol_point(cfg: ExperimentConfig, item) -> tuple[float, float, dict]:
    r, t = item
    p = cfg.params
    labels = tuple(cfg.get("trotter.terms"))
    ideal = float(ideal_losses(p, [t], r, labels)[0])
    if not cfg.pulse_level or t == 0:
        return ideal, float("nan"), {}
    chain = _chain(cfg, p.n_sites + 1, p.omega0)
    proto = PulseProtocol(chain, p, p.cutoff, labels, cfg.get("ion.free_energy"), dt=cfg.dt,
                          check=cfg.get("integrator.check"))
    sb = p.basis()
    psi0 = initial_state(p, sb)
    terms = _terms(p, labels)
    exact = Propagator(sum(terms[1:], terms[0])).evolve(psi0, t)
    run = proto.run(chain.embed_state(psi0, sb, proto.basis), t, r)
    pulse = 1.0 - fidelity(chain.embed_state(exact, sb, proto.basis), run.state)
    tau = t / (2 * r)
    info = {}
    if "H1" in labels or "H2" in labels:
        for d in pair_drives(chain, p.h / 2, tau):
            info[f"r={r} t={t:g} pair{d.ions}"] = (f"detuning={format_float(d.detuning)} "
                                                  f"rabi={format_float(d.rabi[0])}")
    return ideal, pulse, info


def _protocol(cfg: ExperimentConfig, jobs: int) -> Table:
    items = [(r, t) for r in cfg.steps for t in cfg.times]
    results = _pmap(partial(_protocol_point, cfg), items, jobs)
    rows, meta = [], {}
    for (r, t), (ideal, pulse, info) in zip(items, results):
        rows.append([t, float(r), ideal, pulse])
        meta.update(info)
    loss = ("loss_ideal", "loss_pulse") if cfg.pulse_level else ("loss_ideal",)
    return Table(["t", "r", "loss_ideal", "loss_pulse"], rows, meta, loss)


def _phonon_trace(cfg: ExperimentConfig, jobs: int) -> Table:
    """Trace of the site-1 phonon number through one protocol, pulse-level and ideal."""
    p = cfg.params
    labels = tuple(cfg.get("trotter.terms"))
    r, t = cfg.steps[0], cfg.times[-1]
    n = max(1, cfg.get("ion.samples_per_step"))
    tau = t / (2 * r)
    sb = p.basis()
    psi0 = initial_state(p, sb)
    terms = dict(zip(labels, _terms(p, labels)))
    H = sum(terms.values())
    n_exact = float(phonon_number(Propagator(H).evolve(psi0, t), 1, sb)[0])
    seq = (list(labels) + list(labels[::-1])) * r
    props = {k: Propagator(v) for k, v in terms.items()}
    ideal_t, ideal_n, seg = [0.0], [float(phonon_number(psi0, 1, sb)[0])], [0.0]
    psi = psi0
    for k, lab in enumerate(seq):
        grid = np.linspace(0, tau, n + 1)[1:]
        states = props[lab].evolve(psi, grid)
        ideal_t += list(k * tau + grid)
        ideal_n += list(phonon_number(states, 1, sb))
        seg += [float(k + 1)] * n
        psi = states[-1]
    cols = ["t", "segment", "n_ideal"]
    data = [ideal_t, seg, ideal_n]
    meta = {"n_exact_final": format_float(n_exact), "steps": r, "simulated_time": t}
    if cfg.pulse_level:
        chain = _chain(cfg, p.n_sites + 1, p.omega0)
        proto = PulseProtocol(chain, p, p.cutoff, labels, cfg.get("ion.free_energy"), dt=cfg.dt,
                              samples_per_step=n, check=cfg.get("integrator.check"))
        b = boson_annihilator(p.cutoff)
        op = embed(b.T @ b, ("mode", chain.mode_map[0] - 1), proto.basis)
        run = proto.run(chain.embed_state(psi0, sb, proto.basis), t, r, observables=[op])
        cols.append("n_pulse")
        data.append(list(run.trace[:, 0]))
        meta["n_pulse_final"] = format_float(run.trace[-1, 0])
        meta["relative_error_pulse"] = format_float(abs(run.trace[-1, 0] - n_exact) / n_exact)
    meta["n_ideal_final"] = format_float(ideal_n[-1])
    meta["relative_error_ideal"] = format_float(abs(ideal_n[-1] - n_exact) / n_exact)
    rows = [list(map(float, row)) for row in zip(*data)]
    return Table(cols, rows, meta)


def _polaron(cfg: ExperimentConfig, jobs: int) -> Table:
    p = cfg.params
    t = cfg.times[-1]
    profiles = polaron_size_scan([x * p.h for x in cfg.get("sweep.g_over_h")], p, t)
    cols = ["t", "g_over_h", "width", "onsite_fraction"] + [f"chi_{j}" for j in range(1, p.n_sites + 1)]
    rows = []
    for x, prof in zip(cfg.get("sweep.g_over_h"), profiles):
        rows.append([t, float(x), prof.width, prof.onsite_fraction, *map(float, prof.chi[prof.site - 1])])
    return Table(cols, rows, {"electron_site": profiles[0].site})


def _gate_table(cfg: ExperimentConfig, jobs: int) -> Table:
    p = cfg.params
    t = cfg.times[-1]
    eps, k = cfg.get("bounds.eps"), cfg.get("bounds.k")
    rows = []
    for n in cfg.get("sweep.n_sites"):
        for m in cfg.get("sweep.cutoffs"):
            q = p.with_(n_sites=n, cutoff=m)
            nb = holstein_norm_bound(q)
            rows.append([t, float(n), float(m), nb.reported, nb.verified,
                         float(gate_count_bound(q, t, eps, k)),
                         float(gate_count_bound(q, t, eps, k, norm=nb.verified))])
    cols = ["t", "n_sites", "cutoff", "norm_bound", "verified_norm_bound", "gate_bound", "verified_gate_bound"]
    return Table(cols, rows, {"eps": eps, "k": k})


def _defaults(**kw) -> dict:
    out = dict(_COMMON)
    for k, v in kw.items():
        out[k.replace("__", ".")] = v
    return out


CATALOG: dict[str, CatalogEntry] = {e.id: e for e in [
    CatalogEntry(
        "fig1a", "Fig. 1(a)", "ideal Trotter 1-F(t) for a sweep of g, N=2, r=10",
        _defaults(**{"sweep__g_over_h": [0.1, 0.2, 0.3], "check__cutoff": True}),
        partial(_fig1, sweep="g"), budget=True),
    CatalogEntry(
        "fig1b", "Fig. 1(b)", "ideal Trotter 1-F(t) for N=2 and N=3, g=0.3h, omega0=0.5h, r=10",
        _defaults(**{"model__g": 0.0006, "model__omega0": 0.001, "sweep__n_sites": [2, 3],
                     "check__cutoff": True}),
        partial(_fig1, sweep="N"), budget=True),
    CatalogEntry(
        "fig2", "Fig. 2", "pulse-level NN-XX gate on 3+1 ions vs exact Ising dynamics",
        _defaults(**_ION, **{"model__n_sites": 3, "model__cutoff": 3, "ion__pulse_level": True,
                             "ion__tabulated_nu2": 1.731, "ion__detunings": [1.0187, 1.71196],
                             "ion__tau": 333.0, "ion__spins": [-1, 1, -1, 1],
                             "time__stop": 1000.0, "time__step": 3.0}),
        _ising_gate),
    CatalogEntry(
        "sfig4", "Supplemental Fig. 4", "pulse-level NN-XX gate on 2+1 ions closing at tau=500",
        _defaults(**_ION, **{"model__cutoff": 5, "ion__pulse_level": True, "ion__mode_map": [1, 3],
                             "ion__detunings": [], "ion__tau": 500.0, "ion__spins": [1, -1, 1],
                             "time__stop": 1500.0, "time__step": 5.0}),
        _ising_gate),
    CatalogEntry(
        "fig3", "Fig. 3", "3+1 ions, r in {2, 3}: ideal Trotter vs pulse-level protocol",
        _defaults(**_ION, **{"model__n_sites": 3, "model__cutoff": 3, "ion__pulse_level": True,
                             "trotter__steps": [2, 3], "time__start": 1000.0, "time__stop": 2000.0,
                             "time__step": 1000.0}),
        _protocol, budget=True),
    CatalogEntry(
        "sfig5", "Supplemental Fig. 5", "2+1 ions, r in {1, 2}: ideal Trotter vs pulse-level protocol",
        _defaults(**_ION, **{"ion__mode_map": [1, 3], "ion__pulse_level": True, "trotter__steps": [1, 2],
                             "time__start": 500.0, "time__stop": 2000.0, "time__step": 500.0}),
        _protocol, budget=True),
    CatalogEntry(
        "sfig6", "Supplemental Fig. 6", "H1+H3, one symmetric step: COM phonon number trace",
        _defaults(**_ION, **{"ion__mode_map": [1, 3], "ion__pulse_level": True, "trotter__steps": [1],
                             "trotter__terms": ["H1", "H3"], "ion__samples_per_step": 25,
                             "time__start": 250.0, "time__stop": 250.0, "time__step": 250.0}),
        _phonon_trace, budget=True),
    CatalogEntry(
        "polaron", "Fig. 1 (polaron size)", "electron-displacement correlation profile vs g, exact evolution",
        _defaults(**{"model__n_sites": 3, "model__cutoff": 3, "model__omega0": 0.001,
                     "sweep__g_over_h": [0.0, 0.1, 0.3, 0.5, 1.0],
                     "time__start": 1000.0, "time__stop": 1000.0, "time__step": 1000.0}),
        _polaron),
    CatalogEntry(
        "gates", "resource estimate", "norm and gate-count bounds over N and M",
        _defaults(**{"model__g": 0.0006, "sweep__n_sites": [2, 3, 4], "sweep__cutoffs": [2, 3, 4, 5],
                     "time__start": 2000.0}),
        _gate_table),
]}


# ---------------------------------------------------------------------------
# output


def format_float(x: float) -> str:
    """12 significant digits in scientific notation (always with a decimal point)."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.11e}"


def _fmt_list(xs) -> str:
    return "[" + ", ".join(format_float(x) for x in xs) + "]"


def run_table(cfg: ExperimentConfig, jobs: int = 1) -> Table:
    return CATALOG[cfg.experiment].runner(cfg, jobs)


def _csv_text(cfg: ExperimentConfig, table: Table) -> str:
    entry = CATALOG[cfg.experiment]
    buf = io.StringIO()
    buf.write(f"# experiment: {entry.id} ({entry.figure})\n")
    buf.write(f"# {entry.description}\n")
    for key in sorted(cfg.values):
        if key != "output.dir":  # keep the table independent of where it is written
            buf.write(f"# {key} = {cfg.values[key]}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([format_float(x) for x in row])
    return buf.getvalue()


def cutoff_check(cfg: ExperimentConfig, table: Table, jobs: int = 1) -> tuple[bool, float, float]:
    """Rerun at ``M + 1``; pass if every loss moves by less than 10% of itself.

    Returns ``(passed, max_shift, max_relative_shift)``.
    """
    finer = run_table(cfg.with_cutoff(cfg.params.cutoff + 1), jobs)
    worst_abs, worst_rel, ok = 0.0, 0.0, True
    for name in table.loss_columns:
        a, b = table.column(name), finer.column(name)
        keep = ~np.isnan(a)
        shift = np.abs(a - b)[keep]
        ref = np.abs(a)[keep]
        if shift.size:
            worst_abs = max(worst_abs, float(shift.max()))
            rel = shift / np.maximum(ref, 1e-300)
            worst_rel = max(worst_rel, float(rel[ref > 1e-12].max(initial=0.0)))
            ok &= bool(np.all(shift <= 0.1 * ref + 1e-12))
    return ok, worst_abs, worst_rel


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> tuple[Path, Path]:
    """Run one catalog entry; write ``<out>/<id>/<id>.csv`` and ``manifest.txt``."""
    entry = CATALOG[cfg.experiment]
    table = run_table(cfg, jobs)
    out = cfg.out_dir / cfg.experiment
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{cfg.experiment}.csv"
    csv_path.write_text(_csv_text(cfg, table), encoding="utf-8")

    lines = [f"experiment = {entry.id}", f"figure = {entry.figure}", f"description = {entry.description}",
             "", "[parameters]"]
    for key in sorted(cfg.values):
        lines.append(f"{key} = {cfg.values[key]}  # {cfg.sources[key]}: {SCHEMA[key][1]}")
    lines += ["", "[results]"]
    lines += [f"{k} = {v}" for k, v in table.meta.items()]
    lines += ["", "[cutoff check]"]
    if not table.loss_columns:
        lines.append("status = not applicable (no loss columns)")
    elif cfg.get("check.cutoff"):
        ok, shift, rel = cutoff_check(cfg, table, jobs)
        lines += [f"compared = M={cfg.params.cutoff} vs M={cfg.params.cutoff + 1}",
                  f"max_shift = {format_float(shift)}", f"max_relative_shift = {format_float(rel)}",
                  f"status = {'PASS' if ok else 'FAIL'} (threshold 10% of the reported loss)"]
    else:
        lines.append("status = skipped (enable with check.cutoff = true)")
    if entry.budget:
        for r in cfg.steps:
            lines += ["", f"[budget r={r}]"] + emit_budget(cfg, r).lines()
    (out / "manifest.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return csv_path, out / "manifest.txt"
