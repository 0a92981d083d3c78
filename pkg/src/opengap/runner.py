"""Config-driven experiments with deterministic CSV/JSON output.

A config is an INI file::

    [experiment]
    kind = pressure
    seed = 0

    [system]
    kind = baker
    base = 3
    kept = 0, 2

    [parameters]
    n_max = 10
    s_values = 0, 0.5, 1

Every CSV row carries the ``config_hash`` column (SHA-256 of the
normalized config, seed included); floats are written with ``repr`` so
reruns are bit-identical.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from .errors import ConfigurationError

KINDS = ("classical", "splitting", "pressure", "dimension", "porosity", "spectrum", "fup", "numerology")


class ValidationError(ConfigurationError):
    """Invalid experiment config; ``problems`` maps keys to messages."""

    def __init__(self, problems: dict):
        self.problems = dict(problems)
        text = "; ".join(f"{k}: {v}" for k, v in sorted(self.problems.items()))
        super().__init__(f"invalid config: {text}")


# --------------------------------------------------------------------------
# Catalog and defaults


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    kind: str
    anchor: str
    system: dict
    parameters: dict


CATALOG = (
    CatalogEntry("classical", "classical", "survivor sets of an open hyperbolic map and symplecticity checks",
                 {"kind": "baker"}, {"depth": "4", "resolution": "81", "invariant_samples": "200"}),
    CatalogEntry("splitting", "splitting", "graph transform contraction on the [[2,1],[1,1]] chart",
                 {"kind": "linear", "matrix": "2, 1, 1, 1"}, {"n": "129", "tol": "1e-12", "max_iter": "60"}),
    CatalogEntry("pressure", "pressure", "Bowen root of P(s phi_u) = 0 and gamma_cl = -P(phi_u)",
                 {"kind": "baker"}, {"n_max": "10", "s_values": "0, 0.25, 0.5, 0.75, 1", "bowen": "yes"}),
    CatalogEntry("dimension", "dimension", "box-counting dimension of the unstable Cantor trace",
                 {"kind": "baker"}, {"depth": "8", "eps_min": "1e-4", "eps_max": "1e-1"}),
    CatalogEntry("porosity", "porosity", "porosity certificate and porosity/dimension round trip for a Cantor set",
                 {}, {"base": "3", "digits": "0, 2", "depth": "10", "nu": "0.3333333333333333",
                      "alpha0": "1.52415790275873e-4", "alpha1": "1", "scale_ratio": "3"}),
    CatalogEntry("spectrum", "spectrum", "model open quantum map: spectral radius and ||M^(2n+1)|| decay",
                 {}, {"operator": "model", "h_exponents": "8, 9, 10"}),
    CatalogEntry("baker-spectrum", "spectrum", "quantum open baker spectral radius for N = 3^k",
                 {}, {"operator": "baker", "depths": "3, 4, 5", "base": "3", "kept": "0, 2"}),
    CatalogEntry("uncertainty", "spectrum", "volume bound ||1(hD) 1(x)|| for boxes of half-width h^(3/4)",
                 {}, {"operator": "uncertainty", "h_exponents": "8, 10, 12, 14", "exponent": "0.75"}),
    CatalogEntry("fup", "fup", "discrete fractal uncertainty norms for mid-third Cantor sets",
                 {}, {"base": "3", "alphabet": "0, 2", "depths": "3, 4, 5, 6, 7", "discard": "2"}),
    CatalogEntry("numerology", "numerology", "exponents b, delta0, tau, delta2 and their three constraints",
                 {}, {"lambda0": "0.6931471805599453", "lambda1": "0.6931471805599453", "beta": "1"}),
)


def list_experiments():
    return list(CATALOG)


def _catalog_defaults(kind: str, operator: str | None = None) -> CatalogEntry:
    for entry in CATALOG:
        if entry.kind == kind and (operator is None or entry.parameters.get("operator") == operator):
            return entry
    return next(e for e in CATALOG if e.kind == kind)


# --------------------------------------------------------------------------
# Config


@dataclass
class ExperimentConfig:
    kind: str
    system: dict = field(default_factory=dict)
    parameters: dict = field(default_factory=dict)
    seed: int = 0
    name: str = ""
    tolerances: dict = field(default_factory=dict)

    @classmethod
    def from_text(cls, text: str, kind: str | None = None) -> "ExperimentConfig":
        cp = configparser.ConfigParser(interpolation=None)
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ValidationError({"config": f"unparseable: {exc}"}) from exc
        exp = dict(cp["experiment"]) if cp.has_section("experiment") else {}
        declared = exp.get("kind")
        if kind and declared and declared != kind:
            raise ValidationError({"experiment.kind": f"config declares {declared!r} but {kind!r} was requested"})
        use = kind or declared
        if not use:
            raise ValidationError({"experiment.kind": "missing"})
        try:
            seed = int(exp.get("seed", "0"))
        except ValueError:
            raise ValidationError({"experiment.seed": f"not an integer: {exp.get('seed')!r}"}) from None
        return cls(
            use,
            dict(cp["system"]) if cp.has_section("system") else {},
            dict(cp["parameters"]) if cp.has_section("parameters") else {},
            seed,
            exp.get("name", ""),
            dict(cp["tolerances"]) if cp.has_section("tolerances") else {},
        )

    @classmethod
    def from_file(cls, path, kind: str | None = None) -> "ExperimentConfig":
        return cls.from_text(Path(path).read_text(), kind)

    @classmethod
    def default(cls, kind: str, seed: int = 0) -> "ExperimentConfig":
        if kind not in KINDS:
            raise ValidationError({"experiment.kind": f"unknown kind {kind!r}"})
        entry = _catalog_defaults(kind)
        return cls(kind, dict(entry.system), dict(entry.parameters), seed, entry.name)

    def with_defaults(self) -> "ExperimentConfig":
        entry = _catalog_defaults(self.kind, self.parameters.get("operator"))
        system = dict(entry.system) if not self.system else dict(self.system)
        params = dict(entry.parameters)
        params.update(self.parameters)
        return ExperimentConfig(self.kind, system, params, self.seed, self.name or entry.name, dict(self.tolerances))

    def to_text(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp["experiment"] = {"kind": self.kind, "seed": str(self.seed), **({"name": self.name} if self.name else {})}
        for title, section in (("system", self.system), ("parameters", self.parameters), ("tolerances", self.tolerances)):
            if section:
                cp[title] = {k: _norm(v) for k, v in sorted(section.items())}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def hash(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()


def _norm(value) -> str:
    return ", ".join(p.strip() for p in str(value).split(",")) if "," in str(value) else str(value).strip()


def _floats(params, key, problems):
    try:
        vals = [float(v) for v in str(params[key]).split(",") if v.strip()]
    except (KeyError, ValueError):
        problems[f"parameters.{key}"] = "expected a comma-separated list of numbers"
        return []
    if not vals:
        problems[f"parameters.{key}"] = "sweep list is empty"
    return vals


def _ints(params, key, problems):
    vals = _floats(params, key, problems)
    if any(v != int(v) for v in vals):
        problems[f"parameters.{key}"] = "expected integers"
    return [int(v) for v in vals]


def _scalar(params, key, problems, cast=float, default=None):
    if key not in params:
        if default is None:
            problems[f"parameters.{key}"] = "missing"
            return None
        return default
    try:
        return cast(params[key])
    except ValueError:
        problems[f"parameters.{key}"] = f"not a valid {cast.__name__}: {params[key]!r}"
        return None


# --------------------------------------------------------------------------
# Systems


def build_system(spec: dict):
    """Open map from a ``[system]`` section (``kind = linear | baker | disks``)."""
    from .classical.billiard import three_disk_system, two_disk_system
    from .classical.systems import BakerSystem, LinearSystem

    kind = spec.get("kind", "baker")
    try:
        if kind == "linear":
            m = [float(v) for v in spec.get("matrix", "0.5, 0, 0, 2").split(",")]
            if len(m) != 4:
                raise ValidationError({"system.matrix": "expected four entries"})
            hw = float(spec.get("half_width", "1"))
            eps0 = float(spec["epsilon0"]) if "epsilon0" in spec else None
            return LinearSystem(np.reshape(m, (2, 2)), (hw, hw), eps0, name="linear")
        if kind == "baker":
            kept = tuple(int(v) for v in spec.get("kept", "0, 2").split(","))
            window = spec.get("xi_window")
            return BakerSystem(
                int(spec.get("base", "3")), kept, int(spec.get("letter_depth", "1")),
                float(spec.get("kick", "0")),
                tuple(float(v) for v in window.split(",")) if window else None,
            )
        if kind == "disks":
            n = int(spec.get("disks", "3"))
            radius = float(spec.get("radius", "1"))
            side = float(spec.get("side", "6"))
            if n == 3:
                return three_disk_system(radii=(radius,) * 3, side=side)
            if n == 2:
                return two_disk_system(distance=side, radius=radius)
            raise ValidationError({"system.disks": "only 2 or 3 disks are supported"})
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError({"system": str(exc)}) from exc
    raise ValidationError({"system.kind": f"unknown system kind {kind!r}"})


def load_system_config(path):
    """Open map from the ``[system]`` section of a config file."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.read_string(Path(path).read_text())
    if not cp.has_section("system"):
        raise ValidationError({"system": "missing section"})
    return build_system(dict(cp["system"]))


# --------------------------------------------------------------------------
# Validation


def validate(config: ExperimentConfig):
    """Return warnings; raise :class:`ValidationError` listing every offending key."""
    cfg = config.with_defaults()
    p = cfg.parameters
    problems: dict = {}
    notes: list = []
    if cfg.kind not in KINDS:
        raise ValidationError({"experiment.kind": f"unknown kind {cfg.kind!r}"})
    if cfg.kind in ("classical", "pressure", "dimension"):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            try:
                build_system(cfg.system)
            except ValidationError as exc:
                problems.update(exc.problems)
        notes.extend(str(w.message) for w in caught)
    if cfg.kind == "classical":
        _scalar(p, "depth", problems, int)
        _scalar(p, "resolution", problems, int)
    elif cfg.kind == "splitting":
        if cfg.system.get("kind", "linear") not in ("linear", "baker"):
            problems["system.kind"] = "splitting supports linear and baker systems"
        _scalar(p, "n", problems, int)
        _scalar(p, "tol", problems)
        _scalar(p, "max_iter", problems, int)
    elif cfg.kind == "pressure":
        n_max = _scalar(p, "n_max", problems, int)
        if n_max is not None and n_max < 2:
            problems["parameters.n_max"] = "must be at least 2"
        _floats(p, "s_values", problems)
    elif cfg.kind == "dimension":
        _scalar(p, "depth", problems, int)
        lo, hi = _scalar(p, "eps_min", problems), _scalar(p, "eps_max", problems)
        if lo is not None and hi is not None and not 0 < lo < hi:
            problems["parameters.eps_min"] = "need 0 < eps_min < eps_max"
    elif cfg.kind == "porosity":
        for key in ("nu", "alpha0", "alpha1", "scale_ratio"):
            _scalar(p, key, problems)
        _scalar(p, "depth", problems, int)
        _ints(p, "digits", problems)
    elif cfg.kind == "spectrum":
        op = p.get("operator", "model")
        if op in ("model", "uncertainty"):
            _ints(p, "h_exponents", problems)
        elif op == "baker":
            _ints(p, "depths", problems)
            _ints(p, "kept", problems)
        else:
            problems["parameters.operator"] = f"unknown operator {op!r}"
    elif cfg.kind == "fup":
        depths = _ints(p, "depths", problems)
        if depths and len(depths) < 4:
            problems["parameters.depths"] = "fitting needs at least 4 scales"
        _ints(p, "alphabet", problems)
    elif cfg.kind == "numerology":
        for key in ("lambda0", "lambda1", "beta"):
            _floats(p, key, problems)
    if problems:
        raise ValidationError(problems)
    return notes


# --------------------------------------------------------------------------
# Output


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


@dataclass
class Table:
    header: list
    rows: list


@dataclass
class RunManifest:
    config_hash: str
    version: str
    kind: str
    seed: int
    stages: dict
    outputs: list
    warnings: list

    def as_dict(self):
        return {
            "config_hash": self.config_hash,
            "artifact_version": self.version,
            "kind": self.kind,
            "seed": self.seed,
            "wall_clock_seconds": self.stages,
            "outputs": self.outputs,
            "warnings": self.warnings,
        }


def _write_csv(path: Path, table: Table, config_hash: str):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["config_hash"] + list(table.header))
        for row in table.rows:
            w.writerow([config_hash] + [_fmt(v) for v in row])


def _json_default(v):
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.bool_,)):
        return bool(v)
    raise TypeError(f"not serializable: {type(v)}")


def _version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


# --------------------------------------------------------------------------
# Sweep workers (module level so they pickle)


def _spectrum_point(h_exp: int):
    from .quantum import decay_power, model_open_map, power_norm, spectral_radius

    h = 2.0**-h_exp
    M = model_open_map(h)
    n = decay_power(h)
    return (h_exp, h, M.N, spectral_radius(M), n, power_norm(M, n))


def _baker_point(args):
    from .quantum import open_baker_operator, spectral_radius

    k, base, kept = args
    B = open_baker_operator(base**k, base, kept)
    return (k, base**k, spectral_radius(B), B.norm())


def _uncertainty_point(args):
    from .quantum import uncertainty_box_norm

    h_exp, exponent = args
    h = 2.0**-h_exp
    return (h_exp, h, h**exponent, uncertainty_box_norm(h, exponent))


def _fup_point(args):
    from .fup import FractalSetSpec, fup_norm, volume_bound

    base, alphabet, k = args
    C = FractalSetSpec.cantor(base, alphabet, k)
    return (k, C.N, len(C), len(C), fup_norm(C.N, C, C), volume_bound(C.N, C, C))


def _map(fn, items, workers):
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# --------------------------------------------------------------------------
# Experiments


def _exp_classical(cfg, workers, rng):
    from .classical.systems import trapped_set_sample

    p = cfg.parameters
    system = build_system(cfg.system)
    depth = int(p["depth"])
    x, xi, b = trapped_set_sample(system, depth, int(p["resolution"]))
    inv = system.check_invariants(int(p["invariant_samples"]), rng=rng)
    table = Table(["x", "xi", "block", "depth"], [(a, c, int(d), depth) for a, c, d in zip(x, xi, b)])
    return {"survivors.csv": table}, {"invariants.json": {"system": system.name, "defects": inv, "count": len(x)}}


def _exp_splitting(cfg, workers, rng):
    from .classical.systems import BakerSystem
    from .splitting import baker_setup, canonical_slope, linear_chart_setup

    p = cfg.parameters
    n = int(p["n"])
    if cfg.system.get("kind", "linear") == "linear":
        m = [float(v) for v in cfg.system.get("matrix", "2, 1, 1, 1").split(",")]
        _, T = linear_chart_setup(tuple(map(tuple, np.reshape(m, (2, 2)))), float(cfg.system.get("half_width", "1")), n)
    else:
        system = build_system(cfg.system)
        if not isinstance(system, BakerSystem):
            raise ValidationError({"system.kind": "splitting supports linear and baker systems"})
        T = baker_setup(system, n=n)
    lam, report = T.solve(tol=float(p["tol"]), max_iter=int(p["max_iter"]))
    alpha, dreport = T.solve_derivative(lam)
    gx, gxi = T.grid.flat()
    av = alpha.values.reshape(-1, 2)
    table = Table(["x", "xi", "lambda", "alpha1", "alpha2"],
                  [(gx[k], gxi[k], lam.values.ravel()[k], av[k, 0], av[k, 1]) for k in range(gx.size)])
    info = json.loads(report.to_json())
    info.update({"invariance_defect": T.invariance_defect(lam), "derivative": json.loads(dreport.to_json())})
    if cfg.system.get("kind", "linear") == "linear":
        l0 = float(T.grid.interpolate(lam.values, [0.0], [0.0])[0])
        info["slope_at_origin"] = canonical_slope(T.frames, l0, 0.0, 0.0)
    return {"slope_field.csv": table}, {"convergence.json": info}


def _exp_pressure(cfg, workers, rng):
    from .thermo import NoGapError, PressureEstimator, bowen_root

    p = cfg.parameters
    system = build_system(cfg.system)
    est = PressureEstimator(system, int(p["n_max"]))
    curve = est.curve([float(v) for v in p["s_values"].split(",")])
    rows = [(r["s"], r["n"], r["estimate"], r["ratio_estimate"]) for r in curve.rows()]
    info = {"limits": {repr(s): curve.limit(k) for k, s in enumerate(curve.s_values)}}
    if p.get("bowen", "yes").lower() in ("yes", "true", "1"):
        try:
            rep = bowen_root(system, n_max=est.n_max, estimator=est)
            info["bowen_root"] = rep.delta
            info["bowen_details"] = rep.details
        except NoGapError as exc:
            info["bowen_root"] = None
            info["no_gap"] = str(exc)
    return {"pressure.csv": Table(["s", "n", "estimate", "ratio_estimate"], rows)}, {"pressure.json": info}


def _exp_dimension(cfg, workers, rng):
    from .classical.trace import baker_trace, disk_trace
    from .thermo import box_counts, box_dimension

    p = cfg.parameters
    system = build_system(cfg.system)
    depth = int(p["depth"])
    trace = disk_trace(system, depth) if system.kind == "disks" else baker_trace(system, depth)
    rep = box_dimension(trace.intervals, float(p["eps_min"]), float(p["eps_max"]))
    eps = np.asarray(rep.details["eps"])
    counts = box_counts(trace.intervals, eps)
    info = {"delta": rep.delta, "C": rep.constant_C, "trace_counts": trace.counts, "depth": depth}
    return {"box_counts.csv": Table(["eps", "N"], list(zip(eps, counts.astype(int))))}, {"dimension.json": info}


def _exp_porosity(cfg, workers, rng):
    from .thermo import box_dimension, cantor_intervals, check_porosity, dimension_from_porosity, porosity_from_dimension

    p = cfg.parameters
    base, depth = int(p["base"]), int(p["depth"])
    digits = [int(v) for v in p["digits"].split(",")]
    iv = cantor_intervals(base, digits, depth)
    nu, a0, a1 = float(p["nu"]), float(p["alpha0"]), float(p["alpha1"])
    cert = check_porosity(iv, nu, a0, a1, scale_ratio=float(p["scale_ratio"]))
    C_bound, delta_bound = dimension_from_porosity(nu, a1, 1.0)
    meas = box_dimension(iv, base ** -(depth - 1), 0.5, base=base)
    nu_back = porosity_from_dimension(meas.constant_C, meas.delta, 0.5)
    recert = check_porosity(iv, nu_back, max(a0, base**-depth), a1)
    rows = [(r["scale"], r["interval_lo"], r["interval_hi"], r["gap_lo"], r["gap_hi"]) for r in cert.rows()]
    info = {
        "certified": cert.certified, "failure": cert.failure, "resolution": cert.checked_resolution,
        "delta_bound": delta_bound, "C_bound": C_bound, "measured_delta": meas.delta,
        "measured_C": meas.constant_C, "nu_from_dimension": nu_back, "recertified": recert.certified,
    }
    return {"porosity.csv": Table(["scale", "interval_lo", "interval_hi", "gap_lo", "gap_hi"], rows)}, {"porosity.json": info}


def _exp_spectrum(cfg, workers, rng):
    from .quantum import fit_loglog_slope

    p = cfg.parameters
    op = p.get("operator", "model")
    if op == "model":
        res = _map(_spectrum_point, [int(v) for v in p["h_exponents"].split(",")], workers)
        slope = fit_loglog_slope([r[1] for r in res], [r[5] for r in res]) if len(res) > 1 else float("nan")
        table = Table(["h_exponent", "h", "N", "rho_spec", "power", "power_norm", "fitted_slope"],
                      [r + (slope,) for r in res])
        return {"spectrum.csv": table}, {"spectrum.json": {"fitted_slope": slope, "rho_spec": [r[3] for r in res]}}
    if op == "baker":
        kept = tuple(int(v) for v in p["kept"].split(","))
        base = int(p.get("base", "3"))
        res = _map(_baker_point, [(int(k), base, kept) for k in p["depths"].split(",")], workers)
        table = Table(["k", "N", "rho_spec", "norm"], res)
        return {"baker_spectrum.csv": table}, {"baker_spectrum.json": {"max_rho_spec": max(r[2] for r in res)}}
    exponent = float(p.get("exponent", "0.75"))
    res = _map(_uncertainty_point, [(int(v), exponent) for v in p["h_exponents"].split(",")], workers)
    slope = fit_loglog_slope([r[1] for r in res], [r[3] for r in res]) if len(res) > 1 else float("nan")
    table = Table(["h_exponent", "h", "half_width", "norm", "fitted_slope"], [r + (slope,) for r in res])
    return {"uncertainty.csv": table}, {"uncertainty.json": {"fitted_slope": slope}}


def _exp_fup(cfg, workers, rng):
    from .fup import FupExperiment, fit_fup_exponent

    p = cfg.parameters
    base = int(p["base"])
    alphabet = tuple(int(v) for v in p["alphabet"].split(","))
    depths = [int(v) for v in p["depths"].split(",")]
    res = _map(_fup_point, [(base, alphabet, k) for k in depths], workers)
    exp = FupExperiment([r[1] for r in res], [None] * len(res), [None] * len(res), [r[4] for r in res], [r[5] for r in res])
    beta, band = fit_fup_exponent(exp, discard=int(p["discard"]))
    table = Table(["k", "N", "size_minus", "size_plus", "norm", "trivial_bound", "fitted_beta"], [r + (beta,) for r in res])
    return {"fup.csv": table}, {"fup.json": {"beta": beta, "band": list(band)}}


def _exp_numerology(cfg, workers, rng):
    from .thermo import numerology

    p = cfg.parameters
    rows, profiles = [], []
    for l0 in [float(v) for v in p["lambda0"].split(",")]:
        for l1 in [float(v) for v in p["lambda1"].split(",")]:
            for beta in [float(v) for v in p["beta"].split(",")]:
                if l0 > l1:
                    continue
                prof = numerology(l0, l1, beta)
                d = prof.as_dict()
                profiles.append(d)
                rows.append((l0, l1, beta, prof.frak_b, prof.delta0, prof.tau, prof.delta2, all(prof.checks.values())))
    if not rows:
        raise ValidationError({"parameters.lambda0": "no pair with lambda0 <= lambda1"})
    table = Table(["lambda0", "lambda1", "beta", "frak_b", "delta0", "tau", "delta2", "all_checks"], rows)
    return {"numerology.csv": table}, {"numerology.json": {"profiles": profiles}}


_RUNNERS = {
    "classical": _exp_classical,
    "splitting": _exp_splitting,
    "pressure": _exp_pressure,
    "dimension": _exp_dimension,
    "porosity": _exp_porosity,
    "spectrum": _exp_spectrum,
    "fup": _exp_fup,
    "numerology": _exp_numerology,
}


def run(config: ExperimentConfig, out_dir, workers: int = 1) -> RunManifest:
    """Validate, execute and write outputs; returns the manifest (also written as JSON)."""
    t0 = time.perf_counter()
    notes = validate(config)
    cfg = config.with_defaults()
    stages = {"validate": time.perf_counter() - t0}
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    h = cfg.hash()
    rng = np.random.default_rng(cfg.seed)
    t1 = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        tables, reports = _RUNNERS[cfg.kind](cfg, max(1, int(workers)), rng)
    notes.extend(str(w.message) for w in caught if str(w.message) not in notes)
    stages["compute"] = time.perf_counter() - t1
    t2 = time.perf_counter()
    written = []
    for name, table in tables.items():
        _write_csv(out / name, table, h)
        written.append(name)
    for name, payload in reports.items():
        body = {"config_hash": h, "seed": cfg.seed, **payload}
        (out / name).write_text(json.dumps(body, indent=2, sort_keys=True, default=_json_default) + "\n")
        written.append(name)
    (out / "config.ini").write_text(cfg.to_text())
    written.append("config.ini")
    stages["write"] = time.perf_counter() - t2
    manifest = RunManifest(h, _version(), cfg.kind, cfg.seed, stages, written, notes)
    (out / "manifest.json").write_text(json.dumps(manifest.as_dict(), indent=2) + "\n")
    return manifest


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


__all__ = [
    "CATALOG",
    "ExperimentConfig",
    "KINDS",
    "RunManifest",
    "ValidationError",
    "build_system",
    "file_digest",
    "list_experiments",
    "load_system_config",
    "run",
    "validate",
]
