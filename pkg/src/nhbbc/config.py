"""TOML run configuration: schema, validation and ``--set`` overrides.

Sections
--------
``[model]``
    Reduced parameters ``L``, ``lambda``, ``cooperativity``, ``theta``,
    ``delta``, ``gamma_eff``.
``[rates]``
    Raw rates ``J``, ``Gamma``, ``theta``, ``gamma``, ``kappa``, ``omega_c``,
    ``omega_d``.  Exactly one of ``[model]`` and ``[rates]`` must be present.
``[analysis]``
    ``kind`` (string or list) plus options, see ``ANALYSIS_KEYS``.
``[output]``
    ``dir``, ``formats`` (subset of csv, json, svg), ``seed``.
``[tolerances]``
    Optional overrides of the relative thresholds.
"""

from __future__ import annotations

import copy
import sys
from dataclasses import dataclass, field

from .errors import ConfigError, NhbbcError, ValidationError
from .model import LatticeParams, RawRates, parse_angle, reduce
from .tolerances import Tolerances

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

KINDS = ("spectrum", "winding", "svd", "gssh", "response", "disorder", "sweep")
MODEL_KEYS = {"L", "lambda", "cooperativity", "theta", "delta", "gamma_eff"}
RATE_KEYS = {"J", "Gamma", "theta", "gamma", "kappa", "omega_c", "omega_d"}
ANALYSIS_KEYS = {"kind", "N", "N_k", "omega", "gamma", "N_list", "delta_list", "param",
                 "values", "drive_sites", "disorder", "workers", "xtol"}
DISORDER_KEYS = {"w", "realizations", "seed", "kind"}
OUTPUT_KEYS = {"dir", "formats", "seed"}
FORMATS = ("csv", "json", "svg")
SECTIONS = {"model", "rates", "analysis", "output", "tolerances"}


def _cx(x, key):
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return complex(_flt(x[0], key), _flt(x[1], key))
    if isinstance(x, bool):
        raise ConfigError(f"{key}: cannot parse {x!r} as a complex number")
    try:
        return complex(str(x).replace(" ", "")) if isinstance(x, str) else complex(x)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: cannot parse {x!r} as a complex number") from exc


def _angle(x, key):
    try:
        return parse_angle(x)
    except NhbbcError as exc:
        raise ConfigError(f"{key}: {exc}") from exc


def _lst(x):
    return list(x) if isinstance(x, (list, tuple)) else [x]


def _flt(x, key):
    if isinstance(x, bool):
        raise ConfigError(f"{key}: expected a number, got {x!r}")
    try:
        return float(x)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: expected a number, got {x!r}") from exc


def _flts(x, key):
    return [_flt(v, key) for v in _lst(x)]


@dataclass
class RunConfig:
    params: LatticeParams
    analysis: dict
    output: dict
    tolerances: Tolerances
    raw: dict = field(default_factory=dict)

    @property
    def kinds(self):
        return self.analysis["kind"]


def parse_value(text: str):
    """Parse an override value as a TOML value, else keep the string."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_override(cfg: dict, assignment: str):
    """Apply ``path.key=value``; a bare section name sets its ``kind``."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} must look like path.key=value")
    path, text = assignment.split("=", 1)
    keys = [k.strip() for k in path.strip().split(".") if k.strip()]
    if not keys:
        raise ConfigError(f"override {assignment!r} has an empty path")
    if keys[0] not in SECTIONS:
        raise ConfigError(f"override {path!r}: unknown section {keys[0]!r} "
                          f"(choose from {sorted(SECTIONS)})")
    value = parse_value(text.strip())
    if len(keys) == 1:
        keys = keys + ["kind"]
    node = cfg
    for k in keys[:-1]:
        nxt = node.setdefault(k, {})
        if not isinstance(nxt, dict):
            raise ConfigError(f"override {path!r}: {k!r} is not a table")
        node = nxt
    node[keys[-1]] = value
    return cfg


def _check_keys(section, allowed, name):
    bad = sorted(set(section) - allowed)
    if bad:
        raise ConfigError(f"[{name}]: unknown key(s) {bad}; allowed {sorted(allowed)}")


def _model(sec):
    _check_keys(sec, MODEL_KEYS, "model")
    for k in ("lambda", "cooperativity", "theta"):
        if k not in sec:
            raise ConfigError(f"model.{k}: required")
    lam = [_cx(v, "model.lambda") for v in _lst(sec["lambda"])]
    L = _pos_int(sec.get("L", len(lam)), "model.L")
    try:
        return LatticeParams(
            L=L, lam=lam,
            cooperativity=_flts(sec["cooperativity"], "model.cooperativity"),
            theta=[_angle(v, "model.theta") for v in _lst(sec["theta"])],
            delta=_flt(sec.get("delta", 0.0), "model.delta"),
            gamma_eff=_flt(sec.get("gamma_eff", 1.0), "model.gamma_eff"))
    except ValidationError as exc:
        raise ConfigError(f"[model]: {exc}") from exc


def _rates(sec):
    _check_keys(sec, RATE_KEYS, "rates")
    for k in ("J", "Gamma", "theta", "gamma"):
        if k not in sec:
            raise ConfigError(f"rates.{k}: required")
    try:
        raw = RawRates(J=_flts(sec["J"], "rates.J"), Gamma=_flts(sec["Gamma"], "rates.Gamma"),
                       theta=[_angle(v, "rates.theta") for v in _lst(sec["theta"])],
                       gamma=_flt(sec["gamma"], "rates.gamma"),
                       kappa=_flt(sec.get("kappa", 0.0), "rates.kappa"),
                       omega_c=_flt(sec.get("omega_c", 0.0), "rates.omega_c"),
                       omega_d=_flt(sec.get("omega_d", 0.0), "rates.omega_d"))
    except ValidationError as exc:
        raise ConfigError(f"[rates]: {exc}") from exc
    return reduce(raw)


def _pos_int(x, key, minimum=1):
    try:
        if isinstance(x, bool):
            raise TypeError
        v = int(x)
    except (TypeError, ValueError, OverflowError) as exc:
        raise ConfigError(f"{key}: expected an integer, got {x!r}") from exc
    if v != x or v < minimum:
        raise ConfigError(f"{key}: must be an integer >= {minimum}, got {x!r}")
    return v


def _analysis(sec, out_seed):
    _check_keys(sec, ANALYSIS_KEYS, "analysis")
    kinds = _lst(sec.get("kind", ["spectrum", "winding"]))
    for k in kinds:
        if k not in KINDS:
            raise ConfigError(f"analysis.kind: {k!r} not in {list(KINDS)}")
    a = {"kind": list(dict.fromkeys(kinds))}
    a["N"] = _pos_int(sec.get("N", 50), "analysis.N", 2)
    a["N_k"] = None if "N_k" not in sec else _pos_int(sec["N_k"], "analysis.N_k", 2)
    a["omega"] = _flt(sec.get("omega", 0.0), "analysis.omega")
    a["gamma"] = _flt(sec.get("gamma", 0.2), "analysis.gamma")
    if a["gamma"] < 0:
        raise ConfigError("analysis.gamma: must be >= 0")
    a["N_list"] = [_pos_int(n, "analysis.N_list", 2) for n in _lst(sec.get("N_list", []))]
    vals = sec.get("values", sec.get("delta_list", []))
    a["values"] = _flts(vals, "analysis.values")
    a["param"] = sec.get("param", "delta")
    for p in _lst(a["param"]):
        head, _, idx = str(p).partition(".")
        if head not in ("delta", "lambda", "cooperativity", "theta") or \
                (idx and not idx.isdigit()) or (head == "delta" and idx):
            raise ConfigError(f"analysis.param: {p!r} must be delta or lambda/cooperativity/"
                              "theta with a 1-based index, e.g. cooperativity.2")
    a["drive_sites"] = [_pos_int(s, "analysis.drive_sites") for s in
                        _lst(sec.get("drive_sites", [1]))]
    a["workers"] = _pos_int(sec.get("workers", 1), "analysis.workers")
    a["xtol"] = _flt(sec.get("xtol", 1e-4), "analysis.xtol")
    if not a["xtol"] > 0:
        raise ConfigError("analysis.xtol: must be > 0")
    d = sec.get("disorder", {})
    if not isinstance(d, dict):
        raise ConfigError("analysis.disorder: must be a table")
    _check_keys(d, DISORDER_KEYS, "analysis.disorder")
    a["disorder"] = {"w": _flt(d.get("w", 0.0), "analysis.disorder.w"),
                     "realizations": _pos_int(d.get("realizations", 100),
                                              "analysis.disorder.realizations"),
                     "seed": _pos_int(d.get("seed", out_seed), "analysis.disorder.seed", 0),
                     "kind": str(d.get("kind", "imaginary_onsite"))}
    if a["disorder"]["kind"] != "imaginary_onsite":
        raise ConfigError("analysis.disorder.kind: only 'imaginary_onsite' is supported")
    if a["disorder"]["w"] < 0:
        raise ConfigError("analysis.disorder.w: must be >= 0")
    if "sweep" in a["kind"] and not a["values"]:
        raise ConfigError("analysis.values (or delta_list): required for kind 'sweep'")
    return a


def _output(sec):
    _check_keys(sec, OUTPUT_KEYS, "output")
    fm = _lst(sec.get("formats", list(FORMATS)))
    for f in fm:
        if f not in FORMATS:
            raise ConfigError(f"output.formats: {f!r} not in {list(FORMATS)}")
    return {"dir": str(sec.get("dir", "out")), "formats": fm,
            "seed": _pos_int(sec.get("seed", 0), "output.seed", 0)}


def build(cfg: dict) -> RunConfig:
    """Validate a raw config mapping."""
    unknown = set(cfg) - SECTIONS
    if unknown:
        raise ConfigError(f"unknown section(s) {sorted(unknown)}; allowed {sorted(SECTIONS)}")
    has_m, has_r = "model" in cfg, "rates" in cfg
    if has_m == has_r:
        raise ConfigError("exactly one of [model] or [rates] must be present")
    params = _model(cfg["model"]) if has_m else _rates(cfg["rates"])
    output = _output(cfg.get("output", {}))
    analysis = _analysis(cfg.get("analysis", {}), output["seed"])
    try:
        tol = Tolerances.from_mapping(cfg.get("tolerances", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[tolerances]: {exc}") from exc
    return RunConfig(params, analysis, output, tol, copy.deepcopy(cfg))


def load(path, overrides=()) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}") from exc
    for o in overrides:
        apply_override(cfg, o)
    try:
        return build(cfg)
    except ValidationError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def set_param(p: LatticeParams, name: str, value: float) -> LatticeParams:
    """Return ``p`` with ``delta`` or an indexed list entry (1-based) replaced."""
    if name == "delta":
        return p.replace(delta=value)
    head, _, idx = name.partition(".")
    i = int(idx or 1) - 1
    attr = {"lambda": "lam", "cooperativity": "cooperativity", "theta": "theta"}[head]
    vals = list(getattr(p, attr))
    if not 0 <= i < len(vals):
        raise ConfigError(f"analysis.param: index {i + 1} out of range for L={p.L}")
    vals[i] = value
    return p.replace(**{attr: vals})
