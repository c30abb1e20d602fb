"""Experiment configuration: JSON schema, validation and resolution.

A config file is a JSON object. Problem and bookkeeping keys live at the top
level; optimizer, penalty and analysis settings sit in nested blocks::

    {
      "seed": 0, "d": 16, "k": 4,
      "w_star_seed": null, "w_star": null,
      "init_seed": null, "init_scale": 1.0, "init": null,
      "lipschitz_M": null, "L": null,
      "output_dir": "out/run",
      "optimizer": {"method": "rvsm", "eta": null, "beta": null, "beta_fraction": 0.5,
                    "max_iters": 10000, "stop_tol": 1e-12, "u_update_source": "previous_w"},
      "penalty": {"kind": "l1", "lambda": null, "lambda_over_beta": 0.1, "a": 1.0},
      "analysis": {"limit": true, "monotone": true, "annulus": true}
    }

Nulls are resolved from the rest of the file: seeds derive from ``seed``,
``beta`` from ``beta_fraction`` times its admissible bound at the initial
angle, ``eta`` from ``1/(beta + L)``, and ``L`` from the coplanar gradient
bound at radius ``lipschitz_M`` (default ``|w*|/2``). Unknown keys are errors.
"""
from __future__ import annotations

import copy
import json
import math
import re
from dataclasses import dataclass

import numpy as np

from .core import angle, child_seeds
from .errors import InvalidConfig
from .optimizers import PREVIOUS_W, CURRENT_W, AdmmConfig, RandomSphereInit, RvsmConfig, initial_point
from .penalties import Penalty, PenaltyKind
from .population import PI, ProblemSpec, lipschitz_bound

METHODS = ("rvsm", "admm", "gd")

DEFAULTS = {
    "seed": 0,
    "d": None,
    "k": None,
    "w_star_seed": None,
    "w_star": None,
    "init_seed": None,
    "init_scale": 1.0,
    "init": None,
    "lipschitz_M": None,
    "L": None,
    "output_dir": "out/run",
    "optimizer": {
        "method": "rvsm",
        "eta": None,
        "beta": None,
        "beta_fraction": 0.5,
        "max_iters": 10_000,
        "stop_tol": 1e-12,
        "u_update_source": PREVIOUS_W,
    },
    "penalty": {
        "kind": "l1",
        "lambda": None,
        "lambda_over_beta": None,
        "a": 1.0,
    },
    "analysis": {
        "limit": True,
        "monotone": True,
        "annulus": True,
    },
}


def _line_of(text: str | None, key: str) -> int | None:
    if not text:
        return None
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _merge(base: dict, raw: dict, text: str | None, prefix: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in raw.items():
        if key not in base:
            raise InvalidConfig(f"unknown key {prefix + key!r}", _line_of(text, key))
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise InvalidConfig(f"{prefix + key!r} must be an object", _line_of(text, key))
            out[key] = _merge(base[key], value, text, prefix + key + ".")
        else:
            out[key] = value
    return out


def parse_value(text: str):
    """Parse an override value as JSON, falling back to the bare string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(raw: dict, dotted: str, value) -> None:
    """Set ``raw[a][b] = value`` for ``dotted == "a.b"``; unknown paths are errors."""
    parts = dotted.split(".")
    node, schema = raw, DEFAULTS
    for part in parts[:-1]:
        if part not in schema or not isinstance(schema[part], dict):
            raise InvalidConfig(f"unknown override key {dotted!r}")
        schema = schema[part]
        node = node.setdefault(part, {})
    if parts[-1] not in schema or isinstance(schema[parts[-1]], dict):
        raise InvalidConfig(f"unknown override key {dotted!r}")
    node[parts[-1]] = value


def parse_overrides(items) -> list[tuple[str, object]]:
    out = []
    for item in items or ():
        if "=" not in item:
            raise InvalidConfig(f"override {item!r} is not of the form key=value")
        key, _, value = item.partition("=")
        out.append((key.strip(), parse_value(value.strip())))
    return out


def read_config_text(path) -> tuple[dict, str]:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InvalidConfig(f"cannot read config {path}: {exc.strerror or exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"malformed JSON: {exc.msg}", exc.lineno) from exc
    if not isinstance(raw, dict):
        raise InvalidConfig("top level must be a JSON object", 1)
    return raw, text


def _num(value, name, *, positive=False, nonneg=False, allow_none=False, text=None, key=None):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise InvalidConfig(f"{name} must be a finite number, got {value!r}", _line_of(text, key or name))
    if positive and not value > 0:
        raise InvalidConfig(f"{name} must be positive, got {value!r}", _line_of(text, key or name))
    if nonneg and not value >= 0:
        raise InvalidConfig(f"{name} must be >= 0, got {value!r}", _line_of(text, key or name))
    return float(value)


def _int(value, name, *, minimum=None, allow_none=False, text=None, key=None):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        else:
            raise InvalidConfig(f"{name} must be an integer, got {value!r}", _line_of(text, key or name))
    if minimum is not None and value < minimum:
        raise InvalidConfig(f"{name} must be >= {minimum}, got {value!r}", _line_of(text, key or name))
    return int(value)


def _vector(value, name, text):
    try:
        v = np.asarray(value, dtype=np.float64)
    except (TypeError, ValueError):
        raise InvalidConfig(f"{name} must be a list of numbers", _line_of(text, name)) from None
    if v.ndim != 1 or v.size == 0 or not np.all(np.isfinite(v)):
        raise InvalidConfig(f"{name} must be a nonempty list of finite numbers", _line_of(text, name))
    return v


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully resolved experiment: every null in the source is filled in."""

    raw: dict
    method: str
    spec: ProblemSpec
    w0: np.ndarray
    L: float
    lipschitz_M: float
    optimizer: object  # RvsmConfig or AdmmConfig; GD reuses RvsmConfig for eta / budget
    penalty: Penalty
    beta: float
    eta: float
    beta_bound: float
    delta: float
    analysis: dict
    output_dir: str

    def resolved_dict(self) -> dict:
        return {
            "method": self.method,
            "d": self.spec.d,
            "k": self.spec.k,
            "w_star": self.spec.w_star.tolist(),
            "w0": self.w0.tolist(),
            "L": self.L,
            "lipschitz_M": self.lipschitz_M,
            "eta": self.eta,
            "beta": self.beta,
            "beta_bound": self.beta_bound,
            "delta": self.delta,
            "penalty": {"kind": self.penalty.kind.value, "lambda": self.penalty.lam, "a": self.penalty.a},
            "max_iters": self.optimizer.max_iters,
            "stop_tol": self.optimizer.stop_tol,
            "u_update_source": getattr(self.optimizer, "u_update_source", None),
        }


def resolve(raw: dict, text: str | None = None) -> ExperimentConfig:
    """Validate ``raw`` against the schema and fill in derived values."""
    cfg = _merge(DEFAULTS, raw, text)
    opt, pen, ana = cfg["optimizer"], cfg["penalty"], cfg["analysis"]

    seed = _int(cfg["seed"], "seed", minimum=0, text=text)
    spec_seed_default, init_seed_default = child_seeds(seed, 2)

    k = _int(cfg["k"], "k", minimum=1, allow_none=True, text=text)
    if k is None:
        raise InvalidConfig("k is required")
    d = _int(cfg["d"], "d", minimum=1, allow_none=True, text=text)
    if cfg["w_star"] is not None:
        w_star = _vector(cfg["w_star"], "w_star", text)
        if d is not None and w_star.size != d:
            raise InvalidConfig(f"w_star has length {w_star.size} but d = {d}", _line_of(text, "w_star"))
        if not np.linalg.norm(w_star) > 1e-12:
            raise InvalidConfig("w_star must be nonzero", _line_of(text, "w_star"))
        spec = ProblemSpec(w_star, k)
    else:
        if d is None:
            raise InvalidConfig("d is required unless w_star is given")
        ws_seed = _int(cfg["w_star_seed"], "w_star_seed", minimum=0, allow_none=True, text=text)
        spec = ProblemSpec.random(d, k, spec_seed_default if ws_seed is None else ws_seed)
    d = spec.d

    if cfg["init"] is not None:
        w0 = _vector(cfg["init"], "init", text)
        if w0.size != d:
            raise InvalidConfig(f"init has length {w0.size} but d = {d}", _line_of(text, "init"))
        if not np.linalg.norm(w0) > 1e-12:
            raise InvalidConfig("init must be nonzero", _line_of(text, "init"))
    else:
        scale = _num(cfg["init_scale"], "init_scale", positive=True, text=text)
        iseed = _int(cfg["init_seed"], "init_seed", minimum=0, allow_none=True, text=text)
        w0 = initial_point(RandomSphereInit(init_seed_default if iseed is None else iseed, scale), d)

    M = _num(cfg["lipschitz_M"], "lipschitz_M", positive=True, allow_none=True, text=text)
    if M is None:
        M = spec.w_star_norm / 2.0
    L = _num(cfg["L"], "L", positive=True, allow_none=True, text=text)
    if L is None:
        L = lipschitz_bound(M, spec)

    method = opt["method"]
    if method not in METHODS:
        raise InvalidConfig(f"optimizer.method must be one of {METHODS}, got {method!r}", _line_of(text, "method"))
    delta = PI - angle(w0, spec.w_star)
    beta_bound = delta * math.sin(delta) / (spec.k * PI)
    beta = _num(opt["beta"], "optimizer.beta", positive=True, allow_none=True, text=text, key="beta")
    if beta is None:
        frac = _num(opt["beta_fraction"], "optimizer.beta_fraction", positive=True, text=text, key="beta_fraction")
        beta = frac * beta_bound
        if not beta > 0:
            raise InvalidConfig("initial point is antiparallel to w_star; set optimizer.beta explicitly")
    eta = _num(opt["eta"], "optimizer.eta", positive=True, allow_none=True, text=text, key="eta")
    if eta is None:
        eta = 1.0 / ((0.0 if method == "gd" else beta) + L)
    max_iters = _int(opt["max_iters"], "optimizer.max_iters", minimum=1, text=text, key="max_iters")
    stop_tol = _num(opt["stop_tol"], "optimizer.stop_tol", nonneg=True, text=text, key="stop_tol")
    source = opt["u_update_source"]
    if source not in (PREVIOUS_W, CURRENT_W):
        raise InvalidConfig(f"optimizer.u_update_source must be {PREVIOUS_W!r} or {CURRENT_W!r}",
                            _line_of(text, "u_update_source"))

    try:
        kind = PenaltyKind(pen["kind"])
    except ValueError:
        raise InvalidConfig(f"penalty.kind must be one of l1, l0, tl1, got {pen['kind']!r}",
                            _line_of(text, "kind")) from None
    lam = _num(pen["lambda"], "penalty.lambda", nonneg=True, allow_none=True, text=text, key="lambda")
    ratio = _num(pen["lambda_over_beta"], "penalty.lambda_over_beta", nonneg=True, allow_none=True,
                 text=text, key="lambda_over_beta")
    if lam is not None and ratio is not None:
        raise InvalidConfig("give penalty.lambda or penalty.lambda_over_beta, not both", _line_of(text, "lambda"))
    if lam is None:
        lam = (0.1 if ratio is None else ratio) * beta
    a = _num(pen["a"], "penalty.a", positive=True, text=text, key="a")
    penalty = Penalty(kind, lam, a)

    for name, value in ana.items():
        if not isinstance(value, bool):
            raise InvalidConfig(f"analysis.{name} must be true or false", _line_of(text, name))
    out_dir = cfg["output_dir"]
    if not isinstance(out_dir, str) or not out_dir:
        raise InvalidConfig("output_dir must be a nonempty string", _line_of(text, "output_dir"))

    common = dict(eta=eta, beta=beta, penalty=penalty, max_iters=max_iters, stop_tol=stop_tol, init=w0)
    if method == "admm":
        optimizer = AdmmConfig(**common)
    else:
        optimizer = RvsmConfig(u_update_source=source, **common)

    return ExperimentConfig(
        raw=cfg, method=method, spec=spec, w0=w0, L=L, lipschitz_M=M, optimizer=optimizer,
        penalty=penalty, beta=beta, eta=eta, beta_bound=beta_bound, delta=delta,
        analysis=dict(ana), output_dir=out_dir,
    )


def load_config(path, overrides=()) -> ExperimentConfig:
    """Read, override, validate and resolve a config file."""
    raw, text = read_config_text(path)
    for key, value in overrides:
        apply_override(raw, key, value)
    return resolve(raw, text)
