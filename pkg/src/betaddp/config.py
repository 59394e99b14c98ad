"""INI run configuration.

A run is described by one file plus a seed. Sections and keys (all optional
unless noted; defaults in brackets)::

    [run]        seed (required here or via --seed), out [results], chains [1], workers [1]
    [prior]      scheme [H1], r [2], alphas [1, 1], discount [0]
    [model]      preset (WI | SI-Mix1 | SI-Mix2 | SI-Mix3), s2 [0.1], lam [0.5],
                 zeta [0.01, 0.01, 0.01, 0.01], p [4]
    [schedule]   sweeps [20000], burn_in [10000], thin [1], predictive [yes], log_every [1000]
    [tuning]     tau2 [0.05], kappa [2.0], adapt_kappa [yes], v_move [componentwise],
                 alpha_conditioning [instantiated]
    [data]       path, model [Mix1], n [50], T [300], kind [level]
    [prior_check] grid [0.5, 1, 2], schemes [H1, H2], samples [1000000]
    [analysis]   archive, pair_thin [10], grid_points [512]

Explicit ``s2``/``lam``/``zeta`` keys override the preset.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .distributions import ParameterError
from .gaussian import GaussianModelSpec, wi_si_presets
from .gibbs import MhTuning, Schedule
from .prior import StickConstruction
from .var import VarModelSpec

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config"]


class ConfigError(ValueError):
    """Invalid or incomplete run configuration."""


def _floats(text):
    try:
        return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from exc


@dataclass
class RunConfig:
    command: str = ""
    seed: Optional[int] = None
    out: Path = Path("results")
    chains: int = 1
    workers: int = 1
    scheme: str = "H1"
    r: int = 2
    alphas: tuple = (1.0, 1.0)
    discount: float = 0.0
    model: dict = field(default_factory=dict)
    schedule: dict = field(default_factory=dict)
    tuning: dict = field(default_factory=dict)
    data: dict = field(default_factory=dict)
    prior_check: dict = field(default_factory=dict)
    analysis: dict = field(default_factory=dict)

    def construction(self) -> StickConstruction:
        try:
            return StickConstruction(self.scheme, self.r, self.alphas, self.discount)
        except (ParameterError, ValueError) as exc:
            raise ConfigError(f"[prior] {exc}") from exc

    def gaussian_spec(self) -> GaussianModelSpec:
        m = self.model
        base = GaussianModelSpec()
        if "preset" in m:
            presets = wi_si_presets()
            if m["preset"] not in presets:
                raise ConfigError(f"[model] unknown preset {m['preset']!r}; choose from {sorted(presets)}")
            base = presets[m["preset"]]
        try:
            return GaussianModelSpec(
                float(m.get("s2", base.s2)),
                float(m.get("lam", base.lam)),
                _floats(m["zeta"]) if "zeta" in m else base.zeta,
            )
        except (ParameterError, ValueError) as exc:
            raise ConfigError(f"[model] {exc}") from exc

    def var_spec(self) -> VarModelSpec:
        g = self.gaussian_spec()
        try:
            return VarModelSpec(g.s2, g.lam, g.zeta, p=int(self.model.get("p", 4)))
        except (ParameterError, ValueError) as exc:
            raise ConfigError(f"[model] {exc}") from exc

    def make_schedule(self, seed) -> Schedule:
        s = self.schedule
        try:
            return Schedule(
                sweeps=int(s.get("sweeps", 20000)),
                burn_in=int(s.get("burn_in", 10000)),
                thin=int(s.get("thin", 1)),
                seed=seed,
                predictive=_bool(s.get("predictive", "yes")),
                log_every=int(s.get("log_every", 1000)),
            )
        except (ParameterError, ValueError) as exc:
            raise ConfigError(f"[schedule] {exc}") from exc

    def make_tuning(self) -> MhTuning:
        t = self.tuning
        try:
            return MhTuning(
                tau2=float(t.get("tau2", 0.05)),
                kappa=float(t.get("kappa", 2.0)),
                adapt_kappa=_bool(t.get("adapt_kappa", "yes")),
                v_move=t.get("v_move", "componentwise"),
            )
        except (ParameterError, ValueError) as exc:
            raise ConfigError(f"[tuning] {exc}") from exc

    @property
    def alpha_conditioning(self):
        return self.tuning.get("alpha_conditioning", "instantiated")


def _bool(text):
    value = str(text).strip().lower()
    if value in ("1", "yes", "true", "on"):
        return True
    if value in ("0", "no", "false", "off"):
        return False
    raise ConfigError(f"expected yes/no, got {text!r}")


_SECTIONS = {"run", "prior", "model", "schedule", "tuning", "data", "prior_check", "analysis"}


def parse_config(text: str, command: str = "") -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    unknown = set(cp.sections()) - _SECTIONS
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    cfg = RunConfig(command=command)
    run = cp["run"] if cp.has_section("run") else {}
    try:
        if "seed" in run:
            cfg.seed = int(run["seed"])
        cfg.out = Path(run.get("out", "results"))
        cfg.chains = int(run.get("chains", 1))
        cfg.workers = int(run.get("workers", 1))
        if cp.has_section("prior"):
            pr = cp["prior"]
            cfg.scheme = pr.get("scheme", "H1").strip()
            cfg.r = int(pr.get("r", 2))
            if "alphas" in pr:
                cfg.alphas = _floats(pr["alphas"])
            elif cfg.scheme.upper() == "H2":
                cfg.alphas = (1.0,) * cfg.r
            cfg.discount = float(pr.get("discount", 0.0))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    for name in ("model", "schedule", "tuning", "data", "prior_check", "analysis"):
        if cp.has_section(name):
            setattr(cfg, name, dict(cp[name]))
    if cfg.chains < 1 or cfg.workers < 1:
        raise ConfigError("[run] chains and workers must be >= 1")
    return cfg


def load_config(path, command: str = "") -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_config(text, command)
