"""Run configuration: defaults, INI files and resolution into model objects.

A config file is flat ``key = value`` text under section headers; every key
is optional. Example::

    [protocol]
    kind = squeezed
    squeezing_db = 10
    xi = 0.02
    eta_b = 0.61
    nu_b = 0.12
    beta = 0.98

    [channel]
    # one of: fixed (sweep eta_f directly), samples, ensemble
    mode = fixed
    samples =
    ensemble =
    bins =

    [block]
    block_size = 1e10
    pe_fraction = 0.5

    [security]
    eps = 1e-9
    d = 5
    # optional overrides; when any is set all four must be set
    eps_sm =
    eps_bar =
    eps_pe =
    eps_cor =

    [sweep]
    loss_db_min = 1
    loss_db_max = 30
    loss_db_step = 1
    loss_db = 10

    [estimation]
    n_sub_channels = 1000
    k_revealed = 1000000
    d_eta_b = 0
    d_v_sqz = 0
    worst_case = two-sided
    xi_propagation = ratio

    [run]
    seed = 0
    out =
"""

from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path

from .fading import (SubChannelEnsemble, ensemble_from_samples, parse_inline_ensemble,
                     read_samples)
from .finite_size import BlockPlan, EpsilonBudget, default_budget
from .protocol import ProtocolParams

MAX_LOSS_DB = 60.0

SECTIONS = {
    "protocol": ("kind", "squeezing_db", "v_sig", "xi", "eta_b", "nu_b", "beta"),
    "channel": ("mode", "samples", "ensemble", "bins"),
    "block": ("block_size", "pe_fraction"),
    "security": ("eps", "d", "eps_sm", "eps_bar", "eps_pe", "eps_cor"),
    "sweep": ("loss_db_min", "loss_db_max", "loss_db_step", "loss_db"),
    "estimation": ("n_sub_channels", "k_revealed", "d_eta_b", "d_v_sqz", "worst_case",
                   "xi_propagation"),
    "run": ("seed", "out", "workers"),
}


@dataclass(frozen=True)
class RunConfig:
    kind: str = "squeezed"
    squeezing_db: float = 10.0
    v_sig: float | None = None
    xi: float = 0.02
    eta_b: float = 0.61
    nu_b: float = 0.12
    beta: float = 0.98
    mode: str = "fixed"
    samples: str | None = None
    ensemble: str | None = None
    bins: int | None = None
    block_size: float = 1e10
    pe_fraction: float = 0.5
    eps: float = 1e-9
    d: int = 5
    eps_sm: float | None = None
    eps_bar: float | None = None
    eps_pe: float | None = None
    eps_cor: float | None = None
    loss_db_min: float = 1.0
    loss_db_max: float = 30.0
    loss_db_step: float = 1.0
    loss_db: float = 10.0
    n_sub_channels: int = 1000
    k_revealed: int = 1_000_000
    d_eta_b: float = 0.0
    d_v_sqz: float = 0.0
    worst_case: str = "two-sided"
    xi_propagation: str = "ratio"
    seed: int = 0
    out: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.kind not in ("squeezed", "coherent"):
            raise ValueError(f"protocol must be squeezed or coherent, got {self.kind!r}")
        if self.mode not in ("fixed", "samples", "ensemble"):
            raise ValueError(f"channel mode must be fixed, samples or ensemble, got {self.mode!r}")
        if self.mode == "samples" and not self.samples:
            raise ValueError("channel mode 'samples' needs a sample file")
        if self.mode == "ensemble" and not self.ensemble:
            raise ValueError("channel mode 'ensemble' needs an inline ensemble")
        if self.loss_db_step <= 0.0:
            raise ValueError("loss_db_step must be positive")
        if not 0.0 < self.loss_db_min <= self.loss_db_max <= MAX_LOSS_DB:
            raise ValueError(f"loss grid must lie in (0, {MAX_LOSS_DB:g}] dB")
        if self.worst_case not in ("one-sided", "two-sided"):
            raise ValueError(f"worst_case must be one-sided or two-sided, got {self.worst_case!r}")
        overrides = [self.eps_sm, self.eps_bar, self.eps_pe, self.eps_cor]
        if any(v is not None for v in overrides) and any(v is None for v in overrides):
            raise ValueError("epsilon overrides need all of eps_sm, eps_bar, eps_pe, eps_cor")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def protocol_params(self, v_sig: float | None = None) -> ProtocolParams:
        if self.kind == "squeezed":
            return ProtocolParams.squeezed(self.squeezing_db, self.xi, self.eta_b, self.nu_b,
                                           self.beta)
        v_sig = self.v_sig if v_sig is None else v_sig
        if v_sig is None:
            raise ValueError("coherent protocol needs v_sig (or use optimize)")
        return ProtocolParams.coherent(v_sig, self.xi, self.eta_b, self.nu_b, self.beta)

    def budget(self) -> EpsilonBudget:
        if self.eps_sm is None:
            return default_budget(self.eps, self.d)
        return EpsilonBudget(self.eps, self.eps_sm, self.eps_bar, self.eps_pe, self.eps_cor,
                             self.d)

    def block_plan(self) -> BlockPlan:
        return BlockPlan.from_fraction(int(round(self.block_size)), self.pe_fraction)

    def base_ensemble(self) -> SubChannelEnsemble | None:
        """User-supplied fading ensemble, or None for a fixed channel."""
        if self.mode == "samples":
            return ensemble_from_samples(read_samples(self.samples), bins=self.bins)
        if self.mode == "ensemble":
            return parse_inline_ensemble(self.ensemble)
        return None

    def loss_grid(self) -> list[float]:
        n = int(math.floor((self.loss_db_max - self.loss_db_min) / self.loss_db_step + 1e-9))
        return [round(self.loss_db_min + i * self.loss_db_step, 12) for i in range(n + 1)]

    def to_items(self) -> list[tuple[str, str, str]]:
        """(section, key, value) for every field, in a fixed order."""
        out = []
        for section, keys in SECTIONS.items():
            for key in keys:
                v = getattr(self, key)
                out.append((section, key, "" if v is None else repr(v) if isinstance(v, float)
                            else str(v)))
        return out

    def to_ini(self) -> str:
        parser = configparser.ConfigParser()
        for section, key, value in self.to_items():
            if not parser.has_section(section):
                parser.add_section(section)
            parser.set(section, key, value)
        lines = []
        for section in parser.sections():
            lines.append(f"[{section}]")
            lines.extend(f"{k} = {v}" for k, v in parser.items(section))
            lines.append("")
        return "\n".join(lines)


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key: str, raw: str):
    raw = raw.strip()
    kind = _TYPES[key]
    if raw == "" and "None" in kind:
        return None
    if kind.startswith("int"):
        return int(float(raw))
    if kind.startswith("float"):
        return float(raw)
    return raw


def load_config(path: str | Path, base: RunConfig | None = None) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    with open(path) as fh:
        parser.read_file(fh)
    known = {k: s for s, keys in SECTIONS.items() for k in keys}
    changes = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ValueError(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if known.get(key) != section:
                raise ValueError(f"{path}: unknown key {key!r} in [{section}]")
            changes[key] = _convert(key, raw)
    return dataclasses.replace(base or RunConfig(), **changes)
