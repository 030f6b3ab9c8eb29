"""Fading channels as ensembles of quasi-static sub-channels."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

PROB_TOL = 1e-9


@dataclass(frozen=True)
class SubChannelEnsemble:
    """Transmissivities ``etas`` occurring with probabilities ``probs``."""

    etas: tuple[float, ...]
    probs: tuple[float, ...]
    eta_max: float = 1.0

    def __post_init__(self):
        etas = tuple(float(e) for e in self.etas)
        probs = tuple(float(p) for p in self.probs)
        if not etas:
            raise ValueError("ensemble has no sub-channels")
        if len(etas) != len(probs):
            raise ValueError("etas and probs differ in length")
        if not 0.0 <= self.eta_max <= 1.0:
            raise ValueError(f"eta_max must lie in [0, 1], got {self.eta_max}")
        if any(not 0.0 <= e <= self.eta_max for e in etas):
            raise ValueError(f"sub-channel transmissivities must lie in [0, {self.eta_max}]")
        if any(not 0.0 < p <= 1.0 + PROB_TOL for p in probs):
            raise ValueError("sub-channel probabilities must lie in (0, 1]")
        probs = tuple(min(p, 1.0) for p in probs)  # rounding from merges/fsums
        if abs(math.fsum(probs) - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {math.fsum(probs)!r}, not 1")
        object.__setattr__(self, "etas", etas)
        object.__setattr__(self, "probs", probs)

    def __len__(self):
        return len(self.etas)

    def scaled(self, factor: float) -> "SubChannelEnsemble":
        """Extra attenuation by ``factor`` applied to every sub-channel."""
        return SubChannelEnsemble(tuple(e * factor for e in self.etas), self.probs,
                                  eta_max=1.0)

    def merged(self) -> "SubChannelEnsemble":
        """Combine duplicate transmissivities, summing their probabilities."""
        acc: dict[float, list[float]] = {}
        for e, p in zip(self.etas, self.probs):
            acc.setdefault(e, []).append(p)
        etas = sorted(acc)
        return SubChannelEnsemble(tuple(etas), tuple(math.fsum(acc[e]) for e in etas),
                                  self.eta_max)


@dataclass(frozen=True)
class ChannelStats:
    mean_eta: float
    mean_sqrt_eta: float
    eta_f: float
    var_sqrt_eta: float

    @classmethod
    def fixed(cls, eta: float) -> "ChannelStats":
        return stats_from_ensemble(fixed_channel(eta))

    @property
    def loss_db(self) -> float:
        return loss_db(self.eta_f)


def stats_from_ensemble(e: SubChannelEnsemble) -> ChannelStats:
    etas = np.asarray(e.etas)
    probs = np.asarray(e.probs)
    # fsum keeps the moments independent of summation order
    mean_eta = math.fsum(probs * etas)
    mean_sqrt = math.fsum(probs * np.sqrt(etas))
    eta_f = mean_sqrt * mean_sqrt
    var = max(mean_eta - eta_f, 0.0)
    return ChannelStats(mean_eta=mean_eta, mean_sqrt_eta=mean_sqrt, eta_f=eta_f,
                        var_sqrt_eta=var)


def fixed_channel(eta: float) -> SubChannelEnsemble:
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"transmissivity must lie in [0, 1], got {eta}")
    return SubChannelEnsemble((float(eta),), (1.0,))


def ensemble_from_samples(samples: Sequence[float] | np.ndarray,
                          bins: int | None = None) -> SubChannelEnsemble:
    """Uniform-weight ensemble from transmissivity samples.

    With ``bins`` the samples are histogrammed on [0, 1] and each occupied bin
    is represented by the mean of its samples, which preserves the first
    moment exactly.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("no transmissivity samples")
    if np.any(~np.isfinite(x)) or np.any((x < 0.0) | (x > 1.0)):
        raise ValueError("transmissivity samples must lie in [0, 1]")
    if bins is None:
        w = 1.0 / x.size
        return SubChannelEnsemble(tuple(x), (w,) * x.size)
    if bins < 1:
        raise ValueError("bins must be positive")
    which = np.minimum((x * bins).astype(int), bins - 1)
    counts = np.bincount(which, minlength=bins)
    sums = np.bincount(which, weights=x, minlength=bins)
    occ = counts > 0
    return SubChannelEnsemble(tuple(sums[occ] / counts[occ]), tuple(counts[occ] / x.size))


def parse_inline_ensemble(text: str) -> SubChannelEnsemble:
    """Parse ``"eta:prob,eta:prob,..."``."""
    etas, probs = [], []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            eta, prob = item.split(":")
            etas.append(float(eta))
            probs.append(float(prob))
        except ValueError as exc:
            raise ValueError(f"bad ensemble entry {item!r}, expected eta:prob") from exc
    return SubChannelEnsemble(tuple(etas), tuple(probs))


def read_samples(path: str | Path) -> np.ndarray:
    """One value per line; ``#`` starts a comment."""
    values = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            v = float(line)
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: not a number: {line!r}") from exc
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{path}:{lineno}: transmissivity {v} outside [0, 1]")
        values.append(v)
    return np.array(values)


def write_samples(path: str | Path, samples: Iterable[float]) -> None:
    Path(path).write_text("".join(f"{float(v)!r}\n" for v in samples))


def loss_db(eta_f: float) -> float:
    return math.inf if eta_f <= 0.0 else -10.0 * math.log10(eta_f)


def eta_from_loss_db(db: float) -> float:
    return 10.0 ** (-db / 10.0)
