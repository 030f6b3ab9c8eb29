"""Parameter estimation from revealed quadrature data.

Each sub-channel follows the normal linear model q_B = t_s q_A + noise with
t_s = sqrt(eta_B eta) and noise variance
sigma_s^2 = 1 + nu_B + eta_B eta (V_sqz + xi - 1). Pooling every revealed pair
gives the same model with eta replaced by <eta>, from which xi follows once
Bob's shot-noise variance 1 + nu_B is measured.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import erfcinv

from .fading import ChannelStats, SubChannelEnsemble, stats_from_ensemble
from .protocol import ProtocolParams, holevo_direct


class DegenerateRegressorError(ValueError):
    """Raised when Alice's revealed values are all zero."""


def z_quantile(eps_pe: float) -> float:
    """z with (1 - erf(z / sqrt 2)) / 2 = eps_pe / 2, i.e. P(|Z| > z) = eps_pe."""
    if not 0.0 < eps_pe < 1.0:
        raise ValueError(f"eps_pe must lie in (0, 1), got {eps_pe}")
    return float(math.sqrt(2.0) * erfcinv(eps_pe))


@dataclass(frozen=True, eq=False)
class QuadratureDataset:
    """Revealed (A, B) pairs tagged by sub-channel, plus shot-noise samples."""

    sub_channel: np.ndarray
    a: np.ndarray
    b: np.ndarray
    shot_noise: np.ndarray
    n_sub_channels: int
    rng_seed: int | None = None

    @property
    def k(self) -> int:
        return int(self.a.size)

    @property
    def counts(self) -> np.ndarray:
        return np.bincount(self.sub_channel, minlength=self.n_sub_channels)

    def save(self, path: str | Path, shot_noise_path: str | Path | None = None) -> None:
        path = Path(path)
        shot_noise_path = Path(shot_noise_path or path.with_suffix(".shot.txt"))
        header = (f"seed={self.rng_seed} n_sub_channels={self.n_sub_channels} k={self.k}\n"
                  "sub_channel_id A B")
        np.savetxt(path, np.column_stack([self.sub_channel, self.a, self.b]),
                   fmt=["%d", "%.17g", "%.17g"], header=header)
        np.savetxt(shot_noise_path, self.shot_noise, fmt="%.17g",
                   header=f"seed={self.rng_seed} n={self.shot_noise.size}\nB0")

    @classmethod
    def load(cls, path: str | Path, shot_noise_path: str | Path | None = None
             ) -> "QuadratureDataset":
        path = Path(path)
        shot_noise_path = Path(shot_noise_path or path.with_suffix(".shot.txt"))
        meta = dict(item.split("=", 1)
                    for item in path.read_text().splitlines()[0].lstrip("# ").split())
        cols = np.loadtxt(path, ndmin=2)
        seed = None if meta.get("seed") in (None, "None") else int(meta["seed"])
        return cls(sub_channel=cols[:, 0].astype(np.int64), a=cols[:, 1], b=cols[:, 2],
                   shot_noise=np.loadtxt(shot_noise_path, ndmin=1),
                   n_sub_channels=int(meta["n_sub_channels"]), rng_seed=seed)


def noise_variance(p: ProtocolParams, eta: float | np.ndarray) -> float | np.ndarray:
    return 1.0 + p.nu_b + p.eta_b * eta * (p.v_sqz + p.xi) - p.eta_b * eta


def allocate_samples(probs, k: int, minimum: int = 2) -> np.ndarray:
    """Revealed samples per sub-channel, proportional to its probability."""
    probs = np.asarray(probs, dtype=float)
    return np.maximum(np.rint(k * probs).astype(np.int64), minimum)


def simulate_dataset(p: ProtocolParams, ensemble: SubChannelEnsemble, k: int,
                     seed: int, n_shot: int | None = None) -> QuadratureDataset:
    """Draw Alice's and Bob's revealed q values for every sub-channel.

    Sub-channel s uses its own child stream of ``seed``, so the data do not
    depend on generation order. ``n_shot`` shot-noise samples (default k)
    come from one further child stream.
    """
    etas = np.asarray(ensemble.etas)
    counts = allocate_samples(ensemble.probs, k)
    sigma2 = noise_variance(p, etas)
    assert np.all(sigma2 > 0.0), "noise variance must be positive for valid parameters"
    t = np.sqrt(p.eta_b * etas)
    streams = np.random.SeedSequence(seed).spawn(len(etas) + 1)
    a_parts, b_parts = [], []
    sd_a = math.sqrt(p.v_sig)
    for s, ss in enumerate(streams[:-1]):
        rng = np.random.default_rng(ss)
        a = rng.normal(0.0, sd_a, counts[s])
        a_parts.append(a)
        b_parts.append(t[s] * a + rng.normal(0.0, math.sqrt(sigma2[s]), counts[s]))
    shot = np.random.default_rng(streams[-1]).normal(
        0.0, math.sqrt(1.0 + p.nu_b), k if n_shot is None else n_shot)
    return QuadratureDataset(
        sub_channel=np.repeat(np.arange(len(etas)), counts),
        a=np.concatenate(a_parts), b=np.concatenate(b_parts), shot_noise=shot,
        n_sub_channels=len(etas), rng_seed=seed)


def mle_subchannel(a, b) -> tuple[float, float]:
    """(t_hat, sigma2_hat) of the regression b = t a + noise."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or a.size != b.size:
        raise ValueError("need at least two paired samples")
    saa = float(np.dot(a, a))
    if saa == 0.0:
        raise DegenerateRegressorError("all of Alice's values are zero")
    t = float(np.dot(a, b)) / saa
    resid = b - t * a
    return t, float(np.dot(resid, resid)) / a.size


def _mle_grouped(ds: QuadratureDataset) -> tuple[np.ndarray, np.ndarray]:
    n = ds.n_sub_channels
    saa = np.bincount(ds.sub_channel, weights=ds.a * ds.a, minlength=n)
    sab = np.bincount(ds.sub_channel, weights=ds.a * ds.b, minlength=n)
    sbb = np.bincount(ds.sub_channel, weights=ds.b * ds.b, minlength=n)
    if np.any(saa == 0.0):
        raise DegenerateRegressorError("a sub-channel has all-zero regressor values")
    t = sab / saa
    # sum (b - t a)^2 = sbb - 2 t sab + t^2 saa = sbb - t sab
    sigma2 = np.maximum(sbb - t * sab, 0.0) / ds.counts
    return t, sigma2


def confidence_t(sigma2: float | np.ndarray, k: int | np.ndarray, v_sig: float,
                 eps_pe: float) -> float | np.ndarray:
    """Half-width z sqrt(sigma2 / (k V_sig)) of the interval on t."""
    if np.any(np.asarray(k) <= 0):
        raise ValueError("sample count must be positive")
    return z_quantile(eps_pe) * np.sqrt(sigma2 / (k * v_sig))


def sqrt_eta_estimate(t_hat, dt, eta_b_hat: float, d_eta_b: float = 0.0):
    """sqrt(eta) = t / sqrt(eta_B) with relative errors added in quadrature."""
    if eta_b_hat <= 0.0:
        raise ValueError("eta_B estimate must be positive")
    t_hat = np.asarray(t_hat, dtype=float)
    est = t_hat / math.sqrt(eta_b_hat)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel_t = np.where(dt == 0.0, 0.0, np.asarray(dt) / np.abs(t_hat))
    err = np.abs(est) * np.sqrt(rel_t ** 2 + (d_eta_b / (2.0 * eta_b_hat)) ** 2)
    if est.ndim == 0:
        return float(est), float(err)
    return est, err


@dataclass(frozen=True)
class PooledEstimates:
    t: float
    sigma2: float
    dt: float
    dsigma2: float
    sigma0_2: float
    dsigma0_2: float
    k: int
    n_shot: int


def pooled_estimates(ds: QuadratureDataset, v_sig: float, eps_pe: float,
                     k_for_sigma2: int | None = None) -> PooledEstimates:
    """Regression over every revealed pair plus the shot-noise variance.

    ``k_for_sigma2`` overrides the sample count behind the sigma^2 error bar,
    for the mode where the trusted noise is estimated from the whole block.
    """
    if ds.k < 2:
        raise ValueError("need at least two revealed pairs")
    z = z_quantile(eps_pe)
    t, sigma2 = mle_subchannel(ds.a, ds.b)
    n0 = ds.shot_noise.size
    sigma0_2 = float(np.dot(ds.shot_noise, ds.shot_noise)) / n0
    k_s2 = ds.k if k_for_sigma2 is None else k_for_sigma2
    return PooledEstimates(
        t=t, sigma2=sigma2, dt=float(confidence_t(sigma2, ds.k, v_sig, eps_pe)),
        dsigma2=z * sigma2 * math.sqrt(2.0) / math.sqrt(k_s2),
        sigma0_2=sigma0_2, dsigma0_2=z * sigma0_2 * math.sqrt(2.0) / math.sqrt(n0),
        k=ds.k, n_shot=n0)


@dataclass(frozen=True)
class XiEstimate:
    xi: float
    dxi: float
    mean_eta: float
    dmean_eta: float
    clamped: bool
    xi_raw: float


def xi_estimate(pooled: PooledEstimates, eta_b_hat: float, d_eta_b: float = 0.0,
                v_sqz_hat: float = 1.0, d_v_sqz: float = 0.0,
                propagation: str = "ratio") -> XiEstimate:
    """Preparation noise and mean transmissivity from the pooled regression.

    xi = (sigma2 - sigma0_2) / (eta_B <eta>) - V_sqz + 1. The relative error
    bars of sigma2, sigma0_2, eta_B and <eta> apply to the ratio term; with
    ``propagation="ratio"`` they multiply |xi + V_sqz - 1|, the quantity they
    describe. ``"printed"`` multiplies them by xi itself, which is the same
    thing only for coherent states (V_sqz = 1) and otherwise understates the
    error bar.
    """
    mean_eta = pooled.t ** 2 / eta_b_hat
    if eta_b_hat * mean_eta <= 0.0:
        raise ValueError("eta_B <eta> estimate must be positive")
    rel_t = 0.0 if pooled.dt == 0.0 else 2.0 * pooled.dt / abs(pooled.t)
    dmean_eta = mean_eta * math.hypot(rel_t, d_eta_b / eta_b_hat)
    diff = pooled.sigma2 - pooled.sigma0_2
    ratio = diff / (eta_b_hat * mean_eta)
    xi_raw = ratio - v_sqz_hat + 1.0

    def rel(num):
        if num == 0.0:
            return 0.0
        return math.inf if diff == 0.0 else num / diff

    rel_total = math.sqrt(rel(pooled.dsigma2) ** 2 + rel(pooled.dsigma0_2) ** 2
                          + (d_eta_b / eta_b_hat) ** 2
                          + (0.0 if dmean_eta == 0.0 else dmean_eta / mean_eta) ** 2)
    if propagation == "ratio":
        scale = abs(ratio)
    elif propagation == "printed":
        scale = abs(xi_raw)
    else:
        raise ValueError(f"unknown propagation {propagation!r}")
    dxi = (scale * rel_total if scale > 0.0 else 0.0) + d_v_sqz
    return XiEstimate(xi=max(xi_raw, 0.0), dxi=dxi, mean_eta=mean_eta, dmean_eta=dmean_eta,
                      clamped=xi_raw < 0.0, xi_raw=xi_raw)


@dataclass(frozen=True, eq=False)
class EstimationResult:
    t_sub: np.ndarray
    sigma2_sub: np.ndarray
    dt_sub: np.ndarray
    sqrt_eta: np.ndarray
    dsqrt_eta: np.ndarray
    weights: np.ndarray
    pooled: PooledEstimates
    xi: XiEstimate
    z: float
    eps_pe: float
    eta_b_hat: float
    d_eta_b: float = 0.0
    v_sqz_hat: float = 1.0
    d_v_sqz: float = 0.0

    def channel_stats(self, sqrt_eta: np.ndarray | None = None) -> ChannelStats:
        """Fading moments implied by per-sub-channel sqrt(eta) values."""
        x = np.clip(self.sqrt_eta if sqrt_eta is None else sqrt_eta, 0.0, 1.0)
        mean_sqrt = math.fsum(self.weights * x)
        mean_eta = math.fsum(self.weights * x * x)
        eta_f = mean_sqrt * mean_sqrt
        return ChannelStats(mean_eta=mean_eta, mean_sqrt_eta=mean_sqrt, eta_f=eta_f,
                            var_sqrt_eta=max(mean_eta - eta_f, 0.0))

    def summary(self) -> dict:
        return {
            "t": self.pooled.t, "dt": self.pooled.dt,
            "sigma2": self.pooled.sigma2, "dsigma2": self.pooled.dsigma2,
            "sigma0_2": self.pooled.sigma0_2, "dsigma0_2": self.pooled.dsigma0_2,
            "mean_eta": self.xi.mean_eta, "dmean_eta": self.xi.dmean_eta,
            "xi": self.xi.xi, "dxi": self.xi.dxi, "xi_clamped": self.xi.clamped,
            "eta_f": self.channel_stats().eta_f, "z": self.z,
        }


def _assemble(t_sub, sigma2_sub, counts, pooled, p, eps_pe, eta_b_hat, d_eta_b,
              v_sqz_hat, d_v_sqz, propagation) -> EstimationResult:
    dt_sub = confidence_t(sigma2_sub, counts, p.v_sig, eps_pe)
    sqrt_eta, dsqrt_eta = sqrt_eta_estimate(t_sub, dt_sub, eta_b_hat, d_eta_b)
    xi = xi_estimate(pooled, eta_b_hat, d_eta_b, v_sqz_hat, d_v_sqz, propagation)
    return EstimationResult(
        t_sub=np.asarray(t_sub), sigma2_sub=np.asarray(sigma2_sub), dt_sub=np.asarray(dt_sub),
        sqrt_eta=np.asarray(sqrt_eta), dsqrt_eta=np.asarray(dsqrt_eta),
        weights=np.asarray(counts) / np.sum(counts), pooled=pooled, xi=xi,
        z=z_quantile(eps_pe), eps_pe=eps_pe, eta_b_hat=eta_b_hat, d_eta_b=d_eta_b,
        v_sqz_hat=v_sqz_hat, d_v_sqz=d_v_sqz)


def estimate(ds: QuadratureDataset, p: ProtocolParams, eps_pe: float,
             eta_b_hat: float | None = None, d_eta_b: float = 0.0,
             v_sqz_hat: float | None = None, d_v_sqz: float = 0.0,
             propagation: str = "ratio", whole_block_xi: bool = False) -> EstimationResult:
    """Every estimator and error bar for one dataset.

    eta_B and V_sqz are trusted calibration inputs and default to the values
    in ``p``; V_sig is known to Alice.
    """
    eta_b_hat = p.eta_b if eta_b_hat is None else eta_b_hat
    v_sqz_hat = p.v_sqz if v_sqz_hat is None else v_sqz_hat
    t_sub, sigma2_sub = _mle_grouped(ds)
    k_xi = ds.shot_noise.size if whole_block_xi else None
    pooled = pooled_estimates(ds, p.v_sig, eps_pe, k_for_sigma2=k_xi)
    return _assemble(t_sub, sigma2_sub, ds.counts, pooled, p, eps_pe, eta_b_hat, d_eta_b,
                     v_sqz_hat, d_v_sqz, propagation)


def expected_estimates(p: ProtocolParams, ensemble: SubChannelEnsemble, k: int, n_shot: int,
                       eps_pe: float, d_eta_b: float = 0.0, d_v_sqz: float = 0.0,
                       propagation: str = "ratio") -> EstimationResult:
    """Estimates at their large-sample limits, with error bars for k and n_shot.

    Pooling sub-channels with samples allocated in proportion to their
    probabilities, the regression slope tends to sqrt(eta_B) <sqrt eta> and the
    residual variance picks up V_sig eta_B Var(sqrt eta) from the spread of
    slopes. This evaluates the error bars there without drawing 10^10 samples.
    """
    etas = np.asarray(ensemble.etas)
    probs = np.asarray(ensemble.probs)
    counts = allocate_samples(probs, k, minimum=1)
    t_sub = np.sqrt(p.eta_b * etas)
    sigma2_sub = noise_variance(p, etas)
    stats = stats_from_ensemble(ensemble)
    sigma2 = float(noise_variance(p, stats.mean_eta)) + p.v_sig * p.eta_b * stats.var_sqrt_eta
    sigma0_2 = 1.0 + p.nu_b
    z = z_quantile(eps_pe)
    pooled = PooledEstimates(
        t=math.sqrt(p.eta_b) * stats.mean_sqrt_eta, sigma2=sigma2,
        dt=float(confidence_t(sigma2, k, p.v_sig, eps_pe)),
        dsigma2=z * sigma2 * math.sqrt(2.0 / k), sigma0_2=sigma0_2,
        dsigma0_2=z * sigma0_2 * math.sqrt(2.0 / n_shot), k=k, n_shot=n_shot)
    return _assemble(t_sub, sigma2_sub, counts, pooled, p, eps_pe, p.eta_b, d_eta_b,
                     p.v_sqz, d_v_sqz, propagation)


@dataclass(frozen=True, eq=False)
class WorstCase:
    """Worst-case preparation noise and the range of effective transmissivity."""

    sqrt_eta_low: np.ndarray
    sqrt_eta_high: np.ndarray
    xi: float
    rule: str
    stats_low: ChannelStats
    stats_high: ChannelStats

    def holevo(self, p: ProtocolParams) -> tuple[float, float]:
        """(chi, eta_f) maximising Eve's information under this rule.

        Only eta_f enters chi once the trusted fluctuation noise is dropped.
        Two-sided: chi is unimodal in eta_f, so besides both ends the interior
        maximum is searched, which covers intervals straddling the 3 dB peak.
        """
        q = p.with_(xi=self.xi)

        def chi(eta_f):
            return holevo_direct(q, ChannelStats(eta_f, math.sqrt(eta_f), eta_f, 0.0))

        hi = self.stats_high.eta_f
        if self.rule == "one-sided":
            return chi(hi), hi
        lo = self.stats_low.eta_f
        cands = [(chi(lo), lo), (chi(hi), hi)]
        if hi - lo > 1e-12:
            res = minimize_scalar(lambda x: -chi(x), bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-10 + 1e-8 * hi})
            cands.append((-res.fun, float(res.x)))
        return max(cands)


def worst_case_params(result: EstimationResult, rule: str = "two-sided") -> WorstCase:
    """Worst-case estimators for evaluating Eve's information.

    xi takes xi + Delta(xi). For sqrt(eta), ``"one-sided"`` uses
    sqrt(eta) + Delta(sqrt eta), which is pessimistic only past the 3 dB peak
    of chi; ``"two-sided"`` keeps the whole interval.
    """
    if rule not in ("two-sided", "one-sided"):
        raise ValueError(f"unknown worst-case rule {rule!r}")
    hi = np.clip(result.sqrt_eta + result.dsqrt_eta, 0.0, 1.0)
    lo = np.clip(result.sqrt_eta - result.dsqrt_eta, 0.0, 1.0)
    return WorstCase(sqrt_eta_low=lo, sqrt_eta_high=hi, xi=result.xi.xi + result.xi.dxi,
                     rule=rule, stats_low=result.channel_stats(lo),
                     stats_high=result.channel_stats(hi))
