"""Batch runs: single key-rate points, loss sweeps, modulation optimization,
simulated parameter estimation and the cross-check suite."""

from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import finite_size as fs
from .config import RunConfig
from .estimation import (estimate, expected_estimates, simulate_dataset, worst_case_params,
                         z_quantile)
from .fading import (ChannelStats, SubChannelEnsemble, eta_from_loss_db, fixed_channel,
                     loss_db, stats_from_ensemble)
from .protocol import (ProtocolParams, holevo_direct, holevo_purification, mutual_information)

SCHEMA = 1
SWEEP_COLUMNS = ("loss_db", "eta_f", "I", "chi", "delta_aep", "ell", "K", "status", "v_sig")
V_SIG_BOUNDS = (1e-3, 1e3)
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class KeyRateResult:
    loss_db: float
    eta_f: float
    mutual_info: float
    chi: float
    delta_aep: float
    ell: int
    key_rate: float
    status: str
    holevo_path: str = "direct"
    v_sig: float = math.nan

    def row(self) -> dict:
        return {"loss_db": self.loss_db, "eta_f": self.eta_f, "I": self.mutual_info,
                "chi": self.chi, "delta_aep": self.delta_aep, "ell": self.ell,
                "K": self.key_rate, "status": self.status, "v_sig": self.v_sig}


def evaluate(p: ProtocolParams, stats: ChannelStats, plan: fs.BlockPlan, budget: fs.EpsilonBudget,
             holevo_path: str = "direct", chi: float | None = None) -> KeyRateResult:
    """Key rate for one channel; ``chi`` overrides the computed Holevo bound."""
    info = mutual_information(p, stats)
    if chi is None:
        chi = (holevo_direct(p, stats) if holevo_path == "direct"
               else holevo_purification(p, stats))
    kl = fs.key_length(plan, budget, info, chi, p.beta)
    return KeyRateResult(loss_db=loss_db(stats.eta_f), eta_f=stats.eta_f, mutual_info=info,
                         chi=chi, delta_aep=kl.delta_aep, ell=kl.ell,
                         key_rate=fs.key_rate(kl.ell, plan.n_total), status=kl.status,
                         holevo_path=holevo_path, v_sig=p.v_sig)


def raw_key_rate(p: ProtocolParams, stats: ChannelStats, plan: fs.BlockPlan,
                 budget: fs.EpsilonBudget) -> float:
    """Unfloored, unclamped ell / N; smooth objective for the modulation search."""
    info = mutual_information(p, stats)
    chi = holevo_direct(p, stats)
    return fs.key_length_expression(plan.n_key, budget, p.beta, info, chi) / plan.n_total


def golden_section_max(f: Callable[[float], float], lo: float, hi: float,
                       xtol: float = 1e-7, max_iter: int = 200) -> tuple[float, float]:
    """Maximise a unimodal ``f`` on [lo, hi]; returns (x, f(x))."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= xtol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    x = c if fc >= fd else d
    return x, max(fc, fd)


@dataclass(frozen=True)
class ModulationOptimum:
    v_sig: float
    result: KeyRateResult
    no_key: bool


def optimize_modulation(base: ProtocolParams, stats: ChannelStats, plan: fs.BlockPlan,
                        budget: fs.EpsilonBudget, bounds=V_SIG_BOUNDS) -> ModulationOptimum:
    """Golden-section search over log10(V_sig) for the coherent-state protocol."""
    if base.kind != "coherent":
        raise ValueError("modulation optimization applies to the coherent-state protocol")

    def objective(log_v):
        return raw_key_rate(base.with_(v_sig=10.0 ** log_v), stats, plan, budget)

    log_v, _ = golden_section_max(objective, math.log10(bounds[0]), math.log10(bounds[1]))
    v_sig = 10.0 ** log_v
    res = evaluate(base.with_(v_sig=v_sig), stats, plan, budget)
    return ModulationOptimum(v_sig=v_sig, result=res, no_key=res.ell == 0)


def channel_at_loss(db: float, base: SubChannelEnsemble | None) -> ChannelStats | None:
    """Channel whose effective transmissivity gives ``db`` of loss.

    A supplied ensemble is attenuated uniformly; None when that would need
    gain (any sub-channel pushed above unit transmissivity).
    """
    target = eta_from_loss_db(db)
    if base is None:
        return stats_from_ensemble(fixed_channel(target))
    eta_f0 = stats_from_ensemble(base).eta_f
    if eta_f0 <= 0.0:
        return None
    factor = target / eta_f0
    if factor * max(base.etas) > 1.0:
        return None
    st = stats_from_ensemble(base.scaled(factor))
    # keep the loss column exact rather than re-derived through rounding
    return ChannelStats(st.mean_eta, st.mean_sqrt_eta, target, st.var_sqrt_eta)


def _point(cfg: RunConfig, db: float, base: SubChannelEnsemble | None) -> KeyRateResult:
    plan, budget = cfg.block_plan(), cfg.budget()
    stats = channel_at_loss(db, base)
    if stats is None:
        return KeyRateResult(db, math.nan, math.nan, math.nan, math.nan, 0, 0.0, "unreachable")
    try:
        if cfg.kind == "coherent" and cfg.v_sig is None:
            return optimize_modulation(cfg.protocol_params(v_sig=1.0), stats, plan,
                                       budget).result
        return evaluate(cfg.protocol_params(), stats, plan, budget)
    except (ValueError, ArithmeticError) as exc:
        warnings.warn(f"loss {db} dB: {exc}", RuntimeWarning, stacklevel=2)
        return KeyRateResult(db, stats.eta_f, math.nan, math.nan, math.nan, 0, 0.0, "error")


def keyrate(cfg: RunConfig) -> KeyRateResult:
    base = cfg.base_ensemble()
    if base is not None and cfg.mode != "fixed":
        stats = stats_from_ensemble(base)
        return _point(cfg, stats.loss_db, base)
    return _point(cfg, cfg.loss_db, None)


def sweep(cfg: RunConfig) -> list[KeyRateResult]:
    """One row per grid point, in grid order."""
    base = cfg.base_ensemble()
    grid = cfg.loss_grid()
    if cfg.workers == 1:
        return [_point(cfg, db, base) for db in grid]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(lambda db: _point(cfg, db, base), grid))


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_csv(cfg: RunConfig, rows: Sequence[dict], columns: Sequence[str]) -> str:
    """CSV text with a schema line and the resolved config as comments."""
    buf = io.StringIO()
    buf.write(f"#schema={SCHEMA}\n")
    for section, key, value in cfg.to_items():
        buf.write(f"# {section}.{key}={value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def read_csv(text: str) -> tuple[dict, list[dict]]:
    """Inverse of render_csv: (config items, rows as strings)."""
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("#schema="):
            meta["schema"] = line.split("=", 1)[1]
        elif line.startswith("# "):
            k, v = line[2:].split("=", 1)
            meta[k] = v
        else:
            body.append(line)
    return meta, list(csv.DictReader(body))


@dataclass(frozen=True)
class EstimateRunResult:
    summary: dict
    point: KeyRateResult
    worst: KeyRateResult
    xi_worst: float
    eta_f_worst: float
    scale: str

    def rows(self) -> list[dict]:
        out = [{"quantity": k, "value": v} for k, v in self.summary.items()]
        out += [
            {"quantity": "xi_worst", "value": self.xi_worst},
            {"quantity": "eta_f_worst", "value": self.eta_f_worst},
            {"quantity": "I", "value": self.point.mutual_info},
            {"quantity": "chi_point", "value": self.point.chi},
            {"quantity": "chi_worst", "value": self.worst.chi},
            {"quantity": "K_point", "value": self.point.key_rate},
            {"quantity": "K_worst", "value": self.worst.key_rate},
            {"quantity": "status_worst", "value": self.worst.status},
        ]
        return out


def estimate_run(cfg: RunConfig, scale: str = "simulate") -> EstimateRunResult:
    """Simulate revealed data, estimate, take worst cases, compute both key rates.

    ``scale="simulate"`` draws cfg.k_revealed samples; ``"analytic"`` evaluates
    the estimators at their large-sample values with error bars for the
    full revealed fraction of cfg.block_size.
    """
    p = cfg.protocol_params(v_sig=cfg.v_sig or 1.0)
    plan, budget = cfg.block_plan(), cfg.budget()
    base = cfg.base_ensemble()
    if base is None:
        base = fixed_channel(eta_from_loss_db(cfg.loss_db))
    if cfg.kind == "coherent" and cfg.v_sig is None:
        p = p.with_(v_sig=optimize_modulation(p, stats_from_ensemble(base), plan, budget).v_sig)
    if scale == "simulate":
        ds = simulate_dataset(p, base, cfg.k_revealed, cfg.seed, n_shot=2 * cfg.k_revealed)
        res = estimate(ds, p, budget.eps_pe, d_eta_b=cfg.d_eta_b, d_v_sqz=cfg.d_v_sqz,
                       propagation=cfg.xi_propagation)
    elif scale == "analytic":
        res = expected_estimates(p, base, plan.n_revealed, plan.n_total, budget.eps_pe,
                                 cfg.d_eta_b, cfg.d_v_sqz, cfg.xi_propagation)
    else:
        raise ValueError(f"unknown scale {scale!r}")
    p_hat = p.with_(xi=res.xi.xi)
    stats_hat = res.channel_stats()
    point = evaluate(p_hat, stats_hat, plan, budget)
    wc = worst_case_params(res, cfg.worst_case)
    chi_wc, eta_f_wc = wc.holevo(p)
    worst = evaluate(p_hat, stats_hat, plan, budget, chi=chi_wc)
    return EstimateRunResult(summary=res.summary(), point=point, worst=worst, xi_worst=wc.xi,
                             eta_f_worst=eta_f_wc, scale=scale)


# --------------------------------------------------------------------------
# cross-check suite


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return (f"[{tag}] {self.name}: value={self.value:.3e} tol={self.tolerance:.1e}"
                + (f" ({self.detail})" if self.detail else ""))


def _random_params(rng: np.random.Generator) -> tuple[ProtocolParams, ChannelStats]:
    xi = rng.uniform(1e-3, 0.1)
    eta_b = rng.uniform(0.1, 0.99)
    nu_b = rng.uniform(0.0, 0.5)
    if rng.random() < 0.5:
        p = ProtocolParams.squeezed(rng.uniform(1.0, 12.0), xi, eta_b, nu_b)
    else:
        p = ProtocolParams.coherent(10.0 ** rng.uniform(-1.0, 1.5), xi, eta_b, nu_b)
    return p, ChannelStats.fixed(rng.uniform(0.01, 0.99))


def check_zero_leakage(n: int = 8, tol: float = 1e-8) -> Check:
    worst = 0.0
    for sq in (3.0, 10.0):
        for eta_f in np.linspace(0.02, 0.98, n):
            for eta_b in np.linspace(0.1, 0.99, n):
                for nu_b in (0.0, 0.25, 0.5):
                    p = ProtocolParams.squeezed(sq, 0.0, eta_b, nu_b)
                    s = ChannelStats.fixed(eta_f)
                    worst = max(worst, holevo_direct(p, s), holevo_purification(p, s))
    return Check("zero leakage (ideal squeezed, both Holevo paths)", worst <= tol, worst, tol)


def check_path_equivalence(n: int = 50, seed: int = 12345, tol: float = 1e-6) -> Check:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        p, s = _random_params(rng)
        worst = max(worst, abs(holevo_direct(p, s) - holevo_purification(p, s)))
    return Check("Holevo path equivalence (direct vs purification)", worst <= tol, worst, tol,
                 f"{n} random draws")


def check_coverage(reps: int = 400, k_s: int = 1000, eps_pe: float = 0.05,
                   seed: int = 2024) -> Check:
    """Empirical coverage of the t interval; passes unless it falls more than
    three binomial standard errors below the nominal 1 - eps_pe."""
    p = ProtocolParams.squeezed(6.0, 0.02, 0.61, 0.12)
    ens = SubChannelEnsemble((0.2, 0.5, 0.8), (1 / 3, 1 / 3, 1 / 3))
    true_t = np.sqrt(p.eta_b * np.asarray(ens.etas))
    hits = total = 0
    for rep in range(reps):
        ds = simulate_dataset(p, ens, 3 * k_s, seed=seed + rep, n_shot=k_s)
        r = estimate(ds, p, eps_pe)
        hits += int(np.sum(np.abs(r.t_sub - true_t) <= r.dt_sub))
        total += true_t.size
    cov = hits / total
    se = math.sqrt(eps_pe * (1.0 - eps_pe) / total)
    tol = 3.0 * se
    return Check("t-interval coverage", cov >= 1.0 - eps_pe - tol, cov, tol,
                 f"nominal {1 - eps_pe:.3f}, {total} intervals")


def check_z_quantile(tol: float = 1e-10) -> Check:
    worst = 0.0
    for eps in (0.3173, 0.05, 1e-3, 2e-10, 1e-15):
        lo, hi = 0.0, 40.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if math.erfc(mid / math.sqrt(2.0)) > eps:
                lo = mid
            else:
                hi = mid
        worst = max(worst, abs(z_quantile(eps) - lo) / lo)
    return Check("z quantile vs bisection", worst <= tol, worst, tol, "relative error")


def validate(checks: Sequence[Callable[[], Check]] | None = None) -> list[Check]:
    checks = checks or (check_zero_leakage, check_path_equivalence, check_coverage,
                        check_z_quantile)
    return [c() for c in checks]

