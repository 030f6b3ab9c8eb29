"""Monte-Carlo check of the parameter-estimation error bars: how often the
t intervals contain the truth and how often xi lands within 3 Delta(xi)."""

import argparse

import numpy as np
from scipy import stats

from sqzqkd.estimation import estimate, simulate_dataset, z_quantile
from sqzqkd.fading import SubChannelEnsemble
from sqzqkd.protocol import ProtocolParams


def expected_wald_coverage(k_s, eps_pe, draws=10**7, seed=0):
    """Coverage of t +- z sqrt(sigma2_hat / (k V_sig)) under the normal model."""
    rng = np.random.default_rng(seed)
    a = rng.chisquare(k_s, draws) / k_s          # sum A^2 / (k V_sig)
    b = rng.chisquare(k_s - 1, draws) / k_s      # sigma2_hat / sigma2
    return float(np.mean(2 * stats.norm.cdf(z_quantile(eps_pe) * np.sqrt(a * b)) - 1))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--k", type=int, default=10**6)
    ap.add_argument("--sub-channels", type=int, default=1000)
    ap.add_argument("--eps-pe", type=float, default=0.05)
    ap.add_argument("--squeezing-db", type=float, default=6.0)
    ap.add_argument("--xi", type=float, default=0.02)
    ap.add_argument("--propagation", choices=("ratio", "printed"), default="ratio")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    p = ProtocolParams.squeezed(args.squeezing_db, args.xi, 0.61, 0.12, 0.98)
    rng = np.random.default_rng(args.seed)
    etas = rng.beta(20.0, 20.0, args.sub_channels)
    ens = SubChannelEnsemble(tuple(etas), (1.0 / args.sub_channels,) * args.sub_channels)
    truth = np.sqrt(p.eta_b * etas)
    xi_hits = t_hits = t_total = 0
    for rep in range(args.reps):
        ds = simulate_dataset(p, ens, args.k, seed=args.seed * 100_003 + rep, n_shot=2 * args.k)
        r = estimate(ds, p, args.eps_pe, propagation=args.propagation)
        xi_hits += abs(r.xi.xi - args.xi) < 3 * r.xi.dxi
        t_hits += int(np.sum(np.abs(r.t_sub - truth) <= r.dt_sub))
        t_total += truth.size
    k_s = args.k // args.sub_channels
    cov = t_hits / t_total
    print(f"xi within 3 Delta(xi): {xi_hits}/{args.reps}")
    print(f"t coverage: {cov:.5f} +- {np.sqrt(cov * (1 - cov) / t_total):.5f} "
          f"(nominal {1 - args.eps_pe:.3f}, Wald expectation at k_s={k_s}: "
          f"{expected_wald_coverage(k_s, args.eps_pe):.5f})")


if __name__ == "__main__":
    main()
