"""Composable finite-size key length under collective attacks."""

from __future__ import annotations

import math
from dataclasses import dataclass

BUDGET_TOL = 1e-15


@dataclass(frozen=True)
class EpsilonBudget:
    """Security parameters; eps_total = 2 eps_sm + eps_bar + eps_pe + eps_cor."""

    eps_total: float
    eps_sm: float
    eps_bar: float
    eps_pe: float
    eps_cor: float
    d: int = 5

    def __post_init__(self):
        for name in ("eps_total", "eps_sm", "eps_bar", "eps_pe", "eps_cor"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        if self.d < 0 or int(self.d) != self.d:
            raise ValueError(f"d must be a non-negative integer, got {self.d}")
        composed = 2.0 * self.eps_sm + self.eps_bar + self.eps_pe + self.eps_cor
        if abs(composed - self.eps_total) > BUDGET_TOL * self.eps_total:
            raise ValueError(f"2 eps_sm + eps_bar + eps_pe + eps_cor = {composed!r} "
                             f"differs from eps_total = {self.eps_total!r}")

    @classmethod
    def from_components(cls, eps_sm: float, eps_bar: float, eps_pe: float, eps_cor: float,
                        d: int = 5) -> "EpsilonBudget":
        total = math.fsum((eps_sm, eps_sm, eps_bar, eps_pe, eps_cor))
        return cls(total, eps_sm, eps_bar, eps_pe, eps_cor, d)


def default_budget(eps_total: float = 1e-9, d: int = 5) -> EpsilonBudget:
    """Equal five-way split: eps_sm = eps_bar = eps_pe = eps_cor = eps / 5."""
    if not 0.0 < eps_total < 1.0:
        raise ValueError(f"eps_total must lie in (0, 1), got {eps_total}")
    part = eps_total / 5.0
    return EpsilonBudget(eps_total, part, part, part, part, d)


@dataclass(frozen=True)
class BlockPlan:
    """``n_total`` symbols, of which ``n_key`` remain after ``n_revealed`` are disclosed."""

    n_total: int
    n_key: int
    n_revealed: int

    def __post_init__(self):
        if min(self.n_total, self.n_key, self.n_revealed) < 1:
            raise ValueError("block sizes must be positive")
        if self.n_key + self.n_revealed != self.n_total:
            raise ValueError("n_key + n_revealed must equal n_total")

    @classmethod
    def from_fraction(cls, n_total: int, pe_fraction: float = 0.5) -> "BlockPlan":
        if not 0.0 < pe_fraction < 1.0:
            raise ValueError(f"pe_fraction must lie in (0, 1), got {pe_fraction}")
        n_total = int(n_total)
        k = int(round(n_total * pe_fraction))
        return cls(n_total, n_total - k, k)


def delta_aep(b: EpsilonBudget, n_key: float) -> float:
    """AEP correction (d+1)^2 + 4(d+1) sqrt(log2(2/eps_sm^2))
    + 2 log2(2/(eps^2 eps_sm)) + 4 eps_sm d / (eps sqrt(N'))."""
    if n_key < 1:
        raise ValueError("N' must be at least 1")
    d, eps, eps_sm = b.d, b.eps_total, b.eps_sm
    return ((d + 1) ** 2
            + 4.0 * (d + 1) * math.sqrt(math.log2(2.0 / eps_sm ** 2))
            + 2.0 * math.log2(2.0 / (eps ** 2 * eps_sm))
            + 4.0 * eps_sm * d / (eps * math.sqrt(n_key)))


def privacy_amplification_cost(b: EpsilonBudget) -> float:
    return 2.0 * math.log2(1.0 / (2.0 * b.eps_bar))


@dataclass(frozen=True)
class KeyLength:
    ell: int
    raw: float
    delta_aep: float
    status: str

    @property
    def secure(self) -> bool:
        return self.status == "ok"


def key_length_expression(n_key: float, b: EpsilonBudget, beta: float, mutual_info: float,
                          chi: float) -> float:
    """N' beta I - N' chi - sqrt(N') Delta_AEP - 2 log2(1/(2 eps_bar)), unfloored."""
    return (n_key * beta * mutual_info - n_key * chi
            - math.sqrt(n_key) * delta_aep(b, n_key) - privacy_amplification_cost(b))


def key_length(plan: BlockPlan, b: EpsilonBudget, mutual_info: float, chi: float,
               beta: float) -> KeyLength:
    if mutual_info < 0.0 or chi < 0.0:
        raise ValueError("information quantities must be non-negative")
    raw = key_length_expression(plan.n_key, b, beta, mutual_info, chi)
    dae = delta_aep(b, plan.n_key)
    if raw <= 0.0:
        return KeyLength(0, raw, dae, "insecure_or_empty")
    return KeyLength(int(math.floor(raw)), raw, dae, "ok")


def key_rate(ell: int, n_total: int) -> float:
    if n_total <= 0:
        raise ValueError("block size must be positive")
    return ell / n_total


def key_length_with_leakage(n_key: float, b: EpsilonBudget, beta: float, mutual_info: float,
                            chi: float, shannon_entropy_b: float) -> float:
    """Same bound written through S(b|E) = H(b) - chi and l_EC = N'[H(b) - beta I].

    H(b) cancels; any placeholder value gives the same result.
    """
    conditional_entropy = shannon_entropy_b - chi
    leak_ec = n_key * (shannon_entropy_b - beta * mutual_info)
    return (n_key * conditional_entropy - leak_ec
            - math.sqrt(n_key) * delta_aep(b, n_key) - privacy_amplification_cost(b))
