"""Squeezed-laser and coherent-state protocols under passive attacks.

Both protocols modulate only the amplitude quadrature q and are analysed in
their entanglement-based form: a two-mode squeezed vacuum of variance V whose
second mode is squeezed by r_e. Eve holds the light lost in the channel
(a beam splitter of transmissivity eta_f). Bob's detector inefficiency and
electronic noise, Alice's preparation noise xi and the channel's fluctuation
noise are all trusted.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

from . import gaussian as gs
from .fading import ChannelStats

Kind = Literal["squeezed", "coherent"]

DEFAULT_ETA_P = 1.0 - 1e-5
CONVERGENCE_ETA_P = (1.0 - 1e-4, 1.0 - 1e-5, 1.0 - 1e-6)
CONVERGENCE_TOL = 1e-7
IDEAL_TOL = 1e-12


def squeezing_db_to_variance(db: float) -> float:
    return 10.0 ** (-db / 10.0)


def variance_to_squeezing_db(v: float) -> float:
    return -10.0 * math.log10(v)


@dataclass(frozen=True)
class ProtocolParams:
    """Physical parameters of a prepare-and-measure run (shot-noise units)."""

    v_sqz: float
    v_sig: float
    xi: float = 0.0
    eta_b: float = 1.0
    nu_b: float = 0.0
    beta: float = 1.0
    kind: Kind = "squeezed"
    non_ideal: bool = False

    def __post_init__(self):
        if self.kind not in ("squeezed", "coherent"):
            raise ValueError(f"unknown protocol kind {self.kind!r}")
        if not 0.0 < self.v_sqz <= 1.0:
            raise ValueError(f"v_sqz must lie in (0, 1], got {self.v_sqz}")
        if self.v_sig < 0.0:
            raise ValueError(f"v_sig must be non-negative, got {self.v_sig}")
        if self.xi < 0.0:
            raise ValueError(f"xi must be non-negative, got {self.xi}")
        if not 0.0 < self.eta_b <= 1.0:
            raise ValueError(f"eta_b must lie in (0, 1], got {self.eta_b}")
        if self.nu_b < 0.0:
            raise ValueError(f"nu_b must be non-negative, got {self.nu_b}")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")
        if self.kind == "coherent" and self.v_sqz != 1.0:
            raise ValueError("coherent-state protocol requires v_sqz = 1")
        if (self.kind == "squeezed" and not self.non_ideal
                and abs(self.v_sqz + self.v_sig - 1.0) > IDEAL_TOL):
            raise ValueError("squeezed protocol needs v_sqz + v_sig = 1; "
                             "pass non_ideal=True to override")

    @classmethod
    def squeezed(cls, squeezing_db: float, xi: float = 0.0, eta_b: float = 1.0,
                 nu_b: float = 0.0, beta: float = 1.0) -> "ProtocolParams":
        """Ideal shot-noise-modulated squeezed laser."""
        v_sqz = squeezing_db_to_variance(squeezing_db)
        return cls(v_sqz=v_sqz, v_sig=1.0 - v_sqz, xi=xi, eta_b=eta_b, nu_b=nu_b,
                   beta=beta, kind="squeezed")

    @classmethod
    def coherent(cls, v_sig: float, xi: float = 0.0, eta_b: float = 1.0,
                 nu_b: float = 0.0, beta: float = 1.0) -> "ProtocolParams":
        return cls(v_sqz=1.0, v_sig=v_sig, xi=xi, eta_b=eta_b, nu_b=nu_b, beta=beta,
                   kind="coherent")

    def with_(self, **changes) -> "ProtocolParams":
        return replace(self, **changes)

    @property
    def squeezing_db(self) -> float:
        return variance_to_squeezing_db(self.v_sqz)

    @property
    def detector_noise_variance(self) -> float:
        """Variance of the thermal state purified into Bob's detector model."""
        if self.eta_b == 1.0:
            if self.nu_b > 0.0:
                return math.inf
            return 1.0
        return 1.0 + self.nu_b / (1.0 - self.eta_b)


@dataclass(frozen=True)
class EBParams:
    v: float
    r_e: float


@dataclass(frozen=True)
class ChannelOutput:
    cm: gs.CovarianceMatrix
    fluctuation_noise_q: float
    fluctuation_noise_p: float


@dataclass(frozen=True)
class SecurityQuantities:
    mutual_info: float
    holevo: float
    b_q: float
    b_p: float
    b_q_out: float
    b_p_out: float
    c_q_out: float
    c_p_out: float
    holevo_path: str = "direct"


def eb_from_pm(p: ProtocolParams) -> EBParams:
    """Entanglement-based parameters reproducing the modulated ensemble.

    Solves V exp(-2 r_e) = v_sqz + v_sig and V exp(2 r_e) = 1 / v_sqz.
    """
    if p.v_sqz <= 0.0:
        raise ValueError("v_sqz must be positive")
    total = p.v_sqz + p.v_sig
    v = math.sqrt(total / p.v_sqz)
    r_e = 0.5 * math.log(1.0 / (p.v_sqz * v))
    return EBParams(v=v, r_e=r_e)


def initial_cm(eb: EBParams) -> gs.CovarianceMatrix:
    """Covariance matrix of Alice's mode A and the outgoing mode B0."""
    v = eb.v
    if v < 1.0:
        raise gs.UnphysicalStateError(f"TMSV variance {v} is below 1")
    c = math.sqrt(max(v * v - 1.0, 0.0))
    b_q = v * math.exp(-2.0 * eb.r_e)
    b_p = v * math.exp(2.0 * eb.r_e)
    c_q = math.exp(-eb.r_e) * c
    c_p = -math.exp(eb.r_e) * c
    return gs.CovarianceMatrix(np.array([
        [v, 0.0, c_q, 0.0],
        [0.0, v, 0.0, c_p],
        [c_q, 0.0, b_q, 0.0],
        [0.0, c_p, 0.0, b_p],
    ]))


def _input_variances(p: ProtocolParams) -> tuple[float, float, float, float, float]:
    """(a, b_q + xi, b_p + xi, c_q, c_p) of the state entering the channel."""
    eb = eb_from_pm(p)
    m = initial_cm(eb).matrix
    return m[0, 0], m[2, 2] + p.xi, m[3, 3] + p.xi, m[0, 2], m[1, 3]


def channel_output(m_ab0: gs.CovarianceMatrix, stats: ChannelStats,
                   xi: float = 0.0) -> ChannelOutput:
    """Ensemble-average state of A and B after the fading channel.

    The returned matrix includes the fluctuation noise Var(sqrt eta)(b - 1) in
    Bob's variances; the same terms are also reported on their own.
    """
    if m_ab0.n_modes != 2:
        raise ValueError("expected the two-mode state of A and B0")
    if xi < 0.0:
        raise ValueError("xi must be non-negative")
    m = np.array(m_ab0.matrix)
    b_q, b_p = m[2, 2] + xi, m[3, 3] + xi
    eta_f, var = stats.eta_f, stats.var_sqrt_eta
    noise_q = var * (b_q - 1.0)
    noise_p = var * (b_p - 1.0)
    m[2, 2] = eta_f * b_q + 1.0 - eta_f + noise_q
    m[3, 3] = eta_f * b_p + 1.0 - eta_f + noise_p
    s = math.sqrt(eta_f)
    m[0, 2:] *= s
    m[1, 2:] *= s
    m[2:, 0] *= s
    m[2:, 1] *= s
    return ChannelOutput(gs.CovarianceMatrix(m), noise_q, noise_p)


def detected_variance(x: float, eta_b: float, nu_b: float) -> float:
    """Bob's variance after a detector of efficiency eta_b and noise nu_b.

    Expanded form of eta_b x + (1 - eta_b) upsilon, finite at eta_b = 1.
    """
    return eta_b * x + (1.0 - eta_b) + nu_b


def eve_bob_cm(p: ProtocolParams, stats: ChannelStats,
               include_fluctuation_noise: bool = False) -> gs.CovarianceMatrix:
    """Joint state of Eve's mode E and Bob's detected mode B'."""
    _, b_q, b_p, _, _ = _input_variances(p)
    eta_f = stats.eta_f
    e_q = (1.0 - eta_f) * b_q + eta_f
    e_p = (1.0 - eta_f) * b_p + eta_f
    x_q = eta_f * b_q + 1.0 - eta_f
    x_p = eta_f * b_p + 1.0 - eta_f
    if include_fluctuation_noise:
        x_q += stats.var_sqrt_eta * (b_q - 1.0)
        x_p += stats.var_sqrt_eta * (b_p - 1.0)
    v_bq = detected_variance(x_q, p.eta_b, p.nu_b)
    v_bp = detected_variance(x_p, p.eta_b, p.nu_b)
    k = math.sqrt(p.eta_b) * math.sqrt(eta_f * (1.0 - eta_f))
    c_q = k * (1.0 - b_q)
    c_p = k * (1.0 - b_p)
    return gs.CovarianceMatrix(np.array([
        [e_q, 0.0, c_q, 0.0],
        [0.0, e_p, 0.0, c_p],
        [c_q, 0.0, v_bq, 0.0],
        [0.0, c_p, 0.0, v_bp],
    ]))


def holevo_direct(p: ProtocolParams, stats: ChannelStats,
                  include_fluctuation_noise: bool = False) -> float:
    """chi(b:E) = S(E) - S(E | B' homodyne on q), from Eve's own state.

    By default the trusted fluctuation noise is dropped from Bob's variance,
    which can only overestimate Eve.
    """
    m_eb = eve_bob_cm(p, stats, include_fluctuation_noise)
    s_e = gs.von_neumann_entropy(gs.trace_out(m_eb, [1]))
    s_cond = gs.von_neumann_entropy(gs.condition_on_homodyne(m_eb, 1, "q"))
    return max(s_e - s_cond, 0.0)


def purification_cm(p: ProtocolParams, stats: ChannelStats,
                    eta_p: float = DEFAULT_ETA_P) -> gs.CovarianceMatrix:
    """Pure-state dilation with modes ordered (A, B, F', G', E).

    Preparation noise enters through a beam splitter eta_p fed by half of a
    TMSV of variance xi / (1 - eta_p); the channel is a beam splitter eta_f
    with a vacuum mode E0 that becomes Eve's mode E.

    The returned (F', G') pair is expressed after an inverse two-mode
    squeezer. That local symplectic leaves every entropy used here unchanged
    but keeps the matrix entries of order one as eta_p -> 1, where the raw
    TMSV entries grow like 1 / (1 - eta_p) and swamp the pure-mode
    eigenvalues in rounding error.
    """
    if not 0.0 < eta_p <= 1.0:
        raise ValueError(f"eta_p must lie in (0, 1], got {eta_p}")
    m_ab0 = initial_cm(eb_from_pm(p))
    r = 0.0
    if p.xi > 0.0:
        if eta_p == 1.0:
            raise ValueError("preparation noise needs eta_p < 1")
        upsilon_p = p.xi / (1.0 - eta_p)
        if upsilon_p < 1.0:
            raise ValueError(f"xi={p.xi} is too small to model with eta_p={eta_p}; "
                             "use eta_p <= 1 - xi")
        r = 0.5 * math.acosh(upsilon_p)
    else:
        eta_p = 1.0
    # (A, B0) + (F'0, G') with (F'0, G') = TMS(r) acting on vacuum, BS on
    # B0, F'0, then TMS(-r) on (F', G'); composed before touching the state
    s = (gs.embed_symplectic(gs.two_mode_squeezer(r), (2, 3), 4)
         @ gs.embed_symplectic(gs.SymplecticBS(eta_p, 1, 2).block_matrix(), (1, 2), 4)
         @ gs.embed_symplectic(gs.two_mode_squeezer(-r), (2, 3), 4))
    m = gs.apply_symplectic(gs.direct_sum(m_ab0, gs.vacuum(2)), s)
    # + vacuum E0, channel on B'0, E0 -> (A, B, F', G', E)
    m = gs.direct_sum(m, gs.vacuum(1))
    return gs.apply_beam_splitter(m, gs.SymplecticBS(stats.eta_f, 1, 4))


def _holevo_purification_at(p: ProtocolParams, stats: ChannelStats, eta_p: float) -> float:
    upsilon = p.detector_noise_variance
    if math.isinf(upsilon):
        raise ValueError("eta_b = 1 with nu_b > 0 has no finite purification; "
                         "use holevo_direct")
    m = gs.trace_out(purification_cm(p, stats, eta_p), [4])  # (A, B, F', G')
    s_total = gs.von_neumann_entropy(m)
    # + (F0, G), detector BS on B, F0 -> (A, B', F', G', F, G)
    m = gs.direct_sum(m, gs.tmsv_cm(upsilon))
    m = gs.apply_beam_splitter(m, gs.SymplecticBS(p.eta_b, 1, 4))
    s_cond = gs.von_neumann_entropy(gs.condition_on_homodyne(m, 1, "q"))
    return s_total - s_cond


def holevo_purification(p: ProtocolParams, stats: ChannelStats,
                        eta_p: float = DEFAULT_ETA_P, extrapolate: bool = True) -> float:
    """chi(b:E) = S(A F' G' B) - S(A F' G' F G | B'), via purification.

    A finite eta_p biases chi by an amount linear in h = 1 - eta_p. With
    ``extrapolate`` the limit eta_p -> 1 is taken by one Richardson step,
    2 chi(1 - h) - chi(1 - 2h).
    """
    chi = _holevo_purification_at(p, stats, eta_p)
    if extrapolate and p.xi > 0.0:
        h = 1.0 - eta_p
        chi = 2.0 * chi - _holevo_purification_at(p, stats, 1.0 - 2.0 * h)
    return max(chi, 0.0)


def purification_convergence(p: ProtocolParams, stats: ChannelStats,
                             eta_ps=CONVERGENCE_ETA_P,
                             tol: float = CONVERGENCE_TOL,
                             extrapolate: bool = True) -> tuple[float, ...]:
    """Evaluate the purification path at several eta_p; warn if it drifts."""
    values = tuple(holevo_purification(p, stats, e, extrapolate) for e in eta_ps)
    spread = max(values) - min(values)
    if spread > tol:
        warnings.warn(f"purification Holevo varies by {spread:.2e} across eta_p={eta_ps}",
                      RuntimeWarning, stacklevel=2)
    return values


def mutual_information(p: ProtocolParams, stats: ChannelStats) -> float:
    """Shannon information between Alice's q value and Bob's q outcome.

    Bob's variance here is the physical one, fluctuation noise included.
    """
    a, b_q, _, c_q, _ = _input_variances(p)
    b_q_out = stats.eta_f * b_q + 1.0 - stats.eta_f + stats.var_sqrt_eta * (b_q - 1.0)
    v_bq = detected_variance(b_q_out, p.eta_b, p.nu_b)
    cond = a - p.eta_b * stats.eta_f * c_q * c_q / v_bq
    if cond <= 0.0 or a <= 0.0:
        raise ValueError("non-positive conditional variance; parameters are unphysical")
    return max(0.5 * math.log2(a / cond), 0.0)


def security_quantities(p: ProtocolParams, stats: ChannelStats,
                        path: str = "direct") -> SecurityQuantities:
    if path == "direct":
        chi = holevo_direct(p, stats)
    elif path == "purification":
        chi = holevo_purification(p, stats)
    else:
        raise ValueError(f"unknown Holevo path {path!r}")
    out = channel_output(initial_cm(eb_from_pm(p)), stats, p.xi).cm.matrix
    _, b_q, b_p, _, _ = _input_variances(p)
    return SecurityQuantities(
        mutual_info=mutual_information(p, stats), holevo=chi, b_q=b_q, b_p=b_p,
        b_q_out=out[2, 2], b_p_out=out[3, 3], c_q_out=out[0, 2], c_p_out=out[1, 3],
        holevo_path=path)
