"""Closed-form ergodic rates for the AN-aided massive MIMO-NOMA downlink.

All rates are in bits/s/Hz and include the pilot-overhead prefactor
(1 - tau/T). User k = 0 of a cluster is the strongest and cancels every
weaker user's signal before decoding its own, so its residual
intra-cluster interference comes from users 0..k-1 only; the
eavesdropper cancels nothing and sees every co-scheduled signal plus the
artificial noise.

Legitimate SINR of user (m, k):

    kappa / (I1 + I2 + I3 + 1)

    kappa = Q_{m,k} beta_{m,k} rho_{m,k} G          (aligned-beam gain)
    I1    = Q_{m,k} beta_{m,k} (1 - rho_{m,k})      (own-signal leakage)
    I2    = beta_{m,k} [ sum_{i<k} Q_{m,i} (rho N_t + 1 - rho)
                         + Q_{m,0} (1 - rho) ]      (intra-cluster + AN leak)
    I3    = beta_{m,k} sum_{j != m} sum_i Q_{j,i}   (inter-cluster + AN)

where G is the array gain: N_t by default, or the exact squared chi-mean
Gamma^2(N_t + 1/2) / Gamma^2(N_t) behind the `exact_gain` flag (used by
the Monte Carlo cross-checks; the difference vanishes as N_t grows).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .model import (
    DownlinkPower,
    EstimationQuality,
    SystemConfig,
    UplinkPower,
    compute_rho,
)

__all__ = [
    "SinrDecomposition",
    "RateReport",
    "chi_mean",
    "array_gain",
    "sinr_terms",
    "legit_rate",
    "eaves_rate",
    "secrecy_report",
    "asymptotic_large_nt",
    "asymptotic_high_power",
    "oma_report",
    "energy_efficiency",
]

_LN2 = math.log(2.0)


def chi_mean(n_antennas: int) -> float:
    """Mean length of an N_t-dimensional unit-variance complex Gaussian
    vector: Gamma(N_t + 1/2) / Gamma(N_t)."""
    return float(np.exp(gammaln(n_antennas + 0.5) - gammaln(n_antennas)))


def array_gain(n_antennas: int, exact: bool = False) -> float:
    """Coherent beamforming gain: N_t, or chi_mean^2 when exact=True."""
    if exact:
        return chi_mean(n_antennas) ** 2
    return float(n_antennas)


@dataclass(frozen=True)
class SinrDecomposition:
    """Signal and interference powers entering one user's average SINR."""

    kappa: float
    im1: float
    im2: float
    im3: float

    @property
    def sinr(self) -> float:
        return self.kappa / (self.im1 + self.im2 + self.im3 + 1.0)


@dataclass(frozen=True)
class RateReport:
    """Per-user legitimate, eavesdropping and secrecy rates plus sums."""

    legit: tuple[np.ndarray, ...]
    eaves: tuple[np.ndarray, ...]
    secrecy: tuple[np.ndarray, ...]
    sum_secrecy: float
    ee: float | None = None


def sinr_terms(
    cfg: SystemConfig,
    rho: EstimationQuality,
    q: DownlinkPower,
    m: int,
    k: int,
    exact_gain: bool = False,
) -> SinrDecomposition:
    """Signal/interference decomposition for user k of cluster m."""
    beta = float(cfg.beta(m)[k])
    r = float(rho.rho[m][k])
    row = q.q[m]
    qk = float(row[1 + k])
    nt = cfg.n_antennas
    gain = array_gain(nt, exact_gain)

    kappa = qk * beta * r * gain
    if exact_gain:
        im1 = qk * beta * (r * nt + 1.0 - r) - kappa
    else:
        im1 = qk * beta * (1.0 - r)
    stronger = float(row[1 : 1 + k].sum())
    im2 = beta * (stronger * (r * nt + 1.0 - r) + float(row[0]) * (1.0 - r))
    im3 = beta * float(sum(q.q[j].sum() for j in range(cfg.n_clusters) if j != m))
    return SinrDecomposition(kappa=kappa, im1=im1, im2=im2, im3=im3)


def legit_rate(
    cfg: SystemConfig,
    rho: EstimationQuality,
    q: DownlinkPower,
    m: int,
    k: int,
    exact_gain: bool = False,
) -> float:
    """Average achievable rate of user (m, k) in bits/s/Hz."""
    terms = sinr_terms(cfg, rho, q, m, k, exact_gain)
    return cfg.overhead * math.log2(1.0 + terms.sinr)


def eaves_rate(cfg: SystemConfig, q: DownlinkPower, m: int, k: int) -> float:
    """Average rate the eavesdropper achieves against user (m, k).

    Independent of both the antenna count and the estimation quality: the
    eavesdropper's channel is uncorrelated with every beam, so each unit
    of transmit power lands on it with unit average gain.
    """
    beta_e = cfg.eav_gain
    row = q.q[m]
    qk = float(row[1 + k])
    intra = float(row.sum()) - qk
    inter = float(sum(q.q[j].sum() for j in range(cfg.n_clusters) if j != m))
    denom = beta_e * intra + beta_e * inter + 1.0
    return cfg.overhead * math.log2(1.0 + qk * beta_e / denom)


def secrecy_report(
    cfg: SystemConfig,
    p: UplinkPower,
    q: DownlinkPower,
    exact_gain: bool = False,
) -> RateReport:
    """Per-user secrecy rates [legit - eaves]^+ and their sum."""
    rho = compute_rho(cfg, p)
    legit, eaves, secrecy = [], [], []
    for m in range(cfg.n_clusters):
        k_m = cfg.users_per_cluster[m]
        lrow = np.array([legit_rate(cfg, rho, q, m, k, exact_gain) for k in range(k_m)])
        erow = np.array([eaves_rate(cfg, q, m, k) for k in range(k_m)])
        legit.append(lrow)
        eaves.append(erow)
        secrecy.append(np.maximum(lrow - erow, 0.0))
    total = float(sum(s.sum() for s in secrecy))
    return RateReport(
        legit=tuple(legit),
        eaves=tuple(eaves),
        secrecy=tuple(secrecy),
        sum_secrecy=total,
    )


def asymptotic_large_nt(cfg: SystemConfig, q: DownlinkPower, m: int, k: int) -> float:
    """Antenna-count limit of the legitimate rate.

    With ever sharper beams only the residual intra-cluster interference
    survives, giving (1 - tau/T) log2(1 + Q_{m,k} / sum_{i<k} Q_{m,i}).
    For the strongest user the interference sum is empty, so the limit is
    unbounded and math.inf is returned (an explicit marker rather than a
    large float, so comparisons stay meaningful).
    """
    row = q.q[m]
    if k == 0:
        return math.inf
    stronger = float(row[1 : 1 + k].sum())
    if stronger == 0.0:
        return math.inf
    return cfg.overhead * math.log2(1.0 + float(row[1 + k]) / stronger)


def asymptotic_high_power(
    cfg: SystemConfig,
    rho: EstimationQuality,
    fractions: DownlinkPower,
) -> tuple[tuple[np.ndarray, ...], tuple[np.ndarray, ...]]:
    """Rate limits when the total downlink power grows without bound.

    `fractions` holds the per-slot power shares in the downlink layout
    (AN share at index 0 of each row); all shares, AN included, must sum
    to one. Returns (legit_limits, eaves_limits) as ragged per-user rows.
    Both limits share the same inter-cluster share sum, so the secrecy
    limit is independent of inter-cluster interference.
    """
    total = fractions.total()
    if abs(total - 1.0) > 1e-9:
        raise ValueError("power fractions must sum to 1, got %.12g" % total)
    nt = cfg.n_antennas
    legit_rows, eaves_rows = [], []
    for m in range(cfg.n_clusters):
        row = fractions.q[m]
        inter = float(
            sum(fractions.q[j].sum() for j in range(cfg.n_clusters) if j != m)
        )
        k_m = cfg.users_per_cluster[m]
        lrow = np.empty(k_m)
        erow = np.empty(k_m)
        for k in range(k_m):
            r = float(rho.rho[m][k])
            sk = float(row[1 + k])
            stronger = float(row[1 : 1 + k].sum())
            den_l = (
                sk * (1.0 - r)
                + stronger * (r * nt + 1.0 - r)
                + float(row[0]) * (1.0 - r)
                + inter
            )
            lrow[k] = cfg.overhead * math.log2(1.0 + sk * r * nt / den_l)
            den_e = (float(row.sum()) - sk) + inter
            if den_e == 0.0:
                erow[k] = math.inf
            else:
                erow[k] = cfg.overhead * math.log2(1.0 + sk / den_e)
        legit_rows.append(lrow)
        eaves_rows.append(erow)
    return tuple(legit_rows), tuple(eaves_rows)


def oma_report(cfg: SystemConfig, p: UplinkPower, q: DownlinkPower) -> RateReport:
    """Secrecy report for the orthogonal-access layout (one user per
    cluster), written out from its own single-user rate formulas.

    Reduces exactly to :func:`secrecy_report` on the same configuration;
    kept as an independent route for cross-checking.
    """
    if any(k != 1 for k in cfg.users_per_cluster):
        raise ValueError("orthogonal layout requires exactly one user per cluster")
    nt = cfg.n_antennas
    beta_e = cfg.eav_gain
    m_tot = cfg.n_clusters
    legit, eaves = [], []
    q_users = np.array([q.user(m, 0) for m in range(m_tot)])
    q_an = np.array([q.an(m) for m in range(m_tot)])
    for m in range(m_tot):
        beta = float(cfg.beta(m)[0])
        energy = float(p.p[m][0]) * beta * cfg.pilot_len
        r = energy / (1.0 + energy)
        kappa = q_users[m] * beta * r * nt
        i1 = q_users[m] * beta * (1.0 - r)
        i2 = beta * float(q_users.sum() - q_users[m])
        i3 = beta * (q_an[m] * (1.0 - r)) + beta * float(q_an.sum() - q_an[m])
        lrate = cfg.overhead * math.log2(1.0 + kappa / (i1 + i2 + i3 + 1.0))
        den_e = (
            beta_e * float(q_users.sum() - q_users[m])
            + beta_e * float(q_an.sum())
            + 1.0
        )
        erate = cfg.overhead * math.log2(1.0 + q_users[m] * beta_e / den_e)
        legit.append(np.array([lrate]))
        eaves.append(np.array([erate]))
    secrecy = tuple(np.maximum(l - e, 0.0) for l, e in zip(legit, eaves))
    total = float(sum(s.sum() for s in secrecy))
    return RateReport(
        legit=tuple(legit), eaves=tuple(eaves), secrecy=secrecy, sum_secrecy=total
    )


def energy_efficiency(
    report: RateReport,
    p: UplinkPower,
    q: DownlinkPower,
    circuit_power: float,
) -> float:
    """Sum secrecy rate over total consumed power (uplink + downlink +
    fixed circuit power)."""
    if circuit_power <= 0.0:
        raise ValueError("circuit_power must be positive")
    return report.sum_secrecy / (p.total() + q.total() + circuit_power)
