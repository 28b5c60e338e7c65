"""Joint uplink/downlink power allocation.

Two solvers built on the same machinery:

* sum-secrecy-rate maximization by alternating difference-of-convex (DC)
  steps between the uplink training powers (box constraint) and the
  downlink transmit powers (nonnegative, capped total including the AN
  slots);
* energy-efficiency maximization by a Dinkelbach loop whose parametric
  subproblems reuse the alternating solver with a linear power penalty.

Both rate sums inside the solvers are the smooth (unclamped) ones; the
per-user [.]^+ clamp is applied once on exit. Every DC step maximizes a
concave surrogate obtained by linearizing the subtracted concave part at
the previous iterate, so each accepted step cannot decrease the true
objective: with the subtracted part linearized from above, the surrogate
minorizes the objective and touches it at the expansion point.

Gradients are derived from the log-argument definitions (base-2 logs, so
every term carries a 1/ln 2 factor) and are validated against central
finite differences in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import (
    ClusterConfig,
    DownlinkPower,
    EstimationQuality,
    SystemConfig,
    UplinkPower,
    compute_rho,
)
from .projgrad import Box, CappedSimplex, ConcaveProblem, maximize
from .rates import RateReport, eaves_rate, energy_efficiency, legit_rate, secrecy_report

__all__ = [
    "DcCoefficients",
    "SolveOptions",
    "SolverTrace",
    "OmaResult",
    "dc_coefficients",
    "uplink_log_arguments",
    "uplink_objective",
    "downlink_objective",
    "uplink_dc_step",
    "downlink_dc_step",
    "smooth_secrecy_sum",
    "maximize_se",
    "maximize_ee",
    "baseline_fixed",
    "baseline_downlink_se",
    "baseline_uplink_se",
    "optimize_oma_tdma",
]

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class DcCoefficients:
    """Per-user affine-form coefficients of the two DC decompositions.

    a1..a3 parameterize the uplink objective at fixed downlink powers:
    each user's rate is log2 of a ratio of affine functions of the
    uplink powers, with

        a1 = Q_{m,k} beta_{m,k} N_t
        a2 = beta_{m,k} [(N_t - 1) sum_{i<k} Q_{m,i} - Q_{m,0} - Q_{m,k}]
        a3 = beta_{m,k} sum_{i<=k} Q_{m,i} (AN included)
             + beta_{m,k} sum_{j!=m} sum_i Q_{j,i} + 1

    b1..b3 parameterize the downlink objective at fixed estimation
    quality:

        b1 = rho beta N_t,  b2 = beta (1 - rho),  b3 = beta (rho N_t + 1 - rho).
    """

    a1: tuple[np.ndarray, ...]
    a2: tuple[np.ndarray, ...]
    a3: tuple[np.ndarray, ...]
    b1: tuple[np.ndarray, ...]
    b2: tuple[np.ndarray, ...]
    b3: tuple[np.ndarray, ...]


def _uplink_coeffs(cfg: SystemConfig, q: DownlinkPower):
    nt = cfg.n_antennas
    q_total = q.total()
    a1, a2, a3 = [], [], []
    for m in range(cfg.n_clusters):
        beta = cfg.beta(m)
        row = q.q[m]
        users = row[1:]
        prefix = np.concatenate(([0.0], np.cumsum(users)[:-1]))
        inter = q_total - float(row.sum())
        a1.append(users * beta * nt)
        a2.append(beta * ((nt - 1.0) * prefix - row[0] - users))
        a3.append(beta * (row[0] + np.cumsum(users)) + beta * inter + 1.0)
    return tuple(a1), tuple(a2), tuple(a3)


def _downlink_coeffs(cfg: SystemConfig, rho: EstimationQuality):
    nt = cfg.n_antennas
    b1, b2, b3 = [], [], []
    for m in range(cfg.n_clusters):
        beta = cfg.beta(m)
        r = rho.rho[m]
        b1.append(r * beta * nt)
        b2.append(beta * (1.0 - r))
        b3.append(beta * (r * nt + 1.0 - r))
    return tuple(b1), tuple(b2), tuple(b3)


def dc_coefficients(
    cfg: SystemConfig, q: DownlinkPower, rho: EstimationQuality
) -> DcCoefficients:
    a1, a2, a3 = _uplink_coeffs(cfg, q)
    b1, b2, b3 = _downlink_coeffs(cfg, rho)
    return DcCoefficients(a1=a1, a2=a2, a3=a3, b1=b1, b2=b2, b3=b3)


# ---------------------------------------------------------------------------
# Uplink objective: sum_k log2 f1_k - log2 f2_k per cluster, both arguments
# affine in the uplink powers and structurally positive for P >= 0.


def _uplink_parts(cfg: SystemConfig, coeffs, p_flat: np.ndarray):
    """Values and gradients of the two concave halves of the uplink sum.

    Returns (f1_value, f1_grad, f2_value, f2_grad) where the values are
    sums of base-2 logs and the gradients are exact (1/ln 2 included).
    """
    a1, a2, a3 = coeffs
    tau = cfg.pilot_len
    f1_value = 0.0
    f2_value = 0.0
    grads1, grads2 = [], []
    pos = 0
    for m in range(cfg.n_clusters):
        k_m = cfg.users_per_cluster[m]
        beta = cfg.beta(m)
        p_m = p_flat[pos : pos + k_m]
        pos += k_m
        s = tau * float(beta @ p_m)
        c1 = (a1[m] + a2[m]) * beta * tau
        c2 = a2[m] * beta * tau
        args1 = c1 * p_m + a3[m] * (s + 1.0)
        args2 = c2 * p_m + a3[m] * (s + 1.0)
        if np.any(args1 <= 0.0) or np.any(args2 <= 0.0):
            # Cannot happen for P >= 0 (both arguments are the product of
            # two positive physical factors); guard against stray inputs.
            raise FloatingPointError("non-positive log argument in uplink objective")
        f1_value += float(np.log2(args1).sum())
        f2_value += float(np.log2(args2).sum())
        e1 = 1.0 / args1
        e2 = 1.0 / args2
        grads1.append((c1 * e1 + tau * beta * float(a3[m] @ e1)) / _LN2)
        grads2.append((c2 * e2 + tau * beta * float(a3[m] @ e2)) / _LN2)
    return f1_value, np.concatenate(grads1), f2_value, np.concatenate(grads2)


def uplink_log_arguments(cfg: SystemConfig, q: DownlinkPower, p: UplinkPower):
    """The affine log arguments (f1, f2) of the uplink decomposition,
    flattened across clusters. f2 equals (total interference + 1) times
    the pilot-energy normalizer (1 + tau sum beta P), hence positive."""
    a_coeffs = _uplink_coeffs(cfg, q)
    tau = cfg.pilot_len
    args1, args2 = [], []
    for m in range(cfg.n_clusters):
        beta = cfg.beta(m)
        p_m = p.p[m]
        s = tau * float(beta @ p_m)
        c1 = (a_coeffs[0][m] + a_coeffs[1][m]) * beta * tau
        c2 = a_coeffs[1][m] * beta * tau
        args1.append(c1 * p_m + a_coeffs[2][m] * (s + 1.0))
        args2.append(c2 * p_m + a_coeffs[2][m] * (s + 1.0))
    return np.concatenate(args1), np.concatenate(args2)


def uplink_objective(
    cfg: SystemConfig,
    q: DownlinkPower,
    p: UplinkPower,
    penalty: float = 0.0,
) -> tuple[float, np.ndarray]:
    """Sum legitimate rate as a function of the uplink powers (downlink
    fixed), minus penalty * total uplink power; with its gradient.

    The eavesdropping rates do not depend on the uplink powers, so this
    differs from the secrecy sum only by a constant.
    """
    coeffs = _uplink_coeffs(cfg, q)
    p_flat = p.flat()
    f1_value, f1_grad, f2_value, f2_grad = _uplink_parts(cfg, coeffs, p_flat)
    scale = cfg.overhead
    value = scale * (f1_value - f2_value) - penalty * float(p_flat.sum())
    grad = scale * (f1_grad - f2_grad) - penalty
    return value, grad


# ---------------------------------------------------------------------------
# Downlink objective: per user, concave part (g1 + g3) minus concave part
# (g2 + g4), all four being logs of affine functions of the downlink powers.


def _downlink_parts(cfg: SystemConfig, coeffs, q_flat: np.ndarray):
    """Values/gradients of the concave (g1+g3) and subtracted (g2+g4)
    halves of the downlink secrecy sum (1/ln 2 included in gradients)."""
    b1, b2, b3 = coeffs
    beta_e = cfg.eav_gain
    n_users = cfg.total_users
    m_tot = cfg.n_clusters

    rows, pos = [], 0
    for k_m in cfg.users_per_cluster:
        rows.append(q_flat[pos : pos + k_m + 1])
        pos += k_m + 1
    row_sums = np.array([float(r.sum()) for r in rows])
    q_total = float(row_sums.sum())
    g4_arg = beta_e * q_total + 1.0

    concave_value = 0.0
    sub_value = n_users * math.log2(g4_arg)
    e3_rows, e1_rows, e2_rows = [], [], []
    t1 = np.empty(m_tot)
    t2 = np.empty(m_tot)
    for m in range(m_tot):
        beta = cfg.beta(m)
        row = rows[m]
        users = row[1:]
        prefix = np.concatenate(([0.0], np.cumsum(users)[:-1]))
        s_other = float(row_sums.sum() - row_sums[m])
        den2 = b2[m] * (users + row[0]) + b3[m] * prefix + beta * s_other + 1.0
        g1_arg = den2 + b1[m] * users
        g3_arg = beta_e * (q_total - users) + 1.0
        concave_value += float(np.log2(g1_arg).sum() + np.log2(g3_arg).sum())
        sub_value += float(np.log2(den2).sum())
        e1 = 1.0 / g1_arg
        e2 = 1.0 / den2
        e1_rows.append(e1)
        e2_rows.append(e2)
        e3_rows.append(1.0 / g3_arg)
        t1[m] = float(beta @ e1)
        t2[m] = float(beta @ e2)

    e3_total = float(sum(e.sum() for e in e3_rows))
    t1_total = float(t1.sum())
    t2_total = float(t2.sum())

    concave_grads, sub_grads = [], []
    for m in range(m_tot):
        e1, e2, e3 = e1_rows[m], e2_rows[m], e3_rows[m]
        k_m = e1.size

        def _suffix(values):
            tail = np.cumsum(values[::-1])[::-1]
            out = np.empty_like(values)
            out[:-1] = tail[1:]
            out[-1] = 0.0
            return out

        cg = np.empty(k_m + 1)
        sg = np.empty(k_m + 1)
        # AN slot: leakage rows of every own-cluster term, the other
        # clusters' cross terms, and the eavesdropper logs.
        cg[0] = float(b2[m] @ e1) + (t1_total - t1[m]) + beta_e * e3_total
        sg[0] = float(b2[m] @ e2) + (t2_total - t2[m]) + n_users * beta_e / g4_arg
        # User slots.
        cg[1:] = (
            (b1[m] + b2[m]) * e1
            + _suffix(b3[m] * e1)
            + (t1_total - t1[m])
            + beta_e * (e3_total - e3)
        )
        sg[1:] = (
            b2[m] * e2
            + _suffix(b3[m] * e2)
            + (t2_total - t2[m])
            + n_users * beta_e / g4_arg
        )
        concave_grads.append(cg / _LN2)
        sub_grads.append(sg / _LN2)

    return (
        concave_value,
        np.concatenate(concave_grads),
        sub_value,
        np.concatenate(sub_grads),
    )


def downlink_objective(
    cfg: SystemConfig,
    rho: EstimationQuality,
    q: DownlinkPower,
    penalty: float = 0.0,
) -> tuple[float, np.ndarray]:
    """Smooth (unclamped) sum secrecy rate as a function of the downlink
    powers at fixed estimation quality, minus penalty * total downlink
    power; with its gradient."""
    coeffs = _downlink_coeffs(cfg, rho)
    q_flat = q.flat()
    cval, cgrad, sval, sgrad = _downlink_parts(cfg, coeffs, q_flat)
    scale = cfg.overhead
    value = scale * (cval - sval) - penalty * float(q_flat.sum())
    grad = scale * (cgrad - sgrad) - penalty
    return value, grad


# ---------------------------------------------------------------------------
# DC steps and the alternating solver.


@dataclass(frozen=True)
class SolveOptions:
    """Tolerances and iteration caps for the allocation solvers."""

    outer_tol: float = 1e-3  # alternating loop: stop on |R_d - R_u|
    max_outer: int = 50
    inner_tol: float = 1e-6  # DC loop: stop on absolute improvement
    max_inner: int = 50
    kernel_tol: float = 1e-7
    kernel_max_iter: int = 300
    ee_tol: float = 1e-6  # Dinkelbach: stop on the subtractive objective
    ee_max_outer: int = 60
    ee_outer_tol: float = 1e-6  # alternating tolerance inside Dinkelbach rounds


@dataclass
class SolverTrace:
    """Progress record of one solve.

    outer_values holds the true stage objective after each uplink and
    downlink stage (prefixed with the initial value), so it must be
    nondecreasing; step_values holds the per-DC-iteration objective
    sequence of each stage. epsilons records the per-round gap between
    the downlink- and uplink-stage objectives (sign included);
    lambda_sequence is filled by the energy-efficiency loop only.
    """

    outer_values: list[float] = field(default_factory=list)
    inner_iteration_counts: list[int] = field(default_factory=list)
    step_values: list[list[float]] = field(default_factory=list)
    epsilons: list[float] = field(default_factory=list)
    lambda_sequence: list[float] = field(default_factory=list)
    converged: bool = False


def _pmax_flat(cfg: SystemConfig, p_max) -> np.ndarray:
    if np.isscalar(p_max):
        return np.full(cfg.total_users, float(p_max))
    return UplinkPower.full(cfg, p_max).flat()


def uplink_dc_step(
    cfg: SystemConfig,
    q: DownlinkPower,
    p_prev: UplinkPower,
    p_max,
    penalty: float = 0.0,
    options: SolveOptions | None = None,
) -> UplinkPower:
    """One DC iteration of the uplink subproblem: maximize the concave
    surrogate f1(P) - <grad f2(P_prev), P> (- penalty * sum P) over the
    per-user box."""
    options = options or SolveOptions()
    coeffs = _uplink_coeffs(cfg, q)
    scale = cfg.overhead
    prev_flat = p_prev.flat()
    _, _, f2_prev, f2_grad_prev = _uplink_parts(cfg, coeffs, prev_flat)
    lin = scale * f2_grad_prev
    const = -scale * f2_prev + float(lin @ prev_flat)

    def surrogate(x):
        f1_value, f1_grad, _, _ = _uplink_parts(cfg, coeffs, x)
        value = scale * f1_value - penalty * float(x.sum()) - float(lin @ x) + const
        grad = scale * f1_grad - penalty - lin
        return value, grad

    box = Box(lower=np.zeros(cfg.total_users), upper=_pmax_flat(cfg, p_max))
    problem = ConcaveProblem(dim=cfg.total_users, evaluate=surrogate, feasible_set=box)
    result = maximize(
        problem,
        prev_flat,
        tol=options.kernel_tol,
        max_iter=options.kernel_max_iter,
    )
    return UplinkPower.from_flat(cfg, result.point)


def downlink_dc_step(
    cfg: SystemConfig,
    rho: EstimationQuality,
    q_prev: DownlinkPower,
    q_max: float,
    penalty: float = 0.0,
    options: SolveOptions | None = None,
) -> DownlinkPower:
    """One DC iteration of the downlink subproblem: maximize the concave
    surrogate g1(Q) + g3(Q) - <grad (g2+g4)(Q_prev), Q> (- penalty *
    sum Q) over the capped nonnegative set."""
    options = options or SolveOptions()
    coeffs = _downlink_coeffs(cfg, rho)
    scale = cfg.overhead
    prev_flat = q_prev.flat()
    _, _, sub_prev, sub_grad_prev = _downlink_parts(cfg, coeffs, prev_flat)
    lin = scale * sub_grad_prev
    const = -scale * sub_prev + float(lin @ prev_flat)

    def surrogate(x):
        cval, cgrad, _, _ = _downlink_parts(cfg, coeffs, x)
        value = scale * cval - penalty * float(x.sum()) - float(lin @ x) + const
        grad = scale * cgrad - penalty - lin
        return value, grad

    dim = cfg.total_users + cfg.n_clusters
    problem = ConcaveProblem(
        dim=dim, evaluate=surrogate, feasible_set=CappedSimplex(cap=q_max)
    )
    result = maximize(
        problem,
        prev_flat,
        tol=options.kernel_tol,
        max_iter=options.kernel_max_iter,
    )
    return DownlinkPower.from_flat(cfg, result.point)


def smooth_secrecy_sum(cfg: SystemConfig, p: UplinkPower, q: DownlinkPower) -> float:
    """Unclamped sum of per-user (legitimate - eavesdropping) rates; the
    quantity the DC solvers actually maximize."""
    rho = compute_rho(cfg, p)
    total = 0.0
    for m in range(cfg.n_clusters):
        for k in range(cfg.users_per_cluster[m]):
            total += legit_rate(cfg, rho, q, m, k) - eaves_rate(cfg, q, m, k)
    return total


def _stage_objective(cfg, p, q, lam, circuit_power) -> float:
    value = smooth_secrecy_sum(cfg, p, q)
    if lam != 0.0:
        value -= lam * (p.total() + q.total() + circuit_power)
    return value


def _alternate(
    cfg: SystemConfig,
    p_max,
    q_max: float,
    p0: UplinkPower,
    q0: DownlinkPower,
    options: SolveOptions,
    lam: float = 0.0,
    circuit_power: float = 0.0,
    outer_tol: float | None = None,
) -> tuple[UplinkPower, DownlinkPower, SolverTrace]:
    """Alternating uplink/downlink DC solve of the (optionally power-
    penalized) smooth secrecy sum."""
    outer_tol = options.outer_tol if outer_tol is None else outer_tol
    p, q = p0, q0
    trace = SolverTrace()
    trace.outer_values.append(_stage_objective(cfg, p, q, lam, circuit_power))

    for _ in range(options.max_outer):
        # Uplink stage at fixed downlink powers.
        values = [trace.outer_values[-1]]
        for _ in range(options.max_inner):
            p = uplink_dc_step(cfg, q, p, p_max, penalty=lam, options=options)
            values.append(_stage_objective(cfg, p, q, lam, circuit_power))
            if values[-1] - values[-2] < options.inner_tol:
                break
        trace.step_values.append(values)
        trace.inner_iteration_counts.append(len(values) - 1)
        r_up = values[-1]
        trace.outer_values.append(r_up)

        # Downlink stage at the resulting estimation quality.
        rho = compute_rho(cfg, p)
        values = [r_up]
        for _ in range(options.max_inner):
            q = downlink_dc_step(cfg, rho, q, q_max, penalty=lam, options=options)
            values.append(_stage_objective(cfg, p, q, lam, circuit_power))
            if values[-1] - values[-2] < options.inner_tol:
                break
        trace.step_values.append(values)
        trace.inner_iteration_counts.append(len(values) - 1)
        r_down = values[-1]
        trace.outer_values.append(r_down)

        eps_star = r_down - r_up
        trace.epsilons.append(eps_star)
        if abs(eps_star) <= outer_tol:
            trace.converged = True
            break
    return p, q, trace


def baseline_fixed(
    cfg: SystemConfig,
    p_max,
    q_max: float,
    an_fraction: float = 0.2,
) -> tuple[UplinkPower, DownlinkPower]:
    """Fixed allocation: every user at its uplink cap; (1 - an_fraction)
    of the downlink budget split equally over users and an_fraction split
    equally over the per-cluster AN slots."""
    if not 0.0 <= an_fraction < 1.0:
        raise ValueError("an_fraction must lie in [0, 1)")
    p = UplinkPower.full(cfg, p_max)
    user_power = (1.0 - an_fraction) * q_max / cfg.total_users
    an_power = an_fraction * q_max / cfg.n_clusters
    rows = [
        np.concatenate(([an_power], np.full(k, user_power)))
        for k in cfg.users_per_cluster
    ]
    return p, DownlinkPower(tuple(rows))


def maximize_se(
    cfg: SystemConfig,
    p_max,
    q_max: float,
    options: SolveOptions | None = None,
    p0: UplinkPower | None = None,
    q0: DownlinkPower | None = None,
) -> tuple[UplinkPower, DownlinkPower, RateReport, SolverTrace]:
    """Alternating DC maximization of the sum secrecy rate.

    Starts from the fixed baseline allocation unless told otherwise, so
    the first trace value is the baseline's objective and every later
    value records the improvement over it.
    """
    options = options or SolveOptions()
    if p0 is None or q0 is None:
        p_init, q_init = baseline_fixed(cfg, p_max, q_max)
        p0 = p0 if p0 is not None else p_init
        q0 = q0 if q0 is not None else q_init
    p, q, trace = _alternate(cfg, p_max, q_max, p0, q0, options)
    report = secrecy_report(cfg, p, q)
    return p, q, report, trace


def maximize_ee(
    cfg: SystemConfig,
    p_max,
    q_max: float,
    circuit_power: float,
    options: SolveOptions | None = None,
) -> tuple[UplinkPower, DownlinkPower, float, SolverTrace]:
    """Dinkelbach maximization of secrecy energy efficiency.

    Starting from lambda = 0, each round maximizes the subtractive
    objective (secrecy sum - lambda * total power) with the alternating
    solver warm-started at the previous allocation, then updates lambda
    to the achieved ratio. Warm starting makes each round's subtractive
    value nonnegative, so the lambda sequence is nondecreasing; the loop
    stops once that value drops below ee_tol.
    """
    if circuit_power <= 0.0:
        raise ValueError("circuit_power must be positive")
    options = options or SolveOptions()
    p, q = baseline_fixed(cfg, p_max, q_max)
    lam = 0.0
    trace = SolverTrace(lambda_sequence=[0.0])

    if smooth_secrecy_sum(cfg, p, q) < 0.0:
        # The fixed split starts below the trivial all-zero allocation;
        # start from (almost) zero instead so round values stay sound.
        p = UplinkPower.full(cfg, 0.0)
        q = DownlinkPower.zeros(cfg)

    for _ in range(options.ee_max_outer):
        p, q, sub = _alternate(
            cfg,
            p_max,
            q_max,
            p,
            q,
            options,
            lam=lam,
            circuit_power=circuit_power,
            outer_tol=options.ee_outer_tol,
        )
        se_smooth = smooth_secrecy_sum(cfg, p, q)
        denom = p.total() + q.total() + circuit_power
        f_hat = se_smooth - lam * denom
        if f_hat < -lam * circuit_power:
            # The all-off allocation beats the stationary point found for
            # this lambda; fall back to it (it is always feasible).
            p = UplinkPower.full(cfg, 0.0)
            q = DownlinkPower.zeros(cfg)
            se_smooth = 0.0
            denom = circuit_power
            f_hat = -lam * circuit_power
        trace.outer_values.append(se_smooth)
        trace.epsilons.append(f_hat)
        trace.inner_iteration_counts.extend(sub.inner_iteration_counts)
        lam = se_smooth / denom
        trace.lambda_sequence.append(lam)
        if f_hat <= options.ee_tol:
            trace.converged = True
            break

    report = secrecy_report(cfg, p, q)
    ee = energy_efficiency(report, p, q, circuit_power)
    return p, q, ee, trace


def baseline_downlink_se(
    cfg: SystemConfig,
    p_max,
    q_max: float,
    options: SolveOptions | None = None,
) -> tuple[UplinkPower, DownlinkPower, RateReport, SolverTrace]:
    """Uplink pinned at its cap; one downlink DC loop to convergence."""
    options = options or SolveOptions()
    p, q = baseline_fixed(cfg, p_max, q_max)
    rho = compute_rho(cfg, p)
    trace = SolverTrace()
    values = [_stage_objective(cfg, p, q, 0.0, 0.0)]
    for _ in range(options.max_inner):
        q = downlink_dc_step(cfg, rho, q, q_max, options=options)
        values.append(_stage_objective(cfg, p, q, 0.0, 0.0))
        if values[-1] - values[-2] < options.inner_tol:
            trace.converged = True
            break
    trace.step_values.append(values)
    trace.inner_iteration_counts.append(len(values) - 1)
    trace.outer_values = values
    return p, q, secrecy_report(cfg, p, q), trace


def baseline_uplink_se(
    cfg: SystemConfig,
    p_max,
    q_max: float,
    options: SolveOptions | None = None,
) -> tuple[UplinkPower, DownlinkPower, RateReport, SolverTrace]:
    """Downlink pinned at the fixed split; one uplink DC loop."""
    options = options or SolveOptions()
    p, q = baseline_fixed(cfg, p_max, q_max)
    trace = SolverTrace()
    values = [_stage_objective(cfg, p, q, 0.0, 0.0)]
    for _ in range(options.max_inner):
        p = uplink_dc_step(cfg, q, p, p_max, options=options)
        values.append(_stage_objective(cfg, p, q, 0.0, 0.0))
        if values[-1] - values[-2] < options.inner_tol:
            trace.converged = True
            break
    trace.step_values.append(values)
    trace.inner_iteration_counts.append(len(values) - 1)
    trace.outer_values = values
    return p, q, secrecy_report(cfg, p, q), trace


@dataclass(frozen=True)
class OmaResult:
    """Time-shared orthogonal-access benchmark (one user per cluster per
    slot, each user served 1/K of the time)."""

    se: float
    ee: float | None
    slots: tuple[tuple[UplinkPower, DownlinkPower, RateReport, SolverTrace], ...]


def optimize_oma_tdma(
    cfg: SystemConfig,
    p_max,
    q_max: float,
    options: SolveOptions | None = None,
    circuit_power: float | None = None,
) -> OmaResult:
    """Optimized orthogonal benchmark: slot t serves the t-th user of
    every cluster with the full power budgets, allocated by the same SE
    solver on the one-user-per-cluster layout; rates (and powers, for the
    efficiency figure) are averaged over the K slots."""
    users = set(cfg.users_per_cluster)
    if len(users) != 1:
        raise ValueError("the time-shared benchmark needs equal-size clusters")
    k_total = users.pop()
    slots = []
    se_sum = 0.0
    power_sum = 0.0
    for t in range(k_total):
        slot_cfg = SystemConfig(
            n_antennas=cfg.n_antennas,
            clusters=tuple(
                ClusterConfig(np.array([cfg.beta(m)[t]]))
                for m in range(cfg.n_clusters)
            ),
            pilot_len=cfg.pilot_len,
            coherence_len=cfg.coherence_len,
            eav_gain=cfg.eav_gain,
        )
        p_t, q_t, report_t, trace_t = maximize_se(slot_cfg, p_max, q_max, options)
        slots.append((p_t, q_t, report_t, trace_t))
        se_sum += report_t.sum_secrecy
        power_sum += p_t.total() + q_t.total()
    se = se_sum / k_total
    ee = None
    if circuit_power is not None:
        ee = se / (power_sum / k_total + circuit_power)
    return OmaResult(se=se, ee=ee, slots=tuple(slots))
