"""Unscented quaternion filter for in-motion alignment with gyro-bias
co-estimation.

The estimated state is a unit reference quaternion (body to nav) plus a
six-component error vector: a generalized Rodrigues parameter (GRP)
attitude error applied on the nav side, chi_q = dq(p) * q_ref, and the
gyro bias. Keeping the attitude error in GRP form keeps the covariance
a plain 6x6 matrix.

Sigma points spread along the columns of the symmetric PSD square root
of (n + kappa) P. With the default kappa = 3 - n the center weight
kappa/(n+kappa) is negative, so the propagated reference quaternion is
the average of the non-center points with equal weights, while vector
means and covariances use the full weight set.

Per update interval the attitude composes exactly as

    q <- conj(dq_n) * q * dq_b

with dq_n the aiding-frame increment and dq_b the gyro increment; each
sigma point subtracts its own bias hypothesis from the measured body
rotation vector before composing. The measurement is a windowed dynamic
observation pair (alpha, beta) re-anchored at the current time: the
filter predicts beta as C(chi_q) alpha per sigma point and fuses the
difference. Measurement noise grows linearly with the window span plus
a small floor relative to |alpha|, which keeps the update defined when
the only weak direction is rotation about alpha itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import earth as earth_mod
from .attitude import (
    GrpParams,
    error_quat_from_grp,
    dcm_from_quat,
    grp_from_error_quat,
    quat_average,
    quat_conj,
    quat_identity,
    quat_multiply,
    quat_normalize,
    quat_from_rotvec,
    rotvec_from_quat,
    skew,
)
from .davenport import DavenportAccumulator, reconstruct_attitude
from .errors import CovarianceSqrtError, RankDeficiencyError
from .observations import ChainState, ObservationPair
from .sensors import SensorSpec

__all__ = [
    "DynamicEstimate",
    "FilterState",
    "NoiseConfig",
    "UkfConfig",
    "fold_and_reset",
    "measurement_update",
    "psd_project",
    "run_dynamic_alignment",
    "sigma_points",
    "sqrt_psd",
    "time_update",
]


@dataclass(frozen=True)
class UkfConfig:
    """Spread and weighting knobs.

    kappa tunes the sigma-point radius sqrt(n + kappa); the default
    3 - n makes the radius sqrt(3) regardless of dimension.
    equal_weights switches the vector moments to the same plain
    1/(2n) weighting used for the quaternion average (no center
    point); the default uses the standard weight set, which keeps the
    reconstructed covariance consistent.
    nis_gate bounds the normalized innovation squared per update:
    when the NIS exceeds the gate the innovation covariance is
    inflated by nis / gate before the gain is formed, so a single
    far-out measurement cannot collapse the covariance while the
    attitude error is still outside the linear range.  The default is
    the 99.9 percent chi-square point for 3 degrees of freedom.  Set
    None to disable.
    update_substeps splits each measurement into that many partial
    updates with re-linearization in between (see measurement_update).
    mode_innovation centers the innovation on the mean-attitude
    prediction C(q) alpha instead of the weighted point average.
    Averaging rotated copies of alpha shrinks it, which is the correct
    predictive mean while the spread reflects genuine uncertainty but
    turns into a persistent false innovation once the estimate has
    converged under a deliberately held-open variance; refinement
    passes therefore switch this on, while a cold wide-prior start
    must leave it off so the gain and the residual stay consistent.
    """

    kappa: float = -3.0
    equal_weights: bool = False
    grp: GrpParams = field(default_factory=GrpParams)
    skip_condition: float = 1e12
    nis_gate: float = 16.27
    update_substeps: int = 4
    mode_innovation: bool = False
    bias_in_measurement: bool = True
    null_floor: bool = True

    def __post_init__(self):
        if self.kappa <= -6.0:
            raise ValueError("kappa must exceed -n = -6")
        if self.nis_gate is not None and self.nis_gate <= 0.0:
            raise ValueError("nis_gate must be positive (or None to disable)")
        if self.update_substeps < 1:
            raise ValueError("update_substeps must be at least 1")


@dataclass(frozen=True)
class NoiseConfig:
    """Process/measurement noise densities, all SI (rad, m, s).

    accel_bias_bound feeds the measurement variance: the filter does
    not estimate accelerometer biases, so their integrated effect
    (bound * span per axis) is carried as measurement noise instead of
    pretending the velocity increments are exact.
    r_floor_rel adds sqrt(r_floor_rel * |alpha|)^2 per axis to the
    measurement variance so noise-free runs still carry a defined,
    well-scaled update.
    """

    gyro_arw: float = 0.0
    gyro_rrw: float = 0.0
    accel_vrw: float = 0.0
    accel_bias_bound: float = 0.0
    r_floor_rel: float = 1e-6
    init_tilt_std: float = np.radians(10.0)
    init_yaw_std: float = np.radians(60.0)
    init_bias_std: float = 0.0

    @classmethod
    def from_sensor(cls, spec: SensorSpec, **overrides) -> "NoiseConfig":
        kw = dict(
            gyro_arw=spec.gyro_arw,
            gyro_rrw=spec.gyro_rrw,
            accel_vrw=spec.accel_vrw,
            accel_bias_bound=spec.accel_bias_bound,
            init_bias_std=spec.gyro_bias_bound,
        )
        kw.update(overrides)
        return cls(**kw)

    def q_matrix(self, dt: float) -> np.ndarray:
        q = np.zeros((6, 6))
        q[:3, :3] = self.gyro_arw**2 * dt * np.eye(3)
        q[3:, 3:] = self.gyro_rrw**2 * dt * np.eye(3)
        return q

    def r_matrix(self, span: float, alpha_norm: float) -> np.ndarray:
        var = (
            self.accel_vrw**2 * span
            + (self.accel_bias_bound * span) ** 2
            + (self.r_floor_rel * alpha_norm) ** 2
        )
        return var * np.eye(3)

    def p0_matrix(self) -> np.ndarray:
        # Attitude error lives on the nav side, so the first two GRP
        # components are tilt (well observed by gravity from the start)
        # and the third is yaw, which a coarse solve leaves far less
        # certain. A single shared sigma would either choke the yaw
        # search or let tilt wander.
        p = np.zeros((6, 6))
        p[0, 0] = p[1, 1] = self.init_tilt_std**2
        p[2, 2] = self.init_yaw_std**2
        p[3:, 3:] = self.init_bias_std**2 * np.eye(3)
        return p


@dataclass
class FilterState:
    """Reference quaternion, error-state mean [grp; bias], covariance.

    null_axis caches the nav-frame direction of the previous
    measurement's predicted vector; measurement_update uses its motion
    between epochs to bound how fast the covariance may shrink along
    the direction a single vector observation cannot constrain."""

    quat: np.ndarray
    x: np.ndarray
    cov: np.ndarray
    t: float
    k: int
    null_axis: np.ndarray | None = None

    @property
    def bias(self) -> np.ndarray:
        return self.x[3:].copy()


def sqrt_psd(p: np.ndarray, tol: float = 1e-3) -> np.ndarray:
    """Symmetric square root of a nominally PSD matrix.

    Negative eigenvalues small relative to the dominant one (produced
    by the negative center weight and the update subtraction whenever
    the spectrum spans many decades) are clamped to zero; an
    eigenvalue negative beyond tol of the largest means the filter has
    genuinely broken down and raises.
    """
    p = 0.5 * (p + p.T)
    if not np.all(np.isfinite(p)):
        raise CovarianceSqrtError("covariance contains non-finite entries")
    evals, evecs = np.linalg.eigh(p)
    scale = max(1.0, float(evals[-1]))
    if evals[0] < -tol * scale:
        raise CovarianceSqrtError(
            f"covariance indefinite: min eigenvalue {evals[0]:.3e}"
        )
    root = np.sqrt(np.clip(evals, 0.0, None))
    return (evecs * root) @ evecs.T


def psd_project(p: np.ndarray, tol: float = 1e-3) -> np.ndarray:
    """Nearest-PSD projection (eigenvalue clamp) with the same breakdown
    guard as sqrt_psd; keeps stored covariances PSD to round-off."""
    p = 0.5 * (p + p.T)
    if not np.all(np.isfinite(p)):
        raise CovarianceSqrtError("covariance contains non-finite entries")
    evals, evecs = np.linalg.eigh(p)
    scale = max(1.0, float(evals[-1]))
    if evals[0] < -tol * scale:
        raise CovarianceSqrtError(
            f"covariance indefinite: min eigenvalue {evals[0]:.3e}"
        )
    if evals[0] >= 0.0:
        return p
    return (evecs * np.clip(evals, 0.0, None)) @ evecs.T


def sigma_points(x: np.ndarray, p: np.ndarray, kappa: float):
    """Symmetric 2n+1 point set and the standard weight vector."""
    n = len(x)
    if kappa <= -n:
        raise ValueError("kappa must exceed -n")
    c = np.sqrt(n + kappa)
    s = sqrt_psd(p)
    pts = np.empty((2 * n + 1, n))
    pts[0] = x
    pts[1 : n + 1] = x + c * s.T
    pts[n + 1 :] = x - c * s.T
    w = np.full(2 * n + 1, 1.0 / (2.0 * (n + kappa)))
    w[0] = kappa / (n + kappa)
    return pts, w


def _moment_weights(n: int, kappa: float, equal: bool) -> np.ndarray:
    if not equal:
        w = np.full(2 * n + 1, 1.0 / (2.0 * (n + kappa)))
        w[0] = kappa / (n + kappa)
    else:
        w = np.full(2 * n + 1, 1.0 / (2.0 * n))
        w[0] = 0.0
    return w


def _sigma_quats(pts: np.ndarray, quat: np.ndarray, grp: GrpParams) -> np.ndarray:
    dq = error_quat_from_grp(pts[:, :3], grp)
    return quat_multiply(dq, quat)


def time_update(
    state: FilterState,
    dq_b: np.ndarray,
    dq_n: np.ndarray,
    dt: float,
    noise: NoiseConfig,
    config: UkfConfig = UkfConfig(),
) -> FilterState:
    """Propagate reference quaternion, error mean and covariance through
    one update interval given the two attitude increments."""
    n = 6
    pts, _ = sigma_points(state.x, state.cov, config.kappa)
    w = _moment_weights(n, config.kappa, config.equal_weights)
    chi_q = _sigma_quats(pts, state.quat, config.grp)

    phi = rotvec_from_quat(dq_b)
    phi_i = phi - pts[:, 3:] * dt
    dq_n_inv = quat_conj(dq_n)
    prop_q = quat_multiply(
        quat_multiply(dq_n_inv, chi_q), quat_from_rotvec(phi_i)
    )

    # Reference prediction: average of the non-center points. At the
    # default kappa the center weight is negative, which a weighted
    # quaternion average cannot absorb.
    q_ref = quat_average(prop_q[1:])

    dq_err = quat_multiply(prop_q, quat_conj(q_ref))
    neg = dq_err[:, 3] < 0.0
    dq_err[neg] = -dq_err[neg]
    chi = np.empty((2 * n + 1, n))
    chi[:, :3] = grp_from_error_quat(dq_err, config.grp)
    chi[:, 3:] = pts[:, 3:]

    x_mean = w @ chi
    d = chi - x_mean
    cov = (d.T * w) @ d
    cov = psd_project(cov + noise.q_matrix(dt))
    return FilterState(
        quat=q_ref, x=x_mean, cov=cov, t=state.t + dt, k=state.k + 1,
        null_axis=state.null_axis,
    )


def _single_update(
    state: FilterState,
    pair: ObservationPair,
    noise: NoiseConfig,
    config: UkfConfig,
    r_scale: float,
) -> tuple[FilterState, bool]:
    n = 6
    pts, _ = sigma_points(state.x, state.cov, config.kappa)
    w = _moment_weights(n, config.kappa, config.equal_weights)
    chi_q = _sigma_quats(pts, state.quat, config.grp)

    # The observed alpha was integrated with biased gyros; anchored at
    # the window end, a bias eps rotates it by about -(span/2) eps x
    # alpha. Undo that with the current bias estimate, and account for
    # the residual through the measurement covariance below instead of
    # the mapping, so the bias states are pulled only through their
    # accumulated attitude effect and not through a per-interval
    # channel that is indistinguishable from tilt.
    span = pair.t_stop - pair.t_start
    if config.bias_in_measurement:
        alpha = pair.alpha + 0.5 * span * np.cross(state.x[3:], pair.alpha)
    else:
        alpha = pair.alpha
    y = np.einsum("nij,j->ni", dcm_from_quat(chi_q), alpha)

    y_mean = w @ y
    dy = y - y_mean
    dx = pts - state.x
    # Innovation about the mean-attitude prediction, not the weighted
    # point average: averaging rotated copies of alpha shrinks its
    # component orthogonal to the spread axis, and with a deliberately
    # held-open attitude variance that shrink would re-enter every
    # epoch as a systematic false innovation. The point cloud still
    # supplies the covariances about its own mean.
    y_mode = dcm_from_quat(state.quat) @ alpha
    r = noise.r_matrix(span, float(np.linalg.norm(pair.alpha)))
    if config.bias_in_measurement:
        # Consider term: remaining bias error delta-eps leaves a
        # 0.5 span (delta-eps x alpha) residual in alpha; map its
        # covariance into the nav frame and treat it as measurement
        # noise.
        lever = 0.5 * span * (dcm_from_quat(state.quat) @ skew(alpha))
        r = r + lever @ state.cov[3:, 3:] @ lever.T
    p_yy = (dy.T * w) @ dy + r_scale * r
    p_xy = (dx.T * w) @ dy

    if np.linalg.cond(p_yy) > config.skip_condition:
        return state, False

    # Innovation underweighting: an innovation far outside the
    # predicted spread means the linearization (and the UT spread) do
    # not yet cover the real error, so trusting the nominal covariance
    # would collapse it around a wrong estimate. Inflating p_yy so the
    # NIS sits at the gate bounds the step and the covariance
    # reduction by the same factor.
    nu = pair.beta - (y_mode if config.mode_innovation else y_mean)
    if config.nis_gate is not None:
        nis = float(nu @ np.linalg.solve(p_yy, nu))
        if nis > config.nis_gate:
            p_yy = p_yy * (nis / config.nis_gate)

    gain = np.linalg.solve(p_yy.T, p_xy.T).T
    x = state.x + gain @ nu
    cov = psd_project(state.cov - gain @ p_yy @ gain.T)
    return FilterState(
        quat=state.quat, x=x, cov=cov, t=state.t, k=state.k,
        null_axis=state.null_axis,
    ), True


def measurement_update(
    state: FilterState,
    pair: ObservationPair,
    noise: NoiseConfig,
    config: UkfConfig = UkfConfig(),
) -> tuple[FilterState, bool]:
    """Fuse one dynamic observation pair. Returns the new state and
    whether the update was applied (ill-conditioned innovations are
    skipped rather than inverted).

    The measurement is applied progressively: update_substeps partial
    updates, each carrying 1/update_substeps of the information
    (noise scaled by update_substeps), with the sigma points and the
    reference quaternion refreshed in between. For a linear model the
    result is identical to a single update; far from the estimate it
    follows the curved posterior instead of overshooting along the
    initial tangent.

    A single pair (alpha, beta) is exactly invariant under rotations
    about C(q) alpha, so one update carries no information along that
    nav-frame axis; the sigma-point algebra still removes variance
    there through second-order terms once the spread is wide. Real
    knowledge along the axis accrues only as the axis itself moves
    between epochs: a fixed error chi about the old axis shows up in
    the next innovation as chi * sin(axis step). The floor below caps
    the per-epoch variance reduction along the current axis at that of
    a scalar measurement of chi with exactly this gain, which keeps
    the covariance honest where the model is blind while letting the
    genuine cross-epoch channel through.
    """
    if np.any(state.x[:3]):
        state = fold_and_reset(state, config)
    span = pair.t_stop - pair.t_start
    alpha = pair.alpha + 0.5 * span * np.cross(state.x[3:], pair.alpha)
    alpha_norm = float(np.linalg.norm(alpha))
    cov_pre = state.cov.copy()
    axis = None
    leak_info = 0.0
    if alpha_norm > 0.0:
        axis = dcm_from_quat(state.quat) @ (alpha / alpha_norm)
        if state.null_axis is not None:
            r = noise.r_matrix(span, float(np.linalg.norm(pair.alpha)))
            lever = 0.5 * span * (dcm_from_quat(state.quat) @ skew(alpha))
            r = r + lever @ state.cov[3:, 3:] @ lever.T
            sigma_r = float(np.sqrt(np.trace(r) / 3.0))
            sin_step = float(np.linalg.norm(np.cross(axis, state.null_axis)))
            leak_info = (sin_step * alpha_norm / sigma_r) ** 2

    steps = max(1, config.update_substeps)
    applied = False
    for _ in range(steps):
        state, ok = _single_update(state, pair, noise, config, float(steps))
        if not ok:
            break
        applied = True
        if np.any(state.x[:3]):
            state = fold_and_reset(state, config)

    if applied and axis is not None:
        if config.null_floor:
            u = np.zeros(6)
            u[:3] = axis
            var_pre = float(u @ cov_pre @ u)
            var_post = float(u @ state.cov @ u)
            if var_pre > 0.0:
                var_floor = 1.0 / (1.0 / var_pre + leak_info)
                if var_post < var_floor:
                    state.cov = state.cov + (var_floor - var_post) * np.outer(
                        u, u
                    )
        state.null_axis = axis
    return state, applied


def fold_and_reset(state: FilterState, config: UkfConfig = UkfConfig()) -> FilterState:
    """Move the mean attitude error into the reference quaternion and
    zero the GRP mean; covariance is left untouched."""
    dq = error_quat_from_grp(state.x[:3], config.grp)
    quat = quat_normalize(quat_multiply(dq, state.quat))
    x = state.x.copy()
    x[:3] = 0.0
    return replace(state, quat=quat, x=x)


@dataclass(frozen=True)
class DynamicEstimate:
    """Per-interval output of the dynamic filter. phase is "init" while
    the filter waits for a usable coarse attitude, then "filter"."""

    k: int
    t: float
    quat: np.ndarray | None
    bias: np.ndarray
    cov: np.ndarray
    phase: str
    updated: bool


def run_dynamic_alignment(
    epochs,
    noise: NoiseConfig,
    pair_mode: str = "partial",
    window_samples: int = 100,
    earth=earth_mod.WGS84,
    config: UkfConfig = UkfConfig(),
    init_fallback_epochs: int = 5,
    rank_tol: float = 1e-9,
    refine_passes: int = 1,
) -> list[DynamicEstimate]:
    """Run the filter over prepared update intervals.

    pair_mode picks the measurement span: "partial" re-anchors a pair
    over a trailing window of window_samples IMU samples, "full" uses
    the whole history each interval. The reference quaternion is seeded
    from the first solvable whole-history static solution; if none
    appears within init_fallback_epochs intervals the filter starts
    from identity and relies on its attitude covariance.

    refine_passes > 0 reprocesses the data that many times (partial
    mode only). A large unknown bias and a large yaw error are nearly
    interchangeable over a smooth trajectory: a yaw offset precessing
    with the observation vector is sustained by a constant body-frame
    bias, so the innovations vanish to first order along that joint
    direction and one sequential pass can stall anywhere on it. The
    stall is broken where the interchange fails at second order. Each
    refinement corrects the gyro stream by the estimated bias, scans
    the stall direction explicitly (whole-history innovation cost of a
    linear error-state sweep per candidate start attitude), smooths
    the winning candidate, and reruns the filter warm from that start.
    Full-span pairs are left unrefined: their model error from any
    remaining bias grows without bound over the span, so the windowed
    scan statistics do not transfer. Reported biases are cumulative
    across passes.
    """
    if refine_passes < 0:
        raise ValueError("refine_passes must be >= 0")
    epochs = list(epochs)
    estimates = _run_alignment_pass(
        epochs, noise, pair_mode, window_samples, earth, config,
        init_fallback_epochs, rank_tol, None,
    )
    if pair_mode != "partial":
        return estimates
    for _ in range(refine_passes):
        if not estimates or estimates[-1].quat is None:
            break
        b_corr = estimates[-1].bias
        cor = [replace(ep, gyro=ep.gyro - b_corr) for ep in epochs]
        start = _refined_start(cor, noise, earth, rank_tol)
        if start is None:
            break
        init_state, bias_step = start
        if bias_step.any():
            b_corr = b_corr + bias_step
            cor = [replace(ep, gyro=ep.gyro - bias_step) for ep in cor]
        refined = _run_alignment_pass(
            cor, noise, pair_mode, window_samples, earth,
            replace(config, mode_innovation=True, null_floor=False),
            init_fallback_epochs, rank_tol, init_state,
        )
        if not refined or refined[-1].quat is None:
            break
        estimates = [replace(est, bias=est.bias + b_corr) for est in refined]
    return estimates


def _chain_snapshots(epochs, earth, rank_tol: float):
    """One chain sweep over bias-corrected intervals. Returns per-epoch
    (body, nav) chain quaternions, one-interval re-anchored pairs
    (None for the first), and the whole-history coarse start attitude
    (None if the pair set is degenerate)."""
    chain = ChainState(earth)
    acc = DavenportAccumulator()
    snaps, pairs = [], []
    prev = None
    for ep in epochs:
        chain.advance(ep)
        pairs.append(
            chain.build_dynamic_pair(prev) if prev is not None else None
        )
        prev = ep.index
        snaps.append((chain.quat_b0.copy(), chain.quat_n0.copy()))
        acc.add_pair(chain.build_full_pair())
    try:
        q0 = acc.solve(rank_tol).quat
    except RankDeficiencyError:
        q0 = None
    return snaps, pairs, q0


_SWEEP_ARW_IN_R = True


def _linear_sweep(epochs, snaps, pairs, q0, noise, p0, smooth: bool):
    """Forward error-state sweep around the base history defined by the
    constant start attitude q0 and the chain snapshots.

    State [attitude error (nav frame); gyro-bias error (body frame)],
    both constant-plus-noise; the measurement line for each pair is the
    first-order response of beta - C alpha. Returns the accumulated
    normalized innovation cost, plus the smoothed start state and
    covariance when smooth is set (one backward pass).
    """
    n = len(epochs)
    quats = [reconstruct_attitude(q0, qb, qn) for qb, qn in snaps]
    x = np.zeros(6)
    p = p0.copy()
    cost = 0.0
    if smooth:
        xs_f, ps_f, xs_p, ps_p, fs = [x.copy()], [p.copy()], [], [], []
    for k in range(1, n):
        ep = epochs[k]
        dt = ep.t1 - ep.t0
        f = np.eye(6)
        f[:3, 3:] = -dcm_from_quat(quats[k - 1]) * dt
        x = f @ x
        p = f @ p @ f.T
        p[:3, :3] += noise.gyro_arw**2 * dt * np.eye(3)
        p[3:, 3:] += noise.gyro_rrw**2 * dt * np.eye(3)
        if smooth:
            xs_p.append(x.copy())
            ps_p.append(p.copy())
            fs.append(f)
        pair = pairs[k]
        span = pair.t_stop - pair.t_start
        alpha = pair.alpha
        ck = dcm_from_quat(quats[k])
        ca = ck @ alpha
        h = np.zeros((3, 6))
        h[:, :3] = -skew(ca)
        h[:, 3:] = -0.5 * span * ck @ skew(alpha)
        rvar = float(
            np.trace(noise.r_matrix(span, float(np.linalg.norm(alpha)))) / 3.0
        )
        if _SWEEP_ARW_IN_R:
            rvar += float(noise.gyro_arw**2 * span / 3.0 * (alpha @ alpha))
        nu = pair.beta - ca - h @ x
        s = h @ p @ h.T + rvar * np.eye(3)
        sol = np.linalg.solve(s, np.column_stack([nu, h @ p]))
        cost += float(nu @ sol[:, 0])
        gain = sol[:, 1:].T
        x = x + gain @ nu
        p = p - gain @ s @ gain.T
        p = 0.5 * (p + p.T)
        if smooth:
            xs_f.append(x.copy())
            ps_f.append(p.copy())
    if not smooth:
        return cost, None, None
    xs, ps = xs_f[-1].copy(), ps_f[-1].copy()
    for k in range(n - 2, -1, -1):
        g = np.linalg.solve(ps_p[k].T, (ps_f[k] @ fs[k].T).T).T
        xs = xs_f[k] + g @ (xs - xs_p[k])
        ps = ps_f[k] + g @ (ps - ps_p[k]) @ g.T
    return cost, xs, 0.5 * (ps + ps.T)


def _refined_start(epochs, noise: NoiseConfig, earth, rank_tol: float):
    """Construct the warm-start state for a refinement pass.

    Scans candidate start attitudes along the one near-blind direction
    (rotation about the initial observation vector), scoring each by
    the whole-history innovation cost of a linear sweep; the sweep
    itself absorbs everything the data constrains to first order, so
    the cost profile exposes exactly the second-order information that
    separates the stall family. The winning candidate is smoothed and
    returned as (FilterState, bias correction), with the start
    attitude variance along the scanned direction floored at the
    scan's own curvature estimate. Returns None when the history is
    too short or degenerate to refine.
    """
    if len(epochs) < 3:
        return None
    snaps, pairs, q0 = _chain_snapshots(epochs, earth, rank_tol)
    if q0 is None or pairs[1] is None:
        return None
    alpha1 = pairs[1].alpha
    norm1 = float(np.linalg.norm(alpha1))
    if norm1 <= 0.0:
        return None
    axis = dcm_from_quat(q0) @ (alpha1 / norm1)
    tilt0 = min(noise.init_tilt_std, np.radians(3.0))
    yaw0 = min(noise.init_yaw_std, np.radians(8.0))
    bias0 = max(0.02 * noise.init_bias_std, np.radians(0.02))
    p0 = np.diag([tilt0**2, tilt0**2, yaw0**2, bias0**2, bias0**2, bias0**2])

    def cost_at(chi: float) -> float:
        q0c = quat_normalize(
            quat_multiply(quat_from_rotvec(chi * axis), q0)
        )
        c, _, _ = _linear_sweep(epochs, snaps, pairs, q0c, noise, p0, False)
        return c

    # Coarse-to-fine 1-d search with re-centering while the minimum
    # sits on the window edge.
    center, half, step = 0.0, np.radians(12.0), np.radians(1.5)
    best_chi, best_cost = 0.0, np.inf
    sigma_chi = yaw0
    for stage in range(2):
        for _ in range(3):
            grid = np.arange(center - half, center + half + 0.5 * step, step)
            costs = np.array([cost_at(c) for c in grid])
            j = int(np.argmin(costs))
            center = float(grid[j])
            if 0 < j < len(grid) - 1:
                break
        if 0 < j < len(grid) - 1:
            c0, c1, c2 = costs[j - 1], costs[j], costs[j + 1]
            denom = c0 - 2.0 * c1 + c2
            if denom > 0.0:
                center += 0.5 * (c0 - c2) / denom * step
                sigma_chi = step * np.sqrt(2.0 / denom)
        if costs[j] < best_cost:
            best_cost, best_chi = float(costs[j]), center
        half, step = 2.0 * step, 0.4 * step
        center = best_chi
    chi = best_chi
    q0c = quat_normalize(quat_multiply(quat_from_rotvec(chi * axis), q0))
    # Smoothing sweep for tilt and bias around the winning candidate.
    # The sweep is free along the scanned direction at first order, so
    # left open it would slide away absorbing whatever linearization
    # junk the noise model underestimates; lock that direction hard
    # (the scan already chose the value) and refine the rest.
    sigma_chi = float(np.clip(sigma_chi, np.radians(0.5), yaw0))
    p0s = np.zeros((6, 6))
    p0s[:3, :3] = tilt0**2 * (np.eye(3) - np.outer(axis, axis))
    p0s[:3, :3] += np.radians(0.02) ** 2 * np.outer(axis, axis)
    p0s[3:, 3:] = bias0**2 * np.eye(3)
    _, x_s, p_s = _linear_sweep(epochs, snaps, pairs, q0c, noise, p0s, True)
    quat0 = quat_normalize(
        quat_multiply(quat_from_rotvec(x_s[:3]), q0c)
    )
    bias_step = x_s[3:].copy()
    cov = np.zeros((6, 6))
    cov[:3, :3] = p_s[:3, :3]
    cov[3:, 3:] = p_s[3:, 3:]
    u = np.zeros(6)
    u[:3] = axis
    var_along = float(u @ cov @ u)
    if var_along < sigma_chi**2:
        cov += (sigma_chi**2 - var_along) * np.outer(u, u)
    cov[:3, :3] += np.radians(0.1) ** 2 * np.eye(3)
    cov[3:, 3:] += np.radians(2e-3) ** 2 * np.eye(3)
    state = FilterState(
        quat=quat0, x=np.zeros(6), cov=psd_project(cov),
        t=epochs[0].t0, k=0,
    )
    return state, bias_step


def _run_alignment_pass(
    epochs,
    noise: NoiseConfig,
    pair_mode: str,
    window_samples: int,
    earth,
    config: UkfConfig,
    init_fallback_epochs: int,
    rank_tol: float,
    init_state: FilterState | None = None,
) -> list[DynamicEstimate]:
    if pair_mode not in ("full", "partial"):
        raise ValueError(f"unknown pair_mode {pair_mode!r}")
    estimates: list[DynamicEstimate] = []
    state: FilterState | None = init_state
    chain: ChainState | None = None
    acc = DavenportAccumulator()
    window_epochs = 1
    p0 = noise.p0_matrix()

    for epoch in epochs:
        if chain is None:
            r = len(epoch.time) - 1
            window_epochs = max(1, round(window_samples / r))
            retention = None if pair_mode == "full" else max(window_epochs, 1)
            chain = ChainState(earth, retention=retention)
        q_b0_prev = chain.quat_b0
        q_n0_prev = chain.quat_n0
        t_prev = chain.time if chain.time is not None else epoch.t0
        chain.advance(epoch)
        dq_b = quat_multiply(quat_conj(q_b0_prev), chain.quat_b0)
        dq_n = quat_multiply(quat_conj(q_n0_prev), chain.quat_n0)
        dt = chain.time - t_prev

        if state is None:
            acc.add_pair(chain.build_full_pair())
            try:
                sol = acc.solve(rank_tol)
            except RankDeficiencyError:
                if chain.k >= init_fallback_epochs:
                    state = FilterState(
                        quat=quat_identity(), x=np.zeros(6), cov=p0.copy(),
                        t=chain.time, k=chain.k,
                    )
                    estimates.append(DynamicEstimate(
                        k=chain.k, t=chain.time, quat=state.quat.copy(),
                        bias=state.bias, cov=state.cov.copy(),
                        phase="init", updated=False,
                    ))
                else:
                    estimates.append(DynamicEstimate(
                        k=chain.k, t=chain.time, quat=None,
                        bias=np.zeros(3), cov=p0.copy(),
                        phase="init", updated=False,
                    ))
            else:
                quat = reconstruct_attitude(sol.quat, chain.quat_b0, chain.quat_n0)
                state = FilterState(
                    quat=quat, x=np.zeros(6), cov=p0.copy(),
                    t=chain.time, k=chain.k,
                )
                estimates.append(DynamicEstimate(
                    k=chain.k, t=chain.time, quat=quat.copy(),
                    bias=state.bias, cov=state.cov.copy(),
                    phase="init", updated=False,
                ))
            continue

        state = time_update(state, dq_b, dq_n, dt, noise, config)
        m = 0 if pair_mode == "full" else max(0, chain.k - window_epochs)
        pair = chain.build_dynamic_pair(m)
        state, updated = measurement_update(state, pair, noise, config)
        state = fold_and_reset(state, config)
        estimates.append(DynamicEstimate(
            k=chain.k, t=chain.time, quat=state.quat.copy(),
            bias=state.bias, cov=state.cov.copy(),
            phase="filter", updated=updated,
        ))
    return estimates
