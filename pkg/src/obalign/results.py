"""Error metrics and per-method summaries for alignment runs.

Angle errors are per-axis Euler differences (pitch, roll, yaw), each
wrapped to (-180, 180] degrees; intervals where a method had no
estimate yet carry NaN. Steady-state statistics cover the trailing
fraction of the run (default the last tenth, at least one interval).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attitude import (
    GrpParams,
    grp_from_error_quat,
    quat_conj,
    quat_multiply,
    wrap_angle,
)
from .attitude import euler_from_quat

__all__ = [
    "MethodRun",
    "SummaryRow",
    "error_series",
    "euler_error",
    "nees_series",
    "steady_slice",
    "summarize",
    "truth_quats_at",
]


@dataclass
class MethodRun:
    """Per-interval outputs of one alignment method, ready for scoring.

    quat entries may be None before the method produced an estimate.
    bias/cov/updated are None for methods that do not estimate them.
    """

    method: str
    t: np.ndarray
    quat: list
    bias: np.ndarray | None = None
    cov: list | None = None
    updated: np.ndarray | None = None


def euler_error(est_quat, true_quat) -> np.ndarray:
    """Wrapped per-axis difference est - truth in radians."""
    return wrap_angle(euler_from_quat(est_quat) - euler_from_quat(true_quat))


def error_series(run: MethodRun, truth_quats) -> np.ndarray:
    """(n, 3) wrapped Euler errors, NaN where no estimate exists."""
    out = np.full((len(run.t), 3), np.nan)
    for i, q in enumerate(run.quat):
        if q is not None:
            out[i] = euler_error(q, truth_quats[i])
    return out


def steady_slice(n: int, frac: float = 0.1) -> slice:
    """Index range of the trailing fraction, never empty for n >= 1."""
    if n < 1:
        return slice(0, 0)
    m = max(1, int(round(frac * n)))
    return slice(n - m, n)


def truth_quats_at(truth, times) -> np.ndarray:
    """Truth quaternions at the given times (nearest truth sample; the
    interval ends fall on exact samples)."""
    idx = np.clip(
        np.rint((np.asarray(times) - truth.time[0]) * truth.rate).astype(int),
        0,
        len(truth.time) - 1,
    )
    return truth.quat[idx]


def nees_series(
    run: MethodRun, truth_quats, true_bias, grp: GrpParams = GrpParams()
) -> np.ndarray:
    """Normalized estimation error squared per interval (6-dof), NaN
    where the run has no covariance or estimate."""
    n = len(run.t)
    out = np.full(n, np.nan)
    if run.cov is None or run.bias is None:
        return out
    true_bias = np.asarray(true_bias, dtype=float)
    if true_bias.ndim == 1:
        true_bias = np.broadcast_to(true_bias, (n, 3))
    for i, q in enumerate(run.quat):
        if q is None or run.cov[i] is None:
            continue
        dq = quat_multiply(truth_quats[i], quat_conj(q))
        if dq[3] < 0.0:
            dq = -dq
        e = np.empty(6)
        e[:3] = grp_from_error_quat(dq, grp)
        e[3:] = true_bias[i] - run.bias[i]
        try:
            out[i] = float(e @ np.linalg.solve(run.cov[i], e))
        except np.linalg.LinAlgError:
            out[i] = float(e @ np.linalg.pinv(run.cov[i]) @ e)
    return out


@dataclass(frozen=True)
class SummaryRow:
    """End-of-run scores for one method. Angles in degrees."""

    method: str
    n_epochs: int
    n_solved: int
    final_err_deg: tuple
    steady_mean_abs_deg: tuple
    steady_max_abs_deg: tuple
    converged: bool
    bias_est: tuple | None
    bias_err: tuple | None

    def csv_fields(self) -> list[str]:
        def fmt(x):
            return format(float(x), ".10g")

        row = [self.method, str(self.n_epochs), str(self.n_solved)]
        row += [fmt(v) for v in self.final_err_deg]
        row += [fmt(v) for v in self.steady_mean_abs_deg]
        row += [fmt(v) for v in self.steady_max_abs_deg]
        row.append("1" if self.converged else "0")
        for tup in (self.bias_est, self.bias_err):
            row += [fmt(v) for v in tup] if tup is not None else ["", "", ""]
        return row


SUMMARY_HEADER = (
    "method,n_epochs,n_solved,"
    "final_pitch_err_deg,final_roll_err_deg,final_yaw_err_deg,"
    "steady_mean_pitch_deg,steady_mean_roll_deg,steady_mean_yaw_deg,"
    "steady_max_pitch_deg,steady_max_roll_deg,steady_max_yaw_deg,"
    "converged,bias_est_x,bias_est_y,bias_est_z,"
    "bias_err_x,bias_err_y,bias_err_z"
)


def summarize(
    run: MethodRun,
    truth_quats,
    true_bias=None,
    steady_frac: float = 0.1,
    yaw_converged_tol: float = np.radians(10.0),
) -> SummaryRow:
    """Score one run. converged means every steady-state interval has an
    estimate and the steady-state mean |yaw error| is under tolerance."""
    err = error_series(run, truth_quats)
    n = len(run.t)
    sl = steady_slice(n, steady_frac)
    steady = err[sl]
    solved = np.array([q is not None for q in run.quat])
    have_all = bool(solved[sl].all()) if n else False
    steady_mean = np.nanmean(np.abs(steady), axis=0) if have_all else np.full(3, np.nan)
    steady_max = np.nanmax(np.abs(steady), axis=0) if have_all else np.full(3, np.nan)
    converged = have_all and steady_mean[2] <= yaw_converged_tol
    final = err[-1] if n else np.full(3, np.nan)

    bias_est = bias_err = None
    if run.bias is not None and n:
        b = run.bias[-1]
        bias_est = tuple(b)
        if true_bias is not None:
            bias_err = tuple(np.asarray(b) - np.asarray(true_bias, dtype=float))

    return SummaryRow(
        method=run.method,
        n_epochs=n,
        n_solved=int(solved.sum()),
        final_err_deg=tuple(np.degrees(final)),
        steady_mean_abs_deg=tuple(np.degrees(steady_mean)),
        steady_max_abs_deg=tuple(np.degrees(steady_max)),
        converged=bool(converged),
        bias_est=bias_est,
        bias_err=bias_err,
    )
