"""Batch attitude determination from accumulated vector observations.

Finds the quaternion maximizing the weighted alignment gain
sum_i w_i beta_i . C(q) alpha_i over unit observation pairs as the
dominant eigenvector of a symmetric 4x4 matrix built from
B = sum_i w_i beta_i alpha_i^T. With q = [x, y, z, w] and C(q) mapping
body to nav, the quadratic form is q^T K q with

    K = [[B + B^T - tr(B) I,  z],
         [z^T,                tr(B)]],
    z = (B21 - B12, B02 - B20, B10 - B01).

The static alignment methods feed this accumulator once per update
interval with observation pairs that all target the same constant
attitude at the start of the data: the full method uses the pair over
the entire history, the windowed method the pair over a trailing window
(both anchored in the frozen start frames, so they stay commensurable).
The current attitude is reconstructed through the chain identity
C_b^n(t) = Cn0(t)^T C0 Cb0(t).
"""

from __future__ import annotations

import bisect
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import earth as earth_mod
from .attitude import quat_average, quat_conj, quat_multiply, quat_normalize
from .errors import RankDeficiencyError
from .observations import ChainState, EpochInput

__all__ = [
    "DavenportAccumulator",
    "DavenportSolution",
    "StaticAlignment",
    "StaticEstimate",
    "davenport_quat",
    "reconstruct_attitude",
    "run_static_alignment",
]


@dataclass(frozen=True)
class DavenportSolution:
    quat: np.ndarray
    gain: float
    gap: float
    n_pairs: int
    weight_total: float


class DavenportAccumulator:
    """Running sum B = sum_i w_i (beta_i / |beta_i|) (alpha_i / |alpha_i|)^T.

    Pairs with a near-zero side are skipped rather than blowing up the
    normalization; add() reports whether the pair was used.
    """

    def __init__(self, degenerate_tol: float = 1e-9):
        self.b = np.zeros((3, 3))
        self.weight_total = 0.0
        self.n_pairs = 0
        self.n_skipped = 0
        self.degenerate_tol = degenerate_tol

    def add(self, alpha, beta, weight: float = 1.0) -> bool:
        alpha = np.asarray(alpha, dtype=float)
        beta = np.asarray(beta, dtype=float)
        na = np.linalg.norm(alpha)
        nb = np.linalg.norm(beta)
        if weight <= 0.0 or na <= self.degenerate_tol or nb <= self.degenerate_tol:
            self.n_skipped += 1
            return False
        self.b += (weight / (na * nb)) * np.outer(beta, alpha)
        self.weight_total += weight
        self.n_pairs += 1
        return True

    def add_pair(self, pair, weight: float = 1.0) -> bool:
        return self.add(pair.alpha, pair.beta, weight)

    def k_matrix(self) -> np.ndarray:
        b = self.b
        sigma = float(np.trace(b))
        z = np.array(
            [b[2, 1] - b[1, 2], b[0, 2] - b[2, 0], b[1, 0] - b[0, 1]]
        )
        k = np.empty((4, 4))
        k[:3, :3] = b + b.T - sigma * np.eye(3)
        k[:3, 3] = z
        k[3, :3] = z
        k[3, 3] = sigma
        return k

    def solve(self, rank_tol: float = 1e-9) -> DavenportSolution:
        """Dominant eigenpair of K; raises if the optimum is not isolated."""
        if self.n_pairs == 0:
            raise RankDeficiencyError("no usable observation pairs", gap=0.0)
        evals, evecs = np.linalg.eigh(self.k_matrix())
        gain = float(evals[-1])
        gap = float(evals[-1] - evals[-2])
        if gap <= rank_tol * max(1.0, abs(gain)):
            raise RankDeficiencyError(
                f"attitude underdetermined: eigenvalue gap {gap:.3e} "
                f"from {self.n_pairs} pairs",
                gap=gap,
            )
        q = quat_normalize(evecs[:, -1])
        if q[3] < 0.0:
            q = -q
        return DavenportSolution(
            quat=q,
            gain=gain,
            gap=gap,
            n_pairs=self.n_pairs,
            weight_total=self.weight_total,
        )


def davenport_quat(alphas, betas, weights=None, rank_tol: float = 1e-9):
    """One-shot solve from stacked (n, 3) observation arrays."""
    alphas = np.atleast_2d(np.asarray(alphas, dtype=float))
    betas = np.atleast_2d(np.asarray(betas, dtype=float))
    if alphas.shape != betas.shape:
        raise ValueError("alpha and beta stacks must match")
    if weights is None:
        weights = np.ones(len(alphas))
    acc = DavenportAccumulator()
    for a, b, w in zip(alphas, betas, weights):
        acc.add(a, b, w)
    return acc.solve(rank_tol).quat


def reconstruct_attitude(quat0, quat_b0, quat_n0):
    """Current attitude from the constant start attitude and both chains:
    q_b^n(t) = conj(q_n0) * q0 * q_b0."""
    return quat_normalize(
        quat_multiply(quat_multiply(quat_conj(quat_n0), quat0), quat_b0)
    )


@dataclass(frozen=True)
class StaticEstimate:
    """Per-interval output of a static alignment method. quat is None
    while the accumulated pairs do not yet isolate an optimum."""

    k: int
    t: float
    quat0: np.ndarray | None
    quat: np.ndarray | None
    gain: float
    gap: float
    solvable: bool


class StaticAlignment:
    """Sequential static alignment over integrated velocity observations.

    mode "full" adds the whole-history pair each interval; mode
    "partial" adds the pair over a trailing window of window_samples IMU
    samples (converted to whole update intervals, at least one). Both
    accumulate into one persistent eigenvalue problem for the constant
    start attitude. smooth_window > 1 averages that many trailing
    constant-attitude solutions before reconstructing the current
    attitude.
    """

    def __init__(
        self,
        mode: str = "full",
        window_samples: int = 100,
        earth=earth_mod.WGS84,
        smooth_window: int = 1,
        rank_tol: float = 1e-9,
    ):
        if mode not in ("full", "partial"):
            raise ValueError(f"unknown static alignment mode {mode!r}")
        if window_samples < 1:
            raise ValueError("window_samples must be at least 1")
        if smooth_window < 1:
            raise ValueError("smooth_window must be at least 1")
        self.mode = mode
        self.window_samples = window_samples
        self.earth = earth
        self.rank_tol = rank_tol
        self.accumulator = DavenportAccumulator()
        self.estimates: list[StaticEstimate] = []
        self._recent_q0: deque[np.ndarray] = deque(maxlen=smooth_window)
        self._chain: ChainState | None = None
        self._window_epochs = 1
        self._alpha_norms: list[float] = []

    def _pair_weight(self, pair) -> float:
        # Near-zero integrated increments carry no direction; drop any
        # pair whose alpha norm falls below 1% of the running median.
        norm = float(np.linalg.norm(pair.alpha))
        bisect.insort(self._alpha_norms, norm)
        median = self._alpha_norms[len(self._alpha_norms) // 2]
        return 0.0 if norm < 0.01 * median else 1.0

    @property
    def chain(self) -> ChainState:
        if self._chain is None:
            raise RankDeficiencyError("no data processed yet", gap=0.0)
        return self._chain

    def update(self, epoch: EpochInput) -> StaticEstimate:
        if self._chain is None:
            r = len(epoch.time) - 1
            self._window_epochs = max(1, round(self.window_samples / r))
            retention = None if self.mode == "full" else self._window_epochs
            self._chain = ChainState(self.earth, retention=retention)
        ch = self._chain
        ch.advance(epoch)
        if self.mode == "full":
            pair = ch.build_full_pair()
        else:
            pair = ch.build_partial_pair(max(0, ch.k - self._window_epochs))
        self.accumulator.add_pair(pair, weight=self._pair_weight(pair))
        try:
            sol = self.accumulator.solve(self.rank_tol)
        except RankDeficiencyError as exc:
            est = StaticEstimate(
                k=ch.k, t=ch.time, quat0=None, quat=None,
                gain=float("nan"), gap=exc.gap or float("nan"), solvable=False,
            )
        else:
            self._recent_q0.append(sol.quat)
            if len(self._recent_q0) == 1:
                q0 = self._recent_q0[0]
            else:
                q0 = quat_average(np.stack(tuple(self._recent_q0)))
            est = StaticEstimate(
                k=ch.k,
                t=ch.time,
                quat0=q0,
                quat=reconstruct_attitude(q0, ch.quat_b0, ch.quat_n0),
                gain=sol.gain,
                gap=sol.gap,
                solvable=True,
            )
        self.estimates.append(est)
        return est


def run_static_alignment(
    epochs,
    mode: str = "full",
    window_samples: int = 100,
    earth=earth_mod.WGS84,
    smooth_window: int = 1,
    rank_tol: float = 1e-9,
) -> list[StaticEstimate]:
    """Run one static method over prepared update intervals."""
    aln = StaticAlignment(
        mode=mode,
        window_samples=window_samples,
        earth=earth,
        smooth_window=smooth_window,
        rank_tol=rank_tol,
    )
    for epoch in epochs:
        aln.update(epoch)
    return aln.estimates
