"""Accelerated randomized dual coordinate ascent.

The iterates are kept in the change-of-variables form ``v = theta^2 u_hat + z``
so that each iteration touches a single column of ``S``; the products
``S z`` and ``S u_hat`` are maintained by rank-one updates.  The primal
output is the ``1/theta_k``-weighted average of ``x*(v^k)`` over
``k = K0..K`` where ``K0`` is read off geometrically spaced checkpoints of
the running sums.

With ``mode="fixed"`` theta stays at ``1/n_hat``, ``u_hat`` stays zero and
the method is plain randomized dual coordinate ascent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .core import ACCELERATED, FIXED, RngStream, ThetaSchedule
from .dual import DualModel, primal_from_dual
from .trace import Tracer

STEP_MULT = {"paper": 2.0, "standard": 1.0}
DEFAULT_NU = 1.1


class NumericAbort(RuntimeError):
    """A non-finite value appeared in the iterates."""

    def __init__(self, k: int, where: str = "iterate"):
        super().__init__(f"non-finite {where} at iteration {k}")
        self.k = k


def checkpoint_base(nu: float, n_hat: int) -> int:
    """``c = ceil(nu (1 + 1/n_hat))``; must be at least 2."""
    c = math.ceil(nu * (1.0 + 1.0 / n_hat))
    if c < 2:
        raise ValueError(f"nu={nu} gives checkpoint base {c}; need nu (1 + 1/n_hat) > 1")
    return c


def checkpoint_k0(K: int, c: int) -> int:
    """``K0 = c^p`` with ``c^(p+1) <= K < c^(p+2)``, and 1 when ``K < c^2``."""
    k0 = 1
    while k0 * c * c <= K:
        k0 *= c
    return k0


def k0_upper_bound(K: int, nu: float, n_hat: int) -> int:
    """Largest admissible explicit start index of the average."""
    return math.floor(K / (nu * (1.0 + 1.0 / n_hat)) + 1.0)


@dataclass
class AveragingAccumulator:
    """Running sums of ``x*(v^k)/theta_k`` and ``1/theta_k``.

    ``checkpoints`` maps an index ``k`` to the sums *before* iterate ``k``
    was added, so that ``sums(now) - checkpoints[K0]`` covers ``k >= K0``.
    """

    sum_x: np.ndarray
    sum_inv_theta: np.ndarray = field(default_factory=lambda: np.zeros(2))
    checkpoints: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return float(self.sum_inv_theta[0])

    def snapshot(self, k: int):
        self.checkpoints[k] = (self.sum_x.copy(), float(self.sum_inv_theta[0]))

    def average(self, k0: int) -> np.ndarray:
        sx, st = self.checkpoints[k0]
        return (self.sum_x - sx) / (self.sum_inv_theta[0] - st)


@dataclass
class EngineState:
    z: np.ndarray
    u_hat: np.ndarray
    s_z: np.ndarray
    s_u_hat: np.ndarray
    theta: float
    k: int
    mode: str
    step_variant: str
    avg: AveragingAccumulator
    rng: RngStream
    x_last: np.ndarray
    nu: float = DEFAULT_NU
    k0: Optional[int] = None
    theta_prev: float = math.nan

    @property
    def n_hat(self) -> int:
        return self.z.shape[0]

    @property
    def schedule(self) -> ThetaSchedule:
        return ThetaSchedule(self.theta, self.k, self.n_hat, self.mode)

    @property
    def theta_out(self) -> float:
        """Theta used by the most recent iteration (``theta_K``)."""
        return self.theta if self.k == 0 else self.theta_prev

    def u(self) -> np.ndarray:
        """Current dual point ``theta_K^2 u_hat + z``."""
        th = self.theta_out
        return th * th * self.u_hat + self.z

    def s_u(self) -> np.ndarray:
        th = self.theta_out
        return th * th * self.s_u_hat + self.s_z


@dataclass
class SolveReport:
    u_final: np.ndarray
    x_avg: np.ndarray
    x_last: np.ndarray
    K0_used: int
    K: int
    trace: list = field(default_factory=list)
    trace_last: list = field(default_factory=list)
    x_u: Optional[np.ndarray] = None
    status: str = "ok"
    state: Optional[EngineState] = field(default=None, repr=False)
    outer: list = field(default_factory=list)


def init(model: DualModel, u0=None, mode: str = ACCELERATED, step_variant: str = "paper",
         rng: RngStream | int = 0, nu: float = DEFAULT_NU, k0: int | None = None) -> EngineState:
    """Set up ``z = u0``, ``u_hat = 0``, ``theta_0 = 1/n_hat``.

    Coordinates of ``u0`` whose term has a bounded domain are clipped into
    it; a negative inequality multiplier is an error.
    """
    if mode not in (ACCELERATED, FIXED):
        raise ValueError(f"unknown mode {mode!r}")
    if step_variant not in STEP_MULT:
        raise ValueError(f"unknown step variant {step_variant!r}")
    n_hat, t = model.ST.shape
    checkpoint_base(nu, n_hat)
    if k0 is not None and k0 < 0:
        raise ValueError("K0 must be non-negative")
    if u0 is None:
        z = np.zeros(n_hat)
        s_z = np.zeros(t)
    else:
        z = np.array(u0, dtype=float).ravel()
        if z.shape != (n_hat,):
            raise ValueError(f"u0 has length {z.size}, expected {n_hat}")
        if not np.all(np.isfinite(z)):
            raise ValueError("u0 has non-finite entries")
        if np.any(z[model.codes == 1] < 0):
            raise ValueError("u0 has a negative inequality multiplier")
        z = model.project(z)
        s_z = model.S_mul(z) if np.any(z) else np.zeros(t)
    if not isinstance(rng, RngStream):
        rng = RngStream(rng)
    x0 = primal_from_dual(model, s_z)
    return EngineState(z=z, u_hat=np.zeros(n_hat), s_z=s_z, s_u_hat=np.zeros(t),
                       theta=1.0 / n_hat, k=0, mode=mode, step_variant=step_variant,
                       avg=AveragingAccumulator(np.zeros(t)), rng=rng, x_last=x0,
                       nu=nu, k0=k0)


def _run_block(state: EngineState, model: DualModel, count: int):
    idx = state.rng.integers(state.n_hat, count)
    theta, bad = _kernels.ardca_block(
        model.ST, model.p_vec, model.codes, model.params, model.scales, model.L,
        model.reg.code, model.reg.mu, model.reg.sigma,
        state.z, state.u_hat, state.s_z, state.s_u_hat, state.x_last,
        state.avg.sum_x, state.avg.sum_inv_theta, state.theta,
        state.mode == ACCELERATED, STEP_MULT[state.step_variant], idx)
    done = count if bad < 0 else bad
    state.k += done
    if bad >= 0:
        raise NumericAbort(state.k)
    state.theta = theta
    state.theta_prev = float(state.avg.sum_inv_theta[1])


def is_checkpoint(k: int, c: int, k0: int | None) -> bool:
    if k == k0:
        return True
    if k < 1:
        return False
    while k % c == 0:
        k //= c
    return k == 1


def _next_checkpoint(k: int, c: int, k0: int | None) -> int:
    """Smallest checkpoint index strictly greater than ``k``."""
    nxt = 1
    while nxt <= k:
        nxt *= c
    if k0 is not None and k < k0 < nxt:
        return k0
    return nxt


def advance(state: EngineState, model: DualModel, count: int, *, tracer: Tracer | None = None,
            iter_offset: int = 0) -> None:
    """Perform ``count`` iterations, snapshotting the averaging sums at
    checkpoints and measuring at pass boundaries (every ``n_hat`` global
    iterations, counted from ``iter_offset``)."""
    n_hat = state.n_hat
    c = checkpoint_base(state.nu, n_hat)
    end = state.k + count
    while state.k < end:
        if is_checkpoint(state.k, c, state.k0):
            state.avg.snapshot(state.k)
        stop = min(end, _next_checkpoint(state.k, c, state.k0))
        if tracer is not None:
            g = iter_offset + state.k
            stop = min(stop, state.k + (n_hat - g % n_hat))
        _run_block(state, model, stop - state.k)
        if tracer is not None and (iter_offset + state.k) % n_hat == 0:
            tracer.record((iter_offset + state.k) / n_hat, averaged_primal(state)[0],
                          state.x_last, state.u())


def step(state: EngineState, model: DualModel) -> EngineState:
    """One iteration of the method."""
    advance(state, model, 1)
    return state


def averaged_primal(state: EngineState, K: int | None = None):
    """``(x_hat, K0)`` after iterations ``0..K`` (``K = state.k - 1``).

    An explicit ``K0`` larger than ``K`` falls back to the checkpoint rule;
    before the first iteration the last primal is returned.
    """
    K = state.k - 1 if K is None else K
    if K < 1:
        return state.x_last.copy(), 0
    if state.k0 is not None and state.k0 <= K:
        k0 = state.k0
    else:
        k0 = checkpoint_k0(K, checkpoint_base(state.nu, state.n_hat))
    return state.avg.average(k0), k0


def run(state: EngineState, model: DualModel, K: int, *, tracer: Tracer | None = None,
        iter_offset: int = 0, initial_record: bool = True) -> SolveReport:
    """Run iterations ``k = state.k .. K`` and assemble the report.

    ``K0`` follows the checkpoint rule unless the state carries an explicit
    value, which must satisfy ``K0 <= floor(K / (nu (1 + 1/n_hat)) + 1)``.
    """
    if K < 0:
        raise ValueError("iteration budget K must be non-negative")
    if state.k0 is not None and state.k0 > k0_upper_bound(K, state.nu, state.n_hat):
        raise ValueError(f"K0={state.k0} exceeds the admissible bound "
                         f"{k0_upper_bound(K, state.nu, state.n_hat)} for K={K}")
    if tracer is not None and initial_record and state.k == 0 and iter_offset == 0:
        tracer.record(0.0, state.x_last, state.x_last, state.u())
    status = "ok"
    try:
        advance(state, model, K + 1 - state.k, tracer=tracer, iter_offset=iter_offset)
    except NumericAbort as exc:
        status = f"abort:{exc.k}"
        if tracer is not None:
            tracer.mark_status(status)
        raise
    x_avg, k0 = averaged_primal(state, K)
    u = state.u()
    return SolveReport(u_final=u, x_avg=x_avg, x_last=state.x_last.copy(), K0_used=k0, K=K,
                       trace=tracer.records if tracer else [],
                       trace_last=tracer.records_last if tracer else [],
                       x_u=primal_from_dual(model, model.S_mul(u)), status=status, state=state)


def solve(model: DualModel, K: int, u0=None, *, mode: str = ACCELERATED,
          step_variant: str = "paper", rng: RngStream | int = 0, nu: float = DEFAULT_NU,
          k0: int | None = None, tracer: Tracer | None = None) -> SolveReport:
    """Convenience wrapper: :func:`init` followed by :func:`run`."""
    state = init(model, u0, mode=mode, step_variant=step_variant, rng=rng, nu=nu, k0=k0)
    return run(state, model, K, tracer=tracer)
