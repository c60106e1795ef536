"""Outer loops around the coordinate engine: periodic restarts and the
two-phase warm start for unconstrained empirical risk minimization."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

from . import engine
from .core import ACCELERATED, FIXED, RngStream
from .dual import DualModel, dual_value, primal_from_dual, primal_value_and_residuals
from .engine import DEFAULT_NU, SolveReport
from .trace import Tracer


@dataclass(frozen=True)
class RestartPlan:
    """``N`` runs of ``K + 1`` iterations each.

    ``max_iters`` caps the total iteration count; the run in progress when
    the cap is hit is cut short.  ``N=None`` means "until the cap".  With
    ``growth > 1`` the r-th run (from 0) uses ``round(K growth^r)``
    iterations instead of a fixed period.
    """

    K: int
    N: Optional[int] = 1
    k0: Optional[int] = None
    nu: float = DEFAULT_NU
    step_variant: str = "paper"
    max_iters: Optional[int] = None
    growth: float = 1.0

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("inner budget K must be at least 1")
        if self.N is None and self.max_iters is None:
            raise ValueError("need an outer count N or an iteration cap")
        if self.N is not None and self.N < 1:
            raise ValueError("outer count N must be at least 1")
        if not self.growth >= 1.0:
            raise ValueError("growth must be at least 1")

    def period(self, r: int) -> int:
        return self.K if self.growth == 1.0 else int(round(self.K * self.growth ** r))


def restart_run(model: DualModel, u0, plan: RestartPlan, rng: RngStream | int = 0,
                tracer: Tracer | None = None) -> SolveReport:
    """Restart the accelerated schedule from the latest dual point.

    The reported primal is the averaged point of the last *completed* run,
    i.e. what the outer loop would return if stopped there (the run in
    progress only counts once it finishes).  ``report.outer`` holds one
    measurement per completed run.
    """
    if not isinstance(rng, RngStream):
        rng = RngStream(rng)
    if plan.K < model.n_hat:
        warnings.warn(f"inner budget K={plan.K} is below n_hat={model.n_hat}", RuntimeWarning)
    meter = tracer or Tracer(model, "ardca-restart", timing=False)
    outer = []
    u = u0
    done = 0
    r = 0
    best = None
    while plan.N is None or r < plan.N:
        full = plan.period(r)
        K = full
        if plan.max_iters is not None:
            left = plan.max_iters - done
            if left <= 0:
                break
            K = min(K, left - 1)
        k0 = plan.k0 if K == full else None
        state = engine.init(model, u, mode=ACCELERATED, step_variant=plan.step_variant,
                            rng=rng, nu=plan.nu, k0=k0)
        rep = engine.run(state, model, K, tracer=tracer, iter_offset=done,
                         initial_record=(r == 0))
        done += K + 1
        u = rep.u_final
        r += 1
        if K == full:
            best = rep
            outer.append(meter.measure(meter.solver, done / model.n_hat, rep.x_avg, rep.u_final))
            if tracer is not None:
                tracer.frozen_primal = rep.x_avg
        last = rep
    if best is None:
        best = last
    return SolveReport(u_final=last.u_final, x_avg=best.x_avg, x_last=last.x_last,
                       K0_used=best.K0_used, K=best.K,
                       trace=tracer.records if tracer else [],
                       trace_last=tracer.records_last if tracer else [],
                       x_u=last.x_u, state=last.state, outer=outer)


def kprime_formula(n: int, mu: float, M: float, eps: float, D0_plus_F0: float) -> int:
    """Length of the non-accelerated warm-up phase,

    ``max(0, ceil(n log(min(1/eps, n mu / M^2) (D0 + F0)) - 1))``.

    A non-positive log argument (the starting point is already optimal)
    gives 0 and a :class:`RuntimeWarning`.
    """
    for name, val in (("n", n), ("mu", mu), ("M", M), ("eps", eps)):
        if not val > 0 or math.isinf(val):
            raise ValueError(f"{name} must be positive and finite, got {val!r}")
    arg = min(1.0 / eps, n * mu / (M * M)) * D0_plus_F0
    if not arg > 0:
        warnings.warn("warm-up length undefined for a non-positive log argument; using 0",
                      RuntimeWarning)
        return 0
    return max(0, math.ceil(n * math.log(arg) - 1.0))


@dataclass(frozen=True)
class ErmPlan:
    """Warm-up of ``K_prime`` fixed-theta iterations, then one accelerated run.

    ``K_prime=None`` evaluates :func:`kprime_formula`, which needs ``eps``
    and a finite Lipschitz constant ``M`` (taken from the losses unless
    overridden).
    """

    K: int
    K_prime: Optional[int] = None
    k0: Optional[int] = None
    eps: Optional[float] = None
    M: Optional[float] = None
    nu: float = DEFAULT_NU
    step_variant: str = "paper"

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("accelerated budget K must be at least 1")
        if self.K_prime is not None and self.K_prime < 0:
            raise ValueError("K_prime must be non-negative")


def resolve_kprime(model: DualModel, u0, plan: ErmPlan) -> int:
    if plan.K_prime is not None:
        return plan.K_prime
    if plan.eps is None:
        raise ValueError("automatic K_prime needs eps")
    M = plan.M
    if M is None:
        M = max(loss.lipschitz for loss in model.spec.losses)
        if math.isinf(M):
            raise ValueError("squared loss has no Lipschitz constant; pass M explicitly")
    u0 = model.project(0.0 * model.p_vec if u0 is None else u0)
    x0 = primal_from_dual(model, model.S_mul(u0))
    F0 = primal_value_and_residuals(model.spec, x0)[0]
    return kprime_formula(model.n, model.mu, M, plan.eps, dual_value(model, u0) + F0)


def erm_run(model: DualModel, u0, plan: ErmPlan, rng: RngStream | int = 0,
            tracer: Tracer | None = None) -> SolveReport:
    """Fixed ``theta = 1/n`` warm-up followed by an accelerated run.

    The returned report describes the accelerated phase; ``report.outer``
    holds the warm-up report (absent when ``K_prime = 0``).
    """
    if model.p or model.m:
        raise ValueError("the warm-start schedule applies to unconstrained problems only")
    if not isinstance(rng, RngStream):
        rng = RngStream(rng)
    kp = resolve_kprime(model, u0, plan)
    u = u0
    phase1 = None
    offset = 0
    if kp > 0:
        state = engine.init(model, u0, mode=FIXED, step_variant=plan.step_variant, rng=rng,
                            nu=plan.nu, k0=0)
        phase1 = engine.run(state, model, kp, tracer=tracer)
        u = phase1.u_final
        offset = kp + 1
    state = engine.init(model, u, mode=ACCELERATED, step_variant=plan.step_variant, rng=rng,
                        nu=plan.nu, k0=plan.k0)
    rep = engine.run(state, model, plan.K, tracer=tracer, iter_offset=offset,
                     initial_record=phase1 is None)
    rep.outer = [phase1] if phase1 is not None else []
    return rep
