"""Comparison solvers.

* :func:`rdca_run` -- the coordinate engine with theta frozen at ``1/n_hat``.
* :func:`dga_run` -- proximal gradient on the dual with step ``1/L``, uniform
  primal average.
* :func:`adfga_run` -- accelerated proximal gradient on the dual (theta
  sequence started at 1) with the same ``1/theta_k`` weighted average and
  checkpoint rule as the coordinate method.

Each full-gradient iteration counts as one pass.
"""

from __future__ import annotations

import math

import numpy as np

from . import engine, prox
from .core import FIXED, RngStream, theta_next
from .dual import DualModel, global_L, primal_from_dual
from .engine import (DEFAULT_NU, NumericAbort, SolveReport, checkpoint_base, checkpoint_k0,
                     is_checkpoint)
from .trace import Tracer


def rdca_run(model: DualModel, u0, K: int, rng: RngStream | int = 0,
             step_variant: str = "paper", tracer: Tracer | None = None) -> SolveReport:
    """Non-accelerated randomized dual coordinate ascent.

    ``x_last`` is the primal estimate of record; ``x_avg`` is the uniform
    average of ``x*(u^k)`` over ``k = 0..K``, kept for diagnostics.
    """
    state = engine.init(model, u0, mode=FIXED, step_variant=step_variant, rng=rng, k0=0)
    return engine.run(state, model, K, tracer=tracer)


def _prox_step(model: DualModel, z, grad, tau):
    """Separable prox of ``h`` after a gradient step of length ``tau``."""
    return prox.terms_prox(model.codes, model.params, model.scales, z - tau * grad, tau)


def _grad_at(model: DualModel, u):
    x = primal_from_dual(model, model.S_mul(u))
    return x, -model.ST_mul(x) - model.p_vec


def _check(u, k):
    if not np.all(np.isfinite(u)):
        raise NumericAbort(k)


def dga_run(model: DualModel, u0, K: int, L_glob: float | None = None,
            tracer: Tracer | None = None) -> SolveReport:
    """``K`` proximal gradient steps with step ``1/L``.

    ``x_avg`` is the uniform mean of ``x*(u^k)``, ``k = 0..K``.
    """
    if K < 0:
        raise ValueError("K must be non-negative")
    L = global_L(model) if L_glob is None else L_glob
    u = model.project(np.zeros(model.n_hat) if u0 is None else u0)
    x, g = _grad_at(model, u)
    sum_x = x.copy()
    if tracer is not None:
        tracer.record(0.0, x, x, u)
    for k in range(K):
        u = _prox_step(model, u, g, 1.0 / L) if L > 0 else u
        _check(u, k)
        x, g = _grad_at(model, u)
        sum_x += x
        if tracer is not None:
            tracer.record(k + 1, sum_x / (k + 2), x, u)
    return SolveReport(u_final=u, x_avg=sum_x / (K + 1), x_last=x, K0_used=0, K=K,
                       trace=tracer.records if tracer else [],
                       trace_last=tracer.records_last if tracer else [],
                       x_u=x)


def adfga_run(model: DualModel, u0, K: int, k0: int | None = None, nu: float = DEFAULT_NU,
              L_glob: float | None = None, tracer: Tracer | None = None) -> SolveReport:
    """Accelerated proximal gradient on the dual.

    With ``v^k = theta_k z^k + (1 - theta_k) u^k`` each step sets
    ``z^{k+1} = prox(z^k - grad d(v^k) / (theta_k L))`` and
    ``u^{k+1} = theta_k z^{k+1} + (1 - theta_k) u^k``; ``theta_0 = 1``.
    After ``K`` steps ``x_avg`` averages ``x*(v^k)/theta_k`` over
    ``k = K0..K`` (``K0`` by the checkpoint rule with a single block).
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    L = global_L(model) if L_glob is None else L_glob
    c = checkpoint_base(nu, 1)
    u = model.project(np.zeros(model.n_hat) if u0 is None else u0)
    z = u.copy()
    theta = 1.0
    t = model.t
    sum_x, sum_w = np.zeros(t), 0.0
    snaps = {}
    x = primal_from_dual(model, model.S_mul(u))
    if tracer is not None:
        tracer.record(0.0, x, x, u)

    def x_hat(Kc):
        kk = k0 if (k0 is not None and k0 <= Kc) else checkpoint_k0(Kc, c)
        sx, sw = snaps[kk]
        return (sum_x - sx) / (sum_w - sw), kk

    for k in range(K + 1):
        if is_checkpoint(k, c, k0):
            snaps[k] = (sum_x.copy(), sum_w)
        v = theta * z + (1.0 - theta) * u
        x, g = _grad_at(model, v)
        sum_x += x / theta
        sum_w += 1.0 / theta
        if tracer is not None and k >= 1:
            tracer.record(k, x_hat(k)[0], x, u)
        if k == K:
            break
        tau = 1.0 / (theta * L) if L > 0 else math.inf
        z_new = _prox_step(model, z, g, tau) if L > 0 else z
        _check(z_new, k)
        z = z_new
        u = theta * z + (1.0 - theta) * u
        theta = theta_next(theta)
    xa, kk = x_hat(K)
    return SolveReport(u_final=u, x_avg=xa, x_last=x, K0_used=kk, K=K,
                       trace=tracer.records if tracer else [],
                       trace_last=tracer.records_last if tracer else [],
                       x_u=primal_from_dual(model, model.S_mul(u)))
