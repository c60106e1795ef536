"""Shared builders and independent reference implementations for the tests."""

from __future__ import annotations

import numpy as np

from ardca.core import RngStream, theta_next
from ardca.dual import ProblemSpec, build_dual
from ardca.prox import Loss, Regularizer, loss_conj_prox

# one "PASS/FAIL criterion N: ..." line per acceptance criterion, echoed by
# the terminal summary hook in conftest.py
ACCEPTANCE_LINES: list[str] = []


def random_spec(gen: np.random.Generator, t: int, n: int, p: int = 0, m: int = 0,
                reg_kind: str = "l2", loss_kinds=("squared", "absolute", "hinge"),
                mu: float | None = None) -> ProblemSpec:
    """Random problem with a mix of loss kinds and optional constraint rows."""
    A = gen.standard_normal((t, n))
    mu = float(gen.uniform(0.3, 2.0)) if mu is None else mu
    sigma = float(gen.uniform(0.05, 0.5)) if reg_kind == "l1_plus_l2" else 0.0
    losses = []
    for _ in range(n):
        kind = loss_kinds[int(gen.integers(len(loss_kinds)))]
        losses.append(Loss(kind, float(gen.standard_normal()),
                           float(gen.choice([-1.0, 1.0])) if kind == "hinge" else 1.0))
    B = gen.standard_normal((p, t))
    b = gen.standard_normal(p)
    J = gen.standard_normal((m, t))
    q = gen.standard_normal(m)
    return ProblemSpec(A, Regularizer(reg_kind, mu, sigma), losses, B, b, J, q)


def lad_spec(gen: np.random.Generator, t: int, n: int, mu: float = 0.1) -> ProblemSpec:
    """``mu/2 ||x||^2 + (1/n) ||A^T x - b||_1`` with unit-norm columns."""
    A = gen.uniform(size=(t, n))
    A /= np.linalg.norm(A, axis=0)
    b = A.T @ gen.standard_normal(t) + 0.1 * gen.standard_normal(n)
    return ProblemSpec(A, Regularizer("l2", mu), [Loss("absolute", bi) for bi in b])


def interior_point(model, gen: np.random.Generator) -> np.ndarray:
    """A point strictly inside the domain of every separable term."""
    lo, hi = model.lower, model.upper
    u = gen.standard_normal(model.n_hat)
    fin = np.isfinite(lo) & np.isfinite(hi)
    u[fin] = lo[fin] + (hi[fin] - lo[fin]) * gen.uniform(0.2, 0.8, fin.sum())
    half = np.isfinite(lo) & ~np.isfinite(hi)
    u[half] = lo[half] + gen.uniform(0.2, 2.0, half.sum())
    return u


def shadow_ardca(model, u0, steps: int, seed: int, step_mult: float = 2.0,
                 accelerated: bool = True):
    """Direct form of the accelerated method with full-vector operations:

    ``v = theta z + (1 - theta) u``; prox step on ``z_i`` with step
    ``1 / (mult n_hat theta L_i)`` using ``grad_i d(v)``;
    ``u+ = v + n_hat theta (z+ - z)``.

    Returns the sequences ``v^k`` (k = 0..steps) and ``u^k`` (k = 1..steps).
    Written from scratch, independently of the engine and its kernels.
    """
    n_hat = model.n_hat
    rng = RngStream(seed)
    u = np.array(u0, dtype=float)
    z = u.copy()
    theta = 1.0 / n_hat
    S = model.ST.T
    mu, sigma = model.reg.mu, model.reg.sigma
    vs, us = [], []
    for _ in range(steps):
        v = theta * z + (1.0 - theta) * u
        vs.append(v.copy())
        i = int(rng.integers(n_hat, 1)[0])
        w = -(S @ v)
        w = np.sign(w) * np.maximum(np.abs(w) - sigma, 0.0)
        x = w / mu
        g = -S[:, i] @ x - model.p_vec[i]
        tau = 1.0 / (step_mult * n_hat * theta * model.L[i])
        znew = z.copy()
        znew[i] = _term_prox(model.terms[i], z[i] - tau * g, tau)
        u = v + n_hat * theta * (znew - z)
        z = znew
        us.append(u.copy())
        if accelerated:
            theta = theta_next(theta)
    vs.append(theta * z + (1.0 - theta) * u)
    return vs, us


def _term_prox(term, v, tau):
    if term.kind == "zero":
        return v
    if term.kind == "nonneg":
        return max(v, 0.0)
    return float(loss_conj_prox(term.loss, v, tau * term.scale))


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def window(x, y, lo: float, hi: float):
    """Points with ``lo <= y <= hi``."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    keep = (y >= lo) & (y <= hi) & np.isfinite(y)
    return x[keep], y[keep]


def model_of(spec):
    return build_dual(spec)
