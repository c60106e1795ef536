"""Assembly and evaluation of the Lagrange dual.

For the primal problem

    min_x  f(x) + (1/n) sum_i phi_i(A_i^T x)   s.t.  B x + b = 0,  J x + q <= 0

the dual (in minimization form) is ``D(u) = f*(-S u) - <p, u> + sum_i h_i(u_i)``
with ``S = [A/n, B^T, J^T]``, ``p = [0; b; q]``, ``h_i = phi_i*/n`` on the loss
block, zero on the equality block and the indicator of ``u_i >= 0`` on the
inequality block.  The smooth part ``d(u) = f*(-S u) - <p, u>`` has gradient
``-S^T x*(u) - p`` with ``x*(u) = grad f*(-S u)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import prox
from .prox import Loss, Regularizer, SeparableTerm


class ConfigurationError(ValueError):
    """The problem cannot be turned into a well-posed dual."""


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Primal problem data.

    ``A`` is ``t x n`` with one data point per column; ``B`` (``p x t``) and
    ``J`` (``m x t``) may have zero rows.
    """

    A: np.ndarray
    reg: Regularizer
    losses: Sequence[Loss] = ()
    B: np.ndarray | None = None
    b: np.ndarray | None = None
    J: np.ndarray | None = None
    q: np.ndarray | None = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        t = A.shape[0]
        B, b = _block(self.B, self.b, t, "B", "b")
        J, q = _block(self.J, self.q, t, "J", "q")
        losses = tuple(self.losses)
        if len(losses) != A.shape[1]:
            raise ConfigurationError(
                f"{A.shape[1]} data columns but {len(losses)} losses")
        if A.shape[1] + B.shape[0] + J.shape[0] < 1:
            raise ConfigurationError("the dual has no coordinates")
        for name, val in (("A", A), ("B", B), ("b", b), ("J", J), ("q", q)):
            if not np.all(np.isfinite(val)):
                raise ConfigurationError(f"{name} contains non-finite entries")
        for name, val in (("A", A), ("B", B), ("b", b), ("J", J), ("q", q), ("losses", losses)):
            object.__setattr__(self, name, val)

    @cached_property
    def loss_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Loss codes, offsets and labels as arrays (built once)."""
        return (np.array([l.code for l in self.losses], dtype=np.int64),
                np.array([l.offset for l in self.losses], dtype=float),
                np.array([l.label for l in self.losses], dtype=float))

    @property
    def t(self) -> int:
        return self.A.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def p(self) -> int:
        return self.B.shape[0]

    @property
    def m(self) -> int:
        return self.J.shape[0]

    @property
    def n_hat(self) -> int:
        return self.n + self.p + self.m


def _block(M, v, t, mname, vname):
    if M is None:
        M = np.zeros((0, t))
    M = np.asarray(M, dtype=float).reshape(-1, t) if np.size(M) else np.zeros((0, t))
    if v is None:
        v = np.zeros(M.shape[0])
    v = np.asarray(v, dtype=float).ravel()
    if v.shape[0] != M.shape[0]:
        raise ConfigurationError(f"{mname} has {M.shape[0]} rows but {vname} has {v.shape[0]} entries")
    return M, v


@dataclass(frozen=True, eq=False)
class DualModel:
    """Materialized dual.  ``ST`` holds the columns of ``S`` as rows, so a
    coordinate update reads one contiguous length-``t`` slice."""

    ST: np.ndarray
    p_vec: np.ndarray
    terms: tuple
    codes: np.ndarray
    params: np.ndarray
    scales: np.ndarray
    L: np.ndarray
    reg: Regularizer
    n: int
    p: int
    m: int
    spec: ProblemSpec = field(repr=False)

    @property
    def S(self) -> np.ndarray:
        return self.ST.T

    @property
    def mu(self) -> float:
        return self.reg.mu

    @property
    def t(self) -> int:
        return self.ST.shape[1]

    @property
    def n_hat(self) -> int:
        return self.ST.shape[0]

    @property
    def lower(self) -> np.ndarray:
        return prox.terms_lower(self.codes, self.params)

    @property
    def upper(self) -> np.ndarray:
        return prox.terms_upper(self.codes, self.params)

    def S_mul(self, u) -> np.ndarray:
        """``S u`` (length ``t``)."""
        return np.asarray(u, dtype=float) @ self.ST

    def ST_mul(self, x) -> np.ndarray:
        """``S^T x`` (length ``n_hat``)."""
        return self.ST @ np.asarray(x, dtype=float)

    def in_domain(self, u) -> bool:
        u = np.asarray(u, dtype=float)
        return bool(np.all(u >= self.lower) and np.all(u <= self.upper))

    def project(self, u) -> np.ndarray:
        """Clip ``u`` into the domain of ``h``."""
        return np.clip(np.asarray(u, dtype=float), self.lower, self.upper)


def build_dual(spec: ProblemSpec) -> DualModel:
    n, p, m = spec.n, spec.p, spec.m
    mu = spec.reg.mu
    ST = np.ascontiguousarray(np.vstack([spec.A.T / n if n else np.zeros((0, spec.t)),
                                         spec.B, spec.J]))
    p_vec = np.concatenate([np.zeros(n), spec.b, spec.q])
    terms = tuple([SeparableTerm("loss", loss, 1.0 / n) for loss in spec.losses]
                  + [SeparableTerm("zero")] * p + [SeparableTerm("nonneg")] * m)
    codes, params, scales = prox.encode_terms(terms)
    L = np.einsum("ij,ij->i", ST, ST) / mu
    for j in np.flatnonzero(L == 0):
        term = terms[j]
        if term.bounded:
            continue
        if term.kind == "nonneg" and p_vec[j] <= 0:
            # constant constraint q_j <= 0: the multiplier is pinned at 0
            continue
        raise ConfigurationError(
            f"dual coordinate {j} has zero weight and an unbounded {term.kind} term; "
            "the coordinate step is undefined")
    return DualModel(ST, p_vec, terms, codes, params, scales, L, spec.reg, n, p, m, spec)


def primal_from_dual(model: DualModel, s_v) -> np.ndarray:
    """``x*(v) = grad f*(-s_v)`` where ``s_v = S v``."""
    return prox.reg_conj_grad(model.reg, -np.asarray(s_v, dtype=float))


def coord_grad(model: DualModel, i: int, x_star) -> float:
    return float(-np.dot(model.ST[i], x_star) - model.p_vec[i])


def full_grad(model: DualModel, u) -> np.ndarray:
    x = primal_from_dual(model, model.S_mul(u))
    return -model.ST_mul(x) - model.p_vec


def smooth_value(model: DualModel, u) -> float:
    """``d(u) = f*(-S u) - <p, u>``."""
    u = np.asarray(u, dtype=float)
    return prox.reg_conj_value(model.reg, -model.S_mul(u)) - float(np.dot(model.p_vec, u))


def dual_value(model: DualModel, u) -> float:
    u = np.asarray(u, dtype=float)
    h = prox.terms_value(model.codes, model.params, model.scales, u)
    if math.isinf(h):
        return math.inf
    return smooth_value(model, u) + h


class PowerIterationError(RuntimeError):
    pass


def spectral_norm_sq(ST: np.ndarray, max_iter: int = 1000, rtol: float = 1e-10) -> float:
    """Largest eigenvalue of ``S S^T`` by power iteration.

    The iteration runs on the ``t`` side from the all-ones vector; if that
    vector is orthogonal to the range of ``S`` a fixed non-symmetric start
    is used instead.
    """
    t = ST.shape[1]
    if ST.size == 0 or not np.any(ST):
        return 0.0
    starts = (np.ones(t), np.cos(np.arange(t) + 1.0))
    for x in starts:
        y = ST @ x
        if np.any(y):
            break
    else:
        x = ST[np.argmax(np.einsum("ij,ij->i", ST, ST))].copy()
    x = x / np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iter):
        w = (ST @ x) @ ST
        lam_new = float(np.dot(x, w))
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        x = w / nw
        if abs(lam_new - lam) <= rtol * abs(lam_new):
            return lam_new
        lam = lam_new
    raise PowerIterationError(f"power iteration did not converge in {max_iter} iterations")


def global_L(model: DualModel) -> float:
    """Lipschitz constant ``||S||_2^2 / mu`` of ``grad d``."""
    return spectral_norm_sq(model.ST) / model.mu


def global_L_bound(model: DualModel) -> float:
    """The looser closed-form constant built from the blocks separately:

    ``sqrt(m+1) max(||G||, max_i ||J_i||) sqrt(||G||^2 + sum_i ||J_i||^2) / mu``
    with ``G = [A^T/n, B]``.  Exposed for comparison only.
    """
    spec = model.spec
    G = np.vstack([spec.A.T / max(spec.n, 1), spec.B])
    g = math.sqrt(spectral_norm_sq(G)) if G.size else 0.0
    lg = np.linalg.norm(spec.J, axis=1) if spec.m else np.zeros(0)
    top = max(g, float(lg.max()) if lg.size else 0.0)
    return math.sqrt(spec.m + 1) * top * math.sqrt(g * g + float(np.sum(lg ** 2))) / model.mu


def loss_sum(spec: ProblemSpec, x) -> float:
    """``(1/n) sum_i phi_i(A_i^T x)``."""
    if spec.n == 0:
        return 0.0
    y = spec.A.T @ x
    codes, offs, labs = spec.loss_arrays
    vals = np.where(codes == prox.SQUARED, 0.5 * (y - offs) ** 2,
                    np.where(codes == prox.ABSOLUTE, np.abs(y - offs),
                             np.maximum(0.0, 1.0 - labs * y)))
    return float(np.sum(vals) / spec.n)


def primal_value_and_residuals(spec: ProblemSpec, x):
    """``(F(x), B x + b, max(0, J x + q))``."""
    x = np.asarray(x, dtype=float)
    F = prox.reg_value(spec.reg, x) + loss_sum(spec, x)
    eq = spec.B @ x + spec.b
    ineq = np.maximum(0.0, spec.J @ x + spec.q)
    return F, eq, ineq


def ineq_weights(model: DualModel) -> np.ndarray:
    return model.L[model.n + model.p:]


def violation_metrics(model: DualModel, x) -> tuple[float, float]:
    """Equality residual 2-norm and the weighted dual norm of the
    inequality residual (weights are the inequality-block ``L_j``)."""
    _, eq, ineq = primal_value_and_residuals(model.spec, x)
    return residual_norms(model, eq, ineq)


def residual_norms(model: DualModel, eq, ineq) -> tuple[float, float]:
    """The two violation measures of :func:`violation_metrics` from
    precomputed residuals."""
    w = ineq_weights(model)
    nz = w > 0
    viol = float(np.sqrt(np.sum(ineq[nz] ** 2 / w[nz]))) if ineq.size else 0.0
    return float(np.linalg.norm(eq)), viol
