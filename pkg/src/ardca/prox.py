"""Closed-form conjugates and proximal maps for the supported regularizers
and losses.

Conventions
-----------
Regularizer ``f(x) = (mu/2)||x||^2 + sigma ||x||_1`` (``sigma = 0`` for the
plain ``l2`` kind).  Losses act on a scalar prediction ``y``:

==========  ========================  ===================================
kind        loss ``phi(y)``           conjugate ``phi*(u)``
==========  ========================  ===================================
squared     ``(y - b)^2 / 2``         ``u^2/2 + b u``
absolute    ``|y - b|``               ``b u`` on ``[-1, 1]``
hinge       ``max(0, 1 - l y)``       ``l u`` on ``{u : l u in [-1, 0]}``
==========  ========================  ===================================

Each dual coordinate carries a separable term ``h_i``: a loss conjugate
scaled by ``1/n``, the zero function (equality multipliers) or the
indicator of ``u >= 0`` (inequality multipliers).  Infinite values are
``math.inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

INF = math.inf

# integer codes shared with the compiled kernels
ZERO, NONNEG, SQUARED, ABSOLUTE, HINGE = 0, 1, 2, 3, 4
_LOSS_CODES = {"squared": SQUARED, "absolute": ABSOLUTE, "hinge": HINGE}
L2, L1_PLUS_L2 = 0, 1
_REG_CODES = {"l2": L2, "l1_plus_l2": L1_PLUS_L2}


@dataclass(frozen=True)
class Regularizer:
    kind: str
    mu: float
    sigma: float = 0.0

    def __post_init__(self):
        if self.kind not in _REG_CODES:
            raise ValueError(f"unknown regularizer kind {self.kind!r}")
        if not self.mu > 0:
            raise ValueError("regularizer must be strongly convex (mu > 0)")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.kind == "l2" and self.sigma != 0:
            raise ValueError("l2 regularizer takes no l1 weight")

    @property
    def code(self) -> int:
        return _REG_CODES[self.kind]


@dataclass(frozen=True)
class Loss:
    kind: str
    offset: float = 0.0
    label: float = 1.0

    def __post_init__(self):
        if self.kind not in _LOSS_CODES:
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if self.kind == "hinge" and self.label not in (1.0, -1.0):
            raise ValueError("hinge label must be +1 or -1")

    @property
    def code(self) -> int:
        return _LOSS_CODES[self.kind]

    @property
    def param(self) -> float:
        """The single number the kernels need: label for hinge, else offset."""
        return float(self.label if self.kind == "hinge" else self.offset)

    @property
    def lipschitz(self) -> float:
        """Lipschitz constant M of the loss (infinite for squared)."""
        return INF if self.kind == "squared" else 1.0


@dataclass(frozen=True)
class SeparableTerm:
    kind: str  # "loss", "zero" or "nonneg"
    loss: Optional[Loss] = None
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("loss", "zero", "nonneg"):
            raise ValueError(f"unknown term kind {self.kind!r}")
        if (self.kind == "loss") != (self.loss is not None):
            raise ValueError("loss terms need a Loss, other terms must not carry one")

    @property
    def code(self) -> int:
        if self.kind == "zero":
            return ZERO
        if self.kind == "nonneg":
            return NONNEG
        return self.loss.code

    @property
    def param(self) -> float:
        return self.loss.param if self.loss is not None else 0.0

    @property
    def bounded(self) -> bool:
        """True when the domain of the term is a bounded interval."""
        return self.code in (ABSOLUTE, HINGE)


# --------------------------------------------------------------------------
# regularizer
# --------------------------------------------------------------------------

def _soft(w, s):
    return np.sign(w) * np.maximum(np.abs(w) - s, 0.0)


def reg_value(reg: Regularizer, x) -> float:
    x = np.asarray(x, dtype=float)
    return float(0.5 * reg.mu * np.dot(x, x) + reg.sigma * np.sum(np.abs(x)))


def reg_conj_value(reg: Regularizer, w) -> float:
    w = np.asarray(w, dtype=float)
    r = np.maximum(np.abs(w) - reg.sigma, 0.0)
    return float(np.dot(r, r) / (2.0 * reg.mu))


def reg_conj_grad(reg: Regularizer, w) -> np.ndarray:
    """Gradient of ``f*``: the soft-threshold of ``w`` at ``sigma``, over mu."""
    w = np.asarray(w, dtype=float)
    if reg.kind == "l2":
        return w / reg.mu
    return _soft(w, reg.sigma) / reg.mu


# --------------------------------------------------------------------------
# losses
# --------------------------------------------------------------------------

def conj_domain(loss: Loss) -> tuple[float, float]:
    """Interval on which ``phi*`` is finite."""
    if loss.kind == "squared":
        return -INF, INF
    if loss.kind == "absolute":
        return -1.0, 1.0
    return (-1.0, 0.0) if loss.label > 0 else (0.0, 1.0)


def loss_value(loss: Loss, y):
    y = np.asarray(y, dtype=float)
    if loss.kind == "squared":
        r = 0.5 * (y - loss.offset) ** 2
    elif loss.kind == "absolute":
        r = np.abs(y - loss.offset)
    else:
        r = np.maximum(0.0, 1.0 - loss.label * y)
    return r if r.ndim else float(r)


def loss_conj_value(loss: Loss, u):
    u = np.asarray(u, dtype=float)
    if loss.kind == "squared":
        r = 0.5 * u * u + loss.offset * u
    else:
        lo, hi = conj_domain(loss)
        lin = loss.offset * u if loss.kind == "absolute" else loss.label * u
        r = np.where((u >= lo) & (u <= hi), lin, INF)
    return r if r.ndim else float(r)


def loss_prox(loss: Loss, v, tau: float = 1.0):
    """``argmin_y phi(y) + (y - v)^2 / (2 tau)``."""
    _check_tau(tau)
    v = np.asarray(v, dtype=float)
    b = loss.offset
    if loss.kind == "squared":
        r = (v + tau * b) / (1.0 + tau)
    elif loss.kind == "absolute":
        r = b + _soft(v - b, tau)
    else:
        lab = loss.label
        w = lab * v
        r = lab * np.where(w >= 1.0, w, np.where(w <= 1.0 - tau, w + tau, 1.0))
    return r if r.ndim else float(r)


def loss_conj_prox(loss: Loss, v, tau: float = 1.0):
    """``argmin_u phi*(u) + (u - v)^2 / (2 tau)``."""
    _check_tau(tau)
    v = np.asarray(v, dtype=float)
    if loss.kind == "squared":
        r = (v - tau * loss.offset) / (1.0 + tau)
    else:
        lo, hi = conj_domain(loss)
        lin = loss.offset if loss.kind == "absolute" else loss.label
        r = np.clip(v - tau * lin, lo, hi)
    return r if r.ndim else float(r)


def _check_tau(tau):
    if not tau > 0:
        raise ValueError(f"prox step must be positive, got {tau!r}")


# --------------------------------------------------------------------------
# separable dual terms
# --------------------------------------------------------------------------

def term_value(term: SeparableTerm, u) -> float:
    if term.kind == "zero":
        return 0.0
    if term.kind == "nonneg":
        return 0.0 if u >= 0 else INF
    return term.scale * loss_conj_value(term.loss, u)


def term_prox(term: SeparableTerm, v: float, tau: float) -> float:
    """``argmin_u h(u) + (u - v)^2 / (2 tau)`` for one dual coordinate."""
    _check_tau(tau)
    if term.kind == "zero":
        return float(v)
    if term.kind == "nonneg":
        return max(0.0, float(v))
    return loss_conj_prox(term.loss, v, tau * term.scale)


def encode_terms(terms) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pack a sequence of terms into ``(codes, params, scales)`` arrays."""
    codes = np.array([t.code for t in terms], dtype=np.int64)
    params = np.array([t.param for t in terms], dtype=float)
    scales = np.array([t.scale for t in terms], dtype=float)
    return codes, params, scales


def terms_value(codes, params, scales, u) -> float:
    """Vectorized ``sum_i h_i(u_i)``."""
    u = np.asarray(u, dtype=float)
    total = 0.0
    m = codes == NONNEG
    if np.any(u[m] < 0):
        return INF
    m = codes == SQUARED
    total += np.sum(scales[m] * (0.5 * u[m] ** 2 + params[m] * u[m]))
    m = codes == ABSOLUTE
    if np.any(np.abs(u[m]) > 1.0):
        return INF
    total += np.sum(scales[m] * params[m] * u[m])
    m = codes == HINGE
    lu = params[m] * u[m]
    if np.any((lu < -1.0) | (lu > 0.0)):
        return INF
    total += np.sum(scales[m] * lu)
    return float(total)


def terms_lower(codes, params) -> np.ndarray:
    lo = np.full(codes.shape, -INF)
    lo[codes == NONNEG] = 0.0
    lo[codes == ABSOLUTE] = -1.0
    h = codes == HINGE
    lo[h] = np.where(params[h] > 0, -1.0, 0.0)
    return lo


def terms_upper(codes, params) -> np.ndarray:
    hi = np.full(codes.shape, INF)
    hi[codes == ABSOLUTE] = 1.0
    h = codes == HINGE
    hi[h] = np.where(params[h] > 0, 0.0, 1.0)
    return hi


def terms_prox(codes, params, scales, v, tau) -> np.ndarray:
    """Vectorized :func:`term_prox`; ``tau`` may be a scalar or an array."""
    v = np.asarray(v, dtype=float)
    ts = np.broadcast_to(np.asarray(tau, dtype=float), v.shape) * scales
    out = v.copy()
    m = codes == SQUARED
    out[m] = (v[m] - ts[m] * params[m]) / (1.0 + ts[m])
    m = (codes == ABSOLUTE) | (codes == HINGE)
    out[m] = v[m] - ts[m] * params[m]
    return np.clip(out, terms_lower(codes, params), terms_upper(codes, params))
