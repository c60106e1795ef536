"""Numeric building blocks shared by every solver.

Contents: the momentum sequence used by the accelerated methods, the
weighted norm pair induced by the coordinate Lipschitz constants, and a
small counter-based random number generator whose output is fixed by this
file (so traces replay bit-for-bit across machines and numpy versions).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ThetaSchedule",
    "theta_next",
    "theta_sequence",
    "theta_minus_one",
    "weighted_norm",
    "weighted_dual_norm",
    "RngStream",
    "sample_coordinate",
    "mix64",
    "fnv1a64",
]

ACCELERATED = "accelerated"
FIXED = "fixed"


def theta_next(theta: float) -> float:
    """Advance the momentum parameter one step.

    Returns the positive root ``t`` of ``(1 - t) / t**2 = 1 / theta**2``,
    i.e. ``(sqrt(theta**4 + 4 theta**2) - theta**2) / 2``.
    """
    if not (0.0 < theta <= 1.0):
        raise ValueError(f"theta must lie in (0, 1], got {theta!r}")
    th2 = theta * theta
    return (math.sqrt(th2 * th2 + 4.0 * th2) - th2) / 2.0


def theta_minus_one(n_hat: int) -> float:
    """The virtual predecessor of ``theta_0 = 1/n_hat``.

    Only meaningful for ``n_hat >= 2``; it makes the telescoping identity
    ``sum_{k=K0}^{K} 1/theta_k = 1/theta_K**2 - 1/theta_{K0-1}**2`` valid at
    ``K0 = 0``.
    """
    if n_hat < 2:
        raise ValueError("theta_{-1} is undefined for n_hat < 2")
    return 1.0 / math.sqrt(n_hat * n_hat - n_hat)


def theta_sequence(n_hat: int, count: int, mode: str = ACCELERATED) -> np.ndarray:
    """``theta_0 .. theta_{count-1}`` for a dual of dimension ``n_hat``."""
    out = np.empty(count)
    th = 1.0 / n_hat
    for k in range(count):
        out[k] = th
        if mode == ACCELERATED:
            th = theta_next(th)
    return out


@dataclass(frozen=True)
class ThetaSchedule:
    """Immutable snapshot of the momentum schedule at iteration ``k``."""

    theta: float
    k: int
    n_hat: int
    mode: str = ACCELERATED

    def __post_init__(self):
        if self.mode not in (ACCELERATED, FIXED):
            raise ValueError(f"unknown schedule mode {self.mode!r}")
        if self.n_hat < 1:
            raise ValueError("n_hat must be positive")
        if not (0.0 < self.theta <= 1.0):
            raise ValueError(f"theta must lie in (0, 1], got {self.theta!r}")

    @classmethod
    def start(cls, n_hat: int, mode: str = ACCELERATED) -> "ThetaSchedule":
        return cls(1.0 / n_hat, 0, n_hat, mode)

    def advance(self) -> "ThetaSchedule":
        th = theta_next(self.theta) if self.mode == ACCELERATED else self.theta
        return ThetaSchedule(th, self.k + 1, self.n_hat, self.mode)


def _check_weights(x, L):
    x = np.asarray(x, dtype=float)
    L = np.asarray(L, dtype=float)
    if x.shape != L.shape:
        raise ValueError(f"length mismatch: x{x.shape} vs L{L.shape}")
    if np.any(L < 0):
        raise ValueError("weights must be non-negative")
    return x, L


def weighted_norm(x, L) -> float:
    """``sqrt(sum_i L_i x_i**2)``."""
    x, L = _check_weights(x, L)
    return float(np.sqrt(np.sum(L * x * x)))


def weighted_dual_norm(x, L) -> float:
    """``sqrt(sum_i x_i**2 / L_i)``, the dual of :func:`weighted_norm`.

    A nonzero entry sitting on a zero weight has no finite dual norm and is
    rejected.
    """
    x, L = _check_weights(x, L)
    nz = x != 0
    if np.any(nz & (L == 0)):
        raise ValueError("dual norm undefined: nonzero entry at a zero weight")
    return float(np.sqrt(np.sum(x[nz] ** 2 / L[nz])))


# --------------------------------------------------------------------------
# Random numbers
#
# SplitMix64 run as a counter-based generator.  For a stream with key
# ``key`` the c-th 64-bit word (c = 0, 1, 2, ...) is
#
#     word(c) = mix64(key + (c + 1) * GOLDEN)        (mod 2**64)
#
#     mix64(z): z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
#               z = (z ^ (z >> 27)) * 0x94D049BB133111EB
#               return z ^ (z >> 31)
#
# and key = mix64(seed ^ mix64(stream_id + GOLDEN)).  Bounded integers use
# rejection (words below (2**64 - n) mod n are discarded, then word mod n),
# so they are exactly uniform.  Doubles in [0, 1) are (word >> 11) * 2**-53.
# Normals use Marsaglia's polar method on pairs of consecutive doubles
# mapped to (-1, 1); both normals of an accepted pair are emitted in order.
# --------------------------------------------------------------------------

GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a Python int (result in [0, 2**64))."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def fnv1a64(text: str) -> int:
    """64-bit FNV-1a hash of the UTF-8 bytes of ``text``."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & _MASK
    return h


class RngStream:
    """Deterministic stream of random words keyed by ``(seed, stream_id)``.

    The generator is counter based: the state is one integer counter, so
    drawing ``a`` values then ``b`` values yields exactly the same numbers
    as drawing ``a + b`` at once.
    """

    def __init__(self, seed: int, stream_id: int = 0, counter: int = 0):
        self.seed = int(seed) & _MASK
        self.stream_id = int(stream_id) & _MASK
        self.key = mix64(self.seed ^ mix64(self.stream_id + GOLDEN))
        self.counter = int(counter)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, counter={self.counter})"

    def spawn(self, stream_id: int) -> "RngStream":
        """A fresh stream sharing this seed."""
        return RngStream(self.seed, stream_id)

    def words(self, size: int) -> np.ndarray:
        c = np.arange(self.counter, self.counter + size, dtype=np.uint64)
        self.counter += size
        with np.errstate(over="ignore"):
            return _mix64_array(np.uint64(self.key) + (c + np.uint64(1)) * np.uint64(GOLDEN))

    def integers(self, n: int, size: int) -> np.ndarray:
        """``size`` independent uniform draws from ``{0, ..., n-1}``."""
        if n < 1:
            raise ValueError("n must be positive")
        if n == 1:
            # still consume words so streams stay aligned across n
            self.words(size)
            return np.zeros(size, dtype=np.int64)
        threshold = np.uint64(((1 << 64) - n) % n)
        out = np.empty(size, dtype=np.int64)
        filled = 0
        while filled < size:
            w = self.words(size - filled)
            w = w[w >= threshold]
            out[filled:filled + w.size] = (w % np.uint64(n)).astype(np.int64)
            filled += w.size
        return out

    def uniform(self, size: int) -> np.ndarray:
        """Doubles uniform on [0, 1)."""
        return (self.words(size) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal(self, size: int) -> np.ndarray:
        """Standard normal draws by the polar method."""
        pairs = (size + 1) // 2
        out = np.empty(2 * pairs)
        filled = 0
        while filled < pairs:
            need = pairs - filled
            u = 2.0 * self.uniform(2 * need) - 1.0
            a, b = u[0::2], u[1::2]
            s = a * a + b * b
            ok = (s > 0.0) & (s < 1.0)
            a, b, s = a[ok], b[ok], s[ok]
            f = np.sqrt(-2.0 * np.log(s) / s)
            m = a.size
            out[2 * filled:2 * (filled + m):2] = a * f
            out[2 * filled + 1:2 * (filled + m):2] = b * f
            filled += m
        return out[:size]


def sample_coordinate(rng: RngStream, n_hat: int) -> int:
    """One uniform coordinate index in ``{0, ..., n_hat-1}``."""
    return int(rng.integers(n_hat, 1)[0])
