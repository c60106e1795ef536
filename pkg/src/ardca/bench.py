"""Synthetic sparse-recovery instances, solver races and summaries.

Instance kinds
--------------
``l2_loss``
    ``lam (||x||_1 + mu/2 ||x||^2) + ||A^T x - b||^2 / (2n)``
``l1_loss``
    ``lam (||x||_1 + mu/2 ||x||^2) + ||A^T x - b||_1 / n``
``linf_constrained``
    ``||x||_1 + mu/2 ||x||^2`` subject to ``|A^T x - b| <= tau`` (two
    one-sided rows per data point)
``svm``
    ``mu/2 ||x||^2 + (1/n) sum_i max(0, 1 - l_i A_i^T x)``, stored with
    the columns pre-multiplied by their labels
``lad``
    ``lam mu/2 ||x||^2 + ||A^T x - b||_1 / n`` with a dense ground truth

``A`` has i.i.d. U[0, 1] entries and unit-norm columns; ``b = A^T x + w``.
All randomness comes from :class:`~ardca.core.RngStream` so instances are
identical across platforms.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .baselines import adfga_run, dga_run, rdca_run
from .core import RngStream, fnv1a64
from .dual import DualModel, ProblemSpec, dual_value, global_L, primal_value_and_residuals
from .engine import DEFAULT_NU, NumericAbort, solve
from .prox import Loss, Regularizer
from .schedules import ErmPlan, RestartPlan, erm_run, resolve_kprime, restart_run
from .trace import TraceRecord, Tracer

KINDS = ("l2_loss", "l1_loss", "linf_constrained", "svm", "lad")
NOISES = ("gaussian", "sparse_gaussian", "uniform", "none")
_DEFAULT_NOISE = {"l2_loss": "gaussian", "l1_loss": "sparse_gaussian",
                  "linf_constrained": "uniform", "svm": "gaussian", "lad": "sparse_gaussian"}
SOLVERS = ("ardca", "ardca-na", "ardca-restart", "ardca-erm", "rdca", "adfga", "dga")


@dataclass(frozen=True)
class InstanceConfig:
    """Generator settings.

    ``tau`` is the noise scale (standard deviation for Gaussian noise, half
    width for uniform noise) and also the constraint width of
    ``linf_constrained``.  ``sparsity`` and ``noise`` default per kind.
    """

    kind: str
    t: int = 1000
    n: int = 200
    mu: float = 0.1
    lam: float = 1e-3
    tau: float = 1e-3
    sparsity: Optional[float] = None
    noise: Optional[str] = None
    noise_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown instance kind {self.kind!r}; expected one of {KINDS}")
        if self.t < 1 or self.n < 1:
            raise ValueError("dimensions must be positive")
        if not self.mu > 0 or not self.lam > 0:
            raise ValueError("mu and lam must be positive")
        if self.tau < 0 or (self.kind == "linf_constrained" and not self.tau > 0):
            raise ValueError("tau must be positive for the constrained problem")
        if self.sparsity is not None and not 0 <= self.sparsity <= 1:
            raise ValueError("sparsity must lie in [0, 1]")
        if self.noise is not None and self.noise not in NOISES:
            raise ValueError(f"unknown noise model {self.noise!r}")
        if not 0 <= self.noise_fraction <= 1:
            raise ValueError("noise_fraction must lie in [0, 1]")

    @property
    def noise_model(self) -> str:
        return self.noise or _DEFAULT_NOISE[self.kind]

    @property
    def density(self) -> float:
        if self.sparsity is not None:
            return self.sparsity
        return 1.0 if self.kind == "lad" else 0.1


def _choose(rng: RngStream, n: int, k: int) -> np.ndarray:
    """``k`` distinct indices from ``range(n)`` by a partial Fisher-Yates shuffle."""
    perm = np.arange(n)
    for i in range(k):
        j = i + int(rng.integers(n - i, 1)[0])
        perm[i], perm[j] = perm[j], perm[i]
    return np.sort(perm[:k])


def gen_instance(cfg: InstanceConfig):
    """Build the problem described by ``cfg``.

    Returns ``(spec, truth)`` where ``truth`` holds the ground-truth ``x``,
    the noise ``w`` and, for ``svm``, the labels.
    """
    rng = RngStream(cfg.seed, fnv1a64("instance"))
    t, n = cfg.t, cfg.n
    A = rng.uniform(t * n).reshape(t, n)
    norms = np.linalg.norm(A, axis=0)
    if np.any(norms == 0):
        raise ValueError("generated a zero column")
    A /= norms
    k = math.floor(t * cfg.density)
    x = np.zeros(t)
    support = _choose(rng, t, k) if k < t else np.arange(t)
    x[support] = rng.normal(k)
    noise = cfg.noise_model
    if noise == "gaussian":
        w = cfg.tau * rng.normal(n)
    elif noise == "sparse_gaussian":
        w = np.zeros(n)
        idx = _choose(rng, n, math.floor(n * cfg.noise_fraction))
        w[idx] = cfg.tau * rng.normal(idx.size)
    elif noise == "uniform":
        w = cfg.tau * (2.0 * rng.uniform(n) - 1.0)
    else:
        w = np.zeros(n)
    b = A.T @ x + w
    truth = {"x": x, "w": w}
    lam, mu = cfg.lam, cfg.mu
    if cfg.kind == "l2_loss":
        spec = ProblemSpec(A, Regularizer("l1_plus_l2", lam * mu, lam),
                           [Loss("squared", bi) for bi in b])
    elif cfg.kind == "l1_loss":
        spec = ProblemSpec(A, Regularizer("l1_plus_l2", lam * mu, lam),
                           [Loss("absolute", bi) for bi in b])
    elif cfg.kind == "lad":
        spec = ProblemSpec(A, Regularizer("l2", lam * mu), [Loss("absolute", bi) for bi in b])
    elif cfg.kind == "svm":
        labels = np.where(b >= 0, 1.0, -1.0)
        truth["labels"] = labels
        spec = ProblemSpec(A * labels, Regularizer("l2", mu), [Loss("hinge", 0.0, 1.0)] * n)
    else:
        tau = cfg.tau
        J = np.vstack([A.T, -A.T])
        q = np.concatenate([-b - tau, b - tau])
        spec = ProblemSpec(np.zeros((t, 0)), Regularizer("l1_plus_l2", mu, 1.0), [], J=J, q=q)
    return spec, truth


def instance_meta(cfg: InstanceConfig) -> dict:
    d = asdict(cfg)
    d["sparsity"] = cfg.density
    d["noise"] = cfg.noise_model
    return d


# --------------------------------------------------------------------------
# reference optimum
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Reference:
    F_star: float
    D_star: float
    F_best: float
    discrepancy: float
    flagged: bool

    def pair(self) -> tuple[float, float]:
        return self.F_star, self.D_star

    def as_dict(self) -> dict:
        return {"F_star": self.F_star, "D_star": self.D_star, "F_best": self.F_best,
                "discrepancy": self.discrepancy, "flagged": int(self.flagged)}


def reference_optimum(model: DualModel, passes: int = 2000, seed: int = 0,
                      inner_passes: int = 10, growth: float = 2.0,
                      adfga_passes: int | None = None) -> Reference:
    """Estimate the optimal value by a long run of restarted ARDCA (standard
    step, restart periods growing geometrically from ``inner_passes``
    passes) and accelerated full-gradient ascent as a cross-check.

    ``D_star`` is the smallest dual value seen, ``F_star = -D_star``; the
    best primal value among the averaged outputs is compared against it and
    a relative disagreement above ``1e-4`` is flagged.
    """
    if passes < 1:
        raise ValueError("reference budget must be positive")
    n_hat = model.n_hat
    spec = model.spec
    tracer = Tracer(model, "reference", timing=False)
    rep = restart_run(model, None, RestartPlan(K=inner_passes * n_hat, N=None,
                                               step_variant="standard", growth=growth,
                                               max_iters=passes * n_hat),
                      rng=RngStream(seed, fnv1a64("reference")), tracer=tracer)
    duals = [r.dual_obj for r in tracer.records] + [r.dual_obj for r in rep.outer]
    duals.append(dual_value(model, rep.u_final))
    primals = [r.primal_obj for r in rep.outer if _feasible(model, r)]
    alt = adfga_run(model, None, adfga_passes or max(1, passes // 10))
    duals.append(dual_value(model, alt.u_final))
    for x in (alt.x_avg, rep.x_avg, rep.x_u):
        if _feasible_x(model, x):
            primals.append(primal_value_and_residuals(spec, x)[0])
    D_star = float(min(duals))
    F_star = -D_star
    F_best = float(min(primals)) if primals else math.nan
    disc = abs(F_best - F_star) if primals else math.nan
    flagged = bool(not disc <= 1e-4 * (1.0 + abs(F_star)))
    if flagged:
        warnings.warn(f"reference cross-check disagreement {disc:.3g}", RuntimeWarning)
    return Reference(F_star, D_star, F_best, disc, flagged)


def _feasible_x(model, x, tol=1e-9) -> bool:
    _, eq, ineq = primal_value_and_residuals(model.spec, x)
    return bool(np.all(np.abs(eq) <= tol) and np.all(ineq <= tol))


def _feasible(model, rec: TraceRecord, tol=1e-9) -> bool:
    return rec.eq_violation <= tol and rec.ineq_violation <= tol


# --------------------------------------------------------------------------
# races
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RaceOptions:
    step_variant: str = "paper"
    nu: float = DEFAULT_NU
    k0: Optional[int] = None
    inner_k: Optional[int] = None  # restart period, default 10 n_hat
    kprime: Optional[int] = None  # None: automatic
    eps: float = 1e-3
    M: Optional[float] = None
    timing: bool = True


def stream_id(solver: str, seed: int) -> int:
    return fnv1a64(solver) ^ (int(seed) & 0xFFFFFFFFFFFFFFFF)


def run_solver(model: DualModel, solver: str, passes: int, seed: int, reference=None,
               opts: RaceOptions = RaceOptions(), L_glob: float | None = None):
    """Run one solver for ``passes`` passes and return its trace records.

    ``ardca`` also yields the ``ardca-na`` (last iterate) records of the
    same run; the return value is a dict ``{solver name: records}``.
    """
    n_hat = model.n_hat
    budget = passes * n_hat
    base = "ardca" if solver == "ardca-na" else solver
    rng = RngStream(seed, stream_id(base, seed))
    tracer = Tracer(model, base, seed, reference, timing=opts.timing,
                    last_solver="ardca-na" if base == "ardca" else None,
                    primal="last" if base == "rdca" else "avg")
    try:
        if base == "ardca":
            solve(model, budget - 1, rng=rng, step_variant=opts.step_variant, nu=opts.nu,
                  k0=opts.k0, tracer=tracer)
        elif base == "rdca":
            rdca_run(model, None, budget - 1, rng=rng, step_variant=opts.step_variant,
                     tracer=tracer)
        elif base == "ardca-restart":
            K = opts.inner_k or 10 * n_hat
            restart_run(model, None, RestartPlan(K=K, N=None, k0=opts.k0, nu=opts.nu,
                                                 step_variant=opts.step_variant,
                                                 max_iters=budget), rng=rng, tracer=tracer)
        elif base == "ardca-erm":
            kp = ErmPlan(K=1, K_prime=opts.kprime, eps=opts.eps, M=opts.M)
            kprime = min(resolve_kprime(model, None, kp), budget - 3)
            erm_run(model, None, ErmPlan(K=budget - kprime - 2, K_prime=kprime, k0=opts.k0,
                                         nu=opts.nu, step_variant=opts.step_variant),
                    rng=rng, tracer=tracer)
        elif base == "adfga":
            adfga_run(model, None, passes, nu=opts.nu, L_glob=L_glob, tracer=tracer)
        elif base == "dga":
            dga_run(model, None, passes, L_glob=L_glob, tracer=tracer)
        else:
            raise ValueError(f"unknown solver {solver!r}")
    except NumericAbort as exc:
        tracer.mark_status(f"abort:{exc.k}")
    out = {base: tracer.records}
    if base == "ardca":
        out["ardca-na"] = tracer.records_last
    return out


def run_race(model: DualModel, solvers: Sequence[str], passes: int, seeds: Sequence[int],
             reference=None, opts: RaceOptions = RaceOptions(), jobs: int = 1) -> list:
    """All (solver, seed) pairs; records sorted by solver, seed and pass."""
    for s in solvers:
        if s not in SOLVERS:
            raise ValueError(f"unknown solver {s!r}; expected one of {SOLVERS}")
    if passes < 1:
        raise ValueError("passes must be positive")
    wanted = set(solvers)
    bases = sorted({"ardca" if s == "ardca-na" else s for s in solvers})
    L_glob = global_L(model) if {"adfga", "dga"} & wanted else None
    tasks = [(b, s) for b in bases for s in seeds]

    def work(task):
        b, s = task
        return run_solver(model, b, passes, s, reference, opts, L_glob)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, tasks))
    else:
        results = [work(t) for t in tasks]
    records = [r for res in results for name, recs in res.items() if name in wanted
               for r in recs]
    records.sort(key=lambda r: (r.solver, r.seed, r.passes))
    return records


# --------------------------------------------------------------------------
# summaries
# --------------------------------------------------------------------------

METRICS = ("primal_obj", "dual_obj", "primal_gap", "dual_gap", "eq_violation",
           "ineq_violation", "wall_ms")


def nearest_rank(values, q: float) -> float:
    """The ``q``-quantile by the nearest-rank rule."""
    return float(np.quantile(np.asarray(values, dtype=float), q, method="inverted_cdf"))


def summarize(records, quantiles=(0.25, 0.5, 0.75)) -> list[dict]:
    """Per (solver, pass): count and nearest-rank quantiles of every metric."""
    if not records:
        raise ValueError("nothing to summarize")
    groups: dict = {}
    for r in records:
        groups.setdefault((r.solver, r.passes), []).append(r)
    rows = []
    for (solver, p), grp in sorted(groups.items()):
        row = {"solver": solver, "pass": p, "count": len(grp)}
        for m in METRICS:
            vals = [getattr(r, m) for r in grp]
            for q in quantiles:
                row[f"{m}_q{int(round(q * 100))}"] = nearest_rank(vals, q)
        rows.append(row)
    return rows


def median_curve(records, solver: str, metric: str = "primal_gap"):
    """``(passes, median metric)`` arrays for one solver."""
    rows = [r for r in summarize([r for r in records if r.solver == solver])]
    return (np.array([r["pass"] for r in rows]), np.array([r[f"{metric}_q50"] for r in rows]))
