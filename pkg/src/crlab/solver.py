"""Distributed primal-dual optimizer for aligned multi-user transmission.

One dual variable per transmitter enforces the peak-power constraint; each
user independently maximizes its own Lagrangian over its reduced
coefficients (gradient ascent, compiled kernel), and the dual vector follows
a projected subgradient step with a Polyak step size whose unknown optimum
is estimated as the midpoint of the current primal and dual values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _backend
from .errors import NonConvergenceError
from .ia import NullSpaceBasis, compute_bases, zero_forcing_residual

LN2 = 0.6931471805599453


@dataclass
class SolverOptions:
    step0: float = 1e-2        # primal ascent step, halved on regression
    inner_tol: float = 1e-8    # gradient-norm target of a subproblem
    inner_cap: int = 20000
    conv_tol: float = 1e-6     # outer stop on the dual-step norm
    max_outer: int = 10000
    c_cap: float = 1e8         # |c| beyond this flags an unbounded subproblem
    mu0: float = 1.0


@dataclass
class BeamformingProblem:
    """Single-channel (or bonded) instance: who transmits what to whom."""

    gains: np.ndarray               # (K, N) effective gain columns
    p_success: np.ndarray           # (N,) packet success probabilities
    psnr_now: np.ndarray            # (N,) current PSNR, > 0
    amp: np.ndarray                 # (N,) beta_j * bandwidth / gop length
    noise_power: float
    p_max: float
    bases: Optional[list[NullSpaceBasis]] = None  # computed when omitted

    def __post_init__(self):
        self.gains = np.asarray(self.gains, dtype=float)
        self.p_success = np.asarray(self.p_success, dtype=float)
        self.psnr_now = np.asarray(self.psnr_now, dtype=float)
        self.amp = np.asarray(self.amp, dtype=float)
        if (self.psnr_now <= 0.0).any():
            raise ValueError("current PSNR values must be positive (log domain)")
        if self.bases is None and self.n_users > 1:
            self.bases = compute_bases(self.gains)

    @property
    def n_transmitters(self) -> int:
        return self.gains.shape[0]

    @property
    def n_users(self) -> int:
        return self.gains.shape[1]


@dataclass
class SubproblemResult:
    c: np.ndarray
    objective: float
    iterations: int
    grad_norm: float
    bounded: bool


@dataclass
class SolveReport:
    weights: np.ndarray            # (K, N) transmit weights, power-feasible
    objective: float               # expected log-PSNR sum at the weights
    iterations: int
    final_gap: float               # |mu(T) - mu(T-1)|
    duality_gap: float             # q_dual - q_primal at the last iterate
    dual_series: np.ndarray        # q_dual(tau) per outer iteration
    trace: list[tuple]             # (tau, q_dual, q_primal, gap, mu_norm)
    converged: bool
    node_powers: np.ndarray        # (K,)
    zf_residual: float
    coefficients: Optional[list[np.ndarray]] = None
    mu: Optional[np.ndarray] = None

    @property
    def duality_gap_rel(self) -> float:
        scale = max(abs(self.objective), 1e-30)
        return abs(self.duality_gap) / scale


@dataclass
class ConvergenceDiagnostics:
    plateaued: bool            # squared-gap partial sums settle
    tail_decreasing: bool      # sqrt(tau) * gap shrinks over the tail
    fitted_constant: float     # sup of sqrt(tau) * gap over the tail
    square_sum: float
    tail_increase: float
    sqrt_tau_gap: np.ndarray
    partial_sums: np.ndarray


def _lagrangian_value(problem: BeamformingProblem, j: int, quad: np.ndarray,
                      u_dir: np.ndarray, c: np.ndarray) -> float:
    s = float(u_dir @ c)
    lam = problem.amp[j] * math.log1p(s * s / problem.noise_power) / LN2
    p = float(problem.p_success[j])
    w = float(problem.psnr_now[j])
    return p * math.log(w + lam) + (1.0 - p) * math.log(w) - float(c @ quad @ c)


def _ray_candidate(problem: BeamformingProblem, j: int, quad: np.ndarray,
                   u_dir: np.ndarray) -> Optional[np.ndarray]:
    """Best point of a log-spaced scan along the stationarity ray Q^-1 u.

    The utility is flat at zero signal, so an ascent started near the origin
    stalls; every stationary point lies on this ray, and scanning it picks a
    starting point on the right side of the inflection.
    """
    r = len(u_dir)
    if float(np.abs(quad).max(initial=0.0)) < 1e-14:
        return None
    try:
        ray = np.linalg.solve(quad + 1e-14 * np.eye(r), u_dir)
    except np.linalg.LinAlgError:
        return None
    s_unit = float(u_dir @ ray)
    if not np.isfinite(s_unit) or abs(s_unit) < 1e-300:
        return None
    node_amp = problem.bases[j].matrix @ ray
    peak = float((node_amp ** 2).max())
    if not np.isfinite(peak) or peak <= 0.0:
        return None
    t_max = 3.0 * math.sqrt(problem.p_max / peak)
    ts = np.geomspace(t_max * 1e-8, t_max, 64)
    s = ts * s_unit
    lam = problem.amp[j] * np.log1p(s ** 2 / problem.noise_power) / LN2
    p = float(problem.p_success[j])
    w = float(problem.psnr_now[j])
    pen = ts ** 2 * float(ray @ quad @ ray)
    vals = p * np.log(w + lam) + (1.0 - p) * math.log(w) - pen
    return float(ts[int(np.argmax(vals))]) * ray


def _unbounded_certificate(quad: np.ndarray, u_dir: np.ndarray) -> bool:
    """True when the utility direction escapes through the penalty null space."""
    eigvals, eigvecs = np.linalg.eigh(quad)
    top = float(eigvals.max(initial=0.0))
    null = eigvecs[:, eigvals <= 1e-12 * max(top, 1e-300)]
    if null.shape[1] == 0:
        return False
    return float(np.linalg.norm(null.T @ u_dir)) > 1e-9 * max(np.linalg.norm(u_dir), 1e-300)


def local_subproblem(problem: BeamformingProblem, j: int, mu: np.ndarray,
                     c0: np.ndarray, options: SolverOptions) -> SubproblemResult:
    """Maximize user j's Lagrangian over its reduced coefficients."""
    basis = problem.bases[j].matrix
    quad = basis.T @ (np.asarray(mu)[:, None] * basis)
    u_dir = basis.T @ problem.gains[:, j]
    unbounded = _unbounded_certificate(quad, u_dir)
    cap = min(options.inner_cap, 1000) if unbounded else options.inner_cap
    ray = _ray_candidate(problem, j, quad, u_dir)
    if ray is not None and (_lagrangian_value(problem, j, quad, u_dir, ray)
                            > _lagrangian_value(problem, j, quad, u_dir, np.asarray(c0))):
        c0 = ray
    c, iters, gnorm, obj, bounded = _backend.subproblem_ascent(
        np.ascontiguousarray(c0, dtype=float), np.ascontiguousarray(quad),
        np.ascontiguousarray(u_dir), float(problem.p_success[j]),
        float(problem.psnr_now[j]), float(problem.amp[j]),
        float(problem.noise_power), options.step0, options.inner_tol,
        cap, options.c_cap)
    if not np.isfinite(obj) or not np.all(np.isfinite(c)):
        raise FloatingPointError(
            f"non-finite subproblem state for user {j}: c={c}, objective={obj}")
    return SubproblemResult(c=c, objective=obj, iterations=iters,
                            grad_norm=gnorm, bounded=bounded and not unbounded)


def dual_update(mu: np.ndarray, node_powers: np.ndarray, p_max: float,
                q_dual: float, q_star_estimate: float, damp: float = 1.0):
    """Projected subgradient step with the Polyak step size.

    Returns (mu_next, rho, gradient); a zero gradient signals convergence
    and leaves mu untouched.  ``damp`` scales the step below the nominal
    Polyak length (any factor in (0, 2) keeps the descent property).
    """
    grad = p_max - np.asarray(node_powers, dtype=float)
    norm2 = float(grad @ grad)
    if norm2 == 0.0:
        return np.asarray(mu, dtype=float).copy(), 0.0, grad
    rho = damp * max(q_dual - q_star_estimate, 0.0) / norm2
    mu_next = np.maximum(np.asarray(mu, dtype=float) - rho * grad, 0.0)
    return mu_next, rho, grad


def _utility(problem: BeamformingProblem, signals: np.ndarray) -> float:
    lam = problem.amp * np.log1p(signals ** 2 / problem.noise_power) / LN2
    p = problem.p_success
    return float(np.sum(p * np.log(problem.psnr_now + lam)
                        + (1.0 - p) * np.log(problem.psnr_now)))


def _node_powers(problem: BeamformingProblem, coeffs: Sequence[np.ndarray]) -> np.ndarray:
    powers = np.zeros(problem.n_transmitters)
    for j, c in enumerate(coeffs):
        powers += (problem.bases[j].matrix @ c) ** 2
    return powers


def solve(problem: BeamformingProblem, options: Optional[SolverOptions] = None,
          rng: Optional[np.random.Generator] = None,
          mu_init: Optional[np.ndarray] = None) -> SolveReport:
    """Run the distributed algorithm to a power-feasible optimum.

    With a single user every transmitter simply spends its power budget on
    that user's signal.  Otherwise user subproblems and dual updates
    alternate until the dual step shrinks below ``conv_tol``.  ``mu_init``
    warm-starts the dual vector (e.g. from a related instance).
    """
    options = options or SolverOptions()
    k, n = problem.n_transmitters, problem.n_users
    if n > k:
        raise ValueError(f"{n} users need at least as many transmitters, have {k}")
    if n == 1:
        weights = np.full((k, 1), math.sqrt(problem.p_max))
        signal = float(weights[:, 0] @ problem.gains[:, 0])
        objective = _utility(problem, np.array([signal]))
        return SolveReport(weights=weights, objective=objective, iterations=0,
                           final_gap=0.0, duality_gap=0.0,
                           dual_series=np.empty(0), trace=[], converged=True,
                           node_powers=np.full(k, problem.p_max),
                           zf_residual=0.0, coefficients=[weights[:, 0]],
                           mu=np.zeros(k))

    rng = rng or np.random.default_rng(0)
    if mu_init is not None:
        mu = np.maximum(np.asarray(mu_init, dtype=float).copy(), 0.0)
        if mu.shape != (k,):
            raise ValueError(f"mu_init shape {mu.shape} != ({k},)")
    else:
        mu = np.full(k, options.mu0, dtype=float)
    r = k - n + 1
    coeffs = [rng.uniform(0.5, 1.5, size=r) for _ in range(n)]
    u_dirs = [problem.bases[j].matrix.T @ problem.gains[:, j] for j in range(n)]

    trace: list[tuple] = []
    q_dual_series: list[float] = []
    converged = False
    final_gap = math.inf
    best_primal = -math.inf
    best_dual = math.inf
    best_feas: list[np.ndarray] = coeffs
    damp = 1.0
    stall = 0
    progress_gap = math.inf

    for tau in range(1, options.max_outer + 1):
        subs = [local_subproblem(problem, j, mu, coeffs[j], options) for j in range(n)]
        coeffs = [s.c for s in subs]
        q_dual = sum(s.objective for s in subs) + problem.p_max * float(mu.sum())
        powers = _node_powers(problem, coeffs)
        peak = float(powers.max())
        # feasible reconstruction: spend the full budget, up or down
        scale = math.sqrt(problem.p_max / peak) if peak > 0.0 else 1.0
        feas = [scale * c for c in coeffs]
        signals = np.array([float(u_dirs[j] @ feas[j]) for j in range(n)])
        q_primal = _utility(problem, signals)
        if q_primal > best_primal:
            best_primal = q_primal
            best_feas = feas
        best_dual = min(best_dual, q_dual)
        gap = q_dual - q_primal
        trace.append((tau, q_dual, q_primal, gap, float(np.linalg.norm(mu))))
        q_dual_series.append(q_dual)

        # damp the step when the certified gap stops shrinking, so the
        # subgradient limit cycle contracts instead of orbiting forever
        if best_dual - best_primal < 0.9 * progress_gap:
            progress_gap = best_dual - best_primal
            stall = 0
        else:
            stall += 1
            if stall >= 40:
                damp *= 0.5
                stall = 0

        q_star_est = 0.5 * (q_dual + best_primal)
        mu_next, rho, grad = dual_update(mu, powers, problem.p_max,
                                         q_dual, q_star_est, damp=damp)
        final_gap = float(np.linalg.norm(mu_next - mu))
        mu = mu_next
        if final_gap <= options.conv_tol or not np.any(grad):
            converged = True
            break

    weights = np.column_stack([problem.bases[j].matrix @ best_feas[j] for j in range(n)])
    signals = np.array([float(u_dirs[j] @ best_feas[j]) for j in range(n)])
    report = SolveReport(weights=weights, objective=_utility(problem, signals),
                         iterations=len(trace), final_gap=final_gap,
                         duality_gap=best_dual - best_primal,
                         dual_series=np.array(q_dual_series), trace=trace,
                         converged=converged,
                         node_powers=(weights ** 2).sum(axis=1),
                         zf_residual=zero_forcing_residual(weights, problem.gains),
                         coefficients=best_feas, mu=mu)
    if not converged:
        raise NonConvergenceError(
            f"dual iteration cap {options.max_outer} reached "
            f"(last step {final_gap:.3e})", report=report)
    return report


def convergence_diagnostics(report: SolveReport,
                            q_star: Optional[float] = None) -> ConvergenceDiagnostics:
    """Check the claimed convergence behavior on a finished run.

    The squared optimality gaps must have bounded partial sums (plateau:
    their increase over the final decade of iterations below 1e-8) and
    ``sqrt(tau) * gap`` must trend to zero over the tail.  ``q_star``
    defaults to the best dual value seen, the series' own limit estimate.
    """
    if q_star is None:
        q_star = float(report.dual_series.min()) if len(report.dual_series) \
            else report.objective
    gaps = np.abs(report.dual_series - q_star)
    tau = np.arange(1, len(gaps) + 1)
    squares = gaps ** 2
    partial = np.cumsum(squares)
    start = max(int(len(gaps) * 0.9), 1)  # final decade of the run
    tail_increase = float(partial[-1] - partial[start - 1]) if len(gaps) else math.inf
    sqrt_tau_gap = np.sqrt(tau) * gaps
    half = len(gaps) // 2
    tail = sqrt_tau_gap[half:] if half else sqrt_tau_gap
    if len(tail) >= 4:
        quarter = max(len(tail) // 4, 1)
        early = float(np.mean(tail[:quarter]))
        late = float(np.mean(tail[-quarter:]))
        tail_decreasing = late <= early + 1e-12
    else:
        tail_decreasing = True
    return ConvergenceDiagnostics(
        plateaued=tail_increase < 1e-8,
        tail_decreasing=tail_decreasing,
        fitted_constant=float(tail.max()) if len(tail) else 0.0,
        square_sum=float(partial[-1]) if len(gaps) else 0.0,
        tail_increase=tail_increase,
        sqrt_tau_gap=sqrt_tau_gap,
        partial_sums=partial)
