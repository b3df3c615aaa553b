"""Iterative solvers for consistent linear matrix equations A X B = C.

Four randomized methods share one driver:

* ``grk``            -- rank-1 update from one sampled row of A and column of B.
* ``grbk``           -- projection onto the solution set of the sampled
                        sketched equation, via block pseudoinverses.
* ``grabk_const``    -- pseudoinverse-free weighted average of single-index
                        updates with a constant stepsize.
* ``grabk_adaptive`` -- same averaged update with a per-iteration stepsize
                        computed from the sampled residual.
* ``rk_kron``        -- classical row-action iteration on the materialized
                        Kronecker system; desk-scale oracle and baseline.

All methods start from X0 = 0 and converge to the minimal Frobenius norm
solution pinv(A) C pinv(B). Sampling uses contiguous partitions with block
probabilities proportional to squared Frobenius norms.
"""

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .matrices import as_dense, col_norms, kron, pinv, row_norms, vec, unvec
from .rates import beta_max, gamma_max
from .sampling import (
    SeededRng,
    categorical,
    frobenius_block_probs,
    make_partition,
    sample_block,
)

GRK = "grk"
GRBK = "grbk"
GRABK_CONST = "grabk_const"
GRABK_ADAPTIVE = "grabk_adaptive"
RK_KRON = "rk_kron"

METHODS = (GRK, GRBK, GRABK_CONST, GRABK_ADAPTIVE, RK_KRON)

WEIGHT_FROBENIUS = "frobenius"
WEIGHT_UNIFORM = "uniform"

# Defaults: eta 1.95 for the constant stepsize (near the stability edge at 2),
# 1.0 (alpha = L_k) for the adaptive one.
DEFAULT_ETA = {GRABK_CONST: 1.95, GRABK_ADAPTIVE: 1.0}


@dataclass
class Problem:
    """A consistent matrix equation A X B = C.

    A is (m, p) dense or CSR, B is (q, n) dense or CSR, C is (m, n) dense.
    ``X_star``, when known, is the minimal-norm solution used for
    relative-error termination; it must satisfy the equation to 1e-8
    relative accuracy. ``X_drawn`` is the matrix C was built from when the
    problem is synthetic; it differs from ``X_star`` when A or B is
    rank-deficient.
    """

    A: object
    B: object
    C: np.ndarray
    X_star: np.ndarray | None = None
    X_drawn: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        if not sp.issparse(self.A):
            self.A = as_dense(self.A)
        if not sp.issparse(self.B):
            self.B = as_dense(self.B)
        self.C = as_dense(self.C)
        m, p = self.A.shape
        q, n = self.B.shape
        if self.C.shape != (m, n):
            raise ValueError(
                f"C has shape {self.C.shape}, expected {(m, n)} from A {self.A.shape} "
                f"and B {self.B.shape}"
            )
        if self.X_star is not None:
            self.X_star = as_dense(self.X_star)
            if self.X_star.shape != (p, q):
                raise ValueError(
                    f"X_star has shape {self.X_star.shape}, expected {(p, q)}"
                )
            resid = np.linalg.norm(self.A @ self.X_star @ self.B - self.C, "fro")
            if resid > 1e-8 * np.linalg.norm(self.C, "fro") + 1e-300:
                raise ValueError(
                    f"X_star does not solve the equation: residual {resid:.3e}"
                )

    @property
    def shape(self):
        """(m, p, q, n)."""
        return (*self.A.shape, *self.B.shape)


@dataclass
class SolverConfig:
    """Method selection plus sampling, stepsize, and termination settings.

    ``eta`` defaults per method (1.95 constant, 1.0 adaptive). ``tau1`` and
    ``tau2`` are row/column block sizes; the single-index method ignores
    them. ``unsafe_stepsize`` lifts the eta < 2 guard (no convergence
    guarantee). ``max_seconds`` is an optional advisory wall-clock cap.
    """

    method: str = GRBK
    tau1: int = 1
    tau2: int = 1
    eta: float | None = None
    weight_scheme: str = WEIGHT_FROBENIUS
    max_iters: int = 50000
    re_tolerance: float = 1e-6
    seed: int = 0
    trace_every: int = 1
    rank_tol: float | None = None
    cache_block_pinv: bool = False
    unsafe_stepsize: bool = False
    max_seconds: float | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; pick one of {METHODS}")
        if self.weight_scheme not in (WEIGHT_FROBENIUS, WEIGHT_UNIFORM):
            raise ValueError(f"unknown weight scheme {self.weight_scheme!r}")
        if self.re_tolerance <= 0:
            raise ValueError("re_tolerance must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if self.trace_every < 1:
            raise ValueError("trace_every must be at least 1")
        if self.tau1 < 1 or self.tau2 < 1:
            raise ValueError("block sizes must be at least 1")
        eta = self.resolved_eta()
        if self.method in (GRABK_CONST, GRABK_ADAPTIVE):
            if eta <= 0:
                raise ValueError(f"eta must be positive, got {eta}")
            if eta >= 2 and not self.unsafe_stepsize:
                raise ValueError(
                    f"eta={eta} is outside (0, 2); set unsafe_stepsize=True to force it"
                )

    def resolved_eta(self):
        if self.eta is not None:
            return self.eta
        return DEFAULT_ETA.get(self.method, 1.0)


@dataclass
class TraceRecord:
    iteration: int
    relative_error: float | None
    relative_residual: float | None
    elapsed: float


@dataclass
class ConvergenceReport:
    """Outcome of one solve: final iterate, trace, and termination reason."""

    records: list
    termination: str  # "tolerance" | "max_iters" | "time_limit"
    X: np.ndarray
    iterations: int
    stepsizes: list | None = None  # adaptive L_k per iteration, else None

    @property
    def final_relative_error(self):
        return self.records[-1].relative_error if self.records else None

    @property
    def final_relative_residual(self):
        return self.records[-1].relative_residual if self.records else None


def relative_error(X, X_star):
    """Squared relative error ||X - X_star||_F^2 / ||X_star||_F^2."""
    X = np.asarray(X, dtype=np.float64)
    X_star = np.asarray(X_star, dtype=np.float64)
    denom = np.linalg.norm(X_star, "fro") ** 2
    if denom == 0.0:
        raise ValueError("relative error undefined for a zero reference solution")
    return float(np.linalg.norm(X - X_star, "fro") ** 2 / denom)


def _dense_rows(A, I):
    block = A[I] if sp.issparse(A) else A[I, :]
    if sp.issparse(block):
        block = block.toarray()
    return np.asarray(block, dtype=np.float64)


def _dense_cols(B, J):
    block = B[:, J]
    if sp.issparse(block):
        block = block.toarray()
    return np.asarray(block, dtype=np.float64)


@dataclass
class IterationState:
    """Prepared per-run caches: the iterate plus norms, partitions, weights."""

    problem: Problem
    config: SolverConfig
    X: np.ndarray
    k: int
    rng: SeededRng
    eta: float
    row_norms_sq: np.ndarray
    col_norms_sq: np.ndarray
    partition_rows: object = None
    partition_cols: object = None
    dist_rows: object = None
    dist_cols: object = None
    row_weights: list = field(default_factory=list)  # u per row block
    col_weights: list = field(default_factory=list)  # v per col block
    row_weights_hat: list = field(default_factory=list)  # u_i / ||A_i||^2
    col_weights_hat: list = field(default_factory=list)  # v_j / ||B_j||^2
    alpha_const: float | None = None
    pinv_cache: dict = field(default_factory=dict)
    # rk_kron only
    kron_M: np.ndarray | None = None
    kron_c: np.ndarray | None = None
    kron_x: np.ndarray | None = None
    kron_row_norms_sq: np.ndarray | None = None
    kron_dist: object = None


def _block_weight_arrays(norms_sq, partition, scheme):
    """Per-block weight vectors u (sum 1) and u_hat = u / norms_sq."""
    weights, hats = [], []
    for b in range(partition.n_blocks):
        ns = norms_sq[partition.block_slice(b)]
        if scheme == WEIGHT_FROBENIUS:
            total = ns.sum()
            if total == 0.0:
                weights.append(None)  # zero-norm block: never sampled
                hats.append(None)
                continue
            u = ns / total
            u_hat = np.where(ns > 0.0, u / np.where(ns > 0.0, ns, 1.0), 0.0)
        else:  # uniform
            if np.any(ns == 0.0):
                raise ValueError(
                    "uniform weights require nonzero rows/columns in every block"
                )
            u = np.full(ns.size, 1.0 / ns.size)
            u_hat = u / ns
        weights.append(u)
        hats.append(u_hat)
    return weights, hats


def constant_stepsize(beta_max_a, beta_max_b, eta):
    """Stepsize eta / (beta_max(A)^2 beta_max(B)^2) for Frobenius weights."""
    return eta / (beta_max_a**2 * beta_max_b**2)


def uniform_constant_stepsize(gamma_max_a, gamma_max_b, tau1, tau2, eta):
    """Stepsize eta * tau1 tau2 / (gamma_max(A)^2 gamma_max(B)^2) for uniform weights."""
    return eta * tau1 * tau2 / (gamma_max_a**2 * gamma_max_b**2)


def prepare_state(problem, config):
    """Build the caches one run needs: norms, partitions, weights, stepsize."""
    A, B, C = problem.A, problem.B, problem.C
    m, p = A.shape
    q, n = B.shape
    rns = row_norms(A) ** 2
    cns = col_norms(B) ** 2
    state = IterationState(
        problem=problem,
        config=config,
        X=np.zeros((p, q)),
        k=0,
        rng=SeededRng(config.seed, stream=1),
        eta=config.resolved_eta(),
        row_norms_sq=rns,
        col_norms_sq=cns,
    )
    if config.method == RK_KRON:
        M = kron(B.toarray().T if sp.issparse(B) else B.T,
                 A.toarray() if sp.issparse(A) else A)
        state.kron_M = M
        state.kron_c = vec(C).ravel()
        state.kron_x = np.zeros(p * q)
        state.kron_row_norms_sq = np.sum(M * M, axis=1)
        total = state.kron_row_norms_sq.sum()
        if total == 0.0:
            raise ValueError("cannot solve with a zero matrix")
        state.kron_dist = categorical(state.kron_row_norms_sq / total)
        return state

    tau1 = 1 if config.method == GRK else config.tau1
    tau2 = 1 if config.method == GRK else config.tau2
    if tau1 > m or tau2 > n:
        raise ValueError(
            f"block sizes tau1={tau1}, tau2={tau2} exceed matrix dimensions "
            f"m={m}, n={n}"
        )
    state.partition_rows = make_partition(m, tau1)
    state.partition_cols = make_partition(n, tau2)
    state.dist_rows = frobenius_block_probs(A, state.partition_rows, "rows")
    state.dist_cols = frobenius_block_probs(B, state.partition_cols, "cols")

    if config.method in (GRABK_CONST, GRABK_ADAPTIVE):
        state.row_weights, state.row_weights_hat = _block_weight_arrays(
            rns, state.partition_rows, config.weight_scheme
        )
        state.col_weights, state.col_weights_hat = _block_weight_arrays(
            cns, state.partition_cols, config.weight_scheme
        )
    if config.method == GRABK_CONST:
        if config.weight_scheme == WEIGHT_FROBENIUS:
            state.alpha_const = constant_stepsize(
                beta_max(A, state.partition_rows, "rows"),
                beta_max(B, state.partition_cols, "cols"),
                state.eta,
            )
        else:
            state.alpha_const = uniform_constant_stepsize(
                gamma_max(A, state.partition_rows, "rows"),
                gamma_max(B, state.partition_cols, "cols"),
                tau1,
                tau2,
                state.eta,
            )
    return state


def grk_step(state, i, j):
    """Rank-1 update from row i of A and column j of B; returns the iterate.

    X <- X + A_i^T (C_ij - A_i X B_j) B_j^T / (||A_i||^2 ||B_j||^2)
    """
    na2 = state.row_norms_sq[i]
    nb2 = state.col_norms_sq[j]
    if na2 == 0.0 or nb2 == 0.0:
        raise ValueError(f"row {i} of A or column {j} of B is zero")
    a = _dense_rows(state.problem.A, np.array([i])).ravel()
    b = _dense_cols(state.problem.B, np.array([j])).ravel()
    r = state.problem.C[i, j] - a @ state.X @ b
    state.X += (r / (na2 * nb2)) * np.outer(a, b)
    return state.X


def _block_pinvs(state, I, J, rank_tol):
    A_I = _dense_rows(state.problem.A, I)
    B_J = _dense_cols(state.problem.B, J)
    return pinv(A_I, rank_tol), pinv(B_J, rank_tol), A_I, B_J


def grbk_step(state, I, J, rank_tol=None, _cached=None):
    """Project the iterate onto the solution set of the sampled sketched
    equation A_I X B_J = C_IJ; returns the iterate.

    X <- X + pinv(A_I) (C_IJ - A_I X B_J) pinv(B_J)
    """
    I = np.asarray(I)
    J = np.asarray(J)
    if _cached is not None:
        pa, pb, A_I, B_J = _cached
    else:
        pa, pb, A_I, B_J = _block_pinvs(state, I, J, rank_tol)
    if not A_I.any() or not B_J.any():
        raise ValueError("sampled block of A or B is zero")
    R = state.problem.C[np.ix_(I, J)] - A_I @ state.X @ B_J
    state.X += pa @ R @ pb
    return state.X


def _check_weights(u, size, label):
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (size,):
        raise ValueError(f"{label} has length {u.size}, expected {size}")
    if np.any(u < 0):
        raise ValueError(f"{label} must be nonnegative")
    if abs(float(u.sum()) - 1.0) > 1e-10:
        raise ValueError(f"{label} must sum to 1, got {u.sum()!r}")
    return u


def _hat_weights(u, norms_sq, label):
    bad = (norms_sq == 0.0) & (u > 0.0)
    if np.any(bad):
        raise ValueError(f"{label}: positive weight on a zero row/column")
    return np.where(norms_sq > 0.0, u / np.where(norms_sq > 0.0, norms_sq, 1.0), 0.0)


def _averaged_update(state, I, J, u_hat, v_hat):
    """Residual block R and the weighted update direction U = A_I^T (u_hat R v_hat) B_J^T."""
    A_I = _dense_rows(state.problem.A, I)
    B_J = _dense_cols(state.problem.B, J)
    R = state.problem.C[np.ix_(I, J)] - A_I @ state.X @ B_J
    U = A_I.T @ (u_hat[:, None] * R * v_hat[None, :]) @ B_J.T
    return R, U


def grabk_step(state, I, J, u, v, alpha):
    """Weighted-average update over all pairs (i, j) in the sampled blocks.

    Equivalent to summing the rank-1 single-index updates scaled by
    u_i v_j, but computed in compact matrix form. Weights must each sum
    to 1 over their block. Returns the iterate.
    """
    I = np.asarray(I)
    J = np.asarray(J)
    u = _check_weights(u, I.size, "row weights")
    v = _check_weights(v, J.size, "column weights")
    u_hat = _hat_weights(u, state.row_norms_sq[I], "row weights")
    v_hat = _hat_weights(v, state.col_norms_sq[J], "column weights")
    _, U = _averaged_update(state, I, J, u_hat, v_hat)
    state.X += alpha * U
    return state.X


def adaptive_stepsize(state, I, J, u, v):
    """Per-iteration stepsize ratio for the averaged update.

    Returns (L, alpha) with alpha = eta * L, where L is the weighted
    residual energy over the squared norm of the update direction. Returns
    None when every residual scalar in the sampled block is zero (the block
    is already solved); the caller should skip the update.
    """
    I = np.asarray(I)
    J = np.asarray(J)
    u = _check_weights(u, I.size, "row weights")
    v = _check_weights(v, J.size, "column weights")
    u_hat = _hat_weights(u, state.row_norms_sq[I], "row weights")
    v_hat = _hat_weights(v, state.col_norms_sq[J], "column weights")
    R, U = _averaged_update(state, I, J, u_hat, v_hat)
    denom = float(np.sum(U * U))
    if denom == 0.0:
        return None
    num = float(u_hat @ (R * R) @ v_hat)
    L = num / denom
    return L, state.eta * L


def rk_kronecker_step(xvec, M, cvec, row, row_norms_sq=None):
    """One classical row-action step on the vectorized system M x = c.

    Desk-scale oracle: M is the materialized product system. Returns the
    updated vector (modified in place when possible).
    """
    x = np.asarray(xvec, dtype=np.float64)
    mrow = M[row]
    nr2 = row_norms_sq[row] if row_norms_sq is not None else float(mrow @ mrow)
    if nr2 == 0.0:
        raise ValueError(f"row {row} of the system matrix is zero")
    r = cvec[row] - mrow @ x
    x += (r / nr2) * mrow
    return x


def _relative_residual(problem, X):
    resid = np.linalg.norm(problem.C - (problem.A @ X) @ problem.B, "fro")
    denom = np.linalg.norm(problem.C, "fro")
    return float(resid / denom) if denom > 0.0 else float(resid)


def _grabk_adaptive_apply(state, I, J, u_hat, v_hat):
    """Fused adaptive step; returns L or None when the block is solved."""
    R, U = _averaged_update(state, I, J, u_hat, v_hat)
    denom = float(np.sum(U * U))
    if denom == 0.0:
        return None
    L = float(u_hat @ (R * R) @ v_hat) / denom
    state.X += (state.eta * L) * U
    return L


def solve(problem, config):
    """Run the configured method from X0 = 0 and trace convergence.

    Termination uses the squared relative error against ``X_star`` when the
    problem provides a usable (nonzero) reference, otherwise the relative
    residual ||C - A X B||_F / ||C||_F. The check runs every iteration;
    trace records are kept every ``trace_every`` iterations plus the final
    one. Wall-clock covers the iteration loop only.
    """
    state = prepare_state(problem, config)
    use_re = problem.X_star is not None and np.linalg.norm(problem.X_star, "fro") > 0.0
    xstar_sq = np.linalg.norm(problem.X_star, "fro") ** 2 if use_re else None
    adaptive = config.method == GRABK_ADAPTIVE
    l_values = [] if adaptive else None
    records = []

    def current_X():
        if config.method == RK_KRON:
            p, q = state.problem.A.shape[1], state.problem.B.shape[0]
            return unvec(state.kron_x, p, q)
        return state.X

    def stop_metric():
        X = current_X()
        if use_re:
            return float(np.linalg.norm(X - problem.X_star, "fro") ** 2 / xstar_sq)
        return _relative_residual(problem, X)

    def record(k, elapsed):
        X = current_X()
        re = (
            float(np.linalg.norm(X - problem.X_star, "fro") ** 2 / xstar_sq)
            if use_re
            else None
        )
        records.append(
            TraceRecord(
                iteration=k,
                relative_error=re,
                relative_residual=_relative_residual(problem, X),
                elapsed=elapsed,
            )
        )

    t0 = time.perf_counter()
    if stop_metric() < config.re_tolerance:
        return ConvergenceReport(
            records=[],
            termination="tolerance",
            X=current_X().copy(),
            iterations=0,
            stepsizes=l_values,
        )

    k = 0
    termination = "max_iters"
    while k < config.max_iters:
        if config.method == RK_KRON:
            row = sample_block(state.kron_dist, state.rng)
            rk_kronecker_step(
                state.kron_x, state.kron_M, state.kron_c, row,
                state.kron_row_norms_sq,
            )
        else:
            bi = sample_block(state.dist_rows, state.rng)
            bj = sample_block(state.dist_cols, state.rng)
            I = state.partition_rows.block(bi)
            J = state.partition_cols.block(bj)
            if config.method == GRK:
                grk_step(state, int(I[0]), int(J[0]))
            elif config.method == GRBK:
                if config.cache_block_pinv:
                    key = (bi, bj)
                    if key not in state.pinv_cache:
                        state.pinv_cache[key] = _block_pinvs(
                            state, I, J, config.rank_tol
                        )
                    grbk_step(state, I, J, _cached=state.pinv_cache[key])
                else:
                    grbk_step(state, I, J, rank_tol=config.rank_tol)
            elif config.method == GRABK_CONST:
                grabk_step(
                    state,
                    I,
                    J,
                    state.row_weights[bi],
                    state.col_weights[bj],
                    state.alpha_const,
                )
            else:  # GRABK_ADAPTIVE
                L = _grabk_adaptive_apply(
                    state,
                    I,
                    J,
                    state.row_weights_hat[bi],
                    state.col_weights_hat[bj],
                )
                if L is not None:
                    l_values.append(L)
        k += 1
        state.k = k
        metric = stop_metric()
        elapsed = time.perf_counter() - t0
        hit_tol = metric < config.re_tolerance
        hit_time = config.max_seconds is not None and elapsed > config.max_seconds
        final = hit_tol or hit_time or k == config.max_iters
        if final or k % config.trace_every == 0:
            record(k, elapsed)
        if hit_tol:
            termination = "tolerance"
            break
        if hit_time:
            termination = "time_limit"
            break

    return ConvergenceReport(
        records=records,
        termination=termination,
        X=current_X().copy(),
        iterations=k,
        stepsizes=l_values,
    )
