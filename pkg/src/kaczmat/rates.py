"""Closed-form convergence-rate and spectral-constant calculators.

These are the per-iteration expected decay factors of the solver family
under Frobenius-weighted partition sampling. They serve as oracles in
statistical tests: observed mean squared errors must stay below the
predicted geometric envelopes.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .matrices import as_dense, col_norms, frobenius_norm, row_norms, sigma_extremes
from .sampling import frobenius_block_probs


def _block_submatrix(M, partition, b, axis):
    sl = partition.block_slice(b)
    block = M[sl, :] if axis == "rows" else M[:, sl]
    if sp.issparse(block):
        block = block.toarray()
    return np.asarray(block, dtype=np.float64)


def _check_axis(M, partition, axis):
    if axis not in ("rows", "cols"):
        raise ValueError(f"axis must be 'rows' or 'cols', got {axis!r}")
    length = M.shape[0] if axis == "rows" else M.shape[1]
    if partition.dim != length:
        raise ValueError(
            f"partition covers {partition.dim} indices but matrix has {length}"
        )


def beta_max(M, partition, axis):
    """Largest ratio sigma_max(block) / ||block||_F over the partition blocks.

    Always in (0, 1]; equals 1 when every block is a single row or column.
    Raises ValueError if some block is entirely zero.
    """
    _check_axis(M, partition, axis)
    worst = 0.0
    for b in range(partition.n_blocks):
        block = _block_submatrix(M, partition, b, axis)
        fro = np.linalg.norm(block, "fro")
        if fro == 0.0:
            raise ValueError(f"block {b} of the partition is zero")
        smax = np.linalg.svd(block, compute_uv=False)[0]
        worst = max(worst, smax / fro)
    return float(worst)


def gamma_max(M, partition, axis):
    """Largest top singular value over blocks after row/column normalization.

    For a row partition each block row is scaled to unit norm; for a column
    partition each block column is. Raises ValueError on a zero row/column
    inside any block.
    """
    _check_axis(M, partition, axis)
    worst = 0.0
    for b in range(partition.n_blocks):
        block = _block_submatrix(M, partition, b, axis)
        if axis == "rows":
            norms = np.sqrt(np.sum(block * block, axis=1))
            if np.any(norms == 0.0):
                raise ValueError(f"zero row inside block {b}")
            normalized = block / norms[:, None]
        else:
            norms = np.sqrt(np.sum(block * block, axis=0))
            if np.any(norms == 0.0):
                raise ValueError(f"zero column inside block {b}")
            normalized = block / norms[None, :]
        worst = max(worst, np.linalg.svd(normalized, compute_uv=False)[0])
    return float(worst)


def weighting_sigma_min(M, partition, axis):
    """Smallest nonzero singular value of the sampling/normalization operator.

    Under partition sampling with Frobenius-proportional block probabilities
    the operator is diagonal, so this reduces to the minimum over blocks of
    sqrt(P(block)) / (largest row or column norm inside the block).
    Zero-probability blocks are skipped.
    """
    _check_axis(M, partition, axis)
    probs = frobenius_block_probs(M, partition, axis).probabilities
    norms = row_norms(M) if axis == "rows" else col_norms(M)
    best = np.inf
    for b in range(partition.n_blocks):
        if probs[b] == 0.0:
            continue
        biggest = norms[partition.block_slice(b)].max()
        best = min(best, np.sqrt(probs[b]) / biggest)
    return float(best)


def grk_rate(A, B):
    """Expected decay factor of the single-index method:
    1 - sigma_min^2(A) sigma_min^2(B) / (||A||_F^2 ||B||_F^2)."""
    _, smin_a = sigma_extremes(A)
    _, smin_b = sigma_extremes(B)
    fa = smin_a**2 / frobenius_norm(A) ** 2
    fb = smin_b**2 / frobenius_norm(B) ** 2
    return 1.0 - fa * fb


def _block_factor(M, partition, axis):
    _, smin = sigma_extremes(M)
    beta = beta_max(M, partition, axis)
    return smin**2 / (frobenius_norm(M) ** 2 * beta**2)


def grbk_rate(A, B, partition_a, partition_b):
    """Expected decay factor of block projection under partition sampling."""
    return 1.0 - _block_factor(A, partition_a, "rows") * _block_factor(
        B, partition_b, "cols"
    )


def grabk_const_rate(A, B, partition_a, partition_b, eta):
    """Decay factor of the averaged method, Frobenius weights, constant step.

    Equals the block-projection factor damped by eta*(2-eta); at eta=1 the
    two coincide.
    """
    if not 0.0 < eta < 2.0:
        raise ValueError(f"eta must be in (0, 2), got {eta}")
    damp = eta * (2.0 - eta)
    return 1.0 - damp * _block_factor(A, partition_a, "rows") * _block_factor(
        B, partition_b, "cols"
    )


def grabk_adaptive_rate(A, B, partition_a, partition_b, eta):
    """Decay factor of the averaged method with the adaptive stepsize.

    Shares the constant-stepsize closed form under Frobenius weights; the
    adaptive rule only improves the per-iteration constant in practice.
    """
    return grabk_const_rate(A, B, partition_a, partition_b, eta)


def general_grabk_rate(
    A, B, partition_a, partition_b, eta, u_min, u_max, v_min, v_max
):
    """Decay factor of the averaged method for arbitrary bounded weights.

    Combines the weight-spread penalty
    u_min^2 v_min^2 / (u_max^2 v_max^2 gamma_max^2(A) gamma_max^2(B))
    with the spectra of the diagonal sampling operators and of A, B.
    """
    if not 0.0 < eta < 2.0:
        raise ValueError(f"eta must be in (0, 2), got {eta}")
    if not (0.0 < u_min <= u_max < 1.0 and 0.0 < v_min <= v_max < 1.0):
        raise ValueError("weights must satisfy 0 < min <= max < 1")
    ga = gamma_max(A, partition_a, "rows")
    gb = gamma_max(B, partition_b, "cols")
    phi = (u_min**2 * v_min**2) / (u_max**2 * v_max**2 * ga**2 * gb**2)
    da = weighting_sigma_min(A, partition_a, "rows")
    db = weighting_sigma_min(B, partition_b, "cols")
    _, smin_a = sigma_extremes(A)
    _, smin_b = sigma_extremes(B)
    damp = eta * (2.0 - eta)
    return 1.0 - damp * phi * da**2 * db**2 * smin_a**2 * smin_b**2


@dataclass(frozen=True)
class RateBundle:
    """Spectral constants of a problem instance plus per-method decay factors."""

    sigma_min_a: float
    sigma_min_b: float
    frob_a: float
    frob_b: float
    beta_max_a: float
    beta_max_b: float
    gamma_max_a: float
    gamma_max_b: float
    grk: float
    grbk: float
    grabk_const: float
    grabk_adaptive: float


def rate_bundle(A, B, partition_a, partition_b, eta_const=1.95, eta_adaptive=1.0):
    """Evaluate every spectral constant and decay factor for one instance."""
    A = A if sp.issparse(A) else as_dense(A)
    B = B if sp.issparse(B) else as_dense(B)
    _, smin_a = sigma_extremes(A)
    _, smin_b = sigma_extremes(B)
    return RateBundle(
        sigma_min_a=smin_a,
        sigma_min_b=smin_b,
        frob_a=frobenius_norm(A),
        frob_b=frobenius_norm(B),
        beta_max_a=beta_max(A, partition_a, "rows"),
        beta_max_b=beta_max(B, partition_b, "cols"),
        gamma_max_a=gamma_max(A, partition_a, "rows"),
        gamma_max_b=gamma_max(B, partition_b, "cols"),
        grk=grk_rate(A, B),
        grbk=grbk_rate(A, B, partition_a, partition_b),
        grabk_const=grabk_const_rate(A, B, partition_a, partition_b, eta_const),
        grabk_adaptive=grabk_adaptive_rate(
            A, B, partition_a, partition_b, eta_adaptive
        ),
    )
