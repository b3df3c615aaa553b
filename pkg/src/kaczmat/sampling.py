"""Contiguous block partitions and reproducible Frobenius-weighted block sampling."""

from dataclasses import dataclass, field

import numpy as np

from .matrices import col_norms, row_norms

RNG_ALGORITHM = "philox4x64"


class SeededRng:
    """Deterministic random stream backed by the counter-based Philox generator.

    Identical seeds give identical draws on every platform, which makes
    solver traces and generated problems byte-reproducible. Each instance is
    single-owner: do not share one between concurrent samplers.

    ``stream`` selects a disjoint substream for the same seed (the seed
    occupies the low 64 bits of the Philox key, the stream the next 64), so
    problem generation and solver sampling can share one user-facing seed
    without replaying each other's draws.
    """

    algorithm = RNG_ALGORITHM

    def __init__(self, seed, stream=0):
        self.seed = int(seed)
        self.stream = int(stream)
        if self.stream < 0:
            raise ValueError("stream must be nonnegative")
        key = (self.seed & 0xFFFFFFFFFFFFFFFF) | (self.stream << 64)
        self._gen = np.random.Generator(np.random.Philox(key=key))
        self.position = 0  # scalars drawn so far

    def uniform(self):
        """One uniform draw in [0, 1)."""
        self.position += 1
        return float(self._gen.random())

    def standard_normal(self, shape):
        out = self._gen.standard_normal(size=shape)
        self.position += int(np.prod(shape))
        return out

    def uniform_array(self, n):
        out = self._gen.random(size=n)
        self.position += int(n)
        return out

    def spawn(self, offset):
        """Independent stream for a derived task (seed + offset)."""
        return SeededRng(self.seed + int(offset), self.stream)


@dataclass(frozen=True)
class BlockPartition:
    """Ordered disjoint cover of range(dim) by contiguous blocks.

    All blocks have length ``block_size`` except possibly the last, which
    holds the remainder. ``bounds[b]:bounds[b+1]`` are the 0-based indices of
    block ``b``.
    """

    dim: int
    block_size: int
    bounds: np.ndarray = field(repr=False)

    @property
    def n_blocks(self):
        return len(self.bounds) - 1

    def block(self, b):
        """Index array of block b."""
        return np.arange(self.bounds[b], self.bounds[b + 1])

    def block_slice(self, b):
        return slice(int(self.bounds[b]), int(self.bounds[b + 1]))

    def blocks(self):
        return [self.block(b) for b in range(self.n_blocks)]


def make_partition(dim, tau):
    """Partition range(dim) into ceil(dim/tau) contiguous blocks of size tau.

    The final block covers the remainder and may be shorter. Raises
    ValueError unless 1 <= tau <= dim.
    """
    dim = int(dim)
    tau = int(tau)
    if dim < 1:
        raise ValueError(f"dim must be positive, got {dim}")
    if tau < 1 or tau > dim:
        raise ValueError(f"block size must satisfy 1 <= tau <= {dim}, got {tau}")
    bounds = np.arange(0, dim, tau)
    bounds = np.append(bounds, dim)
    return BlockPartition(dim=dim, block_size=tau, bounds=bounds)


@dataclass(frozen=True)
class CategoricalDistribution:
    """Finite distribution over block indices with precomputed CDF."""

    probabilities: np.ndarray
    cumulative: np.ndarray

    def __post_init__(self):
        p = self.probabilities
        if np.any(p < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(float(p.sum()) - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {p.sum()}, expected 1")


def categorical(probabilities):
    p = np.asarray(probabilities, dtype=np.float64)
    return CategoricalDistribution(probabilities=p, cumulative=np.cumsum(p))


def frobenius_block_probs(M, partition, axis):
    """Block sampling distribution proportional to squared Frobenius norms.

    Parameters
    ----------
    M : dense or sparse matrix
    partition : BlockPartition
        Over the rows (axis="rows") or columns (axis="cols") of M.
    axis : {"rows", "cols"}

    Block b gets probability ||M_block||_F^2 / ||M||_F^2; zero-norm blocks
    get probability zero and are never sampled. Raises ValueError for a zero
    matrix or an axis-length mismatch.
    """
    if axis == "rows":
        per_index_sq = row_norms(M) ** 2
    elif axis == "cols":
        per_index_sq = col_norms(M) ** 2
    else:
        raise ValueError(f"axis must be 'rows' or 'cols', got {axis!r}")
    if partition.dim != per_index_sq.size:
        raise ValueError(
            f"partition covers {partition.dim} indices but matrix has "
            f"{per_index_sq.size} along axis {axis!r}"
        )
    total = float(per_index_sq.sum())
    if total == 0.0:
        raise ValueError("cannot build block probabilities for a zero matrix")
    block_sq = np.add.reduceat(per_index_sq, partition.bounds[:-1])
    return categorical(block_sq / total)


def sample_block(dist, rng):
    """Draw one block index by inverse CDF using a single uniform draw.

    Ties break toward the lower index (first cumulative >= u), so zero-mass
    blocks are never returned.
    """
    u = rng.uniform()
    idx = int(np.searchsorted(dist.cumulative, u, side="left"))
    return min(idx, len(dist.cumulative) - 1)
