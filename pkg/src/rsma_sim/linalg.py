"""Complex Hermitian linear algebra, block-diagonal solves, and seeded sampling.

Everything here operates on plain complex numpy arrays. The block-diagonal
container mirrors the structure of the solver's iteration matrices, whose
inversion cost must stay linear in the number of blocks.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConvergenceFailure, DimensionMismatch, SingularMatrix

# Relative pivot tolerance for the symmetric-pivoting factorization. The
# iteration matrices are positive definite in practice but approach
# singularity at extreme SNR, so near-zero pivots must raise instead of
# returning garbage.
PIVOT_RTOL = 1e-14


@dataclass(frozen=True)
class BlockDiag:
    """Block-diagonal Hermitian matrix stored as a (m, n, n) stack.

    Block j acts on the j-th length-n slice of a stacked vector.
    """

    blocks: np.ndarray

    def __post_init__(self):
        blocks = np.ascontiguousarray(np.asarray(self.blocks, dtype=complex))
        if blocks.ndim != 3 or blocks.shape[1] != blocks.shape[2]:
            raise DimensionMismatch(f"expected (m, n, n) block stack, got {blocks.shape}")
        herm_err = np.abs(blocks - blocks.conj().transpose(0, 2, 1)).max()
        scale = max(np.abs(blocks).max(), 1.0)
        if herm_err > 1e-12 * scale:
            raise DimensionMismatch(f"blocks are not Hermitian (deviation {herm_err:.3e})")
        object.__setattr__(self, "blocks", blocks)

    @property
    def n_blocks(self):
        return self.blocks.shape[0]

    @property
    def block_dim(self):
        return self.blocks.shape[1]

    @property
    def size(self):
        return self.n_blocks * self.block_dim

    def matvec(self, v):
        """Apply the block-diagonal matrix to a stacked vector."""
        cols = np.asarray(v, dtype=complex).reshape(self.n_blocks, self.block_dim)
        return np.einsum("bij,bj->bi", self.blocks, cols).reshape(-1)

    def to_dense(self):
        """Assemble the full dense matrix (test/diagnostic use)."""
        n, m = self.block_dim, self.n_blocks
        out = np.zeros((m * n, m * n), dtype=complex)
        for j in range(m):
            out[j * n : (j + 1) * n, j * n : (j + 1) * n] = self.blocks[j]
        return out


def hermitian_solve(a, b):
    """Solve ``a @ x = b`` for Hermitian ``a`` via an LDL^H factorization.

    Parameters
    ----------
    a : (n, n) complex Hermitian matrix
    b : (n,) or (n, k) right-hand side

    Raises
    ------
    SingularMatrix
        If any pivot magnitude falls below ``PIVOT_RTOL * ||a||_F``.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"matrix must be square, got {a.shape}")
    if b.shape[0] != a.shape[0]:
        raise DimensionMismatch(f"rhs length {b.shape[0]} != matrix size {a.shape[0]}")

    # LAPACK ignores the imaginary part of the diagonal; strip the rounding
    # noise explicitly so the factorization sees an exactly Hermitian matrix.
    a = a.copy()
    np.fill_diagonal(a, a.diagonal().real)

    lu, d, perm = scipy.linalg.ldl(a, hermitian=True)
    pivots = np.abs(scipy.linalg.eigvalsh(d))
    tol = PIVOT_RTOL * np.linalg.norm(a)
    if pivots.size and pivots.min() <= tol:
        raise SingularMatrix(
            f"pivot {pivots.min():.3e} below tolerance {tol:.3e}"
        )

    lower = lu[perm, :]
    z = scipy.linalg.solve_triangular(lower, b[perm], lower=True, unit_diagonal=True)
    y = np.linalg.solve(d, z)
    xp = scipy.linalg.solve_triangular(
        lower.conj().T, y, lower=False, unit_diagonal=True
    )
    x = np.empty_like(xp)
    x[perm] = xp
    return x


def blockdiag_solve(bd, v):
    """Solve ``bd @ x = v`` one block at a time.

    Equivalent to a dense Hermitian solve on the assembled matrix but with
    cost linear in the number of blocks. A singular block is reported with
    its index.
    """
    v = np.asarray(v, dtype=complex)
    if v.shape[0] != bd.size:
        raise DimensionMismatch(f"vector length {v.shape[0]} != {bd.size}")
    n = bd.block_dim
    out = np.empty(bd.size, dtype=complex)
    for j in range(bd.n_blocks):
        try:
            out[j * n : (j + 1) * n] = hermitian_solve(bd.blocks[j], v[j * n : (j + 1) * n])
        except SingularMatrix as exc:
            raise SingularMatrix(f"block {j} singular: {exc}", block_index=j) from exc
    return out


def canonical_phase(v):
    """Rotate a complex vector so its largest-magnitude entry is real positive.

    Eigenvectors and stacked precoders carry an arbitrary global phase;
    pinning it makes vector differences across iterations and runs
    well defined. The zero vector is returned unchanged.
    """
    v = np.asarray(v, dtype=complex)
    idx = int(np.argmax(np.abs(v)))
    pivot = v[idx]
    if pivot == 0:
        return v.copy()
    return v * (np.conj(pivot) / np.abs(pivot))


def principal_gep_oracle(a, b):
    """Largest-eigenvalue pair of the Hermitian pencil ``b^{-1} a``.

    Dense reference solver used to cross-check iterative eigenvector
    computations. ``b`` must be positive definite.

    Returns
    -------
    (eigenvalue, eigenvector)
        Eigenvector has unit norm and canonical phase.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"incompatible pencil shapes {a.shape}, {b.shape}")
    try:
        vals, vecs = scipy.linalg.eigh(a, b)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise ConvergenceFailure(f"dense generalized eigensolver failed: {exc}") from exc
    vec = vecs[:, -1]
    vec = vec / np.linalg.norm(vec)
    return float(vals[-1]), canonical_phase(vec)


def seeded_rng(seed):
    """Counter-based (Philox) generator: same seed, same draws, any platform."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def trial_rng(base_seed, trial_index):
    """Independent per-trial stream keyed on (base_seed, trial_index).

    Streams do not overlap and do not depend on the order in which trials
    execute, which keeps parallel Monte Carlo runs deterministic.
    """
    ss = np.random.SeedSequence(base_seed, spawn_key=(trial_index,))
    return np.random.Generator(np.random.Philox(ss))


def sample_complex_gaussian(rng, n):
    """Draw n i.i.d. circularly symmetric complex normal values.

    Zero mean, unit variance: real and imaginary parts each carry
    variance 1/2.
    """
    if n < 1:
        raise DimensionMismatch(f"need n >= 1, got {n}")
    return (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
