"""Small dense symmetric linear algebra.

Everything here works on float64 numpy arrays. Matrices are tiny (latent
dimension, rarely above a few dozen), so the routines favour accuracy and
determinism over speed: a hand written Cholesky factorization, a cyclic
Jacobi eigensolver and the Cholesky reduction of the symmetric-definite
generalized problem ``A e = v B e``.

Like ``numpy.linalg``, every routine also accepts a stack of matrices with
shape ``(..., n, n)`` and works on all of them at once.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NoConvergence, NotPositiveDefinite, ShapeMismatch

SYMMETRY_TOL = 1e-10
MAX_SWEEPS = 100
OFFDIAG_TOL = 1e-12
_TINY = np.finfo(np.float64).tiny


@dataclass(frozen=True)
class EigenSolution:
    """Ascending eigenvalues and matching eigenvectors (as columns)."""

    values: np.ndarray
    vectors: np.ndarray

    def top(self, m):
        """The ``m`` largest eigenpairs, still in ascending order."""
        return EigenSolution(self.values[..., -m:], self.vectors[..., :, -m:])


def _as_square(m, name):
    m = np.asarray(m, dtype=np.float64)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2] or m.shape[-1] < 1:
        raise ShapeMismatch(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def _t(m):
    return np.swapaxes(m, -1, -2)


def symmetrize(m, name="matrix"):
    """Return ``(m + m.T) / 2`` after checking ``m`` is symmetric up to rounding."""
    m = _as_square(m, name)
    scale = 1.0 + np.abs(m).max()
    if np.abs(m - _t(m)).max() > SYMMETRY_TOL * scale:
        raise ValueError(f"{name} is not symmetric")
    return 0.5 * (m + _t(m))


def inf_norm(m):
    """Max absolute row sum."""
    return float(np.abs(m).sum(axis=-1).max())


def cholesky(b):
    """Lower triangular ``L`` with ``b = L @ L.T``.

    Raises NotPositiveDefinite when a pivot is not strictly positive.
    """
    b = symmetrize(b, "B")
    n = b.shape[-1]
    low = np.zeros_like(b)
    for j in range(n):
        row = low[..., j, :j]
        pivot = b[..., j, j] - np.sum(row * row, axis=-1)
        if not np.all(pivot > 0.0):
            raise NotPositiveDefinite(
                f"pivot {j} is {np.min(pivot):.3e}; matrix is not positive definite"
            )
        low[..., j, j] = np.sqrt(pivot)
        if j + 1 < n:
            below = b[..., j + 1:, j] - np.einsum("...ik,...k->...i", low[..., j + 1:, :j], row)
            low[..., j + 1:, j] = below / low[..., j, j, None]
    return low


def solve_lower(low, rhs):
    """Forward substitution for ``low @ x = rhs`` (rhs is ``(..., n, m)``)."""
    rhs = np.asarray(rhs, dtype=np.float64)
    x = np.zeros(np.broadcast_shapes(low.shape[:-2], rhs.shape[:-2]) + rhs.shape[-2:])
    for i in range(low.shape[-1]):
        acc = np.einsum("...k,...km->...m", low[..., i, :i], x[..., :i, :])
        x[..., i, :] = (rhs[..., i, :] - acc) / low[..., i, i, None]
    return x


def solve_upper(up, rhs):
    """Back substitution for ``up @ x = rhs``."""
    rhs = np.asarray(rhs, dtype=np.float64)
    x = np.zeros(np.broadcast_shapes(up.shape[:-2], rhs.shape[:-2]) + rhs.shape[-2:])
    for i in range(up.shape[-1] - 1, -1, -1):
        acc = np.einsum("...k,...km->...m", up[..., i, i + 1:], x[..., i + 1:, :])
        x[..., i, :] = (rhs[..., i, :] - acc) / up[..., i, i, None]
    return x


@lru_cache(maxsize=None)
def _round_robin(n):
    """Rounds of disjoint index pairs covering every pair exactly once.

    Classic tournament scheduling; for odd ``n`` a dummy player sits out.
    Each round is returned as ``(p, q, rows, cols)`` where ``rows, cols``
    address the four rotation entries (pp, qq, pq, qp) in one go.
    """
    players = list(range(n + (n % 2)))
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[i], players[m - 1 - i]) for i in range(m // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n]
        if pairs:
            p, q = np.array(pairs).T
            rows = np.concatenate((p, q, p, q))
            cols = np.concatenate((p, q, q, p))
            rounds.append((p, q, rows, cols))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return tuple(rounds)


def _fix_signs(vectors):
    """Flip each column so its largest-magnitude entry is positive."""
    idx = np.abs(vectors).argmax(axis=-2)[..., None, :]
    signs = np.sign(np.take_along_axis(vectors, idx, axis=-2))
    signs[signs == 0] = 1.0
    return vectors * signs


def sym_eigen(s):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Each sweep visits all off-diagonal pairs in round-robin order, so the
    rotations inside a round act on disjoint index pairs and are applied
    together as one orthogonal similarity.
    """
    a = symmetrize(s, "S").copy()
    n = a.shape[-1]
    v = np.broadcast_to(np.eye(n), a.shape).copy()
    upper = np.triu_indices(n, 1)
    threshold = OFFDIAG_TOL * np.sqrt(np.sum(a * a, axis=(-2, -1)))
    rounds = _round_robin(n)
    eye = np.broadcast_to(np.eye(n), a.shape)

    def converged(m):
        off = np.sqrt(2.0 * np.sum(m[..., upper[0], upper[1]] ** 2, axis=-1))
        return bool(np.all(off <= threshold))

    for _ in range(MAX_SWEEPS):
        if converged(a):
            break
        for p, q, rows, cols in rounds:
            # t = tan(theta), |theta| <= pi/4, of the rotation zeroing a[p, q];
            # written without dividing by a[p, q] so zero entries give t = 0
            apq2 = 2.0 * a[..., p, q]
            diff = a[..., q, q] - a[..., p, p]
            t = apq2 * np.copysign(1.0, diff) / (np.abs(diff) + np.hypot(diff, apq2) + _TINY)
            c = 1.0 / np.sqrt(1.0 + t * t)
            sn = t * c
            rot = eye.copy()
            rot[..., rows, cols] = np.concatenate((c, c, sn, -sn), axis=-1)
            a = _t(rot) @ a @ rot
            a[..., rows[2 * len(p):], cols[2 * len(p):]] = 0.0
            v = v @ rot
    else:
        if not converged(a):
            raise NoConvergence(f"Jacobi did not converge in {MAX_SWEEPS} sweeps")

    values = np.diagonal(a, axis1=-2, axis2=-1)
    order = np.argsort(values, axis=-1, kind="stable")
    values = np.take_along_axis(values, order, axis=-1)
    vectors = np.take_along_axis(v, order[..., None, :], axis=-1)
    return EigenSolution(values, _fix_signs(vectors))


def generalized_eigen(a, b):
    """Solve ``a e = v b e`` for symmetric ``a`` and positive definite ``b``.

    Uses the Cholesky reduction ``L^-1 a L^-T y = v y``, ``e = L^-T y``, so
    the returned eigenvectors satisfy ``E.T @ b @ E = I``.
    """
    a = symmetrize(a, "A")
    b = symmetrize(b, "B")
    if a.shape[-1] != b.shape[-1]:
        raise ShapeMismatch(f"A {a.shape} and B {b.shape} differ in size")
    low = cholesky(b)
    tmp = solve_lower(low, a)              # L^-1 A
    reduced = solve_lower(low, _t(tmp))    # L^-1 A L^-T (A symmetric)
    inner = sym_eigen(0.5 * (reduced + _t(reduced)))
    vectors = solve_upper(_t(low), inner.vectors)
    return EigenSolution(inner.values, _fix_signs(vectors))
