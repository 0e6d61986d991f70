"""Point counters for two explicit matrix schemes, each with two
independent counting strategies.

Unitary type: symmetric n x n matrices A over F_p with A^2 = 0 and
rank(A) <= min(r, s).  The wedge-power conditions are rank bounds at
field points, and det(T*I - A) = T^n holds identically for square-zero
A (checked as a property, not per point).

Symplectic type: block matrices A = (a b; 0 a^t) of size 2n (n = g*e)
with a nilpotent, b alternating, and A^e = 0.  Alternating means skew
symmetric with zero diagonal in every characteristic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadRanks, BudgetExceeded
from .linalg import Field, _rref

_DIRECT_LIMIT = 10**8


@dataclass(frozen=True)
class UnitaryCount:
    total: int
    by_rank: tuple  # ((rank, count), ...)


def _symmetric_batch(n, p, flat_indices):
    """Symmetric matrices for a batch of mixed-radix upper-triangle digits."""
    m = n * (n + 1) // 2
    powers = p ** np.arange(m, dtype=np.int64)
    digits = (flat_indices[:, None] // powers) % p
    iu, ju = np.triu_indices(n)
    a = np.zeros((len(flat_indices), n, n), dtype=np.int64)
    a[:, iu, ju] = digits
    a[:, ju, iu] = digits
    return a


def unitary_points_direct(n, r, s, p, chunk=1 << 17) -> UnitaryCount:
    """Direct scan over all symmetric matrices."""
    _check_unitary(n, r, s, p)
    m = n * (n + 1) // 2
    if p**m > _DIRECT_LIMIT:
        raise BudgetExceeded(f"{p}^{m} symmetric matrices exceeds the scan limit")
    bound = min(r, s)
    total = p**m
    hist = {}
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        batch = _symmetric_batch(n, p, idx)
        sq = np.einsum("aij,ajk->aik", batch, batch) % p
        for a in batch[~sq.any(axis=(1, 2))]:
            _, pivots = _rref(a, p)
            rk = len(pivots)
            if rk <= bound:
                hist[rk] = hist.get(rk, 0) + 1
    return UnitaryCount(sum(hist.values()), tuple(sorted(hist.items())))


def _isotropic_subspace_count(n, k, p):
    """k-dim totally isotropic subspaces for the standard symmetric form."""
    from .linalg import enumerate_subspaces

    field = Field(p)
    count = 0
    for sub in enumerate_subspaces(n, k, field):
        if not (sub.basis @ sub.basis.T % p).any():
            count += 1
    return count


def _invertible_symmetric_count(k, p):
    if k == 0:
        return 1
    m = k * (k + 1) // 2
    if p**m > _DIRECT_LIMIT:
        raise BudgetExceeded(f"{p}^{m} symmetric matrices exceeds the scan limit")
    idx = np.arange(p**m, dtype=np.int64)
    count = 0
    for start in range(0, len(idx), 1 << 17):
        batch = _symmetric_batch(k, p, idx[start : start + (1 << 17)])
        for a in batch:
            _, pivots = _rref(a, p)
            if len(pivots) == k:
                count += 1
    return count


def unitary_points_stratified(n, r, s, p) -> UnitaryCount:
    """Stratified count: A = C S C^t over isotropic column spaces.

    A square-zero symmetric A of rank k has totally isotropic column
    space (col A is contained in ker A = (col A)-perp), and conversely
    every pair (k-dim isotropic U, invertible symmetric k x k matrix S)
    yields exactly one such A.
    """
    _check_unitary(n, r, s, p)
    hist = {}
    for k in range(min(r, s) + 1):
        c = _isotropic_subspace_count(n, k, p) * _invertible_symmetric_count(k, p)
        if c:
            hist[k] = c
    return UnitaryCount(sum(hist.values()), tuple(sorted(hist.items())))


def _check_unitary(n, r, s, p):
    Field(p)
    if n < 1 or r < 0 or s < 0:
        raise BadRanks("need n >= 1 and nonnegative rank bounds")


def _alternating_basis(n):
    """Basis of the alternating n x n matrices (skew, zero diagonal)."""
    out = []
    for i in range(n):
        for j in range(i + 1, n):
            b = np.zeros((n, n), dtype=np.int64)
            b[i, j] = 1
            b[j, i] = -1
            out.append(b)
    return out


def _nilpotent_matrices(n, p, e):
    """All a with charpoly T^n (equivalently a^n = 0) and a^e = 0."""
    powers = p ** np.arange(n * n, dtype=np.int64)
    out = []
    for flat in range(p ** (n * n)):
        a = ((flat // powers) % p).reshape(n, n)
        power = np.eye(n, dtype=np.int64)
        for _ in range(min(n, e)):
            power = power @ a % p
        if not power.any():
            out.append(a)
    return out


def symplectic_P_points(g, e, p, strategy="direct") -> int:
    """Count block matrices (a b; 0 a^t), a nilpotent of size ge, b
    alternating, with A^e = 0.

    'direct' scans all (a, b) pairs; 'linear' enumerates a and counts
    the solution space of the linear condition on b, namely
    sum_{i+j=e-1} a^i b (a^t)^j = 0.
    """
    n = g * e
    Field(p)
    if n > 2 or p > 3:
        raise BudgetExceeded("symplectic scan restricted to ge <= 2, p <= 3")
    if strategy not in ("direct", "linear"):
        raise ValueError(f"unknown strategy {strategy!r}")
    nilpotents = _nilpotent_matrices(n, p, e)
    basis = _alternating_basis(n)

    def block_condition(a, b):
        # upper-right block of A^e: sum over a^i b (a^t)^j, i + j = e - 1
        acc = np.zeros((n, n), dtype=np.int64)
        for i in range(e):
            left = np.linalg.matrix_power(a, i) % p if i else np.eye(n, dtype=np.int64)
            right = np.linalg.matrix_power(a.T, e - 1 - i) % p if e - 1 - i else np.eye(n, dtype=np.int64)
            acc = (acc + left @ b @ right) % p
        return acc % p

    total = 0
    if strategy == "direct":
        m = len(basis)
        powers = p ** np.arange(m, dtype=np.int64) if m else np.zeros(0, dtype=np.int64)
        for a in nilpotents:
            for flat in range(p**m):
                digits = (flat // powers) % p if m else ()
                b = np.zeros((n, n), dtype=np.int64)
                for d, bb in zip(digits, basis):
                    b = b + int(d) * bb
                if not (block_condition(a, b % p)).any():
                    total += 1
        return total
    for a in nilpotents:
        if not basis:
            total += 1
            continue
        cols = [block_condition(a, bb).reshape(-1) % p for bb in basis]
        mat = np.stack(cols, axis=1)
        _, pivots = _rref(mat, p)
        total += p ** (len(basis) - len(pivots))
    return total
