"""Dense elimination helpers shared by the solvers and the rank oracle."""

import numpy as np

from .errors import SingularSystem

# A pivot counts as zero when |pivot| <= PIVOT_RTOL * ||M||_inf.
PIVOT_RTOL = 1e-8


def rref(M, rtol=PIVOT_RTOL):
    """Reduced row echelon form by Gauss-Jordan elimination with partial pivoting.

    Returns ``(R, pivots)`` where ``pivots`` lists the pivot columns. A
    column whose largest remaining entry is at most ``rtol * ||M||_inf`` is
    treated as free.
    """
    R = np.array(M, dtype=np.float64, copy=True)
    rows, cols = R.shape
    scale = np.abs(R).sum(axis=1).max() if R.size else 0.0
    tol = rtol * scale
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        k = r + int(np.argmax(np.abs(R[r:, c])))
        if abs(R[k, c]) <= tol:
            R[r:, c] = 0.0
            continue
        if k != r:
            R[[r, k]] = R[[k, r]]
        R[r] /= R[r, c]
        others = np.arange(rows) != r
        R[others] -= np.outer(R[others, c], R[r])
        R[others, c] = 0.0
        pivots.append(c)
        r += 1
    return R, pivots


def null_space_basis(M, rtol=PIVOT_RTOL):
    """``(dim, basis)`` of the right null space of ``M``; basis rows have unit 2-norm."""
    M = np.asarray(M, dtype=np.float64)
    R, pivots = rref(M, rtol)
    cols = M.shape[1]
    free = [c for c in range(cols) if c not in set(pivots)]
    basis = np.zeros((len(free), cols))
    for j, f in enumerate(free):
        v = basis[j]
        v[f] = 1.0
        for r, c in enumerate(pivots):
            v[c] = -R[r, f]
        v /= np.linalg.norm(v)
    return len(free), basis + 0.0  # no negative zeros


def solve(A, b):
    """Solve ``A x = b`` (LU with partial pivoting, one refinement step)."""
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if A.shape[0] == 0:
        return np.zeros(b.shape)
    try:
        x = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from None
    x = x + np.linalg.solve(A, b - A @ x)
    if not np.all(np.isfinite(x)):
        raise SingularSystem("non-finite solution")
    return x
