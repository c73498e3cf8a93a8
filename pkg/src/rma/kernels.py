"""Dense matrix kernels over 64-bit floats.

Matrices are plain 2-D ``numpy.float64`` arrays.  Every kernel is
deterministic: products accumulate in ascending index order and the
iterative methods run a fixed, data-independent rotation schedule.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import (
    DimensionMismatchError,
    MatrixError,
    NonConvergenceError,
    NonSymmetricError,
    NotPositiveDefiniteError,
    RankDeficientError,
    SingularMatrixError,
)

EPS = np.finfo(np.float64).eps
PIVOT_TOL = 1e-12
SYMMETRY_TOL = 1e-9
JACOBI_TOL = 1e-12


def check_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise MatrixError(f"expected a 2-D matrix, got {m.ndim} dimension(s)")
    if m.shape[0] < 1 or m.shape[1] < 1:
        raise MatrixError(f"matrix must have at least one row and column, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise MatrixError("matrix holds non-finite values")
    return m


def _require_square(a: np.ndarray, what: str):
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"{what} needs a square matrix, got {a.shape[0]}x{a.shape[1]}")


def _require_tall(a: np.ndarray, what: str):
    if a.shape[0] < a.shape[1]:
        raise DimensionMismatchError(f"{what} needs rows >= cols, got {a.shape[0]}x{a.shape[1]}")


# -- elementwise and products ------------------------------------------------


def elementwise(code: str, a, b) -> np.ndarray:
    a, b = check_matrix(a), check_matrix(b)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"{code} needs equal shapes, got {a.shape} and {b.shape}")
    if code == "ADD":
        return a + b
    if code == "SUB":
        return a - b
    if code == "EMU":
        return a * b
    raise ValueError(f"unknown elementwise code {code}")


def _matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # rank-1 updates in ascending k fix the summation order of every cell
    out = np.zeros((a.shape[0], b.shape[1]))
    for k in range(a.shape[1]):
        out += np.outer(a[:, k], b[k, :])
    return out


def product(code: str, a, b) -> np.ndarray:
    a, b = check_matrix(a), check_matrix(b)
    if code == "MMU":
        if a.shape[1] != b.shape[0]:
            raise DimensionMismatchError(f"MMU needs a.cols == b.rows, got {a.shape} and {b.shape}")
        return _matmul(a, b)
    if code == "CPD":
        if a.shape[0] != b.shape[0]:
            raise DimensionMismatchError(f"CPD needs a.rows == b.rows, got {a.shape} and {b.shape}")
        return _matmul(transpose(a), b)
    if code == "OPD":
        if a.shape[1] != b.shape[1]:
            raise DimensionMismatchError(f"OPD needs a.cols == b.cols, got {a.shape} and {b.shape}")
        return _matmul(a, transpose(b))
    raise ValueError(f"unknown product code {code}")


def transpose(a) -> np.ndarray:
    return np.ascontiguousarray(check_matrix(a).T)


# -- Gauss-Jordan on columns -------------------------------------------------


def gauss_jordan_inverse(columns) -> list[np.ndarray]:
    """Invert a square matrix given as a list of columns.

    Only whole-column primitives are used: scale a column, subtract a
    scaled column, and pick a single value.  Column swaps give partial
    pivoting; they are applied to both lists, so the accumulated result
    needs no unscrambling.
    """
    cols = [np.array(c, dtype=np.float64).reshape(-1) for c in columns]
    n = len(cols)
    if n == 0:
        raise MatrixError("cannot invert an empty matrix")
    if any(len(c) != n for c in cols):
        raise DimensionMismatchError("INV needs n columns of length n")
    if not all(np.all(np.isfinite(c)) for c in cols):
        raise MatrixError("matrix holds non-finite values")
    scale = max(float(np.max(np.abs(c))) for c in cols)
    result = [np.eye(n)[:, j].copy() for j in range(n)]
    for i in range(n):
        p = max(range(i, n), key=lambda j: abs(cols[j][i]))
        pivot = cols[p][i]
        if pivot == 0.0 or abs(pivot) < PIVOT_TOL * scale:
            raise SingularMatrixError(f"matrix is singular (pivot {pivot:.3g} at step {i + 1})")
        if p != i:
            cols[i], cols[p] = cols[p], cols[i]
            result[i], result[p] = result[p], result[i]
        cols[i] = cols[i] / pivot
        result[i] = result[i] / pivot
        for j in range(n):
            if j != i:
                factor = cols[j][i]
                cols[j] = cols[j] - cols[i] * factor
                result[j] = result[j] - result[i] * factor
    return result


def inverse(a) -> np.ndarray:
    a = check_matrix(a)
    _require_square(a, "INV")
    return np.column_stack(gauss_jordan_inverse([a[:, j] for j in range(a.shape[1])]))


# -- LU with partial pivoting ------------------------------------------------


def lu_decompose(a, *, strict: bool = True):
    """Row-pivoted LU.  Returns (lu, perm, sign, singular).

    ``lu`` holds the unit-lower factor below the diagonal and the upper
    factor on and above it.  With ``strict`` a negligible pivot raises.
    """
    a = check_matrix(a)
    _require_square(a, "LU")
    n = a.shape[0]
    lu = a.copy()
    perm = np.arange(n)
    sign = 1.0
    singular = False
    scale = float(np.max(np.abs(a)))
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if lu[p, k] == 0.0 or abs(lu[p, k]) < PIVOT_TOL * scale:
            if strict:
                raise SingularMatrixError(f"matrix is singular (pivot {lu[p, k]:.3g} at step {k + 1})")
            singular = True
            if lu[p, k] == 0.0:
                continue
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            perm[[k, p]] = perm[[p, k]]
            sign = -sign
        lu[k + 1:, k] /= lu[k, k]
        lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
    return lu, perm, sign, singular


def _lu_solve(lu: np.ndarray, perm: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = lu.shape[0]
    x = b[perm].astype(np.float64)
    for i in range(n):
        for k in range(i):
            x[i] -= lu[i, k] * x[k]
    for i in range(n - 1, -1, -1):
        for k in range(i + 1, n):
            x[i] -= lu[i, k] * x[k]
        x[i] /= lu[i, i]
    return x


def solve(a, v) -> np.ndarray:
    a, v = check_matrix(a), check_matrix(v)
    _require_square(a, "SOL")
    if v.shape != (a.shape[0], 1):
        raise DimensionMismatchError(f"SOL needs a {a.shape[0]}x1 right-hand side, got {v.shape}")
    lu, perm, _, _ = lu_decompose(a)
    return _lu_solve(lu, perm, v)


def lu_inverse(a) -> np.ndarray:
    a = check_matrix(a)
    lu, perm, _, _ = lu_decompose(a)
    return _lu_solve(lu, perm, np.eye(a.shape[0]))


def determinant(a) -> float:
    a = check_matrix(a)
    _require_square(a, "DET")
    lu, _, sign, _ = lu_decompose(a, strict=False)
    return float(sign * np.prod(np.diag(lu)))


# -- QR ----------------------------------------------------------------------


def _dot(x: np.ndarray, y: np.ndarray) -> float:
    # exactly rounded, hence independent of row order
    return math.fsum(x * y)


def qr(a):
    """Thin QR with a non-positive diagonal in R.

    Gram-Schmidt with one re-orthogonalisation pass.  Each row of Q is a
    function of the matching row of ``a`` and of exactly rounded column
    sums, so permuting the rows of ``a`` permutes the rows of Q and leaves
    R bit-identical.
    """
    a = check_matrix(a)
    _require_tall(a, "QR")
    m, n = a.shape
    q = np.empty((m, n))
    r = np.zeros((n, n))
    for k in range(n):
        v = a[:, k].copy()
        norm0 = math.sqrt(_dot(v, v))
        for _ in range(2):
            for i in range(k):
                c = _dot(q[:, i], v)
                r[i, k] += c
                v = v - c * q[:, i]
        nv = math.sqrt(_dot(v, v))
        if nv == 0.0 or nv <= PIVOT_TOL * norm0:
            raise RankDeficientError(f"column {k + 1} is linearly dependent on the preceding columns")
        r[k, k] = nv
        q[:, k] = v / nv
    # 0.0 - x flips signs without leaving negative zeros behind
    return 0.0 - q, 0.0 - r


# -- symmetric eigenproblem --------------------------------------------------


def _check_symmetric(a: np.ndarray):
    scale = float(np.max(np.abs(a)))
    if np.max(np.abs(a - a.T)) > SYMMETRY_TOL * max(scale, 1.0):
        raise NonSymmetricError()


def _canonical_sign(vectors: np.ndarray) -> np.ndarray:
    out = vectors.copy()
    for j in range(out.shape[1]):
        k = int(np.argmax(np.abs(out[:, j])))
        if out[k, j] < 0:
            out[:, j] = -out[:, j]
    return out


def eigen_sym(a):
    """Eigenvalues (descending, as an n x 1 matrix) and unit eigenvectors of
    a symmetric matrix, by cyclic Jacobi rotations."""
    a = check_matrix(a)
    _require_square(a, "EIGEN")
    _check_symmetric(a)
    n = a.shape[0]
    w = (a + a.T) / 2.0
    v = np.eye(n)
    fro = float(np.sqrt(np.sum(w * w)))
    off_diagonal = ~np.eye(n, dtype=bool)
    for _ in range(100 * n):
        # summing the off-diagonal squares directly avoids the cancellation
        # of "total minus diagonal"
        off = float(np.sqrt(np.sum(w[off_diagonal] ** 2)))
        if off <= JACOBI_TOL * fro:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if w[p, q] == 0.0:
                    continue
                theta = (w[q, q] - w[p, p]) / (2.0 * w[p, q])
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                wp, wq = w[:, p].copy(), w[:, q].copy()
                w[:, p], w[:, q] = c * wp - s * wq, s * wp + c * wq
                wp, wq = w[p, :].copy(), w[q, :].copy()
                w[p, :], w[q, :] = c * wp - s * wq, s * wp + c * wq
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p], v[:, q] = c * vp - s * vq, s * vp + c * vq
    else:
        raise NonConvergenceError(f"Jacobi eigen solver did not converge in {100 * n} sweeps")
    values = np.diag(w).copy()
    order = np.argsort(-values, kind="stable")
    return values[order].reshape(-1, 1), _canonical_sign(v[:, order])


# -- SVD -----------------------------------------------------------------------


def _complete_basis(basis: np.ndarray, m: int) -> np.ndarray:
    """Extend orthonormal columns to an m x m orthogonal matrix."""
    cols = [basis[:, j] for j in range(basis.shape[1])]
    while len(cols) < m:
        best, best_norm = None, -1.0
        for i in range(m):
            e = np.zeros(m)
            e[i] = 1.0
            for _ in range(2):
                for c in cols:
                    e = e - (c @ e) * c
            nrm = float(np.linalg.norm(e))
            if nrm > best_norm + 1e-12:
                best, best_norm = e, nrm
        cols.append(best / best_norm)
    return np.column_stack(cols)


def _jacobi_svd(a: np.ndarray):
    """One-sided Jacobi: returns (work, v) with work = a v having orthogonal
    columns."""
    m, n = a.shape
    work = a.copy()
    v = np.eye(n)
    for _ in range(100 * max(n, 1)):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                alpha = float(work[:, p] @ work[:, p])
                beta = float(work[:, q] @ work[:, q])
                gamma = float(work[:, p] @ work[:, q])
                if gamma == 0.0 or abs(gamma) <= EPS * math.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                if abs(zeta) > 1e150:
                    t = 0.5 / zeta
                else:
                    t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                wp, wq = work[:, p].copy(), work[:, q].copy()
                work[:, p], work[:, q] = c * wp - s * wq, s * wp + c * wq
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p], v[:, q] = c * vp - s * vq, s * vp + c * vq
        if not rotated:
            return work, v
    raise NonConvergenceError(f"Jacobi SVD did not converge in {100 * n} sweeps")


def singular_values(a) -> np.ndarray:
    a = check_matrix(a)
    if a.shape[0] < a.shape[1]:
        a = a.T
    work, _ = _jacobi_svd(a)
    return np.sort(np.linalg.norm(work, axis=0))[::-1]


def svd(a):
    """Full SVD of a tall matrix: (u m x m, d n x n diagonal, v n x n)."""
    a = check_matrix(a)
    _require_tall(a, "SVD")
    m, n = a.shape
    work, v = _jacobi_svd(a)
    sigma = np.linalg.norm(work, axis=0)
    order = np.argsort(-sigma, kind="stable")
    sigma, work, v = sigma[order], work[:, order], v[:, order]
    tol = max(m, n) * EPS * (sigma[0] if n else 0.0)
    u_cols = []
    for j in range(n):
        k = int(np.argmax(np.abs(v[:, j])))
        if v[k, j] < 0:
            v[:, j] = -v[:, j]
            work[:, j] = -work[:, j]
        if sigma[j] > tol:
            u_cols.append(work[:, j] / sigma[j])
    # left vectors of negligible singular values come from the completion
    u = _complete_basis(np.column_stack(u_cols) if u_cols else np.zeros((m, 0)), m)
    return u, np.diag(sigma), v


def rank(a) -> int:
    s = singular_values(a)
    if s.size == 0 or s[0] == 0.0:
        return 0
    a = np.asarray(a)
    tol = max(a.shape) * EPS * s[0]
    return int(np.sum(s > tol))


# -- Cholesky --------------------------------------------------------------------


def cholesky(a) -> np.ndarray:
    """Upper-triangular u with u.T @ u == a."""
    a = check_matrix(a)
    _require_square(a, "CHF")
    _check_symmetric(a)
    n = a.shape[0]
    u = np.zeros((n, n))
    for j in range(n):
        d = a[j, j] - float(u[:j, j] @ u[:j, j])
        if d <= 0.0:
            raise NotPositiveDefiniteError(f"matrix is not positive definite (pivot {d:.3g} at step {j + 1})")
        u[j, j] = math.sqrt(d)
        for k in range(j + 1, n):
            u[j, k] = (a[j, k] - float(u[:j, j] @ u[:j, k])) / u[j, j]
    return u


# -- dispatch ----------------------------------------------------------------------


def base_result(code: str, a, b=None) -> np.ndarray:
    """Run matrix operation ``code`` (upper case) and return a matrix."""
    code = code.upper()
    if code in ("ADD", "SUB", "EMU"):
        return elementwise(code, a, b)
    if code in ("MMU", "CPD", "OPD"):
        return product(code, a, b)
    if code == "SOL":
        return solve(a, b)
    if code == "TRA":
        return transpose(a)
    if code == "INV":
        return inverse(a)
    if code == "EVC":
        return eigen_sym(a)[1]
    if code == "EVL":
        return eigen_sym(a)[0]
    if code == "QQR":
        return qr(a)[0]
    if code == "RQR":
        return qr(a)[1]
    if code == "USV":
        return svd(a)[0]
    if code == "DSV":
        return svd(a)[1]
    if code == "VSV":
        return svd(a)[2]
    if code == "DET":
        return np.array([[determinant(a)]])
    if code == "RNK":
        return np.array([[float(rank(a))]])
    if code == "CHF":
        return cholesky(a)
    raise ValueError(f"unknown matrix operation {code}")
