"""Dense linear algebra over a pluggable scalar backend.

Matrices are plain numpy arrays.  The float backend uses ``float64``; the
exact backend uses object arrays whose entries are ``fractions.Fraction``
(arbitrary-precision, no rounding).  Determinants on the exact backend go
through fraction-free (Bareiss) elimination on cleared integer numerators,
so positivity predicates built on minor signs are tolerance-free there.

Index sets for minors are 0-based.
"""

from fractions import Fraction
from math import factorial, gcd

import numpy as np

from .errors import DimensionError, DomainError, NumericError

#: Default absolute comparison tolerance on normalized float quantities.
DEFAULT_TOL = 1e-10


# ---------------------------------------------------------------------------
# backends

def is_exact(m) -> bool:
    """True if ``m`` is an exact-rational (object dtype) array/scalar."""
    if isinstance(m, np.ndarray):
        return m.dtype == object
    return isinstance(m, (Fraction, int))


def mat(rows, exact=False):
    """Build a matrix from nested sequences.

    With ``exact=True`` every entry is coerced to ``Fraction`` (ints and
    strings like ``"3/4"`` are accepted); otherwise entries become float64.
    """
    if exact:
        data = [[Fraction(x) for x in row] for row in rows]
        out = np.empty((len(data), len(data[0])), dtype=object)
        for i, row in enumerate(data):
            out[i, :] = row
        return out
    out = np.array(rows, dtype=float)
    if not np.all(np.isfinite(out)):
        raise DomainError("float matrix entries must be finite")
    return out


def identity(n, exact=False):
    if exact:
        return mat([[1 if i == j else 0 for j in range(n)] for i in range(n)], exact=True)
    return np.eye(n)


def zeros(n, m=None, exact=False):
    m = n if m is None else m
    if exact:
        return mat([[0] * m for _ in range(n)], exact=True)
    return np.zeros((n, m))


def to_exact(m):
    """Exactify a float matrix entrywise (binary-exact, no rounding)."""
    if is_exact(m):
        return m
    return mat([[Fraction(float(x)) for x in row] for row in np.atleast_2d(m)], exact=True)


def to_float(m):
    if is_exact(m):
        return np.array([[float(x) for x in row] for row in m], dtype=float)
    return np.asarray(m, dtype=float)


# ---------------------------------------------------------------------------
# determinants and minors

def _require_square(m):
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")


def fraction_free_det(m) -> Fraction:
    """Exact determinant by Bareiss elimination.

    Entries are cleared to integers row by row first, so all intermediate
    divisions are exact integer divisions.  Float input is exactified
    entrywise, which makes this an independent cross-check path for the
    LU-based float determinant.
    """
    _require_square(m)
    n = m.shape[0]
    rows = [[Fraction(x) if not isinstance(x, Fraction) else x for x in row]
            for row in (m if is_exact(m) else to_exact(m))]
    scale = Fraction(1)
    work = []
    for row in rows:
        lcm = 1
        for x in row:
            g = gcd(lcm, x.denominator)
            lcm = lcm // g * x.denominator
        scale /= lcm
        work.append([int(x * lcm) for x in row])

    sign = 1
    prev = 1
    for k in range(n - 1):
        if work[k][k] == 0:
            for i in range(k + 1, n):
                if work[i][k] != 0:
                    work[k], work[i] = work[i], work[k]
                    sign = -sign
                    break
            else:
                return Fraction(0)
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                work[i][j] = (work[i][j] * work[k][k] - work[i][k] * work[k][j]) // prev
            work[i][k] = 0
        prev = work[k][k]
    return Fraction(sign * work[n - 1][n - 1]) * scale


def det(m):
    """Determinant: Bareiss on the exact backend, partial-pivot LU on floats."""
    _require_square(m)
    if is_exact(m):
        return fraction_free_det(m)
    return float(np.linalg.det(m))


def minor(m, rows, cols):
    """Determinant of the submatrix selected by 0-based index sets."""
    rows = sorted(rows)
    cols = sorted(cols)
    if len(rows) != len(cols) or len(rows) == 0:
        raise DimensionError("minor needs index sets of equal positive size")
    if rows[0] < 0 or rows[-1] >= m.shape[0] or cols[0] < 0 or cols[-1] >= m.shape[1]:
        raise DimensionError("minor index out of range")
    return det(m[np.ix_(rows, cols)])


def concat_det(a, b):
    """Determinant of the columnwise concatenation (a|b)."""
    if a.shape[0] != b.shape[0] or a.shape[1] + b.shape[1] != a.shape[0]:
        raise DimensionError(
            f"cannot concatenate {a.shape} and {b.shape} into a square matrix")
    if is_exact(a) != is_exact(b):
        raise DomainError("mixed backends in concat_det")
    return det(np.hstack([a, b]))


# ---------------------------------------------------------------------------
# eigenvalues

def eigen_moduli(m, tol=DEFAULT_TOL):
    """Moduli of all complex eigenvalues, sorted descending.

    Float backend only.  The underlying LAPACK driver performs Hessenberg
    reduction followed by shifted QR iteration; relative accuracy is far
    below ``tol`` for the well-separated spectra this library feeds it.
    """
    if is_exact(m):
        raise DomainError("eigen_moduli requires the float backend")
    _require_square(m)
    try:
        vals = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericError(f"eigenvalue iteration failed: {exc}", residual=None)
    return np.sort(np.abs(vals))[::-1]


# ---------------------------------------------------------------------------
# nilpotent exponential

def unipotent_exp(nil, tol=DEFAULT_TOL):
    """exp of a nilpotent matrix as the finite sum sum_k nil^k / k!."""
    _require_square(nil)
    n = nil.shape[0]
    exact = is_exact(nil)
    power = identity(n, exact=exact)
    for _ in range(n):
        power = power @ nil
    if exact:
        if any(x != 0 for x in power.flat):
            raise DomainError("matrix is not nilpotent")
    else:
        scale = max(1.0, np.abs(nil).max()) ** n
        if np.abs(power).max() > tol * scale:
            raise DomainError("matrix is not nilpotent")
    out = identity(n, exact=exact)
    term = identity(n, exact=exact)
    for k in range(1, n):
        term = term @ nil
        if exact:
            out = out + term * Fraction(1, factorial(k))
        else:
            out = out + term / factorial(k)
    return out


# ---------------------------------------------------------------------------
# elimination helpers shared by both backends

def solve(a, b):
    """Solve ``a x = b`` (b may be a matrix).  Exact Gaussian elimination
    with pivoting on the exact backend."""
    _require_square(a)
    if not is_exact(a):
        return np.linalg.solve(a, np.asarray(b, dtype=float))
    n = a.shape[0]
    rhs = b if b.ndim == 2 else b.reshape(-1, 1)
    aug = np.hstack([a.copy(), rhs.copy()]).astype(object)
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r, col] != 0), None)
        if piv is None:
            raise DomainError("singular matrix in exact solve")
        if piv != col:
            aug[[col, piv]] = aug[[piv, col]]
        aug[col, :] = aug[col, :] / aug[col, col]
        for r in range(n):
            if r != col and aug[r, col] != 0:
                aug[r, :] = aug[r, :] - aug[r, col] * aug[col, :]
    out = aug[:, n:]
    return out if b.ndim == 2 else out[:, 0]


def inverse(m):
    return solve(m, identity(m.shape[0], exact=is_exact(m)))


def rank(m, tol=DEFAULT_TOL):
    if not is_exact(m):
        return int(np.linalg.matrix_rank(m, tol=tol * max(1.0, np.abs(m).max())))
    work = [list(row) for row in m]
    nrows, ncols = m.shape
    r = 0
    for col in range(ncols):
        piv = next((i for i in range(r, nrows) if work[i][col] != 0), None)
        if piv is None:
            continue
        work[r], work[piv] = work[piv], work[r]
        pval = work[r][col]
        for i in range(r + 1, nrows):
            if work[i][col] != 0:
                f = work[i][col] / pval
                work[i] = [x - f * y for x, y in zip(work[i], work[r])]
        r += 1
    return r


def column_basis(m, tol=DEFAULT_TOL):
    """An independent set of columns spanning col(m)."""
    if m.shape[1] == 0:
        return m
    if not is_exact(m):
        u, s, _ = np.linalg.svd(m, full_matrices=False)
        r = int(np.sum(s > tol * max(1.0, s[0])))
        return u[:, :r] * max(1.0, float(np.abs(m).max()))
    cols = []
    r = 0
    for j in range(m.shape[1]):
        cand = cols + [m[:, j]]
        if rank(np.column_stack(cand)) > r:
            cols.append(m[:, j])
            r += 1
    return np.column_stack(cols) if cols else m[:, :0]


def hadamard_scale(m):
    """Product of column norms; the natural scale for declaring a float
    determinant to be zero."""
    f = to_float(m)
    norms = np.sqrt((f * f).sum(axis=0))
    return float(np.prod(np.maximum(norms, 1e-300)))


def det_is_zero(value, m, tol=DEFAULT_TOL):
    if is_exact(m):
        return value == 0
    return abs(value) <= tol * hadamard_scale(m)


def nullspace(m, tol=DEFAULT_TOL):
    """Basis of the kernel as columns (possibly zero columns -> empty)."""
    if not is_exact(m):
        u, s, vh = np.linalg.svd(m)
        cutoff = tol * max(1.0, s[0] if s.size else 0.0)
        null = vh[np.sum(s > cutoff):].T
        return null
    nrows, ncols = m.shape
    work = [list(row) for row in m]
    pivots = []
    r = 0
    for col in range(ncols):
        piv = next((i for i in range(r, nrows) if work[i][col] != 0), None)
        if piv is None:
            continue
        work[r], work[piv] = work[piv], work[r]
        pval = work[r][col]
        work[r] = [x / pval for x in work[r]]
        for i in range(nrows):
            if i != r and work[i][col] != 0:
                f = work[i][col]
                work[i] = [x - f * y for x, y in zip(work[i], work[r])]
        pivots.append(col)
        r += 1
        if r == nrows:
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = zeros(ncols, len(free), exact=True) if free else np.empty((ncols, 0), dtype=object)
    for j, fc in enumerate(free):
        basis[fc, j] = Fraction(1)
        for ri, pc in enumerate(pivots):
            basis[pc, j] = -work[ri][fc]
    return basis


# ---------------------------------------------------------------------------
# JSON serialization: arrays of arrays, exact rationals as "p/q" strings

def scalar_to_json(x):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, (int, np.integer)):
        return int(x)
    return float(x)


def scalar_from_json(x):
    if isinstance(x, str):
        return Fraction(x)
    return float(x)


def matrix_to_json(m):
    return [[scalar_to_json(x) for x in row] for row in np.atleast_2d(m)]


def matrix_from_json(data):
    exact = any(isinstance(x, str) for row in data for x in row)
    return mat(data, exact=exact)
