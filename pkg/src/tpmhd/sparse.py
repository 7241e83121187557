"""Sparse matrix storage and the linear-solve contract.

Storage and factorization are delegated to scipy (CSR format and the
SuperLU direct solver).  The wrappers here pin down the behavior the
rest of the solver depends on: duplicate triplets are summed, column
indices are sorted, solves are deterministic for fixed inputs, and
every solve is verified against a relative residual bound.  Direct
factorization is used throughout; the step systems are small enough at
desk scale that iterative methods would only add nondeterminism.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class LinearSolveError(RuntimeError):
    """Raised when a linear system cannot be solved to tolerance.

    Attributes
    ----------
    residual : float or None
        Achieved relative residual, when a candidate solution exists.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class CsrMatrix:
    """Compressed sparse row matrix.

    Attributes
    ----------
    n_rows, n_cols : int
    row_ptr : ndarray of int, len n_rows + 1
    col_idx : ndarray of int
        Strictly increasing within each row.
    values : ndarray of float
    """

    def __init__(self, scipy_csr):
        mat = scipy_csr.tocsr()
        mat.sum_duplicates()
        mat.sort_indices()
        self._mat = mat

    @property
    def n_rows(self):
        return self._mat.shape[0]

    @property
    def n_cols(self):
        return self._mat.shape[1]

    @property
    def row_ptr(self):
        return self._mat.indptr

    @property
    def col_idx(self):
        return self._mat.indices

    @property
    def values(self):
        return self._mat.data

    @property
    def scipy(self):
        """Underlying scipy.sparse.csr_matrix (shared, do not mutate)."""
        return self._mat

    def matvec(self, x):
        return self._mat @ np.asarray(x)

    def toarray(self):
        return self._mat.toarray()

    def transpose(self):
        return CsrMatrix(self._mat.T.tocsr())


def triplet_to_csr(n_rows, n_cols, triplets):
    """Accumulate (row, col, value) triplets into a CsrMatrix.

    Parameters
    ----------
    n_rows, n_cols : int
    triplets : iterable of (row, col, value), or a (rows, cols, values)
        tuple of arrays.  Duplicate positions are summed.
    """
    if isinstance(triplets, tuple) and len(triplets) == 3:
        rows, cols, vals = (np.asarray(a) for a in triplets)
    else:
        seq = list(triplets)
        if seq:
            rows, cols, vals = (np.asarray(a) for a in zip(*seq))
        else:
            rows = cols = np.empty(0, dtype=np.int64)
            vals = np.empty(0)
    if rows.size:
        if rows.min() < 0 or rows.max() >= n_rows:
            raise IndexError("triplet row index out of range")
        if cols.min() < 0 or cols.max() >= n_cols:
            raise IndexError("triplet column index out of range")
    coo = sp.coo_matrix((vals.astype(float), (rows, cols)),
                        shape=(n_rows, n_cols))
    return CsrMatrix(coo.tocsr())


def _as_scipy(A):
    return A.scipy if isinstance(A, CsrMatrix) else sp.csr_matrix(A)


def factorize(A):
    """LU-factorize a square sparse matrix for repeated solves."""
    mat = _as_scipy(A).tocsc()
    try:
        return spla.splu(mat)
    except RuntimeError as exc:
        raise LinearSolveError(f"factorization failed: {exc}") from exc


def factorize_fast(A):
    """Factorize preferring the low-fill near-symmetric ordering.

    On the step systems the symmetric-pattern ordering with diagonal
    pivoting produces about half the fill of the default column
    ordering and factorizes several times faster; any partial-pivot
    threshold lets single rejected pivots cascade the fill back up.
    Diagonal pivoting can in principle go unstable, so the
    factorization is probed against a fixed vector and thrown away in
    favor of the default partial-pivoting one if the probe is off.
    """
    mat = _as_scipy(A).tocsc()
    lu = None
    try:
        lu = spla.splu(mat, permc_spec="MMD_AT_PLUS_A",
                       options=dict(SymmetricMode=True,
                                    DiagPivotThresh=0.0))
    except RuntimeError:
        pass
    if lu is not None:
        probe = np.cos(0.7 * np.arange(mat.shape[0]))
        err = np.linalg.norm(lu.solve(mat @ probe) - probe)
        if not np.isfinite(err) or err > 1e-8 * np.linalg.norm(probe):
            lu = None
    if lu is None:
        return factorize(mat)
    return lu


def solve_linear(A, b, tol=1e-10, lu=None):
    """Solve A x = b with a direct factorization, checking the residual.

    Parameters
    ----------
    A : CsrMatrix or scipy sparse matrix
    b : ndarray
    tol : float
        Required relative residual ||Ax - b|| <= tol * max(||b||, tiny).
    lu : optional
        A factorization from factorize(A) to reuse.

    Returns
    -------
    ndarray

    Raises
    ------
    LinearSolveError
        If factorization fails or the residual bound is not met.
    """
    mat = _as_scipy(A)
    b = np.asarray(b, dtype=float)
    if mat.shape[0] != mat.shape[1]:
        raise LinearSolveError("matrix is not square")
    if mat.shape[1] != b.shape[0]:
        raise LinearSolveError("dimension mismatch between matrix and rhs")
    if lu is None:
        lu = factorize(mat)
    x = lu.solve(b)
    if not np.all(np.isfinite(x)):
        raise LinearSolveError("solver produced non-finite entries")
    bnorm = np.linalg.norm(b)
    res = np.linalg.norm(mat @ x - b)
    if res > tol * max(bnorm, np.finfo(float).tiny):
        raise LinearSolveError(
            f"linear solve residual {res:.3e} exceeds {tol:.1e} * {bnorm:.3e}",
            residual=res / max(bnorm, np.finfo(float).tiny))
    return x


class BorderedLu:
    """Direct solver for a sparse system closed by one dense border.

    Solves

        [ A  c ] [x]   [b]
        [ r' 0 ] [l] = [d]

    where A is large and sparse and c, r are dense vectors (a mean
    constraint and its multiplier column).  Factorizing the bordered
    matrix as-is is ruinous: the dense row and column defeat the
    fill-reducing ordering and factorization cost grows by two orders
    of magnitude.  Instead A is factorized with one designated row
    replaced by an identity row, and the solution of the bordered
    system is recovered exactly from two precomputed auxiliary solves
    and a 2x2 correction (the standard bordering algorithm).

    The pinned row must be chosen so that the pinned matrix is
    nonsingular; for a saddle-point system with a pressure-mean border,
    any pressure row works.

    Parameters
    ----------
    matrix : CsrMatrix or scipy sparse, shape (n + 1, n + 1)
        Bordered system with the constraint in the last row and column.
    pin_row : int
        Row of the leading block to replace during factorization.
    """

    def __init__(self, matrix, pin_row):
        mat = _as_scipy(matrix).tocsr()
        n = mat.shape[0] - 1
        if not 0 <= pin_row < n:
            raise LinearSolveError("pin row outside the leading block")
        self.n = n
        self.pin = pin_row
        lead = mat[:-1, :-1].tocsr()
        self._col = mat[:-1, -1].toarray().ravel()
        self._row = mat[-1, :-1].toarray().ravel()
        corner = mat[n, n]
        pinned = lead.getrow(pin_row)
        self._pin_idx = pinned.indices.copy()
        self._pin_val = pinned.data.copy()
        scale = np.ones(n)
        scale[pin_row] = 0.0
        pinned_mat = sp.diags(scale) @ lead + sp.diags(1.0 - scale)
        self._lu = factorize_fast(pinned_mat.tocsc())
        unit = np.zeros(n)
        unit[pin_row] = 1.0
        w1 = self._lu.solve(unit)
        w2 = self._lu.solve(self._col)
        self._w1 = w1
        self._w2 = w2
        g1 = self._pin_dot(w1)
        g2 = self._pin_dot(w2)
        self._corr = np.array([[1.0 + g1, g2],
                               [self._row @ w1, self._row @ w2 - corner]])
        if abs(np.linalg.det(self._corr)) < np.finfo(float).tiny:
            raise LinearSolveError("bordered correction system is singular")

    def _pin_dot(self, v):
        """(a - e)' v for the original pinned row a and unit vector e."""
        return float(self._pin_val @ v[self._pin_idx]) - v[self.pin]

    def solve(self, rhs):
        """Solve the bordered system for one right-hand side.

        Parameters
        ----------
        rhs : ndarray, len n + 1

        Returns
        -------
        ndarray, len n + 1
            Leading solution with the multiplier appended.
        """
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape[0] != self.n + 1:
            raise LinearSolveError("rhs length does not match bordered system")
        x0 = self._lu.solve(rhs[:-1])
        g0 = self._pin_dot(x0)
        try:
            s, mult = np.linalg.solve(
                self._corr, [g0, self._row @ x0 - rhs[-1]])
        except np.linalg.LinAlgError as exc:
            raise LinearSolveError(f"bordered correction failed: {exc}") from exc
        x = x0 - s * self._w1 - mult * self._w2
        if not (np.all(np.isfinite(x)) and np.isfinite(mult)):
            raise LinearSolveError("solver produced non-finite entries")
        out = np.empty(self.n + 1)
        out[:-1] = x
        out[-1] = mult
        return out


class CondensedLu:
    """Bordered solve after exact elimination of a diagonal sub-block.

    The rows and columns listed in elim must form a diagonal block
    that is disjoint from the pin row and the trailing border.  One
    step of block elimination folds them into a Schur complement on
    the remaining unknowns, which BorderedLu factors; each solve back
    substitutes the eliminated entries.  This is worthwhile when a
    large set of unknowns couples only within itself diagonally, as
    cell-interior enrichment dofs do: the factored matrix shrinks by
    their count while the solution stays bit-for-bit a direct solve
    of the full system up to rounding.
    """

    def __init__(self, matrix, pin_row, elim):
        matrix = sp.csr_matrix(matrix)
        n = matrix.shape[0] - 1
        elim = np.asarray(elim, dtype=np.int64)
        if elim.size == 0:
            raise LinearSolveError("empty elimination set")
        if elim.min() < 0 or elim.max() >= n:
            raise LinearSolveError("elimination set outside the leading block")
        if np.any(np.diff(np.sort(elim)) == 0):
            raise LinearSolveError("duplicate indices in elimination set")
        if np.isin(pin_row, elim):
            raise LinearSolveError("pin row cannot be eliminated")
        self.n = n
        self._elim = np.sort(elim)
        self._keep = np.setdiff1d(np.arange(n + 1), self._elim)
        block = matrix[self._elim][:, self._elim]
        diag = block.diagonal()
        if (block - sp.diags(diag)).nnz:
            raise LinearSolveError("eliminated block is not diagonal")
        if np.abs(diag).min() == 0.0:
            raise LinearSolveError("eliminated block has a zero diagonal")
        self._diag = diag
        self._kb = matrix[self._keep][:, self._elim].tocsr()
        self._bk = matrix[self._elim][:, self._keep].tocsr()
        schur = (matrix[self._keep][:, self._keep]
                 - self._kb @ sp.diags(1.0 / diag) @ self._bk)
        pin_kept = int(np.searchsorted(self._keep, pin_row))
        self._inner = BorderedLu(schur.tocsc(), pin_kept)

    def solve(self, rhs):
        """Solve against the full system; same contract as BorderedLu."""
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape[0] != self.n + 1:
            raise LinearSolveError("rhs length does not match system")
        rb = rhs[self._elim] / self._diag
        xk = self._inner.solve(rhs[self._keep] - self._kb @ rb)
        out = np.empty(self.n + 1)
        out[self._keep] = xk
        out[self._elim] = rb - (self._bk @ xk) / self._diag
        return out
