"""Dense complex linear algebra for the quantized-torus laboratory.

Unitary DFT, full eigendecompositions of unitary/Hermitian matrices,
extremal eigenvalues of Hermitian matrices, and operator norms.  Dense
LAPACK-backed routines are used throughout: every matrix in the laboratory
is a dense N x N array with N <= ~1024, where full factorizations are both
faster and more accurate than anything hand-rolled.

Unitary input goes through the complex Schur form rather than a generic
eigensolver: propagators of quantized automorphisms have systematic
spectral degeneracies, and Schur vectors stay orthonormal through them.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg


class EigensolverError(RuntimeError):
    """Eigensolver failed to converge or missed its residual target."""

    def __init__(self, message: str, worst_residual: float = np.nan):
        super().__init__(message)
        self.worst_residual = worst_residual


def matrix_scale(a: np.ndarray) -> float:
    """Max-column-sum (1-norm) estimate of ||A||, used to scale tolerances."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.abs(a).sum(axis=0).max())


def dft(v: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Unitary discrete Fourier transform of a vector, or of each column.

    F[j, m] = exp(-2*pi*i*j*m/N)/sqrt(N); `inverse=True` applies F^{-1}.
    """
    v = np.asarray(v, dtype=complex)
    if v.shape[0] < 1:
        raise ValueError("dft needs length >= 1")
    if inverse:
        return np.fft.ifft(v, axis=0, norm="ortho")
    return np.fft.fft(v, axis=0, norm="ortho")


def idft(v: np.ndarray) -> np.ndarray:
    """Inverse of `dft`."""
    return dft(v, inverse=True)


def dft_matrix(n: int) -> np.ndarray:
    """The unitary DFT as an explicit n x n matrix."""
    j, m = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    return np.exp(-2j * np.pi * j * m / n) / np.sqrt(n)


@dataclass(frozen=True)
class SpectralResult:
    """Full spectrum of a unitary or Hermitian matrix.

    eigenvalues[j] pairs with the orthonormal column eigenvectors[:, j];
    residuals[j] = ||A v_j - mu_j v_j||.  For unitary input the order is
    ascending eigenphase in (-pi, pi]; for Hermitian input ascending value.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    kind: str

    @property
    def eigenphases(self) -> np.ndarray:
        return np.angle(self.eigenvalues)


def _kind_defect(a: np.ndarray, kind: str) -> float:
    if kind == "unitary":
        return matrix_scale(a.conj().T @ a - np.eye(a.shape[0]))
    if kind == "hermitian":
        return matrix_scale(a - a.conj().T)
    raise ValueError(f"unknown kind {kind!r}; expected 'unitary' or 'hermitian'")


def _sorted_spectrum(values: np.ndarray, vectors: np.ndarray, kind: str):
    """Sort eigenpairs; break eigenphase ties deterministically.

    Phases closer than 1e-12 are ordered by the argument of the first
    significant component of the (raw) eigenvector, so the output order
    does not depend on LAPACK's internal ordering of degenerate blocks.
    """
    if kind == "hermitian":
        order = np.argsort(values.real, kind="stable")
        return values[order], vectors[:, order]
    phases = np.angle(values)
    order = list(np.argsort(phases, kind="stable"))
    i = 0
    while i < len(order):
        j = i + 1
        while j < len(order) and phases[order[j]] - phases[order[i]] < 1e-12:
            j += 1
        if j - i > 1:
            def tie_key(idx):
                v = vectors[:, idx]
                sig = np.nonzero(np.abs(v) > 1e-8 * np.abs(v).max())[0][0]
                return float(np.angle(v[sig]))
            order[i:j] = sorted(order[i:j], key=tie_key)
        i = j
    order = np.array(order)
    return values[order], vectors[:, order]


def _canonical_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its first significant component is real positive."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        v = out[:, j]
        sig = np.nonzero(np.abs(v) > 1e-8 * np.abs(v).max())[0][0]
        out[:, j] = v * (np.abs(v[sig]) / v[sig])
    return out


def eigendecompose(a: np.ndarray, kind: str) -> SpectralResult:
    """Full eigendecomposition of a unitary or Hermitian matrix.

    The declared `kind` is validated against the matrix to 1e-10 relative;
    a mismatch is an input error, not a numerical one.  Residuals are
    checked against 1e-9*||A|| and a failure raises EigensolverError
    carrying the worst offender.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("eigendecompose needs a square matrix")
    scale = matrix_scale(a)
    if kind == "unitary" and scale == 0.0:
        raise ValueError("kind mismatch: zero matrix is not unitary")
    defect = _kind_defect(a, kind)
    if defect > 1e-10 * max(scale, 1.0):
        raise ValueError(
            f"kind mismatch: declared {kind!r} but defect {defect:.3e} "
            f"exceeds 1e-10 * scale {scale:.3e}"
        )
    try:
        if kind == "hermitian":
            values, vectors = np.linalg.eigh(a)
            values = values.astype(complex)
        else:
            # Complex Schur of a normal matrix: T is numerically diagonal and
            # the Schur vectors form an exactly orthonormal eigenbasis even
            # across degenerate eigenphase clusters.
            t, z = scipy.linalg.schur(a, output="complex")
            values = np.diag(t).copy()
            vectors = z
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"eigensolver did not converge: {exc}") from exc
    values, vectors = _sorted_spectrum(values, vectors, kind)
    vectors = _canonical_phases(vectors)
    residuals = np.linalg.norm(a @ vectors - vectors * values[None, :], axis=0)
    worst = float(residuals.max()) if residuals.size else 0.0
    if worst > 1e-9 * max(scale, 1.0):
        raise EigensolverError(
            f"residual target missed: worst ||Av - mu v|| = {worst:.3e} "
            f"for scale {scale:.3e}", worst_residual=worst,
        )
    return SpectralResult(values, vectors, residuals, kind)


def extremal_eigen(h: np.ndarray, which: str = "min"):
    """Smallest or largest eigenvalue of a Hermitian matrix, with eigenvector.

    Returns (value, vector) with Rayleigh-quotient residual <= 1e-10*||H||.
    """
    h = np.asarray(h, dtype=complex)
    if which not in ("min", "max"):
        raise ValueError(f"which must be 'min' or 'max', got {which!r}")
    scale = matrix_scale(h)
    defect = _kind_defect(h, "hermitian")
    if defect > 1e-10 * max(scale, 1.0):
        raise ValueError(f"extremal_eigen needs a Hermitian matrix; defect {defect:.3e}")
    try:
        values, vectors = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"eigensolver did not converge: {exc}") from exc
    idx = 0 if which == "min" else len(values) - 1
    value, vector = float(values[idx]), vectors[:, idx]
    residual = float(np.linalg.norm(h @ vector - value * vector))
    if residual > 1e-10 * max(scale, 1.0):
        raise EigensolverError(
            f"extremal residual {residual:.3e} exceeds target", worst_residual=residual
        )
    return value, vector


def operator_norm(a: np.ndarray) -> float:
    """Largest singular value of a dense matrix."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("operator_norm needs a square matrix")
    if not np.all(np.isfinite(a.view(float))):
        raise ValueError("operator_norm needs finite entries")
    if a.size == 0 or not a.any():
        return 0.0
    try:
        return float(np.linalg.norm(a, 2))
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"SVD did not converge: {exc}") from exc


def dump_matrix_csv(a: np.ndarray, path: str) -> None:
    """Debug dump of a matrix as CSV rows "row,col,re,im"."""
    a = np.asarray(a, dtype=complex)
    with open(path, "w", encoding="ascii") as fh:
        fh.write("row,col,re,im\n")
        for i in range(a.shape[0]):
            for j in range(a.shape[1]):
                fh.write(f"{i},{j},{float(a[i, j].real)!r},{float(a[i, j].imag)!r}\n")
