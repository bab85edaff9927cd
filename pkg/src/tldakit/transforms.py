"""Invertible mode-3 transforms and the tensor-tensor product they induce.

A transform L acts on every tube fiber of a tensor through an invertible
n3 x n3 matrix M, i.e. ``L(A) = A x_3 M``. The product ``A *_L B`` multiplies
matching frontal slices in the transform domain and maps back with M^-1.

Two transforms are built in:

* ``"t"``: the DFT matrix, giving the t-product (block-circulant algebra);
* ``"c"``: ``M = W^-1 C (I + Z)`` with C the orthonormal DCT-II, W the
  diagonal of the first column of C and Z the upshift matrix, giving the
  c-product (Toeplitz-plus-Hankel algebra).

Any other invertible matrix can be wrapped with :func:`custom_transform`.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NumericalConsistencyError
from .tensor import as_tensor3, facewise_product, kmode_product

IMAG_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class LinearTransform:
    """An invertible mode-3 transform.

    Attributes
    ----------
    name : str
        ``"t"`` (DFT), ``"c"`` (DCT based) or ``"custom"``.
    M, Minv : ndarray
        The n3 x n3 transform matrix and its inverse.
    diagonalizer : ndarray
        Matrix Q with ``bdiag(L(A)) = (Q kron I) op_L(A) (Q^-1 kron I)``.
        Equal to M for the DFT; the orthonormal DCT-II for the c-product.
    real_to_real : bool
        M maps real tubes to real tubes.
    conjugate_symmetric : bool
        For real input, transformed slices k and n3-k (0-based, k >= 1) are
        complex conjugates.
    """

    name: str
    M: np.ndarray
    Minv: np.ndarray
    diagonalizer: np.ndarray = field(repr=False)
    real_to_real: bool = False
    conjugate_symmetric: bool = False

    @property
    def size(self):
        return self.M.shape[0]

    def partner(self, k):
        """Index of the slice that is the conjugate of slice ``k`` (0-based)."""
        return (-k) % self.size

    def independent_slices(self):
        """Slices that must be solved explicitly for real data.

        Under conjugate symmetry the remaining slices follow by conjugation.
        """
        if self.conjugate_symmetric:
            return list(range(self.size // 2 + 1))
        return list(range(self.size))


def _check_size(n3):
    if isinstance(n3, bool) or not isinstance(n3, (int, np.integer)) or n3 < 1:
        raise DimensionError(f"transform size must be a positive integer, got {n3!r}")
    return int(n3)


def build_dft(n3):
    """DFT transform, ``M[p, q] = exp(-2j*pi*p*q/n3)`` (0-based indices)."""
    n3 = _check_size(n3)
    idx = np.arange(n3)
    M = np.exp(-2j * np.pi * np.outer(idx, idx) / n3)
    return LinearTransform("t", M, M.conj() / n3, diagonalizer=M, conjugate_symmetric=True)


def dct_matrix(n):
    """Orthonormal DCT-II matrix (row 0 scaled by 1/sqrt(n), the rest by sqrt(2/n))."""
    n = _check_size(n)
    i = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    C = np.cos(np.pi * i * (2 * j + 1) / (2 * n)) * np.sqrt(2.0 / n)
    C[0] /= np.sqrt(2.0)
    return C


def build_dct(n3):
    """Cosine transform of the c-product: ``M = W^-1 C (I + Z)``."""
    n3 = _check_size(n3)
    C = dct_matrix(n3)
    W = np.diag(C[:, 0])
    Z = np.eye(n3, k=1)
    M = np.linalg.solve(W, C @ (np.eye(n3) + Z))
    return LinearTransform("c", M, np.linalg.inv(M), diagonalizer=C,
                           real_to_real=True, conjugate_symmetric=False)


def custom_transform(M, tol=1e-10):
    """Wrap a user supplied invertible matrix.

    Raises
    ------
    DimensionError
        If M is not square or ``||M Minv - I||_inf >= tol``.
    """
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise DimensionError(f"transform matrix must be square, got shape {M.shape}")
    try:
        Minv = np.linalg.inv(M)
    except np.linalg.LinAlgError as exc:
        raise DimensionError("transform matrix is singular") from exc
    resid = np.abs(M @ Minv - np.eye(M.shape[0])).max()
    if not resid < tol:
        raise DimensionError(f"transform matrix is not numerically invertible (residual {resid:.3g})")
    real = not np.iscomplexobj(M) or not np.any(M.imag)
    if real:
        M = np.real(M)
        Minv = np.real(Minv)
    return LinearTransform("custom", M, Minv, diagonalizer=M, real_to_real=real)


def get_transform(name, n3):
    """Build a transform by short name: ``"t"``/``"dft"`` or ``"c"``/``"dct"``."""
    key = str(name).lower()
    if key in ("t", "dft", "t-product"):
        return build_dft(n3)
    if key in ("c", "dct", "c-product"):
        return build_dct(n3)
    raise DimensionError(f"unknown transform {name!r}")


def _check_conforming(t, L):
    if t.shape[2] != L.size:
        raise DimensionError(f"tensor tube length {t.shape[2]} does not match transform size {L.size}")


def forward(t, L):
    """Transform-domain image ``t x_3 M``."""
    t = as_tensor3(t)
    _check_conforming(t, L)
    return kmode_product(t, L.M, 3)


def inverse(t, L):
    """Map a transform-domain tensor back: ``t x_3 M^-1``."""
    t = as_tensor3(t)
    _check_conforming(t, L)
    return kmode_product(t, L.Minv, 3)


def to_real(t, tol=IMAG_TOL):
    """Drop the imaginary part of ``t`` after checking it is below ``tol``."""
    t = np.asarray(t)
    if not np.iscomplexobj(t):
        return t
    resid = float(np.abs(t.imag).max()) if t.size else 0.0
    if resid > tol:
        raise NumericalConsistencyError(
            f"imaginary residual {resid:.3g} exceeds tolerance {tol:.3g}")
    return np.ascontiguousarray(t.real)


def _realify(result, inputs_real, L, tol):
    if inputs_real and (L.real_to_real or L.conjugate_symmetric):
        return to_real(result, tol)
    return result


def l_product(a, b, L, tol=IMAG_TOL):
    """``a *_L b = L^-1(L(a) facewise L(b))``.

    For real inputs under the DFT or DCT transforms the result is returned
    as a real array; an imaginary residual above ``tol`` raises
    :class:`~tldakit.errors.NumericalConsistencyError`.
    """
    a = as_tensor3(a, "a")
    b = as_tensor3(b, "b")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"inner dimensions differ: {a.shape} and {b.shape}")
    c = inverse(facewise_product(forward(a, L), forward(b, L)), L)
    real = not (np.iscomplexobj(a) or np.iscomplexobj(b))
    return _realify(c, real, L, tol)


def l_identity(n, L, tol=IMAG_TOL):
    """Identity element of ``*_L`` of size n x n x n3."""
    ident = np.repeat(np.eye(n)[:, :, None], L.size, axis=2)
    return _realify(inverse(ident, L), True, L, tol)


def hermitian_transpose(a, L, tol=IMAG_TOL):
    """Tensor whose transform-domain slices are the conjugate transposes of those of ``a``."""
    a = as_tensor3(a)
    at = forward(a, L).conj().transpose(1, 0, 2)
    return _realify(inverse(at, L), not np.iscomplexobj(a), L, tol)
