"""Dense third-order tensor utilities.

Tensors are plain numpy arrays. A third-order tensor of size n1 x n2 x n3 is an
array of shape ``(n1, n2, n3)``; ``t[:, :, k]`` is the frontal slice A^(k+1),
``t[:, j, :]`` the lateral slice holding one sample and ``t[i, j, :]`` a tube
fiber.

The canonical linearization (used by the TNS3 file format) is slice-major:
the slice index k is outermost and each frontal slice is stored column-major,
so element (i, j, k) lives at ``i + n1*j + n1*n2*k``. This is exactly
``t.ravel(order="F")``.

Mode numbers follow the usual tensor notation and start at 1.

Unfolding uses a cyclic fiber ordering: for the mode-k unfolding, the columns
enumerate the remaining modes in the order k+1, ..., N, 1, ..., k-1, with
mode k+1 varying fastest. With that ordering::

    unfold(t x_1 U_1 ... x_N U_N, k) = U_k unfold(t, k) kron(U_{k-1}, ..., U_1, U_N, ..., U_{k+1})^T
"""

import numpy as np

from .errors import DimensionError


def as_tensor3(t, name="tensor"):
    """Return ``t`` as a numpy array, checking it is third order."""
    t = np.asarray(t)
    if t.ndim != 3:
        raise DimensionError(f"{name} must be a third-order tensor, got shape {t.shape}")
    if 0 in t.shape:
        raise DimensionError(f"{name} has an empty dimension: {t.shape}")
    return t


def _check_mode(mode, ndim):
    if isinstance(mode, bool) or not isinstance(mode, (int, np.integer)) or not 1 <= mode <= ndim:
        raise DimensionError(f"mode must be an integer in 1..{ndim}, got {mode!r}")
    return int(mode) - 1


def _cyclic_perm(k, ndim):
    return [k] + list(range(k + 1, ndim)) + list(range(k))


def unfold(t, mode):
    """Mode-``mode`` matricization of a tensor of any order.

    Column c of the result is the c-th mode-k fiber, fibers being enumerated
    with the cyclic ordering described in the module docstring.

    Examples
    --------
    >>> t = np.array([[1., 2.], [3., 4.]])[:, :, None]
    >>> unfold(t, 2)
    array([[1., 3.],
           [2., 4.]])
    """
    t = np.asarray(t)
    k = _check_mode(mode, t.ndim)
    perm = _cyclic_perm(k, t.ndim)
    return t.transpose(perm).reshape(t.shape[k], -1, order="F")


def fold(m, mode, shape):
    """Inverse of :func:`unfold`: ``fold(unfold(t, k), k, t.shape) == t``."""
    m = np.asarray(m)
    shape = tuple(int(s) for s in shape)
    k = _check_mode(mode, len(shape))
    if m.shape != (shape[k], int(np.prod(shape)) // shape[k]):
        raise DimensionError(f"matrix of shape {m.shape} cannot be folded into {shape} along mode {mode}")
    perm = _cyclic_perm(k, len(shape))
    folded = m.reshape([shape[p] for p in perm], order="F")
    return folded.transpose(np.argsort(perm))


def kmode_product(t, u, mode):
    """k-mode product ``t x_k u``.

    The mode-k size of ``t`` is replaced by the row count of ``u``; equivalently
    ``unfold(result, k) == u @ unfold(t, k)``.
    """
    t = np.asarray(t)
    u = np.asarray(u)
    k = _check_mode(mode, t.ndim)
    if u.ndim != 2 or u.shape[1] != t.shape[k]:
        raise DimensionError(
            f"matrix of shape {u.shape} does not conform to mode {mode} of tensor with shape {t.shape}")
    return np.moveaxis(np.tensordot(u, t, axes=(1, k)), 0, k)


def facewise_product(a, b):
    """Slice-by-slice matrix product: ``result[:, :, i] = a[:, :, i] @ b[:, :, i]``."""
    a = as_tensor3(a, "a")
    b = as_tensor3(b, "b")
    if a.shape[2] != b.shape[2]:
        raise DimensionError(f"tube lengths differ: {a.shape[2]} vs {b.shape[2]}")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"inner dimensions differ: {a.shape} and {b.shape}")
    return np.einsum("ilk,ljk->ijk", a, b)


def _blocks(t, index):
    """Assemble an n3 x n3 block matrix with block (p, q) = slice index(p, q), or zero for None."""
    n1, n2, n3 = t.shape
    out = np.zeros((n1 * n3, n2 * n3), dtype=t.dtype)
    for p in range(n3):
        for q in range(n3):
            for s in index(p, q):
                out[p * n1:(p + 1) * n1, q * n2:(q + 1) * n2] += t[:, :, s]
    return out


def bcirc(t):
    """Block circulant matrix; block (p, q) is slice ``(p - q) mod n3``."""
    t = as_tensor3(t)
    n3 = t.shape[2]
    return _blocks(t, lambda p, q: [(p - q) % n3])


def mat_th(t):
    """Toeplitz-plus-Hankel block matrix associated with the cosine-transform product.

    With 1-based block indices the Toeplitz part has block (p, q) = A^(|p-q|+1).
    The Hankel part has first block column A^(2), ..., A^(n3), 0 and last block
    column 0, A^(n3), ..., A^(2): block (p, q) = A^(p+q) when p+q <= n3 and
    A^(2 n3 + 2 - p - q) when that index is <= n3, zero otherwise. This is the
    matrix block-diagonalized by the orthonormal DCT-II (see
    :attr:`tldakit.transforms.LinearTransform.diagonalizer`).
    """
    t = as_tensor3(t)
    n3 = t.shape[2]

    def index(p, q):
        found = [abs(p - q)]
        # 0-based forms of p+q <= n3 and 2n3+2-p-q <= n3
        if p + q + 1 <= n3 - 1:
            found.append(p + q + 1)
        elif 2 * n3 - p - q - 1 <= n3 - 1:
            found.append(2 * n3 - p - q - 1)
        return found

    return _blocks(t, index)


def bdiag(t):
    """Block diagonal matrix with the frontal slices on the diagonal."""
    t = as_tensor3(t)
    return _blocks(t, lambda p, q: [p] if p == q else [])


def ten_from_bdiag(b, shape):
    """Recover the tensor of shape ``(n1, n2, n3)`` from its :func:`bdiag` matrix."""
    b = np.asarray(b)
    n1, n2, n3 = (int(s) for s in shape)
    if b.shape != (n1 * n3, n2 * n3):
        raise DimensionError(f"block matrix of shape {b.shape} does not match tensor shape {tuple(shape)}")
    out = np.empty((n1, n2, n3), dtype=b.dtype)
    for k in range(n3):
        out[:, :, k] = b[k * n1:(k + 1) * n1, k * n2:(k + 1) * n2]
    return out


def stack_slices(t):
    """Frontal slices stacked vertically, an (n1*n3) x n2 matrix."""
    t = as_tensor3(t)
    return np.concatenate([t[:, :, k] for k in range(t.shape[2])], axis=0)


def unstack_slices(m, n3):
    """Inverse of :func:`stack_slices`."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] % n3:
        raise DimensionError(f"cannot split a {m.shape} matrix into {n3} slices")
    n1 = m.shape[0] // n3
    return np.stack([m[k * n1:(k + 1) * n1] for k in range(n3)], axis=2)


def frobenius_norm(t):
    """Square root of the sum of squared magnitudes of all entries."""
    return float(np.linalg.norm(np.asarray(t).ravel()))
