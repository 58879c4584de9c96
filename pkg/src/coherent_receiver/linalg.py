"""Small dense complex linear algebra used throughout the package.

Everything here works on plain numpy arrays.  Matrices in this project are
tiny (at most 16x16), so the routines favour robustness and clear failure
modes over speed.
"""

from __future__ import annotations

import logging

import numpy as np

log = logging.getLogger(__name__)

UNITARY_TOL = 1e-12
HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
PSEUDO_CUTOFF = 1e-12


class LinalgError(ValueError):
    """Raised when an input violates a structural precondition."""


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a, b = np.asarray(a), np.asarray(b)
    # np.kron is slow for the tiny operands used here
    if a.ndim == 1 and b.ndim == 1:
        return np.multiply.outer(a, b).reshape(-1)
    if a.ndim == 2 and b.ndim == 2:
        (ra, ca), (rb, cb) = a.shape, b.shape
        return (a[:, None, :, None] * b[None, :, None, :]).reshape(ra * rb, ca * cb)
    return np.kron(a, b)


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.asarray(a)).T


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def hermitianize(a: np.ndarray) -> np.ndarray:
    return (a + dagger(a)) / 2


def unitarity_residual(u: np.ndarray) -> float:
    """Max-abs entry of U^dagger U - I."""
    u = np.asarray(u)
    return float(np.max(np.abs(dagger(u) @ u - np.eye(u.shape[1]))))


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    return u.ndim == 2 and u.shape[0] == u.shape[1] and unitarity_residual(u) <= tol


def _require_square(m: np.ndarray, what: str = "matrix") -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise LinalgError(f"{what} must be square, got shape {m.shape}")
    return m


def eigh_psd(m: np.ndarray, tol: float = PSD_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian PSD matrix.

    Eigenvalues in [-tol, 0) are clipped to zero (with a warning); anything
    more negative raises.
    """
    m = _require_square(m)
    herm_err = float(np.max(np.abs(m - dagger(m)))) if m.size else 0.0
    if herm_err > max(HERMITIAN_TOL, 1e-12 * float(np.max(np.abs(m)))):
        raise LinalgError(f"matrix is not Hermitian (residual {herm_err:.3e})")
    w, v = np.linalg.eigh(hermitianize(m))
    if w.size and w[0] < -tol:
        raise LinalgError(f"matrix is not PSD: eigenvalue {w[0]:.3e}")
    neg = w < 0
    if np.any(neg):
        if np.min(w) < -1e-14:
            log.warning("clipping %d slightly negative eigenvalue(s), min %.3e", int(neg.sum()), w.min())
        w = np.where(neg, 0.0, w)
    return w, v


def herm_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = eigh_psd(m)
    return (v * np.sqrt(w)) @ dagger(v)


def herm_sqrt_inv(m: np.ndarray, pseudo: bool = False, cutoff: float = PSEUDO_CUTOFF) -> np.ndarray:
    """Inverse square root of a Hermitian PSD matrix.

    With ``pseudo=True`` eigenvalues below ``cutoff`` are treated as zero and
    the result is the inverse square root on the support (zero on the kernel).
    Without it, a (numerically) singular input raises.
    """
    w, v = eigh_psd(m)
    small = w < cutoff
    if np.any(small) and not pseudo:
        raise LinalgError(f"matrix is singular (smallest eigenvalue {w.min():.3e}); use pseudo=True")
    inv = np.zeros_like(w)
    inv[~small] = 1.0 / np.sqrt(w[~small])
    return (v * inv) @ dagger(v)


def support_projector(m: np.ndarray, cutoff: float = PSEUDO_CUTOFF) -> np.ndarray:
    w, v = eigh_psd(m)
    vs = v[:, w >= cutoff]
    return vs @ dagger(vs)


def trace_norm(m: np.ndarray) -> float:
    """Sum of singular values (sum of |eigenvalues| for Hermitian input)."""
    m = _require_square(m)
    if np.allclose(m, dagger(m), rtol=0.0, atol=1e-14):
        return float(np.sum(np.abs(np.linalg.eigvalsh(hermitianize(m)))))
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def partial_trace(rho: np.ndarray, dims: tuple[int, int], keep: int | str = 0) -> np.ndarray:
    """Trace out one factor of a bipartite operator on C^dA (x) C^dB.

    ``keep`` selects the surviving factor: 0 / "A" for the first, 1 / "B" for
    the second.
    """
    d_a, d_b = dims
    rho = _require_square(rho, "rho")
    if rho.shape[0] != d_a * d_b:
        raise LinalgError(f"rho has dimension {rho.shape[0]}, expected {d_a}*{d_b}")
    if keep in (0, "A", "a"):
        return np.einsum("ijkj->ik", rho.reshape(d_a, d_b, d_a, d_b))
    if keep in (1, "B", "b"):
        return np.einsum("ijik->jk", rho.reshape(d_a, d_b, d_a, d_b))
    raise LinalgError(f"keep must be 0/'A' or 1/'B', got {keep!r}")


def density_residuals(rho: np.ndarray) -> dict[str, float]:
    """Hermiticity residual, smallest eigenvalue and trace error of ``rho``."""
    rho = _require_square(rho, "rho")
    return {
        "hermitian": float(np.max(np.abs(rho - dagger(rho)))),
        "min_eig": float(np.linalg.eigvalsh(hermitianize(rho))[0]),
        "trace": float(abs(np.trace(rho) - 1.0)),
    }


def is_density_matrix(rho: np.ndarray, trace_tol: float = 1e-12) -> bool:
    r = density_residuals(rho)
    return r["hermitian"] <= HERMITIAN_TOL and r["min_eig"] >= -PSD_TOL and r["trace"] <= trace_tol


def orthonormal_completion(rows, dim: int, tol: float = 1e-10) -> np.ndarray:
    """Complete orthonormal rows to a ``dim`` x ``dim`` unitary.

    The given rows are kept verbatim as the leading rows.  The remaining rows
    come from Gram-Schmidt with reorthogonalization over the canonical basis
    vectors e_0, e_1, ... in index order, so the result is deterministic.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=complex)) if len(rows) else np.zeros((0, dim), complex)
    if rows.ndim != 2 or rows.shape[1] != dim:
        raise LinalgError(f"rows have shape {rows.shape}, expected length-{dim} vectors")
    count = rows.shape[0]
    if count > dim:
        raise LinalgError(f"{count} rows cannot be orthonormal in dimension {dim}")
    if count:
        err = float(np.max(np.abs(rows.conj() @ rows.T - np.eye(count))))
        if err > tol:
            raise LinalgError(f"rows are not orthonormal (Gram residual {err:.3e})")

    # row vectors r act as bras <r|; work with the kets conj(r)
    basis = np.zeros((dim, dim), dtype=complex)
    basis[:count] = rows.conj()
    # residuals of every e_k against the given rows, two passes
    b = basis[:count]
    resid = np.eye(dim, dtype=complex)
    for _ in range(2):
        resid -= b.T @ (b.conj() @ resid)
    first = count
    for k in range(dim):
        if count == dim:
            break
        v = resid[:, k]
        new = basis[first:count]
        for _ in range(2):
            v = v - new.T @ (new.conj() @ v)
        nv = np.sqrt(np.vdot(v, v).real)
        # a canonical vector nearly inside the span would lose precision
        if nv > 1e-6:
            basis[count] = v / nv
            count += 1
    if count != dim:
        raise LinalgError("failed to complete basis")
    return basis.conj()
