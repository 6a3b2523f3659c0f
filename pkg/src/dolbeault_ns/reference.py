"""Brute-force dense-matrix oracle for the operator calculus.

Materializes dbar, dbar*, the form Laplacian and the projection as explicit
matrices on tiny grids, in the physical basis (one grid point of one
component per column), and cross-checks the spectral implementations.

Two constructions are used.  `dense_build` applies the spectral operator to
every basis field, which pins down matrix-level algebra (adjointness as a
conjugate transpose, the Laplacian factorization, projector spectra).
`oracle_compare` instead assembles the operators independently from the
classical cotangent differentiation matrix

    D[a, b] = (1/2) (-1)^{a-b} cot((a-b) h / 2),   h = 2 pi / N,

which differentiates trigonometric interpolants exactly below the Nyquist
mode and never touches the FFT path; agreement is therefore a genuine
two-route check on band-limited (dealiased) fields.
"""

import functools
from dataclasses import dataclass

import numpy as np

from . import dolbeault
from .forms import FormField, insert_sign, index_of, multi_indices, num_components
from .spectral import PHYSICAL, SpectralGrid

SIZE_LIMIT = 100_000

_OPERATORS = ("dbar", "dbar_star", "laplacian", "leray")


@dataclass
class DenseOperator:
    """Explicit matrix of one operator level on a tiny grid."""

    matrix: np.ndarray
    tag: str
    n: int
    q: int
    N: int


def _levels(tag: str, n: int, q: int) -> tuple:
    """(input bidegree, output bidegree) of the level-q operator."""
    if tag == "dbar":
        if q >= n:
            raise ValueError("dbar undefined at top bidegree")
        return q, q + 1
    if tag == "dbar_star":
        if q >= n:
            raise ValueError("dbar_star level q acts on (0,q+1) with q < n")
        return q + 1, q
    if tag in ("laplacian", "leray"):
        return q, q
    raise ValueError(f"unknown operator tag {tag!r}; expected one of {_OPERATORS}")


def _check_size(n: int, q_in: int, q_out: int, N: int):
    G = N ** (2 * n)
    for q in (q_in, q_out):
        dim = num_components(n, q) * G
        if dim > SIZE_LIMIT:
            raise ValueError(f"dense operator dimension {dim} exceeds the {SIZE_LIMIT} bound")


def _spectral_apply(tag: str, u: FormField) -> FormField:
    if tag == "dbar":
        return dolbeault.dbar(u)
    if tag == "dbar_star":
        return dolbeault.dbar_star(u)
    if tag == "laplacian":
        return dolbeault.laplacian_q(u)
    return dolbeault.leray_project(u)


def dense_build(tag: str, n: int, q: int, N: int) -> DenseOperator:
    """Materialize the level-q spectral operator column by column."""
    q_in, q_out = _levels(tag, n, q)
    _check_size(n, q_in, q_out, N)
    grid = SpectralGrid(n, N)
    G = grid.size
    ncomp_in = num_components(n, q_in)
    ncomp_out = num_components(n, q_out)
    matrix = np.empty((ncomp_out * G, ncomp_in * G), dtype=np.complex128)
    basis = FormField.zeros(grid, q_in, PHYSICAL)
    flat = basis.data.reshape(-1)
    for col in range(ncomp_in * G):
        flat[col] = 1.0
        matrix[:, col] = _spectral_apply(tag, basis).data.reshape(-1)
        flat[col] = 0.0
    return DenseOperator(matrix, tag, n, q, N)


# -- independent finite-difference construction ------------------------------------


@functools.lru_cache(maxsize=None)
def _cot_matrix(N: int) -> np.ndarray:
    """Fourier differentiation matrix on N periodic points (even N)."""
    h = 2.0 * np.pi / N
    D = np.zeros((N, N))
    for a in range(N):
        for b in range(N):
            if a != b:
                D[a, b] = 0.5 * (-1.0) ** (a - b) / np.tan((a - b) * h / 2.0)
    return D


@functools.lru_cache(maxsize=None)
def _axis_matrix(n: int, N: int, axis: int) -> np.ndarray:
    """d/dx_axis on the full grid as a Kronecker product of 1-D blocks."""
    dim = 2 * n
    M = np.eye(1)
    for a in range(dim):
        M = np.kron(M, _cot_matrix(N) if a == axis else np.eye(N))
    return M


@functools.lru_cache(maxsize=None)
def _fd_dbar(n: int, q: int, N: int) -> np.ndarray:
    """dbar at level q assembled from cotangent matrices."""
    G = N ** (2 * n)
    rows = multi_indices(n, q + 1)
    cols = multi_indices(n, q)
    out = np.zeros((len(rows) * G, len(cols) * G), dtype=np.complex128)
    for ci, J in enumerate(cols):
        for j in range(1, n + 1):
            if j in J:
                continue
            sign, K = insert_sign(j, J)
            ri = index_of(n, K)
            block = 0.5 * (_axis_matrix(n, N, j - 1) + 1j * _axis_matrix(n, N, j - 1 + n))
            out[ri * G : (ri + 1) * G, ci * G : (ci + 1) * G] += sign * block
    return out


@functools.lru_cache(maxsize=None)
def _fd_dense(tag: str, n: int, q: int, N: int) -> np.ndarray:
    if tag == "dbar":
        return _fd_dbar(n, q, N)
    if tag == "dbar_star":
        return _fd_dbar(n, q, N).conj().T
    G = N ** (2 * n)
    ncomp = num_components(n, q)
    lap = np.zeros((ncomp * G, ncomp * G), dtype=np.complex128)
    if q < n:
        S = _fd_dbar(n, q, N)
        lap += S.conj().T @ S
    if q >= 1:
        S_low = _fd_dbar(n, q - 1, N)
        lap += S_low @ S_low.conj().T
    if tag == "laplacian":
        return lap
    if tag == "leray":
        if q < 1:
            raise ValueError("leray oracle needs q >= 1")
        S = _fd_dbar(n, q, N) if q < n else np.zeros((1, ncomp * G), dtype=np.complex128)
        proj = np.linalg.pinv(lap, rcond=1e-10) @ (S.conj().T @ S)
        # zero modes are assigned to the solenoidal sector: add the grid mean
        mean = np.full((G, G), 1.0 / G)
        for c in range(ncomp):
            proj[c * G : (c + 1) * G, c * G : (c + 1) * G] += mean
        return proj
    raise ValueError(f"unknown operator tag {tag!r}")


def oracle_compare(tag: str, u: FormField) -> float:
    """Relative residual between the independent dense route and the
    spectral route on a band-limited field."""
    grid = u.grid
    if tag == "dbar":
        q_op = u.q
    elif tag == "dbar_star":
        if u.q < 1:
            raise ValueError("dbar_star oracle needs a (0,q>=1) input")
        q_op = u.q - 1
    else:
        q_op = u.q
    q_in, q_out = _levels(tag, grid.n, q_op)
    if u.q != q_in:
        raise ValueError(f"{tag} at level {q_op} expects a (0,{q_in}) input, got (0,{u.q})")
    _check_size(grid.n, q_in, q_out, grid.N)

    dense = _fd_dense(tag, grid.n, q_op, grid.N)
    u_phys = u.dealias().to_physical()
    via_dense = dense @ u_phys.data.reshape(-1)
    via_spectral = _spectral_apply(tag, u_phys).to_physical().data.reshape(-1)
    scale = float(np.linalg.norm(u_phys.data.reshape(-1)))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(via_dense - via_spectral) / scale)
