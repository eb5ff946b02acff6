"""Dense complex operator and superoperator algebra.

Operators are plain (d, d) complex ndarrays; superoperators are (d^2, d^2)
ndarrays acting on column-stacked vectorizations |X>> = vec(X).  The
column-stacking convention is fixed package-wide: ``vec(X)[i + d*j] = X[i, j]``.
"""

import math

import numpy as np

# validation tolerances
HERM_ATOL = 1e-12
TRACE_ATOL = 1e-10
PSD_ATOL = 1e-10
LOG_FLOOR = 1e-14
PINV_RCOND = 1e-10

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def vec(op):
    """Column-stacked vectorization |X>> of a (d, d) operator."""
    return np.asarray(op).reshape(-1, order="F")


def unvec(v):
    """Inverse of :func:`vec`."""
    v = np.asarray(v)
    d = math.isqrt(v.size)
    if d * d != v.size:
        raise ValueError(f"vector of length {v.size} is not a vectorized square matrix")
    return v.reshape((d, d), order="F")


def hs_inner(a, b):
    """Hilbert-Schmidt inner product <<A|B>> = Tr[A^dag B]."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def super_trace(superop):
    """Trace of a superoperator: the matrix trace of its (d^2, d^2) representation.

    Returns the real part; all superoperators used here are Hermitian as
    matrices up to floating-point noise, or enter traces in Hermitized
    combinations.
    """
    superop = np.asarray(superop)
    if superop.ndim != 2 or superop.shape[0] != superop.shape[1]:
        raise ValueError("superoperator must be a square matrix")
    return float(np.trace(superop).real)


def check_hermitian(op, atol=HERM_ATOL, name="operator"):
    """Validate Hermiticity elementwise; returns the array unchanged."""
    op = np.asarray(op, dtype=complex)
    dev = np.max(np.abs(op - op.conj().T)) if op.size else 0.0
    if dev > atol:
        raise ValueError(f"{name} is not Hermitian (max deviation {dev:.3e} > {atol:.1e})")
    return op


def as_density_matrix(rho, herm_atol=HERM_ATOL, trace_atol=TRACE_ATOL, psd_atol=PSD_ATOL):
    """Validate that ``rho`` is Hermitian, unit-trace and PSD; returns it as complex."""
    rho = check_hermitian(rho, atol=herm_atol, name="density matrix")
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_atol:
        raise ValueError(f"density matrix trace {tr} deviates from 1 by more than {trace_atol:.1e}")
    wmin = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2).min())
    if wmin < -psd_atol:
        raise ValueError(f"density matrix has negative eigenvalue {wmin:.3e}")
    return rho


def partial_trace(rho, dims, keep):
    """Reduced operator on the factors in ``keep``.

    Parameters
    ----------
    rho : (D, D) array with D = prod(dims)
    dims : sequence of factor dimensions
    keep : iterable of factor indices to retain (ascending output order)
    """
    rho = np.asarray(rho)
    dims = list(dims)
    n = len(dims)
    total = int(np.prod(dims))
    if rho.shape != (total, total):
        raise ValueError(f"operator shape {rho.shape} inconsistent with dims {dims}")
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep must be nonempty")
    if keep[0] < 0 or keep[-1] >= n:
        raise ValueError(f"keep indices {keep} out of range for {n} factors")
    t = rho.reshape(dims + dims)
    # contract row/column axes of every traced factor
    for k in sorted(set(range(n)) - set(keep), reverse=True):
        t = np.trace(t, axis1=k, axis2=k + t.ndim // 2)
    dk = int(np.prod([dims[k] for k in keep]))
    return t.reshape(dk, dk)


def _herm_apply(op, f):
    w, v = np.linalg.eigh(np.asarray(op, dtype=complex))
    return (v * f(w)) @ v.conj().T


def herm_exp(op):
    """exp of a Hermitian operator via eigendecomposition."""
    return _herm_apply(check_hermitian(op), np.exp)


def herm_log(op, restricted=False, floor=LOG_FLOOR):
    """log of a Hermitian PSD operator.

    With ``restricted=True`` eigenvalues below ``floor`` are excluded from the
    support and the log acts as zero there; otherwise such eigenvalues raise.
    """
    op = check_hermitian(op)
    w, v = np.linalg.eigh(op)
    if not restricted and w.min() <= floor:
        raise ValueError(
            f"log of a singular operator (min eigenvalue {w.min():.3e}); "
            "pass restricted=True for the restricted-support log"
        )
    lw = np.where(w > floor, np.log(np.maximum(w, floor)), 0.0)
    return (v * lw) @ v.conj().T


def herm_power(op, p):
    """Real power of a Hermitian PSD operator (eigenvalues clipped at 0)."""
    return _herm_apply(check_hermitian(op), lambda w: np.clip(w, 0.0, None) ** p)


def herm_fn(op, fn, p=None, restricted=False):
    """Dispatch on fn in {"exp", "log", "power"}."""
    if fn == "exp":
        return herm_exp(op)
    if fn == "log":
        return herm_log(op, restricted=restricted)
    if fn == "power":
        if p is None:
            raise ValueError("power requires an exponent p")
        return herm_power(op, p)
    raise ValueError(f"unsupported matrix function {fn!r}")


def psd_pinv(mat, rcond=PINV_RCOND):
    """Pseudo-inverse of a Hermitian PSD matrix with a relative eigenvalue cutoff."""
    mat = np.asarray(mat, dtype=complex)
    w, v = np.linalg.eigh((mat + mat.conj().T) / 2)
    cut = rcond * max(w.max(initial=0.0), 0.0)
    inv = np.where(w > cut, 1.0 / np.where(w > cut, w, 1.0), 0.0)
    return (v * inv) @ v.conj().T


def solve_superop(eta_cc, eta_qc, rcond=PINV_RCOND):
    """Least-squares solution zeta of eta_cc . zeta = eta_qc^dag.

    Uses the spectral pseudo-inverse of the PSD matrix ``eta_cc`` with a
    relative cutoff; the solution is exact whenever eta_qc^dag lies in the
    range of eta_cc, which holds for correlator pairs built from the same
    outcome distribution.
    """
    eta_cc = np.asarray(eta_cc)
    eta_qc = np.asarray(eta_qc)
    if eta_cc.shape != eta_qc.shape or eta_cc.shape[0] != eta_cc.shape[1]:
        raise ValueError(f"dimension mismatch: {eta_cc.shape} vs {eta_qc.shape}")
    return psd_pinv(eta_cc, rcond=rcond) @ eta_qc.conj().T


def swap_operator(d):
    """Swap on C^d x C^d: sum_ab |ab><ba|."""
    s = np.zeros((d * d, d * d))
    for a in range(d):
        for b in range(d):
            s[a * d + b, b * d + a] = 1.0
    return s


def sym_projector(k, d):
    """Projector onto the permutation-symmetric subspace of (C^d)^tensor-k, k in {1, 2}."""
    if k == 1:
        return np.eye(d, dtype=complex)
    if k == 2:
        return (np.eye(d * d) + swap_operator(d)).astype(complex) / 2
    raise ValueError(f"unsupported k={k}; only k in {{1, 2}}")


def trace_distance(rho, sigma):
    """One-norm distance ||rho - sigma||_1 = sum |eigenvalues|, in [0, 2] for states."""
    rho = np.asarray(rho)
    sigma = np.asarray(sigma)
    if rho.shape != sigma.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {sigma.shape}")
    return float(np.abs(np.linalg.eigvalsh(rho - sigma)).sum())


def op_on_subsystem(op, dims, keep):
    """Embed an operator acting on the ``keep`` factors into the full space.

    Equivalent to op tensor identity on the remaining factors, with axes
    permuted to the global factor order.
    """
    dims = list(dims)
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    rest = [k for k in range(n) if k not in keep]
    dk = int(np.prod([dims[k] for k in keep]))
    dr = int(np.prod([dims[k] for k in rest]))
    if np.asarray(op).shape != (dk, dk):
        raise ValueError("operator shape inconsistent with kept factors")
    full = np.kron(np.asarray(op, dtype=complex), np.eye(dr))
    order = keep + rest
    t = full.reshape([dims[k] for k in order] * 2)
    perm = [order.index(k) for k in range(n)]
    t = t.transpose(perm + [n + p for p in perm])
    total = int(np.prod(dims))
    return t.reshape(total, total)


def pauli_string(label):
    """Tensor product of single-qubit Paulis, e.g. "XZI"."""
    out = np.array([[1.0 + 0j]])
    for ch in label:
        out = np.kron(out, PAULI[ch])
    return out


def pauli_basis(n_qubits, normalized=True):
    """Orthonormal Hermitian basis of n-qubit operator space: Pauli strings / sqrt(2^n).

    Returns (labels, ops).  Used as the reporting basis; every computed
    quantity is basis-independent.
    """
    labels = [""]
    for _ in range(n_qubits):
        labels = [s + p for s in labels for p in "IXYZ"]
    norm = 2.0 ** (n_qubits / 2) if normalized else 1.0
    return labels, [pauli_string(s) / norm for s in labels]


def op_basis(d):
    """Orthonormal Hermitian operator basis of a d-dimensional space.

    Normalized Pauli strings when d is a power of two, otherwise a normalized
    Hermitian elementary basis.
    """
    n = d.bit_length() - 1
    if d == 2**n:
        return pauli_basis(n)[1]
    basis = []
    for i in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[i, i] = 1.0
        basis.append(e)
    for i in range(d):
        for j in range(i + 1, d):
            s = np.zeros((d, d), dtype=complex)
            s[i, j] = s[j, i] = 1.0 / math.sqrt(2)
            basis.append(s)
            a = np.zeros((d, d), dtype=complex)
            a[i, j] = -1j / math.sqrt(2)
            a[j, i] = 1j / math.sqrt(2)
            basis.append(a)
    return basis
