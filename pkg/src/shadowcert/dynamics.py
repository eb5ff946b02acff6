"""Benchmark dynamics: tilted-field Ising Floquet chain with amplitude damping.

Site 0 is the leftmost qubit and maps to the most significant bit of a
computational-basis index; a bit value of 0 means spin up (|0>, Z = +1).
"""

from dataclasses import dataclass, field, replace

import numpy as np

GOLDEN = (1 + np.sqrt(5)) / 2
DIM_CAP = 2**10


@dataclass(frozen=True)
class IsingParams:
    """Couplings of the two-step Floquet drive.

    Arrays are indexed [half_step, site] with half_step in {0, 1} standing for
    the two Hamiltonians of one period; j_zz has one column per bond (open
    boundary, n_qubits - 1 bonds).
    """

    n_qubits: int
    j_zz: np.ndarray
    h_x: np.ndarray
    h_z: np.ndarray
    t1: float = 1.0
    t2: float = 1.0

    def __post_init__(self):
        n = self.n_qubits
        if n < 1:
            raise ValueError("need at least one qubit")
        object.__setattr__(self, "j_zz", np.atleast_2d(np.asarray(self.j_zz, dtype=float)))
        object.__setattr__(self, "h_x", np.atleast_2d(np.asarray(self.h_x, dtype=float)))
        object.__setattr__(self, "h_z", np.atleast_2d(np.asarray(self.h_z, dtype=float)))
        if self.j_zz.shape != (2, max(n - 1, 0)) and n > 1:
            raise ValueError(f"j_zz must have shape (2, {n - 1})")
        if self.h_x.shape != (2, n) or self.h_z.shape != (2, n):
            raise ValueError(f"h_x, h_z must have shape (2, {n})")

    @classmethod
    def defaults(cls, n_qubits=10, t1=3.0, t2=4.0):
        """Chaotic benchmark point: J = 1, h_z golden ratio, h_x = 0.4 / -0.6.

        The step durations put the drive in the strongly chaotic regime where
        the chain heats to infinite temperature within a few periods; at
        (t1, t2) = (3, 4) the projected ensemble at t = 8 reproduces the
        benchmark mean conditional purity of 0.95 under p_dec = 0.002.
        """
        n = n_qubits
        return cls(
            n_qubits=n,
            j_zz=np.ones((2, max(n - 1, 0))),
            h_x=np.vstack([np.full(n, 0.4), np.full(n, -0.6)]),
            h_z=np.full((2, n), GOLDEN),
            t1=t1,
            t2=t2,
        )

    def cache_key(self):
        return (
            self.n_qubits,
            self.j_zz.tobytes(),
            self.h_x.tobytes(),
            self.h_z.tobytes(),
            float(self.t1),
            float(self.t2),
        )


@dataclass(frozen=True)
class NoiseParams:
    """Per-qubit amplitude damping applied after every Floquet period."""

    p_dec: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p_dec <= 1.0:
            raise ValueError("p_dec must lie in [0, 1]")

    def kraus(self):
        p = self.p_dec
        k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - p)]], dtype=complex)
        k1 = np.array([[0.0, np.sqrt(p)], [0.0, 0.0]], dtype=complex)
        # channel completeness
        assert np.allclose(k0.conj().T @ k0 + k1.conj().T @ k1, np.eye(2))
        return k0, k1


@dataclass(frozen=True)
class PerturbationSpec:
    """Fractional parameter uncertainty: each coupling is scaled by (1 + f*n), n = +-1/2.

    The signs are drawn once per run and reused for every sweep point.
    """

    fraction: float
    signs_j: np.ndarray = field(repr=False)
    signs_hx: np.ndarray = field(repr=False)
    signs_hz: np.ndarray = field(repr=False)

    @classmethod
    def draw(cls, rng, n_qubits, fraction):
        pick = lambda shape: rng.choice([-0.5, 0.5], size=shape)
        return cls(
            fraction=float(fraction),
            signs_j=pick((2, max(n_qubits - 1, 0))),
            signs_hx=pick((2, n_qubits)),
            signs_hz=pick((2, n_qubits)),
        )

    def with_fraction(self, fraction):
        return replace(self, fraction=float(fraction))


def perturb(params, spec):
    """Return params with every J, h_x, h_z multiplied by (1 + f*n)."""
    f = spec.fraction
    return replace(
        params,
        j_zz=params.j_zz * (1.0 + f * spec.signs_j),
        h_x=params.h_x * (1.0 + f * spec.signs_hx),
        h_z=params.h_z * (1.0 + f * spec.signs_hz),
    )


def _spins(n):
    """Z eigenvalue of each qubit for every basis index; shape (2^n, n)."""
    idx = np.arange(2**n)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))) & 1
    return 1.0 - 2.0 * bits


def build_hamiltonian(params, alpha):
    """Dense H_alpha = sum_j J ZZ + h^x X + h^z Z for half-step alpha in {1, 2}."""
    if alpha not in (1, 2):
        raise ValueError("half-step alpha must be 1 or 2")
    n = params.n_qubits
    dim = 2**n
    if dim > DIM_CAP:
        raise ValueError(f"dimension 2^{n} exceeds cap {DIM_CAP}")
    a = alpha - 1
    s = _spins(n)
    diag = s @ params.h_z[a]
    if n > 1:
        diag += (s[:, :-1] * s[:, 1:]) @ params.j_zz[a]
    h = np.diag(diag)
    idx = np.arange(dim)
    for j in range(n):
        h[idx, idx ^ (1 << (n - 1 - j))] += params.h_x[a, j]
    return h


_floquet_cache = {}


def floquet_unitary(params):
    """One-period unitary U_F = exp(-i t2 H2) exp(-i t1 H1), cached per parameter set."""
    key = params.cache_key()
    if key not in _floquet_cache:
        u = np.eye(2**params.n_qubits, dtype=complex)
        for alpha, t in ((1, params.t1), (2, params.t2)):
            w, v = np.linalg.eigh(build_hamiltonian(params, alpha))
            u = (v * np.exp(-1j * t * w)) @ v.conj().T @ u
        if len(_floquet_cache) > 64:
            _floquet_cache.clear()
        _floquet_cache[key] = u
    return _floquet_cache[key]


def apply_single_qubit_kraus(rho, kraus, qubit, n):
    """Apply a single-qubit channel sum_k K rho K^dag on the given qubit of an n-qubit state."""
    dim = 2**n
    left = 2**qubit
    right = dim // (2 * left)
    t = rho.reshape(left, 2, right, left, 2, right)
    out = np.zeros_like(t)
    for k in kraus:
        tk = np.einsum("ab,lbrLBR->larLBR", k, t)
        out += np.einsum("larLBR,cB->larLcR", tk, k.conj())
    return out.reshape(dim, dim)


def damp_all_qubits(rho, noise, n):
    """Amplitude damping on every qubit (single-qubit channels on distinct qubits commute)."""
    if noise.p_dec == 0.0:
        return rho
    kraus = noise.kraus()
    for q in range(n):
        rho = apply_single_qubit_kraus(rho, kraus, q, n)
    return rho


def evolve_state(psi0, params, t):
    """Noiseless pure-state evolution over t Floquet periods."""
    u = floquet_unitary(params)
    psi = np.asarray(psi0, dtype=complex)
    for _ in range(int(t)):
        psi = u @ psi
    return psi


def evolve(rho0, params, noise, t):
    """Noisy density-matrix evolution: per period, unitary conjugation then damping."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    u = floquet_unitary(params)
    rho = np.asarray(rho0, dtype=complex)
    if rho.shape != u.shape:
        raise ValueError("state dimension does not match parameter set")
    for _ in range(int(t)):
        rho = u @ rho @ u.conj().T
        rho = damp_all_qubits(rho, noise, params.n_qubits)
    return rho


def zero_state(n):
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    return psi


def pre_measurement_state(params, noise, t):
    """State after t periods from |0...0>: a pure vector when noiseless, else a density matrix."""
    if noise.p_dec == 0.0:
        return evolve_state(zero_state(params.n_qubits), params, t)
    psi = zero_state(params.n_qubits)
    return evolve(np.outer(psi, psi.conj()), params, noise, t)
