"""State ensembles conditioned on measurement outcomes.

A model maps an outcome label z (an integer encoding the bits of the measured
qubits, first measured qubit = most significant bit) to a probability p_z, the
conditional state rho_q(z) of the unmeasured register, and a twin state
rho_c(z) produced by an independent simulation of the same dynamics.  The twin
is only ever used to choose what to measure; the bounds downstream stay valid
however inaccurate it is.
"""

import threading
import warnings
from dataclasses import dataclass

import numpy as np

UNREACHABLE_TOL = 1e-14
ENUM_CAP = 2**16
CACHE_CAP = 2**20


@dataclass
class Outcome:
    """One enumerated outcome: label, probability, conditional state, twin state."""

    z: int
    p: float
    rho_q: np.ndarray
    rho_c: np.ndarray


def _conditional_block(state, n, measured, z):
    """Project onto outcome z of the measured qubits.

    Returns (p, block) where block is the unnormalized conditional operator
    (or vector) on the unmeasured register, ordered by ascending qubit index.
    """
    n_a = len(measured)
    bits = [(z >> (n_a - 1 - k)) & 1 for k in range(n_a)]
    if state.ndim == 1:
        t = state.reshape((2,) * n)
        idx = [slice(None)] * n
        for q, b in zip(measured, bits):
            idx[q] = b
        sub = t[tuple(idx)].ravel()
        p = float(np.vdot(sub, sub).real)
        return p, sub
    t = state.reshape((2,) * (2 * n))
    idx = [slice(None)] * (2 * n)
    for q, b in zip(measured, bits):
        idx[q] = b
        idx[n + q] = b
    d = 2 ** (n - n_a)
    block = t[tuple(idx)].reshape(d, d)
    return float(np.trace(block).real), block


class ProjectedEnsemble:
    """Projected ensemble of a pre-measurement state on n qubits.

    Parameters
    ----------
    state : pure vector (2^n,) or density matrix (2^n, 2^n)
    twin_state : same shape class, from the simulated (possibly perturbed) dynamics
    n_qubits : total qubit count
    unmeasured : qubits left unmeasured (default: site 0); everything else is
        measured in the computational basis
    """

    def __init__(self, state, twin_state, n_qubits, unmeasured=(0,)):
        self.n = int(n_qubits)
        self.unmeasured = tuple(sorted(set(unmeasured)))
        self.measured = tuple(q for q in range(self.n) if q not in self.unmeasured)
        if not self.measured:
            raise ValueError("at least one qubit must be measured")
        if any(q < 0 or q >= self.n for q in self.unmeasured):
            raise ValueError("unmeasured qubit index out of range")
        self.d = 2 ** len(self.unmeasured)
        if self.d > 16:
            raise ValueError("unmeasured register larger than 4 qubits is not supported")
        self.state = np.asarray(state, dtype=complex)
        self.twin_state = np.asarray(twin_state, dtype=complex)
        self.n_outcomes = 2 ** len(self.measured)
        self._twin_cache = {}
        self._twin_lock = threading.Lock()
        self.twin_fallbacks = 0
        self._marginal = None

    # -- conditional states ------------------------------------------------

    def conditional_state(self, z):
        """(p_z, rho_z) for outcome z; rho_z is None for an unreachable outcome."""
        p, block = _conditional_block(self.state, self.n, self.measured, z)
        if p < UNREACHABLE_TOL:
            return p, None
        if block.ndim == 1:
            rho = np.outer(block, block.conj()) / p
        else:
            rho = block / p
            rho = (rho + rho.conj().T) / 2
        return p, rho

    def classical_state(self, z):
        """Twin conditional state for z, memoized; I/d with a warning count if the twin
        assigns the outcome zero probability."""
        cached = self._twin_cache.get(z)
        if cached is not None:
            return cached
        p, block = _conditional_block(self.twin_state, self.n, self.measured, z)
        if p < UNREACHABLE_TOL:
            self.twin_fallbacks += 1
            rho = np.eye(self.d, dtype=complex) / self.d
        elif block.ndim == 1:
            rho = np.outer(block, block.conj()) / p
        else:
            rho = block / p
            rho = (rho + rho.conj().T) / 2
        with self._twin_lock:
            if len(self._twin_cache) < CACHE_CAP:
                self._twin_cache[z] = rho
        return rho

    # -- outcome distribution ----------------------------------------------

    def outcome_marginal(self):
        """Probability of every outcome z, shape (2^{n_measured},)."""
        if self._marginal is None:
            if self.state.ndim == 1:
                weights = np.abs(self.state) ** 2
            else:
                weights = np.diag(self.state).real
            t = weights.reshape((2,) * self.n)
            keep = self.measured
            t = t.sum(axis=tuple(q for q in range(self.n) if q not in keep))
            self._marginal = np.clip(t.ravel(), 0.0, None)
        return self._marginal

    def sample_outcome(self, rng):
        """Draw one z ~ p_z.

        Pure states use sequential conditional single-qubit sampling; mixed
        states use a cumulative search over the diagonal marginal.
        """
        if self.state.ndim == 1:
            t = self.state.reshape((2,) * self.n)
            z = 0
            for k, q in enumerate(self.measured):
                # measured is ascending, so k axes below q are already gone
                sub0 = np.take(t, 0, axis=q - k)
                sub1 = np.take(t, 1, axis=q - k)
                p0 = float((np.abs(sub0) ** 2).sum())
                p1 = float((np.abs(sub1) ** 2).sum())
                bit = int(rng.random() * (p0 + p1) >= p0)
                t = sub1 if bit else sub0
                z = (z << 1) | bit
            return z
        cdf = np.cumsum(self.outcome_marginal())
        return int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))

    def sample_outcomes(self, rng, m):
        """Vectorized batch of m outcome labels via the cumulative marginal."""
        cdf = np.cumsum(self.outcome_marginal())
        u = rng.random(m) * cdf[-1]
        return np.searchsorted(cdf, u, side="right").astype(np.int64)

    # -- enumeration ---------------------------------------------------------

    def outcomes(self):
        """All outcomes with p_z > 0, with quantum and twin conditional states."""
        if self.n_outcomes > ENUM_CAP:
            raise ValueError(f"enumeration over {self.n_outcomes} outcomes exceeds cap {ENUM_CAP}")
        out = []
        for z in range(self.n_outcomes):
            p, rho = self.conditional_state(z)
            if rho is None:
                continue
            out.append(Outcome(z=z, p=p, rho_q=rho, rho_c=self.classical_state(z)))
        total = sum(o.p for o in out)
        if abs(total - 1.0) > 1e-10:
            warnings.warn(f"outcome probabilities sum to {total}, not 1")
        return out


class DiscreteEnsemble:
    """Explicit ensemble {(p_z, rho_q_z, rho_c_z)}; the oracle and test workhorse."""

    def __init__(self, probs, states_q, states_c=None):
        self.p = np.asarray(probs, dtype=float)
        if abs(self.p.sum() - 1.0) > 1e-10 or (self.p < 0).any():
            raise ValueError("probs must be a probability distribution")
        self.states_q = [np.asarray(r, dtype=complex) for r in states_q]
        if states_c is None:
            states_c = states_q
        self.states_c = [np.asarray(r, dtype=complex) for r in states_c]
        if len(self.states_q) != len(self.p) or len(self.states_c) != len(self.p):
            raise ValueError("state lists must match the number of outcomes")
        self.d = self.states_q[0].shape[0]
        self.n_outcomes = len(self.p)
        self.twin_fallbacks = 0

    def conditional_state(self, z):
        return float(self.p[z]), self.states_q[z]

    def classical_state(self, z):
        return self.states_c[z]

    def sample_outcome(self, rng):
        cdf = np.cumsum(self.p)
        return int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))

    def sample_outcomes(self, rng, m):
        cdf = np.cumsum(self.p)
        u = rng.random(m) * cdf[-1]
        return np.searchsorted(cdf, u, side="right").astype(np.int64)

    def outcomes(self):
        return [
            Outcome(z=z, p=float(self.p[z]), rho_q=self.states_q[z], rho_c=self.states_c[z])
            for z in range(self.n_outcomes)
            if self.p[z] > 0
        ]


def average_state(outcomes):
    """sum_z p_z rho_q_z."""
    return sum(o.p * o.rho_q for o in outcomes)


def delta_qc(outcomes):
    """Average trace distance between quantum and twin conditional states."""
    from .opalg import trace_distance

    return sum(o.p * trace_distance(o.rho_q, o.rho_c) for o in outcomes)


def mean_purity(outcomes):
    return float(sum(o.p * np.trace(o.rho_q @ o.rho_q).real for o in outcomes))
