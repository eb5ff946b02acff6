"""Brute-force ground truth by exact enumeration; no sampling anywhere.

These routines deliberately avoid the estimator and certificate code paths so
they can validate them independently.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .ensemble import DiscreteEnsemble
from .opalg import PAULI, partial_trace, sym_projector, trace_distance


@dataclass
class ExactReport:
    """Exact value of a quantity next to a certified interval."""

    quantity: str
    exact: float
    lower: float
    upper: float

    @property
    def contained(self):
        return self.lower - 1e-9 <= self.exact <= self.upper + 1e-9

    def to_record(self, **provenance):
        rec = {
            "quantity": self.quantity,
            "exact": self.exact,
            "lower": self.lower,
            "upper": self.upper,
            "contained": self.contained,
        }
        rec.update(provenance)
        return rec


def vn_entropy(rho, tol=1e-14):
    """von Neumann entropy in nats."""
    w = np.linalg.eigvalsh(rho)
    w = w[w > tol]
    return float(-(w * np.log(w)).sum())


def true_average(outcomes, quantity, nsup=None, dims=None, keep=None):
    """Exact E_z G(rho_z) over enumerated outcomes.

    quantity: "purity", "quad" (with superoperator nsup), "vn", or "vn_sub"
    (with factor dims and kept indices).
    """
    total = 0.0
    for o in outcomes:
        if quantity == "purity":
            g = np.trace(o.rho_q @ o.rho_q).real
        elif quantity == "quad":
            v = o.rho_q.reshape(-1, order="F")
            g = np.real(v.conj() @ nsup @ v)
        elif quantity == "vn":
            g = vn_entropy(o.rho_q)
        elif quantity == "vn_sub":
            g = vn_entropy(partial_trace(o.rho_q, dims, keep))
        else:
            raise ValueError(f"unknown quantity {quantity!r}")
        total += o.p * g
    return float(total)


def true_frame_potential(outcomes, k=2):
    """F^(k) = sum_{z z'} p_z p_z' Tr[rho_z rho_z']^k by direct pair enumeration."""
    p = np.array([o.p for o in outcomes])
    vs = np.stack([o.rho_q.reshape(-1, order="F") for o in outcomes])
    overlaps = (vs.conj() @ vs.T).real
    return float(np.einsum("a,b,ab->", p, p, overlaps**k))


def true_moment(outcomes, k=2):
    """k-th moment sum_z p_z rho_z^(x)k (k = 2 only)."""
    if k != 2:
        raise ValueError("only k = 2 moments are enumerated")
    return sum(o.p * np.kron(o.rho_q, o.rho_q) for o in outcomes)


def true_design_distance(outcomes):
    """|| rho^(2) - rho^(2)_Haar ||_2^2, cross-checked against the moment identity."""
    d = outcomes[0].rho_q.shape[0]
    diff = true_moment(outcomes) - sym_projector(2, d) / math.comb(d + 1, 2)
    direct = float(np.trace(diff.conj().T @ diff).real)
    via_fp = true_frame_potential(outcomes) - (2.0 / (d * (d + 1))) * true_average(
        outcomes, "purity"
    )
    if abs(direct - via_fp) > 1e-10:
        raise AssertionError(
            f"moment-distance identity violated: {direct} vs {via_fp}"
        )
    return direct


# ---------------------------------------------------------------------------
# qubit sub-problem minimizer
# ---------------------------------------------------------------------------


def f2_minus_qubit(alpha1, alpha3, grid_points=10**4):
    """Global minimum of n3^2 - alpha1 n1 - alpha3 n3 over the unit disk.

    The objective is linear in n1, so n1 = sign(alpha1) sqrt(1 - n3^2) at the
    optimum, leaving a one-dimensional problem solved by a dense grid plus
    local refinement; accuracy ~1e-8.
    """
    a1 = abs(float(alpha1))
    a3 = float(alpha3)

    def profile(n3):
        return n3 * n3 - a3 * n3 - a1 * np.sqrt(np.clip(1.0 - n3 * n3, 0.0, None))

    grid = np.linspace(-1.0, 1.0, grid_points)
    vals = profile(grid)
    k = int(np.argmin(vals))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, grid_points - 1)]
    res = scipy.optimize.minimize_scalar(profile, bounds=(lo, hi), method="bounded",
                                         options={"xatol": 1e-12})
    return float(min(res.fun, vals[k]))


# ---------------------------------------------------------------------------
# indistinguishable pure-state ensembles for a constant mixed ensemble
# ---------------------------------------------------------------------------


def ambiguity_construction(rho0, n):
    """Pure-state qubit ensemble averaging to rho0, hence matching every
    z-independent measurable property of the constant ensemble {rho0}.

    n = 2 uses the eigendecomposition; n > 2 places n equal-weight pure states
    on the Bloch-sphere cone whose axis projection equals the Bloch vector of
    rho0.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (2, 2):
        raise ValueError("ambiguity construction is defined for qubit states")
    if n < 2:
        raise ValueError("need at least two pure states")
    if n == 2:
        w, v = np.linalg.eigh(rho0)
        states = [np.outer(v[:, i], v[:, i].conj()) for i in range(2)]
        return DiscreteEnsemble([float(w[0]), float(w[1])], states, [rho0, rho0])
    bloch = np.array([np.trace(rho0 @ PAULI[ax]).real for ax in "XYZ"])
    r = np.linalg.norm(bloch)
    axis = bloch / r if r > 1e-14 else np.array([0.0, 0.0, 1.0])
    # orthonormal frame around the axis
    seed = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = seed - (seed @ axis) * axis
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    cos_t = min(r, 1.0)
    sin_t = np.sqrt(1.0 - cos_t**2)
    states = []
    for j in range(n):
        phi = 2 * np.pi * j / n
        b = cos_t * axis + sin_t * (np.cos(phi) * e1 + np.sin(phi) * e2)
        states.append(
            (np.eye(2) + b[0] * PAULI["X"] + b[1] * PAULI["Y"] + b[2] * PAULI["Z"]) / 2
        )
    return DiscreteEnsemble([1.0 / n] * n, states, [rho0] * n)


# ---------------------------------------------------------------------------
# simulation-free distinguishability ceiling
# ---------------------------------------------------------------------------


@dataclass
class DistinguishReport:
    n_copies: int
    p_succ_symmetrized: float
    p_succ_helstrom: float
    bound: float
    bound_pairform: float

    @property
    def passes(self):
        return (
            self.p_succ_symmetrized <= self.bound + 1e-10
            and self.p_succ_symmetrized <= self.p_succ_helstrom + 1e-10
        )


def distinguish_check(ensemble, n_copies):
    """Exact optimal success probability of telling the ensemble from its
    averaged-state counterfeit, restricted to label-permutation-symmetric
    strategies, versus the collision bound 1/2 + M^2 sum p_z^2.
    """
    outcomes = ensemble.outcomes()
    n_z = len(outcomes)
    d = outcomes[0].rho_q.shape[0]
    if n_z > 4 or n_copies > 3 or d > 2:
        raise ValueError("distinguish_check is capped at |Z| <= 4, M <= 3, d = 2")
    if (n_z * d) ** n_copies > 512:
        raise ValueError("total dimension exceeds the cap")

    p = np.array([o.p for o in outcomes])
    avg = sum(o.p * o.rho_q for o in outcomes)
    block_true = np.zeros((n_z * d, n_z * d), dtype=complex)
    block_avg = np.zeros_like(block_true)
    for k, o in enumerate(outcomes):
        sl = slice(k * d, (k + 1) * d)
        block_true[sl, sl] = o.p * o.rho_q
        block_avg[sl, sl] = o.p * avg

    def power(mat):
        out = np.array([[1.0 + 0j]])
        for _ in range(n_copies):
            out = np.kron(out, mat)
        return out

    rho1 = power(block_true)
    rho2 = power(block_avg)
    delta = rho1 - rho2

    eye_d = np.eye(d)
    sym = np.zeros_like(delta)
    perms = list(itertools.permutations(range(n_z)))
    for tau in perms:
        pi = np.zeros((n_z, n_z))
        for src, dst in enumerate(tau):
            pi[dst, src] = 1.0
        per_copy = np.kron(pi, eye_d)
        full = power(per_copy)
        sym += full @ delta @ full.conj().T
    sym /= len(perms)

    p_sym = 0.5 + trace_distance(sym, np.zeros_like(sym)) / 4.0
    p_hel = 0.5 + trace_distance(rho1, rho2) / 4.0
    coll = float((p**2).sum())
    return DistinguishReport(
        n_copies=n_copies,
        p_succ_symmetrized=float(p_sym),
        p_succ_helstrom=float(p_hel),
        bound=0.5 + n_copies**2 * coll,
        bound_pairform=0.5 + math.comb(n_copies, 2) * coll,
    )
