"""Randomized single-qubit measurement layer and unbiased estimators.

Each experimental repetition r yields a label z^(r), per-qubit rotation labels
c^(r) drawn uniformly from {I, H_X, H_Y}, and measured bits m^(r).  Mapping
(c, m) through the dual frame

    F(c, m) = tensor_i ( 3 u_{c_i}^dag |m_i><m_i| u_{c_i} - I )

makes f = g(z) + Tr[A_z F(c, m)] an unbiased estimator of
E_z [ g(z) + Tr[A_z rho_z] ] for any classically computable g and A_z, which
is the entire class of quantities the certificate engine consumes.
"""

from dataclasses import dataclass

import numpy as np
import scipy.stats

from .opalg import vec

SQ2 = np.sqrt(2.0)

# index 0: measure Z; 1: Hadamard, measures X; 2: Y-Hadamard, measures Y
CLIFFORD_GATES = (
    np.eye(2, dtype=complex),
    np.array([[1, 1], [1, -1]], dtype=complex) / SQ2,
    np.array([[1, -1j], [1, 1j]], dtype=complex) / SQ2,
)
N_CLIFFORD = 3

CLIFFORD_LABELS = "IXY"


def _frame_factors():
    f = np.empty((3, 2, 2, 2), dtype=complex)
    for c, u in enumerate(CLIFFORD_GATES):
        for m in range(2):
            proj = np.outer(u.conj().T[:, m], u[m, :])
            f[c, m] = 3.0 * proj - np.eye(2)
    return f


FRAME_FACTORS = _frame_factors()  # [c, m] -> 2x2 dual-frame factor, trace 1


def dual_frame(c, m):
    """Dual-frame operator for per-qubit labels c and outcome bits m."""
    out = np.array([[1.0 + 0j]])
    for ci, mi in zip(c, m):
        out = np.kron(out, FRAME_FACTORS[ci, mi])
    return out


@dataclass(frozen=True)
class ShadowRecord:
    """One repetition: ensemble label z, rotation labels c, outcome bits m."""

    z: int
    c: tuple
    m: tuple


class ShadowRecords:
    """Column-wise batch of shadow records."""

    def __init__(self, z, c, m, n_measured):
        self.z = np.asarray(z, dtype=np.int64)
        self.c = np.asarray(c, dtype=np.int8)
        self.m = np.asarray(m, dtype=np.int8)
        self.n_measured = int(n_measured)
        if self.c.shape != self.m.shape or self.c.shape[0] != self.z.shape[0]:
            raise ValueError("inconsistent record arrays")

    def __len__(self):
        return self.z.shape[0]

    @property
    def n_unmeasured(self):
        return self.c.shape[1]

    def __iter__(self):
        for k in range(len(self)):
            yield ShadowRecord(int(self.z[k]), tuple(self.c[k]), tuple(self.m[k]))

    def subset(self, idx):
        return ShadowRecords(self.z[idx], self.c[idx], self.m[idx], self.n_measured)

    def split_half(self):
        """Deterministic 50/50 split (even/odd shots) for fit/evaluate separation."""
        idx = np.arange(len(self))
        return self.subset(idx[::2]), self.subset(idx[1::2])

    @classmethod
    def from_list(cls, records, n_measured):
        z = [r.z for r in records]
        c = [r.c for r in records]
        m = [r.m for r in records]
        return cls(z, c, m, n_measured)

    def save(self, path):
        """Line-oriented ASCII: `zbits clabels mbits` per record."""
        with open(path, "w") as fh:
            fh.write(f"# n_measured={self.n_measured} n_unmeasured={self.n_unmeasured}\n")
            for k in range(len(self)):
                zb = format(int(self.z[k]), f"0{self.n_measured}b")
                cb = "".join(CLIFFORD_LABELS[v] for v in self.c[k])
                mb = "".join(str(int(v)) for v in self.m[k])
                fh.write(f"{zb} {cb} {mb}\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            header = fh.readline().strip()
            meta = dict(kv.split("=") for kv in header.lstrip("# ").split())
            n_meas = int(meta["n_measured"])
            z, c, m = [], [], []
            for line in fh:
                zb, cb, mb = line.split()
                z.append(int(zb, 2))
                c.append([CLIFFORD_LABELS.index(ch) for ch in cb])
                m.append([int(ch) for ch in mb])
        return cls(z, c, m, n_meas)


def sample_shadow(rho, rng):
    """Single randomized measurement of one copy of rho: returns (c, m)."""
    d = rho.shape[0]
    n_b = d.bit_length() - 1
    c = tuple(int(v) for v in rng.integers(0, N_CLIFFORD, size=n_b))
    u = np.array([[1.0 + 0j]])
    for ci in c:
        u = np.kron(u, CLIFFORD_GATES[ci])
    probs = np.clip(np.einsum("ij,jk,ik->i", u, rho, u.conj()).real, 0.0, None)
    out = int(rng.choice(d, p=probs / probs.sum()))
    m = tuple((out >> (n_b - 1 - i)) & 1 for i in range(n_b))
    return c, m


def _combo_index(c_arr):
    n_b = c_arr.shape[1]
    weights = N_CLIFFORD ** np.arange(n_b - 1, -1, -1)
    return c_arr @ weights


def _combo_unitaries(n_b):
    combos = []
    for k in range(N_CLIFFORD**n_b):
        kk = k
        digits = []  # least-significant digit = last qubit
        for _ in range(n_b):
            digits.append(kk % N_CLIFFORD)
            kk //= N_CLIFFORD
        u = np.array([[1.0 + 0j]])
        for ci in reversed(digits):
            u = np.kron(u, CLIFFORD_GATES[ci])
        combos.append(u)
    return combos


def generate_records(model, m_shots, rng):
    """Draw m_shots full repetitions from the model: z ~ p_z, uniform c, Born m.

    The conditional and twin states are only evaluated for the z values that
    actually occur.
    """
    n_b = model.d.bit_length() - 1
    z_arr = model.sample_outcomes(rng, m_shots)
    c_arr = rng.integers(0, N_CLIFFORD, size=(m_shots, n_b), dtype=np.int8)
    combo = _combo_index(c_arr)

    uniq, inv = np.unique(z_arr, return_inverse=True)
    unitaries = _combo_unitaries(n_b)
    ptab = np.empty((len(uniq), len(unitaries), model.d))
    for a, z in enumerate(uniq):
        _, rho = model.conditional_state(int(z))
        for b, u in enumerate(unitaries):
            ptab[a, b] = np.clip(np.einsum("ij,jk,ik->i", u, rho, u.conj()).real, 0.0, None)

    p_m = ptab[inv, combo]
    cdf = np.cumsum(p_m, axis=1)
    u_rand = rng.random(m_shots) * cdf[:, -1]
    out = (cdf < u_rand[:, None]).sum(axis=1)
    shifts = n_b - 1 - np.arange(n_b)
    m_arr = ((out[:, None] >> shifts) & 1).astype(np.int8)
    n_measured = max(1, (model.n_outcomes - 1).bit_length())
    return ShadowRecords(z_arr, c_arr, m_arr, n_measured)


def frame_vectors(records):
    """Vectorized dual-frame operators |F_r>>, shape (M, d^2)."""
    m_shots = len(records)
    out = np.ones((m_shots, 1, 1), dtype=complex)
    for q in range(records.n_unmeasured):
        f = FRAME_FACTORS[records.c[:, q], records.m[:, q]]
        a = out.shape[1]
        out = np.einsum("rab,rcd->racbd", out, f).reshape(m_shots, 2 * a, 2 * a)
    return out.transpose(0, 2, 1).reshape(m_shots, -1)


@dataclass
class CorrelatorEstimate:
    """Monte Carlo estimate with its standard error; value may be scalar or array."""

    value: object
    stderr: object
    n_samples: int
    contrib: object = None  # per-record scalar contributions, when scalar-valued


def _scalar_estimate(contrib):
    m = contrib.shape[0]
    value = float(contrib.mean())
    stderr = float(contrib.std(ddof=1) / np.sqrt(m)) if m > 1 else 0.0
    return CorrelatorEstimate(value, stderr, m, contrib)


class ExactCorrelators:
    """Asymptotic (infinite-sample) evaluation of estimable functionals from enumeration."""

    def __init__(self, outcomes):
        self.outcomes = list(outcomes)
        self.d = self.outcomes[0].rho_q.shape[0]
        self._p = np.array([o.p for o in self.outcomes])
        self._vq = np.stack([vec(o.rho_q) for o in self.outcomes])
        self._vc = np.stack([vec(o.rho_c) for o in self.outcomes])

    @property
    def exact(self):
        return True

    def eta_qc(self):
        return np.einsum("z,zi,zj->ij", self._p, self._vq, self._vc.conj())

    def eta_cc(self):
        return np.einsum("z,zi,zj->ij", self._p, self._vc, self._vc.conj())

    def estimate(self, per_z):
        """E_z [ g(z) + Tr[rho_z A_z] ] for per_z(outcome) -> (g, A or None)."""
        total = 0.0
        for o, vq in zip(self.outcomes, self._vq):
            g, a_op = per_z(o)
            term = g
            if a_op is not None:
                term += np.vdot(vec(a_op), vq).real
            total += o.p * term
        return CorrelatorEstimate(float(total), 0.0, 0, None)

    def super_functional(self, x=None, y=None, const=0.0):
        """Re STr[x eta_qc] + Re STr[y eta_cc] + const, exactly.

        Uses STr[X eta_qc] = E_z <<rho_c|X|rho_q>> (operator-basis completeness).
        """
        total = const
        if x is not None:
            total += np.einsum("z,zi,ij,zj->", self._p, self._vc.conj(), x, self._vq).real
        if y is not None:
            total += np.einsum("z,zi,ij,zj->", self._p, self._vc.conj(), y, self._vc).real
        return CorrelatorEstimate(float(total), 0.0, 0, None)


class ShadowCorrelators:
    """Empirical evaluation of the same functionals from shadow records.

    Every certificate consumed downstream is, at frozen multipliers, a sample
    mean of per-record scalars; stderr comes from the per-record spread, so
    correlations between jointly estimated quantities are handled exactly.
    """

    def __init__(self, records, model):
        self.records = records
        self.model = model
        self.d = model.d
        self.uniq, self._inv = np.unique(records.z, return_inverse=True)
        self._vf = frame_vectors(records)
        self._vc_uniq = np.stack([vec(model.classical_state(int(z))) for z in self.uniq])
        self._vc = self._vc_uniq[self._inv]

    @property
    def exact(self):
        return False

    def __len__(self):
        return len(self.records)

    def split_half(self):
        a, b = self.records.split_half()
        return ShadowCorrelators(a, self.model), ShadowCorrelators(b, self.model)

    def eta_qc(self):
        return np.einsum("ri,rj->ij", self._vf, self._vc.conj()) / len(self)

    def eta_cc(self):
        return np.einsum("ri,rj->ij", self._vc, self._vc.conj()) / len(self)

    def _per_z_tables(self, per_z):
        g_tab = np.zeros(len(self.uniq))
        va_tab = np.zeros((len(self.uniq), self.d * self.d), dtype=complex)
        for k, z in enumerate(self.uniq):
            o = _RecordOutcome(int(z), self.model)
            g, a_op = per_z(o)
            g_tab[k] = g
            if a_op is not None:
                va_tab[k] = vec(a_op)
        return g_tab, va_tab

    def estimate(self, per_z):
        g_tab, va_tab = self._per_z_tables(per_z)
        contrib = g_tab[self._inv] + np.einsum(
            "ri,ri->r", va_tab[self._inv].conj(), self._vf
        ).real
        return _scalar_estimate(contrib)

    def super_functional(self, x=None, y=None, const=0.0):
        contrib = np.full(len(self), float(const))
        if x is not None:
            contrib = contrib + np.einsum("ri,ij,rj->r", self._vc.conj(), x, self._vf).real
        if y is not None:
            contrib = contrib + np.einsum("ri,ij,rj->r", self._vc.conj(), y, self._vc).real
        return _scalar_estimate(contrib)


class _RecordOutcome:
    """Outcome view handed to per_z callbacks in empirical mode (no quantum state)."""

    __slots__ = ("z", "_model")

    def __init__(self, z, model):
        self.z = z
        self._model = model

    @property
    def rho_c(self):
        return self._model.classical_state(self.z)


def estimate_linear(records, a_map, model):
    """Sample mean of Tr[A_{z_r} F_r] over the records; a_map maps z -> operator."""
    if len(records) == 0:
        raise ValueError("empty record list")
    src = records if isinstance(records, ShadowCorrelators) else ShadowCorrelators(records, model)
    return src.estimate(lambda o: (0.0, a_map(o.z)))


def estimate_superops(records, model):
    """Empirical correlator pair (eta_qc_hat, eta_cc_hat) with elementwise standard errors."""
    if len(records) == 0:
        raise ValueError("empty record list")
    src = records if isinstance(records, ShadowCorrelators) else ShadowCorrelators(records, model)
    m = len(src)
    qc_terms = np.einsum("ri,rj->rij", src._vf, src._vc.conj())
    cc_terms = np.einsum("ri,rj->rij", src._vc, src._vc.conj())

    def reduce(terms):
        mean = terms.mean(axis=0)
        var = terms.real.var(axis=0, ddof=1) + terms.imag.var(axis=0, ddof=1)
        return CorrelatorEstimate(mean, np.sqrt(var / m), m, None)

    return reduce(qc_terms), reduce(cc_terms)


def one_sided_z(level):
    return float(scipy.stats.norm.ppf(level))


def confidence_bound(est, level, side, two_sided=False):
    """Normal-approximation confidence adjustment of a scalar estimate.

    side="lower": value such that the true mean exceeds it with prob >= level.
    """
    if not 0.0 < level < 1.0:
        raise ValueError("confidence level must be in (0, 1)")
    if est.n_samples and est.n_samples < 30 and est.stderr > 0:
        raise ValueError("too few samples for the normal approximation")
    q = (1.0 + level) / 2.0 if two_sided else level
    shift = one_sided_z(q) * est.stderr
    if side == "lower":
        return est.value - shift
    if side == "upper":
        return est.value + shift
    raise ValueError("side must be 'lower' or 'upper'")


def bootstrap_stderr(contrib, n_boot=1000, rng=None):
    """Bootstrap standard error of a per-record mean; alternative for small M."""
    rng = rng or np.random.default_rng(0)
    contrib = np.asarray(contrib)
    m = contrib.shape[0]
    idx = rng.integers(0, m, size=(n_boot, m))
    return float(contrib[idx].mean(axis=1).std(ddof=1))
