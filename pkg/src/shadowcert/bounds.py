"""Certified two-sided bounds on ensemble averages.

Every bound below is a weak-duality certificate: a multiplier object (a
superoperator zeta, a vector mu, or scalars lambda) is fitted from the
available correlator data and then frozen, after which the certificate value
is an exactly linear functional of estimable quantities.  Evaluated on exact
enumeration data the certificates reproduce their closed forms; evaluated on
shadow records they become sample means with honest per-record standard
errors, to be confidence-adjusted on the certified side.

Conventions: a "source" is an ExactCorrelators or ShadowCorrelators instance;
asymptotic mode = exact source, empirical mode = shadow source.
"""

from dataclasses import dataclass, field

import numpy as np

from .opalg import (
    PINV_RCOND,
    herm_exp,
    hs_inner,
    op_basis,
    op_on_subsystem,
    partial_trace,
    psd_pinv,
    solve_superop,
    vec,
)
from .shadows import one_sided_z

PSD_TOL = 1e-10
TWIN_REG = 1e-12


@dataclass
class BoundResult:
    """One side of a certified bound."""

    quantity: str
    side: str
    value: float
    stderr: float = 0.0
    confidence: float = 0.99
    method: str = ""
    mode: str = "asymptotic"
    n_samples: int = 0
    diagnostics: dict = field(default_factory=dict)
    contrib: object = field(default=None, repr=False)

    def certified(self):
        """Confidence-adjusted bound: relaxed by z_level * stderr on the safe side."""
        shift = one_sided_z(self.confidence) * self.stderr
        return self.value - shift if self.side == "lower" else self.value + shift

    def to_record(self, **provenance):
        rec = {
            "quantity": self.quantity,
            "side": self.side,
            "value": self.value,
            "stderr": self.stderr,
            "certified": self.certified(),
            "confidence": self.confidence,
            "method": self.method,
            "mode": self.mode,
            "n_samples": self.n_samples,
        }
        rec.update(provenance)
        return rec


def _result(quantity, side, est, method, src, confidence, diagnostics=None):
    return BoundResult(
        quantity=quantity,
        side=side,
        value=est.value,
        stderr=est.stderr,
        confidence=confidence,
        method=method,
        mode="asymptotic" if src.exact else "empirical",
        n_samples=est.n_samples,
        diagnostics=diagnostics or {},
        contrib=est.contrib,
    )


# ---------------------------------------------------------------------------
# constraint-set (Gram) purity lower bound
# ---------------------------------------------------------------------------


class ConstraintSet:
    """A family of measured operator maps z -> A_z^(i) with their observed values.

    ``maps`` are callables taking an outcome view (attributes z, rho_c) and
    returning a Hermitian operator.  Values b_i, the Gram matrix
    G_ij = E_z Tr[A^(i)_z A^(j)_z] and the traces a_i = E_z Tr[A^(i)_z] are
    estimated from the source (exactly, in asymptotic mode).
    """

    def __init__(self, source, maps, include_identity=False):
        self.source = source
        self.d = source.d
        self.maps = list(maps)
        if include_identity:
            eye = np.eye(self.d, dtype=complex) / self.d
            self.maps = [lambda o, _e=eye: _e] + self.maps
        self.r = len(self.maps)
        self.b = np.zeros(self.r)
        self.b_stderr = np.zeros(self.r)
        for i, amap in enumerate(self.maps):
            est = source.estimate(lambda o, f=amap: (0.0, f(o)))
            self.b[i] = est.value
            self.b_stderr[i] = est.stderr
        self.gram = np.zeros((self.r, self.r))
        for i in range(self.r):
            for j in range(i, self.r):
                est = source.estimate(
                    lambda o, fi=self.maps[i], fj=self.maps[j]: (
                        hs_inner(fi(o), fj(o)).real,
                        None,
                    )
                )
                self.gram[i, j] = self.gram[j, i] = est.value
        self.a = np.array(
            [
                source.estimate(lambda o, f=amap: (float(np.trace(f(o)).real), None)).value
                for amap in self.maps
            ]
        )


def purity_lower_gram(cs, rcond=PINV_RCOND, confidence=0.99):
    """Lower bound on E_z Tr[rho_z^2] by projecting onto the measured operator span.

    The certificate is h(mu) = E_z (2 sum_i mu_i Tr[A^(i)_z rho_z]
    - sum_ij mu_i mu_j Tr[A^(i)_z A^(j)_z]) <= E_z Tr[rho_z^2], valid for any
    mu; mu is fixed at the Gram pseudo-inverse point, where h = b^T G^+ b.
    With a single constraint A_z = rho_c_z this is exactly the
    Cauchy-Schwarz bound (P^QC)^2 / P^CC.  No constraints: the 1/d floor.
    """
    src = cs.source
    if cs.r == 0:
        return BoundResult(
            quantity="purity",
            side="lower",
            value=1.0 / cs.d,
            method="gram-projection",
            confidence=confidence,
            mode="asymptotic" if src.exact else "empirical",
        )
    gplus = psd_pinv(cs.gram, rcond=rcond).real
    mu = gplus @ cs.b
    resid = np.linalg.norm(cs.gram @ mu - cs.b)
    diagnostics = {"gram_residual": float(resid)}
    noise_slack = 5.0 * np.linalg.norm(cs.b_stderr)
    if resid > 1e-6 * max(np.linalg.norm(cs.b), 1e-30) + noise_slack:
        # observed values cannot be matched inside the Gram range: keep only
        # the universal floor and flag it
        diagnostics["degenerate_gram"] = True
        return BoundResult(
            quantity="purity",
            side="lower",
            value=1.0 / cs.d,
            method="gram-projection-degenerate",
            confidence=confidence,
            mode="asymptotic" if src.exact else "empirical",
            diagnostics=diagnostics,
        )

    worst_eig = [np.inf]

    def per_z(o):
        ops = [amap(o) for amap in cs.maps]
        g_z = np.array([[hs_inner(x, y).real for y in ops] for x in ops])
        combo = sum(m * op for m, op in zip(mu, ops))
        traceless = combo - np.trace(combo).real * np.eye(cs.d) / cs.d
        worst_eig[0] = min(worst_eig[0], float(np.linalg.eigvalsh(traceless).min()))
        return -float(mu @ g_z @ mu), 2 * combo

    est = src.estimate(per_z)
    # the quadratic relaxation is the exact dual optimum when the traceless
    # multiplier combination satisfies min eig >= -2/d for every observed z
    diagnostics["multiplier_min_eig"] = worst_eig[0]
    diagnostics["relaxation_tight"] = bool(worst_eig[0] >= -2.0 / cs.d - 1e-12)
    return _result("purity", "lower", est, "gram-projection", src, confidence, diagnostics)


# ---------------------------------------------------------------------------
# superoperator certificates: purity / quadratic observables
# ---------------------------------------------------------------------------


def fit_zeta(source, rcond=PINV_RCOND):
    """Multiplier superoperator solving eta_cc zeta = eta_qc^dag on the data."""
    return solve_superop(source.eta_cc(), source.eta_qc(), rcond=rcond)


def _check_psd_superop(nsup, name="N"):
    nsup = np.asarray(nsup, dtype=complex)
    sym = (nsup + nsup.conj().T) / 2
    wmin = float(np.linalg.eigvalsh(sym).min())
    if wmin < -PSD_TOL:
        raise ValueError(f"superoperator {name} is not PSD (min eigenvalue {wmin:.3e})")
    return sym


def _quad_functional(source, nsup, zeta, const=0.0):
    """Estimate const + 2 Re STr[zeta N eta_qc] - STr[zeta N zeta^dag eta_cc]."""
    zn = zeta @ nsup
    return source.super_functional(x=2 * zn, y=-(zn @ zeta.conj().T), const=const)


def quad_lower(nsup, source, fit_source=None, rcond=PINV_RCOND, confidence=0.99, quantity="quadratic"):
    """Certified lower bound for E_z <<rho_z|N|rho_z>> with N PSD.

    Follows from E_z || sqrt(N)(|rho_z>> - zeta^dag|rho_c_z>>) ||^2 >= 0 for
    any zeta; at the fitted zeta the value reduces to STr[N eta_qc zeta].
    """
    nsym = _check_psd_superop(nsup)
    zeta = fit_zeta(fit_source or source, rcond=rcond)
    est = _quad_functional(source, nsym, zeta)
    return _result(quantity, "lower", est, "dual-superop", source, confidence)


def quad_upper(nsup, source, fit_source=None, rcond=PINV_RCOND, confidence=0.99, quantity="quadratic"):
    """Certified upper bound: ||N||_inf (1 - purity certificate) + lower functional."""
    nsym = _check_psd_superop(nsup)
    norm_inf = float(np.linalg.eigvalsh(nsym).max())
    zeta = fit_zeta(fit_source or source, rcond=rcond)
    nbar = nsym - norm_inf * np.eye(nsym.shape[0])
    est = _quad_functional(source, nbar, zeta, const=norm_inf)
    return _result(quantity, "upper", est, "dual-superop", source, confidence)


def purity_lower_super(source, fit_source=None, rcond=PINV_RCOND, confidence=0.99):
    """Lower bound on global purity: the N = id case of the quadratic certificate."""
    d2 = source.d * source.d
    res = quad_lower(np.eye(d2), source, fit_source, rcond, confidence, quantity="purity")
    res.method = "dual-superop"
    return res


def purity_upper(n_constraints, p_max, d, confidence=0.99):
    """Upper bound on global purity.

    Any finite set of measured averages admits a consistent ensemble with at
    most R non-pure states, so no useful upper bound exists; the returned
    value is 1 with the structural floor 1 - (1 - 1/d) R max_z p_z as a
    diagnostic.
    """
    if n_constraints < 0 or not 0 < p_max <= 1:
        raise ValueError("need n_constraints >= 0 and p_max in (0, 1]")
    floor = 1.0 - (1.0 - 1.0 / d) * n_constraints * p_max
    return BoundResult(
        quantity="purity",
        side="upper",
        value=1.0,
        method="vacuous",
        confidence=confidence,
        diagnostics={"pure_ensemble_floor": floor},
    )


def obs_squared_superop(obs):
    """Superoperator |O>><<O| whose quadratic form is E_z Tr[O rho_z]^2."""
    v = vec(obs)
    return np.outer(v, v.conj())


def subsystem_purity_superop(dims, keep):
    """Superoperator whose quadratic form is the purity of the kept factors.

    Parseval over an orthonormal operator basis of the subsystem, tensored
    with the identity on the complement.
    """
    dims = list(dims)
    dk = int(np.prod([dims[k] for k in keep]))
    nsup = np.zeros((int(np.prod(dims)) ** 2,) * 2, dtype=complex)
    for tau in op_basis(dk):
        a = op_on_subsystem(tau, dims, keep)
        va = vec(a)
        nsup += np.outer(va, va.conj())
    return nsup


# ---------------------------------------------------------------------------
# von Neumann entropy certificates
# ---------------------------------------------------------------------------


def _twin_spectral_data(rho_c, eps):
    """Eigendata of a twin state split at threshold eps."""
    w, v = np.linalg.eigh(rho_c)
    w = np.clip(w, 0.0, None)
    low = w <= eps
    pi_low = (v[:, low] @ v[:, low].conj().T) if low.any() else np.zeros_like(rho_c)
    keep = ~low
    if keep.any():
        logw = np.log(w[keep])
        a1 = -(v[:, keep] * logw) @ v[:, keep].conj().T
        t_z = float(w[keep].sum())
        delta_c = float(w[low].sum())
    else:
        a1 = np.zeros_like(rho_c)
        t_z = 0.0
        delta_c = 1.0
    return a1, pi_low, int(low.sum()), t_z, delta_c


def vn_upper(source, eps=1e-6, optimize_lam=False, confidence=0.99):
    """Certified upper bound on E_z S(rho_z).

    The dual function h(l1, l2) = E_z log(sum_{q>eps} q^l1 + e^{-l2} r_z)
    + l1 <A1> + l2 <Pi_low> is an upper bound for every (l1, l2); l1 = 1 and
    the closed-form near-optimal l2 are used.  Twin eigenvalues below eps are
    moved to the regularized sector, which keeps the certificate finite for
    singular twins; with no small eigenvalues it reduces to
    -E_z Tr[rho_z log rho_c_z].
    """
    d = source.d
    cache = {}

    def data(o):
        key = o.z
        if key not in cache:
            cache[key] = _twin_spectral_data(o.rho_c, eps)
        return cache[key]

    delta_q = source.estimate(lambda o: (0.0, data(o)[1]))
    r_bar = source.estimate(lambda o: (float(data(o)[2]), None)).value
    delta_c = source.estimate(lambda o: (data(o)[4], None)).value
    dq = float(delta_q.value)
    diagnostics = {"delta_q": dq, "rank_low_mean": r_bar, "delta_c": delta_c}
    if dq >= 1.0 - 1e-12:
        return BoundResult(
            quantity="vn_entropy",
            side="upper",
            value=float(np.log(d)),
            method="vn-dual-degenerate",
            confidence=confidence,
            mode="asymptotic" if source.exact else "empirical",
            diagnostics=diagnostics,
        )

    regularized = r_bar > 0
    lam1 = 1.0
    if regularized:
        dq_c = min(max(dq, 1e-12), 1.0 - 1e-12)
        lam2 = float(np.log(r_bar * (1.0 - dq_c) / (dq_c * (1.0 - min(delta_c, 1.0 - 1e-15)))))
    else:
        lam2 = 0.0

    def dual_estimate(l1, l2):
        e_l2 = np.exp(-l2)

        def per_z(o):
            a1, pi_low, r_z, _, _ = data(o)
            w = np.linalg.eigvalsh(o.rho_c)
            t_z = float((np.clip(w[w > eps], 1e-300, None) ** l1).sum())
            g = float(np.log(t_z + e_l2 * r_z))
            return g, l1 * a1 + l2 * pi_low

        return source.estimate(per_z)

    if optimize_lam:
        lam1 = _grid_refine(lambda l: dual_estimate(l, lam2).value, lam1, minimize=True)
    est = dual_estimate(lam1, lam2)
    method = "vn-dual-regularized" if regularized else "vn-dual-qc"
    diagnostics["lambda"] = (lam1, lam2)
    return _result("vn_entropy", "upper", est, method, source, confidence, diagnostics)


def vn_lower_subsystem(
    source,
    dims,
    keep,
    lam=(1.0, 1.0),
    refine=False,
    twin_reg=TWIN_REG,
    confidence=0.99,
):
    """Certified lower bound on E_z S(rho_z restricted to the kept factors).

    Certificate: E_z S(rho^sub_z) >= -l1 <A1> - l2 <A2>
    - E_z log || Tr_rest exp(-l1 A1_z - l2 A2_z) ||_inf with A1_z = -log rho_c_z
    and A2_z = log rho_c_sub_z (x) I, valid for any (l1, l2).  Near-singular
    twins are mixed with twin_reg * I/d so the logs stay finite; at
    lam = (1, 1) the norm term is nonpositive-free by the operator
    monotonicity of Tr_rest exp(log rho - log rho_sub (x) I) <= I.
    """
    dims = list(dims)
    d = source.d
    if int(np.prod(dims)) != d:
        raise ValueError(f"factor dims {dims} do not multiply to the source dimension {d}")
    cache = {}

    def ops(o):
        if o.z not in cache:
            rho_c = o.rho_c
            wmin = float(np.linalg.eigvalsh(rho_c).min())
            if wmin <= twin_reg:
                rho_c = (1.0 - twin_reg) * rho_c + twin_reg * np.eye(d) / d
            sub = partial_trace(rho_c, dims, keep)
            w1, v1 = np.linalg.eigh(rho_c)
            a1 = -(v1 * np.log(np.clip(w1, 1e-300, None))) @ v1.conj().T
            w2, v2 = np.linalg.eigh(sub)
            log_sub = (v2 * np.log(np.clip(w2, 1e-300, None))) @ v2.conj().T
            a2 = op_on_subsystem(log_sub, dims, keep)
            cache[o.z] = (a1, a2)
        return cache[o.z]

    def dual_estimate(l1, l2):
        def per_z(o):
            a1, a2 = ops(o)
            comb = -(l1 * a1 + l2 * a2)
            reduced = partial_trace(herm_exp(comb), dims, keep)
            g = -float(np.log(np.linalg.eigvalsh(reduced).max()))
            return g, comb

        return source.estimate(per_z)

    l1, l2 = lam
    if refine:
        for _ in range(2):
            l1 = _grid_refine(lambda x: dual_estimate(x, l2).value, l1, minimize=False)
            l2 = _grid_refine(lambda x: dual_estimate(l1, x).value, l2, minimize=False)
    est = dual_estimate(l1, l2)
    return _result(
        "vn_subsystem",
        "lower",
        est,
        "vn-dual-conditional",
        source,
        confidence,
        {"lambda": (l1, l2)},
    )


def _grid_refine(fn, center, minimize, points=11, span=0.5):
    """One sweep of a +-span relative grid around center; picks the best point."""
    grid = center * (1.0 + span * np.linspace(-1.0, 1.0, points)) if center != 0 else np.linspace(-span, span, points)
    vals = [fn(float(x)) for x in grid]
    best = int(np.argmin(vals) if minimize else np.argmax(vals))
    return float(grid[best])


# ---------------------------------------------------------------------------
# frame potential and design distance
# ---------------------------------------------------------------------------


def frame_potential_bounds(source, fit_source=None, k=2, rcond=PINV_RCOND, confidence=0.99):
    """Certified two-sided bounds for the k = 2 frame potential.

    Lower: STr[W^2] with W = eta_qc zeta (Hermitian PSD at the fitted zeta);
    upper adds 1 - STr[W]^2.  Empirical standard errors are first-order
    (delta-method) since the certificate is quadratic in the correlators.
    """
    if k != 2:
        raise ValueError("only k = 2 frame potentials are supported")
    fit = fit_source or source
    zeta = fit_zeta(fit, rcond=rcond)
    w_mat = source.eta_qc() @ zeta
    w_mat = (w_mat + w_mat.conj().T) / 2
    lower_val = float(np.trace(w_mat @ w_mat).real)
    s_val = float(np.trace(w_mat).real)

    mode = "asymptotic" if source.exact else "empirical"
    if source.exact:
        lower = BoundResult("frame_potential", "lower", lower_val, 0.0, confidence, "dual-superop-squared", mode)
        upper = BoundResult(
            "frame_potential",
            "upper",
            lower_val + 1.0 - s_val**2,
            0.0,
            confidence,
            "dual-superop-squared",
            mode,
        )
        return lower, upper

    # delta-method contribution streams at frozen zeta
    zw = zeta @ w_mat
    low_est = source.super_functional(
        x=4 * zw, y=-2 * zw @ zeta.conj().T, const=-lower_val
    )
    pur_est = _quad_functional(source, np.eye(w_mat.shape[0]), zeta)
    up_contrib = low_est.contrib + 1.0 - 2.0 * s_val * pur_est.contrib + s_val**2
    m = len(up_contrib)
    lower = BoundResult(
        "frame_potential",
        "lower",
        low_est.value,
        low_est.stderr,
        confidence,
        "dual-superop-squared",
        mode,
        n_samples=m,
        contrib=low_est.contrib,
    )
    upper = BoundResult(
        "frame_potential",
        "upper",
        float(up_contrib.mean()),
        float(up_contrib.std(ddof=1) / np.sqrt(m)),
        confidence,
        "dual-superop-squared",
        mode,
        n_samples=m,
        contrib=up_contrib,
    )
    return lower, upper


def design_distance_bounds(fp_pair, purity_pair, d, confidence=0.99):
    """Bounds for || rho^(2) - rho^(2)_Haar ||_2^2 = F^(2) - 2/(d(d+1)) E Tr[rho^2]."""
    fp_lower, fp_upper = fp_pair
    pur_lower, pur_upper = purity_pair
    coef = 2.0 / (d * (d + 1))

    def combine(a, b, side):
        value = a.value - coef * b.value
        if a.contrib is not None and b.contrib is not None and len(a.contrib) == len(b.contrib):
            contrib = a.contrib - coef * b.contrib
            stderr = float(contrib.std(ddof=1) / np.sqrt(len(contrib)))
        else:
            contrib = a.contrib
            stderr = float(a.stderr + coef * b.stderr)  # conservative when streams differ
        return BoundResult(
            "design_distance",
            side,
            float(value),
            stderr,
            confidence,
            "frame-potential-minus-purity",
            a.mode,
            n_samples=a.n_samples,
            contrib=contrib,
        )

    return combine(fp_lower, pur_upper, "lower"), combine(fp_upper, pur_lower, "upper")
