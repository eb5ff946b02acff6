"""Certificate engine tests: closed-form cases, saturation, gap identities."""

import numpy as np
import pytest

from shadowcert import bounds, oracle
from shadowcert.bounds import (
    ConstraintSet,
    design_distance_bounds,
    fit_zeta,
    frame_potential_bounds,
    obs_squared_superop,
    purity_lower_gram,
    purity_lower_super,
    purity_upper,
    quad_lower,
    quad_upper,
    subsystem_purity_superop,
    vn_lower_subsystem,
    vn_upper,
)
from shadowcert.ensemble import DiscreteEnsemble
from shadowcert.opalg import PAULI, partial_trace, super_trace, vec
from shadowcert.shadows import ExactCorrelators, ShadowCorrelators, generate_records

P0 = np.diag([1.0, 0.0]).astype(complex)
P1 = np.diag([0.0, 1.0]).astype(complex)
E0 = DiscreteEnsemble([0.5, 0.5], [P0, P1])
MIXED = DiscreteEnsemble([0.5, 0.5], [np.eye(2) / 2, np.eye(2) / 2])


def random_density(rng, d, rank=None):
    a = rng.normal(size=(d, rank or d)) + 1j * rng.normal(size=(d, rank or d))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_pure(rng, d):
    psi = rng.normal(size=d) + 1j * rng.normal(size=d)
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def twin_constraint():
    return [lambda o: o.rho_c]


class TestPurityLowerGram:
    def test_no_constraints_floor(self):
        src = ExactCorrelators(E0.outcomes())
        res = purity_lower_gram(ConstraintSet(src, []))
        assert res.value == pytest.approx(0.5)

    def test_perfect_twin_saturates(self):
        src = ExactCorrelators(E0.outcomes())
        res = purity_lower_gram(ConstraintSet(src, twin_constraint()))
        assert res.value == pytest.approx(1.0, abs=1e-12)

    def test_maximally_mixed(self):
        src = ExactCorrelators(MIXED.outcomes())
        res = purity_lower_gram(ConstraintSet(src, twin_constraint()))
        assert res.value == pytest.approx(0.5, abs=1e-12)

    def test_single_constraint_equals_cauchy_schwarz(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            d = int(rng.choice([2, 4]))
            nz = int(rng.integers(2, 7))
            ens = DiscreteEnsemble(
                rng.dirichlet(np.ones(nz)),
                [random_density(rng, d) for _ in range(nz)],
                [random_density(rng, d) for _ in range(nz)],
            )
            outs = ens.outcomes()
            p_qc = sum(o.p * np.trace(o.rho_q @ o.rho_c).real for o in outs)
            p_cc = sum(o.p * np.trace(o.rho_c @ o.rho_c).real for o in outs)
            res = purity_lower_gram(ConstraintSet(ExactCorrelators(outs), twin_constraint()))
            assert res.value == pytest.approx(p_qc**2 / p_cc, abs=1e-12)

    def test_monotone_under_more_constraints(self):
        rng = np.random.default_rng(2)
        maps_pool = [
            lambda o: o.rho_c,
            lambda o: np.trace(o.rho_c @ PAULI["Z"]).real * PAULI["Z"],
            lambda o: np.trace(o.rho_c @ PAULI["X"]).real * PAULI["X"],
        ]
        for _ in range(20):
            ens = DiscreteEnsemble(
                rng.dirichlet(np.ones(4)),
                [random_density(rng, 2) for _ in range(4)],
                [random_density(rng, 2) for _ in range(4)],
            )
            src = ExactCorrelators(ens.outcomes())
            prev = -np.inf
            for r in range(1, 4):
                val = purity_lower_gram(ConstraintSet(src, maps_pool[:r])).value
                assert val >= prev - 1e-12
                prev = val

    def test_identity_augmentation_never_smaller(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            ens = DiscreteEnsemble(
                rng.dirichlet(np.ones(3)),
                [random_density(rng, 2) for _ in range(3)],
                [random_density(rng, 2) for _ in range(3)],
            )
            src = ExactCorrelators(ens.outcomes())
            plain = purity_lower_gram(ConstraintSet(src, twin_constraint()))
            aug = purity_lower_gram(ConstraintSet(src, twin_constraint(), include_identity=True))
            truth = oracle.true_average(ens.outcomes(), "purity")
            assert aug.value >= plain.value - 1e-12
            assert aug.value <= truth + 1e-9


class TestPuritySuper:
    def test_pure_saturation(self):
        res = purity_lower_super(ExactCorrelators(E0.outcomes()))
        assert res.value == pytest.approx(1.0, abs=1e-10)

    def test_mixed_value(self):
        res = purity_lower_super(ExactCorrelators(MIXED.outcomes()))
        assert res.value == pytest.approx(0.5, abs=1e-12)

    def test_validity_under_random_twins(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            ens = DiscreteEnsemble(
                [0.5, 0.5], [P0, P1], [random_density(rng, 2) for _ in range(2)]
            )
            res = purity_lower_super(ExactCorrelators(ens.outcomes()))
            assert res.value <= 1.0 + 1e-9

    def test_upper_is_one_with_floor(self):
        res = purity_upper(1, 0.5, 2)
        assert res.value == 1.0
        assert res.diagnostics["pure_ensemble_floor"] == pytest.approx(0.75)
        res = purity_upper(1, 1e-3, 2)
        assert res.diagnostics["pure_ensemble_floor"] == pytest.approx(0.9995)


class TestQuadBounds:
    def test_saturation_on_pure_perfect(self):
        src = ExactCorrelators(E0.outcomes())
        nz = obs_squared_superop(PAULI["Z"])
        lo = quad_lower(nz, src)
        up = quad_upper(nz, src)
        assert lo.value == pytest.approx(1.0, abs=1e-10)
        assert up.value == pytest.approx(1.0, abs=1e-10)

    def test_mixed_gap(self):
        src = ExactCorrelators(MIXED.outcomes())
        nz = obs_squared_superop(PAULI["Z"])
        lo, up = quad_lower(nz, src), quad_upper(nz, src)
        assert lo.value == pytest.approx(0.0, abs=1e-12)
        assert up.value == pytest.approx(1.0, abs=1e-12)
        truth = oracle.true_average(MIXED.outcomes(), "quad", nsup=nz)
        assert lo.value - 1e-12 <= truth <= up.value + 1e-12

    def test_identity_superop_reduces_to_purity(self):
        rng = np.random.default_rng(7)
        ens = DiscreteEnsemble(
            rng.dirichlet(np.ones(3)),
            [random_density(rng, 2) for _ in range(3)],
            [random_density(rng, 2) for _ in range(3)],
        )
        src = ExactCorrelators(ens.outcomes())
        assert quad_lower(np.eye(4), src).value == pytest.approx(
            purity_lower_super(src).value, abs=1e-12
        )

    def test_gap_identity(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            d = int(rng.choice([2, 4]))
            ens = DiscreteEnsemble(
                rng.dirichlet(np.ones(5)),
                [random_density(rng, d) for _ in range(5)],
                [random_density(rng, d) for _ in range(5)],
            )
            src = ExactCorrelators(ens.outcomes())
            obs = rng.normal(size=(d, d))
            nsup = obs_squared_superop(obs + obs.T)
            norm_inf = float(np.linalg.eigvalsh(nsup).max())
            gap = quad_upper(nsup, src).value - quad_lower(nsup, src).value
            pur = purity_lower_super(src).value
            assert gap == pytest.approx(norm_inf * (1.0 - pur), abs=1e-12)

    def test_rejects_non_psd(self):
        src = ExactCorrelators(E0.outcomes())
        with pytest.raises(ValueError):
            quad_lower(-np.eye(4), src)

    def test_subsystem_purity_superop(self):
        rng = np.random.default_rng(9)
        nsup = subsystem_purity_superop([2, 2], [0])
        for _ in range(10):
            rho = random_density(rng, 4)
            v = vec(rho)
            direct = np.real(v.conj() @ nsup @ v)
            red = partial_trace(rho, [2, 2], [0])
            assert direct == pytest.approx(np.trace(red @ red).real, abs=1e-12)

    def test_subsystem_purity_bounded(self):
        rng = np.random.default_rng(10)
        nsup = subsystem_purity_superop([2, 2], [0])
        for _ in range(100):
            ens = DiscreteEnsemble(
                rng.dirichlet(np.ones(3)),
                [random_density(rng, 4) for _ in range(3)],
                [random_density(rng, 4) for _ in range(3)],
            )
            src = ExactCorrelators(ens.outcomes())
            truth = oracle.true_average(ens.outcomes(), "quad", nsup=nsup)
            assert quad_lower(nsup, src).value <= truth + 1e-9
            assert quad_upper(nsup, src).value >= truth - 1e-9


class TestVnUpper:
    def test_pure_perfect_is_zero(self):
        res = vn_upper(ExactCorrelators(E0.outcomes()))
        assert res.value == pytest.approx(0.0, abs=1e-9)

    def test_pure_classical_closed_form(self):
        # rho_c pure but rho_q = I/2: delta_q = 1/2, bound = H2(1/2) + (1/2) log 1
        ens = DiscreteEnsemble([1.0], [np.eye(2) / 2], [P0])
        res = vn_upper(ExactCorrelators(ens.outcomes()))
        assert res.value == pytest.approx(np.log(2), abs=1e-9)

    def test_matches_pure_twin_formula(self):
        # general pure-twin ensembles: value = H2(dq) + dq log(d-1)
        rng = np.random.default_rng(11)
        for d in (2, 4):
            ens = DiscreteEnsemble(
                rng.dirichlet(np.ones(4)),
                [random_density(rng, d) for _ in range(4)],
                [random_pure(rng, d) for _ in range(4)],
            )
            outs = ens.outcomes()
            dq = 1.0 - sum(o.p * np.trace(o.rho_q @ o.rho_c).real for o in outs)
            h2 = -dq * np.log(dq) - (1 - dq) * np.log(1 - dq)
            res = vn_upper(ExactCorrelators(outs))
            assert res.value == pytest.approx(h2 + dq * np.log(d - 1), abs=1e-8)

    def test_validity_full_rank_twins(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            d = int(rng.choice([2, 4]))
            ens = DiscreteEnsemble(
                rng.dirichlet(np.ones(4)),
                [random_density(rng, d) for _ in range(4)],
                [random_density(rng, d) for _ in range(4)],
            )
            res = vn_upper(ExactCorrelators(ens.outcomes()))
            truth = oracle.true_average(ens.outcomes(), "vn")
            assert res.value >= truth - 1e-9

    def test_degenerate_returns_log_d(self):
        # twin pure and orthogonal to the true state: delta_q = 1
        ens = DiscreteEnsemble([1.0], [P1], [P0])
        res = vn_upper(ExactCorrelators(ens.outcomes()))
        assert res.value == pytest.approx(np.log(2))
        assert res.method == "vn-dual-degenerate"

    def test_near_degenerate_continuity(self):
        # delta_q -> 0 limit agrees with the unregularized certificate
        eps = 1e-9
        rho_q = (1 - eps) * P0 + eps * P1
        ens = DiscreteEnsemble([1.0], [rho_q], [P0])
        res = vn_upper(ExactCorrelators(ens.outcomes()))
        assert res.value == pytest.approx(0.0, abs=1e-6)

    def test_lambda_search_never_hurts(self):
        rng = np.random.default_rng(13)
        ens = DiscreteEnsemble(
            rng.dirichlet(np.ones(3)),
            [random_density(rng, 2) for _ in range(3)],
            [random_density(rng, 2) for _ in range(3)],
        )
        src = ExactCorrelators(ens.outcomes())
        base = vn_upper(src)
        tuned = vn_upper(src, optimize_lam=True)
        truth = oracle.true_average(ens.outcomes(), "vn")
        assert tuned.value <= base.value + 1e-12
        assert tuned.value >= truth - 1e-9


class TestVnLowerSubsystem:
    def test_saturates_on_pure_perfect(self):
        rng = np.random.default_rng(14)
        for _ in range(10):
            ens = DiscreteEnsemble(
                rng.dirichlet(np.ones(3)),
                [random_pure(rng, 4) for _ in range(3)],
            )
            src = ExactCorrelators(ens.outcomes())
            res = vn_lower_subsystem(src, [2, 2], [0])
            truth = oracle.true_average(ens.outcomes(), "vn_sub", dims=[2, 2], keep=[0])
            assert res.value == pytest.approx(truth, abs=1e-9)

    def test_product_states_give_zero(self):
        rng = np.random.default_rng(15)
        states = [np.kron(random_pure(rng, 2), random_pure(rng, 2)) for _ in range(3)]
        ens = DiscreteEnsemble([0.5, 0.3, 0.2], states)
        res = vn_lower_subsystem(ExactCorrelators(ens.outcomes()), [2, 2], [0])
        assert res.value <= 1e-9
        assert res.value == pytest.approx(0.0, abs=1e-9)

    def test_validity_random_twins(self):
        rng = np.random.default_rng(16)
        for _ in range(100):
            ens = DiscreteEnsemble(
                rng.dirichlet(np.ones(3)),
                [random_density(rng, 4) for _ in range(3)],
                [random_density(rng, 4) for _ in range(3)],
            )
            src = ExactCorrelators(ens.outcomes())
            res = vn_lower_subsystem(src, [2, 2], [0])
            truth = oracle.true_average(ens.outcomes(), "vn_sub", dims=[2, 2], keep=[0])
            assert res.value <= truth + 1e-9

    def test_refine_never_hurts(self):
        rng = np.random.default_rng(17)
        ens = DiscreteEnsemble(
            [0.6, 0.4],
            [random_density(rng, 4) for _ in range(2)],
            [random_density(rng, 4) for _ in range(2)],
        )
        src = ExactCorrelators(ens.outcomes())
        base = vn_lower_subsystem(src, [2, 2], [0])
        tuned = vn_lower_subsystem(src, [2, 2], [0], refine=True)
        truth = oracle.true_average(ens.outcomes(), "vn_sub", dims=[2, 2], keep=[0])
        assert tuned.value >= base.value - 1e-12
        assert tuned.value <= truth + 1e-9


class TestFramePotential:
    def test_pure_two_state(self):
        lo, up = frame_potential_bounds(ExactCorrelators(E0.outcomes()))
        assert lo.value == pytest.approx(0.5, abs=1e-10)
        assert up.value == pytest.approx(0.5, abs=1e-10)

    def test_single_repeated_pure_state(self):
        ens = DiscreteEnsemble([0.7, 0.3], [P0, P0])
        lo, up = frame_potential_bounds(ExactCorrelators(ens.outcomes()))
        assert lo.value == pytest.approx(1.0, abs=1e-10)
        assert up.value == pytest.approx(1.0, abs=1e-10)

    def test_maximally_mixed(self):
        lo, up = frame_potential_bounds(ExactCorrelators(MIXED.outcomes()))
        assert lo.value == pytest.approx(0.25, abs=1e-12)
        assert up.value == pytest.approx(1.0, abs=1e-12)

    def test_validity(self):
        rng = np.random.default_rng(18)
        for _ in range(100):
            d = int(rng.choice([2, 4]))
            ens = DiscreteEnsemble(
                rng.dirichlet(np.ones(4)),
                [random_density(rng, d) for _ in range(4)],
                [random_density(rng, d) for _ in range(4)],
            )
            src = ExactCorrelators(ens.outcomes())
            truth = oracle.true_frame_potential(ens.outcomes())
            lo, up = frame_potential_bounds(src)
            assert lo.value - 1e-9 <= truth <= up.value + 1e-9

    def test_k_not_two_rejected(self):
        with pytest.raises(ValueError):
            frame_potential_bounds(ExactCorrelators(E0.outcomes()), k=3)


class TestDesignDistance:
    def test_e0_interval(self):
        src = ExactCorrelators(E0.outcomes())
        fp = frame_potential_bounds(src)
        pur = (purity_lower_super(src), purity_upper(1, 0.5, 2))
        lo, up = design_distance_bounds(fp, pur, 2)
        exact = oracle.true_design_distance(E0.outcomes())
        assert exact == pytest.approx(1.0 / 6.0, abs=1e-12)
        assert lo.value - 1e-9 <= exact <= up.value + 1e-9

    def test_stabilizer_two_design_tight(self):
        states = []
        for ax in "XYZ":
            for s in (1, -1):
                states.append((np.eye(2) + s * PAULI[ax]) / 2)
        ens = DiscreteEnsemble([1 / 6] * 6, states)
        outs = ens.outcomes()
        assert oracle.true_frame_potential(outs) == pytest.approx(1 / 3, abs=1e-12)
        assert oracle.true_design_distance(outs) == pytest.approx(0.0, abs=1e-12)
        src = ExactCorrelators(outs)
        fp = frame_potential_bounds(src)
        pur = (purity_lower_super(src), purity_upper(1, 1 / 6, 2))
        lo, up = design_distance_bounds(fp, pur, 2)
        assert lo.value == pytest.approx(0.0, abs=1e-9)
        assert up.value == pytest.approx(0.0, abs=1e-9)


class TestEmpiricalMode:
    def test_quad_bounds_from_records(self):
        rng = np.random.default_rng(19)
        rec = generate_records(E0, 4 * 10**4, rng)
        src = ShadowCorrelators(rec, E0)
        nz = obs_squared_superop(PAULI["Z"])
        lo, up = quad_lower(nz, src), quad_upper(nz, src)
        truth = 1.0
        assert abs(lo.value - truth) <= 5 * lo.stderr + 1e-3
        assert lo.certified() <= truth
        assert up.certified() >= truth

    def test_same_code_path_agrees_asymptotically(self):
        rng = np.random.default_rng(20)
        ens = DiscreteEnsemble(
            [0.5, 0.3, 0.2],
            [random_density(rng, 2) for _ in range(3)],
            [random_density(rng, 2) for _ in range(3)],
        )
        exact_src = ExactCorrelators(ens.outcomes())
        nz = obs_squared_superop(PAULI["Z"])
        exact_lo = quad_lower(nz, exact_src)
        rec = generate_records(ens, 5 * 10**4, rng)
        emp_lo = quad_lower(nz, ShadowCorrelators(rec, ens), fit_source=exact_src)
        assert abs(emp_lo.value - exact_lo.value) <= 5 * emp_lo.stderr

    def test_split_fit_mode(self):
        rng = np.random.default_rng(21)
        rec = generate_records(E0, 2 * 10**4, rng)
        src = ShadowCorrelators(rec, E0)
        fit_src, eval_src = src.split_half()
        res = purity_lower_super(eval_src, fit_source=fit_src)
        assert res.value <= 1.0 + 5 * res.stderr

    def test_gap_identity_empirical(self):
        rng = np.random.default_rng(22)
        ens = DiscreteEnsemble(
            [0.5, 0.5], [random_density(rng, 2) for _ in range(2)]
        )
        rec = generate_records(ens, 10**4, rng)
        src = ShadowCorrelators(rec, ens)
        nsup = obs_squared_superop(PAULI["X"])
        norm_inf = float(np.linalg.eigvalsh(nsup).max())
        gap = quad_upper(nsup, src).value - quad_lower(nsup, src).value
        pur = purity_lower_super(src).value
        assert gap == pytest.approx(norm_inf * (1.0 - pur), abs=1e-12)

    def test_result_records(self):
        res = purity_lower_super(ExactCorrelators(E0.outcomes()))
        rec = res.to_record(seed=7, shots=0)
        assert rec["quantity"] == "purity" and rec["side"] == "lower"
        assert rec["seed"] == 7
