"""Criterion evaluation: subset swaps, margins, presets, report contract."""

from __future__ import annotations

import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from kunent import (
    PermutationAction,
    ProductOperator,
    PureState,
    SiteDims,
    Theorem1Evaluator,
    Theorem2Evaluator,
    ghz_noise_family,
    ghz_probe,
    qubits,
    qudits,
    sandwich_trace,
    site_substituted_operator,
    swap_on_subset,
    theorem1_margin,
    theorem1_term,
    theorem2_k1_margin,
    theorem2_margin,
    w_noise_family,
    w_probe,
    w_state,
)
from kunent.thresholds import FamilyMargin, example2_closed_form

from conftest import random_mixed_state, random_product_operator, random_pure_product

KET0 = np.array([[1, 0], [0, 0]], dtype=complex)
RAISE = np.array([[0, 0], [1, 0]], dtype=complex)
I2 = np.eye(2, dtype=complex)


class TestSwapOnSubset:
    def test_empty_subset_is_identity(self, rng):
        dims = qubits(3)
        x = random_product_operator(dims, rng)
        y = random_product_operator(dims, rng)
        a, b = swap_on_subset(x, y, PermutationAction(frozenset()))
        for fa, fx in zip(a.factors, x.factors):
            assert_allclose(fa, fx)
        for fb, fy in zip(b.factors, y.factors):
            assert_allclose(fb, fy)

    def test_full_subset_swaps(self, rng):
        dims = qubits(3)
        x = random_product_operator(dims, rng)
        y = random_product_operator(dims, rng)
        a, b = swap_on_subset(x, y, PermutationAction.of(1, 2, 3))
        for fa, fy in zip(a.factors, y.factors):
            assert_allclose(fa, fy)
        for fb, fx in zip(b.factors, x.factors):
            assert_allclose(fb, fx)

    def test_middle_site(self, rng):
        dims = qubits(3)
        x = random_product_operator(dims, rng)
        y = random_product_operator(dims, rng)
        a, b = swap_on_subset(x, y, PermutationAction.of(2))
        assert_allclose(a.factors[0], x.factors[0])
        assert_allclose(a.factors[1], y.factors[1])
        assert_allclose(a.factors[2], x.factors[2])
        assert_allclose(b.factors[0], y.factors[0])
        assert_allclose(b.factors[1], x.factors[1])
        assert_allclose(b.factors[2], y.factors[2])

    def test_out_of_range(self, rng):
        dims = qubits(2)
        x = random_product_operator(dims, rng)
        with pytest.raises(ValueError, match="out of range"):
            swap_on_subset(x, x, PermutationAction.of(5))


class TestSiteSubstitution:
    def test_identity_substitution(self):
        dims = qubits(3)
        x = ProductOperator.identity(dims)
        out = site_substituted_operator(x, 2, I2)
        for f in out.factors:
            assert_allclose(f, I2)

    def test_single_substitution(self):
        dims = qubits(3)
        x = ProductOperator(dims, (KET0, KET0, KET0))
        out = site_substituted_operator(x, 2, RAISE)
        assert_allclose(out.factors[0], KET0)
        assert_allclose(out.factors[1], RAISE)
        assert_allclose(out.factors[2], KET0)

    def test_double_substitution_commutes(self, rng):
        dims = qubits(3)
        x = random_product_operator(dims, rng)
        w1 = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        w2 = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        ab = site_substituted_operator(site_substituted_operator(x, 1, w1), 3, w2)
        ba = site_substituted_operator(site_substituted_operator(x, 3, w2), 1, w1)
        for fa, fb in zip(ab.factors, ba.factors):
            assert_allclose(fa, fb, atol=0)

    def test_dimension_mismatch(self):
        x = ProductOperator.identity(qubits(2))
        with pytest.raises(ValueError, match="2x2"):
            site_substituted_operator(x, 1, np.eye(3))


class TestTheorem1Term:
    def test_pure_product_x_equals_y(self, rng):
        dims = qubits(3)
        amp = random_pure_product(dims, rng)
        rho = PureState(dims, amp).to_density_matrix()
        x = random_product_operator(dims, rng)
        term = theorem1_term(rho, x, x, PermutationAction.of(1))
        assert term == pytest.approx(sandwich_trace(rho, x), rel=1e-10)

    @pytest.mark.parametrize("p", [0.0, 0.3, 0.9])
    def test_ghz_noise_hand_value(self, p):
        # every proper-subset swap lands on a mixed-bit basis projector,
        # picking up only the white-noise weight: (1-p)/2^n
        for n in (3, 8):
            fam = ghz_noise_family(n)
            rho = fam.evaluate(p)
            x, y = ghz_probe(fam.dims)
            term = theorem1_term(rho, x, y, PermutationAction.of(1))
            assert term == pytest.approx((1 - p) / 2**n, rel=1e-12)

    def test_complement_symmetry_exact(self, rng):
        dims = qubits(4)
        rho = random_mixed_state(dims, rng)
        x = random_product_operator(dims, rng)
        y = random_product_operator(dims, rng)
        t1 = theorem1_term(rho, x, y, PermutationAction.of(1, 3))
        t2 = theorem1_term(rho, x, y, PermutationAction.of(2, 4))
        assert t1 == t2  # same two sandwich factors, same multiset


class TestTheorem1Margin:
    def test_matches_direct_term_sum(self, rng):
        for dims in (qubits(3), SiteDims((2, 3, 2)), qubits(4)):
            rho = random_mixed_state(dims, rng)
            x = random_product_operator(dims, rng)
            y = random_product_operator(dims, rng)
            n = dims.n
            rep = theorem1_margin(rho, x, y, 1)
            direct = 0.0
            for mask in range(1, (1 << n) - 1):
                alpha = PermutationAction(
                    frozenset(i + 1 for i in range(n) if mask >> i & 1)
                )
                direct += theorem1_term(rho, x, y, alpha)
            assert rep.rhs == pytest.approx(direct, rel=1e-10)

    def test_ghz_table_boundary(self):
        fam = ghz_noise_family(8)
        x, y = ghz_probe(fam.dims)
        # published threshold p_1 = 0.4980 (4-decimal rounding)
        assert theorem1_margin(fam.evaluate(0.4981), x, y, 1).detected
        assert not theorem1_margin(fam.evaluate(0.4979), x, y, 1).detected
        # k = 3: 0.1241
        assert theorem1_margin(fam.evaluate(0.1243), x, y, 3).detected
        assert not theorem1_margin(fam.evaluate(0.1239), x, y, 3).detected

    def test_product_state_soundness(self, rng):
        dims = qubits(3)
        for _ in range(10):
            amp = random_pure_product(dims, rng)
            rho = PureState(dims, amp).to_density_matrix()
            x = random_product_operator(dims, rng)
            y = random_product_operator(dims, rng)
            rep = theorem1_margin(rho, x, y, 2)
            assert not rep.detected

    def test_scaling_covariance(self, rng):
        dims = qubits(3)
        rho = random_mixed_state(dims, rng)
        x = random_product_operator(dims, rng)
        y = random_product_operator(dims, rng)
        c, cp = 2.5 - 1.5j, -0.25 + 3j
        x_scaled = ProductOperator(dims, (c * x.factors[0],) + x.factors[1:])
        y_scaled = ProductOperator(dims, y.factors[:2] + (cp * y.factors[2],))
        base = theorem1_margin(rho, x, y, 2)
        scaled = theorem1_margin(rho, x_scaled, y_scaled, 2)
        factor = abs(c) * abs(cp)
        assert scaled.margin == pytest.approx(base.margin * factor, rel=1e-10)
        assert scaled.detected == base.detected

    def test_monotone_after_sign_change(self):
        # margin along rho(p) is affine with the GHZ preset: one crossing
        fam = ghz_noise_family(4)
        x, y = ghz_probe(fam.dims)
        fm = FamilyMargin(fam, Theorem1Evaluator(x, y))
        grid = np.linspace(0.0, 1.0, 101)
        margins = [fm.margin([p], 2) for p in grid]
        signs = np.sign(margins)
        crossings = np.sum(np.abs(np.diff(signs)) > 0)
        assert crossings == 1
        after = margins[int(np.argmax(signs > 0)) :]
        assert all(b >= a - 1e-12 for a, b in zip(after, after[1:]))

    def test_monotone_w_preset(self):
        fam = w_noise_family(3, 3)
        fm = FamilyMargin(fam, Theorem2Evaluator(*w_probe(fam.dims)))
        grid = np.linspace(0.0, 1.0, 101)
        margins = [fm.margin([p, 0.0], 2) for p in grid]
        signs = np.sign(margins)
        assert np.sum(np.abs(np.diff(signs)) > 0) == 1
        after = margins[int(np.argmax(signs > 0)) :]
        assert all(b >= a - 1e-12 for a, b in zip(after, after[1:]))

    def test_subset_enumeration_budget(self, monkeypatch):
        from kunent.config import DIM_CAP_ENV_VAR

        monkeypatch.setenv(DIM_CAP_ENV_VAR, str(2**18))
        dims = qubits(17)
        eye = np.eye(2, dtype=complex)
        x = ProductOperator(dims, (eye,) * 17)
        with pytest.raises(ValueError, match="budget"):
            Theorem1Evaluator(x, x)

    def test_k_out_of_range(self, rng):
        dims = qubits(3)
        rho = random_mixed_state(dims, rng)
        x = random_product_operator(dims, rng)
        with pytest.raises(ValueError, match="k must"):
            theorem1_margin(rho, x, x, 3)

    def test_degenerate_probe_flagged(self, rng):
        dims = qubits(2)
        rho = random_mixed_state(dims, rng)
        zero = ProductOperator(dims, (np.zeros((2, 2)), I2))
        y = random_product_operator(dims, rng)
        rep = theorem1_margin(rho, zero, y, 1)
        assert rep.degenerate
        assert rep.lhs == 0.0
        assert rep.rhs == 0.0
        assert not rep.detected


class TestTheorem2Margin:
    def test_w_threshold_boundary(self):
        fam = w_noise_family(5, 4)
        x, om = w_probe(fam.dims)
        theta = example2_closed_form(5, 4, 4)  # 60/4156
        assert theta == pytest.approx(60 / 4156)
        assert theorem2_margin(fam.evaluate(0.02, 0.0), x, om, 4).detected
        assert not theorem2_margin(fam.evaluate(0.01, 0.0), x, om, 4).detected

    def test_rejects_unequal_dims(self, rng):
        dims = SiteDims((2, 3))
        rho = random_mixed_state(dims, rng)
        x = random_product_operator(dims, rng)
        with pytest.raises(ValueError, match="unequal"):
            theorem2_margin(rho, x, [np.eye(2)], 1)

    def test_k_range(self, rng):
        dims = qubits(3)
        rho = random_mixed_state(dims, rng)
        x = random_product_operator(dims, rng)
        om = [np.eye(2)]
        with pytest.raises(ValueError, match="k must"):
            theorem2_margin(rho, x, om, 3)
        with pytest.raises(ValueError, match="k must"):
            theorem2_margin(rho, x, om, 0)

    def test_omega_shape_validated(self, rng):
        dims = qubits(3)
        rho = random_mixed_state(dims, rng)
        x = random_product_operator(dims, rng)
        with pytest.raises(ValueError, match="omega"):
            theorem2_margin(rho, x, [np.eye(3)], 1)

    def test_product_state_soundness_all_k(self, rng):
        dims = qubits(4)
        for _ in range(5):
            amp = random_pure_product(dims, rng)
            rho = PureState(dims, amp).to_density_matrix()
            x = random_product_operator(dims, rng)
            om = [
                rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
                for _ in range(2)
            ]
            for k in (1, 2, 3):
                assert not theorem2_margin(rho, x, om, k).detected

    def test_traces_match_direct_evaluation(self, rng):
        # cross-check the reduced-block fast path against naive dense traces
        from kunent import cross_trace

        dims = qudits(3, 3)
        rho = random_mixed_state(dims, rng)
        x = random_product_operator(dims, rng)
        om = [
            rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
            for _ in range(2)
        ]
        ev = Theorem2Evaluator(x, om)
        tr = ev.traces(rho)
        for s in range(2):
            for t in range(2):
                for i in range(3):
                    for j in range(3):
                        if i == j:
                            continue
                        x_i = site_substituted_operator(x, i + 1, om[s])
                        x_j = site_substituted_operator(x, j + 1, om[t])
                        assert tr.cross[s, t, i, j] == pytest.approx(
                            cross_trace(rho, x_i, x_j), rel=1e-10, abs=1e-12
                        )
                        x_ij = site_substituted_operator(x_i, j + 1, om[t])
                        assert tr.pair[s, t, i, j] == pytest.approx(
                            sandwich_trace(rho, x_ij), rel=1e-10, abs=1e-12
                        )
            for i in range(3):
                x_i = site_substituted_operator(x, i + 1, om[s])
                assert tr.site[s, i] == pytest.approx(
                    sandwich_trace(rho, x_i), rel=1e-10, abs=1e-12
                )
        assert tr.base == pytest.approx(sandwich_trace(rho, x), rel=1e-10)


class TestTheorem2K1:
    def test_pure_w_hand_example(self):
        # x_i = |0><0|, omega = {|1><0|}: the cross trace between any two
        # substituted probes picks one W matrix element 1/3; the bound side
        # vanishes because W has no all-zeros amplitude
        psi = w_state(3, 2)
        x = ProductOperator(psi.dims, (KET0,) * 3)
        rep = theorem2_k1_margin(psi.to_density_matrix(), x, [RAISE])
        assert rep.lhs == pytest.approx(1 / 9)
        assert rep.rhs == 0.0
        assert rep.detected

    def test_full_product_soundness(self, rng):
        dims = qubits(3)
        for _ in range(10):
            amp = random_pure_product(dims, rng)
            rho = PureState(dims, amp).to_density_matrix()
            x = random_product_operator(dims, rng)
            om = [rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))]
            rep = theorem2_k1_margin(rho, x, om)
            assert not rep.detected
            assert rep.margin <= 1e-12

    def test_detects_w_noise_above_line(self):
        fam = w_noise_family(5, 4)
        x, om = w_probe(fam.dims)
        rep = theorem2_k1_margin(fam.evaluate(0.10, 0.0), x, om)
        assert rep.detected

    def test_known_unsoundness_on_same_block_pairs(self):
        # |1> x Bell contains one unentangled particle yet violates the
        # per-tuple bound for the same-block pair: documents why this
        # variant is excluded from the k=1 soundness sweep
        dims = qubits(3)
        bell = np.zeros(4, dtype=complex)
        bell[1] = bell[2] = 1 / np.sqrt(2)
        amp = np.kron(np.array([0, 1], dtype=complex), bell)
        rho = PureState(dims, amp).to_density_matrix()
        x = ProductOperator.identity(dims)
        lower = np.array([[0, 1], [0, 0]], dtype=complex)  # |0><1|
        rep = theorem2_k1_margin(rho, x, [lower])
        assert rep.detected
        assert rep.margin == pytest.approx(0.25)

    def test_aggregation_modes(self, rng):
        dims = qubits(3)
        rho = random_mixed_state(dims, rng)
        x = random_product_operator(dims, rng)
        om = [rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))]
        rep_max = theorem2_k1_margin(rho, x, om, aggregation="max")
        rep_sum = theorem2_k1_margin(rho, x, om, aggregation="sum")
        per_tuple = [v for label, v in rep_max.terms if label.startswith("margin[")]
        assert rep_max.margin == pytest.approx(max(per_tuple))
        assert rep_sum.margin == pytest.approx(sum(per_tuple))
        with pytest.raises(ValueError, match="aggregation"):
            theorem2_k1_margin(rho, x, om, aggregation="median")


class TestCriterionReport:
    def test_json_schema(self, rng):
        dims = qubits(2)
        rho = random_mixed_state(dims, rng)
        x = random_product_operator(dims, rng)
        y = random_product_operator(dims, rng)
        rep = theorem1_margin(rho, x, y, 1)
        payload = json.loads(rep.to_json())
        assert set(payload) == {
            "theorem", "k", "lhs", "rhs", "margin", "detected", "degenerate", "terms",
        }
        assert payload["theorem"] == "T1"
        assert payload["k"] == 1
        assert isinstance(payload["terms"], list)
        assert set(payload["terms"][0]) == {"label", "value"}
        assert payload["terms"][0]["label"].startswith("alpha={")

    def test_detection_tolerance_contract(self, rng):
        dims = qubits(2)
        rho = random_mixed_state(dims, rng)
        x = random_product_operator(dims, rng)
        y = random_product_operator(dims, rng)
        rep = theorem1_margin(rho, x, y, 1)
        assert rep.detected == (rep.margin > 1e-12)
        assert rep.lhs >= 0.0
        assert rep.rhs >= 0.0

    def test_margin_affine_along_family(self):
        # family evaluation path must agree with direct evaluation
        fam = w_noise_family(3, 3)
        x, om = w_probe(fam.dims)
        fm = FamilyMargin(fam, Theorem2Evaluator(x, om))
        for p, q in [(0.1, 0.0), (0.2, 0.3), (0.0, 0.9)]:
            direct = theorem2_margin(fam.evaluate(p, q), x, om, 2).margin
            assert fm.margin([p, q], 2) == pytest.approx(direct, rel=1e-10, abs=1e-12)
