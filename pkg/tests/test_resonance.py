import math
from fractions import Fraction

import numpy as np
import pytest

from reslab.lattice import IntVector, ResonanceModule, saturate
from reslab.resonance import (NONRESONANT, RESONANT, classify, classify_many,
                              dist_to_resonance, enumerate_modes,
                              is_nonresonant_mod, make_zone_parameters,
                              rational_in_interval, sup_norm)

from oracles import enumerate_l1_ball, l1_ball_count, rationals_in_interval


class TestZoneParameters:
    def test_example_scalings(self):
        p = make_zone_parameters(math.exp(-10), 0.5, 1.0)
        assert p.L == 12.0
        assert p.K == pytest.approx(120.0)
        assert p.r == pytest.approx(2 * math.exp(-5))
        assert p.alpha == pytest.approx(2 * p.r * 120.0)
        assert p.alpha == pytest.approx(3.23421, abs=1e-5)

    def test_deeper_epsilon(self):
        p = make_zone_parameters(math.exp(-20), 0.5, 1.0)
        assert p.K == pytest.approx(240.0)
        assert p.r == pytest.approx(2 * math.exp(-10))

    def test_degenerate_rejected(self):
        with pytest.raises(ValueError):
            make_zone_parameters(0.9999, 0.5, 0.01)  # K < 1
        with pytest.raises(ValueError):
            make_zone_parameters(1.5, 0.5, 1.0)
        with pytest.raises(ValueError):
            make_zone_parameters(0.1, 1.5, 1.0)
        with pytest.raises(ValueError):
            make_zone_parameters(0.1, 0.5, -1.0)


class TestDistToResonance:
    def test_examples(self):
        assert dist_to_resonance((1.0, 0.0), IntVector((0, 1))) == 0.0
        assert dist_to_resonance((1.0, 1.0), IntVector((1, -1))) == 0.0
        assert dist_to_resonance((1.0, 0.0, 0.0), IntVector((1, 1, 1))) == \
            pytest.approx(1 / math.sqrt(3))

    def test_zero_mode(self):
        with pytest.raises(ValueError):
            dist_to_resonance((1.0, 2.0), IntVector((0, 0)))

    def test_invariances(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            om = rng.normal(size=3)
            k = IntVector(rng.integers(-5, 6, size=3))
            if k.is_zero:
                continue
            d = dist_to_resonance(om, k)
            assert dist_to_resonance(om, -k) == pytest.approx(d)
            assert dist_to_resonance(om, 3 * k) == pytest.approx(d)


class TestEnumerateModes:
    def test_small_examples(self):
        assert {m.entries for m in enumerate_modes(2, 1)} == {(1, 0), (0, 1)}
        got = {m.entries for m in enumerate_modes(2, 2)}
        assert got == {(1, 0), (0, 1), (1, 1), (1, -1), (2, 0), (0, 2)}

    def test_count_formula(self):
        for n in (2, 3, 4):
            for K in (1, 2, 3, 5):
                modes = list(enumerate_modes(n, K))
                assert len(modes) == (l1_ball_count(n, K) - 1) // 2
                # The closed form itself against direct enumeration.
                assert l1_ball_count(n, K) == len(enumerate_l1_ball(n, K))

    def test_sign_canonical_and_unique(self):
        modes = list(enumerate_modes(3, 4))
        seen = set()
        for m in modes:
            first = next(e for e in m.entries if e != 0)
            assert first > 0
            assert m.entries not in seen
            assert (-m).entries not in seen
            seen.add(m.entries)

    def test_fractional_K(self):
        assert len(list(enumerate_modes(2, 2.9))) == len(list(enumerate_modes(2, 2)))


class TestClassify:
    def setup_method(self):
        # alpha ~ 0.998 so a planted half-alpha resonance dominates at K_cap=1.
        self.params = make_zone_parameters(math.exp(-10), 0.9, 1.0)

    def test_planted_resonance(self):
        a = self.params.alpha
        label = classify(np.array([1.0, 0.5 * a, 10.0]), self.params, K_cap=1)
        assert label.kind == RESONANT
        assert label.witness == IntVector((0, 1, 0))
        assert label.distance == pytest.approx(0.5 * a)

    def test_nonresonant_diophantine(self):
        # Badly approximable direction, scaled above alpha * ||k||-margin.
        params = make_zone_parameters(1e-4, 0.5, 0.05)
        om = 60.0 * np.array([1.0, (1 + math.sqrt(5)) / 2, math.sqrt(2)])
        modes = list(enumerate_modes(3, 5))
        dmin = min(abs(float(np.dot(om, k.entries))) / k.norm_l2 for k in modes)
        assert dmin > params.alpha
        label = classify(om, params, K_cap=5)
        assert label.kind == NONRESONANT
        assert label.witness is None
        assert label.distance == pytest.approx(dmin)

    def test_alpha_boundary_flip(self):
        params_small = make_zone_parameters(1e-4, 0.5, 0.05)
        om = np.array([1.0, params_small.alpha * 1.5, 3.0])
        assert classify(om, params_small, 1).kind == NONRESONANT
        params_big = make_zone_parameters(1e-4, 0.5 / math.sqrt(2), 0.05)
        assert params_big.alpha == pytest.approx(2 * params_small.alpha)
        assert classify(om, params_big, 1).kind == RESONANT

    def test_monotone_in_alpha(self):
        rng = np.random.default_rng(1)
        p_small = make_zone_parameters(1e-4, 0.5, 0.05)
        p_large = make_zone_parameters(1e-4, 0.25, 0.05)
        assert p_large.alpha > p_small.alpha
        for _ in range(50):
            om = rng.normal(size=3) * 3
            if classify(om, p_small, 3).kind == RESONANT:
                assert classify(om, p_large, 3).kind == RESONANT

    def test_covering(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            om = rng.normal(size=3)
            label = classify(om, self.params, 3)
            assert label.kind in (RESONANT, NONRESONANT)
            assert (label.witness is not None) == (label.kind == RESONANT)

    def test_kcap_guard(self):
        with pytest.raises(ValueError):
            classify(np.ones(3), self.params, K_cap=self.params.K + 1)

    def test_many_matches_scalar(self):
        rng = np.random.default_rng(3)
        oms = rng.normal(size=(40, 3)) * 2
        mask, widx, dmin = classify_many(oms, self.params, 3)
        modes = list(enumerate_modes(3, 3))
        for r in range(40):
            lab = classify(oms[r], self.params, 3)
            assert mask[r] == (lab.kind == RESONANT)
            assert dmin[r] == pytest.approx(lab.distance)
            if mask[r]:
                assert modes[widx[r]] == lab.witness


class TestIsNonresonantMod:
    def test_trivial_module_matches_divisor_test(self):
        om = np.array([1.0, (1 + math.sqrt(5)) / 2, math.sqrt(2)])
        modes = list(enumerate_modes(3, 4))
        dmin = min(abs(float(np.dot(om, k.entries))) for k in modes)
        assert is_nonresonant_mod(om, 4, dmin * 0.99, None)
        assert not is_nonresonant_mod(om, 4, dmin * 1.01, None)

    def test_exact_resonance_inside_module(self):
        m = saturate([IntVector((1, -1, 0))])
        om = np.array([1.0, 1.0, math.sqrt(7)])
        # k = (1,-1,0) gives k.omega = 0 but lies in the module; all modes
        # outside must clear alpha.
        outside = [k for k in enumerate_modes(3, 3) if not m.contains(k)]
        dmin = min(abs(float(np.dot(om, k.entries))) for k in outside)
        assert is_nonresonant_mod(om, 3, 0.9 * dmin, m)
        assert not is_nonresonant_mod(om, 3, 1.1 * dmin, m)

    def test_near_resonance_outside_module(self):
        m = saturate([IntVector((1, -1, 0))])
        om = np.array([1.0, 1.0, 1e-6])  # (0,0,1) is outside the module
        assert not is_nonresonant_mod(om, 3, 1e-3, m)

    def test_requires_maximal(self):
        m = ResonanceModule(3, [IntVector((2, 0, 0))], maximal=False)
        with pytest.raises(ValueError):
            is_nonresonant_mod(np.ones(3), 2, 0.1, m)


class TestRationalInInterval:
    def check_contract(self, a, b, K):
        p, q = rational_in_interval(a, b, K)
        assert math.gcd(abs(p), q) == 1
        assert Fraction(a) <= Fraction(p, q) <= Fraction(b)
        assert K < q < 3.0 / (b - a)
        return p, q

    def test_unit_interval(self):
        p, q = self.check_contract(0.0, 1.0, 1)
        assert 1 < q < 3

    def test_mid_interval(self):
        p, q = self.check_contract(0.3, 0.5, 3)
        assert 3 < q < 15

    def test_negative_interval(self):
        p, q = self.check_contract(-1.0, -0.9, 4)
        assert 4 < q < 30.1

    def test_hypothesis_violation(self):
        with pytest.raises(ValueError, match="hypothesis"):
            rational_in_interval(0.0, 0.5, 3)  # 9 >= 2/0.5

    def test_outside_unit_box(self):
        with pytest.raises(ValueError):
            rational_in_interval(0.5, 1.5, 1)

    def test_exhaustive_against_oracle(self):
        # Coarse version of the exhaustive interval check (fine grid lives in
        # the acceptance suite).
        for lmills in (50, 100, 200):
            length = lmills / 1000.0
            K = math.floor(math.sqrt(2.0 / length))
            if K * K >= 2.0 / length:
                K -= 1
            for i in range(-1000, 1000 - lmills + 1, 25):
                a = i / 1000.0
                b = (i + lmills) / 1000.0
                p, q = self.check_contract(a, b, K)
                qmax = math.floor(3.0 / (b - a))
                assert (p, q) in rationals_in_interval(a, b, qmax)


def test_sup_norm():
    assert sup_norm(np.array([1.0, -3.5, 2.0])) == 3.5
