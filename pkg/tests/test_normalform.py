import math

import numpy as np
import pytest

from reslab.lattice import IntVector, saturate
from reslab.models import (HamiltonianSystem, IntegrableModel, Perturbation,
                           PerturbationTerm)
from reslab.normalform import (FourierPolynomial, GeneratingFunction,
                               SmallDivisorError, chi_flow_map,
                               lie_transform, measure_remainder,
                               poisson_bracket, project, solve_homological,
                               truncate)
from reslab.polynomials import ActionPolynomial, DegreeCapError

N = 3
MODEL = IntegrableModel(np.eye(N), np.zeros(N))
I_BASE = np.array([1.0, 1.3247, 0.7549])
SAMPLES = [I_BASE, I_BASE + 0.05, I_BASE - 0.05]


def standard_perturbation(eps):
    return Perturbation.from_cosines(
        N, [((1, 0, 0), eps), ((1, -1, 0), eps), ((0, 0, 1), eps)])


def quadratic_perturbation(eps):
    coeff = ActionPolynomial(N, {(0, 0, 0): eps, (2, 0, 0): 0.5 * eps,
                                 (1, 1, 0): 0.25 * eps})
    return Perturbation(N, (PerturbationTerm(IntVector((1, -1, 0)), coeff, 0.2),
                            PerturbationTerm(IntVector((0, 1, 1)),
                                             ActionPolynomial.constant(N, eps), -0.5)))


class TestTruncateProject:
    def test_truncate_drops_high_modes(self):
        f = Perturbation.from_cosines(N, [((1, 1, 1), 1.0)])
        phi = FourierPolynomial.from_perturbation(f)
        assert truncate(phi, 2).is_zero
        assert truncate(phi, 3) == phi

    def test_truncate_idempotent_filter_oracle(self):
        phi = FourierPolynomial.from_perturbation(quadratic_perturbation(1.0))
        t = truncate(phi, 2)
        assert t == truncate(t, 2)
        expected = {m for m in phi.terms if sum(abs(e) for e in m) <= 2}
        assert set(t.terms) == expected

    def test_project_trivial_kills_zero_average(self):
        phi = FourierPolynomial.from_perturbation(
            Perturbation.from_cosines(N, [((1, 0, 0), 1.0)]))
        assert project(phi, None).is_zero

    def test_project_module_membership(self):
        lam = saturate([IntVector((1, -1, 0))])
        f = Perturbation.from_cosines(
            N, [((1, -1, 0), 1.0), ((2, -2, 0), 0.5), ((1, 0, 0), 0.25)])
        phi = FourierPolynomial.from_perturbation(f)
        kept = project(phi, lam)
        assert set(kept.terms) == {(1, -1, 0), (-1, 1, 0), (2, -2, 0), (-2, 2, 0)}

    def test_project_idempotent_commutes_with_truncate(self):
        lam = saturate([IntVector((1, -1, 0))])
        phi = FourierPolynomial.from_perturbation(
            Perturbation.from_cosines(
                N, [((1, -1, 0), 1.0), ((2, -2, 0), 0.5), ((1, 0, 0), 0.25),
                    ((3, 0, 0), 0.3)]))
        p = project(phi, lam)
        assert project(p, lam) == p
        assert project(truncate(phi, 2), lam) == truncate(project(phi, lam), 2)


class TestHomological:
    def test_single_harmonic_amplitude(self):
        # chi = eps sin(k.theta) / (k.I); at k.I = 2 the amplitude is eps/2.
        eps = 1e-3
        k = (1, 1, 0)
        f = Perturbation.from_cosines(N, [(k, eps)])
        I = np.array([1.0, 1.0, 0.3])  # k.I = 2
        chi = solve_homological(f, MODEL, None, 3.0, 0.1, [I])
        theta_star = np.array([math.pi / 2, 0.0, 0.0])  # sin(k.theta) = 1
        val = chi.poly.evaluate_real(theta_star, I, MODEL)
        assert val == pytest.approx(eps / 2)
        # Full functional form at another point.
        th = np.array([0.3, 1.1, 2.0])
        expected = eps * math.sin(th[0] + th[1]) / 2.0
        assert chi.poly.evaluate_real(th, I, MODEL) == pytest.approx(expected)

    def test_resonant_input_gives_zero(self):
        lam = saturate([IntVector((1, -1, 0))])
        f = Perturbation.from_cosines(N, [((1, -1, 0), 1e-3), ((2, -2, 0), 1e-3)])
        chi = solve_homological(f, MODEL, lam, 3.0, 0.05, SAMPLES)
        assert chi.poly.is_zero

    def test_small_divisor_guard(self):
        f = standard_perturbation(1e-3)
        dmin = min(abs(float(np.dot(MODEL.frequency(I), k)))
                   for I in SAMPLES for k in [(1, 0, 0), (1, -1, 0), (0, 0, 1)])
        with pytest.raises(SmallDivisorError) as err:
            solve_homological(f, MODEL, None, 3.0, dmin * 1.01, SAMPLES)
        assert err.value.value <= dmin * 1.01

    def test_generator_invariants(self):
        lam = saturate([IntVector((1, -1, 0))])
        f = Perturbation.from_cosines(
            N, [((1, -1, 0), 1e-3), ((1, 0, 0), 1e-3), ((1, 1, 1), 1e-3),
                ((2, 2, 0), 1e-3)])
        K = 3.0
        chi = solve_homological(f, MODEL, lam, K, 0.05, SAMPLES)
        for mode in chi.poly.terms:
            assert sum(abs(e) for e in mode) <= K
            assert not lam.contains(IntVector(mode))
        assert (1, 1, 1) in chi.poly.terms
        assert (2, 2, 0) not in chi.poly.terms  # |k|_1 = 4 > K


class TestPoissonBracket:
    def fd_bracket(self, F, G, theta, action, h=1e-6):
        n = len(theta)
        total = 0.0
        for j in range(n):
            tp, tm = theta.copy(), theta.copy()
            tp[j] += h
            tm[j] -= h
            dF_th = (F.evaluate(tp, action, MODEL) - F.evaluate(tm, action, MODEL)).real / (2 * h)
            dG_th = (G.evaluate(tp, action, MODEL) - G.evaluate(tm, action, MODEL)).real / (2 * h)
            ip, im = action.copy(), action.copy()
            ip[j] += h
            im[j] -= h
            dF_I = (F.evaluate(theta, ip, MODEL) - F.evaluate(theta, im, MODEL)).real / (2 * h)
            dG_I = (G.evaluate(theta, ip, MODEL) - G.evaluate(theta, im, MODEL)).real / (2 * h)
            total += dF_th * dG_I - dF_I * dG_th
        return total

    def test_against_finite_differences(self):
        rng = np.random.default_rng(0)
        F = FourierPolynomial.from_perturbation(quadratic_perturbation(0.7))
        G = FourierPolynomial.from_model(MODEL) + FourierPolynomial.from_perturbation(
            standard_perturbation(0.3))
        B = poisson_bracket(F, G, MODEL)
        for _ in range(10):
            th = rng.uniform(0, 2 * math.pi, size=N)
            I = rng.uniform(0.5, 1.5, size=N)
            alg = B.evaluate_real(th, I, MODEL)
            fd = self.fd_bracket(F, G, th, I)
            assert alg == pytest.approx(fd, rel=1e-5, abs=1e-8)

    def test_antisymmetry(self):
        rng = np.random.default_rng(1)
        F = FourierPolynomial.from_perturbation(quadratic_perturbation(0.7))
        G = FourierPolynomial.from_perturbation(standard_perturbation(0.3))
        B1 = poisson_bracket(F, G, MODEL)
        B2 = poisson_bracket(G, F, MODEL)
        for _ in range(10):
            th = rng.uniform(0, 2 * math.pi, size=N)
            I = rng.uniform(0.5, 1.5, size=N)
            assert B1.evaluate_real(th, I, MODEL) == pytest.approx(
                -B2.evaluate_real(th, I, MODEL), rel=1e-10, abs=1e-12)

    def test_leibniz_at_points(self):
        # {F*G, H} = F{G, H} + {F, H}G checked numerically: the left side via
        # finite differences of the evaluated product, the right via the
        # algebraic brackets.
        rng = np.random.default_rng(2)
        F = FourierPolynomial.from_perturbation(
            Perturbation.from_cosines(N, [((1, 0, 0), 0.8)]))
        G = FourierPolynomial.from_perturbation(
            Perturbation.from_cosines(N, [((0, 1, 0), 0.6)]))
        H = FourierPolynomial.from_model(MODEL)
        BGH = poisson_bracket(G, H, MODEL)
        BFH = poisson_bracket(F, H, MODEL)

        h = 1e-6
        for _ in range(5):
            th = rng.uniform(0, 2 * math.pi, size=N)
            I = rng.uniform(0.5, 1.5, size=N)
            lhs = 0.0
            for j in range(N):
                tp, tm = th.copy(), th.copy()
                tp[j] += h
                tm[j] -= h
                dFG = ((F.evaluate(tp, I).real * G.evaluate(tp, I).real)
                       - (F.evaluate(tm, I).real * G.evaluate(tm, I).real)) / (2 * h)
                ip, im = I.copy(), I.copy()
                ip[j] += h
                im[j] -= h
                dH_I = (H.evaluate(th, ip).real - H.evaluate(th, im).real) / (2 * h)
                dH_th = 0.0  # H = h(I)
                dFG_I = ((F.evaluate(th, ip).real * G.evaluate(th, ip).real)
                         - (F.evaluate(th, im).real * G.evaluate(th, im).real)) / (2 * h)
                lhs += dFG * dH_I - dFG_I * dH_th
            rhs = (F.evaluate(th, I).real * BGH.evaluate_real(th, I, MODEL)
                   + BFH.evaluate_real(th, I, MODEL) * G.evaluate(th, I).real)
            assert lhs == pytest.approx(rhs, rel=1e-5, abs=1e-8)


class TestLieTransform:
    def test_zero_chi_is_identity(self):
        system = HamiltonianSystem(MODEL, standard_perturbation(1e-3))
        chi = GeneratingFunction(FourierPolynomial.zero(N), 3.0, 0.1, None)
        step = lie_transform(system, chi, order=1)
        H = (FourierPolynomial.from_model(MODEL)
             + FourierPolynomial.from_perturbation(system.perturbation))
        assert step.transformed == H

    def test_first_order_cancellation_single_harmonic(self):
        eps = 1e-3
        k = (1, 1, 0)
        f = Perturbation.from_cosines(N, [(k, eps)])
        system = HamiltonianSystem(MODEL, f)
        chi = solve_homological(f, MODEL, None, 3.0, 0.1, SAMPLES)
        step = lie_transform(system, chi, order=1)
        # The order-eps coefficient at the original mode cancels: evaluate the
        # remainder restricted to |k|_1 <= K-truncated original modes.
        orig = step.remainder.filter_modes(lambda m: m in ((1, 1, 0), (-1, -1, 0)))
        rng = np.random.default_rng(3)
        for _ in range(10):
            th = rng.uniform(0, 2 * math.pi, size=N)
            val = abs(orig.evaluate(th, I_BASE, MODEL))
            assert val < 1e-12 * eps

    def test_resonant_split(self):
        lam = saturate([IntVector((1, -1, 0))])
        f = Perturbation.from_cosines(N, [((1, -1, 0), 1e-3), ((1, 0, 0), 1e-3)])
        system = HamiltonianSystem(MODEL, f)
        chi = solve_homological(f, MODEL, lam, 3.0, 0.1, SAMPLES)
        step = lie_transform(system, chi, order=1)
        for mode in step.resonant.terms:
            assert lam.contains(IntVector(mode)) or not any(mode)
        for mode in step.remainder.terms:
            assert not lam.contains(IntVector(mode))
        g = step.normal_part
        assert (1, -1, 0) in g.terms

    def test_resonant_only_f_leaves_no_first_order_remainder(self):
        lam = saturate([IntVector((1, -1, 0))])
        f = Perturbation.from_cosines(N, [((1, -1, 0), 1e-3), ((2, -2, 0), 5e-4)])
        system = HamiltonianSystem(MODEL, f)
        chi = solve_homological(f, MODEL, lam, 3.0, 0.1, SAMPLES)
        assert chi.poly.is_zero
        step = lie_transform(system, chi, order=1)
        assert step.remainder.is_zero

    @pytest.mark.parametrize("order", [1, 2])
    def test_flow_map_oracle_order_scaling(self, order):
        # |(h+g+remainder)(z) - H(Phi(z))| = O(eps^{order+1}): dividing eps by
        # ten shrinks the defect by ~10^{order+1}.
        rng = np.random.default_rng(4)
        defects = []
        for eps in (1e-2, 1e-3):
            f = standard_perturbation(eps)
            system = HamiltonianSystem(MODEL, f)
            chi = solve_homological(f, MODEL, None, 3.0, 0.05, SAMPLES)
            step = lie_transform(system, chi, order=order)
            worst = 0.0
            for _ in range(5):
                th = rng.uniform(0, 2 * math.pi, size=N)
                I = I_BASE + rng.uniform(-0.05, 0.05, size=N)
                thf, If = chi_flow_map(chi, MODEL, th, I)
                direct = system.energy(thf, If)
                series = step.transformed.evaluate_real(th, I, MODEL)
                worst = max(worst, abs(series - direct))
            defects.append(worst)
        ratio = defects[0] / defects[1]
        assert ratio > 10 ** (order + 1) / 3.0

    def test_reality_preserved(self):
        rng = np.random.default_rng(5)
        f = quadratic_perturbation(1e-2)
        system = HamiltonianSystem(MODEL, f)
        chi = solve_homological(f, MODEL, None, 3.0, 0.05, SAMPLES)
        step = lie_transform(system, chi, order=2)
        for _ in range(10):
            th = rng.uniform(0, 2 * math.pi, size=N)
            I = I_BASE + rng.uniform(-0.05, 0.05, size=N)
            for poly in (chi.poly, step.transformed, step.remainder):
                val = poly.evaluate(th, I, MODEL)
                assert abs(val.imag) < 1e-12 * max(1.0, abs(val))

    def test_degree_cap_error(self):
        f = quadratic_perturbation(1e-2)
        system = HamiltonianSystem(MODEL, f)
        chi = solve_homological(f, MODEL, None, 3.0, 0.05, SAMPLES)
        with pytest.raises(DegreeCapError) as err:
            lie_transform(system, chi, order=1, degree_cap=2)
        assert err.value.required > 2


class TestMeasureRemainder:
    def grid(self):
        angles = np.linspace(0, 2 * math.pi, 3, endpoint=False)
        return [(np.array([a, b, 0.5]), I_BASE) for a in angles for b in angles]

    def test_zero_perturbation(self):
        system = HamiltonianSystem(MODEL, Perturbation.zero(N))
        chi = GeneratingFunction(FourierPolynomial.zero(N), 3.0, 0.1, None)
        step = lie_transform(system, chi, order=1)
        rep = measure_remainder(step, self.grid())
        assert rep.nonresonant_sup == 0.0
        assert rep.coordinate_shift_sup < 1e-12

    def test_epsilon_square_scaling(self):
        sups = []
        shifts = []
        for eps in (1e-2, 1e-3, 1e-4):
            f = standard_perturbation(eps)
            system = HamiltonianSystem(MODEL, f)
            chi = solve_homological(f, MODEL, None, 3.0, 0.05, SAMPLES)
            step = lie_transform(system, chi, order=1)
            rep = measure_remainder(step, self.grid(), flow_grid=self.grid()[:3])
            sups.append(rep.nonresonant_sup)
            shifts.append(rep.coordinate_shift_sup)
        le = np.log([1e-2, 1e-3, 1e-4])
        slope = np.polyfit(le, np.log(sups), 1)[0]
        assert slope == pytest.approx(2.0, abs=0.2)
        shift_slope = np.polyfit(le, np.log(shifts), 1)[0]
        assert shift_slope == pytest.approx(1.0, abs=0.2)
