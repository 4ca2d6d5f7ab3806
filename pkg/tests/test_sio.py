import math

import numpy as np
import pytest

from curvperm.kernels import K_INF, K_ZERO, kt
from curvperm.measure import DiscreteMeasure, generate
from curvperm.permutations import perm_measure
from curvperm.sio import (
    TruncationGrid,
    apply_truncated,
    cauchy_l2_norm,
    default_grid,
    l2_norm_T1,
    mv_identity_report,
    sup_l2_norm,
    t1_values,
    theorem1_ratios,
)
from oracles import naive_t1_norm


def two_atoms():
    return DiscreteMeasure([-1 + 0j, 1 + 0j], [1.0, 1.0], 0.5)


class TestApplyTruncated:
    def test_one_term(self):
        mu = two_atoms()
        got = apply_truncated(K_INF, mu, np.ones(2), 1.0, 1 + 0j)
        assert got == pytest.approx(0.5)

    def test_huge_eps_empty(self):
        mu = generate("segment", n=20)
        assert apply_truncated(K_ZERO, mu, np.ones(20), 100.0, 0.3 + 0j) == 0.0

    def test_odd_cancellation(self):
        mu = two_atoms()
        for t in (None, 0.0, -1.0, 3.0):
            k = K_INF if t is None else kt(t)
            assert apply_truncated(k, mu, np.ones(2), 0.5, 0j) == pytest.approx(
                0.0, abs=1e-16
            )

    def test_requires_positive_eps(self):
        with pytest.raises(ValueError):
            apply_truncated(K_INF, two_atoms(), np.ones(2), 0.0, 0j)


class TestL2Norm:
    def test_vertical_line_flat_kernel(self):
        mu = generate("segment", n=16, end=1j)
        assert l2_norm_T1(K_ZERO, mu, 0.01) == 0.0
        assert l2_norm_T1(K_INF, mu, 0.01) == 0.0

    def test_two_atom_value(self):
        assert l2_norm_T1(K_INF, two_atoms(), 1.0) == pytest.approx(
            math.sqrt(0.5)
        )

    def test_huge_eps(self):
        mu = generate("circle", n=32)
        assert l2_norm_T1(K_INF, mu, 100.0) == 0.0

    def test_matches_naive(self):
        mu = generate("perturbed", base="segment", n=24, amplitude=2e-3, seed=6)
        for t in (None, 0.0, -0.5):
            k = K_INF if t is None else kt(t)
            eps = 0.07
            got = l2_norm_T1(k, mu, eps)
            ref = naive_t1_norm(t, [complex(z) for z in mu.points],
                                [float(w) for w in mu.weights], eps)
            assert got == pytest.approx(ref, rel=1e-10)

    def test_scaling_law(self):
        # positions x lam, weights x lam, eps x lam => squared norm x lam
        mu = generate("perturbed", base="segment", n=20, amplitude=1e-3, seed=3)
        lam = 2.75
        scaled = DiscreteMeasure(mu.points * lam, mu.weights * lam, mu.scale * lam)
        n1 = l2_norm_T1(K_ZERO, mu, 0.05)
        n2 = l2_norm_T1(K_ZERO, scaled, 0.05 * lam)
        assert n2**2 == pytest.approx(lam * n1**2, rel=1e-12)

    def test_triangle_inequality_decomposition(self):
        mu = generate("perturbed", base="cantor4", level=2, amplitude=1e-3, seed=5)
        for eps in (0.05, 0.2):
            n0 = l2_norm_T1(K_ZERO, mu, eps)
            ninf = l2_norm_T1(K_INF, mu, eps)
            for t in (-1.0, 0.5, 2.0):
                nt = l2_norm_T1(kt(t), mu, eps)
                assert nt <= n0 + abs(t) * ninf + 1e-12


class TestSupNorm:
    def test_single_atom_zero(self):
        mu = DiscreteMeasure([0.5 + 0.5j], [1.0], 0.1)
        val, _ = sup_l2_norm(K_INF, mu, TruncationGrid((0.1, 1.0)))
        assert val == 0.0

    def test_single_eps_grid(self):
        mu = two_atoms()
        val, eps = sup_l2_norm(K_INF, mu, TruncationGrid((1.0,)))
        assert val == pytest.approx(math.sqrt(0.5)) and eps == 1.0

    def test_segment_sup_at_small_eps(self):
        mu = generate("segment", n=64)
        grid = default_grid(mu)
        val, eps = sup_l2_norm(K_INF, mu, grid)
        per_eps = [l2_norm_T1(K_INF, mu, e) for e in grid.epsilons]
        assert val == max(per_eps) > 0
        assert eps == grid.epsilons[int(np.argmax(per_eps))]
        # for this family the norm is monotone decreasing in the cutoff
        assert all(a >= b - 1e-12 for a, b in zip(per_eps, per_eps[1:]))

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            TruncationGrid(())
        with pytest.raises(ValueError):
            TruncationGrid((0.2, 0.1))
        with pytest.raises(ValueError):
            TruncationGrid((-0.5, 0.1))


class TestCauchy:
    def test_single_atom(self):
        mu = DiscreteMeasure([1j], [2.0], 0.5)
        assert cauchy_l2_norm(mu, 0.1) == 0.0

    def test_two_atoms(self):
        assert cauchy_l2_norm(two_atoms(), 1.0) == pytest.approx(math.sqrt(0.5))

    def test_square_by_direct_sum(self):
        pts = [0j, 1 + 0j, 1 + 1j, 1j]
        mu = DiscreteMeasure(pts, [1.0] * 4, 0.25)
        eps = 0.5
        acc = 0.0
        for i, z in enumerate(pts):
            val = 0j
            for j, w in enumerate(pts):
                if abs(z - w) >= eps:
                    val += 1.0 / (z - w)
            acc += abs(val) ** 2
        assert cauchy_l2_norm(mu, eps) == pytest.approx(math.sqrt(acc), rel=1e-12)

    def test_real_part_bounded_by_cauchy_per_atom(self):
        mu = generate("perturbed", base="cantor4", level=2, amplitude=1e-3, seed=9)
        eps = 0.1
        t_inf = t1_values(K_INF, mu, eps)
        dz = mu.points[:, None] - mu.points[None, :]
        mask = np.abs(dz) >= eps
        with np.errstate(divide="ignore", invalid="ignore"):
            ck = np.where(mask, 1.0 / np.where(dz == 0, 1, dz), 0.0)
        cauchy = ck @ mu.weights.astype(complex)
        assert np.all(np.abs(t_inf) <= np.abs(cauchy) + 1e-14)


class TestMvIdentity:
    def test_two_atom_degenerate(self):
        mu = two_atoms()
        rep = mv_identity_report(K_INF, mu, 0.5)
        assert rep.p_third == 0.0
        assert rep.remainder == pytest.approx(rep.lhs)

    def test_vertical_line_all_zero(self):
        mu = generate("segment", n=16, end=1j)
        rep = mv_identity_report(K_ZERO, mu, 0.05)
        assert rep.lhs == 0.0 and rep.p_third == 0.0 and rep.remainder == 0.0

    def test_segment_normalized_remainder_capped(self):
        mu = generate("segment", n=200)
        rep = mv_identity_report(K_INF, mu, 0.05)
        assert abs(rep.normalized_remainder) <= 10.0

    def test_identity_terms_consistent(self):
        mu = generate("cantor4", level=2)
        eps = 0.1
        rep = mv_identity_report(K_INF, mu, eps)
        assert rep.lhs == pytest.approx(l2_norm_T1(K_INF, mu, eps) ** 2)
        assert rep.p_third == pytest.approx(
            perm_measure(K_INF, mu, eps=eps).value / 3
        )
        assert rep.remainder == pytest.approx(rep.lhs - rep.p_third)

    def test_refinement_stability(self):
        rems = []
        for n in (100, 200, 400):
            mu = generate("segment", n=n)
            rems.append(mv_identity_report(K_INF, mu, 0.05).normalized_remainder)
        for a, b in zip(rems, rems[1:]):
            assert max(abs(a), abs(b)) / max(min(abs(a), abs(b)), 1e-12) <= 2.0


class TestTheorem1:
    def test_vertical_line(self):
        mu = generate("segment", n=32, end=1j)
        r = theorem1_ratios(mu, default_grid(mu))
        assert r.sup_0 == 0.0
        assert math.isfinite(r.ratio_fwd)

    def test_horizontal_kernels_coincide(self):
        # on the real axis both kernels reduce to the same function, so the
        # backward ratio sits far below its generic cap
        mu = generate("segment", n=64)
        r = theorem1_ratios(mu, default_grid(mu))
        assert r.sup_0 == pytest.approx(r.sup_inf, rel=1e-12)
        assert r.ratio_bwd <= math.sqrt(2) + 1e-9

    def test_cantor_finite(self):
        mu = generate("cantor4", level=3)
        r = theorem1_ratios(mu, default_grid(mu))
        assert math.isfinite(r.ratio_fwd) and math.isfinite(r.ratio_bwd)
        assert r.sup_inf > 0 and r.sup_0 > 0
