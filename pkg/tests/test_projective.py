"""Direction metric, projective action, invariant measure, A/B bounds."""

import math

import numpy as np
import pytest
from scipy.stats import ks_2samp

from lyaplab.ensembles import EnsembleSpec, ScalarDistribution, sample_batch
from lyaplab.projective import (
    SUP_CAVEAT,
    EmpiricalDirectionMeasure,
    _delta_columns,
    act,
    canonicalize,
    delta,
    estimate_A,
    estimate_B,
    estimate_invariant_measure,
    furstenberg_gamma1,
    random_direction,
    save_atoms_csv,
)
from lyaplab.rng import child_rng


def rotation(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def unit_rows(count, dim, seed):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(count, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


class TestCanonicalize:
    def test_normalizes_and_fixes_sign(self):
        u = canonicalize([0.0, -3.0, 4.0])
        assert np.allclose(u, [0.0, 0.6, -0.8])
        assert np.linalg.norm(u) == pytest.approx(1.0, abs=1e-15)

    def test_positive_leading_coordinate_kept(self):
        u = canonicalize([2.0, -1.0])
        assert u[0] > 0

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError, match="zero vector"):
            canonicalize([0.0, 0.0])

    def test_idempotent(self):
        u = canonicalize([-1.0, 2.0, -0.5])
        assert np.array_equal(u, canonicalize(u))


class TestDelta:
    def test_extremes(self):
        assert delta([1.0, 0.0], [0.0, 1.0]) == pytest.approx(1.0, abs=1e-15)
        assert delta([1.0, 0.0], [1.0, 0.0]) == 0.0
        assert delta([1.0, 0.0], [-1.0, 0.0]) == 0.0  # same line

    def test_matches_inner_product_formula(self):
        for u, v in zip(unit_rows(50, 4, 1), unit_rows(50, 4, 2)):
            expected = math.sqrt(max(0.0, 1.0 - float(u @ v) ** 2))
            assert delta(u, v) == pytest.approx(expected, abs=1e-12)

    def test_symmetry_is_exact(self):
        for u, v in zip(unit_rows(50, 3, 3), unit_rows(50, 3, 4)):
            assert delta(u, v) == delta(v, u)

    def test_accurate_at_tiny_separation(self):
        u = canonicalize([1.0, 2.0, 3.0])
        w = canonicalize(np.array([3.0, 0.0, -1.0]) - (np.array([3.0, 0.0, -1.0]) @ u) * u)
        for sep in (1e-3, 1e-6, 1e-9):
            v = math.sqrt(1 - sep * sep) * u + sep * w
            assert delta(u, v) == pytest.approx(sep, rel=1e-6)

    @pytest.mark.parametrize("dim", (2, 3, 5))
    def test_triangle_inequality_bulk(self, dim):
        count = 100_000
        a = unit_rows(count, dim, 10 + dim).T
        b = unit_rows(count, dim, 20 + dim).T
        c = unit_rows(count, dim, 30 + dim).T
        ab = _delta_columns(a, b)
        bc = _delta_columns(b, c)
        ac = _delta_columns(a, c)
        assert np.all(ac <= ab + bc + 1e-12)
        assert np.all((ab >= 0) & (ab <= 1))

    def test_vectorized_matches_scalar(self):
        a = unit_rows(20, 3, 40).T
        b = unit_rows(20, 3, 41).T
        cols = _delta_columns(a, b)
        for k in range(20):
            assert cols[k] == pytest.approx(delta(a[:, k], b[:, k]), abs=1e-15)


class TestAct:
    def test_semigroup_property(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            m = rng.normal(size=(3, 3))
            n = rng.normal(size=(3, 3))
            u = random_direction(rng, 3)
            if abs(np.linalg.det(m)) < 1e-8 or abs(np.linalg.det(n)) < 1e-8:
                continue
            assert delta(act(m @ n, u), act(m, act(n, u))) <= 1e-10

    def test_orthogonal_maps_are_isometries(self):
        rng = np.random.default_rng(6)
        q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
        for _ in range(200):
            u, v = random_direction(rng, 4), random_direction(rng, 4)
            assert abs(delta(act(q, u), act(q, v)) - delta(u, v)) <= 1e-12

    def test_result_is_canonical(self):
        out = act(np.diag([1.0, -2.0]), [0.0, 1.0])
        assert np.array_equal(out, canonicalize(out))

    def test_null_image_rejected(self):
        with pytest.raises(ValueError, match="1e-300"):
            act(1e-301 * np.eye(2), [1.0, 0.0])


class TestInvariantMeasure:
    def test_deterministic_diagonal_collapses_to_axis(self):
        spec = EnsembleSpec.deterministic(np.diag([4.0, 1.0]))
        nu = estimate_invariant_measure(spec, count=50, master_seed=3)
        assert nu.count == 50
        assert np.all(np.abs(nu.atoms @ np.array([1.0, 0.0])) > 1.0 - 1e-6)

    def test_atoms_are_canonical_unit(self):
        spec = EnsembleSpec.isotropic_gaussian(3, 1.0)
        nu = estimate_invariant_measure(spec, count=100, master_seed=4)
        assert np.allclose(np.linalg.norm(nu.atoms, axis=1), 1.0, atol=1e-12)
        for row in nu.atoms:
            assert np.array_equal(row, canonicalize(row))
        assert nu.weight == pytest.approx(1.0 / 100)

    def test_rotation_requires_override(self):
        spec = EnsembleSpec.deterministic(rotation(0.3))
        with pytest.raises(ValueError, match="override"):
            estimate_invariant_measure(spec, count=10, master_seed=5)
        nu = estimate_invariant_measure(spec, count=10, master_seed=5, override=True)
        assert nu.count == 10

    def test_deterministic_given_seed(self):
        spec = EnsembleSpec.isotropic_gaussian(2, 1.0)
        a = estimate_invariant_measure(spec, count=40, master_seed=6)
        b = estimate_invariant_measure(spec, count=40, master_seed=6)
        c = estimate_invariant_measure(spec, count=40, master_seed=7)
        assert np.array_equal(a.atoms, b.atoms)
        assert not np.array_equal(a.atoms, c.atoms)

    def test_pushforward_invariance(self):
        spec = EnsembleSpec.isotropic_gaussian(2, 1.0)
        count = 2000
        nu = estimate_invariant_measure(spec, count=count, master_seed=8)
        mats = sample_batch(spec, child_rng(9, 6, 1), count)
        pushed = np.einsum("kij,kj->ki", mats, nu.atoms)
        pushed /= np.linalg.norm(pushed, axis=1, keepdims=True)
        stat = ks_2samp(nu.atoms[:, 0] ** 2, pushed[:, 0] ** 2).statistic
        assert stat <= 3.0 * 2.0 / math.sqrt(count)


class TestFurstenberg:
    def test_scalar_matrix_gives_log_scale_exactly(self):
        spec = EnsembleSpec.deterministic(2.0 * np.eye(2))
        nu = EmpiricalDirectionMeasure(atoms=np.array([[1.0, 0.0]]))
        gamma, se = furstenberg_gamma1(spec, nu, samples=128, master_seed=1)
        assert gamma == pytest.approx(math.log(2.0), abs=1e-14)
        assert se == 0.0

    def test_diagonal_with_its_invariant_measure(self):
        spec = EnsembleSpec.deterministic(np.diag([4.0, 1.0]))
        nu = estimate_invariant_measure(spec, count=100, master_seed=2)
        gamma, _ = furstenberg_gamma1(spec, nu, samples=500, master_seed=2)
        assert gamma == pytest.approx(math.log(4.0), abs=1e-6)

    def test_reports_standard_error(self):
        spec = EnsembleSpec.isotropic_gaussian(2, 1.0)
        nu = estimate_invariant_measure(spec, count=500, master_seed=3)
        gamma, se = furstenberg_gamma1(spec, nu, samples=2000, master_seed=3)
        assert se > 0.0
        assert math.isfinite(gamma)


class TestEstimateA:
    def test_rotation_exactly_one(self):
        spec = EnsembleSpec.deterministic(rotation(0.3))
        est = estimate_A(spec, alpha=0.5, n=20, pair_count=10, master_seed=1, samples=20)
        assert est.value == 1.0
        assert est.caveat == SUP_CAVEAT

    def test_scalar_exactly_one(self):
        spec = EnsembleSpec.deterministic(2.0 * np.eye(2))
        est = estimate_A(spec, alpha=1.0, n=10, pair_count=10, master_seed=2, samples=10)
        assert est.value == 1.0

    def test_isotropic_contracts(self):
        spec = EnsembleSpec.isotropic_gaussian(2, 1.0)
        est = estimate_A(spec, alpha=0.5, n=20, pair_count=20, master_seed=3, samples=100)
        assert est.value < 0.95

    def test_deterministic_given_seed(self):
        spec = EnsembleSpec.isotropic_gaussian(2, 1.0)
        a = estimate_A(spec, alpha=0.5, n=10, pair_count=5, master_seed=4, samples=20)
        b = estimate_A(spec, alpha=0.5, n=10, pair_count=5, master_seed=4, samples=20)
        assert a.value == b.value


class TestEstimateB:
    def test_single_atom_probe_values(self):
        nu = EmpiricalDirectionMeasure(atoms=np.array([[1.0, 0.0]]))
        est = estimate_B(nu, beta=1.0, probe_count=4, master_seed=1)
        # probes start with the coordinate axes: e1 aligned, e2 orthogonal
        assert est.probe_values[0] == 1.0
        assert math.isinf(est.probe_values[1])
        assert est.infinite
        assert est.orthogonal_probes >= 1
        assert est.caveat == SUP_CAVEAT

    def test_isotropic_measure_finite(self):
        spec = EnsembleSpec.isotropic_gaussian(3, 1.0)
        nu = estimate_invariant_measure(spec, count=1000, master_seed=2)
        est = estimate_B(nu, beta=0.5, probe_count=32, master_seed=2)
        assert not est.infinite
        assert est.value >= 1.0


class TestAtomsCsv:
    def test_round_trip(self, tmp_path):
        atoms = np.array([[1.0, 0.0, 0.0], [0.0, 0.6, 0.8]])
        nu = EmpiricalDirectionMeasure(atoms=atoms)
        path = tmp_path / "atoms.csv"
        save_atoms_csv(nu, path)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "x1,x2,x3"
        back = np.array([[float(x) for x in line.split(",")] for line in lines[1:]])
        assert np.array_equal(back, atoms)
