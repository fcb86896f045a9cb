"""Compound-matrix identities: multiplicativity, norms, determinants."""

import math
from math import comb

import numpy as np
import pytest

from lyaplab.exterior import (
    EXTERIOR_DIM_CAP,
    exterior_power,
    subset_enumeration,
)
from lyaplab.linalg import ell, spectral_norm, svd


def random_matrices(dim, count, seed):
    rng = np.random.default_rng(seed)
    return rng.uniform(-1.0, 1.0, size=(count, dim, dim))


class TestSubsetEnumeration:
    def test_dictionary_order_d4_p2(self):
        assert subset_enumeration(4, 2) == [
            (1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4),
        ]

    @pytest.mark.parametrize("d,p", [(3, 1), (5, 2), (6, 3), (8, 4)])
    def test_count_and_order(self, d, p):
        subs = subset_enumeration(d, p)
        assert len(subs) == comb(d, p)
        assert subs == sorted(subs)
        assert all(len(set(s)) == p for s in subs)
        assert all(1 <= min(s) and max(s) <= d for s in subs)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            subset_enumeration(4, 0)
        with pytest.raises(ValueError):
            subset_enumeration(4, 5)


class TestExteriorPower:
    def test_identity_maps_to_identity(self):
        ext = exterior_power(np.eye(4), 2)
        assert np.array_equal(ext.matrix, np.eye(6))

    def test_minor_entries_d3_p2(self):
        m = np.arange(1.0, 10.0).reshape(3, 3)
        ext = exterior_power(m, 2)
        subs = [(0, 1), (0, 2), (1, 2)]
        for i, rows in enumerate(subs):
            for j, cols in enumerate(subs):
                minor = np.linalg.det(m[np.ix_(rows, cols)])
                assert ext.matrix[i, j] == pytest.approx(minor, abs=1e-12)

    def test_power_one_is_copy(self):
        m = random_matrices(3, 1, seed=7)[0]
        ext = exterior_power(m, 1)
        assert np.array_equal(ext.matrix, m)
        ext.matrix[0, 0] = 99.0
        assert m[0, 0] != 99.0

    def test_top_power_is_determinant(self):
        for m in random_matrices(5, 20, seed=11):
            ext = exterior_power(m, 5)
            assert ext.matrix.shape == (1, 1)
            det = np.linalg.det(m)
            assert ext.matrix[0, 0] == pytest.approx(det, rel=1e-9, abs=1e-12)

    @pytest.mark.parametrize("p", [1, 2, 3])
    def test_multiplicativity_4x4(self, p):
        mats = random_matrices(4, 40, seed=13 + p)
        for m, n in zip(mats[::2], mats[1::2]):
            lhs = exterior_power(m @ n, p).matrix
            em, en = exterior_power(m, p).matrix, exterior_power(n, p).matrix
            bound = 1e-9 * spectral_norm(em) * spectral_norm(en)
            assert np.linalg.norm(lhs - em @ en, 2) <= bound

    @pytest.mark.parametrize("dim", (2, 3, 4, 6))
    def test_norm_is_product_of_top_sigmas(self, dim):
        for m in random_matrices(dim, 15, seed=17 + dim):
            sigmas = svd(m).sigmas
            for p in range(1, dim + 1):
                ext_norm = spectral_norm(exterior_power(m, p).matrix)
                expected = float(np.prod(sigmas[:p]))
                assert ext_norm == pytest.approx(expected, rel=1e-9, abs=1e-12)

    def test_moduli_products_match_compound_top_modulus(self):
        from lyaplab.linalg import eigen_moduli
        for m in random_matrices(4, 15, seed=29):
            moduli = eigen_moduli(m)
            for p in range(1, 5):
                top = eigen_moduli(exterior_power(m, p).matrix)[0]
                assert top == pytest.approx(float(np.prod(moduli[:p])), rel=1e-8, abs=1e-12)

    @pytest.mark.parametrize("dim", (2, 4))
    def test_log_norm_bounded_by_gauge(self, dim):
        for m in random_matrices(dim, 25, seed=23 + dim):
            if abs(np.linalg.det(m)) < 1e-6:
                continue
            gauge = ell(m)
            for p in range(1, dim + 1):
                log_norm = math.log(spectral_norm(exterior_power(m, p).matrix))
                assert abs(log_norm) / p <= gauge + 1e-9

    def test_lu_path_agrees_with_direct_path(self):
        # p = 5 minors go through pivoted LU; check them against p <= 4
        # composition: minors of m on 5-subsets equal det of submatrices.
        rng = np.random.default_rng(31)
        m = rng.uniform(-1.0, 1.0, size=(6, 6))
        ext = exterior_power(m, 5)
        subs = subset_enumeration(6, 5)
        for i, rows in enumerate(subs):
            for j, cols in enumerate(subs):
                idx_r = [r - 1 for r in rows]
                idx_c = [c - 1 for c in cols]
                minor = np.linalg.det(m[np.ix_(idx_r, idx_c)])
                assert ext.matrix[i, j] == pytest.approx(minor, rel=1e-9, abs=1e-12)

    def test_cap_enforced(self):
        with pytest.raises(ValueError, match="cap"):
            exterior_power(np.eye(10), 5)  # C(10,5) = 252 > 70

    def test_power_out_of_range(self):
        with pytest.raises(ValueError):
            exterior_power(np.eye(3), 0)
        with pytest.raises(ValueError):
            exterior_power(np.eye(3), 4)
