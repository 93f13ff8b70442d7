import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from optdesign.model import (
    DesignError,
    ModelSpec,
    as_design,
    expand_point,
    information_matrix,
    model_matrix,
    moments_matrix,
    read_design,
    write_design,
)

from conftest import random_design


class TestModelSpec:
    @pytest.mark.parametrize("k,p", [(1, 3), (2, 6), (3, 10), (4, 15)])
    def test_parameter_count(self, k, p):
        assert ModelSpec(k, 5).p == p

    def test_exponents_term_order(self):
        e = ModelSpec(3, 10).exponents
        assert e.tolist() == [
            [0, 0, 0],
            [1, 0, 0], [0, 1, 0], [0, 0, 1],
            [1, 1, 0], [1, 0, 1], [0, 1, 1],
            [2, 0, 0], [0, 2, 0], [0, 0, 2],
        ]
        assert ModelSpec(3, 10).term_names()[4] == "x1*x2"

    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_exponents_distinct_degree_two(self, k):
        e = ModelSpec(k, 1).exponents
        assert len({tuple(r) for r in e}) == ModelSpec(k, 1).p
        assert e.sum(axis=1).max() == 2 and e.max() == 2

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            ModelSpec(0, 3)


class TestExpandPoint:
    def test_k2(self):
        np.testing.assert_array_equal(expand_point([0.5, -1], ModelSpec(2, 1)),
                                      [1, 0.5, -1, -0.5, 0.25, 1])

    def test_k1_zero(self):
        np.testing.assert_array_equal(expand_point([0.0], ModelSpec(1, 1)), [1, 0, 0])

    def test_k3_ones(self):
        np.testing.assert_array_equal(expand_point([1, 1, 1], ModelSpec(3, 1)), np.ones(10))

    def test_dimension_mismatch(self):
        with pytest.raises(DesignError):
            expand_point([0.1, 0.2], ModelSpec(3, 1))

    @given(st.integers(1, 4), st.data())
    @settings(max_examples=50, deadline=None)
    def test_matches_monomials(self, k, data):
        x = np.array(data.draw(st.lists(st.floats(-1, 1), min_size=k, max_size=k)))
        spec = ModelSpec(k, 1)
        f = expand_point(x, spec)
        assert f.shape == (spec.p,)
        np.testing.assert_allclose(f, np.prod(x[None, :] ** spec.exponents, axis=1), atol=1e-15)


class TestMatrices:
    def test_model_matrix_k1(self, k1_opt):
        spec, x = k1_opt
        np.testing.assert_array_equal(model_matrix(x, spec), [[1, -1, 1], [1, 0, 0], [1, 1, 1]])

    def test_model_matrix_shape(self, rng):
        spec = ModelSpec(3, 13)
        assert model_matrix(random_design(spec, rng), spec).shape == (13, 10)

    def test_model_matrix_single_zero_row(self):
        np.testing.assert_array_equal(model_matrix([[0.0, 0.0]], ModelSpec(2, 1)),
                                      [[1, 0, 0, 0, 0, 0]])

    def test_information_k1(self, k1_opt):
        spec, x = k1_opt
        np.testing.assert_array_equal(information_matrix(x, spec),
                                      [[3, 0, 2], [0, 2, 0], [2, 0, 2]])

    def test_information_zero_design(self):
        spec = ModelSpec(2, 7)
        m = information_matrix(np.zeros((7, 2)), spec)
        expected = np.zeros((6, 6))
        expected[0, 0] = 7
        np.testing.assert_array_equal(m, expected)

    @pytest.mark.parametrize("k,n", [(1, 5), (2, 9), (3, 14)])
    def test_information_symmetric_and_fprime_f(self, k, n, rng):
        spec = ModelSpec(k, n)
        x = random_design(spec, rng)
        m = information_matrix(x, spec)
        np.testing.assert_array_equal(m, m.T)
        f = model_matrix(x, spec)
        np.testing.assert_allclose(m, f.T @ f, rtol=1e-13, atol=1e-13)
        assert np.linalg.eigvalsh(m).min() > -1e-12

    @pytest.mark.parametrize("k,n", [(1, 5), (2, 9), (3, 14)])
    def test_information_row_permutation(self, k, n, rng):
        spec = ModelSpec(k, n)
        x = random_design(spec, rng)
        perm = rng.permutation(n)
        # exact equality: entries are sums of identical products, reordered
        np.testing.assert_allclose(information_matrix(x[perm], spec), information_matrix(x, spec),
                                   rtol=1e-15, atol=1e-14)

    def test_sign_flip_conjugates(self, rng):
        spec = ModelSpec(3, 12)
        x = random_design(spec, rng)
        flipped = x.copy()
        flipped[:, 1] *= -1
        s = np.array([(-1.0) ** e[1] for e in spec.exponents])
        np.testing.assert_allclose(information_matrix(flipped, spec),
                                   np.diag(s) @ information_matrix(x, spec) @ np.diag(s),
                                   rtol=1e-14, atol=1e-13)


class TestMoments:
    def test_k1(self):
        np.testing.assert_allclose(moments_matrix(ModelSpec(1, 3)),
                                   [[1, 0, 1 / 3], [0, 1 / 3, 0], [1 / 3, 0, 1 / 5]],
                                   rtol=1e-15)

    def test_k2(self):
        w = moments_matrix(ModelSpec(2, 6))
        np.testing.assert_allclose(np.diag(w), [1, 1 / 3, 1 / 3, 1 / 9, 1 / 5, 1 / 5], rtol=1e-15)
        off = w - np.diag(np.diag(w))
        expected = np.zeros((6, 6))
        expected[0, 4] = expected[4, 0] = expected[0, 5] = expected[5, 0] = 1 / 3
        expected[4, 5] = expected[5, 4] = 1 / 9
        np.testing.assert_allclose(off, expected, rtol=1e-15, atol=0)

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_odd_moments_vanish(self, k):
        spec = ModelSpec(k, 1)
        e = spec.exponents
        odd = ((e[:, None, :] + e[None, :, :]) % 2 == 1).any(axis=2)
        w = moments_matrix(spec)
        assert np.all(w[odd] == 0.0)
        np.testing.assert_array_equal(w, w.T)
        assert np.linalg.eigvalsh(w).min() > 0

    def test_quadrature_oracle_k2(self):
        # tensor Gauss-Legendre is exact for these degree <= 4 integrands
        nodes, weights = np.polynomial.legendre.leggauss(4)
        spec = ModelSpec(2, 1)
        acc = np.zeros((6, 6))
        for a, wa in zip(nodes, weights):
            for b, wb in zip(nodes, weights):
                f = np.array([1, a, b, a * b, a * a, b * b])
                acc += wa * wb * np.outer(f, f)
        np.testing.assert_allclose(moments_matrix(spec), acc / 4.0, rtol=1e-13, atol=1e-15)

    def test_read_only(self):
        w = moments_matrix(ModelSpec(2, 1))
        with pytest.raises(ValueError):
            w[0, 0] = 2.0


class TestDesignIO:
    def test_roundtrip(self, tmp_path, rng):
        x = rng.uniform(-1, 1, size=(7, 2))
        path = tmp_path / "d.csv"
        write_design(path, x)
        assert path.read_text().splitlines()[0] == "x1,x2"
        np.testing.assert_array_equal(read_design(path, k=2), x)

    def test_headerless(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("-1\n0\n1\n")
        np.testing.assert_array_equal(read_design(path), [[-1], [0], [1]])

    def test_out_of_bounds_line_precise(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("x1,x2\n0.1,0.2\n0.3,1.5\n")
        with pytest.raises(DesignError, match=r"row 2 \(line 3\), column 2"):
            read_design(path)

    def test_column_mismatch(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("0.1,0.2\n0.3,0.4\n")
        with pytest.raises(DesignError, match="k=1"):
            read_design(path, k=1)

    def test_as_design_bounds(self):
        with pytest.raises(DesignError, match="row 2, column 1"):
            as_design([[0.0], [-1.01]])
