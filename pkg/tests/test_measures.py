"""Canonical measure construction, pushforwards and the JSON wire format."""

import json
import math

import numpy as np
import pytest

from riskshare.errors import (
    DimensionMismatch,
    IndexOutOfRange,
    InputError,
    NonPositiveWeight,
    WeightSumOutOfTolerance,
)
from riskshare.measures import (
    BallConfig,
    DiscreteMeasure,
    dirac,
    joint_law_from_json,
    joint_law_to_json,
    joint_laws_equal,
    marginal,
    measure_from_json,
    measure_to_json,
    measures_equal,
    sum_pushforward,
    validate_joint_law,
    validate_measure,
)

TOL = 1e-12


class TestValidateMeasure:
    def test_canonical_order_is_lexicographic(self):
        m = validate_measure([((1.0, 0.0), 0.25), ((0.0, 5.0), 0.5), ((0.0, 1.0), 0.25)])
        assert [a[0] for a in m.atoms] == [(0.0, 1.0), (0.0, 5.0), (1.0, 0.0)]

    def test_duplicates_within_tol_merge_and_sum_weights(self):
        m = validate_measure([((0.0,), 0.5), ((1e-13,), 0.25), ((1.0,), 0.25)])
        assert m.size == 2
        assert m.atoms[0][1] == pytest.approx(0.75, abs=TOL)

    def test_distinct_atoms_beyond_tol_stay_separate(self):
        m = validate_measure([((0.0,), 0.5), ((1e-9,), 0.5)])
        assert m.size == 2

    def test_weight_sum_off_by_more_than_tol_raises(self):
        with pytest.raises(WeightSumOutOfTolerance):
            validate_measure([((0.0,), 0.5), ((1.0,), 0.6)])

    def test_tiny_weight_drift_renormalizes(self):
        m = validate_measure([((0.0,), 0.5 + 2e-10), ((1.0,), 0.5)])
        assert m.total_mass() == pytest.approx(1.0, abs=1e-15)

    def test_nonpositive_weight_raises(self):
        with pytest.raises(NonPositiveWeight):
            validate_measure([((0.0,), 0.0), ((1.0,), 1.0)])
        with pytest.raises(NonPositiveWeight):
            validate_measure([((0.0,), -0.5), ((1.0,), 1.5)])

    def test_dimension_mismatch_raises(self):
        with pytest.raises(DimensionMismatch):
            validate_measure([((0.0, 0.0), 0.5), ((1.0,), 0.5)])

    def test_empty_measure_raises(self):
        with pytest.raises(InputError):
            validate_measure([])

    def test_nonfinite_coordinate_raises(self):
        with pytest.raises(InputError):
            validate_measure([((float("nan"),), 1.0)])

    def test_ball_violation_raises(self):
        with pytest.raises(InputError):
            validate_measure([((3.0,), 1.0)], ball=BallConfig(radius=2.0))

    def test_ball_respects_center(self):
        m = validate_measure([((3.0,), 1.0)], ball=BallConfig(radius=2.0, center=(2.0,)))
        assert m.size == 1


class TestPushforwards:
    def test_marginals_of_product_law(self):
        # Independent coupling of {0 w.p. 1/4, 1 w.p. 3/4} and {2 w.p. 1/2, 5 w.p. 1/2}.
        atoms = []
        for x, wx in [((0.0,), 0.25), ((1.0,), 0.75)]:
            for y, wy in [((2.0,), 0.5), ((5.0,), 0.5)]:
                atoms.append(((x, y), wx * wy))
        law = validate_joint_law(atoms)
        m0 = marginal(law, 0)
        m1 = marginal(law, 1)
        assert measures_equal(m0, validate_measure([((0.0,), 0.25), ((1.0,), 0.75)]))
        assert measures_equal(m1, validate_measure([((2.0,), 0.5), ((5.0,), 0.5)]))

    def test_marginal_index_out_of_range(self):
        law = validate_joint_law([(((0.0,), (0.0,)), 1.0)])
        with pytest.raises(IndexOutOfRange):
            marginal(law, 2)
        with pytest.raises(IndexOutOfRange):
            marginal(law, -1)

    def test_sum_pushforward_two_state(self):
        # (0,0) and (1,1) with equal mass: the sum is {0 w.p. 1/2, 2 w.p. 1/2}.
        law = validate_joint_law([(((0.0,), (0.0,)), 0.5), (((1.0,), (1.0,)), 0.5)])
        s = sum_pushforward(law)
        assert measures_equal(s, validate_measure([((0.0,), 0.5), ((2.0,), 0.5)]))

    def test_sum_pushforward_merges_colliding_sums(self):
        law = validate_joint_law(
            [(((0.0,), (1.0,)), 0.5), (((1.0,), (0.0,)), 0.5)]
        )
        s = sum_pushforward(law)
        assert s.size == 1
        assert s.atoms[0] == ((1.0,), 1.0)

    def test_joint_law_merges_duplicate_tuples(self):
        law = validate_joint_law(
            [(((0.0,), (1.0,)), 0.5), (((0.0,), (1.0 + 1e-14,)), 0.5)]
        )
        assert law.size == 1


class TestProperties:
    """Randomized invariants with a fixed seed."""

    def test_mass_and_mean_conservation(self):
        rng = np.random.RandomState(11)
        for _ in range(25):
            n, p, d = rng.randint(1, 8), rng.randint(1, 4), rng.randint(1, 3)
            pts = rng.randn(n, p, d)
            w = rng.rand(n) + 0.1
            w /= w.sum()
            law = validate_joint_law(
                [(tuple(tuple(pts[i, j]) for j in range(p)), w[i]) for i in range(n)]
            )
            s = sum_pushforward(law)
            assert s.total_mass() == pytest.approx(1.0, abs=1e-12)
            # mean of the sum equals the sum of marginal means
            lhs = s.mean()
            rhs = sum(marginal(law, j).mean() for j in range(p))
            np.testing.assert_allclose(lhs, rhs, atol=1e-10)

    def test_input_order_does_not_matter(self):
        rng = np.random.RandomState(12)
        for _ in range(10):
            n = rng.randint(2, 9)
            pts = rng.randn(n, 2)
            w = rng.rand(n) + 0.1
            w /= w.sum()
            atoms = [(tuple(pts[i]), w[i]) for i in range(n)]
            a = validate_measure(atoms)
            perm = rng.permutation(n)
            b = validate_measure([atoms[i] for i in perm])
            assert a == b

    def test_validation_is_idempotent(self):
        rng = np.random.RandomState(13)
        for _ in range(10):
            n = rng.randint(1, 7)
            atoms = [(tuple(rng.randn(3)), 1.0 / n) for _ in range(n)]
            a = validate_measure(atoms)
            b = validate_measure(a.atoms)
            assert a == b


class TestJson:
    def test_measure_round_trip_is_exact(self):
        m = validate_measure([((1 / 3, 0.1), 2 / 3), ((0.7, -1e-17), 1 / 3)])
        again = measure_from_json(measure_to_json(m))
        assert again == m

    def test_joint_law_round_trip_is_exact(self):
        law = validate_joint_law(
            [(((1 / 7,), (2 / 7,)), 0.5), (((3 / 7,), (4 / 7,)), 0.5)]
        )
        again = joint_law_from_json(joint_law_to_json(law))
        assert joint_laws_equal(again, law, tol=0.0)
        assert again == law

    def test_nan_and_infinity_rejected(self):
        with pytest.raises(InputError):
            measure_from_json('{"dim": 1, "atoms": [{"x": [NaN], "w": 1.0}]}')
        with pytest.raises(InputError):
            measure_from_json('{"dim": 1, "atoms": [{"x": [Infinity], "w": 1.0}]}')
        # huge literals that overflow to inf are also rejected
        with pytest.raises(InputError):
            measure_from_json('{"dim": 1, "atoms": [{"x": [1e999], "w": 1.0}]}')

    def test_malformed_object_raises_input_error(self):
        with pytest.raises(InputError):
            measure_from_json('{"atoms": [{"x": [0.0], "w": 1.0}]}')

    def test_schema_shape(self):
        obj = json.loads(measure_to_json(dirac((1.0, 2.0))))
        assert obj == {"dim": 2, "atoms": [{"x": [1.0, 2.0], "w": 1.0}]}


class TestHelpers:
    def test_mean_and_arrays(self):
        m = validate_measure([((0.0, 0.0), 0.25), ((4.0, 8.0), 0.75)])
        np.testing.assert_allclose(m.mean(), [3.0, 6.0])
        assert m.support_array().shape == (2, 2)
        assert m.weights_array().sum() == pytest.approx(1.0)

    def test_dirac(self):
        m = dirac((2.5,))
        assert isinstance(m, DiscreteMeasure)
        assert m.atoms == (((2.5,), 1.0),)

    def test_measures_equal_tolerance(self):
        a = validate_measure([((0.0,), 0.5), ((1.0,), 0.5)])
        b = validate_measure([((1e-10,), 0.5), ((1.0,), 0.5)])
        assert measures_equal(a, b, tol=1e-8)
        assert not measures_equal(a, b, tol=1e-12)
