"""Classical-dynamics tests: exact counts, pressure, rate function,
variance, entropy, and deviation sampling.

Expected numbers were produced by independent closed forms (eigenvalue
formulas, Fourier orthogonality, Legendre brute force on a dense grid)
before the implementations were frozen.
"""

import math

import numpy as np
import pytest

from anosov_lab.classical import (
    TrigPolynomial,
    dynamical_variance,
    empirical_deviation,
    empirical_deviation_report,
    ks_entropy_estimate,
    ks_entropy_report,
    lebesgue_sampler,
    make_map,
    orbit_sampler,
    parse_observable_text,
    periodic_points,
    point_sampler,
    pressure_curve,
    rate_function,
    read_observable,
    topological_pressure,
    topological_pressure_report,
    write_observable,
    _smith_normal_form_2x2,
)

CAT = make_map([[2, 1], [1, 1]])
LOG_LAM = math.log((3.0 + math.sqrt(5.0)) / 2.0)


def standard_observable():
    return TrigPolynomial.position_cosine(1, 2.0)  # 2 cos(2 pi x)


# ---------------------------------------------------------------------------
# maps and observables


def test_make_map_cat():
    assert CAT.lam == pytest.approx((3.0 + math.sqrt(5.0)) / 2.0, abs=1e-15)
    assert CAT.log_lambda == pytest.approx(LOG_LAM, abs=1e-15)
    assert CAT.phi_u == -CAT.log_lambda


def test_make_map_negative_determinant():
    m = make_map([[2, 1], [1, 1]])
    flipped = make_map([[0, 1], [1, 3]])  # det -1, trace 3
    assert flipped.lam > 1.0
    assert m.lam > 1.0


@pytest.mark.parametrize("bad", [
    [[2, 0], [0, 2]],        # det 4
    [[1, 1], [0, 1]],        # parabolic
    [[0, -1], [1, 0]],       # elliptic
    [[1, 0], [0, 1]],        # identity
])
def test_make_map_rejects(bad):
    with pytest.raises(ValueError):
        make_map(bad)


def test_make_map_rejects_non_integer():
    with pytest.raises(ValueError):
        make_map([[2.5, 1], [1, 1]])


def test_map_apply_matches_matrix():
    rng = np.random.default_rng(5)
    pts = rng.random((64, 2))
    out = CAT.apply(pts)
    ref = (pts @ np.array([[2, 1], [1, 1]]).T) % 1.0
    assert np.allclose(out, ref, atol=1e-15)


def test_trig_polynomial_real_and_mean():
    a = standard_observable()
    assert a.is_real
    assert a.mean == 0
    assert a.degree == 1
    assert a.is_position_only
    assert a.coefficient_sum == pytest.approx(2.0)


def test_trig_polynomial_evaluate():
    a = standard_observable()
    x = np.array([[0.0, 0.0], [0.0, 0.25], [0.0, 0.5]])
    assert np.allclose(a.evaluate(x), [2.0, 0.0, -2.0], atol=1e-14)


def test_trig_polynomial_compose_matches_pullback():
    rng = np.random.default_rng(11)
    coeffs = {}
    for _ in range(6):
        k = (int(rng.integers(-3, 4)), int(rng.integers(-3, 4)))
        c = complex(rng.normal(), rng.normal())
        coeffs[k] = coeffs.get(k, 0) + c
        coeffs[(-k[0], -k[1])] = coeffs.get((-k[0], -k[1]), 0) + c.conjugate()
    a = TrigPolynomial(coeffs)
    pts = rng.random((50, 2))
    for steps in (1, 2, -1):
        pulled = a.compose_with(CAT, steps)
        direct = a.evaluate(CAT.apply(pts, steps))
        assert np.allclose(pulled.evaluate(pts), direct, atol=1e-10)


def test_trig_polynomial_rational_evaluation():
    a = standard_observable() + TrigPolynomial.cosine((1, -2), 0.7)
    nums = np.array([[1, 2], [3, 4], [699, 700]], dtype=np.int64)
    den = 701
    exact = a.evaluate(nums / den)
    assert np.allclose(a.evaluate_rational(nums, den), exact, atol=1e-12)


def test_trig_polynomial_arithmetic():
    a = standard_observable()
    b = a + 1.5
    assert b.mean == pytest.approx(1.5)
    assert (b - a).degree == 0
    assert (2.0 * a).coefficient_sum == pytest.approx(4.0)
    assert (-a + a).coefficient_sum == 0.0


def test_trig_polynomial_rejects_non_finite():
    with pytest.raises(ValueError):
        TrigPolynomial({(0, 1): float("nan")})


def test_observable_text_roundtrip(tmp_path):
    a = TrigPolynomial({(0, 1): 1.0 + 0.5j, (0, -1): 1.0 - 0.5j, (2, 3): 0.25})
    path = tmp_path / "obs.txt"
    write_observable(a, str(path))
    back = read_observable(str(path))
    assert back.coefficients == a.coefficients


def test_observable_text_errors():
    with pytest.raises(ValueError, match="line 2"):
        parse_observable_text("0 1 1.0 0.0\n0 1 oops 0.0\n")
    with pytest.raises(ValueError, match="line 1"):
        parse_observable_text("0 1 1.0\n")
    a = parse_observable_text("# comment\n0 1 0.5 0.0  # inline\n0 -1 0.5 0.0\n")
    assert a.is_real


# ---------------------------------------------------------------------------
# periodic points


@pytest.mark.parametrize("n,count", [(1, 1), (2, 5), (3, 16), (4, 45), (6, 320)])
def test_periodic_point_counts(n, count):
    pts = periodic_points(CAT, n)
    assert len(pts) == count
    # closed form lam^n + lam^-n - 2 for unit-determinant hyperbolic maps
    lam = CAT.lam
    assert count == pytest.approx(lam ** n + lam ** (-n) - 2.0, abs=1e-6)


def test_periodic_points_are_fixed_and_distinct():
    pts = periodic_points(CAT, 6)
    an = np.array(CAT.matrix_power(6), dtype=np.int64)
    image = (pts.numerators @ an.T) % pts.denominator
    assert np.array_equal(image, pts.numerators)
    keys = pts.numerators[:, 0] * pts.denominator + pts.numerators[:, 1]
    assert len(np.unique(keys)) == len(pts)


def test_periodic_points_shift_invariance():
    # A permutes Fix(A^n)
    pts = periodic_points(CAT, 4)
    a = np.array(CAT.matrix, dtype=np.int64)
    image = (pts.numerators @ a.T) % pts.denominator
    orig = set(map(tuple, pts.numerators.tolist()))
    assert set(map(tuple, image.tolist())) == orig


def test_periodic_points_period_cap():
    with pytest.raises(ValueError):
        periodic_points(CAT, 15)
    with pytest.raises(ValueError):
        periodic_points(CAT, 0)


def test_smith_normal_form_random():
    rng = np.random.default_rng(3)
    for _ in range(50):
        m = rng.integers(-9, 10, size=(2, 2))
        u, (d1, d2), v = _smith_normal_form_2x2(m.tolist())
        u = np.array(u)
        v = np.array(v)
        prod = u @ m @ v
        assert np.array_equal(prod, np.diag([d1, d2]))
        assert abs(round(np.linalg.det(u))) == 1
        assert abs(round(np.linalg.det(v))) == 1
        assert d1 >= 0 and d2 >= 0


# ---------------------------------------------------------------------------
# pressure


def test_pressure_zero_potential_closed_form():
    # sum over Fix(A^n) of 1 equals lam^n + lam^-n - 2 exactly, so
    # P_n(0) = log lam + (2/n) log(1 - lam^-n)
    zero = TrigPolynomial.zero()
    for n in (4, 8, 12):
        exact = LOG_LAM + (2.0 / n) * math.log(1.0 - CAT.lam ** (-n))
        assert topological_pressure(CAT, zero, n) == pytest.approx(exact, abs=1e-12)


def test_pressure_unstable_jacobian_vanishes():
    phiu = TrigPolynomial.constant(CAT.phi_u)
    p12 = topological_pressure(CAT, phiu, 12)
    assert p12 == pytest.approx(-1.6074870319293666e-06, abs=1e-12)
    assert abs(p12) < 2e-6


def test_pressure_constant_shift():
    a = standard_observable()
    rng = np.random.default_rng(8)
    for c in rng.normal(size=3):
        base = topological_pressure(CAT, a, 6)
        shifted = topological_pressure(CAT, a + float(c), 6)
        assert shifted == pytest.approx(base + c, abs=1e-12)


def test_pressure_monotone_in_potential():
    a = standard_observable()
    lower = topological_pressure(CAT, a, 6)
    upper = topological_pressure(CAT, a + 0.3, 6)
    assert lower <= upper


def test_pressure_invariant_under_composition():
    # Birkhoff sums over Fix(A^n) are permuted by the map
    a = standard_observable() + TrigPolynomial.cosine((1, 1), 0.4)
    p_direct = topological_pressure(CAT, a, 6)
    p_pulled = topological_pressure(CAT, a.compose_with(CAT), 6)
    assert p_pulled == pytest.approx(p_direct, abs=1e-12)


def test_pressure_report_gap():
    rep = topological_pressure_report(CAT, TrigPolynomial.zero(), 12)
    assert rep.convergence_gap == pytest.approx(2.9835913583076135e-06, abs=1e-12)
    assert rep.orbit_order == 12


def test_pressure_rejects_complex_potential():
    with pytest.raises(ValueError):
        topological_pressure(CAT, TrigPolynomial({(0, 1): 1.0}), 4)


# ---------------------------------------------------------------------------
# pressure curve and rate function


def make_curve(n=12):
    return pressure_curve(CAT, standard_observable(), np.linspace(-4, 4, 41), n)


def test_pressure_curve_basics():
    curve = make_curve()
    assert curve.values.shape == (41,)
    # s = 0 recovers the phi_u pressure estimate
    assert curve.evaluate(0.0) == pytest.approx(-1.6074870319293666e-06, abs=1e-12)
    # derivative at zero vanishes to machine precision: the Birkhoff sums
    # of a mean-zero trig polynomial over Fix(A^n) cancel exactly because
    # the fixed points form a subgroup on which nontrivial characters sum
    # to zero
    assert abs(curve.derivative_at_zero) < 1e-13
    # convex along the sampled grid
    assert np.diff(curve.values, 2).min() >= -1e-12
    lo, hi = curve.slope_range
    assert lo < 0 < hi
    assert hi == pytest.approx(2.0, abs=1e-12)  # fixed point at the maximum of a


def test_pressure_curve_rejects_bad_observables():
    grid = np.linspace(-1, 1, 5)
    with pytest.raises(ValueError, match="mean-zero"):
        pressure_curve(CAT, standard_observable() + 0.5, grid, 6)
    with pytest.raises(ValueError):
        pressure_curve(CAT, TrigPolynomial({(0, 1): 1.0}), grid, 6)


def test_rate_function_values():
    curve = make_curve()
    deltas = np.linspace(-1.0, 1.0, 41)
    h = rate_function(curve, deltas)
    at = {round(d, 2): v for d, v in zip(deltas, h.values)}
    assert abs(at[0.0]) < 1e-9
    # frozen from a dense-grid Legendre brute force (agreement ~1e-8)
    assert at[0.1] == pytest.approx(-0.002501452100801266, abs=1e-6)
    assert at[0.2] == pytest.approx(-0.010021230437533692, abs=1e-6)
    assert at[-0.2] == pytest.approx(-0.010028044604502573, abs=1e-6)
    assert at[0.3] == pytest.approx(-0.02259588491819458, abs=1e-6)
    finite = np.isfinite(h.values)
    assert (h.values[finite] <= 1e-12).all()
    # -H is convex: second differences of H are <= 0
    assert np.diff(h.values[finite], 2).max() <= 1e-9


def test_rate_function_maximum_at_zero():
    curve = make_curve()
    h = rate_function(curve, np.linspace(-0.5, 0.5, 21))
    assert int(np.argmax(h.values)) == 10


def test_rate_function_sentinel_outside_slope_range():
    curve = make_curve(n=6)
    sup = standard_observable().coefficient_sum
    h = rate_function(curve, np.array([sup + 1.0, -sup - 1.0, 0.0]))
    assert h.values[0] == -math.inf and not h.attained[0]
    assert h.values[1] == -math.inf and not h.attained[1]
    assert math.isfinite(h.values[2]) and h.attained[2]
    assert math.isnan(h.minimizer_s[0])


def test_rate_function_call_lookup():
    curve = make_curve(n=6)
    h = rate_function(curve, np.array([0.0, 0.25]))
    assert h(0.25) == h.values[1]
    with pytest.raises(KeyError):
        h(0.3)


def test_rate_function_matches_dense_grid():
    curve = make_curve(n=8)
    deltas = np.array([0.1, 0.3])
    h = rate_function(curve, deltas)
    dense_s = np.linspace(-40.0, 40.0, 80001)
    centered = curve.evaluate(dense_s) - curve.evaluate(0.0)
    for i, d in enumerate(deltas):
        objective = centered - dense_s * d
        j = int(np.argmin(objective))
        assert h.values[i] == pytest.approx(objective[j], abs=1e-6)
        assert h.minimizer_s[i] == pytest.approx(dense_s[j], abs=1e-3)


# ---------------------------------------------------------------------------
# dynamical variance


def test_variance_single_cosine():
    # frequencies escape the support after one step: sigma^2 = C(0) = 2
    assert dynamical_variance(CAT, standard_observable(), 30) == pytest.approx(
        2.0, abs=1e-14)


def test_variance_two_cosines():
    a = (TrigPolynomial.position_cosine(1, 2.0)
         + TrigPolynomial.position_cosine(2, 2.0))
    assert dynamical_variance(CAT, a, 30) == pytest.approx(4.0, abs=1e-14)


def test_variance_coboundary_vanishes():
    h = TrigPolynomial.position_cosine(1, 2.0)
    cob = h.compose_with(CAT) - h
    assert abs(dynamical_variance(CAT, cob, 2)) <= 1e-10
    assert abs(dynamical_variance(CAT, cob, 30)) <= 1e-10


def test_variance_random_coboundary():
    rng = np.random.default_rng(21)
    coeffs = {}
    for _ in range(4):
        k = (int(rng.integers(-2, 3)), int(rng.integers(-2, 3)))
        if k == (0, 0):
            continue
        c = complex(rng.normal(), rng.normal())
        coeffs[k] = coeffs.get(k, 0) + c
        coeffs[(-k[0], -k[1])] = coeffs.get((-k[0], -k[1]), 0) + c.conjugate()
    h = TrigPolynomial(coeffs)
    cob = h.compose_with(CAT) - h
    assert abs(dynamical_variance(CAT, cob, 12)) <= 1e-10


def test_variance_nonnegative_random():
    rng = np.random.default_rng(22)
    for _ in range(5):
        coeffs = {}
        for _ in range(3):
            k = (int(rng.integers(-2, 3)), int(rng.integers(-2, 3)))
            if k == (0, 0):
                continue
            c = complex(rng.normal(), rng.normal())
            coeffs[k] = coeffs.get(k, 0) + c
            coeffs[(-k[0], -k[1])] = coeffs.get((-k[0], -k[1]), 0) + c.conjugate()
        a = TrigPolynomial(coeffs)
        assert dynamical_variance(CAT, a, 20) >= -1e-10


def test_variance_rejects_nonzero_mean():
    with pytest.raises(ValueError):
        dynamical_variance(CAT, TrigPolynomial.constant(1.0), 5)


# ---------------------------------------------------------------------------
# KS entropy


def test_ks_entropy_lebesgue():
    rep = ks_entropy_report(CAT, lebesgue_sampler(), k=8, n=8,
                            samples=10 ** 6, seed=7)
    assert rep.value == pytest.approx(LOG_LAM, rel=0.15)
    assert rep.value == pytest.approx(0.983770, abs=1e-4)
    # levels grow and the plug-in rate overshoots the conditional estimate
    assert (np.diff(rep.levels) > 0).all()
    assert rep.plugin_rate > rep.value
    assert rep.subadditivity_gap >= -1e-12
    assert rep.samples == 10 ** 6


def test_ks_entropy_deterministic():
    args = dict(k=6, n=6, samples=10 ** 5, seed=13)
    a = ks_entropy_report(CAT, lebesgue_sampler(), **args)
    b = ks_entropy_report(CAT, lebesgue_sampler(), **args)
    assert a.value == b.value
    assert np.array_equal(a.levels, b.levels)


def test_ks_entropy_point_mass_is_zero():
    value = ks_entropy_estimate(CAT, point_sampler((0.0, 0.0)), k=8, n=10,
                                samples=10 ** 4, seed=1)
    assert abs(value) <= 1e-12


def test_ks_entropy_periodic_orbit_is_small():
    orbit = periodic_points(CAT, 2).to_floats()
    rep = ks_entropy_report(CAT, orbit_sampler(orbit), k=8, n=10,
                            samples=10 ** 5, seed=1)
    # finitely many words: the level entropies plateau, the rate vanishes
    assert abs(rep.value) <= 0.02
    assert rep.distinct_words <= 5 * 10


def test_ks_entropy_rejects_bad_args():
    with pytest.raises(ValueError):
        ks_entropy_report(CAT, lebesgue_sampler(), k=8, n=0)
    with pytest.raises(ValueError):
        ks_entropy_report(CAT, lebesgue_sampler(), k=1, n=4)
    with pytest.raises(ValueError):
        ks_entropy_report(CAT, lebesgue_sampler(), k=8, n=12)  # > 63 bits


# ---------------------------------------------------------------------------
# empirical deviation


def test_deviation_deterministic_and_frozen():
    rep = empirical_deviation_report(CAT, standard_observable(), 0.5, 8,
                                     10 ** 6, seed=3)
    assert rep.value == 0.164815
    assert rep.hits == 164815
    again = empirical_deviation(CAT, standard_observable(), 0.5, 8,
                                10 ** 6, seed=3)
    assert again == rep.value


def test_deviation_trivial_levels():
    a = standard_observable()
    sup = a.coefficient_sum
    low = empirical_deviation(CAT, a, -sup - 1.0, 4, 10 ** 4, 0)
    assert low == 1.0  # the strict > branch with delta below -sup
    rep = empirical_deviation_report(CAT, a, sup + 1.0, 4, 10 ** 4, 0)
    assert rep.value == 0.0
    assert rep.flagged_zero_hits


def test_deviation_monotone_in_level():
    a = standard_observable()
    p1 = empirical_deviation(CAT, a, 0.2, 6, 10 ** 5, 9)
    p2 = empirical_deviation(CAT, a, 0.4, 6, 10 ** 5, 9)
    p3 = empirical_deviation(CAT, a, 0.8, 6, 10 ** 5, 9)
    assert p1 >= p2 >= p3


def test_deviation_shrinks_with_horizon():
    a = standard_observable()
    p4 = empirical_deviation(CAT, a, 0.5, 4, 10 ** 5, 17)
    p12 = empirical_deviation(CAT, a, 0.5, 12, 10 ** 5, 17)
    assert p12 < p4


def test_deviation_rejects_nonzero_mean():
    with pytest.raises(ValueError):
        empirical_deviation(CAT, TrigPolynomial.constant(0.5), 0.1, 4, 100, 0)
