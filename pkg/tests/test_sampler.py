import math

import numpy as np
import pytest
from sklearn.base import clone

from subedge.degree import DegreeEstimate
from subedge.distributions import pointwise_deviation, uniform_distribution
from subedge.exceptions import IterationCapExceeded, PreprocessingFailure, StateMismatchError
from subedge.graph import circulant, lollipop, star
from subedge.harness import check_good_set, heavy_edge_probabilities, measure_branch
from subedge.oracle import QueryOracle
from subedge.sampler import (
    Fail,
    OrientedEdge,
    SamplerConfig,
    SamplerState,
    UniformEdgeSampler,
    exact_distribution,
    iteration_cap,
    multiset_neighbor_counts,
    multiset_size,
    preprocess,
    repetitions,
    sample_edge,
    sample_edges,
    sample_edges_vectorized,
    sample_heavy,
    sample_light,
)


@pytest.fixture(scope="module")
def regular_state():
    g = circulant(100, 2)
    return g, preprocess(QueryOracle(g, 0), eps=0.4, delta=0.1, x=1, seed=0)


@pytest.fixture(scope="module")
def star_state():
    g = star(11)
    return g, preprocess(QueryOracle(g, 1), eps=0.25, delta=0.1, x=1, seed=1)


def test_regular_graph_state_arithmetic(regular_state):
    _, st = regular_state
    assert st.x_bar == 1.0
    assert st.tau == pytest.approx(10.0)
    assert st.gamma_bar == 1.0
    assert st.sets_drawn == 1
    assert st.light_edge_probability() == pytest.approx(1 / 4000)
    assert 1 / (st.n * st.tau * 4 * st.gamma_bar) == pytest.approx(1 / 4000)


def test_repetitions():
    assert repetitions(1 / 3) == 2
    assert repetitions(0.1) == 4
    assert repetitions(0.9) == 2  # 3/delta > 3, so t >= 2 always
    assert repetitions(1 / 9) == 3


def test_multiset_size_formula():
    s = multiset_size(100, 10.0, 0.4, 0.1, 4)
    assert s == math.ceil(10 * 35 * math.log(6 * 100 * 4 / 0.1) / 0.16)


def test_config_validation():
    for bad in [dict(eps=0.5), dict(eps=0), dict(delta=1.0), dict(x=0.5), dict(estimator="nope")]:
        with pytest.raises(ValueError):
            SamplerConfig(**bad)


def test_state_invariants(star_state):
    g, st = star_state
    st.validate()
    assert st.tau == pytest.approx(st.x_bar * st.d_avg_estimate / st.eps)
    assert st.gamma_bar == pytest.approx(st.m_S / (st.d_avg_estimate * st.s))
    assert 0.25 <= st.gamma_bar <= 12
    assert st.x_bar == min(1.0, math.sqrt(g.n / st.d_avg_estimate))
    assert len(st.S) == st.s == len(st.S_degrees)
    assert np.array_equal(g.degrees[st.S], st.S_degrees)


def test_preprocess_counter_arithmetic():
    g = lollipop(16, 100)
    o = QueryOracle(g, 3)
    st = preprocess(o, eps=0.25, delta=0.1, x=2, seed=3)
    c = o.counts
    assert c.degree == g.n + st.sets_drawn * st.s
    assert c.uniform_vertex == st.sets_drawn * st.s
    assert c.neighbor == 0
    assert st.query_counts["multisets"]["degree"] == st.sets_drawn * st.s


def _inflated_estimator(factor):
    def est(oracle, rng):
        d = oracle.degrees(np.arange(oracle.n)).sum() / oracle.n
        return DegreeEstimate(d * factor, oracle.n, "custom")
    return est


def test_preprocess_failure_reported():
    g = circulant(100, 2)
    with pytest.raises(PreprocessingFailure, match="no S_i accepted") as info:
        preprocess(QueryOracle(g, 0), eps=0.25, delta=1 / 3, x=1, estimator=_inflated_estimator(100.0))
    assert info.value.sets_drawn == 2
    assert all(r < 0.25 for r in info.value.ratios)


def test_lazy_multisets_drawn_until_accepted():
    g = circulant(100, 2)
    o = QueryOracle(g, 0)
    with pytest.raises(PreprocessingFailure):
        preprocess(o, eps=0.25, delta=0.1, x=1, estimator=_inflated_estimator(100.0))
    t = repetitions(0.1)
    s = multiset_size(100, 1.0 * 400.0 / 0.25, 0.25, 0.1, t)
    assert o.counts.uniform_vertex == t * s


def test_lollipop_good_set_rate():
    g = lollipop(32, 200)
    good = 0
    for seed in range(100):
        st = preprocess(QueryOracle(g, seed), eps=0.25, delta=0.1, x=2, seed=seed)
        good += check_good_set(g, st.S, st.eps, st.tau, st.d_avg_estimate).ok
    assert good >= 90


def test_sample_light_threshold_and_budget(star_state):
    g, st = star_state
    assert st.tau < 10
    o = QueryOracle(g, 5)
    rng = np.random.default_rng(5)
    seen_wrong = False
    for _ in range(20_000):
        before = o.total_queries
        out = sample_light(o, st, rng)
        assert o.total_queries - before <= 3
        if isinstance(out, OrientedEdge):
            assert out.source != 0
            assert g.degree(out.source) <= st.tau
            assert out.target in g.neighbors(out.source)
        else:
            assert out in (Fail.LIGHT_REJECT, Fail.WRONG_SIDE)
            seen_wrong |= out is Fail.WRONG_SIDE
    assert seen_wrong


def test_sample_heavy_threshold_and_budget(star_state):
    g, st = star_state
    o = QueryOracle(g, 6)
    rng = np.random.default_rng(6)
    got = 0
    for _ in range(20_000):
        before = o.total_queries
        out = sample_heavy(o, st, rng)
        assert o.total_queries - before <= 3
        assert o.counts.uniform_vertex == 0
        if isinstance(out, OrientedEdge):
            got += 1
            assert out.source == 0 and g.degree(0) > st.tau
        else:
            assert out in (Fail.HEAVY_REJECT, Fail.WRONG_SIDE)
    assert got > 0


def test_heavy_step_two_reaches_center_with_mass_share(star_state):
    # only the center is heavy, so wrong-side means step 2 missed it
    g, st = star_state
    d_S = multiset_neighbor_counts(g, st.S)
    p_center = d_S[0] / st.m_S
    calls = 200_000
    o = QueryOracle(g, 7)
    from subedge.sampler import WRONG_SIDE, sample_heavy_batch
    res = sample_heavy_batch(o, st, np.random.default_rng(7), calls)
    reached = np.mean(res.code != WRONG_SIDE)
    assert abs(reached - p_center) <= 4 * math.sqrt(p_center * (1 - p_center) / calls)


def test_star_heavy_edges_equal_probability(star_state):
    g, st = star_state
    p = heavy_edge_probabilities(g, st)
    d_S = multiset_neighbor_counts(g, st.S)
    expected = d_S[0] / st.m_S * (1 / 10) * st.eps / (4 * st.x_bar)
    center_edges = [g.edge_id(0, leaf) for leaf in range(1, 11)]
    assert np.allclose(p[center_edges], expected, rtol=1e-12)
    assert np.count_nonzero(p) == 10


def test_acceptance_probabilities_valid(star_state, regular_state):
    for g, st in (star_state, regular_state):
        assert st.light_accept(st.tau) <= 1.0
        assert 0 < st.heavy_accept < 1


def test_exact_distribution_regular_uniform(regular_state):
    g, st = regular_state
    d = exact_distribution(g, st)
    assert np.allclose(d.mass, 1 / g.m, rtol=1e-12)
    assert abs(d.mass.sum() - 1) < 1e-12


def test_exact_distribution_star_symmetry(star_state):
    g, st = star_state
    d = exact_distribution(g, st)
    out_edges = [g.edge_id(0, v) for v in range(1, 11)]
    in_edges = [g.edge_id(v, 0) for v in range(1, 11)]
    assert np.allclose(d.mass[out_edges], d.mass[out_edges[0]], rtol=1e-12)
    assert np.allclose(d.mass[in_edges], d.mass[in_edges[0]], rtol=1e-12)
    assert abs(d.mass.sum() - 1) < 1e-12


def test_exact_distribution_does_not_query(star_state):
    g, st = star_state
    o = QueryOracle(g, 0)
    exact_distribution(g, st)
    check_good_set(g, st.S, st.eps, st.tau)
    assert o.total_queries == 0


def test_exact_distribution_pairwise_ratio_on_good_state():
    g = lollipop(16, 100)
    st = preprocess(QueryOracle(g, 4), eps=0.25, delta=0.1, x=2, seed=4)
    assert check_good_set(g, st.S, st.eps, st.tau).ok
    d = exact_distribution(g, st)
    assert d.mass.max() / d.mass.min() <= (1 + st.eps) / (1 - st.eps)
    assert pointwise_deviation(d, uniform_distribution(g)) <= 2 * st.eps


def test_sample_edge_regular_graph_uniform(regular_state):
    g, st = regular_state
    o = QueryOracle(g, 8)
    ids = sample_edges_vectorized(o, st, np.random.default_rng(8), 1_000_000).edge_ids
    counts = np.bincount(ids, minlength=g.m)
    p = 1 / g.m
    z = (counts - 1_000_000 * p) / math.sqrt(1_000_000 * p * (1 - p))
    assert np.abs(z).max() < 5


def test_sample_edges_scalar_iterations_and_cap(regular_state):
    g, st = regular_state
    o = QueryOracle(g, 9)
    edges, iterations = sample_edges(o, st, np.random.default_rng(9), 200)
    assert edges.shape == (200, 2)
    assert iterations >= 200
    assert o.total_queries <= 3 * iterations
    assert iteration_cap(st) == math.ceil(192 * st.x_bar / st.eps * 64)


def test_iteration_cap_trips():
    g = lollipop(16, 100)
    st = preprocess(QueryOracle(g, 1), eps=0.25, delta=0.1, x=2, seed=1)
    o = QueryOracle(g, 1)
    rng = np.random.default_rng(0)
    with pytest.raises(IterationCapExceeded):
        for _ in range(1000):
            sample_edge(o, st, rng, max_iterations=1)


def test_light_measurement_matches_formula(regular_state):
    g, st = regular_state
    m = measure_branch(QueryOracle(g, 10), st, np.random.default_rng(10), 2_000_000, "light")
    assert m.max_queries <= 3
    assert m.queries == m.metered_queries
    p = st.light_edge_probability() * g.m
    rate = m.counts.sum() / m.calls
    assert abs(rate - p) <= 4 * math.sqrt(p * (1 - p) / m.calls)


def test_state_json_round_trip(tmp_path, star_state):
    g, st = star_state
    path = tmp_path / "state.json"
    st.save(str(path))
    back = SamplerState.load(str(path))
    assert back.gamma_bar == st.gamma_bar and back.tau == st.tau
    assert np.array_equal(back.S, st.S)
    assert np.array_equal(back.alias.prob, st.alias.prob)
    back.check_graph(g)


def test_state_mismatch_detected(star_state):
    _, st = star_state
    with pytest.raises(StateMismatchError):
        st.check_graph(star(12))


def test_state_rejects_tampering(star_state):
    _, st = star_state
    doc = st.to_dict()
    doc["gamma_bar"] = 50.0
    with pytest.raises(ValueError):
        SamplerState.from_dict(doc)
    doc = st.to_dict()
    doc["version"] = 99
    with pytest.raises(ValueError):
        SamplerState.from_dict(doc)


def test_estimator_api():
    est = UniformEdgeSampler(eps=0.25, x=2, random_state=0)
    assert est.get_params()["x"] == 2
    assert clone(est).get_params() == est.get_params()
    g = lollipop(16, 100)
    est.fit(g)
    edges = est.sample(50)
    assert edges.shape == (50, 2)
    assert all(v in g.neighbors(u) for u, v in edges)
    assert est.preprocess_counts_.total > 0
    fast = est.sample(1000, vectorized=True)
    assert all(v in g.neighbors(u) for u, v in fast[:50])
    assert isinstance(est.sample_edge(), OrientedEdge)


def test_estimator_api_reproducible():
    g = lollipop(16, 100)
    a = UniformEdgeSampler(random_state=3).fit(g).sample(20)
    b = UniformEdgeSampler(random_state=3).fit(g).sample(20)
    assert np.array_equal(a, b)


def test_estimator_retries():
    g = circulant(100, 2)
    est = UniformEdgeSampler(delta=0.5, estimator=_inflated_estimator(100.0), max_retries=2, random_state=0)
    with pytest.raises(PreprocessingFailure):
        est.fit(g)


def test_sample_before_fit_raises():
    from sklearn.exceptions import NotFittedError
    with pytest.raises(NotFittedError):
        UniformEdgeSampler().sample(1)


def test_vectorized_iteration_accounting():
    g = lollipop(16, 100)
    st = preprocess(QueryOracle(g, 2), eps=0.25, delta=0.1, x=2, seed=2)
    o = QueryOracle(g, 2)
    draw = sample_edges_vectorized(o, st, np.random.default_rng(2), 5000)
    assert len(draw.edge_ids) == 5000
    assert 5000 <= draw.iterations_used <= draw.iterations
    assert o.total_queries <= 3 * draw.iterations
    # mean iterations near 1 / success probability
    p = exact_distribution(g, st).success_probability
    assert abs(draw.iterations_used / 5000 - 1 / p) < 0.1 / p
