import numpy as np
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from subedge.alias import build_alias
from subedge.distributions import EdgeDistribution, pointwise_deviation, tvd, uniform_distribution
from subedge.exceptions import PreprocessingFailure
from subedge.graph import Graph
from subedge.harness import check_good_set, is_good_estimate
from subedge.oracle import QueryOracle
from subedge.sampler import (
    OK,
    exact_distribution,
    preprocess,
    sample_heavy_batch,
    sample_light_batch,
)

SLOW = settings(max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def graphs(draw, max_n=40):
    n = draw(st.integers(2, max_n))
    pairs = draw(st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), min_size=1, max_size=120))
    edges = {(min(u, v), max(u, v)) for u, v in pairs if u != v}
    assume(edges)
    return Graph(n, np.array(sorted(edges), dtype=np.int64))


@given(graphs())
def test_graph_invariants(g):
    assert g.check_symmetric()
    assert g.m == g.degrees.sum() and g.m % 2 == 0
    o = QueryOracle(g, 0)
    calls = 0
    for v in range(g.n):
        d = o.degree(v)
        got = [o.neighbor(v, i) for i in range(d)]
        calls += 1 + d
        assert sorted(got) == sorted(g.neighbors(v).tolist())
        assert v not in got and len(set(got)) == d
    assert o.total_queries == calls


@given(st.lists(st.integers(0, 10**6), min_size=1, max_size=200).filter(any))
def test_alias_exact_integer_weights(w):
    t = build_alias(w)
    w = np.array(w, dtype=np.float64)
    ref = w / w.sum()
    enc = t.encoded_probabilities()
    assert np.all(np.abs(enc - ref) <= 2**-40 * ref)


@given(st.lists(st.floats(0, 1e12, allow_nan=False, allow_subnormal=False), min_size=1, max_size=100).filter(
    lambda w: any(x > 0 for x in w)))
def test_alias_exact_float_weights(w):
    t = build_alias(w)
    w = np.array(w)
    ref = w / w.sum()
    assert np.all(np.abs(t.encoded_probabilities() - ref) <= 2**-40 * ref)
    assert np.all((t.prob >= 0) & (t.prob <= 1))


@given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=50))
def test_tvd_bounded_by_pointwise(weights):
    m = len(weights)
    p = np.array(weights) / sum(weights)
    edges = np.zeros((m, 2), dtype=np.int64)
    P = EdgeDistribution(edges, p)
    U = EdgeDistribution(edges, np.full(m, 1.0 / m))
    assert 0.0 <= tvd(P, U) <= pointwise_deviation(P, U) / 2 + 1e-12


@SLOW
@given(graphs(), st.sampled_from([0.1, 0.25, 0.4]), st.sampled_from([1.0, 2.0, 5.0]), st.integers(0, 2**31))
def test_state_and_sampler_invariants(g, eps, x, seed):
    try:
        state = preprocess(QueryOracle(g, seed), eps=eps, delta=0.2, x=x, seed=seed)
    except PreprocessingFailure:
        return
    state.validate()
    assert 0.25 <= state.gamma_bar <= 12
    assert 1.0 <= state.x_bar <= max(1.0, np.sqrt(g.n / state.d_avg_estimate))
    assert state.light_accept(min(state.tau, g.max_degree())) <= 1.0
    assert 0 < state.heavy_accept < 1

    ex = exact_distribution(g, state)
    assert abs(ex.mass.sum() - 1.0) < 1e-12

    o = QueryOracle(g, seed)
    rng = np.random.default_rng(seed)
    light = sample_light_batch(o, state, rng, 2000)
    heavy = sample_heavy_batch(o, state, rng, 2000)
    assert light.queries.max() <= 3 and heavy.queries.max() <= 3
    assert o.total_queries == light.queries.sum() + heavy.queries.sum()
    ok_l, ok_h = light.code == OK, heavy.code == OK
    assert np.all(g.degrees[light.source[ok_l]] <= state.tau)
    assert np.all(g.degrees[heavy.source[ok_h]] > state.tau)
    oe = g.oriented_edges()
    assert np.array_equal(oe[light.edge_id[ok_l]], np.column_stack([light.source, light.target])[ok_l])

    good = check_good_set(g, state.S, eps, state.tau).ok and is_good_estimate(state.d_avg_estimate, g.d_avg, eps)
    if good:
        assert ex.mass.max() / ex.mass.min() <= (1 + eps) / (1 - eps) + 1e-12
        assert pointwise_deviation(ex, uniform_distribution(g)) <= 2 * eps
