import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.cluster import DBSCAN as SkDBSCAN

from oracles import brute_force_dbscan, norm_distance, partition_of
from rrcguard.clustering import (
    NOISE,
    EmptyInput,
    FingerprintDBSCAN,
    dbscan,
    distance,
    partition,
)
from rrcguard.core import Fingerprint, default_params

P = default_params()

fingerprints = st.builds(Fingerprint, st.integers(28, 36),
                         st.floats(-70, -30, allow_nan=False).map(lambda x: round(x, 2)))


def test_distance_identity():
    a = Fingerprint(32, -41)
    assert distance(a, a, P) == 0


def test_distance_between_lab_positions():
    got = distance(Fingerprint(32, -41), Fingerprint(31, -52.6), P)
    # 11.6 dB over 4 dB is 2.9; one TA sample over 1
    assert got == pytest.approx(math.sqrt(1 + 2.9 ** 2))
    assert got == pytest.approx(3.0676, abs=1e-4)


@given(fingerprints, fingerprints)
def test_distance_symmetric_and_zero_iff_equal(a, b):
    assert distance(a, b, P) == distance(b, a, P)
    assert (distance(a, b, P) == 0) == (a == b)


def test_dense_cluster_with_scattered_noise():
    pts = [Fingerprint(32, -41)] * 10 + [Fingerprint(28, -41), Fingerprint(32, -60),
                                          Fingerprint(36, -70)]
    res = dbscan(pts, P, history_capacity=50)
    assert len(res.clusters) == 1
    c = res.clusters[0]
    assert c.size == 10 and c.density_pk == pytest.approx(0.2)
    assert c.centroid.as_tuple() == (32.0, -41.0)
    assert res.noise_count == 3


def test_below_min_pts_no_cluster():
    res = dbscan([Fingerprint(32, -41), Fingerprint(32, -41)], P, history_capacity=10)
    assert res.clusters == () and res.labels == (NOISE, NOISE)


def test_empty_input_raises():
    with pytest.raises(EmptyInput):
        dbscan([], P, history_capacity=10)


def test_capacity_smaller_than_points_raises():
    with pytest.raises(ValueError):
        dbscan([Fingerprint(32, -41)] * 5, P, history_capacity=4)


def test_border_point_goes_to_first_cluster_in_input_order():
    # two cores groups 2 normalized units apart along RSSI, a border point in the middle
    left = [Fingerprint(30, -50)] * 3
    right = [Fingerprint(30, -42)] * 3
    border = Fingerprint(30, -46)
    res = dbscan(right + left + [border], P, history_capacity=10)
    assert res.labels[-1] == res.labels[0]
    res = dbscan(left + right + [border], P, history_capacity=10)
    assert res.labels[-1] == res.labels[0]


point_sets = st.lists(st.tuples(st.integers(29, 34), st.floats(-60, -40).map(lambda x: round(x, 1))),
                      min_size=1, max_size=50)


@settings(max_examples=150, deadline=None)
@given(point_sets, st.integers(2, 5))
def test_matches_brute_force_reference(points, min_pts):
    params = P.replace(min_pts=min_pts)
    res = dbscan([Fingerprint(*p) for p in points], params, history_capacity=50)
    ref = brute_force_dbscan(points, params.eps_ta, params.eps_rssi, 1.0, min_pts)
    assert partition(res.labels) == partition_of(ref)


@settings(max_examples=100, deadline=None)
@given(point_sets, st.randoms(use_true_random=False))
def test_permutation_invariant_without_border_ties(points, rnd):
    res = dbscan([Fingerprint(*p) for p in points], P, history_capacity=50)
    order = list(range(len(points)))
    rnd.shuffle(order)
    shuffled = dbscan([Fingerprint(*points[i]) for i in order], P, history_capacity=50)
    # map shuffled labels back to original indices
    back = [None] * len(points)
    for pos, i in enumerate(order):
        back[i] = shuffled.labels[pos]
    X = np.array(points, float)
    contested = _contested_borders(X, res.labels)
    keep = [i for i in range(len(points)) if i not in contested]
    assert partition([res.labels[i] for i in keep]) == partition([back[i] for i in keep])


def _contested_borders(X, labels):
    """Non-core points adjacent to cores of more than one cluster."""
    n = len(X)
    nbrs = [[j for j in range(n) if norm_distance(X[i], X[j], 1, 4) <= 1.0] for i in range(n)]
    core = [len(nb) >= P.min_pts for nb in nbrs]
    out = set()
    for i in range(n):
        if not core[i]:
            owners = {labels[j] for j in nbrs[i] if core[j]}
            if len(owners) > 1:
                out.add(i)
    return out


@settings(max_examples=100, deadline=None)
@given(point_sets)
def test_invariants_on_output(points):
    fps = [Fingerprint(*p) for p in points]
    res = dbscan(fps, P, history_capacity=50)
    assert sum(c.size for c in res.clusters) + res.noise_count == len(points)
    assert all(c.size >= P.min_pts for c in res.clusters)
    assert sum(c.density_pk for c in res.clusters) <= 1 + 1e-12
    for c in res.clusters:
        mean = np.mean([fps[i].as_tuple() for i in c.indices], axis=0)
        assert c.centroid.as_tuple() == pytest.approx(tuple(mean))
        # every member is core or within radius of a core member
        for i in c.indices:
            near = [j for j in c.indices if distance(fps[i], fps[j], P) <= 1.0]
            assert any(sum(distance(fps[j], f, P) <= 1.0 for f in fps) >= P.min_pts
                       for j in near)


@settings(max_examples=100, deadline=None)
@given(point_sets, st.data())
def test_duplicating_a_core_point_never_shrinks_clusters(points, data):
    fps = [Fingerprint(*p) for p in points]
    res = dbscan(fps, P, history_capacity=60)
    cores = [i for i in range(len(fps))
             if sum(distance(fps[i], f, P) <= 1.0 for f in fps) >= P.min_pts]
    if not cores:
        return
    i = data.draw(st.sampled_from(cores))
    res2 = dbscan(fps + [fps[i]], P, history_capacity=60)
    for c in res.clusters:
        # the cluster's members stay together in a cluster at least as large
        label = res2.labels[c.indices[0]]
        assert label != NOISE
        assert sum(1 for lab in res2.labels if lab == label) >= c.size


@settings(max_examples=60, deadline=None)
@given(point_sets)
def test_core_components_agree_with_sklearn(points):
    X = np.array(points, float)
    scaled = X / np.array([P.eps_ta, P.eps_rssi])
    sk = SkDBSCAN(eps=1.0 + 1e-9, min_samples=P.min_pts).fit(scaled)
    ours = FingerprintDBSCAN.from_params(P.replace(history_size_m=50)).fit(X)
    core = sk.core_sample_indices_
    assert partition(ours.labels_[core]) == partition(sk.labels_[core])


def test_estimator_attributes():
    X = [[32, -41]] * 4 + [[31, -55]]
    est = FingerprintDBSCAN(history_capacity=10).fit(X)
    assert list(est.labels_) == [0, 0, 0, 0, NOISE]
    assert est.cluster_centers_.shape == (1, 2)
    assert est.densities_ == pytest.approx([0.4])
    assert list(FingerprintDBSCAN().fit_predict(X)) == [0, 0, 0, 0, NOISE]
    assert est.get_params()["min_pts"] == 3
