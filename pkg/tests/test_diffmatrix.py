"""Per-query-row standardization of the difference matrix."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqwin import Descriptor, build, build_row
from seqwin.diffmatrix import DEGENERATE_SIGMA_RTOL, append_row, dump, load

from conftest import make_dense_pair


def test_row_standardization_oracle():
    # raw sad differences [2, 4, 6]: mu 4, population sigma sqrt(8/3)
    q = Descriptor.dense([0.0])
    refs = [Descriptor.dense([2.0]), Descriptor.dense([4.0]), Descriptor.dense([6.0])]
    row, mu, sigma = build_row(q, refs)
    assert mu == pytest.approx(4.0)
    assert sigma == pytest.approx(1.6329931619, abs=1e-9)
    np.testing.assert_allclose(row, [-1.2247448714, 0.0, 1.2247448714], atol=1e-9)


def test_rows_have_zero_mean_unit_population_sigma():
    refs, queries = make_dense_pair(n_ref=40, n_query=30, dim=12, seed=1)
    m = build(queries, refs)
    assert np.all(np.abs(m.d.mean(axis=1)) < 1e-12)
    assert np.all(np.abs(m.d.std(axis=1) - 1.0) < 1e-12)


def test_degenerate_row_stored_as_zeros():
    q = Descriptor.dense([0.0, 0.0])
    refs = [Descriptor.dense([1.0, 1.0])] * 4  # every raw difference equal
    row, mu, sigma = build_row(q, refs)
    np.testing.assert_array_equal(row, np.zeros(4))
    assert mu == pytest.approx(2.0)
    assert sigma <= DEGENERATE_SIGMA_RTOL * max(1.0, abs(mu))


def test_thread_count_does_not_change_output():
    refs, queries = make_dense_pair(n_ref=50, n_query=40, dim=8, seed=2)
    m1 = build(queries, refs, threads=1)
    m4 = build(queries, refs, threads=4)
    assert np.array_equal(m1.d, m4.d)
    assert np.array_equal(m1.row_mu, m4.row_mu)
    assert np.array_equal(m1.row_sigma, m4.row_sigma)


def test_append_row_matches_batch_build():
    refs, queries = make_dense_pair(n_ref=30, n_query=12, dim=6, seed=3)
    full = build(queries, refs)
    m = build(queries[:1], refs)
    for q in queries[1:]:
        m = append_row(m, q, refs)
    assert np.array_equal(m.d, full.d)
    assert np.array_equal(m.row_mu, full.row_mu)
    assert np.array_equal(m.row_sigma, full.row_sigma)


def test_append_row_rejects_operator_mismatch():
    refs, queries = make_dense_pair(n_ref=10, n_query=2, dim=4)
    m = build(queries[:1], refs, op="sad")
    with pytest.raises(ValueError, match="operator mismatch"):
        append_row(m, queries[1], refs, op="cosine")


def test_cosine_rows_standardized():
    refs, queries = make_dense_pair(n_ref=25, n_query=20, dim=10, seed=4)
    m = build(queries, refs, op="cosine")
    assert m.op == "cosine"
    assert np.all(np.abs(m.d.mean(axis=1)) < 1e-12)
    assert np.all(np.abs(m.d.std(axis=1) - 1.0) < 1e-12)


def test_build_rejects_dim_mismatch():
    with pytest.raises(ValueError):
        build([Descriptor.dense([1.0, 2.0])], [Descriptor.dense([1.0])])


def test_build_rejects_empty():
    with pytest.raises(ValueError):
        build([], [Descriptor.dense([1.0])])


def test_dump_load_roundtrip(tmp_path):
    refs, queries = make_dense_pair(n_ref=20, n_query=15, dim=6, seed=5)
    m = build(queries, refs)
    stem = dump(m, tmp_path / "cache")
    back = load(stem)
    assert back.op == m.op
    # float32 storage: relative error bounded by the f32 epsilon
    np.testing.assert_allclose(back.d, m.d, atol=2e-6)
    np.testing.assert_allclose(back.row_mu, m.row_mu, rtol=1e-12)
    assert back.n_query == m.n_query and back.n_ref == m.n_ref


def test_load_rejects_wrong_envelope_kind(tmp_path):
    from seqwin import FormatError
    from seqwin.fileio import save_descriptors

    stem = save_descriptors(tmp_path / "trav", [Descriptor.dense([1.0, 2.0])])
    with pytest.raises(FormatError, match="difference-matrix"):
        load(stem)


@given(st.floats(min_value=0.1, max_value=50.0), st.integers(0, 10))
@settings(max_examples=30, deadline=None)
def test_uniform_scaling_leaves_rows_invariant(scale, seed):
    # scaling all descriptors scales raw sad differences, not their
    # standardized form
    refs, queries = make_dense_pair(n_ref=15, n_query=8, dim=5, seed=seed)
    m1 = build(queries, refs)
    refs_s = [Descriptor.dense(scale * d.as_dense()) for d in refs]
    queries_s = [Descriptor.dense(scale * d.as_dense()) for d in queries]
    m2 = build(queries_s, refs_s)
    np.testing.assert_allclose(m2.d, m1.d, atol=1e-9)
