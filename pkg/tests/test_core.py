import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gnmfsmc.core import (
    AbundanceMatrix,
    EndmemberMatrix,
    HyperspectralScene,
    ParameterError,
    UnmixConfig,
    Variant,
    column_normalize,
    validate_scene,
)


def test_valid_scene_has_no_violations():
    assert validate_scene(HyperspectralScene(np.ones((3, 4)))) == []


def test_negative_entry_reported_with_location():
    data = np.ones((3, 4))
    data[1, 2] = -0.5
    violations = validate_scene(HyperspectralScene(data))
    assert len(violations) == 1
    assert violations[0].code == "negative"
    assert violations[0].location == (1, 2)
    assert "row 1" in violations[0].message and "col 2" in violations[0].message


def test_spatial_shape_mismatch():
    violations = validate_scene(HyperspectralScene(np.ones((2, 5)), spatial_shape=(2, 3)))
    assert [v.code for v in violations] == ["spatial_shape"]
    assert "rows·cols ≠ M" in violations[0].message


def test_validate_does_not_mutate():
    data = np.array([[1.0, -1.0]])
    scene = HyperspectralScene(data)
    before = scene.data.copy()
    validate_scene(scene)
    np.testing.assert_array_equal(scene.data, before)
    assert not scene.data.flags.writeable


@pytest.mark.parametrize(
    "column, expected",
    [((2.0, 2.0), (0.5, 0.5)), ((0.0, 0.0), (0.5, 0.5)), ((1.0, 3.0), (0.25, 0.75))],
)
def test_column_normalize_examples(column, expected):
    out = column_normalize(np.array(column)[:, None])
    assert out.normalized
    np.testing.assert_allclose(out.fractions[:, 0], expected, rtol=0, atol=1e-15)


nonneg = arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 8)),
                elements=st.floats(0, 1e3, allow_nan=False, allow_infinity=False))


@settings(max_examples=100, deadline=None)
@given(nonneg)
def test_column_normalize_idempotent(H):
    once = column_normalize(H).fractions
    twice = column_normalize(once).fractions
    np.testing.assert_allclose(twice, once, rtol=0, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(nonneg)
def test_column_normalize_preserves_argmax(H):
    out = column_normalize(H).fractions
    live = H.sum(axis=0) > 0
    for j in np.flatnonzero(live):
        top_in = set(np.flatnonzero(H[:, j] == H[:, j].max()))
        top_out = set(np.flatnonzero(out[:, j] == out[:, j].max()))
        assert top_in & top_out


@settings(max_examples=100, deadline=None)
@given(nonneg)
def test_any_nonnegative_matrix_is_valid(Y):
    assert validate_scene(HyperspectralScene(Y)) == []


def test_endmember_matrix_rejects_zero_column():
    with pytest.raises(ParameterError):
        EndmemberMatrix(np.array([[1.0, 0.0], [2.0, 0.0]]))


def test_abundance_normalized_flag_is_checked():
    with pytest.raises(ParameterError):
        AbundanceMatrix(np.array([[0.5], [0.2]]), normalized=True)
    AbundanceMatrix(np.array([[0.5], [0.5 + 5e-7]]), normalized=True)


def test_config_validation_and_effective_weights():
    with pytest.raises(ParameterError):
        UnmixConfig(endmember_count=2, sigma1=0.0)
    with pytest.raises(ParameterError):
        UnmixConfig(endmember_count=2, variant="bogus")
    c = UnmixConfig(endmember_count=2, variant="NMF", alpha=3, beta=4)
    assert (c.effective_alpha, c.effective_beta) == (0.0, 0.0)
    c = UnmixConfig(endmember_count=2, variant="GNMF-SMC", alpha=3, beta=4)
    assert c.variant is Variant.GNMF_SMC
    assert (c.effective_alpha, c.effective_beta) == (3.0, 4.0)
    assert UnmixConfig(endmember_count=2, variant="GNMF", beta=4).effective_beta == 0.0
    assert UnmixConfig(endmember_count=2, variant="NMF_SMC", alpha=4).effective_alpha == 0.0
