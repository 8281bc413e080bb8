import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import ortho_group

from dkps.alignment import aligned_error, procrustes
from dkps.core import Configuration, avg_l2, two_to_infinity


def _cfg(points):
    points = np.asarray(points, dtype=float)
    return Configuration(tuple(str(i) for i in range(len(points))), points)


def _check_orthogonal(w):
    assert np.linalg.norm(w.T @ w - np.eye(len(w))) < 1e-10
    assert abs(abs(np.linalg.det(w)) - 1) < 1e-10


def test_identity_alignment(rng):
    a = _cfg(rng.normal(size=(8, 2)))
    fit = procrustes(a, a)
    assert np.allclose(fit.rotation, np.eye(2), atol=1e-12)
    assert np.allclose(fit.translation, 0, atol=1e-12)
    assert fit.residual < 1e-12


@pytest.mark.parametrize("d", [2, 3, 5])
def test_rigid_motion_removed(rng, d):
    src = rng.normal(size=(12, d))
    w0 = ortho_group.rvs(d, random_state=7)
    a0 = rng.normal(size=d)
    fit = procrustes(src, src @ w0 + a0)
    _check_orthogonal(fit.rotation)
    assert fit.residual < 1e-10
    assert np.allclose(fit.rotation, w0, atol=1e-10)
    assert np.allclose(fit.translation, a0, atol=1e-10)


def test_reflection_is_allowed(rng):
    src = rng.normal(size=(10, 2))
    tgt = src * [-1.0, 1.0]
    fit = procrustes(src, tgt)
    assert fit.residual < 1e-10
    assert np.linalg.det(fit.rotation) == pytest.approx(-1.0, abs=1e-10)


def test_translation_switch(rng):
    src = rng.normal(size=(6, 2))
    fit = procrustes(src, src + 5.0, with_translation=False)
    assert np.all(fit.translation == 0)
    assert fit.residual > 1.0


def test_errors_on_mismatch():
    with pytest.raises(ValueError):
        procrustes(np.zeros((3, 2)), np.zeros((4, 2)))
    with pytest.raises(ValueError):
        procrustes(Configuration(("a", "b"), np.eye(2)), Configuration(("b", "a"), np.eye(2)))
    with pytest.raises(ValueError):
        aligned_error(np.eye(2), np.eye(2), metric="frobenius")


def test_aligned_error_examples(rng):
    ref = rng.normal(size=(9, 2))
    for metric in ("avg_l2", "two_to_infinity"):
        assert aligned_error(ref, ref, metric) < 1e-12
        w0 = ortho_group.rvs(2, random_state=3)
        assert aligned_error(ref @ w0 + [1.0, -2.0], ref, metric) < 1e-9

    bump = np.zeros_like(ref)
    bump[4] = [0.06, 0.08]  # norm 0.1
    est = ref + bump
    tinf = aligned_error(est, ref, "two_to_infinity")
    l2 = aligned_error(est, ref, "avg_l2")
    assert tinf <= 0.1 + 1e-9
    assert tinf >= l2


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_alignment_never_increases_frobenius_residual(seed, translate):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=(7, 2)), rng.normal(size=(7, 2))
    fit = procrustes(a, b, translate)
    assert fit.residual <= np.linalg.norm(b - a) + 1e-12
    _check_orthogonal(fit.rotation)
    # idempotent: aligning the aligned estimate again changes nothing
    again = procrustes(fit.apply(a), b, translate)
    assert abs(again.residual - fit.residual) < 1e-12


def test_metric_consistency(rng):
    a, b = rng.normal(size=(5, 2)), rng.normal(size=(5, 2))
    fit = procrustes(a, b)
    aligned = fit.apply(a)
    assert aligned_error(a, b, "avg_l2") == pytest.approx(avg_l2(b, aligned), rel=1e-14)
    assert aligned_error(a, b, "two_to_infinity") == pytest.approx(two_to_infinity(b - aligned), rel=1e-14)
