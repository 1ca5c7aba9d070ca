import numpy as np
import pytest

from kernelconnect.kernels import VectorDomain, make_bergman_disk, make_fock, make_rank_one_kernel
from kernelconnect.numerics import NumericsError
from kernelconnect.rkhs import (
    build_rkhs,
    embed,
    evaluate_element,
    inner,
    project_fiber,
    universality_residual,
)


def _disk_space():
    k = make_bergman_disk(2)
    pts = [np.array([z]) for z in (0.0, 0.3, -0.2 + 0.4j, 0.5j)]
    return build_rkhs(k, pts)


def test_reproducing_property():
    # <khat(t, v), khat(s, w)> = w* kappa(s, t) v on the sample
    r = _disk_space()
    for s in r.points:
        for t in r.points:
            f = embed(r, t, np.array([1.0]))
            g = embed(r, s, np.array([1.0]))
            assert abs(inner(r, f, g) - r.kernel(s, t)[0, 0]) < 1e-13


def test_evaluation_off_sample():
    # f(s) = sum_i kappa(s, t_i) c_i holds at points outside the sample too
    r = _disk_space()
    f = embed(r, r.points[1], np.array([2.0 - 1j]))
    s = np.array([0.1 - 0.2j])
    expected = r.kernel(s, r.points[1]) @ np.array([2.0 - 1j])
    assert np.linalg.norm(evaluate_element(f, s) - expected) < 1e-13


def test_fiber_projection_is_idempotent():
    r = _disk_space()
    rng = np.random.default_rng(2)
    c = rng.standard_normal(len(r.points)) + 1j * rng.standard_normal(len(r.points))
    from kernelconnect.rkhs import RKHSElement

    f = RKHSElement(r, c)
    s = r.points[2]
    once = project_fiber(r, s, f)
    twice = project_fiber(r, s, once)
    assert np.linalg.norm(once.coefficients - twice.coefficients) < 1e-12


def test_fiber_projection_is_orthogonal():
    # the residual f - Pf is Gram-orthogonal to every generator at s
    r = _disk_space()
    rng = np.random.default_rng(3)
    c = rng.standard_normal(len(r.points)) + 1j * rng.standard_normal(len(r.points))
    from kernelconnect.rkhs import RKHSElement

    f = RKHSElement(r, c)
    s = r.points[0]
    residual = RKHSElement(r, f.coefficients - project_fiber(r, s, f).coefficients)
    gen = embed(r, s, np.array([1.0]))
    assert abs(inner(r, residual, gen)) < 1e-12


def test_universality_residual_small_for_builtins():
    assert universality_residual(_disk_space()) < 1e-10
    k = make_fock(np.eye(2))
    rng = np.random.default_rng(4)
    pts = [0.5 * (rng.standard_normal(2) + 1j * rng.standard_normal(2)) for _ in range(5)]
    assert universality_residual(build_rkhs(k, pts)) < 1e-10


def test_duplicate_points_rejected():
    k = make_bergman_disk(2)
    with pytest.raises(ValueError):
        build_rkhs(k, [np.array([0.1]), np.array([0.1])])


def test_non_psd_input_rejected():
    # kappa(s,t) = s + conj(t) is Hermitian-symmetric but indefinite
    from kernelconnect.kernels import Kernel

    bad = Kernel(1, VectorDomain(1, name="C"),
                 lambda s, t: np.array([[complex(s[0]) + np.conj(complex(t[0]))]]))
    pts = [np.array([z]) for z in (1.0, -1.0, 2.0)]
    with pytest.raises(NumericsError):
        build_rkhs(bad, pts)


def test_degenerate_kernel_fiber_projection_fails_loudly():
    k = make_rank_one_kernel(lambda s: np.array([1.0, complex(np.asarray(s).flat[0])]),
                             fiber_dim=2, domain=VectorDomain(1, name="C"))
    pts = [np.array([0.1]), np.array([0.5])]
    r = build_rkhs(k, pts)
    f = embed(r, pts[0], np.array([1.0, 0.0]))
    with pytest.raises(NumericsError):
        project_fiber(r, pts[0], f)
