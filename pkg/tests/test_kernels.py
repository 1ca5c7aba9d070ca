import numpy as np
import pytest

from kernelconnect.kernels import (
    BundleMorphism,
    DomainError,
    VectorDomain,
    admissibility_report,
    gram_matrix,
    make_bergman_disk,
    make_bergman_halfplane,
    make_fock,
    make_rank_one_kernel,
    positivity_certificate,
    pull_back_kernel,
)


def _probe_pairs(kernel, count, seed):
    """Random (point, tangent) pairs inside each built-in base domain."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        if "disk" in kernel.name:
            s = np.array([0.8 * (rng.uniform() + 0j) * np.exp(2j * np.pi * rng.uniform())])
        elif "halfplane" in kernel.name:
            s = np.array([rng.uniform(-1, 1) + 1j * rng.uniform(0.3, 1.5)])
        else:
            d = kernel.domain.dim
            s = 0.5 * (rng.standard_normal(d) + 1j * rng.standard_normal(d))
        x = rng.standard_normal(s.shape) + 1j * rng.standard_normal(s.shape)
        out.append((s, x))
    return out


def test_disk_kernel_value():
    # (1 - 0.25)^(-2) = 16/9 at s = t = 0.5, nu = 2
    k = make_bergman_disk(2)
    assert abs(k(np.array([0.5]), np.array([0.5]))[0, 0] - 16.0 / 9.0) < 1e-14


def test_halfplane_kernel_value():
    # (1/4)(2i)(i - (-i))^(-1) = 1/4 at z = w = i, nu = 1
    k = make_bergman_halfplane(1)
    assert abs(k(np.array([1j]), np.array([1j]))[0, 0] - 0.25) < 1e-14


def test_fock_kernel_value():
    # exp(z . conj(w)) with z = (1, i), w = (1, 0) gives e
    k = make_fock(np.eye(2))
    v = k(np.array([1.0, 1j]), np.array([1.0, 0.0]))[0, 0]
    assert abs(v - np.e) < 1e-13


@pytest.mark.parametrize("make", [
    lambda: make_bergman_disk(2),
    lambda: make_bergman_disk(3),
    lambda: make_bergman_halfplane(1),
    lambda: make_bergman_halfplane(2),
    lambda: make_fock(np.eye(3)),
])
def test_analytic_d2_matches_stencil(make):
    k = make()
    plain = type(k)(k.fiber_dim, k.domain, k.eval, None, k.name)
    for s, x in _probe_pairs(k, 10, seed=3):
        analytic = k.d2_eval(s, s, x)
        stencil = plain.d2_eval(s, s, x, h=1e-4)
        assert np.linalg.norm(analytic - stencil) < 1e-8


def test_gram_matrix_is_psd_on_disk_sample():
    k = make_bergman_disk(2)
    pts = [np.array([z]) for z in (0.0, 0.5, -0.5)]
    g = gram_matrix(k, pts)
    is_psd, min_eig = positivity_certificate(g)
    assert is_psd and min_eig > 0
    assert np.linalg.norm(g - g.conj().T) < 1e-14


def test_fock_gram_is_psd_on_random_sample():
    k = make_fock(np.eye(2))
    rng = np.random.default_rng(5)
    pts = [0.6 * (rng.standard_normal(2) + 1j * rng.standard_normal(2)) for _ in range(10)]
    is_psd, _ = positivity_certificate(gram_matrix(k, pts))
    assert is_psd


def test_domain_guards():
    disk = make_bergman_disk(1)
    with pytest.raises(DomainError):
        disk(np.array([1.0]), np.array([0.0]))
    half = make_bergman_halfplane(1)
    with pytest.raises(DomainError):
        half(np.array([1.0 - 0.1j]), np.array([1j]))


def test_kernel_hermitian_symmetry():
    for k in (make_bergman_disk(2), make_bergman_halfplane(1), make_fock(np.eye(2))):
        for (s, _), (t, _) in zip(_probe_pairs(k, 5, 7), _probe_pairs(k, 5, 8)):
            assert np.linalg.norm(k(s, t).conj().T - k(t, s)) < 1e-12


def test_rank_one_kernel_is_degenerate():
    k = make_rank_one_kernel(lambda s: np.array([1.0, complex(np.asarray(s).flat[0])]),
                             fiber_dim=2, domain=VectorDomain(1, name="C"))
    pts = [np.array([z]) for z in (0.1, 0.4 - 0.2j, -0.3 + 0.1j, 0.25j)]
    rep = admissibility_report(k, pts)
    assert abs(rep["min_sigma"]) < 1e-12
    assert abs(rep["embedding_lower_bound"]) < 1e-12
    assert rep["hermitian_symmetry_residual"] < 1e-12


def test_admissibility_positive_for_builtins():
    cases = [
        (make_bergman_disk(2), [np.array([z]) for z in (0.0, 0.4, 0.5j)]),
        (make_fock(np.eye(2)), [np.zeros(2), np.array([0.5, 0.5j])]),
    ]
    for k, pts in cases:
        rep = admissibility_report(k, pts)
        assert rep["min_sigma"] > 0.5
        assert rep["embedding_lower_bound"] > 0.5
        assert abs(rep["min_sigma"] - rep["embedding_lower_bound"]) < 1e-12


def test_pullback_through_identity_morphism():
    k = make_bergman_disk(2)
    pulled = pull_back_kernel(BundleMorphism.identity(), k, fiber_dim=1, domain=k.domain)
    for s, _ in _probe_pairs(k, 5, 9):
        t = np.array([0.3 + 0.1j])
        assert np.linalg.norm(pulled(s, t) - k(s, t)) < 1e-14


def test_pullback_rescales_by_fiber_map():
    k = make_bergman_disk(2)
    theta = BundleMorphism(zeta=lambda s: s, delta=lambda s: np.array([[2.0]]),
                           tangent=lambda s, x: x)
    pulled = pull_back_kernel(theta, k, fiber_dim=1, domain=k.domain)
    s, t = np.array([0.2]), np.array([0.1 + 0.3j])
    assert np.linalg.norm(pulled(s, t) - 4.0 * k(s, t)) < 1e-14
