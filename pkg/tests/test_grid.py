import math

import numpy as np
import pytest

from ksblow.grid import RadialField, RadialMesh, grad_faces, integrate, laplacian, norms, w12_norm


def test_mesh_geometry(mesh):
    assert mesh.dr == pytest.approx(1.0 / 32)
    assert mesh.centers[0] == pytest.approx(0.5 * mesh.dr)
    assert len(mesh.faces) == mesh.N + 1
    assert mesh.faces[-1] == pytest.approx(mesh.R)
    # Annuli tile the disk
    assert mesh.volumes.sum() == pytest.approx(math.pi * mesh.R**2, rel=1e-14)


def test_mesh_arrays_are_read_only(mesh):
    with pytest.raises(ValueError):
        mesh.centers[0] = 1.0


@pytest.mark.parametrize('R, N', [(0.0, 10), (-1.0, 10), (1.0, 1)])
def test_invalid_mesh(R, N):
    with pytest.raises(ValueError):
        RadialMesh(R, N)


def test_refine(mesh):
    fine = mesh.refine()
    assert fine.N == 2 * mesh.N
    assert fine.R == mesh.R


def test_integrate_constant(mesh):
    assert integrate(RadialField.constant(mesh, 2.0)) == pytest.approx(2.0 * math.pi, rel=1e-14)


def test_laplacian_conserves_mass(mesh):
    rng = np.random.default_rng(7)
    values = rng.random(mesh.N)
    assert mesh.integrate(mesh.laplacian(values)) == pytest.approx(0.0, abs=1e-12)


def test_laplacian_of_quadratic(fine_mesh):
    # Delta r^2 = 4 in the plane; boundary cells see the Neumann closure
    field = RadialField.from_profile(fine_mesh, lambda r: r**2)
    lap = laplacian(field).values
    np.testing.assert_allclose(lap[:-1], 4.0, rtol=1e-10)


def test_discrete_green_formula(mesh):
    # sum_i w_i a_i (Delta_h b)_i = -sum_k w~_k (a_r)_k (b_r)_k
    rng = np.random.default_rng(3)
    a, b = rng.random(mesh.N), rng.random(mesh.N)
    lhs = float(mesh.volumes @ (a * mesh.laplacian(b)))
    rhs = -mesh.face_sum(mesh.grad(a) * mesh.grad(b))
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_grad_has_zero_boundary_faces(mesh):
    g = grad_faces(RadialField.from_profile(mesh, np.exp))
    assert g[0] == 0.0 and g[-1] == 0.0
    assert np.all(g[1:-1] > 0.0)


def test_helmholtz_solve_residual(mesh):
    rng = np.random.default_rng(11)
    rhs = rng.random(mesh.N)
    x = mesh.helmholtz_solve(rhs, alpha=0.3, shift=1.7)
    residual = 1.7 * x - 0.3 * mesh.laplacian(x) - rhs
    assert np.max(np.abs(residual)) < 1e-12


def test_helmholtz_preserves_constants(mesh):
    x = mesh.helmholtz_solve(np.full(mesh.N, 3.0), alpha=1.0, shift=1.0)
    np.testing.assert_allclose(x, 3.0, rtol=1e-13)


def test_field_validation(mesh):
    with pytest.raises(ValueError):
        RadialField(np.ones(mesh.N + 1), mesh)
    with pytest.raises(ValueError):
        RadialField(np.full(mesh.N, np.nan), mesh)


def test_field_arithmetic(mesh):
    a = RadialField.constant(mesh, 1.0)
    b = RadialField.constant(mesh, 2.0)
    np.testing.assert_array_equal((a + b).values, 3.0)
    np.testing.assert_array_equal((b - a).values, 1.0)
    np.testing.assert_array_equal((2.0 * a).values, 2.0)
    with pytest.raises(ValueError):
        a + RadialField.constant(mesh.refine(), 1.0)


def test_norms(mesh):
    field = RadialField.constant(mesh, -2.0)
    n = norms(field)
    assert n.l1 == pytest.approx(2.0 * math.pi)
    assert n.l2 == pytest.approx(math.sqrt(4.0 * math.pi))
    assert n.linf == 2.0


def test_w12_norm_of_constant(mesh):
    assert w12_norm(RadialField.constant(mesh, 1.0)) == pytest.approx(math.sqrt(math.pi))


def test_quadrature_converges_at_second_order():
    # int_disk (1 + r^2)^-2 = pi / 2 on the unit disk
    errors = []
    for N in (16, 32, 64, 128):
        mesh = RadialMesh(1.0, N)
        errors.append(abs(mesh.integrate((1.0 + mesh.centers**2)**-2) - 0.5 * math.pi))
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(orders >= 1.9)
    assert errors[-1] < 1e-4
