import math
from dataclasses import replace

import numpy as np
import pytest

from ksblow.diagnostics import homogeneous_F, liapunov_F
from ksblow.exceptions import DomainError, ResolutionError
from ksblow.grid import RadialMesh
from ksblow.initdata import (FLOOR_FRACTION, InitialDataSpec, MembershipReport, build, find_eta_for_F,
                             membership, min_resolvable_eta)
from ksblow.models import power_diffusion, semilinear
from ksblow.solver import solve_stationary_v
from ksblow.types import Profile, VMode


@pytest.mark.parametrize('profile', [Profile.RATIONAL4, Profile.GAUSSIAN, Profile.FLAT])
def test_mass_is_exact(fine_mesh, profile):
    state = build(InitialDataSpec(m=3.0, eta=0.1, profile=profile), fine_mesh)
    assert state.mass == pytest.approx(3.0, rel=1e-12)
    assert np.all(state.u.values > 0.0)
    assert np.all(state.v.values > 0.0)


def test_profile_concentrates_at_origin(fine_mesh):
    u = build(InitialDataSpec(m=1.0, eta=0.05), fine_mesh).u.values
    assert np.all(np.diff(u) <= 0.0)
    assert u[0] > 100.0 * u[-1]


def test_floor_is_positive_far_out(fine_mesh):
    state = build(InitialDataSpec(m=1.0, eta=0.05, profile=Profile.GAUSSIAN), fine_mesh)
    assert state.u.values[-1] >= 0.5 * FLOOR_FRACTION / math.pi


def test_flat_profile_is_homogeneous(mesh):
    state = build(InitialDataSpec(m=2.0, eta=0.01, profile=Profile.FLAT), mesh)
    np.testing.assert_allclose(state.u.values, 2.0 / math.pi, rtol=1e-12)
    np.testing.assert_allclose(state.v.values, 2.0 / math.pi, rtol=1e-9)


def test_elliptic_v_is_stationary(fine_mesh):
    state = build(InitialDataSpec(m=1.0, eta=0.1), fine_mesh)
    np.testing.assert_allclose(state.v.values, solve_stationary_v(state.u).values, rtol=1e-12)


def test_copy_v_is_smoothed_u(fine_mesh):
    spec = InitialDataSpec(m=1.0, eta=0.1, v_mode=VMode.COPY)
    state = build(spec, fine_mesh)
    u, v = state.u.values, state.v.values
    residual = v - spec.eta**2 * fine_mesh.laplacian(v) - u
    assert np.max(np.abs(residual)) < 1e-10 * np.max(u)
    assert fine_mesh.integrate(v) == pytest.approx(1.0, rel=1e-10)
    assert v[0] < u[0]


def test_unresolved_eta(mesh):
    with pytest.raises(ResolutionError):
        build(InitialDataSpec(m=1.0, eta=min_resolvable_eta(mesh)), mesh)


def test_unresolved_eta_needs_eta(mesh):
    with pytest.raises(ValueError):
        build(InitialDataSpec(m=1.0, F_target=-1.0), mesh)


def test_spec_problems():
    assert InitialDataSpec(m=1.0, eta=0.1).problems(R=1.0) == []
    problems = InitialDataSpec(m=-1.0, eta=2.0, floor=-1.0).problems(R=1.0)
    assert any(p.startswith('initial_data.m') for p in problems)
    assert any(p.startswith('initial_data.eta') for p in problems)
    assert any(p.startswith('initial_data.floor') for p in problems)
    assert InitialDataSpec(m=1.0).problems(R=1.0) == ['initial_data: exactly one of eta and F_target must be given']
    assert len(InitialDataSpec(m=1.0, eta=0.1, F_target=-1.0).problems(R=1.0)) == 1


def test_spec_coerces_enums():
    spec = InitialDataSpec(m=1.0, eta=0.1, profile='gaussian', v_mode='copy')
    assert spec.profile == Profile.GAUSSIAN
    assert spec.v_mode == VMode.COPY
    with pytest.raises(ValueError):
        InitialDataSpec(m=1.0, eta=0.1, profile='box')


def test_membership_report(fine_mesh):
    model = power_diffusion(q=-1.0)
    state = build(InitialDataSpec(m=1.0, eta=0.1), fine_mesh)
    report = membership(state, model, K_user=0.5)
    assert report.m_actual == pytest.approx(1.0, rel=1e-12)
    assert report.F0 == pytest.approx(liapunov_F(state, model))
    assert report.A_actual > 0.0
    assert report.A == report.A_actual
    assert set(report.to_json()) == {'m_actual', 'A_actual', 'A_cap', 'F0', 'K_user', 'is_member'}


def test_membership_decision():
    inside = MembershipReport(m_actual=1.0, A_actual=1.0, F0=-10.0, K_user=1.0)
    assert inside.is_member
    assert not replace(inside, F0=-1.0).is_member
    # The cap replaces A in the energy bound but must itself bound A
    assert not replace(inside, A_cap=0.5).is_member
    capped = replace(inside, F0=-4.5, A_actual=1.0, A_cap=2.0)
    assert capped.A == 2.0
    assert not capped.is_member
    assert replace(capped, F0=-5.0).is_member


def test_find_eta_for_reachable_target(fine_mesh):
    model = semilinear()
    spec = InitialDataSpec(m=60.0, F_target=0.0)
    target = liapunov_F(build(replace(spec, eta=0.05, F_target=None), fine_mesh), model)

    eta = find_eta_for_F(spec, fine_mesh, model, target)
    F = liapunov_F(build(replace(spec, eta=eta, F_target=None), fine_mesh), model)
    assert F <= target
    assert eta == pytest.approx(0.05, rel=1e-2)


def test_find_eta_rejects_target_above_homogeneous(mesh):
    model = power_diffusion(q=-1.0)
    spec = InitialDataSpec(m=1.0, F_target=0.0)
    with pytest.raises(DomainError):
        find_eta_for_F(spec, mesh, model, homogeneous_F(model, 1.0, mesh.R) + 1.0)


def test_find_eta_reports_resolution_limit():
    mesh = RadialMesh(1.0, 16)
    model = power_diffusion(q=-1.0)
    with pytest.raises(ResolutionError) as info:
        find_eta_for_F(InitialDataSpec(m=1.0, F_target=-1e6), mesh, model, -1e6)
    assert info.value.eta == pytest.approx(min_resolvable_eta(mesh), rel=1e-6)
    assert info.value.F > -1e6


ETA_GRID = [0.4, 0.2, 0.1, 0.05, 0.025]


@pytest.mark.parametrize('profile', [Profile.RATIONAL4, Profile.GAUSSIAN])
def test_peak_decreases_as_eta_grows(fine_mesh, profile):
    peaks = [build(InitialDataSpec(m=1.0, eta=eta, profile=profile), fine_mesh).linf for eta in ETA_GRID[::-1]]
    assert np.all(np.diff(peaks) < 0.0)


@pytest.mark.parametrize('model', [semilinear(), power_diffusion(q=-1.0)], ids=lambda model: model.name)
def test_energy_falls_with_concentration_above_critical_mass(fine_mesh, model):
    energies = [liapunov_F(build(InitialDataSpec(m=60.0, eta=eta), fine_mesh), model) for eta in ETA_GRID]
    assert np.all(np.diff(energies) <= 0.0)


def test_energy_rises_with_concentration_at_unit_mass(fine_mesh):
    # Below 8 pi the entropy of the peak outgrows the chemotactic gain
    model = semilinear()
    energies = [liapunov_F(build(InitialDataSpec(m=1.0, eta=eta), fine_mesh), model) for eta in (0.2, 0.1, 0.05)]
    assert np.all(np.diff(energies) > 0.0)
