"""Pauli kinetic operator, nuclear potentials, Hartree term and the
magnetic field energy."""

import numpy as np
import pytest
from conftest import (
    bandlimited_scalar,
    bandlimited_spinor,
    bandlimited_vector,
    radial_quadrature_gaussian_potential_at_center,
    wigner_constant,
)
from numpy.testing import assert_allclose
from scipy.integrate import quad
from scipy.special import erf

from magrhf.fields import (
    Cell,
    ScalarField,
    SpinorField,
    VectorField,
    curl,
    divergence,
    gradient,
    helmholtz_project,
    inner,
)
from magrhf.hamiltonian import (
    PAULI,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    MagneticPotential,
    Nucleus,
    SystemSpec,
    apply_magnetic_laplacian,
    apply_pauli_kinetic,
    apply_sigma_kinetic_root,
    external_potential,
    green_function_GR,
    hartree,
    magnetic_energy,
)

CELL = Cell(9.0, 24)


def _random_potential(cell, rng, kfrac=0.2, scale=0.4):
    raw = bandlimited_vector(cell, rng, kfrac)
    return MagneticPotential(helmholtz_project(VectorField(cell, scale * raw.values)))


# ---------------------------------------------------------------- Pauli algebra
def test_pauli_matrix_algebra():
    for s in (SIGMA_X, SIGMA_Y, SIGMA_Z):
        assert_allclose(s @ s, np.eye(2), atol=1e-15)
        assert_allclose(s, s.conj().T, atol=1e-15)
        assert abs(np.trace(s)) < 1e-15
    assert_allclose(SIGMA_X @ SIGMA_Y, 1j * SIGMA_Z, atol=1e-15)
    assert_allclose(SIGMA_Y @ SIGMA_Z, 1j * SIGMA_X, atol=1e-15)
    assert_allclose(SIGMA_Z @ SIGMA_X, 1j * SIGMA_Y, atol=1e-15)
    assert PAULI.shape == (3, 2, 2)


# ---------------------------------------------------------------- kinetic term
def test_free_plane_wave():
    x = CELL.coords
    kvec = np.array([2, -1, 3]) * (2 * np.pi / CELL.L)
    phase = np.exp(1j * (kvec[0] * x[0] + kvec[1] * x[1] + kvec[2] * x[2]))
    psi = SpinorField(CELL, np.stack([phase, np.zeros_like(phase)]))
    out = apply_pauli_kinetic(psi, None)
    expected = 0.5 * float(kvec @ kvec)
    assert np.abs(out.values - expected * psi.values).max() < 1e-12 * expected


def test_operator_composition_oracle():
    # applying sigma.(p+A) twice and halving must match the expanded form
    rng = np.random.default_rng(10)
    psi = bandlimited_spinor(CELL, rng, 0.3)
    A = _random_potential(CELL, rng, 0.3)
    once = apply_sigma_kinetic_root(psi, A)
    twice = apply_sigma_kinetic_root(once, A)
    via_expansion = apply_pauli_kinetic(psi, A)
    scale = np.abs(via_expansion.values).max()
    assert np.abs(0.5 * twice.values - via_expansion.values).max() < 1e-10 * scale


def test_kinetic_hermitian_quadratic_form():
    rng = np.random.default_rng(11)
    A = _random_potential(CELL, rng)
    phi = bandlimited_spinor(CELL, rng, 0.9)
    psi = bandlimited_spinor(CELL, rng, 0.9)
    lhs = inner(phi, apply_pauli_kinetic(psi, A))
    rhs = np.conjugate(inner(psi, apply_pauli_kinetic(phi, A)))
    scale = max(abs(lhs), 1.0)
    assert abs(lhs - rhs) < 1e-10 * scale


def test_kinetic_nonnegative_on_random_spinors():
    rng = np.random.default_rng(12)
    A = _random_potential(CELL, rng, 0.25)
    for _ in range(100):
        psi = bandlimited_spinor(CELL, rng, 0.3)
        q = np.real(inner(psi, apply_pauli_kinetic(psi, A)))
        assert q >= -1e-10 * psi.norm() ** 2


def test_expand_kinetic_identity():
    # <psi, [sigma.(p+A)]^2 psi> = <psi, (p+A)^2 psi> + int B . m_psi
    rng = np.random.default_rng(13)
    A = _random_potential(CELL, rng, 0.3)
    for _ in range(5):
        psi = bandlimited_spinor(CELL, rng, 0.3)
        pauli = 2.0 * np.real(inner(psi, apply_pauli_kinetic(psi, A)))
        lap = np.real(inner(psi, apply_magnetic_laplacian(psi, A)))
        up, dn = psi.values
        cross = np.conjugate(up) * dn
        m = np.stack([2 * cross.real, 2 * cross.imag, np.abs(up) ** 2 - np.abs(dn) ** 2])
        bm = float(np.sum(A.B.values * m) * CELL.dV)
        assert abs(pauli - (lap + bm)) < 1e-9 * max(abs(pauli), 1.0)


def test_gauge_covariance_fixed_field():
    rng = np.random.default_rng(14)
    cell = Cell(9.0, 32)
    A = _random_potential(cell, rng, 0.15)
    psi = bandlimited_spinor(cell, rng, 0.12)
    x = cell.coords
    mu = 0.4 * np.sin(2 * np.pi * x[0] / cell.L) + 0.3 * np.cos(2 * np.pi * x[1] / cell.L)
    grad_mu = gradient(ScalarField(cell, mu))
    A_shift = MagneticPotential(VectorField(cell, A.A.values + grad_mu.values), check_gauge=False)
    # with p = -i grad, the shift A -> A + grad(mu) pairs with the
    # conjugate phase on the orbitals
    psi_shift = SpinorField(cell, np.exp(-1j * mu)[None] * psi.values)
    e1 = np.real(inner(psi, apply_pauli_kinetic(psi, A)))
    e2 = np.real(inner(psi_shift, apply_pauli_kinetic(psi_shift, A_shift)))
    assert abs(e1 - e2) < 1e-9 * max(abs(e1), 1.0)
    # the field B is untouched by the gauge shift
    assert np.abs(A_shift.B.values - A.B.values).max() < 1e-12


def test_magnetic_potential_invariants():
    rng = np.random.default_rng(15)
    A = _random_potential(CELL, rng)
    assert divergence(A.A).norm() < 1e-10 * max(A.A.norm(), 1.0)
    recomputed = curl(A.A)
    assert np.abs(recomputed.values - A.B.values).max() < 1e-12
    raw = bandlimited_vector(CELL, rng, 0.3)
    with pytest.raises(ValueError):
        MagneticPotential(raw)  # not divergence-free


# ---------------------------------------------------------------- potentials
def test_external_potential_zero_charges():
    spec = SystemSpec(CELL, (Nucleus(0.0, (1.0, 1.0, 1.0)),), N=1.0, alpha=0.1)
    v = external_potential(spec)
    assert np.abs(v.values).max() < 1e-14


def test_external_potential_requires_nuclei():
    with pytest.raises(ValueError):
        SystemSpec(CELL, (), N=1.0, alpha=0.1)


def test_periodic_coefficients_bare_kernel():
    # series coefficient of V_per at k != 0 is -z 4 pi e^{-ik.R} / (|k|^2 |cell|)
    R = (2.0, 3.5, 1.25)
    z = 1.7
    spec = SystemSpec(CELL, (Nucleus(z, R),), N=z, alpha=0.1, mode="periodic")
    v = external_potential(spec, s_nuc=0.0)
    c = v.spectral()
    k = CELL.k
    k2 = CELL.k2_full
    phase = np.exp(-1j * (k[0] * R[0] + k[1] * R[1] + k[2] * R[2]))
    expected = np.where(k2 > 0, -z * 4 * np.pi * phase / np.where(k2 > 0, k2, 1.0) / CELL.volume, 0.0)
    # compare on the modes whose derivative vector is faithful (non-Nyquist)
    assert np.abs(c - expected).max() < 1e-12 * np.abs(expected).max()
    assert abs(v.mean()) < 1e-13


def test_periodic_potential_singularity_is_coulomb():
    # V_per(x) + z/|x| stays bounded as x -> 0 (shrinking radii + extrapolation)
    L, n, z = 12.0, 96, 2.0
    cell = Cell(L, n)
    spec = SystemSpec(cell, (Nucleus(z, (L / 2,) * 3),), N=z, alpha=0.1, mode="periodic")
    v = external_potential(spec, s_nuc=0.0)
    d = cell.displacements((L / 2,) * 3)
    r = np.sqrt(np.sum(d * d, axis=0))
    idx = n // 2
    samples = []
    for j in (10, 8, 6, 4, 2):
        pt = (idx + j, idx + j, idx + j)
        samples.append(v.values[pt] + z / r[pt])
    spread = np.ptp(samples)
    # values stay bounded and settle while z/|x| itself blows up
    assert np.all(np.isfinite(samples))
    assert spread < 0.05
    limit = -z * wigner_constant(L)
    assert abs(samples[-1] - limit) < 1e-2 * abs(limit)


def test_green_function_coefficients_and_mean():
    g = green_function_GR(CELL)
    assert abs(g.mean()) < 1e-13
    c = g.spectral() * CELL.volume
    k2 = CELL.k2_full
    expected = np.where(k2 > 0, 4 * np.pi / np.where(k2 > 0, k2, 1.0), 0.0)
    assert np.abs(c - expected).max() < 1e-12 * expected.max()
    # -lap G has coefficient 4 pi at every nonzero mode (delta comb minus background)
    lap_c = k2 * g.spectral() * CELL.volume
    nz = k2 > 0
    assert np.abs(lap_c[nz] - 4 * np.pi).max() < 1e-10


def test_green_function_short_distance_limit():
    # G(x) |x| -> 1 along grid diagonals after Richardson extrapolation;
    # the tabulated kernel is smoothed over two grid spacings to damp the
    # sharp-cutoff oscillation before extrapolating
    L, n = 14.0, 160
    cell = Cell(L, n)
    coeffs = 4.0 * np.pi * cell.inv_k2 / cell.volume
    sigma = 2.0 * cell.spacing
    smooth = ScalarField.from_spectral(cell, (coeffs * np.exp(-0.5 * cell.k2_full * sigma**2)).astype(complex))
    h = cell.spacing

    def g_times_r(j):
        r = j * h * np.sqrt(3.0)
        return smooth.values[j, j, j] * r

    # radii r, r/2, r/4 on grid points; two Richardson stages kill the linear term
    j0 = 16
    f1, f2, f4 = g_times_r(j0), g_times_r(j0 // 2), g_times_r(j0 // 4)
    first = 2 * f2 - f1
    second = 2 * f4 - f2
    extrapolated = second + (second - first) / 3.0
    assert abs(extrapolated - 1.0) < 1e-2


# ---------------------------------------------------------------- hartree
def test_hartree_zero_density():
    phi, e = hartree(ScalarField.zeros(CELL))
    assert np.abs(phi.values).max() == 0.0 and e == 0.0


def test_hartree_single_mode_parseval_oracle():
    # rho = (1 + cos(k.x))/|cell|: energy = (1/2) 4 pi |rho_k|^2 |cell| / |k|^2
    x = CELL.coords
    kv = 2 * np.pi / CELL.L
    rho = ScalarField(CELL, (1.0 + np.cos(kv * x[2])) / CELL.volume)
    _, e = hartree(rho)
    rho_k = 0.5 / CELL.volume  # series coefficient of the cosine half
    expected = 0.5 * 4 * np.pi * (2 * rho_k**2) * CELL.volume / kv**2
    assert abs(e - expected) < 1e-12 * expected


def test_hartree_gaussian_self_energy():
    L, n, s = 40.0, 96, 2.0
    cell = Cell(L, n)
    d = cell.displacements((L / 2,) * 3)
    rho = ScalarField(cell, np.exp(-0.5 * np.sum(d * d, axis=0) / s**2) / (2 * np.pi * s**2) ** 1.5)
    _, e = hartree(rho)
    # free-space self energy 1/(2 sqrt(pi) s) cross-checked by quadrature of
    # the exact Gaussian potential, plus the periodic image/background
    # correction xi/2 + 2 pi s^2 / L^3 from the Ewald oracle
    free, _ = quad(
        lambda u: 0.5 * 4.0 * np.pi * u * u
        * np.exp(-0.5 * (u / s) ** 2) / (2 * np.pi * s**2) ** 1.5
        * erf(u / (np.sqrt(2.0) * s)) / u,
        0.0, np.inf, epsabs=1e-13, epsrel=1e-12,
    )
    assert abs(free - 1.0 / (2.0 * np.sqrt(np.pi) * s)) < 1e-10
    oracle = free + 0.5 * wigner_constant(L) + 2 * np.pi * s**2 / L**3
    assert abs(e - oracle) < 1e-3 * abs(oracle)


@pytest.mark.filterwarnings("ignore::UserWarning")
def test_hartree_positive_quadratic_form():
    # signed mean-zero test densities: the negativity warning is expected
    rng = np.random.default_rng(16)
    for _ in range(5):
        f = bandlimited_scalar(CELL, rng, 0.6)
        g = bandlimited_scalar(CELL, rng, 0.6)
        f0 = ScalarField(CELL, f.values - f.values.mean())
        g0 = ScalarField(CELL, g.values - g.values.mean())
        _, dff = hartree(f0)
        _, dgg = hartree(g0)
        phi_g, _ = hartree(g0)
        dfg = 0.5 * inner(f0, phi_g) + 0.5 * inner(g0, hartree(f0)[0])
        assert dff >= 0.0 and dgg >= 0.0
        assert dfg**2 <= 4.0 * dff * dgg * (1.0 + 1e-10) + 1e-12


def test_hartree_warns_on_negative_density():
    vals = np.full((24,) * 3, 1.0)
    vals[0, 0, 0] = -0.5
    with pytest.warns(UserWarning):
        hartree(ScalarField(CELL, vals))


# ---------------------------------------------------------------- magnetic energy
def test_magnetic_energy_zero_field():
    assert magnetic_energy(MagneticPotential.zero(CELL), 0.5) == 0.0


def test_magnetic_energy_alpha_scaling():
    rng = np.random.default_rng(17)
    A = _random_potential(CELL, rng)
    e1 = magnetic_energy(A, 0.1)
    e2 = magnetic_energy(A, 0.2)
    assert abs(e1 - 4.0 * e2) < 1e-12 * abs(e1)
    with pytest.raises(ValueError):
        magnetic_energy(A, 0.0)


def test_magnetic_energy_dilation_scaling(family):
    # analytic bookkeeping: int |B_lam|^2 = lam * int |B|^2
    from magrhf.zeromodes import dilate

    lam = 3.0
    assert abs(dilate(family, lam).field_square_integral() - lam * family.field_square_integral()) \
        < 1e-12 * family.field_square_integral()


def test_kinetic_cell_mismatch_raises():
    from magrhf.fields import CellMismatchError

    other = Cell(9.0, 16)
    psi = SpinorField(other, np.zeros((2,) + (16,) * 3, dtype=complex))
    rng = np.random.default_rng(30)
    A = _random_potential(CELL, rng)
    with pytest.raises(CellMismatchError):
        apply_pauli_kinetic(psi, A)
