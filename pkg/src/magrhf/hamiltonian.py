"""Mean-field Pauli Hamiltonian: kinetic term, nuclear and Hartree
potentials, and the magnetic field energy.

The kinetic operator is ``(1/2) [sigma . (p + A)]^2``, applied through
the expansion ``(1/2)(p + A)^2 + (1/2) sigma . B``.  Derivatives act in
Fourier space and potentials in real space; the cross term is
symmetrised as ``(A . p + p . A) / 2`` so the discrete operator is
Hermitian to roundoff regardless of the gauge of ``A``.

Nuclear potentials use the periodic Coulomb kernel (Fourier symbol
``4 pi / |k|^2`` with the ``k = 0`` mode dropped).  Molecular systems
are treated in the same large periodic box, so the neutralizing
background and the O(1/L) image interaction are part of the
discretisation and documented where tests depend on them.  Point nuclei
are regularised as narrow Gaussians of width ``2 * spacing`` by
default; pass ``s_nuc=0.0`` for the bare kernel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import (
    Cell,
    CellMismatchError,
    ScalarField,
    SpinorField,
    VectorField,
    curl,
    divergence,
    inner,
    poisson_potential,
)

__all__ = [
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "PAULI",
    "Nucleus",
    "SystemSpec",
    "MagneticPotential",
    "apply_pauli_kinetic",
    "apply_magnetic_laplacian",
    "external_potential",
    "green_function_GR",
    "hartree",
    "magnetic_energy",
]

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
#: The three Pauli matrices stacked as a (3, 2, 2) array.
PAULI = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])
for _m in (SIGMA_X, SIGMA_Y, SIGMA_Z, PAULI):
    _m.setflags(write=False)


@dataclass(frozen=True)
class Nucleus:
    """Point nucleus of charge ``z`` at position ``R`` (bohr, inside the cell)."""

    z: float
    R: tuple[float, float, float]

    def __post_init__(self) -> None:
        if self.z < 0:
            raise ValueError(f"nuclear charge must be nonnegative, got {self.z}")
        object.__setattr__(self, "R", tuple(float(c) for c in self.R))


@dataclass(frozen=True)
class SystemSpec:
    """Nuclear arrangement, electron count and coupling for one run.

    ``mode`` selects between a molecule in a large periodic box
    (``"molecular"``) and a perfect crystal with one unit cell
    (``"periodic"``).  In periodic mode charge neutrality ``N = Z`` is
    required; molecular mode accepts any ``N > 0`` but the existence
    regime ``N <= Z`` is flagged by the solver when violated.
    """

    cell: Cell
    nuclei: tuple[Nucleus, ...]
    N: float
    alpha: float
    mode: str = "molecular"

    def __post_init__(self) -> None:
        object.__setattr__(self, "nuclei", tuple(self.nuclei))
        if self.mode not in ("molecular", "periodic"):
            raise ValueError(f"mode must be 'molecular' or 'periodic', got {self.mode!r}")
        if not self.nuclei:
            raise ValueError("at least one nucleus is required")
        if self.N <= 0:
            raise ValueError(f"electron count must be positive, got N={self.N}")
        if self.alpha <= 0:
            raise ValueError(f"fine-structure constant must be positive, got alpha={self.alpha}")
        for nuc in self.nuclei:
            for c in nuc.R:
                if not (0.0 <= c < self.cell.L):
                    raise ValueError(f"nucleus at {nuc.R} lies outside the cell [0, {self.cell.L})^3")
        if self.mode == "periodic" and abs(self.N - self.Z) > 1e-12:
            raise ValueError(
                f"periodic mode requires a neutral cell N = Z, got N={self.N}, Z={self.Z}"
            )

    @property
    def Z(self) -> float:
        """Total nuclear charge."""
        return float(sum(nuc.z for nuc in self.nuclei))

    @property
    def z_max(self) -> float:
        """Largest single nuclear charge."""
        return float(max(nuc.z for nuc in self.nuclei))


@dataclass(frozen=True, eq=False)
class MagneticPotential:
    """Divergence-free vector potential with its field ``B = curl A``.

    ``field_energy_raw`` is ``int |B|^2`` over the cell;  the physical
    magnetic energy carries the extra ``1 / (8 pi alpha^2)``.
    """

    A: VectorField
    B: VectorField = field(default=None)  # type: ignore[assignment]
    check_gauge: bool = True
    gauge_tol: float = 1e-10

    def __post_init__(self) -> None:
        if self.B is None:
            object.__setattr__(self, "B", curl(self.A))
        elif self.B.cell != self.A.cell:
            raise CellMismatchError("A and B live on different cells")
        if self.check_gauge:
            div_norm = divergence(self.A).norm()
            scale = max(self.A.norm(), 1.0)
            if div_norm > self.gauge_tol * scale:
                raise ValueError(
                    f"vector potential violates the Coulomb gauge: |div A| = {div_norm:.3e}"
                )

    @classmethod
    def zero(cls, cell: Cell) -> "MagneticPotential":
        return cls(VectorField.zeros(cell), VectorField.zeros(cell))

    @property
    def cell(self) -> Cell:
        return self.A.cell

    @property
    def field_energy_raw(self) -> float:
        return self.B.square_integral()

    def is_zero(self) -> bool:
        return not np.any(self.A.values)


def _spinor_fft(cell: Cell, values: np.ndarray) -> np.ndarray:
    return cell.to_spectral(values)


def apply_magnetic_laplacian(psi: SpinorField, A: MagneticPotential | None) -> SpinorField:
    """Apply ``(p + A)^2`` to a spinor.

    Expanded as ``p^2 + A . p + p . A + A^2`` with the derivative parts
    spectral and the multiplications pointwise.  Each of the four pieces
    is individually Hermitian on the discrete torus (``A . p`` and
    ``p . A`` are mutual adjoints), so the sum is Hermitian to roundoff.
    """
    cell = psi.cell
    if A is not None and A.cell != cell:
        raise CellMismatchError("spinor and vector potential live on different cells")
    c = psi.spectral()
    k = cell.k
    out = cell.from_spectral(cell.k2_full[None] * c)
    if A is not None and not A.is_zero():
        a = A.A.values
        grad = cell.from_spectral(1j * k[:, None] * c[None])  # (3, 2, n, n, n)
        adotp = -1j * np.sum(a[:, None] * grad, axis=0)
        apsi = a[:, None] * psi.values[None]
        pdota = -1j * np.sum(
            cell.from_spectral(1j * k[:, None] * _spinor_fft(cell, apsi)), axis=0
        )
        out = out + adotp + pdota + np.sum(a**2, axis=0)[None] * psi.values
    return SpinorField(cell, out)


def _sigma_dot(vec_values: np.ndarray, psi_values: np.ndarray) -> np.ndarray:
    """Pointwise (sigma . v) acting on a spinor array."""
    vx, vy, vz = vec_values
    up, dn = psi_values
    return np.stack([vz * up + (vx - 1j * vy) * dn, (vx + 1j * vy) * up - vz * dn])


def _sigma_contract(v: np.ndarray) -> np.ndarray:
    """Contract sigma with spinor-valued vector components, v: (3, 2, n, n, n)."""
    vx, vy, vz = v
    up = vz[0] + vx[1] - 1j * vy[1]
    dn = vx[0] + 1j * vy[0] - vz[1]
    return np.stack([up, dn])


def apply_sigma_kinetic_root(psi: SpinorField, A: MagneticPotential | None) -> SpinorField:
    """Apply the first-order operator ``sigma . (p + A)`` to a spinor."""
    cell = psi.cell
    if A is not None and A.cell != cell:
        raise CellMismatchError("spinor and vector potential live on different cells")
    c = psi.spectral()
    v = cell.from_spectral(cell.k[:, None] * c[None])  # p psi = -i grad psi
    if A is not None and not A.is_zero():
        v = v + A.A.values[:, None] * psi.values[None]
    return SpinorField(cell, _sigma_contract(v))


def apply_pauli_kinetic(psi: SpinorField, A: MagneticPotential | None) -> SpinorField:
    """Apply the Pauli kinetic operator ``(1/2) [sigma . (p + A)]^2``.

    Uses the expansion ``(1/2)(p + A)^2 + (1/2) sigma . B``.
    """
    cell = psi.cell
    out = 0.5 * apply_magnetic_laplacian(psi, A).values
    if A is not None and not A.is_zero():
        out = out + 0.5 * _sigma_dot(A.B.values, psi.values)
    return SpinorField(cell, out)


def _nuclear_spectral(spec: SystemSpec, s_nuc: float) -> np.ndarray:
    """Spectral coefficients of the (regularised) nuclear charge density."""
    cell = spec.cell
    k = cell.k
    coeffs = np.zeros((cell.n,) * 3, dtype=complex)
    for nuc in spec.nuclei:
        phase = np.exp(-1j * (k[0] * nuc.R[0] + k[1] * nuc.R[1] + k[2] * nuc.R[2]))
        coeffs += nuc.z * phase
    coeffs /= cell.volume
    if s_nuc > 0.0:
        coeffs = coeffs * np.exp(-0.5 * cell.k2 * s_nuc**2)
    return coeffs


def external_potential(spec: SystemSpec, s_nuc: float | None = None) -> ScalarField:
    """Attractive Coulomb potential of the nuclei on the grid.

    Both modes use the periodic kernel ``-4 pi z / |k|^2`` per nucleus
    with the mean dropped, which is the periodic potential ``V_per``
    exactly, and the jellium-compensated box approximation of the
    molecular potential.  ``s_nuc`` is the Gaussian regularisation width
    (default ``2 * spacing``; ``0`` gives bare point charges).
    """
    cell = spec.cell
    if s_nuc is None:
        s_nuc = 2.0 * cell.spacing
    rho_nuc = _nuclear_spectral(spec, s_nuc)
    v = -4.0 * np.pi * rho_nuc * cell.inv_k2
    return ScalarField.from_spectral(cell, v)


def green_function_GR(cell: Cell) -> ScalarField:
    """Green's function of the periodic Laplacian on the grid.

    Tabulates ``G(x) = (4 pi / |cell|) sum_{k != 0} exp(i k . x) / |k|^2``,
    the mean-zero solution of ``-lap G = 4 pi (delta-comb - 1/|cell|)``.
    Its series coefficients scaled by the cell volume are exactly
    ``4 pi / |k|^2``.
    """
    coeffs = 4.0 * np.pi * cell.inv_k2 / cell.volume
    return ScalarField.from_spectral(cell, coeffs.astype(complex))


def hartree(rho: ScalarField) -> tuple[ScalarField, float]:
    """Hartree potential and energy of a density.

    Returns ``(phi, E)`` with ``phi`` the periodic Coulomb potential of
    ``rho`` (k = 0 dropped) and ``E = (1/2) <rho, phi> >= 0``.  Small
    negative densities from roundoff are tolerated.
    """
    neg = float(rho.values.min())
    if neg < -1e-8 * max(float(rho.values.max()), 1e-300):
        import warnings

        warnings.warn(f"hartree: density has negative values down to {neg:.3e}", stacklevel=2)
    phi = poisson_potential(rho)
    energy = 0.5 * inner(rho, phi)
    return phi, float(energy)


def magnetic_energy(A: MagneticPotential, alpha: float) -> float:
    """Field energy ``int |B|^2 / (8 pi alpha^2)`` over the cell."""
    if alpha <= 0:
        raise ValueError(f"fine-structure constant must be positive, got alpha={alpha}")
    return A.field_energy_raw / (8.0 * np.pi * alpha**2)
