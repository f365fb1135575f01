"""Analytic zero modes of the Pauli operator and the stability threshold.

The Loss-Yau construction gives an explicit square-integrable pair
(Psi, A) with ``sigma . (p + A) Psi = 0``:

    Psi(x) = c (1 + |x|^2)^(-3/2) (1 - i sigma . x) phi_w,   c = 1/pi,
    A(x)   = 3 (1 + |x|^2)^(-2) [ (1 - |x|^2) w + 2 (w . x) x + 2 (x cross w) ],

where ``phi_w`` is the spinor polarised along the unit vector ``w``.
Sign conventions for the spinor conjugation and the cross term vary
across the literature; the combination above is the one (for momentum
``p = -i grad``) whose residual vanishes identically, fixed once by a
symbolic/grid scan and frozen here with a regression test.  Its field is

    B(x) = 12 (1 + |x|^2)^(-3) [ (|x|^2 - 1) w - 2 (w . x) x + 2 (w cross x) ],

with |B| = 12 (1 + |x|^2)^(-2).

The rank-1 states ``gamma_eps = eps |Psi><Psi|`` built on this family
drive everything else: the scale-invariant functional, the upper bound
on the zero-mode minimisation value beta(z, N), the critical coupling
``alpha_c = (-8 pi beta)^(-1/2)``, and the dilation scan that exhibits
the collapse ``E -> -infinity`` in the unstable regime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad

from .density import EnergyBreakdown
from .fields import Cell, SpinorField, VectorField
from .hamiltonian import MagneticPotential, apply_sigma_kinetic_root

__all__ = [
    "ZeroModeFamily",
    "loss_yau",
    "dilate",
    "f_z",
    "beta_rank1_upper_bound",
    "alpha_c_from_beta",
    "instability_scan",
    "InstabilityScan",
    "sample_on_cell",
    "grid_residual",
]

#: Frozen sign conventions (see module docstring): spinor factor
#: (1 + i * SPINOR_CONJ * sigma.x) and cross term 2 * CROSS_SIGN * (x cross w).
SPINOR_CONJ = -1.0
CROSS_SIGN = +1.0

_NORM_C = 1.0 / math.pi  # normalisation c of Psi at lam = 1


def spinor_along(w: np.ndarray) -> np.ndarray:
    """Unit spinor phi with <phi, sigma phi> = w (Bloch parametrisation)."""
    wx, wy, wz = w
    theta = math.acos(max(-1.0, min(1.0, wz)))
    phi_az = math.atan2(wy, wx)
    return np.array(
        [math.cos(theta / 2.0), math.sin(theta / 2.0) * complex(math.cos(phi_az), math.sin(phi_az))],
        dtype=complex,
    )


def psi_values(points: np.ndarray, w: np.ndarray, *, conj_sign: float = SPINOR_CONJ) -> np.ndarray:
    """Evaluate Psi at points (3, ...); returns (2, ...) complex, lam = 1."""
    phi = spinor_along(w)
    x, y, z = points
    r2 = x * x + y * y + z * z
    pref = _NORM_C * (1.0 + r2) ** -1.5
    s = 1j * conj_sign
    # (1 + s sigma.x) phi, written out per spinor component
    up = (1.0 + s * z) * phi[0] + s * (x - 1j * y) * phi[1]
    dn = s * (x + 1j * y) * phi[0] + (1.0 - s * z) * phi[1]
    return np.stack([pref * up, pref * dn])


def a_values(
    points: np.ndarray, w: np.ndarray, *, cross_sign: float = CROSS_SIGN, field_sign: float = +1.0
) -> np.ndarray:
    """Evaluate the vector potential at points (3, ...); lam = 1."""
    x = np.asarray(points, dtype=float)
    r2 = np.sum(x * x, axis=0)
    wv = np.asarray(w, dtype=float).reshape(3, *([1] * (x.ndim - 1)))
    wdotx = np.sum(wv * x, axis=0)
    cross = np.stack(
        [
            x[1] * wv[2] - x[2] * wv[1],
            x[2] * wv[0] - x[0] * wv[2],
            x[0] * wv[1] - x[1] * wv[0],
        ]
    )
    pref = field_sign * 3.0 * (1.0 + r2) ** -2
    return pref[None] * ((1.0 - r2)[None] * wv + 2.0 * wdotx[None] * x + 2.0 * cross_sign * cross)


def b_values(points: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Evaluate B = curl A at points (3, ...); lam = 1, frozen conventions."""
    x = np.asarray(points, dtype=float)
    r2 = np.sum(x * x, axis=0)
    wv = np.asarray(w, dtype=float).reshape(3, *([1] * (x.ndim - 1)))
    wdotx = np.sum(wv * x, axis=0)
    wcx = np.stack(
        [
            wv[1] * x[2] - wv[2] * x[1],
            wv[2] * x[0] - wv[0] * x[2],
            wv[0] * x[1] - wv[1] * x[0],
        ]
    )
    pref = 12.0 * (1.0 + r2) ** -3
    return pref[None] * ((r2 - 1.0)[None] * wv - 2.0 * wdotx[None] * x + 2.0 * wcx)


def _radial_density(r: np.ndarray | float) -> np.ndarray | float:
    """|Psi|^2 as a function of radius (lam = 1, normalised)."""
    return _NORM_C**2 * (1.0 + np.asarray(r) ** 2) ** -2


_QUAD_OPTS = dict(epsabs=1e-13, epsrel=1e-11, limit=200)


def _compute_base_integrals() -> tuple[float, float, float]:
    """Radial quadrature of the cached integrals at lam = 1, ||Psi|| = 1.

    I1 = int |Psi|^2 / |x|,  D1 = D(|Psi|^2, |Psi|^2),  B2 = int |B|^2.
    """
    i1, _ = quad(lambda r: 4.0 * math.pi * r * _radial_density(r), 0.0, np.inf, **_QUAD_OPTS)

    def shell_charge(r: float) -> float:
        q, _ = quad(lambda s: s * s * _radial_density(s), 0.0, r, **_QUAD_OPTS)
        return q

    d1, _ = quad(
        lambda r: 2.0 * (4.0 * math.pi) ** 2 * r * _radial_density(r) * shell_charge(r),
        0.0,
        np.inf,
        **_QUAD_OPTS,
    )

    # |B|^2 angular average by Gauss-Legendre in mu = cos(theta); the
    # azimuthal direction is symmetric about w.
    mu, wts = np.polynomial.legendre.leggauss(32)
    w_axis = np.array([0.0, 0.0, 1.0])

    def b2_radial(r: float) -> float:
        sin_t = np.sqrt(np.maximum(0.0, 1.0 - mu**2))
        pts = np.stack([r * sin_t, np.zeros_like(mu), r * mu])
        b = b_values(pts, w_axis)
        return float(np.sum(wts * np.sum(b * b, axis=0)) * 2.0 * math.pi * r * r)

    b2, _ = quad(b2_radial, 0.0, np.inf, **_QUAD_OPTS)
    return float(i1), float(d1), float(b2)


_BASE_INTEGRALS: tuple[float, float, float] | None = None


def _base_integrals() -> tuple[float, float, float]:
    global _BASE_INTEGRALS
    if _BASE_INTEGRALS is None:
        _BASE_INTEGRALS = _compute_base_integrals()
    return _BASE_INTEGRALS


@dataclass(frozen=True)
class ZeroModeFamily:
    """Loss-Yau pair with dilation ``lam`` and rank-1 amplitude ``epsilon``.

    The cached integrals ``i1, d1, b2`` refer to ``lam = 1`` and
    ``||Psi|| = 1``; the kinetic trace of the family is identically
    zero.  Dilation transforms the state as
    ``gamma_lam(x, y) = lam^3 gamma(lam x, lam y)``,
    ``A_lam(x) = lam A(lam x)``, under which the trace is unchanged, the
    kinetic trace picks up ``lam^2`` and the attraction, Hartree and
    field integrals each pick up one power of ``lam``.
    """

    w: tuple[float, float, float]
    epsilon: float = 1.0
    lam: float = 1.0
    i1: float = 0.0
    d1: float = 0.0
    b2: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.epsilon <= 1.0):
            raise ValueError(f"amplitude must lie in [0, 1], got {self.epsilon}")
        if self.lam <= 0.0:
            raise ValueError(f"dilation must be positive, got {self.lam}")

    # --- analytic bookkeeping, exact in lam -------------------------------
    def trace(self) -> float:
        """Tr(gamma_eps) = epsilon, invariant under dilation."""
        return self.epsilon

    def kinetic_trace(self) -> float:
        """Pauli kinetic energy of the family: zero at every dilation."""
        return self.lam**2 * 0.0

    def attraction_integral(self) -> float:
        """int rho / |x| for rho = eps |Psi_lam|^2."""
        return self.epsilon * self.lam * self.i1

    def hartree_quadratic(self) -> float:
        """D(rho, rho) for rho = eps |Psi_lam|^2."""
        return self.epsilon**2 * self.lam * self.d1

    def field_square_integral(self) -> float:
        """int |B_lam|^2."""
        return self.lam * self.b2

    def energy_terms(self, z: float, alpha: float) -> EnergyBreakdown:
        """Single-nucleus energy of the dilated rank-1 state."""
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        return EnergyBreakdown(
            kinetic=self.kinetic_trace(),
            external=-z * self.attraction_integral(),
            hartree=0.5 * self.hartree_quadratic(),
            magnetic=self.field_square_integral() / (8.0 * math.pi * alpha**2),
        )

    # --- pointwise evaluators, honouring the dilation ---------------------
    def psi(self, points: np.ndarray) -> np.ndarray:
        return self.lam**1.5 * psi_values(self.lam * np.asarray(points, dtype=float), np.asarray(self.w))

    def vector_potential(self, points: np.ndarray) -> np.ndarray:
        return self.lam * a_values(self.lam * np.asarray(points, dtype=float), np.asarray(self.w))

    def magnetic_field(self, points: np.ndarray) -> np.ndarray:
        return self.lam**2 * b_values(self.lam * np.asarray(points, dtype=float), np.asarray(self.w))


def loss_yau(w: np.ndarray | tuple[float, float, float]) -> ZeroModeFamily:
    """Construct the zero-mode family polarised along the unit vector ``w``."""
    wv = np.asarray(w, dtype=float)
    if wv.shape != (3,) or abs(float(np.linalg.norm(wv)) - 1.0) > 1e-12:
        raise ValueError(f"spin direction must be a unit 3-vector, got {w}")
    i1, d1, b2 = _base_integrals()
    return ZeroModeFamily(w=tuple(float(c) for c in wv), i1=i1, d1=d1, b2=b2)


def dilate(fam: ZeroModeFamily, lam: float) -> ZeroModeFamily:
    """Dilate the family; all cached integrals transform exactly."""
    if lam <= 0.0:
        raise ValueError(f"dilation must be positive, got {lam}")
    return replace(fam, lam=fam.lam * lam)


def f_z(fam: ZeroModeFamily, z: float) -> float:
    """Scale-invariant functional of the rank-1 family.

    ``( eps^2 D1 / 2 - z eps I1 ) / B2`` in the lam = 1 integrals, which
    makes the dilation invariance exact by construction.
    """
    if fam.b2 <= 0.0:
        raise ValueError("degenerate family: int |B|^2 must be positive")
    eps = fam.epsilon
    return (0.5 * eps * eps * fam.d1 - z * eps * fam.i1) / fam.b2


def beta_rank1_upper_bound(
    z: float, N: float, fam: ZeroModeFamily
) -> tuple[float, float]:
    """Optimise the amplitude of the rank-1 family.

    Minimises ``eps -> (eps^2 D1 / 2 - z eps I1) / B2`` over
    ``eps in [0, min(1, N)]`` (the trace constraint Tr <= N together
    with 0 <= gamma <= 1).  Returns ``(eps_star, beta_ub)`` where
    ``beta_ub`` upper-bounds the zero-mode minimisation value
    beta(z, N); it is strictly negative for every z > 0.
    """
    if z <= 0.0:
        raise ValueError(f"nuclear charge must be positive, got z={z}")
    if N <= 0.0:
        raise ValueError(f"electron budget must be positive, got N={N}")
    eps_cap = min(1.0, N)
    eps_star = min(z * fam.i1 / fam.d1, eps_cap)
    beta_ub = f_z(replace(fam, epsilon=eps_star), z)
    if not beta_ub < 0.0:
        raise AssertionError(f"rank-1 bound failed to be negative: {beta_ub}")
    return eps_star, beta_ub


def alpha_c_from_beta(beta: float) -> float:
    """Critical coupling ``(-1 / (8 pi beta))**0.5`` for beta < 0.

    The map is increasing on (-infinity, 0), so an upper bound for beta
    yields an upper bound for the critical coupling.
    """
    if beta >= 0.0:
        raise ValueError(f"stability threshold is undefined for beta >= 0, got {beta}")
    return math.sqrt(-1.0 / (8.0 * math.pi * beta))


@dataclass(frozen=True)
class InstabilityScan:
    """Dilation scan of the single-atom energy on the optimal rank-1 state."""

    lambdas: tuple[float, ...]
    energies: tuple[float, ...]
    slope: float
    slope_fit: float
    alpha: float
    alpha_c_ub: float
    epsilon_star: float

    @property
    def unstable(self) -> bool:
        return self.slope < 0.0


def instability_scan(
    z: float, N: float, alpha: float, lambdas: "list[float] | np.ndarray", fam: ZeroModeFamily
) -> InstabilityScan:
    """Energy along the dilation path of the amplitude-optimal family.

    On the zero-mode family the kinetic term vanishes, so the energy is
    exactly affine, ``E(lam) = lam * (eps^2 D1 / 2 - z eps I1 +
    B2 / (8 pi alpha^2))``, and the slope is negative precisely when
    ``alpha`` exceeds the family's critical coupling.
    """
    lam_arr = np.asarray(lambdas, dtype=float)
    if lam_arr.ndim != 1 or lam_arr.size < 1:
        raise ValueError("lambdas must be a nonempty 1-D sequence")
    if np.any(lam_arr <= 0.0) or np.any(np.diff(lam_arr) <= 0.0):
        raise ValueError("lambdas must be positive and strictly ascending")
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    eps_star, beta_ub = beta_rank1_upper_bound(z, N, fam)
    slope = (
        0.5 * eps_star**2 * fam.d1
        - z * eps_star * fam.i1
        + fam.b2 / (8.0 * math.pi * alpha**2)
    )
    energies = tuple(float(lam * slope) for lam in lam_arr)
    if lam_arr.size >= 2:
        coeffs = np.polyfit(lam_arr, np.asarray(energies), 1)
        slope_fit = float(coeffs[0])
    else:
        slope_fit = float(energies[0] / lam_arr[0])
    return InstabilityScan(
        lambdas=tuple(float(v) for v in lam_arr),
        energies=energies,
        slope=float(slope),
        slope_fit=slope_fit,
        alpha=float(alpha),
        alpha_c_ub=alpha_c_from_beta(beta_ub),
        epsilon_star=float(eps_star),
    )


def sample_on_cell(
    fam: ZeroModeFamily, cell: Cell, center: tuple[float, float, float] | None = None
) -> tuple[SpinorField, MagneticPotential]:
    """Sample (Psi, A) on a periodic grid, centred in the cell by default.

    The analytic pair is exactly Coulomb-gauge; the grid samples carry
    the periodisation error of the slowly decaying tails, so the gauge
    check is skipped and ``B`` is the spectral curl of the sampled ``A``.
    """
    if center is None:
        center = (0.5 * cell.L,) * 3
    disp = cell.displacements(center)
    psi = SpinorField(cell, fam.psi(disp))
    a = VectorField(cell, fam.vector_potential(disp))
    return psi, MagneticPotential(a, check_gauge=False)


def grid_residual(fam: ZeroModeFamily, cell: Cell) -> float:
    """Relative grid residual ``||sigma.(p+A) Psi|| / ||Psi||``.

    The derivative is spectral, so this measures how well the sampled
    pair solves the zero-mode equation on the discrete torus.
    """
    psi, pot = sample_on_cell(fam, cell)
    res = apply_sigma_kinetic_root(psi, pot)
    return res.norm() / psi.norm()
