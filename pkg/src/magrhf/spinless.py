"""Independent non-magnetic mean-field path.

A deliberately separate assembly of the decoupled problem: scalar
orbitals of ``-lap/2 + V + rho * coulomb`` with spin handled as a
capacity-2 occupation per spatial level, and the energy summed directly
from its integrals.  It shares only the low-level spectral primitives
with the spinor machinery, which makes it a useful cross-check of the
full path in the ``A -> 0`` limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import ScalarField
from .hamiltonian import SystemSpec, external_potential, hartree
from .scf import eigensolve

__all__ = ["SpinlessResult", "scf_solve_spinless"]


@dataclass
class SpinlessResult:
    energy_total: float
    kinetic: float
    external: float
    hartree: float
    levels: np.ndarray
    occupations: np.ndarray
    rho: ScalarField
    iterations: int
    converged: bool
    orbital_residual: float


def _fill_capacity2(levels: np.ndarray, N: float, deg: float = 1e-6) -> np.ndarray:
    """Aufbau with two electrons per spatial level, equal split on ties."""
    occ = np.zeros_like(levels)
    remaining = float(N)
    i = 0
    while i < levels.size and remaining > 1e-12:
        shell = np.flatnonzero((levels >= levels[i] - 1e-300) & (levels <= levels[i] + deg))
        shell = shell[shell >= i]
        cap = 2.0 * shell.size
        if remaining >= cap - 1e-12:
            occ[shell] = 2.0
            remaining -= cap
            i = int(shell[-1]) + 1
        else:
            occ[shell] = remaining / shell.size
            remaining = 0.0
    if remaining > 1e-10:
        raise ValueError("not enough spatial states for the requested electron count")
    return occ


def scf_solve_spinless(
    spec: SystemSpec,
    *,
    tol: float = 1e-10,
    max_iter: int = 120,
    mix: float = 0.6,
    eig_tol: float | None = None,
    eig_maxiter: int = 400,
    s_nuc: float | None = None,
    seed: int = 7,
) -> SpinlessResult:
    """Solve the non-magnetic problem with scalar orbitals.

    Convergence is declared on the orbital residual of the occupied
    states in their own mean field, like the spinor path, so the two
    can be compared at matching tightness.
    """
    cell = spec.cell
    if eig_tol is None:
        eig_tol = max(1e-10, 0.1 * tol)
    if s_nuc is None:
        s_nuc = 2.0 * cell.spacing
    V = external_potential(spec, s_nuc=s_nuc)
    n_spatial = int(math.ceil(spec.N / 2.0 - 1e-12)) + 2
    k2 = cell.k2_full

    # initial density: one broad Gaussian per nucleus
    vals = np.zeros((cell.n,) * 3)
    for nuc in spec.nuclei:
        width = max(0.8 / max(nuc.z, 0.5), 2.0 * cell.spacing)
        d = cell.displacements(nuc.R)
        vals += np.exp(-0.5 * np.sum(d * d, axis=0) / width**2)
    vals *= spec.N / (vals.sum() * cell.dV)
    rho = ScalarField(cell, vals)

    X_warm = None
    converged = False
    res_orb = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        v_h, _ = hartree(rho)
        v_eff = V.values + v_h.values

        def apply_h(X: np.ndarray) -> np.ndarray:
            c = cell.to_spectral(X)
            return cell.from_spectral(0.5 * k2[None, None] * c) + v_eff[None, None] * X

        levels, orbitals, _, _ = eigensolve(
            apply_h, cell, n_spatial, block=n_spatial + 2, tol=eig_tol,
            max_iter=eig_maxiter, X0=X_warm, seed=seed, components=1,
        )
        occ = _fill_capacity2(levels, spec.N)
        rho_out = np.zeros((cell.n,) * 3)
        for f, orb in zip(occ, orbitals):
            rho_out += f * np.abs(orb[0]) ** 2
        rho_out_field = ScalarField(cell, rho_out)

        v_h_out, _ = hartree(rho_out_field)
        v_eff_out = V.values + v_h_out.values

        def apply_out(X: np.ndarray) -> np.ndarray:
            c = cell.to_spectral(X)
            return cell.from_spectral(0.5 * k2[None, None] * c) + v_eff_out[None, None] * X

        HX = apply_out(orbitals)
        nmo = len(occ)
        lam = np.real(
            np.sum(np.conjugate(orbitals.reshape(nmo, -1)) * HX.reshape(nmo, -1), axis=1) * cell.dV
        )
        R = HX - lam[:, None, None, None, None] * orbitals
        res_per = np.sqrt(np.sum(np.abs(R.reshape(nmo, -1)) ** 2, axis=1) * cell.dV)
        occupied = occ > 1e-12
        res_orb = float(np.max(res_per[occupied] / np.maximum(1.0, np.abs(lam[occupied]))))
        if res_orb <= tol:
            rho = rho_out_field
            converged = True
            break
        rho = ScalarField(cell, (1.0 - mix) * rho.values + mix * rho_out)
        X_warm = orbitals

    # direct energy assembly from the integrals
    kinetic = 0.0
    for f, orb in zip(occ, orbitals):
        c = cell.to_spectral(orb[0])
        kinetic += f * float(np.real(np.sum(0.5 * k2 * np.abs(c) ** 2) * cell.volume))
    rho_final = rho if converged else rho_out_field
    external = float(np.sum(V.values * rho_final.values) * cell.dV)
    _, hartree_energy = hartree(rho_final)
    total = kinetic + external + hartree_energy
    return SpinlessResult(
        energy_total=total,
        kinetic=kinetic,
        external=external,
        hartree=hartree_energy,
        levels=levels,
        occupations=occ,
        rho=rho_final,
        iterations=it,
        converged=converged,
        orbital_residual=res_orb,
    )
