"""Self-consistent solution of the coupled orbital / vector-potential
stationarity system.

The fixed point solved here is

    gamma = aufbau filling of the lowest spinor states of
            H = (1/2)[sigma.(p+A)]^2 + V + rho * coulomb,
    (1/2)(j + curl m) + A rho + (-lap A) / (4 pi alpha^2) = 0,

with the Fermi level chosen so the occupations sum to the electron
count.  The loop alternates a preconditioned block eigensolve, aufbau
filling, a spectral solve of the linear field equation (with the
``A rho`` term lagged and iterated), and linear mixing of the density
and the potential, with optional Anderson acceleration on the density.
Convergence is declared on three residuals evaluated at the iterate
itself: the orbital residual of the occupied states in their own mean
field, the field-equation residual, and the continuity residual
``div(j + A rho)``.  A step that raises the energy is retried with
halved mixing a few times before being accepted, which keeps the
accepted energy history non-increasing in practice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .density import (
    DensityMatrix,
    EnergyBreakdown,
    current,
    density,
    kinetic_inequality_report,
    magnetisation,
    total_energy,
)
from .fields import (
    Cell,
    ScalarField,
    SpinorField,
    VectorField,
    curl,
    divergence,
)
from .hamiltonian import (
    MagneticPotential,
    SystemSpec,
    external_potential,
    hartree,
)

__all__ = [
    "SCFConfig",
    "SCFState",
    "EigensolveError",
    "eigensolve",
    "fermi_fill",
    "update_vector_potential",
    "scf_solve",
    "scan_alpha",
    "concavity_defects",
    "AlphaScanRow",
    "make_hamiltonian",
]


@dataclass(frozen=True)
class SCFConfig:
    """Knobs of the fixed-point iteration.

    ``mix_rho`` and ``mix_A`` are the linear mixing fractions in (0, 1];
    ``deg_threshold`` groups levels into a degenerate Fermi shell;
    ``anderson_depth`` > 0 turns on Anderson acceleration of the density
    update with that history depth.  ``pin_A`` freezes the vector
    potential at zero (the decoupled, non-magnetic limit).
    """

    max_iter: int = 80
    tol: float = 1e-8
    mix_rho: float = 0.6
    mix_A: float = 0.6
    eig_block: int | None = None
    eig_tol: float | None = None
    eig_maxiter: int = 300
    deg_threshold: float = 1e-6
    seed: int = 0
    anderson_depth: int = 0
    pin_A: bool = False
    s_nuc: float | None = None
    energy_floor: float = -1.0e4
    a_inner_iters: int = 2
    max_halvings: int = 8
    energy_slack_rel: float = 1e-10
    check_inequalities: bool = True

    def __post_init__(self) -> None:
        if not (0.0 < self.mix_rho <= 1.0 and 0.0 < self.mix_A <= 1.0):
            raise ValueError("mixing parameters must lie in (0, 1]")
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")


class EigensolveError(RuntimeError):
    """Eigensolver failed to converge; carries the best residuals found."""

    def __init__(self, message: str, levels: np.ndarray, residuals: np.ndarray):
        super().__init__(message)
        self.levels = levels
        self.residuals = residuals


def make_hamiltonian(cell: Cell, v_eff: ScalarField | None, A: MagneticPotential | None):
    """Return a batched apply for H = (1/2)[sigma.(p+A)]^2 + v_eff.

    The callable maps arrays of shape (m, 2, n, n, n) to arrays of the
    same shape.  Derivatives act in Fourier space, potentials pointwise,
    and the ``A . p + p . A`` cross term is kept symmetric so the
    operator is Hermitian to roundoff.
    """
    k = cell.k
    k2 = cell.k2_full
    v = None if v_eff is None else v_eff.values
    a = b = None
    if A is not None and not A.is_zero():
        a = A.A.values
        b = A.B.values

    def apply_h(X: np.ndarray) -> np.ndarray:
        c = cell.to_spectral(X)
        out = cell.from_spectral(0.5 * k2[None, None] * c)
        if a is not None:
            grad = cell.from_spectral(1j * k[None, :, None] * c[:, None])
            adotp = -1j * np.sum(a[None, :, None] * grad, axis=1)
            apsi = a[None, :, None] * X[:, None]
            pdota = -1j * np.sum(
                cell.from_spectral(1j * k[None, :, None] * cell.to_spectral(apsi)), axis=1
            )
            out += 0.5 * (adotp + pdota + np.sum(a**2, axis=0)[None, None] * X)
            bx, by, bz = b
            up, dn = X[:, 0], X[:, 1]
            out[:, 0] += 0.5 * (bz * up + (bx - 1j * by) * dn)
            out[:, 1] += 0.5 * ((bx + 1j * by) * up - bz * dn)
        if v is not None:
            out += v[None, None] * X
        return out

    return apply_h


def _block_inner(cell: Cell, Xa: np.ndarray, Xb: np.ndarray) -> np.ndarray:
    """Gram matrix of two orbital blocks, shapes (ma|mb, c, n, n, n)."""
    flat_a = Xa.reshape(Xa.shape[0], -1)
    flat_b = Xb.reshape(Xb.shape[0], -1)
    return (flat_a.conj() @ flat_b.T) * cell.dV


def _normalize_columns(cell: Cell, X: np.ndarray) -> np.ndarray:
    """Scale each block vector to unit norm, dropping vanishing ones."""
    nrm = np.sqrt(np.sum(np.abs(X.reshape(X.shape[0], -1)) ** 2, axis=1) * cell.dV)
    good = nrm > 1e-150
    return X[good] / nrm[good][:, None, None, None, None]


def _orthonormalize(cell: Cell, X: np.ndarray, drop_tol: float = 1e-12) -> np.ndarray:
    """Orthonormalize a block against itself, dropping null directions."""
    g = _block_inner(cell, X, X)
    vals, vecs = np.linalg.eigh(0.5 * (g + g.conj().T))
    keep = vals > drop_tol * max(float(vals.max()), 1e-300)
    t = vecs[:, keep] / np.sqrt(vals[keep])
    return np.tensordot(t.T, X, axes=(1, 0))


def eigensolve(
    apply_h,
    cell: Cell,
    count: int,
    *,
    block: int | None = None,
    tol: float = 1e-9,
    max_iter: int = 300,
    X0: np.ndarray | None = None,
    seed: int = 0,
    components: int = 2,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Lowest eigenpairs of a Hermitian operator by preconditioned LOBPCG.

    Returns ``(levels, orbitals, residuals, iterations)`` with levels
    ascending, orthonormal orbitals of shape (block, components, n, n, n)
    and relative residuals ``||H x - t x|| / max(1, |t|)``.  The first
    ``count`` pairs are converged below ``tol``; otherwise an
    :class:`EigensolveError` carrying the best residuals is raised.

    The preconditioner is the shifted free-particle resolvent
    ``(|k|^2 / 2 - theta_i + shift)^(-1)`` applied to each residual.
    """
    n = cell.n
    b = max(block or (count + 2), count, 2)
    rng = np.random.default_rng(seed)
    shape = (b, components) + (n,) * 3
    if X0 is not None:
        X = np.array(X0, dtype=complex)[:b]
        if X.shape[0] < b:
            extra_shape = (b - X.shape[0],) + shape[1:]
            extra = rng.standard_normal(extra_shape) + 1j * rng.standard_normal(extra_shape)
            X = np.concatenate([X, extra], axis=0)
    else:
        X = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    X = _orthonormalize(cell, X)
    HX = apply_h(X)
    P = HP = None
    k2 = cell.k2_full
    rel = np.full(b, np.inf)

    def lincomb(C: np.ndarray, blk: np.ndarray) -> np.ndarray:
        return np.tensordot(C.T, blk, axes=(1, 0))

    for it in range(1, max_iter + 1):
        # Rayleigh-Ritz rotation inside the current block
        h = _block_inner(cell, X, HX)
        theta, U = np.linalg.eigh(0.5 * (h + h.conj().T))
        X = lincomb(U, X)
        HX = lincomb(U, HX)
        R = HX - theta[:, None, None, None, None] * X
        res_norms = np.sqrt(np.sum(np.abs(R.reshape(b, -1)) ** 2, axis=1) * cell.dV)
        rel = res_norms / np.maximum(1.0, np.abs(theta))
        if np.all(rel[:count] <= tol):
            return theta, X, res_norms, it

        # preconditioned residuals of the unconverged pairs only
        # (soft locking: converged vectors stay in the basis but stop
        # spawning search directions)
        active = rel > 0.25 * tol
        if not np.any(active):
            active = np.ones(b, dtype=bool)
        R = R[active]
        shift = np.maximum(1.0, -theta[active] + 1.0)
        chat = cell.to_spectral(R)
        W = cell.from_spectral(chat / (0.5 * k2[None, None] + shift[:, None, None, None, None]))
        W = _normalize_columns(cell, W)
        for _ in range(2):
            W -= lincomb(_block_inner(cell, X, W), X)
            if P is not None:
                W -= lincomb(_block_inner(cell, P, W), P)
            W = _normalize_columns(cell, W)
        gw = _block_inner(cell, W, W)
        vals, vecs = np.linalg.eigh(0.5 * (gw + gw.conj().T))
        keep = vals > 1e-10 * max(float(vals.max()), 1e-300)
        if not np.any(keep):
            W = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
            W -= lincomb(_block_inner(cell, X, W), X)
            gw = _block_inner(cell, W, W)
            vals, vecs = np.linalg.eigh(0.5 * (gw + gw.conj().T))
            keep = vals > 1e-10 * max(float(vals.max()), 1e-300)
        Tw = vecs[:, keep] / np.sqrt(vals[keep])
        W = lincomb(Tw, W)
        HW = apply_h(W)

        blocks = [X, W] + ([P] if P is not None else [])
        h_blocks = [HX, HW] + ([HP] if P is not None else [])
        S = np.concatenate(blocks, axis=0)
        HS = np.concatenate(h_blocks, axis=0)
        h_sub = _block_inner(cell, S, HS)
        g_sub = _block_inner(cell, S, S)
        # S is orthonormal to roundoff; solve the small generalized
        # problem anyway to absorb the leftover non-orthogonality.
        vals, vecs = np.linalg.eigh(0.5 * (g_sub + g_sub.conj().T))
        keep = vals > 1e-10 * max(float(vals.max()), 1e-300)
        T = vecs[:, keep] / np.sqrt(vals[keep])
        h_o = T.conj().T @ (0.5 * (h_sub + h_sub.conj().T)) @ T
        evals, evecs = np.linalg.eigh(0.5 * (h_o + h_o.conj().T))
        C = T @ evecs[:, :b]
        X_new = lincomb(C, S)
        HX_new = lincomb(C, HS)

        # implicit conjugate directions: the W/P part of the new block
        C_wp = C[b:, :]
        S_wp = S[b:]
        HS_wp = HS[b:]
        P = lincomb(C_wp, S_wp)
        HP = lincomb(C_wp, HS_wp)
        for _ in range(2):
            proj = _block_inner(cell, X_new, P)
            P -= lincomb(proj, X_new)
            HP -= lincomb(proj, HX_new)
            nrm = np.sqrt(np.sum(np.abs(P.reshape(P.shape[0], -1)) ** 2, axis=1) * cell.dV)
            good = nrm > 1e-150
            P, HP, nrm = P[good], HP[good], nrm[good]
            if P.shape[0] == 0:
                break
            scale = 1.0 / nrm
            P = P * scale[:, None, None, None, None]
            HP = HP * scale[:, None, None, None, None]
        gp = _block_inner(cell, P, P) if P.shape[0] else np.zeros((0, 0))
        if gp.size:
            vals, vecs = np.linalg.eigh(0.5 * (gp + gp.conj().T))
            keep = vals > 1e-8 * max(float(vals.max()), 1e-300)
        else:
            keep = np.zeros(0, dtype=bool)
        if np.any(keep):
            Tp = vecs[:, keep] / np.sqrt(vals[keep])
            P = lincomb(Tp, P)
            HP = lincomb(Tp, HP)
        else:
            P = HP = None
        X, HX = X_new, HX_new

    raise EigensolveError(
        f"eigensolver did not reach tol={tol} within {max_iter} iterations "
        f"(relative residuals of the lowest {count} pairs: {rel[:count]})",
        levels=np.real(theta),
        residuals=rel,
    )


def fermi_fill(
    levels: np.ndarray, N: float, deg_threshold: float = 1e-6
) -> tuple[np.ndarray, float]:
    """Aufbau occupations for ``N`` electrons over ascending levels.

    Levels within ``deg_threshold`` of the shell bottom form one
    degenerate shell and share the remaining charge equally, so the
    total is exactly ``N``.  Returns ``(occupations, fermi_energy)``;
    when the filling ends exactly between two shells the Fermi energy is
    the midpoint of the gap.
    """
    lv = np.asarray(levels, dtype=float)
    if lv.ndim != 1 or np.any(np.diff(lv) < -1e-12):
        raise ValueError("levels must be a 1-D ascending sequence")
    if N <= 0:
        raise ValueError("electron count must be positive")
    if N > lv.size + 1e-12:
        raise ValueError(f"cannot place N={N} electrons in {lv.size} available states")
    occ = np.zeros_like(lv)
    remaining = float(N)
    i = 0
    fermi = float(lv[-1])
    while i < lv.size:
        shell = np.flatnonzero((lv >= lv[i] - 1e-300) & (lv <= lv[i] + deg_threshold))
        shell = shell[shell >= i]
        cap = shell.size
        if remaining >= cap - 1e-12:
            occ[shell] = 1.0
            remaining -= cap
            i = int(shell[-1]) + 1
            if remaining <= 1e-12:
                fermi = 0.5 * (lv[i - 1] + lv[i]) if i < lv.size else float(lv[-1])
                remaining = 0.0
                break
        else:
            occ[shell] = remaining / cap
            fermi = float(lv[i])
            remaining = 0.0
            break
    if remaining > 1e-10:
        raise ValueError(f"fermi filling failed to place all electrons ({remaining} left)")
    total = occ.sum()
    if abs(total - N) > 0.0:
        frac = (occ > 0.0) & (occ < 1.0)
        if np.any(frac):
            occ[frac] += (N - total) / frac.sum()
    return occ, fermi


def update_vector_potential(
    j: VectorField,
    m: VectorField,
    rho: ScalarField,
    A_in: MagneticPotential,
    spec: SystemSpec,
) -> MagneticPotential:
    """One spectral solve of the linear field equation.

    Solves ``(1/2)(j + curl m) + A rho + (-lap A)/(4 pi alpha^2) = 0``
    transversally: ``A_k = -4 pi alpha^2 P_perp[source]_k / |k|^2`` for
    ``k != 0``, with a vanishing mean (this realises the constant
    multiplier of the periodic stationarity system, and the decay of the
    potential in the box picture).  The ``A rho`` term uses the incoming
    potential; the caller iterates the lag.
    """
    cell = j.cell
    if m.cell != cell or rho.cell != cell or A_in.cell != cell or spec.cell != cell:
        raise ValueError("all fields must live on one cell")
    source = 0.5 * (j.values + curl(m).values) + A_in.A.values * rho.values[None]
    shat = cell.to_spectral(source)
    k = cell.k
    kdots = np.sum(k * shat, axis=0)
    shat = shat - k * (kdots * cell.inv_k2_deriv)[None]
    ahat = -4.0 * np.pi * spec.alpha**2 * shat * cell.inv_k2[None]
    ahat[:, 0, 0, 0] = 0.0
    return MagneticPotential(VectorField(cell, cell.from_spectral(ahat).real), check_gauge=False)


def _field_equation_residual(
    j: VectorField, m: VectorField, rho: ScalarField, A: MagneticPotential, alpha: float
) -> float:
    """Relative transverse residual of the stationarity equation for A.

    Source terms below the numerically-zero current scale (see
    :func:`_continuity_residual`) count as an exactly satisfied
    equation rather than a noise-over-noise ratio.
    """
    cell = j.cell
    source = 0.5 * (j.values + curl(m).values) + A.A.values * rho.values[None]
    shat = cell.to_spectral(source)
    k = cell.k
    kdots = np.sum(k * shat, axis=0)
    shat = shat - k * (kdots * cell.inv_k2_deriv)[None]
    shat[:, 0, 0, 0] = 0.0
    lap = cell.k2_full[None] * cell.to_spectral(A.A.values) / (4.0 * np.pi * alpha**2)
    lhs_norm = VectorField.from_spectral(cell, shat + lap).norm()
    src_norm = VectorField.from_spectral(cell, shat).norm()
    lap_norm = VectorField.from_spectral(cell, lap).norm()
    scale = src_norm + lap_norm
    floor = 1e-6 * rho.norm() * (2.0 * np.pi / cell.L)
    if scale <= floor:
        return 0.0
    return lhs_norm / scale


def _continuity_residual(rho: ScalarField, j: VectorField, A: MagneticPotential) -> float:
    """||div(j/2 + A rho)|| / ||j/2 + A rho||; zero for a vanishing current.

    ``j/2 + A rho`` is the conserved gauge-invariant current of the
    kinetic operator (the divergence of the field stationarity equation
    kills the curl and Laplacian terms and leaves exactly this
    combination).  Degenerate-shell states carry no current analytically
    but the eigensolver leaves roundoff-level remnants; below the floor
    ``1e-6 ||rho||`` the current counts as zero instead of dividing
    noise by noise.
    """
    cell = rho.cell
    phys = VectorField(cell, 0.5 * j.values + A.A.values * rho.values[None])
    norm = phys.norm()
    floor = 1e-6 * rho.norm()
    if norm <= floor:
        return 0.0
    return divergence(phys).norm() / norm


@dataclass
class SCFState:
    """Converged (or best-effort) self-consistent state."""

    gamma: DensityMatrix
    A: MagneticPotential
    energy: EnergyBreakdown
    levels: np.ndarray
    fermi_energy: float
    iteration: int
    residual_orbital: float
    residual_field: float
    residual_continuity: float
    converged: bool
    flag: str | None = None
    energy_history: tuple[float, ...] = ()
    inequality_ledger: tuple[dict, ...] = ()
    forced_energy_increases: int = 0

    @property
    def residuals(self) -> tuple[float, float, float]:
        return (self.residual_orbital, self.residual_field, self.residual_continuity)


def _initial_density(spec: SystemSpec, s_nuc: float) -> ScalarField:
    """Superposed atomic Gaussians at the nuclei, scaled to N electrons.

    The widths are deliberately broad (a few bohr): a tight initial
    cloud puts its full self-repulsion on top of the nucleus in the
    first mean field, which can unbind the first iterate entirely.
    """
    cell = spec.cell
    rho = np.zeros((cell.n,) * 3)
    for nuc in spec.nuclei:
        width = min(max(3.0 / max(nuc.z, 1.0), 2.0 * cell.spacing), 0.25 * cell.L)
        d = cell.displacements(nuc.R)
        g = np.exp(-0.5 * np.sum(d * d, axis=0) / width**2)
        rho += max(nuc.z, 1.0) * g / (g.sum() * cell.dV)
    rho *= spec.N / max(rho.sum() * cell.dV, 1e-300)
    return ScalarField(cell, rho)


class _AndersonMixer:
    """Anderson (DIIS-like) acceleration of the density fixed point."""

    def __init__(self, depth: int, beta: float):
        self.depth = depth
        self.beta = beta
        self.x_hist: list[np.ndarray] = []
        self.r_hist: list[np.ndarray] = []

    def push(self, x: np.ndarray, fx: np.ndarray) -> np.ndarray:
        res = fx - x
        self.x_hist.append(x.copy())
        self.r_hist.append(res.copy())
        if len(self.x_hist) > self.depth + 1:
            self.x_hist.pop(0)
            self.r_hist.pop(0)
        m = len(self.x_hist)
        if m == 1:
            return x + self.beta * res
        dR = np.stack([self.r_hist[i + 1] - self.r_hist[i] for i in range(m - 1)]).reshape(m - 1, -1)
        dX = np.stack([self.x_hist[i + 1] - self.x_hist[i] for i in range(m - 1)]).reshape(m - 1, -1)
        gram = dR @ dR.T
        rhs = dR @ res.ravel()
        try:
            coef = np.linalg.solve(gram + 1e-12 * max(np.trace(gram), 1e-300) * np.eye(m - 1), rhs)
        except np.linalg.LinAlgError:
            coef = np.zeros(m - 1)
        step = res.ravel() - dR.T @ coef
        new = x.ravel() + self.beta * step - dX.T @ coef
        return new.reshape(x.shape)


@dataclass
class _Iterate:
    """Everything produced by one evaluation of the SCF map."""

    gamma: DensityMatrix
    orbitals: np.ndarray
    levels: np.ndarray
    occ: np.ndarray
    fermi: float
    rho_out: ScalarField
    j: VectorField
    m: VectorField
    A_out: MagneticPotential
    energy: EnergyBreakdown


def scf_solve(
    spec: SystemSpec,
    config: SCFConfig | None = None,
    *,
    initial: tuple[np.ndarray, np.ndarray, VectorField] | None = None,
) -> SCFState:
    """Run the alternating fixed-point loop to self-consistency.

    ``initial`` may carry ``(orbital_values, occupations, A_values)``
    from a checkpoint or a previous solve to warm-start the iteration.
    Non-convergence returns the best state flagged ``"not_converged"``;
    an energy below the configured floor returns a state flagged
    ``"instability"`` instead of looping forever.
    """
    config = config or SCFConfig()
    cell = spec.cell
    s_nuc = config.s_nuc if config.s_nuc is not None else 2.0 * cell.spacing
    V = external_potential(spec, s_nuc=s_nuc)
    regime_flag = "negative_ion_regime" if (spec.mode == "molecular" and spec.N > spec.Z + 1e-12) else None

    n_occ = int(math.ceil(spec.N - 1e-12))
    block = config.eig_block or (n_occ + 3)
    count = min(n_occ + 2, block)
    eig_tol = config.eig_tol if config.eig_tol is not None else min(1e-9, 0.1 * config.tol)

    rho_in = _initial_density(spec, s_nuc)
    A_in = MagneticPotential.zero(cell)
    X_warm = None
    if initial is not None:
        orbs0, occ0, A0 = initial
        X_warm = np.asarray(orbs0, dtype=complex)
        vals = np.zeros((cell.n,) * 3)
        for nk, orb in zip(np.asarray(occ0, dtype=float), X_warm):
            vals += nk * np.sum(np.abs(orb) ** 2, axis=0)
        if vals.sum() > 0:
            rho_in = ScalarField(cell, vals * spec.N / (vals.sum() * cell.dV))
        if not config.pin_A:
            a_vals = A0.values if isinstance(A0, VectorField) else np.asarray(A0)
            A_in = MagneticPotential(VectorField(cell, a_vals), check_gauge=False)

    mixer = _AndersonMixer(config.anderson_depth, config.mix_rho) if config.anderson_depth else None

    # the eigensolver runs loose while the mean field is far from
    # self-consistent and tightens as the outer residual shrinks
    eig_tol_eff = max(eig_tol, 1e-5)

    def evaluate(rho: ScalarField, A: MagneticPotential, X0) -> _Iterate:
        v_h, _ = hartree(rho)
        v_eff = ScalarField(cell, V.values + v_h.values)
        apply_h = make_hamiltonian(cell, v_eff, None if A.is_zero() else A)
        levels, orbitals, _, _ = eigensolve(
            apply_h, cell, count, block=block, tol=eig_tol_eff,
            max_iter=config.eig_maxiter, X0=X0, seed=config.seed,
        )
        occ, fermi = fermi_fill(levels, spec.N, config.deg_threshold)
        gamma = DensityMatrix(
            tuple(SpinorField(cell, orbitals[i]) for i in range(len(occ))), occ, mode=spec.mode
        )
        rho_out = density(gamma)
        j = current(gamma)
        m = magnetisation(gamma)
        if config.pin_A:
            A_out = MagneticPotential.zero(cell)
        else:
            A_out = A
            for _ in range(config.a_inner_iters):
                A_out = update_vector_potential(j, m, rho_out, A_out, spec)
        energy = total_energy(gamma, A, spec, V=V)
        return _Iterate(gamma, orbitals, levels, occ, fermi, rho_out, j, m, A_out, energy)

    def mix(prev_rho, prev_A, out_rho, out_A, th_r, th_a):
        if mixer is not None:
            vals = mixer.push(prev_rho.values, out_rho.values)
            vals = np.maximum(vals, 0.0)
            vals *= spec.N / max(vals.sum() * cell.dV, 1e-300)
        else:
            vals = (1.0 - th_r) * prev_rho.values + th_r * out_rho.values
        new_rho = ScalarField(cell, vals)
        if config.pin_A:
            return new_rho, MagneticPotential.zero(cell)
        a_vals = (1.0 - th_a) * prev_A.A.values + th_a * out_A.A.values
        return new_rho, MagneticPotential(VectorField(cell, a_vals), check_gauge=False)

    energy_history: list[float] = []
    ledger: list[dict] = []
    forced = 0
    state: SCFState | None = None
    prev: _Iterate | None = None
    prev_inputs: tuple[ScalarField, MagneticPotential] | None = None
    mix_rho, mix_A = config.mix_rho, config.mix_A

    if config.max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    for it in range(1, config.max_iter + 1):
        try:
            cand = evaluate(rho_in, A_in, X_warm)
        except EigensolveError:
            if state is None:
                raise
            state.flag = "eigensolver_failed"
            return state
        if prev is not None:
            slack = max(abs(energy_history[-1]), 1.0) * config.energy_slack_rel
            halvings = 0
            while cand.energy.total > energy_history[-1] + slack and halvings < config.max_halvings:
                halvings += 1
                mix_rho = max(mix_rho / 2.0, 1e-3)
                mix_A = max(mix_A / 2.0, 1e-3)
                rho_in, A_in = mix(prev_inputs[0], prev_inputs[1], prev.rho_out, prev.A_out, mix_rho, mix_A)
                cand = evaluate(rho_in, A_in, X_warm)
            if cand.energy.total > energy_history[-1] + slack:
                forced += 1

        # residual triple at the iterate's own mean field
        v_h_out, _ = hartree(cand.rho_out)
        v_eff_out = ScalarField(cell, V.values + v_h_out.values)
        apply_out = make_hamiltonian(cell, v_eff_out, None if A_in.is_zero() else A_in)
        HX = apply_out(cand.orbitals)
        nmo = len(cand.occ)
        lam = np.real(
            np.sum(np.conjugate(cand.orbitals.reshape(nmo, -1)) * HX.reshape(nmo, -1), axis=1)
            * cell.dV
        )
        R = HX - lam[:, None, None, None, None] * cand.orbitals
        res_per = np.sqrt(np.sum(np.abs(R.reshape(nmo, -1)) ** 2, axis=1) * cell.dV)
        occupied = cand.occ > 1e-12
        res_orb = float(np.max(res_per[occupied] / np.maximum(1.0, np.abs(lam[occupied]))))
        res_field = (
            0.0
            if config.pin_A
            else _field_equation_residual(cand.j, cand.m, cand.rho_out, A_in, spec.alpha)
        )
        res_cont = _continuity_residual(cand.rho_out, cand.j, A_in)

        energy_history.append(cand.energy.total)
        if config.check_inequalities:
            rep = kinetic_inequality_report(cand.gamma, None if A_in.is_zero() else A_in)
            rep["iteration"] = it
            ledger.append(rep)

        state = SCFState(
            gamma=cand.gamma,
            A=A_in,
            energy=cand.energy,
            levels=cand.levels,
            fermi_energy=cand.fermi,
            iteration=it,
            residual_orbital=res_orb,
            residual_field=res_field,
            residual_continuity=res_cont,
            converged=False,
            flag=regime_flag,
            energy_history=tuple(energy_history),
            inequality_ledger=tuple(ledger),
            forced_energy_increases=forced,
        )
        if cand.energy.total < config.energy_floor:
            state.flag = "instability"
            return state
        if max(res_orb, res_field, res_cont) <= config.tol and eig_tol_eff <= eig_tol:
            state.converged = True
            return state
        eig_tol_eff = float(np.clip(0.03 * max(res_orb, res_field), eig_tol, 1e-5))

        prev = cand
        prev_inputs = (rho_in, A_in)
        rho_in, A_in = mix(rho_in, A_in, cand.rho_out, cand.A_out, mix_rho, mix_A)
        X_warm = cand.orbitals

    state.flag = state.flag or "not_converged"
    return state


@dataclass(frozen=True)
class AlphaScanRow:
    alpha: float
    energy: EnergyBreakdown
    converged: bool
    flag: str | None
    residuals: tuple[float, float, float]


def scan_alpha(
    spec: SystemSpec, alphas: "list[float] | np.ndarray", config: SCFConfig | None = None
) -> list[AlphaScanRow]:
    """Ground-state energy over an ascending list of couplings.

    Each solve is warm-started from the previous one; convergence
    failures are carried as row flags rather than raised.
    """
    alphas = [float(a) for a in alphas]
    if any(a <= 0 for a in alphas) or any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("alphas must be positive and strictly ascending")
    config = config or SCFConfig()
    rows: list[AlphaScanRow] = []
    warm = None
    for a in alphas:
        state = scf_solve(replace(spec, alpha=a), config, initial=warm)
        rows.append(
            AlphaScanRow(
                alpha=a,
                energy=state.energy,
                converged=state.converged,
                flag=state.flag,
                residuals=state.residuals,
            )
        )
        warm = (
            np.stack([orb.values for orb in state.gamma.orbitals]),
            state.gamma.occupations,
            state.A.A,
        )
    return rows


def concavity_defects(rows: list[AlphaScanRow]) -> np.ndarray:
    """Second divided differences of the energy against u = alpha^(-2).

    The ground-state energy is an infimum of functions linear and
    non-decreasing in ``u``, hence concave in ``u``: these defects
    should be non-positive up to solver noise.
    """
    u = np.array([r.alpha**-2 for r in rows])
    e = np.array([r.energy.total for r in rows])
    order = np.argsort(u)
    u, e = u[order], e[order]
    out = []
    for i in range(1, len(u) - 1):
        s1 = (e[i] - e[i - 1]) / (u[i] - u[i - 1])
        s2 = (e[i + 1] - e[i]) / (u[i + 1] - u[i])
        out.append(2.0 * (s2 - s1) / (u[i + 1] - u[i - 1]))
    return np.asarray(out)
