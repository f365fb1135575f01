"""Command line driver.

    magrhf <subcommand> --config <path> [--out <dir>] [--checkpoint <path>] [--seed <int>]

Subcommands: ``scf`` and ``scf-periodic`` run the self-consistent loop
for a molecule in a box or a crystal cell; ``zero-mode`` reports the
grid residual of the analytic kernel pair over a refinement ladder;
``beta-bound`` and ``alpha-c`` evaluate the rank-1 threshold bound;
``instability-scan`` tabulates the energy along the dilation path;
``alpha-scan`` maps the ground-state energy over couplings;
``tf-bound`` runs the Thomas-Fermi minimisation and the z^(7/6) chain;
``check-inequalities`` audits the kinetic inequalities on a fresh solve
and on the sampled zero mode.

Exit status: 0 when every residual in the record is below its
configured tolerance, 2 for a flagged (non-converged or violating) run,
1 for configuration or usage errors.  The environment variable
``MAGRHF_THREADS`` caps the FFT worker pool.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from dataclasses import replace

import numpy as np

from .constants import C2_DEFAULT, C_LT_CLASSICAL
from .density import density, kinetic_inequality_report
from .fields import Cell
from .runio import (
    CheckpointError,
    ConfigError,
    ResultRecord,
    RunConfig,
    checkpoint_load,
    checkpoint_save,
    parse_config,
    tagged,
)
from .scf import concavity_defects, scan_alpha, scf_solve
from .tfbound import RadialGrid, beta_lower_bound_chain, tf_minimize
from .zeromodes import (
    alpha_c_from_beta,
    beta_rank1_upper_bound,
    dilate,
    grid_residual,
    instability_scan,
    loss_yau,
    sample_on_cell,
)

SUBCOMMANDS = (
    "scf",
    "scf-periodic",
    "zero-mode",
    "beta-bound",
    "alpha-c",
    "instability-scan",
    "alpha-scan",
    "tf-bound",
    "check-inequalities",
)


def _energy_results(state) -> dict:
    e = state.energy
    return {
        "energy": {k: tagged(v, "hartree") for k, v in e.as_dict().items()},
        "fermi_energy": tagged(state.fermi_energy, "hartree"),
        "iterations": state.iteration,
        "levels": [tagged(v, "hartree") for v in np.asarray(state.levels).tolist()],
        "occupations": {"values": np.asarray(state.gamma.occupations).tolist(),
                        "unit": "dimensionless"},
        "trace": tagged(state.gamma.trace(), "dimensionless"),
        "field_energy_raw": tagged(state.A.field_energy_raw, "dimensionless"),
        "forced_energy_increases": state.forced_energy_increases,
        "inequality_violations": _violation_count(state),
    }


def _violation_count(state) -> int:
    return sum(
        1
        for r in state.inequality_ledger
        if not (r["lieb_thirring_ok"] and r["hoffmann_ostenhof_ok"] and r["sobolev_ok"])
    )


def _residuals_dict(state, tol: float) -> dict:
    return {
        "orbital": {"value": state.residual_orbital, "tolerance": tol, "unit": "hartree"},
        "field_equation": {"value": state.residual_field, "tolerance": tol, "unit": "relative"},
        "continuity": {"value": state.residual_continuity, "tolerance": tol, "unit": "relative"},
    }


def _run_scf(cfg: RunConfig, mode: str, checkpoint: str | None) -> ResultRecord:
    spec = cfg.system_spec(mode)
    scf_cfg = cfg.scf_config()
    initial = None
    if checkpoint:
        try:
            data = checkpoint_load(checkpoint)
            initial = data.initial_for(spec)
        except FileNotFoundError:
            initial = None  # fresh start; the file will be written on success
    state = scf_solve(spec, scf_cfg, initial=initial)
    record = ResultRecord(
        subcommand="scf" if mode == "molecular" else "scf-periodic",
        config=cfg,
        seed=cfg.seed,
        converged=state.converged,
        flags=tuple(f for f in (state.flag,) if f),
        results=_energy_results(state),
        residuals=_residuals_dict(state, scf_cfg.tol),
    )
    record.tables["energy_history"] = (
        ("iteration", "total_energy_hartree"),
        [(i + 1, e) for i, e in enumerate(state.energy_history)],
    )
    record.tables["inequalities"] = (
        ("iteration", "kinetic_trace", "lieb_thirring_lhs", "hoffmann_ostenhof_lhs",
         "sobolev_lhs", "ok"),
        [
            (
                r["iteration"],
                r["kinetic_trace"],
                r["lieb_thirring_lhs"],
                r["hoffmann_ostenhof_lhs"],
                r["sobolev_lhs"],
                int(r["lieb_thirring_ok"] and r["hoffmann_ostenhof_ok"] and r["sobolev_ok"]),
            )
            for r in state.inequality_ledger
        ],
    )
    if checkpoint:
        checkpoint_save(state, checkpoint)
    return record


def _run_zero_mode(cfg: RunConfig) -> ResultRecord:
    zm = cfg.zero_mode
    fam = dilate(loss_yau(zm.spin_direction), zm.dilation)
    rows = []
    for n in zm.box_ns:
        cell = Cell(zm.box_L, int(n))
        rows.append((int(n), grid_residual(fam, cell)))
    decreasing = all(b[1] < a[1] for a, b in zip(rows, rows[1:]))
    record = ResultRecord(
        subcommand="zero-mode",
        config=cfg,
        seed=cfg.seed,
        converged=decreasing,
        flags=() if decreasing else ("residual_not_decreasing",),
        results={
            "I1": tagged(fam.i1, "dimensionless"),
            "D1": tagged(fam.d1, "dimensionless"),
            "B2": tagged(fam.b2, "dimensionless"),
            "trace": tagged(fam.trace(), "dimensionless"),
            "kinetic_trace": tagged(fam.kinetic_trace(), "hartree"),
        },
        residuals={
            f"grid_n{n}": {"value": r, "tolerance": None, "unit": "relative"} for n, r in rows
        },
    )
    record.tables["residuals"] = (("n", "relative_residual"), rows)
    return record


def _run_beta_bound(cfg: RunConfig) -> ResultRecord:
    fam = loss_yau(cfg.zero_mode.spin_direction)
    rows = []
    for z in cfg.scan.zs:
        eps_star, beta_ub = beta_rank1_upper_bound(z, cfg.system.N, fam)
        rows.append((z, eps_star, beta_ub))
    record = ResultRecord(
        subcommand="beta-bound",
        config=cfg,
        seed=cfg.seed,
        results={
            "N": tagged(cfg.system.N, "dimensionless"),
            "rows": [
                {
                    "z": tagged(z, "dimensionless"),
                    "epsilon_star": tagged(e, "dimensionless"),
                    "beta_upper_bound": tagged(b, "hartree"),
                }
                for z, e, b in rows
            ],
        },
    )
    record.tables["beta"] = (("z", "epsilon_star", "beta_upper_bound"), rows)
    return record


def _run_alpha_c(cfg: RunConfig) -> ResultRecord:
    fam = loss_yau(cfg.zero_mode.spin_direction)
    rows = []
    for z in cfg.scan.zs:
        eps_star, beta_ub = beta_rank1_upper_bound(z, cfg.system.N, fam)
        rows.append((z, eps_star, beta_ub, alpha_c_from_beta(beta_ub)))
    record = ResultRecord(
        subcommand="alpha-c",
        config=cfg,
        seed=cfg.seed,
        results={
            "N": tagged(cfg.system.N, "dimensionless"),
            "rows": [
                {
                    "z": tagged(z, "dimensionless"),
                    "epsilon_star": tagged(e, "dimensionless"),
                    "beta_upper_bound": tagged(b, "hartree"),
                    "alpha_c_upper_bound": tagged(a, "dimensionless"),
                }
                for z, e, b, a in rows
            ],
        },
    )
    record.tables["alpha_c"] = (
        ("z", "epsilon_star", "beta_upper_bound", "alpha_c_upper_bound"),
        rows,
    )
    return record


def _run_instability_scan(cfg: RunConfig) -> ResultRecord:
    if len(cfg.system.nuclei) != 1:
        raise ConfigError("instability-scan supports a single nucleus only")
    z = cfg.system.nuclei[0].z
    fam = loss_yau(cfg.zero_mode.spin_direction)
    scan = instability_scan(z, cfg.system.N, cfg.system.alpha, list(cfg.scan.lambdas), fam)
    record = ResultRecord(
        subcommand="instability-scan",
        config=cfg,
        seed=cfg.seed,
        results={
            "alpha": tagged(scan.alpha, "dimensionless"),
            "alpha_c_upper_bound": tagged(scan.alpha_c_ub, "dimensionless"),
            "epsilon_star": tagged(scan.epsilon_star, "dimensionless"),
            "slope": tagged(scan.slope, "hartree"),
            "slope_fit": tagged(scan.slope_fit, "hartree"),
            "unstable": scan.unstable,
        },
    )
    record.tables["dilation"] = (
        ("lambda", "energy_hartree"),
        list(zip(scan.lambdas, scan.energies)),
    )
    return record


def _run_alpha_scan(cfg: RunConfig) -> ResultRecord:
    if not cfg.scan.alphas:
        raise ConfigError("alpha-scan requires a nonempty scan.alphas list")
    spec = cfg.system_spec()
    rows = scan_alpha(spec, list(cfg.scan.alphas), cfg.scf_config())
    defects = concavity_defects(rows) if len(rows) >= 3 else np.zeros(0)
    monotone = all(b.energy.total <= a.energy.total + 1e-7 for a, b in zip(rows, rows[1:]))
    all_conv = all(r.converged for r in rows)
    record = ResultRecord(
        subcommand="alpha-scan",
        config=cfg,
        seed=cfg.seed,
        converged=all_conv,
        flags=tuple(
            f"alpha={r.alpha}:{r.flag}" for r in rows if r.flag
        )
        + (() if monotone else ("energy_not_monotone",)),
        results={
            "monotone_nonincreasing": monotone,
            "concavity_defects": {"values": defects.tolist(), "unit": "hartree"},
            "max_concavity_defect": tagged(float(defects.max()) if defects.size else 0.0, "hartree"),
        },
    )
    record.tables["scan"] = (
        ("alpha", "total_energy_hartree", "converged"),
        [(r.alpha, r.energy.total, int(r.converged)) for r in rows],
    )
    return record


def _run_tf_bound(cfg: RunConfig) -> ResultRecord:
    grid = RadialGrid(cfg.tf.r_min, cfg.tf.r_max, cfg.tf.points)
    result = tf_minimize(grid, tol=cfg.tf.tol)
    constants = {
        "C_LT": cfg.constants.C_LT if cfg.constants.C_LT is not None else C_LT_CLASSICAL,
    }
    if cfg.constants.C_sobolev is not None:
        constants["C_sobolev"] = cfg.constants.C_sobolev
    rows = []
    for z in cfg.scan.zs:
        led = beta_lower_bound_chain(z, constants, i_tf=result.energy)
        rows.append((z, led.bound, led.chain_constant))
    record = ResultRecord(
        subcommand="tf-bound",
        config=cfg,
        seed=cfg.seed,
        converged=result.converged,
        flags=() if result.converged else ("tf_not_converged",),
        results={
            "I_TF": tagged(result.energy, "hartree"),
            "kkt_residual": tagged(result.kkt, "hartree"),
            "iterations": result.iterations,
            "chain_constant": tagged(rows[0][2] if rows else 0.0, "hartree"),
        },
        residuals={"tf_kkt": {"value": result.kkt, "tolerance": cfg.tf.tol, "unit": "hartree"}},
    )
    record.tables["bounds"] = (("z", "beta_lower_bound", "chain_constant"), rows)
    return record


def _run_check_inequalities(cfg: RunConfig) -> ResultRecord:
    spec = cfg.system_spec()
    state = scf_solve(spec, cfg.scf_config())
    violations = _violation_count(state)
    fam = loss_yau(cfg.zero_mode.spin_direction)
    cell = Cell(cfg.zero_mode.box_L, int(cfg.zero_mode.box_ns[0]))
    psi, pot = sample_on_cell(fam, cell)
    from .density import DensityMatrix

    gamma = DensityMatrix((psi.normalized(),), np.array([min(1.0, cfg.system.N)]))
    c_lt = cfg.constants.C_LT if cfg.constants.C_LT is not None else C_LT_CLASSICAL
    c2 = cfg.constants.C2 if cfg.constants.C2 is not None else C2_DEFAULT
    zm_report = kinetic_inequality_report(gamma, pot, c_lt=c_lt, c2=c2)
    zm_ok = bool(
        zm_report["lieb_thirring_ok"]
        and zm_report["hoffmann_ostenhof_ok"]
        and zm_report["sobolev_ok"]
    )
    ok = violations == 0 and zm_ok and state.converged
    record = ResultRecord(
        subcommand="check-inequalities",
        config=cfg,
        seed=cfg.seed,
        converged=ok,
        flags=tuple(
            f
            for f in (
                None if state.converged else "scf_not_converged",
                None if violations == 0 else f"scf_violations={violations}",
                None if zm_ok else "zero_mode_violation",
            )
            if f
        ),
        results={
            "scf_iterates_checked": len(state.inequality_ledger),
            "scf_violations": violations,
            "zero_mode": {k: (v if isinstance(v, bool) else tagged(v, "hartree"))
                          for k, v in zm_report.items()},
            "constants": {
                "C_LT": tagged(c_lt, "dimensionless"),
                "C2": tagged(c2, "dimensionless"),
            },
        },
        residuals=_residuals_dict(state, cfg.scf.tol),
    )
    rows = [
        (
            r["iteration"],
            r["kinetic_trace"],
            r["lieb_thirring_lhs"],
            r["hoffmann_ostenhof_lhs"],
            r["sobolev_lhs"],
            int(r["lieb_thirring_ok"] and r["hoffmann_ostenhof_ok"] and r["sobolev_ok"]),
        )
        for r in state.inequality_ledger
    ]
    record.tables["iterates"] = (
        ("iteration", "kinetic_trace", "lieb_thirring_lhs", "hoffmann_ostenhof_lhs",
         "sobolev_lhs", "ok"),
        rows,
    )
    return record


def run(subcommand: str, cfg: RunConfig, checkpoint: str | None = None) -> ResultRecord:
    """Dispatch one subcommand; returns the filled record (not yet written)."""
    t0 = time.perf_counter()
    if subcommand == "scf":
        record = _run_scf(cfg, "molecular", checkpoint)
    elif subcommand == "scf-periodic":
        record = _run_scf(cfg, "periodic", checkpoint)
    elif subcommand == "zero-mode":
        record = _run_zero_mode(cfg)
    elif subcommand == "beta-bound":
        record = _run_beta_bound(cfg)
    elif subcommand == "alpha-c":
        record = _run_alpha_c(cfg)
    elif subcommand == "instability-scan":
        record = _run_instability_scan(cfg)
    elif subcommand == "alpha-scan":
        record = _run_alpha_scan(cfg)
    elif subcommand == "tf-bound":
        record = _run_tf_bound(cfg)
    elif subcommand == "check-inequalities":
        record = _run_check_inequalities(cfg)
    else:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    record.elapsed_s = time.perf_counter() - t0
    return record


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="magrhf",
        description="Spectral workbench for the mean-field model with self-generated magnetic fields",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=False, default=None, help="JSON run configuration")
        p.add_argument("--out", default=None, help="output directory (default: config output.out_dir)")
        p.add_argument("--checkpoint", default=None, help="binary checkpoint path (scf only)")
        p.add_argument("--seed", type=int, default=None, help="override the configured seed")
    args = parser.parse_args(argv)

    try:
        if args.config is not None:
            with open(args.config) as fh:
                cfg = parse_config(fh.read())
        else:
            cfg = parse_config("{}")
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        record = run(args.subcommand, cfg, checkpoint=args.checkpoint)
    except (ConfigError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    out_dir = args.out or cfg.output.out_dir
    paths = record.write(out_dir)
    status = 0 if record.converged and not record.flags else 2
    print(f"{args.subcommand}: {'ok' if status == 0 else 'flagged'} "
          f"({record.elapsed_s:.1f} s), wrote {', '.join(paths)}")
    return status


if __name__ == "__main__":
    sys.exit(main())
