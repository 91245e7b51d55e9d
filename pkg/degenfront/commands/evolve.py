import logging
from pathlib import Path
from typing import Tuple

import numpy as np

from degenfront.commands.front import resolve_profile
from degenfront.constants.defaults import ExitCode
from degenfront.exceptions import ConfigError
from degenfront.io_utils import ArtifactSet, write_csv, write_json
from degenfront.schemas.config import InitialCondition, RunConfig
from degenfront.services.evolution import decay_advisory, evolve_nonlinear, gaussian_bump, shift_perturbation
from degenfront.services.linop import OperatorDiscretization, assemble_operator, smooth_random_vector
from degenfront.services.profile import FrontProfile
from degenfront.services.semigroup import (
    DecayFit,
    LinearTrajectory,
    default_t_end,
    discrete_projection,
    evolve_linear,
    fit_decay,
)
from degenfront.services.spectrum import SpectrumReport, eigen_spectrum

logger = logging.getLogger(__name__)


def _sup_scaled(u: np.ndarray, amplitude: float) -> np.ndarray:
    peak = float(np.max(np.abs(u), initial=0.0))
    return u * (amplitude / peak) if peak > 0.0 else u


def initial_perturbation(
    ic: InitialCondition, p: FrontProfile, d: OperatorDiscretization, r: SpectrumReport, seed: int,
) -> np.ndarray:
    """Interior-node perturbation described by the config's initial-condition block."""
    if ic.kind == "zero":
        return np.zeros(d.n)
    if ic.kind == "random":
        return _sup_scaled(smooth_random_vector(d, np.random.default_rng(seed), ic.bumps), ic.amplitude)
    if ic.kind == "phi_x":
        return _sup_scaled(np.array(d.phi_x), ic.amplitude)
    if ic.kind == "mode":
        mode = r.zero_mode
        if np.dot(mode, d.phi_x) < 0.0:
            mode = -mode
        return _sup_scaled(mode, ic.amplitude)
    if ic.kind == "bump":
        return gaussian_bump(p, ic.amplitude, ic.center, ic.width)
    if ic.kind == "shift":
        return shift_perturbation(p, ic.shift)
    raise ConfigError(f"unknown initial condition '{ic.kind}'", key="evolution.initial.kind")


def linear_decay(
    cfg: RunConfig, p: FrontProfile, d: OperatorDiscretization, r: SpectrumReport,
) -> Tuple[np.ndarray, float, LinearTrajectory, DecayFit]:
    """Initial perturbation, horizon, projected linear trajectory and its decay fit for this config."""
    evolution = cfg.evolution
    u0 = initial_perturbation(evolution.initial, p, d, r, cfg.seed)
    t_end = evolution.t_end or default_t_end(r.lambda1.real)
    traj = evolve_linear(d, u0, t_end, evolution.dt, evolution.theta, projection=discrete_projection(d, r))
    return u0, t_end, traj, fit_decay(traj, evolution.t_burn)


def run_evolve(cfg: RunConfig, artifacts: ArtifactSet) -> int:
    p = resolve_profile(cfg)
    d = assemble_operator(p)
    r = eigen_spectrum(d, vectors=True)
    evolution = cfg.evolution
    out = Path(cfg.output_dir)

    u0, t_end, traj, fit = linear_decay(cfg, p, d, r)
    artifacts.add(write_csv(
        out / "linear_trajectory.csv",
        ("t", "norm_u", "norm_Pu", "energy_Pu"),
        [traj.times, traj.norm_u, traj.norm_Pu, traj.energy_Pu],
    ))
    summary = {
        "lambda1": r.lambda1.real,
        "beta": r.beta,
        "t_end": t_end,
        "dt": evolution.dt,
        "theta": evolution.theta,
        "initial": evolution.initial.model_dump(),
        "linear_decay": fit.record().model_dump(),
    }
    glyph = "✅" if fit.accepted else "⚠️"
    print(f"{glyph} linear decay rate {fit.fitted_rate:.6f} (r^2 {fit.r_squared:.5f}) vs -lambda1 {-r.lambda1.real:.6f}")

    if evolution.nonlinear:
        run = evolve_nonlinear(
            p, u0, evolution.nonlinear_t_end, evolution.dt,
            record_every=evolution.record_every, snapshot_every=evolution.snapshot_every,
        )
        artifacts.add(write_csv(
            out / "nonlinear_trajectory.csv",
            ("t", "shift", "residual", "min_v", "max_v"),
            [run.times, run.shift_track, run.residual_track, run.min_v, run.max_v],
        ))
        if evolution.snapshot_every:
            header = ["x"] + [f"v@{t:g}" for t in run.snapshot_times]
            artifacts.add(write_csv(out / "snapshots.csv", header, [p.x_nodes, *run.snapshots]))
        advisory = decay_advisory(run, r.beta)
        summary["nonlinear"] = {
            "final_shift": float(run.shift_track[-1]),
            "final_residual": float(run.residual_track[-1]),
            "range_flags": len(run.range_flags),
            "boundary_warnings": run.boundary_warnings,
            "notes": list(run.notes),
            "advisory": None if advisory is None else {
                "rate": advisory.rate, "beta": advisory.beta, "within_band": advisory.within_band,
            },
        }
        print(f"✅ nonlinear run: shift {run.shift_track[-1]:+.6f}, residual {run.residual_track[-1]:.3e}")
        for note in run.notes:
            print(f"⚠️ {note}")

    artifacts.add(write_json(out / "evolve.json", summary))
    return ExitCode.OK
