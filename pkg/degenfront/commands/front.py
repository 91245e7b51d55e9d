import logging
from pathlib import Path
from typing import Optional

from degenfront.constants.defaults import ExitCode
from degenfront.exceptions import ConfigError, ProfileError
from degenfront.io_utils import ArtifactSet, read_profile_csv, sidecar_path, write_json, write_profile_csv
from degenfront.schemas.config import RunConfig
from degenfront.services.kinetics import validate_hypotheses
from degenfront.services.profile import (
    AsymptoticRates,
    FrontProfile,
    GridExtent,
    arrival_convergence,
    asymptotic_rates,
    solve_profile,
)

logger = logging.getLogger(__name__)

PROFILE_FILE = "profile.csv"


def profile_path(cfg: RunConfig) -> Path:
    return Path(cfg.output_dir) / PROFILE_FILE


def compute_profile(cfg: RunConfig) -> FrontProfile:
    k = cfg.kinetics()
    hypotheses = validate_hypotheses(k)
    for violation in hypotheses.violations:
        logger.warning("⚠️ hypothesis %s violated at u=%.4g (value %.3g)", violation.condition, violation.location, violation.value)
    extent = GridExtent(left_tol=cfg.grid.left_tol, right_pad=cfg.grid.right_pad)
    return solve_profile(k, cfg.grid.phi_at_zero, extent, cfg.grid.n_nodes)


def resolve_profile(cfg: RunConfig, allow_default: bool = False) -> FrontProfile:
    """
    The profile artifact in the output directory when it matches the run's
    kinetics, otherwise a fresh solve from inline kinetics (or from the
    default kinetics when ``allow_default`` is set).
    """
    path = profile_path(cfg)
    if path.exists() and sidecar_path(path).exists():
        p = read_profile_csv(path)
        if not cfg.inline_kinetics or p.kinetics == cfg.kinetics():
            logger.info("using profile artifact %s", path)
            return p
        logger.warning("⚠️ %s was computed for %s; solving for the configured kinetics", path, p.kinetics.label())
    if not (cfg.inline_kinetics or allow_default):
        raise ConfigError("missing profile input", key="profile", expected=str(path))
    return compute_profile(cfg)


def run_front(cfg: RunConfig, artifacts: ArtifactSet) -> int:
    p = compute_profile(cfg)
    for path in write_profile_csv(p, profile_path(cfg)):
        artifacts.add(path)

    rates = _measured_rates(p)
    convergence = arrival_convergence(p.kinetics, cfg.grid.phi_at_zero)
    diagnostics = {
        "omega0": p.omega0,
        "rates": _rates_record(rates),
        "arrival_convergence": {
            "panels": list(convergence.panels),
            "omega0": list(convergence.omega0_values),
            "order": convergence.order,
        },
        "residual_stats": p.residual_stats.model_dump(),
    }
    artifacts.add(write_json(Path(cfg.output_dir) / "front_diagnostics.json", diagnostics))
    print(f"✅ front: omega0 = {p.omega0:.8f} on {p.n_nodes} nodes (h = {p.h:.3e})")
    if rates is not None and not rates.within_tolerance:
        print(f"⚠️ measured decay rates off by more than 2%: {rates.agreement()}")
    return ExitCode.OK


def _measured_rates(p: FrontProfile) -> Optional[AsymptoticRates]:
    try:
        return asymptotic_rates(p)
    except ProfileError as exc:
        logger.warning("⚠️ decay rates unavailable on %d nodes: %s", p.n_nodes, exc)
        return None


def _rates_record(rates: Optional[AsymptoticRates]) -> Optional[dict]:
    if rates is None:
        return None
    return {
        "eta": rates.eta,
        "eta_measured": rates.eta_measured,
        "a0": rates.a0,
        "a0_measured": rates.a0_measured,
        "curvature_limit": rates.curvature_limit,
        "curvature_measured": rates.curvature_measured,
        "b0_measured": rates.b0_measured,
        "ratio_sup": rates.ratio_sup,
        "within_tolerance": rates.within_tolerance,
    }
