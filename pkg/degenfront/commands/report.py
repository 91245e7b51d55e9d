import logging
import math
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Tuple

from degenfront import __version__
from degenfront.commands.check import cached_checks, exit_code_for
from degenfront.commands.evolve import linear_decay
from degenfront.commands.front import resolve_profile
from degenfront.constants.defaults import CheckStatus
from degenfront.database import database_url, registry_session
from degenfront.db.crud.run import count_by_status
from degenfront.io_utils import ArtifactSet, atomic_write_text, format_float, json_text, read_json, report_digest
from degenfront.schemas.config import RunConfig
from degenfront.schemas.reports import CheckResult, Provenance, ReportBundle
from degenfront.services.checks import run_checks
from degenfront.services.linop import assemble_operator
from degenfront.services.profile import FrontProfile, asymptotic_rates
from degenfront.services.spectrum import eigen_spectrum

logger = logging.getLogger(__name__)

ARTIFACT = "artifact"
COMPUTED = "computed"


def _numeric(values: Dict[str, Any]) -> Dict[str, float]:
    """Flat float view of a summary; NaN (null once written to JSON) is left out."""
    out: Dict[str, float] = {}
    for key, value in values.items():
        if isinstance(value, (list, tuple)) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
            out[f"{key}_re"], out[f"{key}_im"] = float(value[0]), float(value[1])
        elif isinstance(value, (bool, int, float)):
            out[key] = float(value)
    return {key: value for key, value in out.items() if math.isfinite(value)}


def profile_section(p: FrontProfile) -> Dict[str, float]:
    rates = asymptotic_rates(p)
    return {
        "omega0": p.omega0,
        "n_nodes": float(p.n_nodes),
        "h": p.h,
        "eta": rates.eta,
        "eta_measured": rates.eta_measured,
        "a0": rates.a0,
        "a0_measured": rates.a0_measured,
        "curvature_limit": rates.curvature_limit,
        "curvature_measured": rates.curvature_measured,
        "ratio_sup": rates.ratio_sup,
        "first_order_residual": p.residual_stats.first_order,
    }


def spectrum_and_decay(cfg: RunConfig, p: FrontProfile) -> Tuple[Dict[str, float], Dict[str, float], Dict[str, str]]:
    """
    Spectrum and decay summaries, each from its artifact when present and
    computed in-process otherwise with the same initial perturbation the
    ``evolve`` subcommand uses. The third value names the source of each.
    """
    out = Path(cfg.output_dir)
    spectrum_file, evolve_file = out / "spectrum.json", out / "evolve.json"
    sources = {
        "spectrum": ARTIFACT if spectrum_file.exists() else COMPUTED,
        "decay": ARTIFACT if evolve_file.exists() else COMPUTED,
    }
    spectrum = decay = None
    if sources["spectrum"] == ARTIFACT:
        spectrum = _numeric(read_json(spectrum_file)["summary"])
    if sources["decay"] == ARTIFACT:
        decay = _numeric(read_json(evolve_file)["linear_decay"])
    if spectrum is None or decay is None:
        d = assemble_operator(p)
        r = eigen_spectrum(d, vectors=True)
        if spectrum is None:
            spectrum = _numeric(r.summary().model_dump())
        if decay is None:
            fit = linear_decay(cfg, p, d, r)[-1]
            decay = _numeric(fit.record().model_dump())
    logger.info("report sections: %s", sources)
    return spectrum, decay, sources


def text_summary(bundle: ReportBundle, digest: str) -> str:
    lines: List[str] = [
        f"degenfront report {bundle.provenance.code_version}",
        f"config {bundle.provenance.config_hash[:12]}  digest {digest[:12]}",
        "sources " + ", ".join(f"{key}={value}" for key, value in sorted(bundle.provenance.sources.items())),
        "",
        "profile",
    ]
    lines += [f"  {key:<22} {format_float(value)}" for key, value in sorted(bundle.profile.items())]
    lines += ["", "spectrum"]
    lines += [f"  {key:<22} {format_float(value)}" for key, value in sorted(bundle.spectrum.items())]
    lines += ["", "decay"]
    lines += [f"  {key:<22} {format_float(value)}" for key, value in sorted(bundle.decay.items())]
    lines += ["", "checks"]
    for check in bundle.checks:
        lines.append(f"  [{CheckStatus(check.status).value.upper():<7}] {check.name:<26} {check.detail}")
    return "\n".join(lines) + "\n"


def run_report(cfg: RunConfig, artifacts: ArtifactSet) -> int:
    started = datetime.utcnow()
    p = resolve_profile(cfg, allow_default=True)
    spectrum, decay, sources = spectrum_and_decay(cfg, p)
    checks: List[CheckResult] = cached_checks(cfg) or run_checks(cfg)

    registry: Dict[str, int] = {}
    try:
        with registry_session(database_url(cfg.output_dir)) as db:
            registry = count_by_status(db)
    except Exception as e:
        print(f"⚠️ Warning: run registry unavailable: {e}")

    bundle = ReportBundle(
        profile=profile_section(p),
        spectrum=spectrum,
        decay=decay,
        checks=checks,
        provenance=Provenance(
            config_hash=cfg.config_hash(),
            code_version=__version__,
            started_at=started,
            finished_at=datetime.utcnow(),
            registry=registry,
            sources=sources,
        ),
    )
    payload = bundle.model_dump(mode="json")
    digest = report_digest(payload)
    payload["digest"] = digest
    out = Path(cfg.output_dir)
    artifacts.add(atomic_write_text(out / "report.json", json_text(payload)))
    artifacts.add(atomic_write_text(out / "report.txt", text_summary(bundle, digest)))

    failed = sum(CheckStatus(c.status) == CheckStatus.FAIL for c in checks)
    glyph = "✅" if not failed else "❌"
    print(f"{glyph} report written to {out / 'report.json'} ({failed} failing check(s), digest {digest[:12]})")
    return exit_code_for(checks)
