import logging
from pathlib import Path

from degenfront.commands.front import resolve_profile
from degenfront.constants.defaults import ExitCode
from degenfront.io_utils import ArtifactSet, write_csv, write_json
from degenfront.schemas.config import RunConfig
from degenfront.schemas.reports import EigenRow
from degenfront.services.linop import assemble_operator
from degenfront.services.spectrum import SpectrumReport, classify_spectrum, eigen_spectrum, epsilon_sweep

logger = logging.getLogger(__name__)

EIGEN_COLUMNS = tuple(EigenRow.model_fields)


def write_eigenvalues(r: SpectrumReport, path: Path) -> Path:
    rows = [row.model_dump() for row in r.rows()]
    return write_csv(path, EIGEN_COLUMNS, [[row[name] for row in rows] for name in EIGEN_COLUMNS])


def run_spectrum(cfg: RunConfig, artifacts: ArtifactSet) -> int:
    p = resolve_profile(cfg)
    r = eigen_spectrum(assemble_operator(p), vectors=True)
    classification = classify_spectrum(r, p.kinetics)
    out = Path(cfg.output_dir)
    payload = {
        "summary": r.summary().model_dump(),
        "classification": classification.model_dump(),
        "borders": {"plus_max": float(r.borders[0].max()), "minus_max": float(r.borders[1].max())},
    }
    artifacts.add(write_json(out / "spectrum.json", payload))
    artifacts.add(write_eigenvalues(r, out / "eigenvalues.csv"))
    glyph = "✅" if classification.stable else "⚠️"
    print(f"{glyph} spectrum: lambda0 = {r.lambda0.real:.3e}, lambda1 = {r.lambda1.real:.6f}, beta = {r.beta:.6f}")
    for note in classification.notes:
        print(f"⚠️ {note}")
    return ExitCode.OK


def run_sweep(cfg: RunConfig, artifacts: ArtifactSet) -> int:
    p = resolve_profile(cfg)
    sweep = epsilon_sweep(p, cfg.spectral.epsilons)
    out = Path(cfg.output_dir) / "sweep"
    for eps, report in zip(sweep.epsilons, sweep.reports):
        artifacts.add(write_json(out / f"eps_{eps:.0e}.json", report.summary().model_dump()))
    artifacts.add(write_json(Path(cfg.output_dir) / "sweep.json", sweep.summary.model_dump()))
    summary = sweep.summary
    for entry in summary.entries:
        print(f"   eps={entry.epsilon:<8g} lambda1={entry.lambda1:+.6f} shift={entry.lambda1_shift:.2e}")
    glyph = "✅" if summary.continuity_ok else "⚠️"
    print(f"{glyph} sweep: continuity={summary.continuity_ok}, monotone={summary.monotone_ok}")
    return ExitCode.OK
