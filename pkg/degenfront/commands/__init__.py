"""
Subcommand dispatch: one handler per subcommand, each writing its artifacts
through an ArtifactSet so a failure leaves no partial files behind.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

from degenfront.commands.check import run_check
from degenfront.commands.evolve import run_evolve
from degenfront.commands.front import run_front
from degenfront.commands.report import run_report
from degenfront.commands.spectrum import run_spectrum, run_sweep
from degenfront.constants.defaults import ExitCode, Subcommand
from degenfront.database import database_url, registry_session
from degenfront.db.crud.run import create_run, finish_run
from degenfront.exceptions import DegenfrontError
from degenfront.io_utils import ArtifactSet
from degenfront.schemas.config import RunConfig

logger = logging.getLogger(__name__)

Handler = Callable[[RunConfig, ArtifactSet], int]

HANDLERS: Dict[Subcommand, Handler] = {
    Subcommand.FRONT: run_front,
    Subcommand.SPECTRUM: run_spectrum,
    Subcommand.EVOLVE: run_evolve,
    Subcommand.SWEEP: run_sweep,
    Subcommand.CHECK: run_check,
    Subcommand.REPORT: run_report,
}


@dataclass
class SubcommandResult:
    exit_code: int
    artifacts: List[str] = field(default_factory=list)
    error: Optional[str] = None


def _open_run(cfg: RunConfig, name: Subcommand) -> Optional[int]:
    try:
        with registry_session(database_url(cfg.output_dir)) as db:
            return create_run(db, name.value, cfg.config_hash(), cfg.seed).id
    except Exception as e:
        print(f"⚠️ Warning: could not register run: {e}")
    return None


def _close_run(cfg: RunConfig, run_id: Optional[int], result: SubcommandResult) -> None:
    if run_id is None:
        return
    try:
        with registry_session(database_url(cfg.output_dir)) as db:
            finish_run(db, run_id, result.exit_code, result.artifacts, result.error)
    except Exception as e:
        print(f"⚠️ Warning: could not update run {run_id}: {e}")


def run_subcommand(name: str, cfg: RunConfig) -> SubcommandResult:
    """
    Run one subcommand. Library errors become their exit code (2 config,
    3 numerical) with the artifacts written so far removed.
    """
    try:
        subcommand = Subcommand(name)
    except ValueError:
        return SubcommandResult(exit_code=ExitCode.CONFIG_ERROR, error=f"unknown subcommand '{name}'")

    run_id = _open_run(cfg, subcommand)
    artifacts = ArtifactSet()
    try:
        code = int(HANDLERS[subcommand](cfg, artifacts))
        result = SubcommandResult(exit_code=code, artifacts=artifacts.names())
    except DegenfrontError as exc:
        artifacts.discard()
        logger.error("❌ %s failed: %s", subcommand.value, exc)
        result = SubcommandResult(exit_code=int(exc.exit_code), error=str(exc))
    except BaseException:
        artifacts.discard()
        raise
    _close_run(cfg, run_id, result)
    return result
