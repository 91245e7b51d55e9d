import logging
from pathlib import Path
from typing import List, Optional

from degenfront.constants.defaults import CheckStatus, ExitCode
from degenfront.io_utils import ArtifactSet, read_json, write_json
from degenfront.schemas.config import RunConfig
from degenfront.schemas.reports import CheckResult
from degenfront.services.checks import CHECK_NAMES, run_checks, tally

logger = logging.getLogger(__name__)

CHECKS_FILE = "checks.json"


def exit_code_for(results: List[CheckResult]) -> int:
    failed = any(CheckStatus(result.status) == CheckStatus.FAIL for result in results)
    return ExitCode.CHECK_FAILURE if failed else ExitCode.OK


def cached_checks(cfg: RunConfig) -> Optional[List[CheckResult]]:
    """Results of an earlier ``check`` run with the same config hash, if any."""
    path = Path(cfg.output_dir) / CHECKS_FILE
    if not path.exists():
        return None
    payload = read_json(path)
    if payload.get("config_hash") != cfg.config_hash():
        return None
    results = [CheckResult.model_validate(item) for item in payload.get("checks", [])]
    if [result.name for result in results] != list(CHECK_NAMES):
        return None
    logger.info("reusing check results from %s", path)
    return results


def run_check(cfg: RunConfig, artifacts: ArtifactSet) -> int:
    results = run_checks(cfg)
    payload = {
        "config_hash": cfg.config_hash(),
        "checks": [result.model_dump(mode="json") for result in results],
        "tally": tally(results),
    }
    artifacts.add(write_json(Path(cfg.output_dir) / CHECKS_FILE, payload))
    for result in results:
        glyph = {CheckStatus.PASS: "✅", CheckStatus.FAIL: "❌"}.get(CheckStatus(result.status), "⚠️")
        print(f"{glyph} {result.name:<26} {result.detail}")
    counts = payload["tally"]
    print(f"{counts['pass']} passed, {counts['fail']} failed, {counts['skipped']} skipped")
    return exit_code_for(results)
