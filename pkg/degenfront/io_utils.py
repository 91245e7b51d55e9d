"""
Artifact persistence: atomic writes, the profile CSV + JSON sidecar pair,
plot-ready CSV tables and sorted-key JSON reports.
"""
import csv
import hashlib
import io
import json
import logging
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
from pydantic import ValidationError

from degenfront.constants.defaults import FLOAT_FORMAT, PROFILE_COLUMNS, PROFILE_SCHEMA_VERSION
from degenfront.exceptions import ArtifactError
from degenfront.schemas.reports import GridInfo, ProfileSidecar
from degenfront.services.profile import FrontProfile, GridExtent

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def atomic_write_text(path: PathLike, text: str) -> Path:
    """Write to a temp file in the target directory, then rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=str(path.parent))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


class ArtifactSet:
    """Paths written by one subcommand; removed again if the subcommand fails."""

    def __init__(self):
        self.paths: List[Path] = []

    def add(self, path: Path) -> Path:
        self.paths.append(Path(path))
        return path

    def discard(self) -> None:
        for path in self.paths:
            try:
                path.unlink()
                logger.info("removed partial artifact %s", path)
            except FileNotFoundError:
                pass
        self.paths.clear()

    def names(self) -> List[str]:
        return [str(path) for path in self.paths]


def _fmt(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return FLOAT_FORMAT % float(value)


def csv_text(header: Sequence[str], columns: Sequence[Iterable[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in zip(*columns):
        writer.writerow([_fmt(value) for value in row])
    return buffer.getvalue()


def write_csv(path: PathLike, header: Sequence[str], columns: Sequence[Iterable[Any]]) -> Path:
    return atomic_write_text(path, csv_text(header, columns))


def _jsonable(value: Any) -> Any:
    """Non-finite floats become null; numpy scalars become Python numbers."""
    if isinstance(value, dict):
        return {str(key): _jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def json_text(payload: Any) -> str:
    return json.dumps(_jsonable(payload), indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False) + "\n"


def write_json(path: PathLike, payload: Any) -> Path:
    return atomic_write_text(path, json_text(payload))


def read_json(path: PathLike) -> Any:
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ArtifactError("file not found", path=str(path)) from exc
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"invalid JSON: {exc.msg}", path=str(path), line=exc.lineno) from exc


def _strip_volatile(value: Any) -> Any:
    if isinstance(value, dict):
        return {key: _strip_volatile(item) for key, item in value.items() if key not in ("provenance", "runtime_s")}
    if isinstance(value, list):
        return [_strip_volatile(item) for item in value]
    return value


def report_digest(payload: Dict[str, Any]) -> str:
    """sha256 over the hashable region: provenance and timings removed."""
    canonical = json.dumps(_jsonable(_strip_volatile(payload)), sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# Profile artifacts


def sidecar_path(csv_path: PathLike) -> Path:
    return Path(csv_path).with_suffix(".json")


def profile_sidecar(p: FrontProfile) -> ProfileSidecar:
    return ProfileSidecar(
        schema_version=PROFILE_SCHEMA_VERSION,
        omega0=p.omega0,
        anchor=p.anchor,
        kinetics=p.kinetics,
        grid=GridInfo(
            x_left=float(p.x_nodes[0]),
            x_right=float(p.x_nodes[-1]),
            n_nodes=p.n_nodes,
            h=p.h,
            left_tol=p.extent.left_tol,
            right_pad=p.extent.right_pad,
        ),
        residual_stats=p.residual_stats,
        phi_xx_at_omega0=p.phi_xx_at_omega0,
    )


def write_profile_csv(p: FrontProfile, path: PathLike) -> List[Path]:
    """Profile table at 17 significant digits plus its JSON sidecar; returns both paths."""
    path = Path(path)
    table = write_csv(path, PROFILE_COLUMNS, [p.x_nodes, p.phi, p.phi_x, p.phi_xx])
    sidecar = write_json(sidecar_path(path), profile_sidecar(p).model_dump(mode="json"))
    logger.debug("profile written to %s (%d nodes)", path, p.n_nodes)
    return [table, sidecar]


def _read_profile_table(path: Path) -> np.ndarray:
    try:
        handle = path.open(encoding="utf-8", newline="")
    except FileNotFoundError as exc:
        raise ArtifactError("file not found", path=str(path)) from exc
    rows: List[List[float]] = []
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise ArtifactError("empty profile file", path=str(path), line=1)
        if len(header) != len(PROFILE_COLUMNS):
            raise ArtifactError(
                f"schema v{PROFILE_SCHEMA_VERSION} requires {len(PROFILE_COLUMNS)} columns", path=str(path), line=1,
            )
        if tuple(name.strip() for name in header) != PROFILE_COLUMNS:
            raise ArtifactError(f"expected header {','.join(PROFILE_COLUMNS)}", path=str(path), line=1)
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(PROFILE_COLUMNS):
                raise ArtifactError(
                    f"schema v{PROFILE_SCHEMA_VERSION} requires {len(PROFILE_COLUMNS)} columns",
                    path=str(path), line=line,
                )
            try:
                rows.append([float(cell) for cell in row])
            except ValueError as exc:
                raise ArtifactError(f"unparsable number: {exc}", path=str(path), line=line) from exc
    if len(rows) < 11:
        raise ArtifactError("profile needs at least 11 nodes", path=str(path), nodes=len(rows))
    return np.array(rows)


def read_profile_csv(path: PathLike) -> FrontProfile:
    """
    Inverse of write_profile_csv. A sidecar omega0 farther than one grid step
    from the first node where phi vanishes is kept but flagged in ``warnings``.
    """
    path = Path(path)
    table = _read_profile_table(path)
    meta_path = sidecar_path(path)
    try:
        sidecar = ProfileSidecar.model_validate(read_json(meta_path))
    except ValidationError as exc:
        raise ArtifactError(f"invalid profile sidecar: {exc.errors()[0]['msg']}", path=str(meta_path)) from exc
    if sidecar.schema_version != PROFILE_SCHEMA_VERSION:
        raise ArtifactError(f"unsupported schema version {sidecar.schema_version}", path=str(meta_path))
    if sidecar.grid.n_nodes != table.shape[0]:
        raise ArtifactError(
            "sidecar node count does not match the table", path=str(meta_path),
            sidecar=sidecar.grid.n_nodes, table=table.shape[0],
        )

    x, phi, phi_x, phi_xx = (np.ascontiguousarray(table[:, i]) for i in range(4))
    h = float(x[1] - x[0])
    warnings: List[str] = []
    zeros = np.flatnonzero(phi == 0.0)
    csv_omega0 = float(x[zeros[0]]) if zeros.size else float(x[-1])
    if abs(csv_omega0 - sidecar.omega0) > h:
        message = f"sidecar omega0 {sidecar.omega0:.8f} inconsistent with the CSV support end {csv_omega0:.8f}"
        logger.warning("⚠️ %s", message)
        warnings.append(message)

    return FrontProfile(
        x_nodes=x,
        phi=phi,
        phi_x=phi_x,
        phi_xx=phi_xx,
        omega0=sidecar.omega0,
        anchor=sidecar.anchor,
        kinetics=sidecar.kinetics,
        extent=GridExtent(left_tol=sidecar.grid.left_tol, right_pad=sidecar.grid.right_pad),
        phi_xx_at_omega0=tuple(sidecar.phi_xx_at_omega0),
        residual_stats=sidecar.residual_stats,
        warnings=tuple(warnings),
    )


def format_float(value: Optional[float]) -> str:
    return "n/a" if value is None or not math.isfinite(value) else f"{value:.6g}"
