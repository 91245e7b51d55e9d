from datetime import datetime
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from degenfront.constants.defaults import PROFILE_SCHEMA_VERSION, CheckStatus
from degenfront.schemas.kinetics import KineticsPair


class Violation(BaseModel):
    condition: str
    location: float
    value: float
    count: int = 1


class HypothesisReport(BaseModel):
    ok: bool
    violations: List[Violation] = []
    samples: int


class GridInfo(BaseModel):
    x_left: float
    x_right: float
    n_nodes: int
    h: float
    left_tol: float
    right_pad: float


class Anchor(BaseModel):
    x: float = 0.0
    phi: float


class ResidualStats(BaseModel):
    first_order: float
    inversion: float
    second_order: float


class ProfileSidecar(BaseModel):
    """JSON sidecar written next to the profile CSV"""
    schema_version: int = PROFILE_SCHEMA_VERSION
    omega0: float
    anchor: Anchor
    kinetics: KineticsPair
    grid: GridInfo
    residual_stats: ResidualStats
    phi_xx_at_omega0: Tuple[float, float]


class EigenRow(BaseModel):
    re: float
    im: float
    localization_mass_left: float
    mass_right: float
    participation: float
    alignment_with_phi_x: float
    essential_proxy: bool


class SpectrumSummary(BaseModel):
    """JSON form of a SpectrumReport (eigenvalue list goes to CSV)"""
    n: int
    epsilon: float
    h: float
    lambda0: Tuple[float, float]
    zero_mode_alignment: float
    lambda1: Tuple[float, float]
    gap: float
    mu1: float
    beta: float
    max_imag: float
    operator_scale: float
    zero_tol: float
    zero_count: int
    unstable_count: int
    essential_ceiling: Optional[float] = None


class SpectrumClassification(BaseModel):
    stable: bool
    gap_ok: bool
    zero_simple: bool
    notes: List[str] = []


class SweepEntry(BaseModel):
    epsilon: float
    lambda1: float
    lambda1_shift: float
    unstable_count: int
    essential_ceiling: Optional[float]
    border_max: float
    ceiling_ok: bool


class SweepSummary(BaseModel):
    entries: List[SweepEntry]
    continuity_ok: bool
    monotone_ok: bool


class DecayFitRecord(BaseModel):
    rate: float
    r_squared: float
    stderr: float
    confidence_interval: Tuple[float, float]
    window: Tuple[float, float]
    samples: int
    prefactor: float
    accepted: bool


class CheckResult(BaseModel):
    name: str
    status: CheckStatus
    value: Optional[float] = None
    threshold: Optional[str] = None
    detail: str = ""
    runtime_s: float = 0.0


class Provenance(BaseModel):
    config_hash: str
    code_version: str
    started_at: datetime
    finished_at: datetime
    registry: Dict[str, int] = Field(default_factory=dict)
    sources: Dict[str, str] = Field(default_factory=dict)  # "artifact" or "computed" per section


class ReportBundle(BaseModel):
    model_config = ConfigDict(use_enum_values=True)

    profile: Dict[str, float]
    spectrum: Dict[str, float]
    decay: Dict[str, float]
    checks: List[CheckResult]
    provenance: Provenance
