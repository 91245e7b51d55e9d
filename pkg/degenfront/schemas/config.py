import hashlib
import json
from typing import Any, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, ValidationError, field_validator, model_validator

from degenfront.constants.defaults import (
    DEFAULT_DT,
    DEFAULT_EPSILONS,
    DEFAULT_LEFT_TOL,
    DEFAULT_N_NODES,
    DEFAULT_PHI_AT_ZERO,
    DEFAULT_RIGHT_PAD,
    DEFAULT_T_BURN,
    MAX_PERTURBATION,
)
from degenfront.exceptions import ConfigError
from degenfront.schemas.kinetics import (
    CubicReaction,
    DiffusionSpec,
    KineticsPair,
    PolynomialReaction,
    QuadraticDiffusion,
    ReactionSpec,
    unwrap_kind,
)
from degenfront.services.kinetics import balance_alpha, balance_alpha_for


class GridConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_nodes: int = Field(DEFAULT_N_NODES, ge=11, le=6001)
    left_tol: float = Field(DEFAULT_LEFT_TOL, gt=0.0, lt=0.5)
    right_pad: float = Field(DEFAULT_RIGHT_PAD, gt=0.0, le=10.0)
    phi_at_zero: float = Field(DEFAULT_PHI_AT_ZERO, gt=0.0, lt=1.0)


class SpectralConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    epsilons: Tuple[float, ...] = DEFAULT_EPSILONS
    n_refinements: int = Field(3, ge=3, le=5)
    base_nodes: int = Field(1001, ge=101, le=2001)

    @field_validator("epsilons")
    @classmethod
    def _descending(cls, value: Tuple[float, ...]) -> Tuple[float, ...]:
        if any(e <= 0.0 for e in value):
            raise ValueError("epsilons must be positive")
        if any(a <= b for a, b in zip(value, value[1:])):
            raise ValueError("epsilons must be sorted descending")
        return value


class InitialCondition(BaseModel):
    """Initial perturbation descriptor for the evolve subcommand"""
    model_config = ConfigDict(extra="forbid")

    kind: Literal["random", "phi_x", "mode", "bump", "shift", "zero"] = "random"
    amplitude: float = Field(0.05, ge=0.0, le=MAX_PERTURBATION)
    center: float = 0.0
    width: float = Field(0.5, gt=0.0)
    shift: float = Field(0.1, ge=-1.0, le=1.0)
    bumps: int = Field(8, ge=1, le=64)


class EvolutionConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dt: float = Field(DEFAULT_DT, gt=0.0, le=1.0)
    t_end: Optional[float] = Field(None, gt=0.0)  # default 30 / |lambda1|
    t_burn: float = Field(DEFAULT_T_BURN, ge=0.0)
    theta: float = Field(1.0, ge=0.5, le=1.0)
    initial: InitialCondition = InitialCondition()
    nonlinear: bool = True
    nonlinear_t_end: float = Field(10.0, gt=0.0)
    record_every: int = Field(10, ge=1)
    snapshot_every: int = Field(0, ge=0)


class CheckConfig(BaseModel):
    """Problem sizes used by the acceptance suite"""
    model_config = ConfigDict(extra="forbid")

    spectrum_nodes: int = Field(2001, ge=101, le=6001)
    identity_nodes: int = Field(4001, ge=101, le=6001)
    identity_vectors: int = Field(100, ge=1, le=1000)
    resolvent_nodes: int = Field(801, ge=101, le=4001)
    decay_starts: int = Field(5, ge=1, le=50)
    skip: List[str] = []


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    diffusion: DiffusionSpec = QuadraticDiffusion(b=1.0)
    reaction: Union[Literal["auto"], ReactionSpec] = "auto"
    grid: GridConfig = GridConfig()
    spectral: SpectralConfig = SpectralConfig()
    evolution: EvolutionConfig = EvolutionConfig()
    check: CheckConfig = CheckConfig()
    output_dir: str = "out"
    seed: int = Field(0, ge=0)

    _inline_kinetics: bool = PrivateAttr(default=False)

    @field_validator("diffusion", "reaction", mode="before")
    @classmethod
    def _unwrap(cls, value: Any) -> Any:
        return unwrap_kind(value)

    @field_validator("diffusion")
    @classmethod
    def _diffusion_range(cls, value: DiffusionSpec) -> DiffusionSpec:
        if isinstance(value, QuadraticDiffusion) and not value.b > 0.0:
            raise ValueError("b must be positive")
        return value

    @field_validator("reaction")
    @classmethod
    def _alpha_range(cls, value: Any) -> Any:
        alpha = getattr(value, "alpha", None)
        if isinstance(value, (CubicReaction, PolynomialReaction)) and alpha is not None and not 0.0 < alpha < 1.0:
            raise ValueError("alpha out of (0,1)")
        return value

    @model_validator(mode="after")
    def _resolve_auto(self) -> "RunConfig":
        self._inline_kinetics = bool({"diffusion", "reaction"} & self.model_fields_set)
        if self.reaction == "auto":
            if isinstance(self.diffusion, QuadraticDiffusion):
                alpha = balance_alpha(self.diffusion.b)
            else:
                alpha = balance_alpha_for(self.diffusion)
            self.reaction = CubicReaction(alpha=alpha)
        return self

    @property
    def inline_kinetics(self) -> bool:
        """Whether diffusion or reaction was given explicitly in the config text."""
        return self._inline_kinetics

    def kinetics(self) -> KineticsPair:
        return KineticsPair(diffusion=self.diffusion, reaction=self.reaction)

    def config_hash(self) -> str:
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _dotted(loc: Tuple[Union[int, str], ...]) -> str:
    # drop the union member tags pydantic inserts into locations
    skip = {"cubic", "custom_polynomial", "quadratic", "literal['auto']"}
    return ".".join(str(part) for part in loc if str(part).lower() not in skip)


def parse_config(text: str) -> RunConfig:
    """Validate UTF-8 JSON config text; defaults filled, reaction "auto" resolved."""
    try:
        data = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno, column=exc.colno) from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        errors = exc.errors()
        # the most specific location names the offending key best
        first = max(errors, key=lambda err: len(err["loc"]))
        message = first["msg"].removeprefix("Value error, ")
        raise ConfigError(message, key=_dotted(first["loc"]) or None, errors=len(errors)) from exc
