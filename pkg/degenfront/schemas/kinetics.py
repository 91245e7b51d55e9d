from typing import Annotated, Any, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

from degenfront.constants.defaults import MAX_POLY_DEGREE


def unwrap_kind(value: Any) -> Any:
    """
    Accept the key-wrapped config syntax ``{"quadratic": {"b": 1}}`` as well as
    the flat ``{"kind": "quadratic", "b": 1}`` form.
    """
    if isinstance(value, dict) and "kind" not in value and len(value) == 1:
        kind, params = next(iter(value.items()))
        if isinstance(params, dict):
            return {"kind": kind, **params}
    return value


class QuadraticDiffusion(BaseModel):
    """D(u) = u^2 + b u"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["quadratic"] = "quadratic"
    b: float


class PolynomialDiffusion(BaseModel):
    """D(u) = sum_k coefficients[k] u^k"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["custom_polynomial"] = "custom_polynomial"
    coefficients: Tuple[float, ...] = Field(min_length=1, max_length=MAX_POLY_DEGREE + 1)


class CubicReaction(BaseModel):
    """f(u) = u (1 - u) (u - alpha)"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["cubic"] = "cubic"
    alpha: float


class PolynomialReaction(BaseModel):
    """f(u) = sum_k coefficients[k] u^k; alpha defaults to the interior zero"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["custom_polynomial"] = "custom_polynomial"
    coefficients: Tuple[float, ...] = Field(min_length=1, max_length=MAX_POLY_DEGREE + 1)
    alpha: Optional[float] = None


DiffusionSpec = Annotated[Union[QuadraticDiffusion, PolynomialDiffusion], Field(discriminator="kind")]
ReactionSpec = Annotated[Union[CubicReaction, PolynomialReaction], Field(discriminator="kind")]


class KineticsPair(BaseModel):
    """
    Diffusion D and reaction f of the degenerate Nagumo equation.

    Hypotheses are not enforced here; ``validate_hypotheses`` reports them as data
    and the run configuration rejects out-of-range parameters.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    diffusion: DiffusionSpec
    reaction: ReactionSpec

    @field_validator("diffusion", "reaction", mode="before")
    @classmethod
    def _unwrap(cls, value: Any) -> Any:
        return unwrap_kind(value)

    @classmethod
    def quadratic_cubic(cls, b: float, alpha: float) -> "KineticsPair":
        return cls(diffusion=QuadraticDiffusion(b=b), reaction=CubicReaction(alpha=alpha))

    def label(self) -> str:
        if isinstance(self.diffusion, QuadraticDiffusion):
            diffusion = f"quadratic(b={self.diffusion.b!r})"
        else:
            diffusion = f"custom_polynomial({list(self.diffusion.coefficients)!r})"
        if isinstance(self.reaction, CubicReaction):
            reaction = f"cubic(alpha={self.reaction.alpha!r})"
        else:
            reaction = f"custom_polynomial({list(self.reaction.coefficients)!r})"
        return f"{diffusion} / {reaction}"
