from pydantic import BaseModel, Field


class CoefficientTest(BaseModel):
    """Wald t-test of a single fixed effect with Satterthwaite degrees of freedom."""
    label: str
    estimate: float
    standard_error: float
    df: float = Field(gt=0)
    t_statistic: float
    p_value: float = Field(ge=0, le=1)
    alpha: float
    significant: bool
    ci_lower: float
    ci_upper: float
    df_fallback: bool = Field(default=False, description="True when df fell back to N - p")
