"""Request and response models for the HTTP service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

Mode = Literal["small", "great", "ks", "var", "lr", "bic"]


class LevelReport(BaseModel):
    level: int
    sphere_dim: int
    choice: str
    angle: float
    test_name: Optional[str] = None
    statistic: Optional[float] = None
    p_value: Optional[float] = None
    rss_great: Optional[float] = None
    rss_small: Optional[float] = None
    converged: bool


class FitReport(BaseModel):
    n: int
    ambient_dim: int
    mode: Mode
    alpha: float
    levels: list[LevelReport]
    final_mean: Optional[float]
    cumulative_radii: list[float]
    variance_explained: list[float]
    free_parameters: int
    truncated: bool
    pca_pct_variance: Optional[float] = None
    pca_p: Optional[int] = None


class FitRequest(BaseModel):
    data: list[list[float]]
    mode: Mode = "small"
    alpha: float = Field(default=0.05, gt=0.0, le=0.5)


class FitResponse(BaseModel):
    model: dict
    scores: list[list[float]]
    residuals: list[list[float]]
    report: FitReport


class FastPnsRequest(BaseModel):
    data: list[list[float]]
    p: Optional[int] = Field(default=None, ge=1)
    mode: Mode = "small"
    alpha: float = Field(default=0.05, gt=0.0, le=0.5)


class ScoresRequest(BaseModel):
    model: dict
    data: list[list[float]]


class ScoresResponse(BaseModel):
    scores: list[list[float]]


class ReconstructRequest(BaseModel):
    model: dict
    scores: list[list[float]]
    lift: Literal["exact", "tangent", "extrinsic"] = "exact"


class ReconstructResponse(BaseModel):
    points: list[list[float]]


class BiplotRequest(BaseModel):
    model: dict
    data: list[list[float]]
    labels: Optional[list[str]] = None
    grid_points: int = Field(default=41, ge=3)
    pair: tuple[int, int] = (1, 2)


class PathReport(BaseModel):
    variable_index: int
    path_length: float
    clipped: bool


class BiplotResponse(BaseModel):
    svg: str
    paths_csv: str
    scores_csv: str
    paths: list[PathReport]
    ranking: list[int]


class SimulateRequest(BaseModel):
    dim: int = Field(ge=1)
    n: int = Field(ge=1)
    radii: list[float]
    noise_sd: float = Field(ge=0.0)
    pns1_sd: Optional[float] = Field(default=None, gt=0.0)
    seed: int = Field(ge=0)


class SimulateResponse(BaseModel):
    data: list[list[float]]
    truth: dict


class CalibrateRequest(BaseModel):
    test: Literal["ks", "var", "lr"]
    replicates: int = Field(default=1000, ge=100)
    n: int = Field(default=100, ge=10)
    dim: int = Field(default=2, ge=2)
    noise_sd: float = Field(default=0.1, gt=0.0)
    alpha: float = Field(default=0.05, gt=0.0, le=0.5)
    seed: int = Field(default=0, ge=0)


class CalibrateResponse(BaseModel):
    test: str
    replicates: int
    n: int
    dim: int
    noise_sd: float
    alpha: float
    seed: int
    rejection_rate: float
    p_uniform_ks: float
    p_value_mean: float
