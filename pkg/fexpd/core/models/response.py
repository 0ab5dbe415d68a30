from typing import Any, Dict, Optional

from pydantic import BaseModel, Field


class ReportMeta(BaseModel):
    config_hash: str = Field(..., description="SHA-256 prefix of the experiment config")
    command: str = Field(..., description="CLI command that produced the report")
    package_version: str = Field(..., description="Installed fexpd version")
    seeds: Optional[Dict[str, int]] = Field(
        None, description="Seeds used, keyed by replicate or chain label"
    )


class Report(BaseModel):
    success: bool = Field(True, description="Always true; failures write no report")
    message: Optional[str] = Field(None, description="Optional summary message")
    data: Optional[Any] = Field(None, description="Command payload")
    meta: ReportMeta = Field(..., description="Provenance of the report")


class SimulateManifest(BaseModel):
    truth_hash: str
    generator: Dict[str, str] = Field(
        ..., description="Generator used per file, with fallback notes"
    )
    notes: Dict[str, str] = Field(default_factory=dict)
    files: list[str]
    seeds: Dict[str, int]


class FitData(BaseModel):
    likelihood: str
    n: int
    summary: Dict[str, Any]
    gph: Optional[Dict[str, Any]] = None
    chains: list[str]


class BvmData(BaseModel):
    n: int
    k: int
    center: float
    sd: float
    replicates: list[Dict[str, Any]]
    median_ks: float
    median_var_ratio: float
    z_mean_mean: float
    z_mean_sd: float
    z_mean_ks: Optional[float] = None
    coverage_90: float


class RateStudyData(BaseModel):
    bias_dominance: bool
    rows: list[Dict[str, Any]]
