from typing import List, Optional

from pydantic import BaseModel, confloat, conint, validator


class RunResult(BaseModel):
    seed: int
    strategy_id: str
    predictions: List[int]
    gold: List[int]
    test_ids: List[str] = []
    f1_macro: confloat(ge=0, le=1)
    member_steps: conint(ge=0)

    @validator("gold")
    def check_lengths(cls, value, values):
        if "predictions" in values and len(values["predictions"]) != len(value):
            raise ValueError("predictions ve gold aynı uzunlukta olmalı")
        return value


class FailedRun(BaseModel):
    seed: int
    strategy_id: str
    error: str


class ExperimentReport(BaseModel):
    """Bir stratejinin tohumlar üzerindeki özeti; tek tohumda std yoktur."""

    strategy_id: str
    results: List[RunResult]
    mean: float
    std: Optional[confloat(ge=0)] = None
    normalized_cost: Optional[float] = None
    failed: List[FailedRun] = []

    @property
    def std_available(self) -> bool:
        return self.std is not None

    @property
    def n_seeds(self) -> int:
        return len(self.results)

    @property
    def scores(self) -> List[float]:
        return [r.f1_macro for r in self.results]


class BoxplotStats(BaseModel):
    strategy_id: str
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    outliers: List[float] = []
