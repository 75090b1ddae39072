"""Result records and their JSON form."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Any


@dataclass
class TestResult:
    """Outcome of one dimension test for ``H0k``.

    ``statistic`` is the raw eigenvalue functional (``T_k`` or ``L_k``);
    ``df_or_mixture`` holds the reference law, either ``{"df": ...}`` or the
    weights and degrees of freedom of the chi-square mixture. ``details``
    carries method-specific by-products such as ``d_hat`` or ``sigma1_hat``.
    """

    __test__ = False  # keep pytest from collecting this class

    family: str
    k: int
    statistic: float
    p_value: float
    mode: str
    df_or_mixture: dict
    n: int
    p: int
    scatter: str | None = None
    H: int | None = None
    M: int | None = None
    seed: int | None = None
    warnings: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "TestResult":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in names})

    @classmethod
    def from_json(cls, text: str) -> "TestResult":
        return cls.from_dict(json.loads(text))


def _jsonable(obj: Any):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "tolist"):
        return _jsonable(obj.tolist())
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj
