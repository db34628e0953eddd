"""Run configuration: caps, tolerances and seeds."""
from __future__ import annotations

import os
from dataclasses import dataclass, field

DEFAULT_DENSE_CAP = 4096
ENV_DENSE_CAP = "QCLONE_DENSE_CAP"


def _env_cap() -> int:
    raw = os.environ.get(ENV_DENSE_CAP)
    if raw is None:
        return DEFAULT_DENSE_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ValueError(f"{ENV_DENSE_CAP} must be an integer, got {raw!r}") from exc
    if cap <= 0:
        raise ValueError(f"{ENV_DENSE_CAP} must be positive")
    return cap


@dataclass(frozen=True)
class RunConfig:
    dense_cap: int = field(default_factory=_env_cap)
    tol_spectral: float = 1e-10
    tol_psd: float = 1e-9
    tol_region: float = 1e-7
    seed: int = 0
    output_format: str = "json"

    def __post_init__(self) -> None:
        for name in ("dense_cap", "tol_spectral", "tol_psd", "tol_region"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        if self.output_format not in ("json", "csv", "text"):
            raise ValueError("output_format must be json, csv or text")


def dense_cap() -> int:
    """Current dense cap, honouring the environment override."""
    return _env_cap()
