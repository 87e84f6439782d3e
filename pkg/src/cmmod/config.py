"""Engine configuration: resource bounds, precision, cache location."""

from __future__ import annotations

import os
from dataclasses import dataclass


@dataclass(frozen=True)
class Config:
    """Bounds and knobs shared by the CLI and the engine entry points.

    lmax bounds the modular level allowed in formula atoms, nmax the formula
    arity handed to component decomposition, dmax the largest |discriminant|
    the CM searches may enumerate.  precision_bits drives all numeric
    evaluation.  cache_dir holds the modular-polynomial cache (None disables
    the on-disk cache).
    """

    lmax: int = 7
    nmax: int = 4
    dmax: int = 20000
    precision_bits: int = 512
    cache_dir: str | None = None
    output_format: str = "text"

    def __post_init__(self):
        if self.lmax < 1 or self.nmax < 1 or self.dmax < 3:
            raise ValueError("resource bounds must be positive (lmax, nmax >= 1, dmax >= 3)")
        if self.precision_bits < 64:
            raise ValueError("precision_bits must be at least 64")
        if self.output_format not in ("text", "json"):
            raise ValueError(f"unknown output format {self.output_format!r}")
        if self.cache_dir is not None and os.path.exists(self.cache_dir) and not os.path.isdir(self.cache_dir):
            raise ValueError(f"cache_dir {self.cache_dir!r} is not a directory")


DEFAULT_CONFIG = Config()
