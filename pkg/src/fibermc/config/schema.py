"""
Configuration schema definitions using Pydantic.

Defines the YAML configuration structure for fitting, sampling and
fiber enumeration.
"""

from enum import Enum
from typing import Optional
from pydantic import BaseModel, ConfigDict, Field
import os
import re


def expand_env_vars(value: str) -> str:
    """Expand ${VAR} patterns in string with environment variable values."""
    pattern = r'\$\{([^}]+)\}'

    def replacer(match):
        var_name = match.group(1)
        return os.environ.get(var_name, match.group(0))

    return re.sub(pattern, replacer, value)


class StatisticName(str, Enum):
    PEARSON = "pearson-chi-square"
    LIKELIHOOD_RATIO = "likelihood-ratio"
    CONSTANT = "constant"


class FitConfig(BaseModel):
    """Iterative scaling controls."""
    model_config = ConfigDict(frozen=True)

    tol: float = Field(1e-10, gt=0)
    max_iter: int = Field(100_000, ge=1)


class ChainConfig(BaseModel):
    """Metropolis chain controls."""
    model_config = ConfigDict(frozen=True)

    burn_in: int = Field(50_000, ge=0)
    samples: int = Field(100_000, ge=1)
    thin: int = Field(1, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    replicates: int = Field(1, ge=1)
    statistic: StatisticName = StatisticName.PEARSON
    bin_width: float = Field(0.5, gt=0)
    workers: int = Field(1, ge=1)


class FiberConfig(BaseModel):
    """Exhaustive enumeration limits."""
    model_config = ConfigDict(frozen=True)

    cap: int = Field(1_000_000, ge=1)


class ScanConfig(BaseModel):
    """Reduced chain budget used for every candidate of a change-point scan."""
    model_config = ConfigDict(frozen=True)

    burn_in: int = Field(10_000, ge=0)
    samples: int = Field(20_000, ge=1)


class OutputConfig(BaseModel):
    hist_out: Optional[str] = None

    def model_post_init(self, __context):
        """Expand environment variables in paths."""
        if self.hist_out:
            object.__setattr__(self, 'hist_out', expand_env_vars(self.hist_out))


class RunConfig(BaseModel):
    """Root configuration file."""
    fit: FitConfig = Field(default_factory=FitConfig)
    chain: ChainConfig = Field(default_factory=ChainConfig)
    fiber: FiberConfig = Field(default_factory=FiberConfig)
    scan: ScanConfig = Field(default_factory=ScanConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)

    def scan_chain(self) -> ChainConfig:
        """Chain settings with the scan budget applied."""
        return self.chain.model_copy(
            update={"burn_in": self.scan.burn_in, "samples": self.scan.samples}
        )
