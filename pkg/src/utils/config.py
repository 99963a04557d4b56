"""
Run configuration shared by every CLI subcommand.
Defaults follow the published preprocessing and training regime; only
paths may be overridden from the environment.
"""

import os
import logging
from dataclasses import asdict, dataclass, fields
from typing import Dict, Optional

from src.brain.preprocess import DEFAULT_MERGE_CAP, make_history_policy
from src.brain.supervision import DEFAULT_LAMBDA_SP, DEFAULT_LAMBDA_TR
from src.eval.metrics import DEFAULT_DRIFT_THRESHOLD, DEFAULT_SUCCESS_RADIUS
from src.flight.kinematics import get_action_space

logger = logging.getLogger(__name__)

ENV_EPISODES = "AVLN_EPISODES"
ENV_OUTPUT = "AVLN_OUTPUT"

# Fields that change how work is scheduled or where it is written, not what is computed.
NON_SEMANTIC_FIELDS = ("workers", "output")


@dataclass
class RunConfig:
    action_space: str = "aerialvln"
    merge_cap: int = DEFAULT_MERGE_CAP
    history_policy: str = "uniform"
    history_budget: int = 8
    success_radius: float = DEFAULT_SUCCESS_RADIUS
    drift_threshold: float = DEFAULT_DRIFT_THRESHOLD
    lambda_sp: float = DEFAULT_LAMBDA_SP
    lambda_tr: float = DEFAULT_LAMBDA_TR
    seed: int = 0
    max_steps: int = 500
    workers: int = 1
    episodes: Optional[str] = None
    output: Optional[str] = None

    def __post_init__(self):
        get_action_space(self.action_space)
        make_history_policy(self.history_policy, self.history_budget)
        if self.merge_cap < 1:
            raise ValueError(f"merge_cap must be >= 1, got {self.merge_cap}")
        if not self.success_radius > 0:
            raise ValueError(f"success_radius must be > 0, got {self.success_radius}")
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")

    @classmethod
    def from_sources(cls, overrides: Dict, environ: Dict = None) -> "RunConfig":
        """
        Resolve a config from flags and environment.

        Args:
            overrides: Flag values; None means "not given"
            environ: Environment mapping (defaults to os.environ)

        Returns:
            RunConfig where flags win over environment paths, which win over defaults
        """
        environ = os.environ if environ is None else environ
        names = {f.name for f in fields(cls)}
        values = {k: v for k, v in overrides.items() if k in names and v is not None}
        if "episodes" not in values and environ.get(ENV_EPISODES):
            values["episodes"] = environ[ENV_EPISODES]
        if "output" not in values and environ.get(ENV_OUTPUT):
            values["output"] = environ[ENV_OUTPUT]
        return cls(**values)

    @property
    def history(self):
        return make_history_policy(self.history_policy, self.history_budget)

    def to_dict(self) -> Dict:
        """Every field, as resolved."""
        return asdict(self)

    def provenance(self) -> Dict:
        """Fields that determine report contents; identical across worker counts and output paths."""
        return {k: v for k, v in self.to_dict().items() if k not in NON_SEMANTIC_FIELDS}
