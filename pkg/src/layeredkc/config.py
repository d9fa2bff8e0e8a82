from dataclasses import dataclass
from typing import Optional

DEFAULT_MAX_REQUEST_LENGTH = 4096
DEFAULT_FULL_UNIVERSE_BOUND = 12


@dataclass(frozen=True)
class Limits:
    """
    Limits shared by the solvers and coders.

    Args:
        max_request_length: longest code length any solver will allocate
        full_universe_bound: largest N for which every string of length <= N is enumerated
        adaptive_run_limit: cap on consecutive adaptive stages (None derives it from Q)
    """
    max_request_length: int = DEFAULT_MAX_REQUEST_LENGTH
    full_universe_bound: int = DEFAULT_FULL_UNIVERSE_BOUND
    adaptive_run_limit: Optional[int] = None


DEFAULT_LIMITS = Limits()
