"""
Label -> case-study lookup used by configs ("example1", "ccc").

Every case is gradient-checked once per (label, class-K gain) the first time
it is requested.
"""

import logging
from functools import lru_cache
from typing import Callable, Dict, List

from .core import LinearClassK, check_gradient
from .errors import ConfigError
from .plants import CaseStudy, build_ccc, build_example1

logger = logging.getLogger(__name__)

GRADIENT_CHECK_POINTS = 200

_BUILDERS: Dict[str, Callable[[LinearClassK], CaseStudy]] = {
    "example1": build_example1,
    "ccc": build_ccc,
}


def register(label: str, builder: Callable[[LinearClassK], CaseStudy]) -> None:
    if label in _BUILDERS:
        raise ConfigError(f"Plant label '{label}' is already registered")
    _BUILDERS[label] = builder
    get_case.cache_clear()


def labels() -> List[str]:
    return sorted(_BUILDERS)


@lru_cache(maxsize=None)
def get_case(label: str, alpha_gain: float = 1.0) -> CaseStudy:
    """
    Build a registered case study with alpha(r) = alpha_gain * r.

    Raises:
        ConfigError: unknown label.
        GradientMismatchError: the barrier's analytic gradient is wrong.
    """
    try:
        builder = _BUILDERS[label]
    except KeyError:
        raise ConfigError(f"Unknown plant '{label}'; registered: {labels()}") from None
    case = builder(LinearClassK(alpha_gain))
    worst = check_gradient(case.barrier, case.domain.lo, case.domain.hi,
                           n_points=GRADIENT_CHECK_POINTS)
    logger.debug("[REGISTRY] %s gradient check passed (worst rel. error %.2e)", label, worst)
    return case
