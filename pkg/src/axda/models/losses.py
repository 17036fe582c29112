"""Lipschitz losses from statistical learning, all 1-Lipschitz in the prediction."""

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from ..exceptions import DomainError


class LossTag(str, Enum):
    HINGE = "Hinge"
    HUBER = "Huber"
    LOGISTIC = "Logistic"
    PINBALL = "Pinball"
    ABSOLUTE = "Absolute"


@dataclass(frozen=True)
class LipschitzLoss:
    tag: LossTag
    delta: Optional[float] = None
    quantile: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "tag", LossTag(self.tag))
        if self.tag is LossTag.HUBER and not (self.delta is not None and self.delta > 0):
            raise DomainError("Huber loss needs delta > 0")
        if self.tag is LossTag.PINBALL and not (self.quantile is not None and 0 < self.quantile < 1):
            raise DomainError("pinball loss needs a quantile in (0, 1)")


def loss_eval(loss, y, t):
    """Return ``(value, lipschitz constant in t)``."""
    tag = loss.tag
    if tag in (LossTag.HINGE, LossTag.LOGISTIC) and y not in (-1, 1):
        raise DomainError(f"{tag.value} loss needs a label in {{-1, +1}}, got {y}")
    if tag is LossTag.HINGE:
        value = max(0.0, 1.0 - y * t)
    elif tag is LossTag.LOGISTIC:
        value = float(np.logaddexp(0.0, -y * t))
    elif tag is LossTag.HUBER:
        r = abs(y - t)
        value = r * r / (2.0 * loss.delta) if r <= loss.delta else r - loss.delta / 2.0
    elif tag is LossTag.PINBALL:
        q = loss.quantile
        value = q * max(0.0, t - y) + (1.0 - q) * max(0.0, y - t)
    else:
        value = abs(y - t)
    return float(value), 1.0
