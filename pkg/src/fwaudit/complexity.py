"""Rule-set complexity measures and the errors-vs-complexity predictor."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NotApplicable
from .ir import CHECKPOINT, PIX, FirewallConfig

# Lines of boilerplate present in even the smallest PIX configuration.
PIX_BOILERPLATE_LINES = 50


@dataclass(frozen=True)
class ComplexityInputs:
    rules: int
    objects: int
    interfaces: int
    lines: int | None = None

    def __post_init__(self):
        for name in ("rules", "objects", "interfaces"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.lines is not None and self.lines < 0:
            raise ValueError("lines must be non-negative")

    @classmethod
    def of(cls, config: FirewallConfig) -> "ComplexityInputs":
        lines = config.raw_line_count if config.vendor == PIX else None
        return cls(config.n_rules, config.n_objects, config.n_interfaces, lines)


def fc_checkpoint(rules: int, interfaces: int, objects: int) -> int:
    return rules * interfaces + objects


def fc_pix(lines: int) -> int:
    # floored at 1 so that log10 stays defined for tiny files
    return max(lines - PIX_BOILERPLATE_LINES, 1)


def firewall_complexity(config: FirewallConfig) -> int:
    """FC: #Rules x #Interfaces + #Objects, or #Lines - 50 for PIX."""
    if config.vendor == PIX:
        if config.raw_line_count is None:
            raise ValueError("PIX config has no line count")
        return fc_pix(config.raw_line_count)
    if config.vendor == CHECKPOINT:
        return fc_checkpoint(config.n_rules, config.n_interfaces, config.n_objects)
    raise NotApplicable(f"no complexity measure for vendor {config.vendor!r}")


def rc(rules: int, objects: int, interfaces: int) -> int:
    return rules + objects + math.comb(interfaces, 2)


def legacy_rc(config: FirewallConfig) -> int:
    """The older measure #Rules + #Objects + C(#Interfaces, 2).

    Only defined for Check Point style rule-sets.
    """
    if config.vendor != CHECKPOINT:
        raise NotApplicable(f"RC cannot be applied to {config.vendor} configurations")
    return rc(config.n_rules, config.n_objects, config.n_interfaces)


@dataclass(frozen=True)
class Prediction:
    raw: float
    display: float


def predicted_errors(fc: float, slope: float = 8.0, intercept: float = -10.0) -> Prediction:
    """Expected error count ~ 8*log10(FC) - 10; display value clamped at 0."""
    if not fc >= 1:
        raise ValueError(f"FC must be >= 1, got {fc}")
    raw = slope * math.log10(fc) + intercept
    return Prediction(raw, max(raw, 0.0))
