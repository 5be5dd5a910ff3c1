"""Lowering from HighIR to MidIR and from MidIR to scalar instructions."""

from .low import lower_mid_to_low
from .mid import isolate_probes, lower_high_to_mid

__all__ = ["isolate_probes", "lower_high_to_mid", "lower_mid_to_low"]
