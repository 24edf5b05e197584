"""Slider actuator channels (saturation + slew limit) and the fixed-rate clock."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Union

from .errors import InvalidInputError

DEFAULT_PEAKS = {"Thumb": 10.4, "Index": 10.1, "Middle": 10.2}
DEFAULT_SLEW = 500.0
DEFAULT_TICK_RATE = 1000


class Channel(str, enum.Enum):
    THUMB = "Thumb"
    INDEX = "Index"
    MIDDLE = "Middle"


@dataclass
class ActuatorChannel:
    channel: Channel
    peak_force: float
    slew_limit: float = DEFAULT_SLEW
    last_output: float = 0.0

    def __post_init__(self):
        self.channel = Channel(self.channel)
        if not self.peak_force > 0:
            raise InvalidInputError("peak_force must be > 0")
        if not self.slew_limit > 0:
            raise InvalidInputError("slew_limit must be > 0")
        if abs(self.last_output) > self.peak_force:
            raise InvalidInputError("last_output exceeds peak_force")

    @classmethod
    def default(cls, channel: Union[Channel, str], slew_limit: float = DEFAULT_SLEW):
        channel = Channel(channel)
        return cls(channel, DEFAULT_PEAKS[channel.value], slew_limit)


def default_channels(peaks=None, slew_limit: float = DEFAULT_SLEW) -> list[ActuatorChannel]:
    peaks = peaks or [DEFAULT_PEAKS[c.value] for c in Channel]
    return [ActuatorChannel(c, float(p), slew_limit) for c, p in zip(Channel, peaks)]


def command_force(ch: ActuatorChannel, demand: float, dt: float) -> float:
    """Apply ``demand`` through the channel's saturation and slew limit."""
    if not dt > 0:
        raise InvalidInputError("dt must be > 0")
    target = min(max(float(demand), -ch.peak_force), ch.peak_force)
    step = ch.slew_limit * dt
    if abs(target - ch.last_output) <= step * (1.0 + 1e-9):
        # within one step: land exactly, so ramps do not stall on rounding
        applied = target
    else:
        applied = min(max(target, ch.last_output - step), ch.last_output + step)
    # the slew window can reach past the peak only through rounding
    applied = min(max(applied, -ch.peak_force), ch.peak_force)
    ch.last_output = applied
    return applied


def settle_ticks(demand: float, ch: ActuatorChannel, dt: float) -> int:
    """Ticks a held demand needs from rest to reach its clamped value."""
    target = min(abs(demand), ch.peak_force)
    return math.ceil(target / (ch.slew_limit * dt))


@dataclass(frozen=True)
class SimClock:
    tick_rate: Fraction = Fraction(DEFAULT_TICK_RATE)
    tick_index: int = 0

    def __post_init__(self):
        rate = Fraction(self.tick_rate)
        if rate <= 0:
            raise InvalidInputError("tick_rate must be > 0")
        object.__setattr__(self, "tick_rate", rate)

    @property
    def exact_time(self) -> Fraction:
        return self.tick_index / self.tick_rate

    @property
    def time(self) -> float:
        return float(self.exact_time)

    @property
    def dt(self) -> float:
        return float(1 / self.tick_rate)


def advance(clock: SimClock) -> SimClock:
    return replace(clock, tick_index=clock.tick_index + 1)
