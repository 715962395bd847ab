"""Seeded random event generator (the black-box baseline).

Events are aimed at random screen coordinates and hit-tested against the
current UI, mirroring the real tool's blindness: it taps whatever sits
under the finger, types short random strings, and knows nothing about
element identity or textfield semantics.
"""

from __future__ import annotations

from dataclasses import dataclass

from .app_model import (
    AppModel,
    DeviceState,
    Event,
    identify_element,
    run_event_chain,
)
from .rng import Xoshiro256StarStar
from .session import Session, SessionRunner
from .telephony import TelephonyPolicy

SCREEN_WIDTH = 1080
SCREEN_HEIGHT = 1920

NAV_KINDS = ("click", "long_click", "scroll", "set_text")
SYSTEM_KEYS = ("home", "back", "volume_up", "volume_down", "call", "endcall")

TEXT_MIN_LEN = 1
TEXT_MAX_LEN = 8


@dataclass(frozen=True)
class MonkeyConfig:
    seed: int = 0
    pct_syskeys: int = 0
    pct_appswitch: int = 0
    throttle_ms: int = 50  # metadata only; the simulation never sleeps
    event_count: int = 500
    package: str = ""

    def __post_init__(self):
        if not 0 <= self.pct_syskeys <= 100:
            raise ValueError("pct_syskeys must be in [0, 100]")
        if not 0 <= self.pct_appswitch <= 100:
            raise ValueError("pct_appswitch must be in [0, 100]")
        if self.event_count < 1:
            raise ValueError("event_count must be >= 1")


def _generate_one(rng: Xoshiro256StarStar, config: MonkeyConfig,
                  app: AppModel, device: DeviceState) -> Event:
    roll = rng.percent()
    if roll < config.pct_syskeys:
        return Event.system_key(rng.choice(SYSTEM_KEYS))
    if roll < config.pct_syskeys + config.pct_appswitch:
        return Event.app_switch()

    kind = rng.choice(NAV_KINDS)
    x = rng.randrange(SCREEN_WIDTH)
    y = rng.randrange(SCREEN_HEIGHT)
    target = None
    if not device.crashed:
        ctx = device.context(app.package)
        for el in app.ui_state(ctx.activity, ctx.state).elements:
            if el.contains(x, y):
                target = identify_element(ctx.activity, el)
                break
    if kind == "set_text":
        value = rng.alnum(TEXT_MIN_LEN + rng.randrange(TEXT_MAX_LEN - TEXT_MIN_LEN + 1))
        return Event.set_text(target, value)
    return Event(kind, target=target)


def generate_events(config: MonkeyConfig, app: AppModel,
                    device: DeviceState) -> list[Event]:
    """Produce exactly ``event_count`` events for the given seed.

    Generation simulates forward on a private device copy (with the same
    telephony-loopback semantics a session applies) because coordinate
    hit-testing depends on whatever screen the previous event led to.
    After a crash the hierarchy is gone and taps hit nothing.
    """
    rng = Xoshiro256StarStar(config.seed)
    policy = TelephonyPolicy(app.own_number)
    device = device.clone()
    events = []
    for _ in range(config.event_count):
        event = _generate_one(rng, config, app, device)
        events.append(event)
        if not device.crashed:
            device, _ = run_event_chain(device, app, event, policy)
    return events


def run_monkey(app: AppModel, device: DeviceState, config: MonkeyConfig,
               runner: SessionRunner | None = None) -> Session:
    """Drive a session with the random stream, stopping early on crash.

    When an existing runner is passed (the combined-engine case) its
    session accumulates the monkey phase; otherwise a fresh runner is
    created over the given device.
    """
    if runner is None:
        runner = SessionRunner(app, device)
    if runner.device.crashed:
        runner.session.crashed = True
        return runner.session
    rng = Xoshiro256StarStar(config.seed)
    for _ in range(config.event_count):
        if runner.session.crashed:
            break
        event = _generate_one(rng, config, app, runner.device)
        runner.step(event)
    return runner.session
