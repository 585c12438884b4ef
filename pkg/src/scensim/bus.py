"""In-process topic bus: synchronous fan-out, single-segment wildcards, and
request/response services.

Delivery is immediate and in publish order; there is no queueing and no
replay.  A subscriber raising does not prevent delivery to the remaining
subscribers; the failure is recorded on ``delivery_failures`` for the run
supervisor to report.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Callable

from .errors import ServiceCallError, ServiceError, ServiceUnavailableError, TopicError

_SEGMENT = r"[a-z0-9_]+"
_TOPIC_RE = re.compile(rf"^(/{_SEGMENT})+$")
_PATTERN_RE = re.compile(rf"^(/({_SEGMENT}|\*))+$")

CLOCK_TOPIC = "/sim/clock"
OBJECTS_TOPIC = "/sim/objects"
COLLISIONS_TOPIC = "/sim/collisions"
STATUS_TOPIC = "/scenario/status"


def validate_topic(topic: str) -> str:
    if not isinstance(topic, str) or not _TOPIC_RE.match(topic):
        raise TopicError(f"invalid topic {topic!r}")
    return topic


def validate_pattern(pattern: str) -> str:
    if not isinstance(pattern, str) or not _PATTERN_RE.match(pattern):
        raise TopicError(f"invalid topic pattern {pattern!r}")
    return pattern


def topic_matches(pattern: str, topic: str) -> bool:
    """True when the pattern matches; ``*`` matches exactly one segment."""
    psegs = pattern.split("/")[1:]
    tsegs = topic.split("/")[1:]
    if len(psegs) != len(tsegs):
        return False
    return all(p == "*" or p == t for p, t in zip(psegs, tsegs))


@dataclass(frozen=True)
class Message:
    topic: str
    seq: int
    sim_time: float
    payload: Any


@dataclass
class Subscription:
    pattern: str
    callback: Callable[[Message], None]
    active: bool = True


@dataclass(frozen=True)
class DeliveryFailure:
    topic: str
    seq: int
    pattern: str
    error: str


class MessageBus:
    """One bus per run; confined to the thread executing that run."""

    def __init__(self):
        self._subscriptions: list[Subscription] = []
        self._taps: list[Callable[[Message], None]] = []
        self._next_seq: dict[str, int] = {}
        self._last_time: dict[str, float] = {}
        self._services: dict[str, Callable[[Any], Any]] = {}
        self.delivery_failures: list[DeliveryFailure] = []

    def publish(self, topic: str, payload: Any, sim_time: float = 0.0) -> Message:
        """Deliver to all matching subscribers before returning.

        The bus assigns a per-topic sequence number starting at 0 and
        requires per-topic sim_time to be non-decreasing.
        """
        validate_topic(topic)
        last = self._last_time.get(topic)
        if last is not None and sim_time < last:
            raise TopicError(
                f"sim_time {sim_time} below previous {last} on topic {topic!r}"
            )
        seq = self._next_seq.get(topic, 0)
        self._next_seq[topic] = seq + 1
        self._last_time[topic] = sim_time
        msg = Message(topic, seq, sim_time, payload)
        for sub in list(self._subscriptions):
            if not sub.active or not topic_matches(sub.pattern, topic):
                continue
            try:
                sub.callback(msg)
            except Exception as exc:  # fan-out isolation
                self.delivery_failures.append(
                    DeliveryFailure(topic, seq, sub.pattern, f"{type(exc).__name__}: {exc}")
                )
        for tap in list(self._taps):
            tap(msg)
        return msg

    def subscribe(self, pattern: str, callback: Callable[[Message], None]) -> Subscription:
        validate_pattern(pattern)
        sub = Subscription(pattern, callback)
        self._subscriptions.append(sub)
        return sub

    def unsubscribe(self, sub: Subscription) -> None:
        sub.active = False
        if sub in self._subscriptions:
            self._subscriptions.remove(sub)

    def add_tap(self, callback: Callable[[Message], None]) -> None:
        """Observe every message regardless of topic; used by recording."""
        self._taps.append(callback)

    def message_count(self, topic: str) -> int:
        return self._next_seq.get(topic, 0)

    def provide(self, service: str, handler: Callable[[Any], Any]) -> None:
        if service in self._services:
            raise ServiceError(f"service {service!r} already has a provider")
        self._services[service] = handler

    def call(self, service: str, request: Any) -> Any:
        """Synchronous request/response; calls execute sequentially."""
        handler = self._services.get(service)
        if handler is None:
            raise ServiceUnavailableError(f"no provider for service {service!r}")
        try:
            return handler(request)
        except ServiceError:
            raise
        except Exception as exc:
            raise ServiceCallError(f"{service}: {type(exc).__name__}: {exc}") from exc
