"""Messages and the minimal transport contract shared by every protocol layer."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Any, Callable, Protocol

# gossip layer
SHUFFLE_REQ = "SHUFFLE_REQ"
SHUFFLE_REP = "SHUFFLE_REP"
SIM_REQ = "SIM_REQ"
SIM_REP = "SIM_REP"
# structured layer
PING = "PING"
PONG = "PONG"
FIND_NODE = "FIND_NODE"
FIND_NODE_REP = "FIND_NODE_REP"
FIND_VALUE = "FIND_VALUE"
FIND_VALUE_REP = "FIND_VALUE_REP"
STORE = "STORE"
STORE_ACK = "STORE_ACK"
# query engine
QUERY_FWD = "QUERY_FWD"
QUERY_HIT = "QUERY_HIT"

MESSAGE_KINDS = (
    SHUFFLE_REQ, SHUFFLE_REP, SIM_REQ, SIM_REP,
    PING, PONG, FIND_NODE, FIND_NODE_REP, FIND_VALUE, FIND_VALUE_REP, STORE, STORE_ACK,
    QUERY_FWD, QUERY_HIT,
)


@dataclass(frozen=True, slots=True)
class Message:
    kind: str
    src: int
    dst: int
    body: Any
    # query id for cost accounting; None for background traffic
    qid: int | None = None


class Transport(Protocol):
    def send(self, msg: Message) -> None: ...

    def set_timer(self, owner: int, delay: int, callback: Callable[[], None]) -> None: ...

    def now(self) -> int: ...


class LocalTransport:
    """Zero-latency FIFO transport for driving protocol code outside the simulator.

    Messages are delivered in send order. Timers fire only once the message
    queue is empty, in the order they were set, which models "reply or time
    out" without a clock.
    """

    def __init__(self, nodes: dict[int, Any]):
        self.nodes = nodes
        self.queue: deque[Message] = deque()
        self.timers: deque[Callable[[], None]] = deque()
        self.sent = 0
        self.delivered = 0
        self.dropped = 0
        self.by_kind: dict[str, int] = {}

    def now(self) -> int:
        return 0

    def send(self, msg: Message) -> None:
        self.sent += 1
        self.by_kind[msg.kind] = self.by_kind.get(msg.kind, 0) + 1
        self.queue.append(msg)

    def set_timer(self, owner: int, delay: int, callback: Callable[[], None]) -> None:
        self.timers.append(callback)

    def run(self, until: Callable[[], bool] | None = None) -> None:
        while self.queue or self.timers:
            if until is not None and until():
                return
            if self.queue:
                msg = self.queue.popleft()
                node = self.nodes.get(msg.dst)
                if node is None or not getattr(node, "alive", True):
                    self.dropped += 1
                    continue
                self.delivered += 1
                node.receive(msg)
            else:
                self.timers.popleft()()
