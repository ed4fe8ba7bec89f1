"""Rule-based conformance checking of one client/server session."""
from __future__ import annotations

from ..codec import MessageType
from ..netsim.packet import (
    ERROR_ON_ERROR,
    ERROR_ON_EVENT,
    MISSING_REQUEST,
    MISSING_RESPONSE,
    NORMAL,
)


class MixedEvidence(ValueError):
    def __init__(self, labels):
        super().__init__(f"session shows several violation types {sorted(labels)}")
        self.labels = frozenset(labels)


def violations(group) -> set[int]:
    """Violation labels found in a time-ordered session.

    ``group`` items only need a ``message_type`` attribute; all of them are
    assumed to share client and session id. Requests are answered in FIFO
    order by either a RESPONSE or an ERROR.
    """
    found = set()
    open_requests = 0
    prev = None
    for item in group:
        mt = item.message_type
        if mt is MessageType.REQUEST:
            open_requests += 1
        elif mt is MessageType.RESPONSE:
            if open_requests:
                open_requests -= 1
            else:
                found.add(MISSING_REQUEST)
        elif mt is MessageType.ERROR:
            if open_requests:
                open_requests -= 1
            elif prev is MessageType.NOTIFICATION:
                found.add(ERROR_ON_EVENT)
            else:
                # an error nothing legitimate asked for: answers an error
                found.add(ERROR_ON_ERROR)
        prev = mt
    if open_requests:
        found.add(MISSING_RESPONSE)
    return found


def conformance_oracle(group) -> int:
    found = violations(group)
    if len(found) > 1:
        raise MixedEvidence(found)
    return found.pop() if found else NORMAL
