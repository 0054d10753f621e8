"""Node state machine: candidate -> head-set roles -> non-candidate, plus death."""

from __future__ import annotations

import enum

from .model import NodeState

S = NodeState


class StateEvent(enum.Enum):
    CHOSEN_AS_HEAD = "chosen_as_head"
    SELECTED_AS_ASSOCIATE = "selected_as_associate"
    TURN_TO_TRANSMIT = "turn_to_transmit"
    FRAME_SENT = "frame_sent"
    ITERATION_END = "iteration_end"
    ROUND_START = "round_start"
    ENERGY_EXHAUSTED = "energy_exhausted"


E = StateEvent

TRANSITIONS: dict[tuple[NodeState, StateEvent], NodeState] = {
    (S.CANDIDATE, E.CHOSEN_AS_HEAD): S.ACTIVE,
    (S.CANDIDATE, E.SELECTED_AS_ASSOCIATE): S.ASSOCIATE,
    (S.ASSOCIATE, E.TURN_TO_TRANSMIT): S.ACTIVE,
    (S.ACTIVE, E.FRAME_SENT): S.PASSIVE_ASSOCIATE,
    # next epoch of the same iteration
    (S.PASSIVE_ASSOCIATE, E.TURN_TO_TRANSMIT): S.ACTIVE,
    (S.ACTIVE, E.ITERATION_END): S.NON_CANDIDATE,
    (S.ASSOCIATE, E.ITERATION_END): S.NON_CANDIDATE,
    (S.PASSIVE_ASSOCIATE, E.ITERATION_END): S.NON_CANDIDATE,
    (S.NON_CANDIDATE, E.ROUND_START): S.CANDIDATE,
}


def transition(state: NodeState, event: StateEvent) -> NodeState:
    """Next state for ``event``; pairs without an edge leave the state unchanged."""
    if event is E.ENERGY_EXHAUSTED:
        return S.DEAD
    return TRANSITIONS.get((state, event), state)
