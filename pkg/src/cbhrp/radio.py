"""First-order radio energy model (free-space d^2 path loss only)."""

from __future__ import annotations

import math

from .fsm import StateEvent, transition
from .model import Node, NodeState, RadioParams

DEFAULT_RADIO = RadioParams()


def _nonneg(**values: float) -> None:
    for name, value in values.items():
        if value < 0:
            raise ValueError(f"{name} must be >= 0, got {value}")


def tx_energy(bits: int, distance: float, radio: RadioParams = DEFAULT_RADIO) -> float:
    """Energy to send ``bits`` over ``distance`` metres."""
    _nonneg(bits=bits, distance=distance)
    return bits * radio.e_elec + bits * radio.eps_amp * distance**2


def rx_energy(bits: int, radio: RadioParams = DEFAULT_RADIO) -> float:
    _nonneg(bits=bits)
    return bits * radio.e_elec


def aggregate_energy(bits: int, n_signals: int, radio: RadioParams = DEFAULT_RADIO) -> float:
    """Energy to fuse ``n_signals`` signals of ``bits`` each into one frame."""
    _nonneg(bits=bits, n_signals=n_signals)
    return bits * n_signals * radio.e_da


def energy_quantum(total: float) -> float:
    """Power-of-two energy unit making every balance up to ``total`` exact.

    Charges rounded to this unit keep all balances, differences and running
    sums below ``total`` on the float grid, so energy ledgers add up exactly.
    """
    return 2.0 ** (math.ceil(math.log2(total)) - 52)


def quantize(amount: float, quantum: float) -> float:
    return round(amount / quantum) * quantum


def charge(node: Node, amount: float, quantum: float | None = None) -> Node:
    """Debit ``amount`` joules from ``node`` in place.

    Energy clamps at zero; a node drained to zero is dead. With ``quantum`` the
    amount is first rounded to a multiple of it. Returns the node.
    """
    if amount < 0:
        raise ValueError(f"amount must be >= 0, got {amount}")
    if quantum is not None:
        amount = quantize(amount, quantum)
    if amount == 0:
        return node
    if amount >= node.energy:
        node.energy = 0.0
        if node.state is not NodeState.DEAD:
            node.state = transition(node.state, StateEvent.ENERGY_EXHAUSTED)
            node.headset_rank = None
    else:
        node.energy -= amount
    return node
