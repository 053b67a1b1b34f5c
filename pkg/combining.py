"""
Beam-splitter trees for equal-weight diversity combining.

A tree is an ordered list of nodes (eta, slot_a, slot_b) over M slots.
Each node mixes the two slots on B(eta); the transmitted output stays in
slot_a and slot_b becomes an unused port. After the last node slot 0
holds the combined signal. Splitting runs the same nodes in reverse
against vacuum ancillas, so split followed by combine is the identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from check_physicality import check_physicality
from gaussian_core import GaussianState, apply_beam_splitter, make_vacuum, tensor_product, trace_out
from simulation_errors import DomainError

LAYOUTS = ("auto", "chain", "tree")


@dataclass(frozen=True)
class CombinerTree:
    """
    Args:
        M (int): Number of subchannels.
        etas (tuple[float, ...]): M - 1 transmission coefficients, one per node.
        nodes (tuple[tuple[int, int], ...]): (slot_a, slot_b) pairs in application order.
        layout (str): Descriptive name of the topology.

    Raises:
        DomainError: If the nodes do not merge every slot into slot 0 exactly once.
    """
    M: int
    etas: tuple[float, ...]
    nodes: tuple[tuple[int, int], ...]
    layout: str = "custom"

    def __post_init__(self):
        if self.M < 1:
            raise DomainError(f"M must be >= 1, got {self.M}.")
        if len(self.etas) != self.M - 1 or len(self.nodes) != self.M - 1:
            raise DomainError(f"A tree over {self.M} subchannels needs {self.M - 1} nodes and etas.")
        for eta in self.etas:
            if not 0.0 <= eta <= 1.0:
                raise DomainError(f"Beam-splitter coefficient must lie in [0, 1], got {eta}.")
        alive = set(range(self.M))
        for a, b in self.nodes:
            if a == b or a not in alive or b not in alive:
                raise DomainError(f"Node ({a}, {b}) does not join two live slots.")
            alive.discard(b)
        if alive != {0}:
            raise DomainError("The combined signal must end up in slot 0.")

    def discarded_slots(self) -> list[int]:
        return [b for _, b in self.nodes]


def _chain_plan(M: int) -> tuple[list[float], list[tuple[int, int]]]:
    etas = [np.sqrt(l / (l + 1.0)) for l in range(1, M)]
    return etas, [(0, l) for l in range(1, M)]


def _balanced_plan(M: int) -> tuple[list[float], list[tuple[int, int]]]:
    # Adjacent groups pair up level by level; an odd leftover moves up unchanged.
    groups = [[j] for j in range(M)]
    etas, nodes = [], []
    while len(groups) > 1:
        merged = []
        for k in range(0, len(groups) - 1, 2):
            left, right = groups[k], groups[k + 1]
            etas.append(np.sqrt(len(left) / (len(left) + len(right))))
            nodes.append((left[0], right[0]))
            merged.append(left + right)
        if len(groups) % 2:
            merged.append(groups[-1])
        groups = merged
    return etas, nodes


def equal_weight_tree(M: int, layout: str = "auto") -> CombinerTree:
    """
    Tree whose retained-path weights are all 1/sqrt(M).

    Args:
        M (int): Number of subchannels, >= 1.
        layout (str): 'chain' (each new subchannel joins the running sum),
            'tree' (left-leaning balanced pairing) or 'auto' (chain for
            M <= 3, balanced tree beyond).
    """
    if M < 1:
        raise DomainError(f"M must be >= 1, got {M}.")
    if layout not in LAYOUTS:
        raise DomainError(f"Unknown combiner layout '{layout}'; expected one of {LAYOUTS}.")
    if layout == "auto":
        layout = "chain" if M <= 3 else "tree"
    etas, nodes = _chain_plan(M) if layout == "chain" else _balanced_plan(M)
    return CombinerTree(M=M, etas=tuple(float(e) for e in etas), nodes=tuple(nodes), layout=layout)


def combine_weights(tree: CombinerTree) -> NDArray[np.float64]:
    """Per-subchannel coefficient of the retained output: products of η or sqrt(1 - η²) along each path."""
    weights = np.ones(tree.M)
    members = {slot: [slot] for slot in range(tree.M)}
    for eta, (a, b) in zip(tree.etas, tree.nodes):
        s = np.sqrt(1.0 - eta * eta)
        weights[members[a]] *= eta
        weights[members[b]] *= s
        members[a] = members[a] + members.pop(b)
    return weights


def _check_subchannel_modes(state: GaussianState, modes: Sequence[int], M: int):
    if len(modes) != M:
        raise DomainError(f"Expected {M} subchannel modes, got {len(modes)}.")
    if len(set(modes)) != M or any(not 0 <= m < state.n_modes for m in modes):
        raise DomainError(f"Invalid subchannel modes {list(modes)} for a {state.n_modes}-mode state.")


@check_physicality(strict=False)
def apply_combiner(state: GaussianState, subchannel_modes: Sequence[int], tree: CombinerTree) -> GaussianState:
    """
    Runs the tree over `subchannel_modes` (slot k ↔ subchannel_modes[k]) and
    traces out the unused ports. The combined mode keeps the position of
    subchannel_modes[0] among the surviving modes.
    """
    _check_subchannel_modes(state, subchannel_modes, tree.M)
    for eta, (a, b) in zip(tree.etas, tree.nodes):
        state = apply_beam_splitter(state, subchannel_modes[a], subchannel_modes[b], eta)
    if tree.M == 1:
        return state
    return trace_out(state, [subchannel_modes[b] for b in tree.discarded_slots()])


def split_modes(n_modes: int, mode: int, M: int) -> list[int]:
    """Subchannel mode indices produced by split_equally on an `n_modes`-mode state."""
    return [mode] + list(range(n_modes, n_modes + M - 1))


def split_equally(state: GaussianState, mode: int, M: int, tree: CombinerTree | None = None) -> GaussianState:
    """
    Splits `mode` into M subchannels of amplitude weight w_j (1/sqrt(M) for
    the equal-weight tree). Subchannel 0 stays in place, the other M - 1
    are appended after the existing modes (see split_modes).
    """
    tree = tree or equal_weight_tree(M)
    if tree.M != M:
        raise DomainError(f"Tree is built for {tree.M} subchannels, not {M}.")
    if not 0 <= mode < state.n_modes:
        raise DomainError(f"Mode index {mode} out of range for a {state.n_modes}-mode state.")
    if M == 1:
        return state
    modes = split_modes(state.n_modes, mode, M)
    state = tensor_product(state, make_vacuum(M - 1))
    for eta, (a, b) in reversed(list(zip(tree.etas, tree.nodes))):
        state = apply_beam_splitter(state, modes[a], modes[b], eta)
    return state
