"""Monte-Carlo validation of the cost algebra.

Pairs are tracked as (delivered, phase_flipped) samples: a channel delivers
with its success probability and arrives phase-flipped with probability
1 - fidelity.  Swapping XORs the flip bits of its inputs, purification
post-selects on agreement.  Estimates tally delivery and flip rates over
many samples; a 4x4 density-matrix path provides an independent quantum
mechanical check for the dephasing channel.

Sample i always consumes the same counter-indexed slice of the Philox
stream keyed by the seed, so estimates are bit-identical no matter how the
work is chunked or how many workers run it.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import sqrt

import numpy as np

from .algebra import AlgebraDomainError, CostVector
from .graph import NetworkGraph
from .reduction import Leaf, Purify, StrategyTree, Swap, strategy_leaves

__all__ = [
    "DensityMatrix4",
    "McEstimate",
    "PairSample",
    "bell_fidelity",
    "dephase_bell",
    "estimate",
    "execute_strategy",
    "sample_channel",
]

_CHUNK = 1 << 16


@dataclass(frozen=True)
class PairSample:
    delivered: bool
    phase_flipped: bool


@dataclass(frozen=True)
class McEstimate:
    fidelity_hat: float | None
    success_hat: float
    std_error_fidelity: float | None
    std_error_success: float
    samples: int
    seed: int


def sample_channel(cost: CostVector, rng: np.random.Generator) -> PairSample:
    """Draw one pair from a channel: delivery, then a possible phase flip."""
    delivered = rng.random() < cost.success
    flipped = rng.random() < (1.0 - cost.fidelity)
    return PairSample(bool(delivered), bool(delivered and flipped))


def _check_tree(tree: StrategyTree, g: NetworkGraph) -> None:
    leaves = strategy_leaves(tree)
    if len(set(leaves)) != len(leaves):
        raise ValueError("strategy consumes a channel more than once")
    for cid in leaves:
        g.channel(cid)


def execute_strategy(
    tree: StrategyTree, g: NetworkGraph, rng: np.random.Generator
) -> PairSample:
    """Run one shot of a strategy tree against a graph's channels."""
    _check_tree(tree, g)
    ops = g.op_costs

    def walk(t: StrategyTree) -> tuple[bool, bool]:
        if isinstance(t, Leaf):
            s = sample_channel(g.channel(t.channel).cost, rng)
            return s.delivered, s.phase_flipped
        da, za = walk(t.left)
        db, zb = walk(t.right)
        if isinstance(t, Swap):
            ok = da and db and rng.random() < ops.swap_success
            return ok, za != zb
        ok = da and db and rng.random() < ops.purify_success
        if ops.physical_acceptance:
            ok = ok and za == zb
        return ok, za

    delivered, flipped = walk(tree)
    return PairSample(delivered, delivered and flipped)


def _slot_layout(tree: StrategyTree) -> tuple[list, int]:
    """Pre-order slot assignment: 2 draws per leaf, 1 per operation."""
    program: list = []
    counter = 0

    def assign(t: StrategyTree) -> None:
        nonlocal counter
        if isinstance(t, Leaf):
            program.append(("leaf", t.channel, counter))
            counter += 2
            return
        program.append(("begin", None, None))
        assign(t.left)
        assign(t.right)
        program.append(
            ("swap" if isinstance(t, Swap) else "purify", None, counter)
        )
        counter += 1

    assign(tree)
    return program, counter


def _run_chunk(
    tree: StrategyTree,
    g: NetworkGraph,
    seed: int,
    start: int,
    count: int,
    slots: int,
) -> tuple[int, int]:
    """Delivered / delivered-and-unflipped tallies for samples [start, start+count)."""
    slots4 = -(-slots // 4) * 4
    bits = np.random.Philox(key=seed)
    bits.advance((start * slots4) // 4)
    draws = np.random.Generator(bits).random(count * slots4)
    draws = draws.reshape(count, slots4)
    ops = g.op_costs

    def walk(t: StrategyTree, base: list[int]) -> tuple[np.ndarray, np.ndarray]:
        if isinstance(t, Leaf):
            col = base[0]
            base[0] += 2
            cost = g.channel(t.channel).cost
            delivered = draws[:, col] < cost.success
            flipped = draws[:, col + 1] < (1.0 - cost.fidelity)
            return delivered, flipped
        da, za = walk(t.left, base)
        db, zb = walk(t.right, base)
        col = base[0]
        base[0] += 1
        if isinstance(t, Swap):
            ok = da & db & (draws[:, col] < ops.swap_success)
            return ok, za ^ zb
        ok = da & db & (draws[:, col] < ops.purify_success)
        if ops.physical_acceptance:
            ok = ok & (za == zb)
        return ok, za

    delivered, flipped = walk(tree, [0])
    n_delivered = int(np.count_nonzero(delivered))
    n_unflipped = int(np.count_nonzero(delivered & ~flipped))
    return n_delivered, n_unflipped


def estimate(
    tree: StrategyTree,
    g: NetworkGraph,
    samples: int,
    seed: int,
    threads: int = 1,
) -> McEstimate:
    """Monte-Carlo estimate of a strategy's fidelity and success probability.

    The estimate depends only on (tree, graph, samples, seed); the thread
    count changes wall time, never the numbers.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if threads < 1:
        raise ValueError("threads must be >= 1")
    _check_tree(tree, g)
    _, slots = _slot_layout(tree)
    ranges = [
        (start, min(_CHUNK, samples - start))
        for start in range(0, samples, _CHUNK)
    ]
    if threads == 1 or len(ranges) == 1:
        tallies = [
            _run_chunk(tree, g, seed, start, count, slots)
            for start, count in ranges
        ]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            tallies = list(
                pool.map(
                    lambda rc: _run_chunk(tree, g, seed, rc[0], rc[1], slots),
                    ranges,
                )
            )
    delivered = sum(t[0] for t in tallies)
    unflipped = sum(t[1] for t in tallies)

    success_hat = delivered / samples
    se_success = sqrt(success_hat * (1.0 - success_hat) / samples)
    if delivered == 0:
        return McEstimate(None, 0.0, None, se_success, samples, seed)
    fidelity_hat = unflipped / delivered
    se_fidelity = sqrt(fidelity_hat * (1.0 - fidelity_hat) / delivered)
    return McEstimate(
        fidelity_hat, success_hat, se_fidelity, se_success, samples, seed
    )


_BELL = np.zeros((4, 4), dtype=np.complex128)
_BELL[0, 0] = _BELL[0, 3] = _BELL[3, 0] = _BELL[3, 3] = 0.5
_Z1 = np.diag([1.0, 1.0, -1.0, -1.0]).astype(np.complex128)


class DensityMatrix4:
    """A two-qubit density matrix: Hermitian, unit trace, positive."""

    def __init__(self, matrix: np.ndarray) -> None:
        m = np.asarray(matrix, dtype=np.complex128)
        if m.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > 1e-12:
            raise ValueError("matrix is not Hermitian within 1e-12")
        if abs(np.trace(m).real - 1.0) > 1e-12 or abs(np.trace(m).imag) > 1e-12:
            raise ValueError("trace differs from 1 by more than 1e-12")
        eigs = np.linalg.eigvalsh(m)
        if eigs.min() < -1e-10:
            raise ValueError(f"negative eigenvalue {eigs.min()} below -1e-10")
        self.matrix = m
        self.matrix.setflags(write=False)

    def __repr__(self) -> str:
        return f"DensityMatrix4(trace={np.trace(self.matrix).real:.3f})"


def dephase_bell(p: float) -> DensityMatrix4:
    """Bell pair through a dephasing channel of strength p.

    With probability p the state is untouched; otherwise it is replaced by
    the dephasing steady state (the average of the state and its image
    under Z on one qubit).
    """
    if not 0.0 <= p <= 1.0:
        raise AlgebraDomainError(f"channel strength {p!r} outside [0, 1]")
    steady = 0.5 * (_BELL + _Z1 @ _BELL @ _Z1)
    return DensityMatrix4(p * _BELL + (1.0 - p) * steady)


def bell_fidelity(state: DensityMatrix4) -> float:
    """Overlap of a two-qubit state with the Bell pair (|00> + |11>)/sqrt(2)."""
    return float(np.real(np.trace(_BELL @ state.matrix)))
