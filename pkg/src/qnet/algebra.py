"""Cost-vector algebra for entanglement distribution.

A link is scored by a pair (fidelity, success probability).  Entanglement
swapping composes links in series, purification composes them in parallel,
and success probabilities multiply.  Log-loss turns the multiplicative
success bookkeeping into an additive one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

__all__ = [
    "AlgebraDomainError",
    "CostVector",
    "Fidelity",
    "GridSpec",
    "GridStrategy",
    "OperationCosts",
    "add_log_loss",
    "compose_success",
    "dephasing_bell_fidelity",
    "from_log_loss",
    "grid_cost",
    "purify_acceptance",
    "purify_chain",
    "purify_cost",
    "purify_fidelity",
    "purify_value",
    "swap_chain",
    "swap_cost",
    "swap_fidelity",
    "swap_inverse",
    "swap_value",
    "to_log_loss",
]

SINGULAR_EPS = 1e-12
PUNCTURE_EPS = 1e-9


class AlgebraDomainError(ValueError):
    """Raised for inputs outside an operation's domain."""


@dataclass(frozen=True)
class Fidelity:
    """A fidelity value.

    Physical fidelities live in [0, 1].  A *formal* fidelity may lie outside
    that interval; such values only arise as group-theoretic inverses and are
    rejected by every physical pipeline (cost vectors, graphs, routing).
    """

    value: float
    formal: bool = False

    def __post_init__(self) -> None:
        if not self.formal and not 0.0 <= self.value <= 1.0:
            raise AlgebraDomainError(
                f"physical fidelity {self.value!r} outside [0, 1]"
            )


def _physical(f: float | Fidelity, what: str = "fidelity") -> float:
    if isinstance(f, Fidelity):
        if f.formal:
            raise AlgebraDomainError(f"formal {what} {f.value!r} rejected")
        return f.value
    x = float(f)
    if not 0.0 <= x <= 1.0:
        raise AlgebraDomainError(f"{what} {x!r} outside [0, 1]")
    return x


def _success(p: float) -> float:
    x = float(p)
    if not 0.0 <= x <= 1.0:
        raise AlgebraDomainError(f"success probability {x!r} outside [0, 1]")
    return x


@dataclass(frozen=True)
class CostVector:
    """(fidelity, success probability) of one entangled pair."""

    fidelity: float
    success: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "fidelity", _physical(self.fidelity))
        object.__setattr__(self, "success", _success(self.success))


@dataclass(frozen=True)
class OperationCosts:
    """Success factors charged per operation.

    physical_acceptance controls whether the state-dependent acceptance
    probability of a purification round multiplies the success probability.
    """

    swap_success: float = 1.0
    purify_success: float = 1.0
    physical_acceptance: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "swap_success", _success(self.swap_success))
        object.__setattr__(self, "purify_success", _success(self.purify_success))


def swap_value(f1: float, f2: float) -> float:
    """Raw swap formula f1*f2 + (1-f1)*(1-f2), no domain checks.

    Exposed separately so group-law identities can be evaluated at formal
    (out-of-range) points.
    """
    return f1 * f2 + (1.0 - f1) * (1.0 - f2)


def swap_fidelity(f1: float | Fidelity, f2: float | Fidelity) -> float:
    """Fidelity after entanglement swapping two pairs."""
    return swap_value(_physical(f1), _physical(f2))


def swap_inverse(f: float | Fidelity) -> Fidelity:
    """The fidelity g with swap_value(f, g) == 1, namely f / (2f - 1).

    Undefined at the domain puncture f = 1/2.  The result is physical only
    for f in {0, 1}; everything else comes back flagged formal.
    """
    x = _physical(f)
    if abs(x - 0.5) <= PUNCTURE_EPS:
        raise AlgebraDomainError(f"no inverse at domain puncture f={x!r}")
    g = x / (2.0 * x - 1.0) + 0.0
    return Fidelity(g, formal=not 0.0 <= g <= 1.0)


def purify_value(f1: float, f2: float) -> float:
    """Raw purification quotient, checking only the singular denominator."""
    denom = f1 * f2 + (1.0 - f1) * (1.0 - f2)
    if abs(denom) <= SINGULAR_EPS:
        raise AlgebraDomainError(
            f"singular purification input ({f1!r}, {f2!r})"
        )
    return (f1 * f2) / denom

def purify_fidelity(f1: float | Fidelity, f2: float | Fidelity) -> float:
    """Fidelity after one purification round, conditioned on acceptance."""
    return purify_value(_physical(f1), _physical(f2))


def purify_acceptance(f1: float | Fidelity, f2: float | Fidelity) -> float:
    """Probability that a purification round accepts (both measurements agree)."""
    a, b = _physical(f1), _physical(f2)
    return a * b + (1.0 - a) * (1.0 - b)


def swap_chain(fs: Iterable[float | Fidelity]) -> float:
    """Left fold of swap_fidelity over a non-empty sequence."""
    vals = [_physical(f) for f in fs]
    if not vals:
        raise AlgebraDomainError("swap_chain of empty sequence")
    acc = vals[0]
    for v in vals[1:]:
        acc = swap_value(acc, v)
    return acc


def purify_chain(fs: Iterable[float | Fidelity]) -> float:
    """Fidelity of purifying n pairs down to one: prod(F) / (prod(F) + prod(1-F))."""
    vals = [_physical(f) for f in fs]
    if not vals:
        raise AlgebraDomainError("purify_chain of empty sequence")
    kept = math.prod(vals)
    lost = math.prod(1.0 - v for v in vals)
    if kept + lost <= SINGULAR_EPS:
        raise AlgebraDomainError("singular purification input in chain")
    return kept / (kept + lost)


def compose_success(ps: Iterable[float]) -> float:
    """Product of success probabilities."""
    total = 1.0
    for p in ps:
        total *= _success(p)
    return total


def to_log_loss(p: float) -> float:
    """-ln(success); 0 maps to the +infinity marker."""
    x = _success(p)
    if x == 0.0:
        return math.inf
    return -math.log(x) + 0.0


def from_log_loss(loss: float) -> float:
    """Inverse of to_log_loss."""
    if loss < 0.0:
        raise AlgebraDomainError(f"log-loss {loss!r} negative")
    return math.exp(-loss)


def add_log_loss(a: float, b: float) -> float:
    """Additive composition of log-losses (infinity absorbs)."""
    if a < 0.0 or b < 0.0:
        raise AlgebraDomainError("log-loss addends must be non-negative")
    return a + b


def swap_cost(c1: CostVector, c2: CostVector, ops: OperationCosts) -> CostVector:
    """Cost vector of swapping two pairs at a shared repeater."""
    return CostVector(
        swap_value(c1.fidelity, c2.fidelity),
        c1.success * c2.success * ops.swap_success,
    )


def purify_cost(c1: CostVector, c2: CostVector, ops: OperationCosts) -> CostVector:
    """Cost vector of purifying two pairs spanning the same nodes."""
    f = purify_value(c1.fidelity, c2.fidelity)
    s = c1.success * c2.success * ops.purify_success
    if ops.physical_acceptance:
        s *= purify_acceptance(c1.fidelity, c2.fidelity)
    return CostVector(f, s)


def dephasing_bell_fidelity(p: float) -> float:
    """Bell-pair fidelity (1 + p) / 2 after a dephasing channel of strength p."""
    x = float(p)
    if not 0.0 <= x <= 1.0:
        raise AlgebraDomainError(f"channel strength {x!r} outside [0, 1]")
    return (1.0 + x) / 2.0


class GridStrategy(Enum):
    PURIFY_THEN_SWAP = "purify-then-swap"
    SWAP_THEN_PURIFY = "swap-then-purify"


@dataclass(frozen=True)
class GridSpec:
    """A breadth x depth grid of identical channels.

    breadth parallel strands, each a chain of depth identical channels.
    """

    breadth: int
    depth: int
    channel_fidelity: float
    channel_success: float
    strategy: GridStrategy = GridStrategy.PURIFY_THEN_SWAP

    def __post_init__(self) -> None:
        if self.breadth < 1 or self.depth < 1:
            raise AlgebraDomainError("grid breadth and depth must be >= 1")
        object.__setattr__(
            self, "channel_fidelity", _physical(self.channel_fidelity)
        )
        object.__setattr__(
            self, "channel_success", _success(self.channel_success)
        )


def _acceptance_product(base: float, count: int) -> float:
    """Product of acceptance probabilities when purifying count copies of base."""
    total = 1.0
    for i in range(1, count):
        total *= purify_acceptance(purify_chain([base] * i), base)
    return total


def grid_cost(spec: GridSpec, ops: OperationCosts | None = None) -> CostVector:
    """End-to-end cost of a grid under the chosen operation order.

    PURIFY_THEN_SWAP purifies each rung of breadth channels, then swaps the
    depth purified segments; SWAP_THEN_PURIFY swaps each strand end to end,
    then purifies the breadth strand pairs.  The channel contribution to the
    success probability is computed in closed form, so for trivial operation
    costs it equals channel_success ** (breadth * depth) bit for bit.
    """
    if ops is None:
        ops = OperationCosts()
    f, s = spec.channel_fidelity, spec.channel_success
    b, d = spec.breadth, spec.depth
    success = s ** (b * d)
    if spec.strategy is GridStrategy.PURIFY_THEN_SWAP:
        rung = purify_chain([f] * b)
        fidelity = swap_chain([rung] * d)
        success *= ops.purify_success ** (d * (b - 1))
        success *= ops.swap_success ** (d - 1)
        if ops.physical_acceptance:
            success *= _acceptance_product(f, b) ** d
    else:
        strand = swap_chain([f] * d)
        fidelity = purify_chain([strand] * b)
        success *= ops.swap_success ** (b * (d - 1))
        success *= ops.purify_success ** (b - 1)
        if ops.physical_acceptance:
            success *= _acceptance_product(strand, b)
    return CostVector(fidelity, success)
