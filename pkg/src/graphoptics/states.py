"""Target quantum states (GHZ, Bell pairs, multi-pair swapping) and overlap scores."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

from .graphs import QuantumState, VanishingStateError, ZERO_TOL, normalize_state


@dataclass(frozen=True)
class TargetState:
    """A labelled, unit-norm reference state."""

    state: QuantumState
    label: str = ""

    @property
    def num_sites(self) -> int:
        return self.state.num_sites

    @property
    def dims(self) -> tuple[int, ...]:
        return self.state.dims


def target_state(state: QuantumState | TargetState, label: str = "") -> TargetState:
    """Wrap an arbitrary state as a target, normalizing it first."""
    if isinstance(state, TargetState):
        return TargetState(state.state, label or state.label)
    return TargetState(normalize_state(state), label)


def ghz_state(n: int, d: int) -> TargetState:
    """Maximally entangled state of n particles in d dimensions: (1/sqrt d) sum_j |j..j>."""
    if n < 2:
        raise ValueError(f"GHZ state needs at least 2 particles, got n={n}")
    if d < 2:
        raise ValueError(f"GHZ state needs dimension >= 2, got d={d}")
    amp = 1.0 / math.sqrt(d)
    amps = {(j,) * n: complex(amp) for j in range(d)}
    return TargetState(QuantumState(n, (d,) * n, amps), f"GHZ(n={n},d={d})")


def bell_pair(d: int) -> TargetState:
    """d-dimensional maximally entangled pair: (1/sqrt d) sum_j |jj>."""
    if d < 2:
        raise ValueError(f"Bell pair needs dimension >= 2, got d={d}")
    ghz = ghz_state(2, d)
    return TargetState(ghz.state, f"Bell(d={d})")


def multi_pair_swap_target(n_pairs: int, d: int) -> TargetState:
    """Tensor product of n Bell pairs, pairing site k with site k + n_pairs.

    Party A holds sites 0..n_pairs-1, party B the rest, so the two halves of
    every pair sit on opposite sides.
    """
    if n_pairs < 1:
        raise ValueError(f"need at least one pair, got {n_pairs}")
    if d < 2:
        raise ValueError(f"Bell pairs need dimension >= 2, got d={d}")
    sites = 2 * n_pairs
    amp = complex(d ** (-n_pairs / 2.0))
    amps: dict[tuple[int, ...], complex] = {}
    for assignment in product(range(d), repeat=n_pairs):
        amps[tuple(assignment) + tuple(assignment)] = amp
    label = f"Swap(pairs={n_pairs},d={d})"
    return TargetState(QuantumState(sites, (d,) * sites, amps), label)


def _check_shapes(a: QuantumState, b: QuantumState) -> None:
    if a.num_sites != b.num_sites or a.dims != b.dims:
        raise ValueError(
            f"state shapes differ: {a.num_sites} sites {a.dims} vs {b.num_sites} sites {b.dims}"
        )


def inner_product(a: QuantumState, b: QuantumState) -> complex:
    """<a|b> = sum over shared kets of conj(a) * b."""
    _check_shapes(a, b)
    small, big = (a, b) if len(a.amplitudes) <= len(b.amplitudes) else (b, a)
    total = complex(0.0)
    for ket, amp in small.amplitudes.items():
        other = big.amplitudes.get(ket)
        if other is not None:
            pair = (amp.conjugate() * other) if small is a else (other.conjugate() * amp)
            total += pair
    return total


def fidelity(psi: QuantumState, target: TargetState | QuantumState) -> float:
    """|<target|psi>|^2 / <psi|psi>, scale-invariant in psi; 0 for a vanished psi."""
    t = target.state if isinstance(target, TargetState) else target
    _check_shapes(psi, t)
    norm_sq = sum(abs(a) ** 2 for a in psi.amplitudes.values())
    if norm_sq <= ZERO_TOL**2:
        return 0.0
    t_norm_sq = sum(abs(a) ** 2 for a in t.amplitudes.values())
    if t_norm_sq <= ZERO_TOL**2:
        raise VanishingStateError("target state has zero norm")
    overlap = inner_product(t, psi)
    return abs(overlap) ** 2 / (norm_sq * t_norm_sq)


def parse_target(spec: str) -> TargetState:
    """Build a named target from ``ghz:n,d``, ``bell:d``, or ``swap:n,d``."""
    kind, _, args = spec.strip().lower().partition(":")
    try:
        numbers = [int(a) for a in args.split(",")] if args else []
    except ValueError:
        raise ValueError(f"bad target arguments in {spec!r}") from None
    if kind == "ghz" and len(numbers) == 2:
        return ghz_state(*numbers)
    if kind == "bell" and len(numbers) == 1:
        return bell_pair(numbers[0])
    if kind == "swap" and len(numbers) == 2:
        return multi_pair_swap_target(*numbers)
    raise ValueError(
        f"unknown target {spec!r}; expected ghz:n,d | bell:d | swap:n,d"
    )
