"""Emission and retrieval primitives for the atomic-ensemble sources.

A short off-resonant Raman pulse leaves each ensemble in a number-correlated
(two-mode-squeezed-form) state of the collective spin mode and the emitted
Stokes mode: amplitudes proportional to pc^(n/2) on |n, n>. Retrieval swaps a
stored collective excitation back onto an anti-Stokes photon mode through a
lossy channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import (
    MixedState,
    ModeLabel,
    ModeRegistry,
    OpticalElement,
    PureState,
    apply_unitary,
    project_occupation,
)


@dataclass(frozen=True)
class SourceParams:
    """Knobs of one Raman pair source.

    pc: single-spin-flip excitation probability per pulse (dimensionless).
    n_max: highest kept excitation order; must fit the truncation.
    """

    pc: float
    n_max: int = 2

    def __post_init__(self):
        if not 0.0 <= self.pc < 0.5:
            raise ValueError(f"pc={self.pc} outside the perturbative range [0, 0.5)")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")


@dataclass(frozen=True)
class PumpPhysical:
    """Physical pump parameters, in any one consistent unit system.

    g_c: atom-field coupling constant; n_density: linear atom density;
    length: ensemble length; omega: Rabi frequency magnitude; delta:
    detuning (nonzero, sign irrelevant); t_p: pulse duration; c: speed of
    light in the chosen units.
    """

    g_c: float
    n_density: float
    length: float
    omega: float
    delta: float
    t_p: float
    c: float

    def __post_init__(self):
        for name in ("g_c", "n_density", "length", "omega", "t_p", "c"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.delta == 0:
            raise ValueError("delta must be nonzero")


def pc_from_physical(p: PumpPhysical) -> float:
    """Excitation probability 4 g_c^2 N L / c * |Omega|^2 / Delta^2 * t_p."""
    return 4.0 * p.g_c**2 * p.n_density * p.length / p.c * p.omega**2 / p.delta**2 * p.t_p


def raman_pair_state(
    params: SourceParams,
    atomic: ModeLabel,
    photon: ModeLabel,
    registry: ModeRegistry,
) -> PureState:
    """Normalized number-correlated emission state on |n, n>, n = 0..n_max."""
    if params.n_max >= registry.d:
        raise ValueError(
            f"n_max={params.n_max} does not fit truncation d={registry.d}"
        )
    ai = registry.index(atomic)
    pi = registry.index(photon)
    zero = registry.zero_pattern()
    amp: dict[tuple[int, ...], complex] = {}
    for n in range(params.n_max + 1):
        pattern = list(zero)
        pattern[ai] = n
        pattern[pi] = n
        amp[tuple(pattern)] = params.pc ** (n / 2.0)
    return PureState(registry, amp).normalize()


def dualrail_emit(
    pc: float,
    atomic0: ModeLabel,
    atomic1: ModeLabel,
    photon_v: ModeLabel,
    photon_h: ModeLabel,
    registry: ModeRegistry,
    heralded: bool = True,
) -> PureState:
    """Single-ensemble dual-rail emission, quarter-wave relabeling built in.

    The two decay branches populate (atomic0, photon_v) and (atomic1,
    photon_h) with equal amplitude: the left-circular emission lands on the
    V output, the right-circular one on H. With ``heralded`` the vacuum
    component is projected out; otherwise it carries weight 1 - pc.
    """
    if not 0.0 <= pc < 1.0:
        raise ValueError(f"pc={pc} outside [0, 1)")
    zero = registry.zero_pattern()

    def one(atom: ModeLabel, phot: ModeLabel) -> tuple[int, ...]:
        pattern = list(zero)
        pattern[registry.index(atom)] = 1
        pattern[registry.index(phot)] = 1
        return tuple(pattern)

    branch = 1.0 / math.sqrt(2.0)
    if heralded:
        amp = {one(atomic0, photon_v): branch, one(atomic1, photon_h): branch}
        return PureState(registry, amp)
    amp = {
        zero: math.sqrt(1.0 - pc),
        one(atomic0, photon_v): math.sqrt(pc) * branch,
        one(atomic1, photon_h): math.sqrt(pc) * branch,
    }
    return PureState(registry, amp)


def retrieve(
    state: PureState | MixedState,
    atomic: ModeLabel,
    anti_stokes: ModeLabel,
    efficiency: float,
) -> MixedState:
    """Convert a stored collective excitation into an anti-Stokes photon.

    Swaps the atomic occupation onto the (initially empty) anti-Stokes mode,
    then passes it through a loss channel with the given survival
    probability. Returns the resulting ensemble.
    """
    from .noise import apply_loss  # late import, noise builds on this module's types

    if not 0.0 <= efficiency <= 1.0:
        raise ValueError(f"efficiency {efficiency} outside [0, 1]")
    components = state.components if isinstance(state, MixedState) else ((1.0, state),)
    swap = OpticalElement(
        "retrieval_swap", (atomic, anti_stokes), np.array([[0.0, 1.0], [1.0, 0.0]])
    )
    swapped = []
    for w, s in components:
        _, p_vac = project_occupation(s, anti_stokes, 0)
        if abs(p_vac - 1.0) > 1e-9:
            raise ValueError(f"anti-Stokes mode {anti_stokes} is not in vacuum")
        swapped.append((w, apply_unitary(s, swap)))
    return apply_loss(MixedState(tuple(swapped)), anti_stokes, efficiency)
