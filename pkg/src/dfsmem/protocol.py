"""The memory protocol: heralded entanglement, spatial encoding, Bell-state
analysis, Pauli-mark bookkeeping, read-out, and remote state transfer.

The write pipeline runs entirely on one mode registry. Two ensembles emit
number-correlated Stokes photons; quarter-wave plates, a polarization rotator
on the right arm and a polarizing beam splitter erase the which-path
information, so a lone surviving photon carries H for "left ensemble excited"
and V for "right ensemble excited". A Mach-Zehnder stage splits that photon
over two paths with the amplitudes to store, and the Bell-state analyzer
(path-combining PBS, half-wave plates, polarization-splitting PBSs) routes
each polarization-spatial Bell component to exactly one detector:

    D1 <-> (|H,b> + |V,a>)/sqrt(2)     correction I
    D2 <-> (|H,b> - |V,a>)/sqrt(2)     correction Z
    D3 <-> (|H,a> + |V,b>)/sqrt(2)     correction X
    D4 <-> (|H,a> - |V,b>)/sqrt(2)     correction ZX

The correction is recorded as a classical mark next to the memory instead of
being applied to the atoms; read-out applies it to the retrieved photon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Sequence

import numpy as np

from .fock import (
    MixedState,
    ModeLabel,
    ModeRegistry,
    OpticalElement,
    PureState,
    apply_elements,
    apply_unitary,
    atomic_mode,
    basis_state,
    born_probabilities,
    embed_state,
    photon_mode,
    project_occupation,
    project_total_occupation,
    register_modes,
    restrict_state,
)
from .optics import bs50, hwp, mz_split, pbs, phase_shifter, pol_rotator, qwp

AMPLITUDE_PAIR_TOL = 1e-9


class BellOutcome(Enum):
    PSI_PLUS = "PsiPlus"
    PSI_MINUS = "PsiMinus"
    PHI_PLUS = "PhiPlus"
    PHI_MINUS = "PhiMinus"
    FAILURE = "Failure"


class PauliMark(Enum):
    I = "I"
    Z = "Z"
    X = "X"
    ZX = "ZX"  # equals -iY up to a global phase


_MARK_OF_OUTCOME = {
    BellOutcome.PSI_PLUS: PauliMark.I,
    BellOutcome.PSI_MINUS: PauliMark.Z,
    BellOutcome.PHI_PLUS: PauliMark.X,
    BellOutcome.PHI_MINUS: PauliMark.ZX,
}

_OUTCOME_OF_DETECTOR = (
    BellOutcome.PSI_PLUS,
    BellOutcome.PSI_MINUS,
    BellOutcome.PHI_PLUS,
    BellOutcome.PHI_MINUS,
)


def pauli_mark(outcome: BellOutcome) -> PauliMark:
    """Classical correction implied by a Bell-analyzer outcome."""
    if outcome is BellOutcome.FAILURE:
        raise ValueError("a failed analysis carries no correction mark")
    return _MARK_OF_OUTCOME[outcome]


def classify_clicks(clicks: Sequence[bool]) -> BellOutcome:
    """Map a (D1, D2, D3, D4) click pattern to an outcome.

    Exactly one click identifies a Bell state; anything else is a failure.
    """
    if len(clicks) != 4:
        raise ValueError("expected four detector flags")
    fired = [i for i, c in enumerate(clicks) if c]
    if len(fired) != 1:
        return BellOutcome.FAILURE
    return _OUTCOME_OF_DETECTOR[fired[0]]


@dataclass(frozen=True)
class LogicalQubitMap:
    """Dual-rail logical encoding over an ensemble pair.

    |0> puts the single excitation in ``right``, |1> puts it in ``left``;
    the two patterns are orthogonal by construction.
    """

    left: ModeLabel
    right: ModeLabel

    def logical_state(
        self, registry: ModeRegistry, alpha: complex, beta: complex
    ) -> PureState:
        zero = basis_state(registry, {self.right: 1})
        one = basis_state(registry, {self.left: 1})
        table: dict[tuple[int, ...], complex] = {}
        for p, a in zero.items():
            table[p] = table.get(p, 0j) + alpha * a
        for p, a in one.items():
            table[p] = table.get(p, 0j) + beta * a
        return PureState(registry, table)


def apply_logical_pauli(
    state: PureState, mark: PauliMark, qmap: LogicalQubitMap
) -> PureState:
    """Apply I/Z/X/ZX on the dual-rail logical qubit; global phases are not
    tracked (the mark is classical side information)."""
    if mark is PauliMark.I:
        return state
    swap = OpticalElement(
        "logical_x", (qmap.left, qmap.right), np.array([[0.0, 1.0], [1.0, 0.0]])
    )
    flip = phase_shifter([qmap.left], [math.pi])  # (-1)^(n_left): sign on |1>
    if mark is PauliMark.X:
        return apply_unitary(state, swap)
    if mark is PauliMark.Z:
        return apply_unitary(state, flip)
    return apply_unitary(apply_unitary(state, swap), flip)  # ZX: X then Z


# ---------------------------------------------------------------------------
# write-side setup
# ---------------------------------------------------------------------------


class WriteSetup:
    """Registry and element inventory for the write pipeline."""

    def __init__(self, d: int = 3):
        self.d = d
        self.s_l = atomic_mode("ensemble-L")
        self.s_r = atomic_mode("ensemble-R")
        spots = [
            ("Rcirc", "arm-L"), ("Lcirc", "arm-L"),
            ("Rcirc", "arm-R"), ("Lcirc", "arm-R"),
            ("H", "arm-L"), ("V", "arm-L"), ("H", "arm-R"), ("V", "arm-R"),
            ("H", "fiber"), ("V", "fiber"), ("H", "dump"), ("V", "dump"),
            ("H", "path-a"), ("V", "path-a"), ("H", "path-b"), ("V", "path-b"),
            ("H", "bsm-1"), ("V", "bsm-1"), ("H", "bsm-2"), ("V", "bsm-2"),
            ("H", "idle-1"), ("V", "idle-1"), ("H", "idle-2"), ("V", "idle-2"),
            ("H", "det-1"), ("V", "det-1"), ("H", "det-2"), ("V", "det-2"),
            ("H", "det-3"), ("V", "det-3"), ("H", "det-4"), ("V", "det-4"),
        ]
        self._photon = {key: photon_mode("stokes", *key) for key in spots}
        self.registry = register_modes(
            [self.s_l, self.s_r] + [self._photon[k] for k in spots], d
        )
        self.detectors = (
            self.photon("H", "det-1"),
            self.photon("V", "det-2"),
            self.photon("H", "det-3"),
            self.photon("V", "det-4"),
        )
        self.atomic_registry = register_modes([self.s_l, self.s_r], d)
        self.logical = LogicalQubitMap(left=self.s_l, right=self.s_r)

    def photon(self, polarization: str, spatial: str) -> ModeLabel:
        return self._photon[(polarization, spatial)]

    def output_modes(self) -> tuple[ModeLabel, ...]:
        return tuple(
            self.photon(pol, spot)
            for spot in ("fiber", "dump")
            for pol in ("H", "V")
        )

    def entangle_elements(self) -> list[OpticalElement]:
        ph = self.photon
        return [
            qwp(ph("Rcirc", "arm-L"), ph("Lcirc", "arm-L"), ph("H", "arm-L"), ph("V", "arm-L")),
            qwp(ph("Rcirc", "arm-R"), ph("Lcirc", "arm-R"), ph("H", "arm-R"), ph("V", "arm-R")),
            pol_rotator(ph("H", "arm-R"), ph("V", "arm-R")),
            pbs(
                ph("H", "arm-L"), ph("V", "arm-L"), ph("H", "arm-R"), ph("V", "arm-R"),
                ph("H", "fiber"), ph("V", "fiber"), ph("H", "dump"), ph("V", "dump"),
            ),
        ]

    def encode_elements(self, alpha: complex, beta: complex) -> list[OpticalElement]:
        ph = self.photon
        return [
            mz_split(ph("H", "fiber"), ph("H", "path-a"), ph("H", "path-b"), alpha, beta),
            mz_split(ph("V", "fiber"), ph("V", "path-a"), ph("V", "path-b"), alpha, beta),
        ]

    def bsm_elements(self) -> list[OpticalElement]:
        ph = self.photon
        return [
            pbs(
                ph("H", "path-a"), ph("V", "path-a"), ph("H", "path-b"), ph("V", "path-b"),
                ph("H", "bsm-1"), ph("V", "bsm-1"), ph("H", "bsm-2"), ph("V", "bsm-2"),
            ),
            hwp(ph("H", "bsm-1"), ph("V", "bsm-1")),
            hwp(ph("H", "bsm-2"), ph("V", "bsm-2")),
            pbs(
                ph("H", "bsm-2"), ph("V", "bsm-2"), ph("H", "idle-2"), ph("V", "idle-2"),
                ph("H", "det-1"), ph("V", "det-1"), ph("H", "det-2"), ph("V", "det-2"),
            ),
            pbs(
                ph("H", "bsm-1"), ph("V", "bsm-1"), ph("H", "idle-1"), ph("V", "idle-1"),
                ph("H", "det-3"), ph("V", "det-3"), ph("H", "det-4"), ph("V", "det-4"),
            ),
        ]


@lru_cache(maxsize=8)
def build_write_setup(d: int = 3) -> WriteSetup:
    return WriteSetup(d)


def _check_amplitude_pair(alpha: complex, beta: complex):
    total = abs(alpha) ** 2 + abs(beta) ** 2
    if abs(total - 1.0) > AMPLITUDE_PAIR_TOL:
        raise ValueError(f"(alpha, beta) not normalized: |a|^2+|b|^2 = {total}")


def joint_emission_state(
    pc: float, setup: WriteSetup, max_total: int = 2
) -> PureState:
    """Joint two-ensemble emission state kept through total order ``max_total``.

    Amplitude pc^((m+n)/2) on m excitations in the left pair and n in the
    right, m + n <= max_total; higher joint orders carry probability below
    pc^(max_total+1) and are outside the modeled order.
    """
    reg = setup.registry
    i_sl = reg.index(setup.s_l)
    i_sr = reg.index(setup.s_r)
    i_pl = reg.index(setup.photon("Rcirc", "arm-L"))
    i_pr = reg.index(setup.photon("Rcirc", "arm-R"))
    zero = reg.zero_pattern()
    amp: dict[tuple[int, ...], complex] = {}
    for m in range(min(max_total, reg.d - 1) + 1):
        for n in range(min(max_total - m, reg.d - 1) + 1):
            pattern = list(zero)
            pattern[i_sl] = m
            pattern[i_pl] = m
            pattern[i_sr] = n
            pattern[i_pr] = n
            amp[tuple(pattern)] = pc ** ((m + n) / 2.0)
    return PureState(reg, amp).normalize()


def generate_entanglement(
    pc: float, setup: WriteSetup | None = None
) -> tuple[PureState | None, float]:
    """Run the entanglement-generation stage and herald on one photon.

    Both ensembles are pumped with equal excitation probability; the emitted
    Stokes fields pass the wave plates and interfere on the PBS. The returned
    state is the normalized component with exactly one photon across the PBS
    outputs, together with the exact probability of that component. At zero
    herald probability the state is None.
    """
    if not 0.0 <= pc < 0.5:
        raise ValueError(f"pc={pc} outside [0, 0.5)")
    setup = setup or build_write_setup()
    state = joint_emission_state(pc, setup)
    state = apply_elements(state, setup.entangle_elements())
    component, prob = project_total_occupation(state, setup.output_modes(), 1)
    if prob <= 0.0:
        return None, 0.0
    return component.normalize(), prob


def ideal_entangled_state(setup: WriteSetup | None = None) -> PureState:
    """The target one-photon atom-photon state: (|H>|1>_a + |V>|0>_a)/sqrt(2)."""
    setup = setup or build_write_setup()
    h_branch = basis_state(
        setup.registry, {setup.s_l: 1, setup.photon("H", "fiber"): 1}
    )
    v_branch = basis_state(
        setup.registry, {setup.s_r: 1, setup.photon("V", "fiber"): 1}
    )
    table = {p: a / math.sqrt(2) for p, a in h_branch.items()}
    for p, a in v_branch.items():
        table[p] = table.get(p, 0j) + a / math.sqrt(2)
    return PureState(setup.registry, table)


def encode_spatial(
    state: PureState,
    alpha: complex,
    beta: complex,
    setup: WriteSetup | None = None,
) -> PureState:
    """Split the photon over two spatial paths with amplitudes (alpha, beta).

    The split acts identically on both polarization copies; the target path
    modes must start empty.
    """
    _check_amplitude_pair(alpha, beta)
    setup = setup or build_write_setup()
    for pol in ("H", "V"):
        for spot in ("path-a", "path-b"):
            _, p_vac = project_occupation(state, setup.photon(pol, spot), 0)
            if abs(p_vac - state.norm_squared()) > 1e-9:
                raise ValueError("spatial target modes are not empty")
    return apply_elements(state, setup.encode_elements(alpha, beta))


@dataclass(frozen=True)
class BsmResult:
    """Analyzer output: final state plus exact detector-pattern weights."""

    state: PureState
    detector_probs: dict[tuple[int, ...], float]
    detectors: tuple[ModeLabel, ...]

    def single_click_probability(self, detector_index: int) -> float:
        pattern = tuple(1 if i == detector_index else 0 for i in range(4))
        return self.detector_probs.get(pattern, 0.0)


def bsm(state: PureState, setup: WriteSetup | None = None) -> BsmResult:
    """Run the Bell-state analyzer and tabulate detector occupation weights."""
    setup = setup or build_write_setup()
    out = apply_elements(state, setup.bsm_elements())
    probs = born_probabilities(out, setup.detectors)
    return BsmResult(out, probs, setup.detectors)


@dataclass(frozen=True)
class TrialRecord:
    """One write attempt: herald effort, analyzer result, stored state."""

    rounds_until_herald: int
    click_pattern: tuple[bool, bool, bool, bool]
    outcome: BellOutcome
    mark: PauliMark | None
    atomic_state: PureState | None
    success: bool

    def __post_init__(self):
        if self.success != (self.outcome is not BellOutcome.FAILURE):
            raise ValueError("success flag must track the outcome")
        if self.rounds_until_herald < 1:
            raise ValueError("rounds_until_herald must be >= 1")


@dataclass(frozen=True)
class WriteBranch:
    probability: float
    atomic_state: PureState  # on the two-mode atomic registry
    mark: PauliMark


def _conditional_atomic_state(
    state: PureState, detector_pattern: Sequence[int], setup: WriteSetup
) -> tuple[PureState | None, float]:
    """Project onto a detector occupation pattern and keep the atomic part."""
    component = state
    prob = None
    for det, n in zip(setup.detectors, detector_pattern):
        component, prob = project_occupation(component, det, n)
    prob = component.norm_squared()
    if prob <= 0.0:
        return None, 0.0
    return restrict_state(component.normalize(), setup.atomic_registry), prob


def write_branches(
    alpha: complex,
    beta: complex,
    pc: float,
    setup: WriteSetup | None = None,
) -> dict[BellOutcome, WriteBranch]:
    """Exact per-outcome analysis of one heralded write.

    Returns, for each analyzer outcome, its exact probability and the
    conditional atomic state (uncorrected; the mark says what read-out must
    apply).
    """
    _check_amplitude_pair(alpha, beta)
    setup = setup or build_write_setup()
    heralded, p_herald = generate_entanglement(pc, setup)
    if heralded is None:
        raise ValueError("herald probability is zero; nothing to write")
    encoded = encode_spatial(heralded, alpha, beta, setup)
    analyzed = bsm(encoded, setup)
    branches: dict[BellOutcome, WriteBranch] = {}
    for k, outcome in enumerate(_OUTCOME_OF_DETECTOR):
        pattern = tuple(1 if i == k else 0 for i in range(4))
        atomic, prob = _conditional_atomic_state(analyzed.state, pattern, setup)
        if atomic is None:
            continue
        branches[outcome] = WriteBranch(prob, atomic, pauli_mark(outcome))
    return branches


def write_memory(
    alpha: complex,
    beta: complex,
    pc: float,
    rng: np.random.Generator,
    setup: WriteSetup | None = None,
) -> TrialRecord:
    """One simulated write with ideal detection.

    Rounds repeat until the one-photon herald fires (geometric in the exact
    herald probability); the analyzer outcome is drawn from the exact Born
    weights. The record stores the uncorrected atomic state plus its mark.
    """
    setup = setup or build_write_setup()
    _, p_herald = generate_entanglement(pc, setup)
    if p_herald <= 0.0:
        raise ValueError("herald probability is zero; nothing to write")
    rounds = int(rng.geometric(p_herald))
    branches = write_branches(alpha, beta, pc, setup)
    outcomes = list(branches.keys())
    weights = np.array([branches[o].probability for o in outcomes])
    weights = weights / weights.sum()
    pick = outcomes[int(rng.choice(len(outcomes), p=weights))]
    clicks = tuple(o is pick for o in _OUTCOME_OF_DETECTOR)
    chosen = branches[pick]
    return TrialRecord(
        rounds_until_herald=rounds,
        click_pattern=clicks,
        outcome=pick,
        mark=chosen.mark,
        atomic_state=chosen.atomic_state,
        success=True,
    )


# ---------------------------------------------------------------------------
# read-out
# ---------------------------------------------------------------------------


class ReadSetup:
    """Registry and elements for retrieval and recombination."""

    def __init__(self, d: int = 3):
        self.d = d
        self.s_l = atomic_mode("ensemble-L")
        self.s_r = atomic_mode("ensemble-R")
        spots = [
            ("H", "read-L"), ("V", "read-L"), ("H", "read-R"), ("V", "read-R"),
            ("H", "out"), ("V", "out"), ("H", "spill"), ("V", "spill"),
        ]
        self._photon = {key: photon_mode("anti-stokes", *key) for key in spots}
        self.registry = register_modes(
            [self.s_l, self.s_r] + [self._photon[k] for k in spots], d
        )
        self.out_h = self.photon("H", "out")
        self.out_v = self.photon("V", "out")

    def photon(self, polarization: str, spatial: str) -> ModeLabel:
        return self._photon[(polarization, spatial)]

    def recombine(self) -> OpticalElement:
        ph = self.photon
        return pbs(
            ph("H", "read-L"), ph("V", "read-L"), ph("H", "read-R"), ph("V", "read-R"),
            ph("H", "out"), ph("V", "out"), ph("H", "spill"), ph("V", "spill"),
        )


@lru_cache(maxsize=8)
def build_read_setup(d: int = 3) -> ReadSetup:
    return ReadSetup(d)


def _apply_photonic_mark(state: PureState, mark: PauliMark, setup: ReadSetup) -> PureState:
    """The stored mark, acted on the retrieved polarization qubit (|1> = H)."""
    if mark is PauliMark.I:
        return state
    swap = pol_rotator(setup.out_h, setup.out_v)
    flip = phase_shifter([setup.out_h], [math.pi])
    if mark is PauliMark.X:
        return apply_unitary(state, swap)
    if mark is PauliMark.Z:
        return apply_unitary(state, flip)
    return apply_unitary(apply_unitary(state, swap), flip)


def read_memory(record: TrialRecord, retrieval_efficiency: float) -> MixedState:
    """Retrieve both ensembles, recombine on the PBS, apply the stored mark.

    At unit efficiency the output polarization qubit on the ``out`` port is
    alpha|V> + beta|H> for a stored alpha|0> + beta|1>; below unit efficiency
    the excitation survives with the given probability and is otherwise
    replaced by vacuum.
    """
    from .source import retrieve

    if not record.success:
        raise ValueError("cannot read an unsuccessful write record")
    setup = build_read_setup(record.atomic_state.registry.d)
    state = embed_state(record.atomic_state, setup.registry)
    mixed = retrieve(state, setup.s_l, setup.photon("H", "read-L"), retrieval_efficiency)
    mixed = retrieve(mixed, setup.s_r, setup.photon("V", "read-R"), retrieval_efficiency)
    recombine = setup.recombine()
    out = []
    for w, s in mixed.components:
        s = apply_unitary(s, recombine)
        s = _apply_photonic_mark(s, record.mark, setup)
        out.append((w, s))
    return MixedState(tuple(out))


def read_target(alpha: complex, beta: complex, setup: ReadSetup | None = None) -> PureState:
    """The ideal read-out photon: alpha|V> + beta|H> on the output port."""
    setup = setup or build_read_setup()
    v = basis_state(setup.registry, {setup.out_v: 1})
    h = basis_state(setup.registry, {setup.out_h: 1})
    table: dict[tuple[int, ...], complex] = {}
    for p, a in v.items():
        table[p] = alpha * a
    for p, a in h.items():
        table[p] = table.get(p, 0j) + beta * a
    return PureState(setup.registry, table)


def photon_present_probability(state: MixedState, modes: Sequence[ModeLabel]) -> float:
    """Total weight carrying at least one photon across the listed modes."""
    total = 0.0
    for w, s in state.components:
        _, p_vac = project_total_occupation(s, modes, 0)
        total += w * (1.0 - p_vac)
    return total


# ---------------------------------------------------------------------------
# remote transfer
# ---------------------------------------------------------------------------


class RemoteSetup:
    """Registry and elements for the two-splitter coincidence transfer."""

    def __init__(self, d: int = 3):
        self.d = d
        self.i1 = atomic_mode("ensemble-I1")
        self.i2 = atomic_mode("ensemble-I2")
        self.l1 = atomic_mode("ensemble-L1")
        self.l2 = atomic_mode("ensemble-L2")
        self.r1 = atomic_mode("ensemble-R1")
        self.r2 = atomic_mode("ensemble-R2")
        self.p_i1 = photon_mode("anti-stokes", "H", "from-I1")
        self.p_l1 = photon_mode("anti-stokes", "H", "from-L1")
        self.p_i2 = photon_mode("anti-stokes", "H", "from-I2")
        self.p_l2 = photon_mode("anti-stokes", "H", "from-L2")
        self.registry = register_modes(
            [self.i1, self.i2, self.l1, self.l2, self.r1, self.r2,
             self.p_i1, self.p_l1, self.p_i2, self.p_l2],
            d,
        )
        # detectors sit on the splitter outputs: D1/D2 after the (I1, L1)
        # splitter, D3/D4 after the (I2, L2) one
        self.detectors = (self.p_i1, self.p_l1, self.p_i2, self.p_l2)
        self.r_registry = register_modes([self.r1, self.r2], d)
        self.r_logical = LogicalQubitMap(left=self.r1, right=self.r2)


@lru_cache(maxsize=8)
def build_remote_setup(d: int = 3) -> RemoteSetup:
    return RemoteSetup(d)


def classify_remote_clicks(clicks: Sequence[bool]) -> tuple[bool, PauliMark | None]:
    """Coincidence rule: exactly one click on each splitter side.

    The relative sign of the transferred state flips with the click parity:
    (D1, D3) and (D2, D4) need no correction, (D1, D4) and (D2, D3) need the
    pi-phase (Z) mark.
    """
    if len(clicks) != 4:
        raise ValueError("expected four detector flags")
    left = [i for i in (0, 1) if clicks[i]]
    right = [i for i in (2, 3) if clicks[i]]
    if len(left) != 1 or len(right) != 1:
        return False, None
    parity = (left[0] % 2) ^ (right[0] % 2)
    return True, PauliMark.Z if parity else PauliMark.I


@dataclass(frozen=True)
class RemoteBranch:
    probability: float
    r_state: PureState  # on the receiving pair's registry
    success: bool
    mark: PauliMark | None


@dataclass(frozen=True)
class RemoteResult:
    success_probability: float
    pattern_probs: dict[tuple[int, ...], float]
    branches: dict[tuple[int, ...], RemoteBranch]
    setup: RemoteSetup


def remote_transfer(
    alpha: complex, beta: complex, setup: RemoteSetup | None = None
) -> RemoteResult:
    """Transfer an unknown dual-rail state onto the far ensemble pair.

    The sender pair holds alpha|0> + beta|1>; the resource pairs share
    (|0>|1> + |1>|0>)/sqrt(2). Retrieval converts the sender and near-resource
    excitations to photons, which meet pairwise on two balanced splitters.
    Both-photons-on-one-splitter branches bunch (no cross-side click) and
    fail; the four one-click-per-side patterns each succeed with exact
    probability 1/8 and leave the far pair in alpha|0> +/- beta|1>, the sign
    fixed by the click parity.
    """
    _check_amplitude_pair(alpha, beta)
    from .source import retrieve

    setup = setup or build_remote_setup()
    reg = setup.registry
    sender = PureState(
        reg,
        {
            tuple(basis_state(reg, {setup.i2: 1}).support()[0]): alpha,
            tuple(basis_state(reg, {setup.i1: 1}).support()[0]): beta,
        },
    )
    resource = PureState(
        reg,
        {
            tuple(basis_state(reg, {setup.l1: 1, setup.r2: 1}).support()[0]): 1 / math.sqrt(2),
            tuple(basis_state(reg, {setup.l2: 1, setup.r1: 1}).support()[0]): 1 / math.sqrt(2),
        },
    )
    from .fock import product_state

    state = product_state(sender, resource)
    for atom, phot in (
        (setup.i1, setup.p_i1),
        (setup.l1, setup.p_l1),
        (setup.i2, setup.p_i2),
        (setup.l2, setup.p_l2),
    ):
        mixed = retrieve(state, atom, phot, 1.0)
        (weight, state), = mixed.components
    state = apply_unitary(state, bs50(setup.p_i1, setup.p_l1))
    state = apply_unitary(state, bs50(setup.p_i2, setup.p_l2))

    pattern_probs = born_probabilities(state, setup.detectors)
    branches: dict[tuple[int, ...], RemoteBranch] = {}
    success_total = 0.0
    for pattern, prob in pattern_probs.items():
        component = state
        for det, n in zip(setup.detectors, pattern):
            component, _ = project_occupation(component, det, n)
        r_state = restrict_state(component.normalize(), setup.r_registry)
        clicks = tuple(n >= 1 for n in pattern)
        success, mark = classify_remote_clicks(clicks)
        # bunched branches put two photons on one side; a non-resolving
        # detector still reports one click there and no cross-side partner
        branches[pattern] = RemoteBranch(prob, r_state, success, mark)
        if success:
            success_total += prob
    return RemoteResult(success_total, pattern_probs, branches, setup)
