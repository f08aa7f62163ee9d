"""Seeded Monte Carlo layer over the exact pipeline.

Each trial owns its own random stream, derived from the master seed and the
trial index through numpy's SeedSequence (``SeedSequence(master_seed,
spawn_key=(trial_index,))``), so results are bit-identical regardless of
thread count or scheduling.

Detection is modeled by Bernoulli-thinning every photon of an exactly
sampled occupation pattern with the overall survival probability and OR-ing
in per-detector dark counts; rounds with anything other than exactly one
click are repeated. The repeat loop is drawn as a single geometric variate
in the exact per-round herald probability, which has the same distribution
as looping round by round.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product as iter_product
from typing import Sequence

import numpy as np

from .fock import (
    apply_elements,
    born_probabilities,
    fidelity_pure,
    project_occupation,
    restrict_state,
)
from .noise import NoiseParams
from .protocol import (
    BellOutcome,
    apply_logical_pauli,
    build_remote_setup,
    build_write_setup,
    classify_remote_clicks,
    joint_emission_state,
    pauli_mark,
    remote_transfer,
)

_OUTCOMES = (
    BellOutcome.PSI_PLUS,
    BellOutcome.PSI_MINUS,
    BellOutcome.PHI_PLUS,
    BellOutcome.PHI_MINUS,
)


@dataclass(frozen=True)
class DetectorSpec:
    """One non-number-resolving detector channel.

    efficiency: per-photon click probability, already folded with collection
    and channel survival; dark_prob: dark-count probability per window.
    """

    efficiency: float
    dark_prob: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError(f"efficiency {self.efficiency} outside [0, 1]")
        if not 0.0 <= self.dark_prob < 1.0:
            raise ValueError(f"dark_prob {self.dark_prob} outside [0, 1)")

    def click_probability(self, photons: int) -> float:
        return 1.0 - (1.0 - self.efficiency) ** photons * (1.0 - self.dark_prob)


@dataclass(frozen=True)
class RunConfig:
    trial_count: int
    master_seed: int
    pc: float = 0.01
    alpha: complex = 1 / math.sqrt(2)
    beta: complex = 1 / math.sqrt(2)
    noise: NoiseParams = field(default_factory=NoiseParams)
    round_cap: int = 10_000_000
    threads: int = 1
    truncation: int = 3
    records_csv: str | None = None

    def __post_init__(self):
        if self.trial_count < 0:
            raise ValueError("trial_count must be >= 0")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.truncation < 3:
            raise ValueError("truncation below 3 cannot hold the pair-emission terms")


@dataclass(frozen=True)
class RunStats:
    """Aggregates over a batch of trials, with standard errors (sigma/sqrt(N))."""

    trial_count: int
    success_count: int
    censored_count: int
    success_rate: float
    success_rate_se: float
    mean_rounds: float
    mean_rounds_se: float
    empirical_T_seconds: float
    empirical_T_seconds_se: float
    outcome_frequencies: dict[str, float]
    outcome_frequencies_se: dict[str, float]
    mean_conditional_fidelity: float
    mean_conditional_fidelity_se: float


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """The per-trial stream: SeedSequence(master_seed, spawn_key=(index,))."""
    return np.random.default_rng(
        np.random.SeedSequence(master_seed, spawn_key=(trial_index,))
    )


def sample_detectors(
    pattern_probs: dict[tuple[int, ...], float],
    detectors: Sequence[DetectorSpec],
    rng: np.random.Generator,
) -> tuple[bool, ...]:
    """Draw one detection round: Born-sample a photon pattern, thin each
    photon through its detector's survival, OR in dark counts."""
    patterns = sorted(pattern_probs)
    probs = np.array([pattern_probs[p] for p in patterns])
    total = probs.sum()
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"pattern probabilities sum to {total}, not 1")
    pattern = patterns[int(rng.choice(len(patterns), p=probs / total))]
    if len(pattern) != len(detectors):
        raise ValueError("one DetectorSpec per sampled mode required")
    clicks = []
    for n, det in zip(pattern, detectors):
        detected = int(rng.binomial(n, det.efficiency)) if n else 0
        dark = rng.random() < det.dark_prob
        clicks.append(detected >= 1 or dark)
    return tuple(clicks)


@dataclass(frozen=True)
class _EventTable:
    """Exact per-round outcome classes for fast, faithful trial sampling."""

    herald_probability: float
    probabilities: np.ndarray  # conditional on herald, per event
    outcome_index: np.ndarray  # detector that clicked
    fidelity: np.ndarray  # corrected-memory fidelity for the event
    exact_outcome_probs: dict[str, float]
    exact_mean_fidelity: float


def _one_click_weights(pattern: tuple[int, ...], dets: Sequence[DetectorSpec]) -> list[float]:
    """P(only detector k clicks | photon pattern), for each k."""
    click = [d.click_probability(n) for n, d in zip(pattern, dets)]
    out = []
    for k in range(len(pattern)):
        w = click[k]
        for j, c in enumerate(click):
            if j != k:
                w *= 1.0 - c
        out.append(w)
    return out


def _write_event_table(cfg: RunConfig) -> _EventTable:
    setup = build_write_setup(cfg.truncation)
    state = joint_emission_state(cfg.pc, setup)
    state = apply_elements(state, setup.entangle_elements())
    state = apply_elements(state, setup.encode_elements(cfg.alpha, cfg.beta))
    state = apply_elements(state, setup.bsm_elements())
    table = born_probabilities(state, setup.detectors)

    det = DetectorSpec(cfg.noise.eta_prime, cfg.noise.p_dc)
    dets = [det] * 4
    target = setup.logical.logical_state(setup.atomic_registry, cfg.alpha, cfg.beta)

    probs, outcome_idx, fids = [], [], []
    for pattern in sorted(table):
        p_pattern = table[pattern]
        component = state
        for det, n in zip(setup.detectors, pattern):
            component, _ = project_occupation(component, det, n)
        atomic = restrict_state(component.normalize(), setup.atomic_registry)
        for k, w in enumerate(_one_click_weights(pattern, dets)):
            if w <= 0.0:
                continue
            corrected = apply_logical_pauli(
                atomic, pauli_mark(_OUTCOMES[k]), setup.logical
            )
            probs.append(p_pattern * w)
            outcome_idx.append(k)
            fids.append(fidelity_pure(corrected, target))
    herald = float(sum(probs))
    if herald > 0.0:
        cond = np.array(probs) / herald
    else:
        cond = np.array(probs)
    idx = np.array(outcome_idx, dtype=int)
    fid = np.array(fids)
    exact_outcomes = {
        o.value: float(cond[idx == k].sum()) for k, o in enumerate(_OUTCOMES)
    }
    exact_fid = float((cond * fid).sum()) if herald > 0.0 else 0.0
    return _EventTable(herald, cond, idx, fid, exact_outcomes, exact_fid)


def _remote_event_table(cfg: RunConfig) -> _EventTable:
    result = remote_transfer(cfg.alpha, cfg.beta, build_remote_setup(cfg.truncation))
    setup = result.setup
    det = DetectorSpec(cfg.noise.eta_prime, cfg.noise.p_dc)
    target = setup.r_logical.logical_state(setup.r_registry, cfg.alpha, cfg.beta)

    probs, success_flags, fids = [], [], []
    for pattern, branch in sorted(result.branches.items()):
        click_prob = [det.click_probability(n) for n in pattern]
        for clicks in iter_product((False, True), repeat=4):
            w = 1.0
            for c, q in zip(clicks, click_prob):
                w *= q if c else 1.0 - q
            if w <= 0.0:
                continue
            success, mark = classify_remote_clicks(clicks)
            if success:
                corrected = apply_logical_pauli(branch.r_state, mark, setup.r_logical)
                fid = fidelity_pure(corrected, target)
            else:
                fid = 0.0
            probs.append(branch.probability * w)
            success_flags.append(1 if success else 0)
            fids.append(fid)
    total = float(sum(probs))
    cond = np.array(probs) / total
    flags = np.array(success_flags, dtype=int)
    fid = np.array(fids)
    success_prob = float(cond[flags == 1].sum())
    mean_fid = (
        float((cond * fid)[flags == 1].sum() / success_prob) if success_prob else 0.0
    )
    # reuse the table fields: outcome_index doubles as the success flag
    return _EventTable(
        herald_probability=success_prob,
        probabilities=cond,
        outcome_index=flags,
        fidelity=fid,
        exact_outcome_probs={"success": success_prob},
        exact_mean_fidelity=mean_fid,
    )


def _run_indexed(cfg: RunConfig, worker, columns: int) -> np.ndarray:
    """Fill one row per trial in index order, optionally across threads."""
    out = np.zeros((cfg.trial_count, columns))
    if cfg.threads == 1 or cfg.trial_count < 2:
        for i in range(cfg.trial_count):
            out[i] = worker(i)
        return out
    chunk = math.ceil(cfg.trial_count / cfg.threads)

    def fill(start: int):
        for i in range(start, min(start + chunk, cfg.trial_count)):
            out[i] = worker(i)

    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        list(pool.map(fill, range(0, cfg.trial_count, chunk)))
    return out


def _stream_records(cfg: RunConfig, header: list[str], rows) -> None:
    if cfg.records_csv is None:
        return
    with open(cfg.records_csv, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    if values.size == 0:
        return 0.0, 0.0
    if values.size == 1:
        return float(values[0]), 0.0
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


def _freq_se(freq: float, n: int) -> float:
    if n < 2:
        return 0.0
    return math.sqrt(freq * (1.0 - freq) / n)


def run_write_trials(cfg: RunConfig) -> RunStats:
    """Repeat write rounds to herald, per trial, and aggregate statistics.

    Per trial the number of rounds is geometric in the exact herald
    probability (trials past ``round_cap`` are censored), and the heralding
    round's detection event is drawn from the exact conditional event table.
    """
    table = _write_event_table(cfg)
    n_events = len(table.probabilities)

    def worker(i: int) -> tuple[float, float, float, float]:
        rng = trial_rng(cfg.master_seed, i)
        if table.herald_probability <= 0.0:
            return (0.0, float(cfg.round_cap), -1.0, 0.0)
        rounds = int(rng.geometric(table.herald_probability))
        if rounds > cfg.round_cap:
            return (0.0, float(cfg.round_cap), -1.0, 0.0)
        event = int(rng.choice(n_events, p=table.probabilities))
        return (1.0, float(rounds), float(table.outcome_index[event]),
                float(table.fidelity[event]))

    rows = _run_indexed(cfg, worker, 4)
    _stream_records(
        cfg,
        ["trial", "rounds", "outcome", "fidelity", "censored"],
        (
            (
                i,
                int(r[1]),
                _OUTCOMES[int(r[2])].value if r[2] >= 0 else "censored",
                repr(float(r[3])),
                int(r[0] == 0.0),
            )
            for i, r in enumerate(rows)
        ),
    )
    ok = rows[:, 0] == 1.0
    n_ok = int(ok.sum())
    success_rate = n_ok / cfg.trial_count if cfg.trial_count else 0.0
    mean_rounds, rounds_se = _mean_se(rows[ok, 1])
    freqs, freqs_se = {}, {}
    for k, outcome in enumerate(_OUTCOMES):
        f = float((rows[ok, 2] == k).sum() / n_ok) if n_ok else 0.0
        freqs[outcome.value] = f
        freqs_se[outcome.value] = _freq_se(f, n_ok)
    fid_mean, fid_se = _mean_se(rows[ok, 3])
    return RunStats(
        trial_count=cfg.trial_count,
        success_count=n_ok,
        censored_count=cfg.trial_count - n_ok,
        success_rate=success_rate,
        success_rate_se=_freq_se(success_rate, cfg.trial_count),
        mean_rounds=mean_rounds,
        mean_rounds_se=rounds_se,
        empirical_T_seconds=mean_rounds / cfg.noise.f_p,
        empirical_T_seconds_se=rounds_se / cfg.noise.f_p,
        outcome_frequencies=freqs,
        outcome_frequencies_se=freqs_se,
        mean_conditional_fidelity=fid_mean,
        mean_conditional_fidelity_se=fid_se,
    )


def run_remote_trials(cfg: RunConfig) -> RunStats:
    """Sample the two-splitter coincidence transfer, one attempt per trial."""
    table = _remote_event_table(cfg)
    n_events = len(table.probabilities)

    def worker(i: int) -> tuple[float, float, float, float]:
        rng = trial_rng(cfg.master_seed, i)
        event = int(rng.choice(n_events, p=table.probabilities))
        success = table.outcome_index[event] == 1
        return (1.0 if success else 0.0, 1.0, 1.0 if success else 0.0,
                float(table.fidelity[event]))

    rows = _run_indexed(cfg, worker, 4)
    _stream_records(
        cfg,
        ["trial", "success", "fidelity"],
        ((i, int(r[0]), repr(float(r[3]))) for i, r in enumerate(rows)),
    )
    n = cfg.trial_count
    successes = rows[:, 0] == 1.0
    n_ok = int(successes.sum())
    success_rate = n_ok / n if n else 0.0
    fid_mean, fid_se = _mean_se(rows[successes, 3])
    return RunStats(
        trial_count=n,
        success_count=n_ok,
        censored_count=0,
        success_rate=success_rate,
        success_rate_se=_freq_se(success_rate, n),
        mean_rounds=1.0 if n else 0.0,
        mean_rounds_se=0.0,
        empirical_T_seconds=(1.0 / cfg.noise.f_p) if n else 0.0,
        empirical_T_seconds_se=0.0,
        outcome_frequencies={"success": success_rate},
        outcome_frequencies_se={"success": _freq_se(success_rate, n)},
        mean_conditional_fidelity=fid_mean,
        mean_conditional_fidelity_se=fid_se,
    )


@dataclass(frozen=True)
class OracleEntry:
    name: str
    empirical: float
    exact: float
    sigma_distance: float
    flagged: bool


@dataclass(frozen=True)
class OracleReport:
    entries: tuple[OracleEntry, ...]
    tolerance_sigmas: float
    insufficient_data: bool

    @property
    def passed(self) -> bool:
        return not any(e.flagged for e in self.entries)


def oracle_check(
    cfg: RunConfig,
    tolerance_sigmas: float = 3.0,
    experiment: str = "write",
    expected_noise: NoiseParams | None = None,
) -> OracleReport:
    """Compare sampled frequencies against the exact event probabilities.

    ``expected_noise`` substitutes the parameters used on the exact side;
    passing deliberately wrong values is the negative control.
    """
    if cfg.trial_count == 0:
        return OracleReport((), tolerance_sigmas, insufficient_data=True)
    expected_cfg = cfg
    if expected_noise is not None:
        expected_cfg = RunConfig(
            trial_count=cfg.trial_count, master_seed=cfg.master_seed, pc=cfg.pc,
            alpha=cfg.alpha, beta=cfg.beta, noise=expected_noise,
            round_cap=cfg.round_cap, threads=cfg.threads,
        )
    if experiment == "write":
        stats = run_write_trials(cfg)
        table = _write_event_table(expected_cfg)
        pairs = [
            (f"outcome[{name}]", stats.outcome_frequencies[name],
             stats.outcome_frequencies_se[name], exact)
            for name, exact in table.exact_outcome_probs.items()
        ]
        pairs.append(
            ("mean_conditional_fidelity", stats.mean_conditional_fidelity,
             stats.mean_conditional_fidelity_se, table.exact_mean_fidelity)
        )
        if table.herald_probability > 0.0:
            # herald effort exposes the survival model, which the
            # herald-conditioned frequencies cannot see
            pairs.append(
                ("mean_rounds", stats.mean_rounds, stats.mean_rounds_se,
                 1.0 / table.herald_probability)
            )
    elif experiment == "remote":
        stats = run_remote_trials(cfg)
        table = _remote_event_table(expected_cfg)
        pairs = [
            ("success_rate", stats.success_rate, stats.success_rate_se,
             table.herald_probability),
            ("mean_conditional_fidelity", stats.mean_conditional_fidelity,
             stats.mean_conditional_fidelity_se, table.exact_mean_fidelity),
        ]
    else:
        raise ValueError(f"unknown experiment {experiment!r}")
    entries = []
    for name, emp, se, exact in pairs:
        if se == 0.0:
            sigma = 0.0 if abs(emp - exact) < 1e-12 else math.inf
        else:
            sigma = abs(emp - exact) / se
        entries.append(OracleEntry(name, emp, exact, sigma, sigma > tolerance_sigmas))
    return OracleReport(tuple(entries), tolerance_sigmas, insufficient_data=False)
