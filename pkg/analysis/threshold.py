"""
Monte Carlo estimation of logical failure rates and factorial scans.

Every trial draws its randomness from streams keyed by (master seed, trial),
so results do not depend on how trials are spread over worker threads.
"""

import csv
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from analysis import metrics
from exceptions import InputError
from qec.color_code import build_layout, build_memory_circuit
from simulation.runner import check_backend, run_trial
from utils import worker_count

logger = logging.getLogger(__name__)

RESULT_COLUMNS = [
    "model", "strength", "d", "C", "chi", "trials", "failures",
    "pfail", "ci_lo", "ci_hi", "max_bond", "discarded_weight", "seed",
]
CYCLE_RULES = ("fixed-1", "equal-d")
EXACT_CHI = "exact"
AUTO_CHI_LARGE = 256


@dataclass(frozen=True)
class TrialBatchResult:
    model: str
    strength: float
    d: int
    C: int
    chi: object
    trials: int
    failures: int
    pfail: float
    ci_lo: float
    ci_hi: float
    max_bond: float
    discarded_weight: float
    seed: int

    @property
    def key(self):
        return (self.model, repr(float(self.strength)), int(self.d), int(self.C), str(self.chi))

    @property
    def interval(self):
        return self.ci_lo, self.ci_hi

    def to_row(self):
        row = asdict(self)
        row["strength"] = repr(float(self.strength))
        row["pfail"] = repr(float(self.pfail))
        row["ci_lo"] = repr(float(self.ci_lo))
        row["ci_hi"] = repr(float(self.ci_hi))
        row["max_bond"] = repr(float(self.max_bond))
        row["discarded_weight"] = repr(float(self.discarded_weight))
        return [row[c] for c in RESULT_COLUMNS]

    @classmethod
    def from_row(cls, row):
        chi = row["chi"]
        return cls(
            model=row["model"],
            strength=float(row["strength"]),
            d=int(row["d"]),
            C=int(row["C"]),
            chi=chi if chi == EXACT_CHI else int(chi),
            trials=int(row["trials"]),
            failures=int(row["failures"]),
            pfail=float(row["pfail"]),
            ci_lo=float(row["ci_lo"]),
            ci_hi=float(row["ci_hi"]),
            max_bond=float(row["max_bond"]),
            discarded_weight=float(row["discarded_weight"]),
            seed=int(row["seed"]),
        )


def estimate_pfail(d, cycles, model, strength, trials, chi_cap=None, backend="ttn",
                   master_seed=0, leaf_map=None, workers=None, x_reference="first-round",
                   progress=None):
    """
    Logical failure rate of the d-distance memory experiment over `trials` trials.

    Decoding failures count as logical failures. `progress`, if given, is
    called once per finished trial.
    """
    if trials < 1:
        raise InputError("need at least one trial")
    model = model.with_strength(strength)
    check_backend(model, backend)
    code = build_layout(d)
    circuit = build_memory_circuit(code, cycles)

    def one(trial):
        record = run_trial(
            code, circuit, model, trial, master_seed,
            backend=backend, chi_cap=chi_cap, leaf_map=leaf_map, x_reference=x_reference,
        )
        if progress is not None:
            progress()
        return record

    with ThreadPoolExecutor(max_workers=worker_count(workers)) as pool:
        records = list(pool.map(one, range(trials)))

    failures = sum(r.failed for r in records)
    stats = metrics.summarize_batch(failures, trials)
    result = TrialBatchResult(
        model=model.label,
        strength=float(strength),
        d=d,
        C=cycles,
        chi=EXACT_CHI if chi_cap is None else int(chi_cap),
        trials=trials,
        failures=int(failures),
        pfail=stats["pfail"],
        ci_lo=stats["ci_lo"],
        ci_hi=stats["ci_hi"],
        max_bond=float(np.mean([r.max_bond for r in records])),
        discarded_weight=float(np.mean([r.discarded_weight for r in records])),
        seed=int(master_seed),
    )
    logger.debug("d=%d C=%d %s=%g: %d/%d failures", d, cycles, model.label, strength, failures, trials)
    return result


def cycles_for(d, rule):
    """Cycle count for a distance: a rule from CYCLE_RULES or a fixed positive count."""
    if isinstance(rule, int) and not isinstance(rule, bool):
        if rule < 1:
            raise InputError("cycle count must be positive")
        return rule
    if rule not in CYCLE_RULES:
        raise InputError(f"unknown cycle rule {rule!r}, expected one of {CYCLE_RULES}")
    return 1 if rule == "fixed-1" else d


def chi_for(d, policy):
    """Bond cap for a distance under a chi policy: "exact", "auto" or an integer."""
    if policy == EXACT_CHI:
        return None
    if policy == "auto":
        return None if d <= 5 else AUTO_CHI_LARGE
    try:
        cap = int(policy)
    except (TypeError, ValueError) as exc:
        raise InputError(f"unknown chi policy {policy!r}") from exc
    if cap < 1:
        raise InputError("chi cap must be positive")
    return cap


def read_results(path):
    if not os.path.exists(path):
        return []
    with open(path, newline="") as f:
        return [TrialBatchResult.from_row(row) for row in csv.DictReader(f)]


def append_result(path, result):
    """Append one row, writing the header for a new file; flushed immediately."""
    new_file = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        if new_file:
            writer.writerow(RESULT_COLUMNS)
        writer.writerow(result.to_row())
        f.flush()
        os.fsync(f.fileno())


def scan(distances, cycle_rule, model, strengths, trials, chi_policy=EXACT_CHI, backend="ttn",
         master_seed=0, results_path=None, leaf_maps=None, workers=None, progress=None):
    """
    Full factorial scan over distances and strengths.

    With `results_path`, cells already present in the file are skipped and
    each finished cell is appended. `leaf_maps` optionally maps d -> leaf map.
    Returns results in scan order.
    """
    distances, strengths = list(distances), list(strengths)
    if not distances or not strengths:
        raise InputError("scan grids must not be empty")
    done = {r.key: r for r in read_results(results_path)} if results_path else {}
    leaf_maps = leaf_maps or {}

    table = []
    for d in distances:
        cycles = cycles_for(d, cycle_rule)
        chi_cap = chi_for(d, chi_policy)
        for strength in strengths:
            chi_label = EXACT_CHI if chi_cap is None else str(chi_cap)
            key = (model.label, repr(float(strength)), d, cycles, chi_label)
            if key in done:
                logger.info("skipping completed cell d=%d C=%d strength=%g", d, cycles, strength)
                table.append(done[key])
                continue
            result = estimate_pfail(
                d, cycles, model, strength, trials, chi_cap=chi_cap, backend=backend,
                master_seed=master_seed, leaf_map=leaf_maps.get(d), workers=workers,
                progress=progress,
            )
            logger.info(
                "d=%d C=%d strength=%g: pfail=%.4g [%.4g, %.4g]",
                d, cycles, strength, result.pfail, result.ci_lo, result.ci_hi,
            )
            if results_path:
                append_result(results_path, result)
            table.append(result)
    return table
