import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field

from tqdm import tqdm

from analysis import fitting, plot_data, report, threshold, truncation
from exceptions import (
    ConfigError,
    FitError,
    InputError,
    LabError,
    NoCrossingError,
    NumericalError,
)
from qec.color_code import build_layout, build_memory_circuit
from qec.decoder import build_detectors, decode_and_adjudicate
from simulation.circuit import Circuit
from simulation.layout import (
    BUILTIN_LAYOUTS,
    DEFAULT_CANDIDATES,
    default_layout,
    measure_chi_exact,
    postselect_layouts,
    read_layout_csv,
    snake_layout,
    write_layout_csv,
)
from simulation.noise import NoiseModel
from simulation.runner import BACKENDS, simulate_records

logger = logging.getLogger("ttnqec")

VERSION = "0.1.0"

EXPERIMENTS = (
    "threshold-scan",
    "fit",
    "truncation-sweep",
    "layout-optimize",
    "twirl-compare",
    "simulate-once",
)

RESULTS_FILE = "results.csv"
FIT_FILE = "fit.json"
FIT_REPORT_FILE = "fit_report.txt"
LAYOUT_FILE = "layout.csv"
MANIFEST_FILE = "manifest.json"
TRIAL_FILE = "trial.txt"

FILE_FORMATS = {
    RESULTS_FILE: "csv v1: " + ",".join(threshold.RESULT_COLUMNS),
    FIT_FILE: "json v1: tau,nu,A,B,C,intervals,residuals,chi2,distances,points,restarts",
    FIT_REPORT_FILE: "text v1",
    LAYOUT_FILE: "csv v1: qubit,leaf",
    TRIAL_FILE: "text v1: detector history and outcome",
}

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


# Default run state; a config file overrides any subset of these keys
DEFAULT_CONFIG = {
    "experiment": "threshold-scan",
    "distances": [3],
    "cycles": "fixed-1",
    "noise": {"model": "depolarizing"},
    "strengths": [0.0],
    "backend": "ttn",
    "chi": "exact",
    "chi_grid": [],
    "layout": "default",
    "candidates": DEFAULT_CANDIDATES,
    "trials": 100,
    "seed": 0,
    "bootstrap": fitting.DEFAULT_BOOTSTRAP,
    "x_reference": "first-round",
    "workers": None,
    "output_dir": "results",
}


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    distances: tuple
    cycles: object
    noise: dict = field(hash=False)
    strengths: tuple
    backend: str
    chi: object
    chi_grid: tuple
    layout: str
    candidates: int
    trials: int
    seed: int
    bootstrap: int
    x_reference: str
    workers: object
    output_dir: str

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - set(DEFAULT_CONFIG)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        merged = {**DEFAULT_CONFIG, **data}
        if not isinstance(merged["noise"], dict):
            raise ConfigError("noise must be a JSON object")
        try:
            merged["distances"] = tuple(int(d) for d in merged["distances"])
            merged["strengths"] = tuple(float(s) for s in merged["strengths"])
            merged["chi_grid"] = tuple(int(c) for c in merged["chi_grid"])
            merged["trials"] = int(merged["trials"])
            merged["seed"] = int(merged["seed"])
            merged["candidates"] = int(merged["candidates"])
            merged["bootstrap"] = int(merged["bootstrap"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"malformed config value: {exc}") from exc
        return cls(**merged)

    @classmethod
    def load(cls, path):
        try:
            with open(path) as f:
                data = json.load(f)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self):
        data = asdict(self)
        for key in ("distances", "strengths", "chi_grid"):
            data[key] = list(data[key])
        return data

    @property
    def noise_model(self):
        try:
            return NoiseModel.from_dict(self.noise)
        except TypeError as exc:
            raise ConfigError(f"malformed noise section: {exc}") from exc

    @property
    def config_hash(self):
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def validate(self):
        """Check everything that can be checked without simulating."""
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}, expected one of {EXPERIMENTS}")
        if not self.distances:
            raise ConfigError("distances must not be empty")
        for d in self.distances:
            if d < 3 or d % 2 == 0:
                raise ConfigError(f"distance {d} must be odd and at least 3")
        if isinstance(self.cycles, str):
            if self.cycles not in threshold.CYCLE_RULES:
                raise ConfigError(f"cycles must be an integer or one of {threshold.CYCLE_RULES}")
        elif not isinstance(self.cycles, int) or self.cycles < 1:
            raise ConfigError("cycles must be a positive integer")
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown backend {self.backend!r}, expected one of {BACKENDS}")
        if self.trials < 1:
            raise ConfigError("trials must be positive")
        if self.candidates < 1:
            raise ConfigError("candidates must be positive")
        if self.bootstrap < 0:
            raise ConfigError("bootstrap must not be negative")
        if self.x_reference not in ("first-round", "ideal"):
            raise ConfigError(f"unknown x_reference {self.x_reference!r}")
        if self.layout not in BUILTIN_LAYOUTS and not os.path.isfile(self.layout):
            raise ConfigError(f"layout must be one of {BUILTIN_LAYOUTS} or a layout CSV path")
        try:
            for d in self.distances:
                threshold.chi_for(d, self.chi)
        except InputError as exc:
            raise ConfigError(str(exc)) from exc

        model = self.noise_model
        needs_strengths = ("threshold-scan", "fit", "twirl-compare", "simulate-once")
        if self.experiment in needs_strengths and not self.strengths:
            raise ConfigError(f"{self.experiment} needs a non-empty strength grid")
        for s in self.strengths:
            try:
                model.with_strength(s)
            except InputError as exc:
                raise ConfigError(str(exc)) from exc
        if self.backend == "stabilizer" and not model.is_pauli and self.experiment != "twirl-compare":
            raise ConfigError(f"{model.label} noise cannot run on the stabilizer backend")
        if self.experiment == "fit":
            if len(self.distances) < 2 or len(self.strengths) < 4:
                raise ConfigError("fit needs at least two distances and four strengths")
        if self.experiment == "twirl-compare" and model.model == "depolarizing":
            raise ConfigError("twirl-compare needs srx or ad noise")
        if self.experiment == "truncation-sweep" and not self.chi_grid:
            raise ConfigError("truncation-sweep needs a chi_grid")
        return self

    def cycles_for(self, d):
        return threshold.cycles_for(d, self.cycles)


class LabApp:
    def __init__(self, config, output_dir=None, show_progress=True):
        self.config = config
        self.output_dir = output_dir or config.output_dir
        self.show_progress = show_progress
        self.written = []

    # ================= FILES =================

    def path(self, name):
        return os.path.join(self.output_dir, name)

    def prepare_output(self):
        os.makedirs(self.output_dir, exist_ok=True)
        manifest_path = self.path(MANIFEST_FILE)
        if os.path.exists(manifest_path) and os.path.exists(self.path(RESULTS_FILE)):
            with open(manifest_path) as f:
                previous = json.load(f)
            if previous.get("config_sha256") != self.config.config_hash:
                raise ConfigError(
                    f"{self.output_dir} holds results of a different config; choose another output directory"
                )
            logger.info("resuming run in %s", self.output_dir)
        self.write_manifest()

    def write_manifest(self):
        manifest = {
            "version": VERSION,
            "experiment": self.config.experiment,
            "config_sha256": self.config.config_hash,
            "config": self.config.to_dict(),
            "seed": self.config.seed,
            "formats": FILE_FORMATS,
            "files": sorted(os.path.basename(p) for p in self.written),
        }
        with open(self.path(MANIFEST_FILE), "w") as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
            f.write("\n")

    def progress_bar(self, total, desc):
        return tqdm(total=total, desc=desc, unit="trial", disable=not self.show_progress or None)

    # ================= LAYOUTS =================

    def leaf_map_for(self, d):
        code = build_layout(d)
        circuit = build_memory_circuit(code, self.config.cycles_for(d))
        choice = self.config.layout
        if choice == "default":
            return default_layout(circuit.num_qubits).leaves
        if choice == "snake":
            return snake_layout(code).leaves
        if choice == "optimized":
            best, chi, _ = postselect_layouts(
                circuit, self.config.candidates, self.config.seed, workers=self.config.workers
            )
            logger.info("d=%d: optimized layout with chi_exact=%d", d, chi)
            return best.leaves
        return read_layout_csv(choice).leaves

    def leaf_maps(self):
        if self.config.backend != "ttn":
            return {}
        return {d: self.leaf_map_for(d) for d in self.config.distances}

    # ================= EXPERIMENTS =================

    def run(self):
        self.prepare_output()
        handler = {
            "threshold-scan": self.run_scan,
            "fit": self.run_fit,
            "truncation-sweep": self.run_truncation,
            "layout-optimize": self.run_layout,
            "twirl-compare": self.run_twirl_compare,
            "simulate-once": self.run_simulate_once,
        }[self.config.experiment]
        logger.info("starting %s (seed %d)", self.config.experiment, self.config.seed)
        handler()
        self.write_manifest()
        logger.info("finished %s; outputs in %s", self.config.experiment, self.output_dir)

    def _scan(self, model, backend):
        cfg = self.config
        total = len(cfg.distances) * len(cfg.strengths) * cfg.trials
        results_path = self.path(RESULTS_FILE)
        leaf_maps = self.leaf_maps() if backend == "ttn" else None
        with self.progress_bar(total, model.label) as bar:
            table = threshold.scan(
                cfg.distances, cfg.cycles, model, cfg.strengths, cfg.trials, chi_policy=cfg.chi,
                backend=backend, master_seed=cfg.seed, results_path=results_path,
                leaf_maps=leaf_maps, workers=cfg.workers, progress=bar.update,
            )
        self.written.append(results_path)
        return table

    def run_scan(self):
        table = self._scan(self.config.noise_model, self.config.backend)
        print(report.generate_run_summary(self.config, table))
        return table

    def run_fit(self):
        table = self.run_scan()
        fit = fitting.fit_threshold(
            table, self.config.distances, bootstrap=self.config.bootstrap, seed=self.config.seed
        )
        self.written.append(report.save_fit_json(fit, self.path(FIT_FILE)))
        text = report.generate_fit_text(fit, self.config.noise_model.label)
        self.written.append(report.save_report_txt(text, self.path(FIT_REPORT_FILE)))
        print(text)
        return fit

    def run_truncation(self):
        cfg = self.config
        results_path = self.path(RESULTS_FILE)
        # truncation rows are rewritten on every run
        if os.path.exists(results_path):
            os.remove(results_path)
        points = []
        for d in cfg.distances:
            total = (len(cfg.chi_grid) + 1) * cfg.trials
            with self.progress_bar(total, f"d={d} truncation") as bar:
                points += truncation.truncation_sweep(
                    d, cfg.cycles_for(d), cfg.chi_grid, cfg.trials, seed=cfg.seed,
                    results_path=results_path, workers=cfg.workers, progress=bar.update,
                )
        self.written.append(results_path)
        self.written += plot_data.emit_plot_data(results_path, self.output_dir)
        for p in points:
            print(f"chi={p.chi} ratio={p.chi_ratio:.4g} pfail={p.pfail:.4g}")
        return points

    def run_layout(self):
        cfg = self.config
        d = cfg.distances[0]
        code = build_layout(d)
        circuit = build_memory_circuit(code, cfg.cycles_for(d))
        best, chi, scores = postselect_layouts(circuit, cfg.candidates, cfg.seed, workers=cfg.workers)
        self.written.append(write_layout_csv(self.path(LAYOUT_FILE), best))
        snake = measure_chi_exact(circuit, snake_layout(code), cfg.seed)
        default = measure_chi_exact(circuit, default_layout(circuit.num_qubits), cfg.seed)
        print(f"chi_exact  default={default}  snake={snake}  optimized={chi}  (best of {len(scores)})")
        return best, chi

    def run_twirl_compare(self):
        cfg = self.config
        exact = cfg.noise_model
        twirled = NoiseModel(**{**exact.to_dict(), "twirled": True})
        exact_table = self._scan(exact, "ttn")
        # twirled noise is Pauli, so the Clifford backend can run it when asked for
        twirled_backend = "stabilizer" if cfg.backend == "stabilizer" else "ttn"
        twirled_table = self._scan(twirled, twirled_backend)
        pairs = {}
        for r in exact_table:
            pairs.setdefault((r.d, r.strength), {})["exact"] = r
        for r in twirled_table:
            pairs.setdefault((r.d, r.strength), {})["twirled"] = r
        for (d, strength), pair in sorted(pairs.items()):
            e, t = pair["exact"], pair["twirled"]
            print(
                f"d={d} strength={strength:.4g}: exact {e.pfail:.4g} [{e.ci_lo:.3g}, {e.ci_hi:.3g}]"
                f"  twirled {t.pfail:.4g} [{t.ci_lo:.3g}, {t.ci_hi:.3g}]"
            )
        return exact_table, twirled_table

    def run_simulate_once(self):
        cfg = self.config
        d = cfg.distances[0]
        code = build_layout(d)
        circuit = build_memory_circuit(code, cfg.cycles_for(d))
        model = cfg.noise_model.with_strength(cfg.strengths[0])
        chi_cap = threshold.chi_for(d, cfg.chi)
        leaf_map = self.leaf_map_for(d) if cfg.backend == "ttn" else None
        record, state = simulate_records(
            code, circuit, model, 0, cfg.seed, cfg.backend, chi_cap, leaf_map
        )
        history = build_detectors(record, code, cfg.x_reference)
        failed, correction = decode_and_adjudicate(record, code, cfg.x_reference)
        lines = [history.to_text().rstrip("\n")]
        lines.append(f"# max_bond {state.max_bond_seen}")
        lines.append(f"# discarded_weight {state.cumulative_discarded_weight!r}")
        lines.append(f"# correction {correction.pauli if correction else 'none'}")
        lines.append(f"# logical_failure {int(failed)}")
        path = self.path(TRIAL_FILE)
        with open(path, "w") as f:
            f.write("\n".join(lines) + "\n")
        self.written.append(path)
        print(f"d={d}: {history.detector_count} detectors, logical failure: {failed}")
        return failed


# ================= COMMANDS =================

def command_run(args):
    config = RunConfig.load(args.config).validate()
    LabApp(config, output_dir=args.out, show_progress=not args.quiet).run()


def command_validate(args):
    config = RunConfig.load(args.config).validate()
    print(f"{args.config}: valid {config.experiment} config (sha256 {config.config_hash[:12]})")


def command_plot_data(args):
    written = plot_data.emit_plot_data(args.results, args.out)
    for path in written:
        print(path)


def _circuit_from_arg(arg):
    """A circuit text file, or a memory circuit given as d=<d>,C=<cycles>."""
    if os.path.isfile(arg):
        with open(arg) as f:
            return None, Circuit.from_text(f.read())
    try:
        parts = dict(item.split("=") for item in arg.split(","))
        d, cycles = int(parts["d"]), int(parts["C"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"circuit {arg!r} is neither a file nor d=<d>,C=<cycles>") from exc
    try:
        code = build_layout(d)
    except InputError as exc:
        raise ConfigError(str(exc)) from exc
    return code, build_memory_circuit(code, cycles)


def command_layout(args):
    code, circuit = _circuit_from_arg(args.circuit)
    if args.ordering == "optimized":
        assignment, chi, _ = postselect_layouts(circuit, args.candidates, args.seed)
    else:
        if args.ordering == "snake":
            if code is None:
                raise ConfigError("snake ordering needs a d=<d>,C=<cycles> circuit")
            assignment = snake_layout(code)
        else:
            assignment = default_layout(circuit.num_qubits)
        chi = measure_chi_exact(circuit, assignment, args.seed)
    if args.out:
        write_layout_csv(args.out, assignment)
    print(f"{args.ordering} layout: chi_exact={chi}")


def build_parser():
    parser = argparse.ArgumentParser(prog="ttnqec", description="Tree tensor network QEC lab")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment config")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("-q", "--quiet", action="store_true", help="no progress bars")
    p.set_defaults(func=command_run)

    p = sub.add_parser("validate", help="check a config without running it")
    p.add_argument("config")
    p.set_defaults(func=command_validate)

    p = sub.add_parser("plot-data", help="export plot tables from a results CSV")
    p.add_argument("results")
    p.add_argument("--out", help="output directory (default: next to the results)")
    p.set_defaults(func=command_plot_data)

    p = sub.add_parser("layout", help="score or optimize a qubit-to-leaf layout")
    p.add_argument("circuit", help="circuit text file or d=<d>,C=<cycles>")
    p.add_argument("--ordering", choices=BUILTIN_LAYOUTS, default="optimized")
    p.add_argument("--candidates", type=int, default=DEFAULT_CANDIDATES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the layout CSV here")
    p.set_defaults(func=command_layout)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except (ConfigError, InputError) as e:
        logger.error("invalid input: %s", e)
        return EXIT_CONFIG
    except (NumericalError, FitError, NoCrossingError) as e:
        logger.error("numerical failure: %s", e)
        return EXIT_NUMERICAL
    except LabError as e:
        logger.error("run failed: %s", e)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
