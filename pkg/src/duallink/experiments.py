"""
Experiment orchestration: config files, sweeps, and CSV emission.

A flat key=value config selects a scenario (boundary units: dBm for powers,
dBm/Hz for the noise PSD, dB for antenna gains, GHz for carrier and
bandwidth; everything else SI) plus one sweep axis.  For every grid point
the requested schemes are solved; spectral-efficiency columns come from the
largest stabilisable arrival rate, delay columns from a seeded queue
simulation at the configured arrival rate.  Results land in one CSV with a
small sidecar recording the seed and a config digest.
"""

from __future__ import annotations

import csv
import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace

from .allocation import max_feasible_arrival, sca_power_allocation
from .link import ScenarioParams
from .oma import oma_max_feasible_arrival, oma_optimize
from .queuesim import mean_delay, run_simulation

CSV_HEADER = [
    "sweep_value", "scheme", "se_h", "se_l", "se_sum", "a_star",
    "tau_h_slots", "tau_l_slots", "stable", "iterations", "status",
]

_AXES = ("alpha", "q_d", "n_ris", "arrival")
_SCHEMES = ("mcsc", "oma", "both")
_METRICS = ("se", "delay", "both")


class ConfigParseError(Exception):
    """The config file is not flat key=value text."""


class ConfigValidationError(Exception):
    """The config parsed but holds unknown keys or inconsistent values."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Scenario plus sweep selection; see load_config for the file format."""

    scenario: ScenarioParams
    axis: str = "alpha"
    grid: tuple[float, ...] = (0.0, 0.05, 0.10, 0.15, 0.20, 0.25)
    scheme: str = "both"
    metrics: str = "se"
    horizon: int = 100000
    seed: int = 1
    out: str = "sweep.csv"
    workers: int = 1
    se_weighted: bool = True
    alt_hc_surrogate: bool = False
    oma_lc_ris: bool = False

    def __post_init__(self):
        if self.axis not in _AXES:
            raise ConfigValidationError(f"axis must be one of {_AXES}, got {self.axis!r}")
        if self.scheme not in _SCHEMES:
            raise ConfigValidationError(f"scheme must be one of {_SCHEMES}, got {self.scheme!r}")
        if self.metrics not in _METRICS:
            raise ConfigValidationError(f"metrics must be one of {_METRICS}, got {self.metrics!r}")
        if len(self.grid) == 0:
            raise ConfigValidationError("sweep grid must be nonempty")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ConfigValidationError("sweep grid must be strictly increasing")
        if self.metrics in ("delay", "both") and self.horizon < 1000:
            raise ConfigValidationError("horizon must be >= 1000 for delay experiments")
        if self.horizon < 1:
            raise ConfigValidationError("horizon must be >= 1")
        if self.workers < 1:
            raise ConfigValidationError("workers must be >= 1")


@dataclass(frozen=True)
class SweepRow:
    """One CSV row: a sweep point solved for one scheme."""

    sweep_value: float
    scheme: str
    se_h: float | None = None
    se_l: float | None = None
    se_sum: float | None = None
    a_star: float | None = None
    tau_h_slots: float | None = None
    tau_l_slots: float | None = None
    stable: bool | None = None
    iterations: int | None = None
    status: str = "ok"


def _db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def _dbm_to_watt(dbm: float) -> float:
    return _db_to_linear(dbm) * 1e-3


_SCENARIO_CONVERSIONS = {
    "f": lambda v: v * 1e9,
    "bandwidth": lambda v: v * 1e9,
    "p_max": _dbm_to_watt,
    "noise_psd": _dbm_to_watt,
    "g_b": _db_to_linear,
    "g_u": _db_to_linear,
}
_SCENARIO_INTS = {"n_b", "n_r"}
_EXPERIMENT_STRS = {"axis", "scheme", "metrics", "out"}
_EXPERIMENT_INTS = {"horizon", "seed", "workers"}
_EXPERIMENT_BOOLS = {"se_weighted", "alt_hc_surrogate", "oma_lc_ris"}


def _parse_bool(key: str, raw: str) -> bool:
    low = raw.lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ConfigValidationError(f"{key}: expected a boolean, got {raw!r}")


def _parse_number(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigValidationError(f"{key}: expected a number, got {raw!r}") from exc


def default_config() -> ExperimentConfig:
    """Baseline experiment: the default scenario swept over the HC fraction."""
    return ExperimentConfig(scenario=ScenarioParams())


def load_config(path: str) -> ExperimentConfig:
    """
    Read and validate a flat key=value config file.

    Scenario keys mirror ScenarioParams field names; f and bandwidth are
    given in GHz, p_max in dBm, noise_psd in dBm/Hz, g_b and g_u in dB, all
    other values in their SI units.  Experiment keys: axis, grid (comma
    separated), scheme, metrics, horizon, seed, out, workers, se_weighted,
    alt_hc_surrogate, oma_lc_ris.  Lines starting with '#' are ignored.
    An empty file yields the default scenario and sweep.

    Raises FileNotFoundError, ConfigParseError, or ConfigValidationError.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()

    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigParseError(f"line {lineno}: expected key=value, got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigParseError(f"line {lineno}: empty key")
        if key in raw:
            raise ConfigValidationError(f"duplicate key {key!r}")
        raw[key] = value

    scenario_fields = {f.name for f in fields(ScenarioParams)}
    scenario_kwargs = {}
    experiment_kwargs = {}
    for key, value in raw.items():
        if key in scenario_fields:
            if key in _SCENARIO_INTS:
                scenario_kwargs[key] = int(_parse_number(key, value))
            else:
                num = _parse_number(key, value)
                conv = _SCENARIO_CONVERSIONS.get(key)
                scenario_kwargs[key] = conv(num) if conv else num
        elif key == "grid":
            try:
                experiment_kwargs["grid"] = tuple(float(v) for v in value.split(","))
            except ValueError as exc:
                raise ConfigValidationError("grid: expected comma separated numbers") from exc
        elif key in _EXPERIMENT_STRS:
            experiment_kwargs[key] = value
        elif key in _EXPERIMENT_INTS:
            experiment_kwargs[key] = int(_parse_number(key, value))
        elif key in _EXPERIMENT_BOOLS:
            experiment_kwargs[key] = _parse_bool(key, value)
        else:
            raise ConfigValidationError(f"unknown config key {key!r}")

    try:
        scenario = ScenarioParams(**scenario_kwargs)
    except ValueError as exc:
        raise ConfigValidationError(str(exc)) from exc
    return ExperimentConfig(scenario=scenario, **experiment_kwargs)


def _apply_axis(scenario: ScenarioParams, axis: str, value: float) -> ScenarioParams:
    if axis == "alpha":
        return replace(scenario, alpha=value)
    if axis == "q_d":
        return replace(scenario, q_d=value)
    if axis == "n_ris":
        return replace(scenario, n_r=int(value))
    if axis == "arrival":
        return replace(scenario, arrival_rate=value)
    raise ConfigValidationError(f"unknown axis {axis!r}")


def spectral_efficiency(
    scenario: ScenarioParams,
    alpha: float,
    scheme: str = "mcsc",
    *,
    weighted: bool = True,
    alt_hc_surrogate: bool = False,
    oma_lc_ris: bool = False,
) -> tuple[float, float, float]:
    """
    Per-stream and sum spectral efficiency [bit/s/Hz] at the largest
    stabilisable arrival rate for the given HC fraction.

    With ``weighted`` (the default) each stream's rate is discounted by its
    route availability, i.e. the long-run successfully delivered rate per
    hertz; otherwise the raw Shannon rates are reported.
    """
    se_h, se_l, *_ = _capacity_point(
        scenario, alpha, scheme,
        weighted=weighted,
        alt_hc_surrogate=alt_hc_surrogate,
        oma_lc_ris=oma_lc_ris,
    )
    return se_h, se_l, se_h + se_l


def _capacity_point(
    scenario: ScenarioParams,
    alpha: float,
    scheme: str,
    *,
    weighted: bool,
    alt_hc_surrogate: bool,
    oma_lc_ris: bool,
) -> tuple[float, float, float, int]:
    """(se_h, se_l, a_star, iterations) at the feasibility boundary."""
    if scheme == "mcsc":
        a_star = max_feasible_arrival(
            scenario, alpha, alt_hc_surrogate=alt_hc_surrogate
        )
        res = sca_power_allocation(
            scenario, alpha, a_star, alt_hc_surrogate=alt_hc_surrogate
        )
        rate_h, rate_l, iters = res.rate_h, res.rate_l, res.iterations
    elif scheme == "oma":
        a_star = oma_max_feasible_arrival(scenario, alpha, lc_ris_assist=oma_lc_ris)
        res = oma_optimize(scenario, alpha, a_star, lc_ris_assist=oma_lc_ris)
        rate_h, rate_l, iters = res.rate_h, res.rate_l, 0
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    wh = (1.0 - scenario.q_r) if weighted else 1.0
    wl = (1.0 - scenario.q_d) if weighted else 1.0
    return (
        wh * rate_h / scenario.bandwidth,
        wl * rate_l / scenario.bandwidth,
        a_star,
        iters,
    )


def _operating_rates(
    scenario: ScenarioParams,
    scheme: str,
    *,
    alt_hc_surrogate: bool,
    oma_lc_ris: bool,
) -> tuple[float, float, int]:
    """Stream rates [bit/s] at the configured traffic, for queue simulation."""
    if scheme == "mcsc":
        res = sca_power_allocation(scenario, alt_hc_surrogate=alt_hc_surrogate)
        return res.rate_h, res.rate_l, res.iterations
    res = oma_optimize(scenario, lc_ris_assist=oma_lc_ris)
    return res.rate_h, res.rate_l, 0


def _sweep_point(args: tuple[ExperimentConfig, int, float]) -> list[SweepRow]:
    config, index, value = args
    schemes = ["mcsc", "oma"] if config.scheme == "both" else [config.scheme]
    try:
        scenario = _apply_axis(config.scenario, config.axis, value)
    except (ValueError, ConfigValidationError) as exc:
        return [
            SweepRow(sweep_value=value, scheme=s, status=f"error:{type(exc).__name__}")
            for s in schemes
        ]

    rows = []
    for scheme in schemes:
        se_h = se_l = se_sum = a_star = tau_h = tau_l = None
        stable = None
        iterations = None
        try:
            if config.metrics in ("se", "both"):
                se_h, se_l, a_star, iterations = _capacity_point(
                    scenario, scenario.alpha, scheme,
                    weighted=config.se_weighted,
                    alt_hc_surrogate=config.alt_hc_surrogate,
                    oma_lc_ris=config.oma_lc_ris,
                )
                se_sum = se_h + se_l
            if config.metrics in ("delay", "both"):
                rate_h, rate_l, sim_iters = _operating_rates(
                    scenario, scheme,
                    alt_hc_surrogate=config.alt_hc_surrogate,
                    oma_lc_ris=config.oma_lc_ris,
                )
                if iterations is None:
                    iterations = sim_iters
                trace = run_simulation(
                    scenario, (rate_h, rate_l), config.horizon, config.seed + index
                )
                stats = mean_delay(
                    trace, scenario.alpha, scenario.arrival_rate, scenario.slot_duration
                )
                tau_h = stats.tau_h_slots
                tau_l = stats.tau_l_slots
                stable = stats.stable
            rows.append(SweepRow(
                sweep_value=value, scheme=scheme,
                se_h=se_h, se_l=se_l, se_sum=se_sum, a_star=a_star,
                tau_h_slots=tau_h, tau_l_slots=tau_l,
                stable=stable, iterations=iterations, status="ok",
            ))
        except Exception as exc:  # keep the sweep alive on a bad point
            rows.append(SweepRow(
                sweep_value=value, scheme=scheme,
                status=f"error:{type(exc).__name__}",
            ))
    return rows


def run_sweep(config: ExperimentConfig) -> list[SweepRow]:
    """
    Solve every sweep point, write the CSV and its sidecar, return the rows.

    Points run independently (optionally in a process pool); rows are
    ordered by sweep index then scheme regardless of completion order, so a
    given config and seed always produce byte-identical output.
    """
    payloads = [(config, i, v) for i, v in enumerate(config.grid)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            chunks = list(pool.map(_sweep_point, payloads))
    else:
        chunks = [_sweep_point(p) for p in payloads]
    rows = [row for chunk in chunks for row in chunk]
    write_rows(config.out, rows)
    _write_sidecar(config)
    return rows


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rows(path: str, rows: list[SweepRow]) -> None:
    """Emit rows as RFC-4180 CSV with full float precision."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow([
                _format_cell(row.sweep_value),
                row.scheme,
                _format_cell(row.se_h),
                _format_cell(row.se_l),
                _format_cell(row.se_sum),
                _format_cell(row.a_star),
                _format_cell(row.tau_h_slots),
                _format_cell(row.tau_l_slots),
                _format_cell(row.stable),
                _format_cell(row.iterations),
                row.status,
            ])


def read_rows(path: str) -> list[SweepRow]:
    """Parse a sweep CSV back into rows; inverse of write_rows."""

    def opt_float(cell: str) -> float | None:
        return None if cell == "" else float(cell)

    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ConfigParseError(f"unexpected CSV header {header!r}")
        for rec in reader:
            rows.append(SweepRow(
                sweep_value=float(rec[0]),
                scheme=rec[1],
                se_h=opt_float(rec[2]),
                se_l=opt_float(rec[3]),
                se_sum=opt_float(rec[4]),
                a_star=opt_float(rec[5]),
                tau_h_slots=opt_float(rec[6]),
                tau_l_slots=opt_float(rec[7]),
                stable=None if rec[8] == "" else rec[8] == "true",
                iterations=None if rec[9] == "" else int(rec[9]),
                status=rec[10],
            ))
    return rows


def config_digest(config: ExperimentConfig) -> str:
    return hashlib.sha256(repr(config).encode()).hexdigest()


def _write_sidecar(config: ExperimentConfig) -> None:
    with open(config.out + ".meta", "w", encoding="utf-8") as fh:
        fh.write(f"seed={config.seed}\n")
        fh.write(f"config_sha256={config_digest(config)}\n")


def tipping_point(rows: list[SweepRow]) -> float | None:
    """
    Sweep value where the superposition scheme's sum SE leads the baseline
    by the widest margin; None unless both schemes are present.
    """
    mcsc = {r.sweep_value: r.se_sum for r in rows
            if r.scheme == "mcsc" and r.status == "ok" and r.se_sum is not None}
    oma = {r.sweep_value: r.se_sum for r in rows
           if r.scheme == "oma" and r.status == "ok" and r.se_sum is not None}
    shared = sorted(set(mcsc) & set(oma))
    if not shared:
        return None
    return max(shared, key=lambda v: mcsc[v] - oma[v])
