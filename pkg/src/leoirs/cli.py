"""Command-line front end.

Subcommands: power-sweep, element-sweep, snapshot, tracking, selftest.
Every run is configured by a flat ``key = value`` file (see --help-config
for the full key listing) plus repeatable ``--set key=value`` overrides;
``--seed`` and ``--out`` override their config keys. Results go to stdout
as CSV, or to the --out path with a companion PNG figure.

Exit codes: 0 success, 1 configuration/validation error, 2 runtime error,
3 selftest failure.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence, TextIO

import numpy as np

from .beamforming import SCHEMES
from .estimation import TrainingConfig
from .experiments import ResultRow, SweepSpec, run_sweep, run_tracking_experiment
from .geometry import ScenarioConfig
from .tracking import INCREMENT_MODES, MODES, ProtocolConfig

_CSV_HEADER = "variable,scheme,value,gamma,rate_bps_hz,trials,seed"

_DEFAULT_POWER_VALUES = (20.0, 25.0, 30.0, 35.0, 40.0)
_DEFAULT_ELEMENT_VALUES = (1400.0, 1750.0, 2100.0, 2450.0, 2800.0)


class ConfigError(ValueError):
    """A configuration problem the user can fix (exit code 1)."""


# -- value parsers -----------------------------------------------------------


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"expected a number, got {text!r}") from exc


def _parse_int(text: str) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"expected an integer, got {text!r}") from exc


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"expected true/false, got {text!r}")


def _parse_vec3(text: str) -> Optional[tuple[float, float, float]]:
    if text.strip().lower() == "auto":
        return None
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise ConfigError(f"expected three comma-separated numbers, got {text!r}")
    x, y, z = (_parse_float(p) for p in parts)
    return (x, y, z)


def _parse_int_or_auto(text: str) -> Optional[int]:
    if text.strip().lower() in ("auto", "none"):
        return None
    value = _parse_int(text)
    if value < 1:
        raise ConfigError("pilot counts must be positive")
    return value


def _parse_levels(text: str) -> Optional[int]:
    if text.strip().lower() in ("none", "off"):
        return None
    value = _parse_int(text)
    if value < 2:
        raise ConfigError("phase_levels must be at least 2")
    return value


def _parse_float_list(text: str) -> tuple[float, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ConfigError("expected a comma-separated list of numbers")
    return tuple(_parse_float(p) for p in parts)


def _parse_schemes(text: str) -> tuple[str, ...]:
    if text.strip().lower() == "all":
        return SCHEMES
    parts = tuple(p.strip() for p in text.split(",") if p.strip())
    for p in parts:
        if p not in SCHEMES:
            raise ConfigError(f"unknown scheme {p!r}; known: {', '.join(SCHEMES)}")
    if not parts:
        raise ConfigError("expected at least one scheme")
    return parts


def _parse_modes(text: str) -> tuple[str, ...]:
    parts = tuple(p.strip() for p in text.split(",") if p.strip())
    for p in parts:
        if p not in MODES:
            raise ConfigError(f"unknown mode {p!r}; known: {', '.join(MODES)}")
    if not parts:
        raise ConfigError("expected at least one mode")
    return parts


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in options:
            raise ConfigError(f"expected one of {options}, got {text!r}")
        return text

    return parse


# -- key registry ------------------------------------------------------------


@dataclass(frozen=True)
class _Key:
    parse: Callable[[str], object]
    default: str
    help: str


_KEYS: dict[str, _Key] = {
    "orbit.altitude_m": _Key(_parse_float, "6e5", "orbit altitude above the Earth surface"),
    "orbit.speed_mps": _Key(_parse_float, "7566.5", "orbital speed"),
    "orbit.earth_radius_m": _Key(_parse_float, "6.37e6", "Earth radius"),
    "nodes.gn_position_m": _Key(_parse_vec3, "auto", "GN position x,y,z or 'auto'"),
    "nodes.irs1_position_m": _Key(_parse_vec3, "auto", "ground surface position x,y,z or 'auto'"),
    "nodes.sat_offset_m": _Key(_parse_vec3, "3,0,3", "satellite surface offset x,y,z"),
    "link.wavelength_m": _Key(_parse_float, "2.0", "carrier wavelength"),
    "link.spacing_m": _Key(_parse_float, "0.25", "antenna/element spacing"),
    "link.ref_path_gain_db": _Key(_parse_float, "-30", "path gain at unit distance, dB"),
    "link.noise_power_dbm": _Key(_parse_float, "-90", "receiver noise power, dBm"),
    "link.tx_power_dbm": _Key(_parse_float, "30", "transmit power, dBm"),
    "link.rician_factor_db": _Key(_parse_float, "10", "Rician factor, dB ('inf' = pure LoS)"),
    "arrays.n1x": _Key(_parse_int, "5", "GN antennas along x"),
    "arrays.n1y": _Key(_parse_int, "5", "GN antennas along y"),
    "arrays.n2x": _Key(_parse_int, "5", "satellite antennas along x"),
    "arrays.n2y": _Key(_parse_int, "5", "satellite antennas along y"),
    "arrays.m1x": _Key(_parse_int, "25", "ground surface elements along x"),
    "arrays.m1y": _Key(_parse_int, "20", "ground surface elements along y"),
    "arrays.m2x": _Key(_parse_int, "25", "satellite surface elements along x"),
    "arrays.m2y": _Key(_parse_int, "20", "satellite surface elements along y"),
    "channel.short_link_model": _Key(
        _choice("rank_one", "near_field"), "rank_one", "short-link propagation model"
    ),
    "channel.consistent_gains": _Key(
        _parse_bool, "true", "synthesize the inter-surface gain so the link factors exactly"
    ),
    "run.seed": _Key(_parse_int, "0", "root RNG seed (flag --seed overrides)"),
    "run.out": _Key(str, "", "output CSV path; empty = stdout (flag --out overrides)"),
    "run.trials": _Key(_parse_int, "20", "fading trials per sweep point"),
    "run.schemes": _Key(_parse_schemes, "all", "comma list of schemes, or 'all'"),
    "run.plot": _Key(_parse_bool, "true", "render a PNG beside the CSV when --out is set"),
    "training.i_d": _Key(_parse_int_or_auto, "auto", "downlink pilots ('auto' = M1 + 2)"),
    "training.i_u": _Key(_parse_int_or_auto, "auto", "uplink pilots ('auto' = M2 + 2)"),
    "training.noise_var": _Key(_parse_float, "0", "observation noise variance (normalized)"),
    "training.grid_points": _Key(_parse_int, "256", "angle-search grid density"),
    "training.refine_iters": _Key(_parse_int, "48", "angle-search refinement iterations"),
    "training.in_plane": _Key(_parse_bool, "true", "restrict the angle search to the orbital plane"),
    "sweep.values": _Key(_parse_float_list, "per subcommand", "swept values, comma separated"),
    "sweep.t_s": _Key(_parse_float, "10", "evaluation time along the pass, seconds"),
    "sweep.phase_levels": _Key(_parse_levels, "none", "quantize reflection phases to K levels"),
    "protocol.frame_duration_s": _Key(_parse_float, "10", "re-training interval"),
    "protocol.total_time_s": _Key(_parse_float, "40", "tracked duration"),
    "protocol.sample_interval_s": _Key(_parse_float, "0.5", "sampling interval"),
    "protocol.training_time_s": _Key(_parse_float, "1.0", "training period per frame"),
    "protocol.increment_mode": _Key(
        _choice(*INCREMENT_MODES), "finite_difference", "angular-rate model for prediction"
    ),
    "protocol.modes": _Key(_parse_modes, "proposed,benchmark,perfect", "tracking modes to run"),
}

_SCENARIO_FIELDS = {
    "orbit.altitude_m": "orbit_altitude_m",
    "orbit.speed_mps": "orbit_speed_mps",
    "orbit.earth_radius_m": "earth_radius_m",
    "nodes.gn_position_m": "gn_position_m",
    "nodes.irs1_position_m": "irs1_position_m",
    "nodes.sat_offset_m": "sat_offset_m",
    "link.wavelength_m": "wavelength_m",
    "link.spacing_m": "spacing_m",
    "link.ref_path_gain_db": "ref_path_gain_db",
    "link.noise_power_dbm": "noise_power_dbm",
    "link.tx_power_dbm": "tx_power_dbm",
    "link.rician_factor_db": "rician_factor_db",
    "arrays.n1x": "n1x",
    "arrays.n1y": "n1y",
    "arrays.n2x": "n2x",
    "arrays.n2y": "n2y",
    "arrays.m1x": "m1x",
    "arrays.m1y": "m1y",
    "arrays.m2x": "m2x",
    "arrays.m2y": "m2y",
    "channel.short_link_model": "short_link_model",
    "channel.consistent_gains": "consistent_gains",
}

_TRAINING_FIELDS = {
    "training.i_d": "i_d",
    "training.i_u": "i_u",
    "training.noise_var": "noise_var",
    "training.grid_points": "grid_points",
    "training.refine_iters": "refine_iters",
    "training.in_plane": "in_plane",
}

_PROTOCOL_FIELDS = {
    "protocol.frame_duration_s": "frame_duration_s",
    "protocol.total_time_s": "total_time_s",
    "protocol.sample_interval_s": "sample_interval_s",
    "protocol.training_time_s": "training_time_s",
    "protocol.increment_mode": "increment_mode",
}


def parse_config(text: str, source: str = "config") -> dict[str, str]:
    """Parse flat ``key = value`` lines into a raw string mapping.

    Blank lines and '#' comments are skipped. Unknown and duplicate keys
    raise ConfigError naming the key and line number.
    """
    raw: dict[str, str] = {}
    lines_seen: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}: line {lineno} is not 'key = value': {line.strip()!r}")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _KEYS:
            raise ConfigError(f"{source}: unknown key {key!r} (line {lineno})")
        if key in raw:
            raise ConfigError(
                f"{source}: duplicate key {key!r} (line {lineno}, first on line {lines_seen[key]})"
            )
        raw[key] = value
        lines_seen[key] = lineno
    return raw


@dataclass
class Settings:
    """Fully typed run settings assembled from config plus flags."""

    scenario: ScenarioConfig
    training: TrainingConfig
    protocol: ProtocolConfig
    seed: int = 0
    out: Optional[Path] = None
    trials: int = 20
    schemes: tuple[str, ...] = SCHEMES
    plot: bool = True
    sweep_values: Optional[tuple[float, ...]] = None
    t_s: float = 10.0
    phase_levels: Optional[int] = None
    modes: tuple[str, ...] = ("proposed", "benchmark", "perfect")


def build_settings(raw: dict[str, str]) -> Settings:
    """Type-check raw key/value strings and assemble the settings bundle."""
    typed: dict[str, object] = {}
    for key, value in raw.items():
        try:
            typed[key] = _KEYS[key].parse(value)
        except ConfigError as exc:
            raise ConfigError(f"key {key!r}: {exc}") from exc
    scen_kwargs = {fld: typed[key] for key, fld in _SCENARIO_FIELDS.items() if key in typed}
    train_kwargs = {fld: typed[key] for key, fld in _TRAINING_FIELDS.items() if key in typed}
    proto_kwargs = {fld: typed[key] for key, fld in _PROTOCOL_FIELDS.items() if key in typed}
    seed = int(typed.get("run.seed", 0))
    try:
        scenario = ScenarioConfig(rng_seed=seed, **scen_kwargs)
        training = TrainingConfig(**train_kwargs)
        protocol = ProtocolConfig(training=training, **proto_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out_text = str(typed.get("run.out", "") or "")
    return Settings(
        scenario=scenario,
        training=training,
        protocol=protocol,
        seed=seed,
        out=Path(out_text) if out_text else None,
        trials=int(typed.get("run.trials", 20)),
        schemes=typed.get("run.schemes", SCHEMES),  # type: ignore[arg-type]
        plot=bool(typed.get("run.plot", True)),
        sweep_values=typed.get("sweep.values"),  # type: ignore[arg-type]
        t_s=float(typed.get("sweep.t_s", 10.0)),
        phase_levels=typed.get("sweep.phase_levels"),  # type: ignore[arg-type]
        modes=typed.get("protocol.modes", ("proposed", "benchmark", "perfect")),  # type: ignore[arg-type]
    )


def emit_csv(rows: Sequence[ResultRow], stream: TextIO) -> None:
    """Write rows in the fixed column order with 9 significant digits."""
    stream.write(_CSV_HEADER + "\n")
    for r in rows:
        stream.write(
            f"{r.variable},{r.scheme},{r.value:.9g},{r.gamma:.9g},"
            f"{r.rate_bps_hz:.9g},{r.trials},{r.seed}\n"
        )


def _write_output(rows: Sequence[ResultRow], settings: Settings) -> None:
    if settings.out is None:
        emit_csv(rows, sys.stdout)
        return
    settings.out.parent.mkdir(parents=True, exist_ok=True)
    with open(settings.out, "w", encoding="utf-8", newline="") as fh:
        emit_csv(rows, fh)
    print(f"wrote {settings.out}", file=sys.stderr)
    if settings.plot:
        from .figures import plot_rows

        fig_path = settings.out.with_suffix(".png")
        plot_rows(rows, fig_path)
        print(f"wrote {fig_path}", file=sys.stderr)


def print_config_help(stream: TextIO) -> None:
    """Emit the generated key listing for --help-config."""
    stream.write("Configuration keys (flat 'key = value' lines, '#' comments):\n\n")
    section = ""
    for key in _KEYS:
        head = key.split(".", 1)[0]
        if head != section:
            section = head
            stream.write(f"[{section}]\n")
        meta = _KEYS[key]
        stream.write(f"  {key:<28} default: {meta.default:<16} {meta.help}\n")
    stream.write(
        "\nPrecedence: built-in defaults < --config file < --set key=value"
        " < --seed/--out flags.\n"
    )


# -- selftest ----------------------------------------------------------------


def run_selftest(seed: int = 0) -> int:
    """Quick internal consistency battery; returns the number of failures."""
    from . import arrays, beamforming, channels, estimation, geometry
    from .experiments import channel_gain as gain_of
    from .util import substream

    checks: list[tuple[str, bool, str]] = []

    def check(name: str, fn: Callable[[], tuple[bool, str]]) -> None:
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # noqa: BLE001 - selftest reports, never raises
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        dt = time.perf_counter() - t0
        checks.append((name, ok, f"{detail} [{dt:.2f}s]"))

    tiny = ScenarioConfig(n1x=2, n1y=2, n2x=2, n2y=2, m1x=2, m1y=1, m2x=2, m2y=1,
                          rician_factor_db=math.inf, rng_seed=seed)

    def steering_norm() -> tuple[bool, str]:
        v = arrays.steering_vector(0.37, 16)
        err = abs(np.linalg.norm(v) ** 2 - 16.0)
        return err < 1e-9, f"norm error {err:.2e}"

    def orbit_period() -> tuple[bool, str]:
        cfg = ScenarioConfig()
        p0 = geometry.satellite_position(cfg, 12.5)
        p1 = geometry.satellite_position(cfg, 12.5 + geometry.orbital_period(cfg))
        err = float(np.linalg.norm(p0 - p1) / np.linalg.norm(p0))
        return err < 1e-9, f"relative drift {err:.2e}"

    def factorization() -> tuple[bool, str]:
        cs = channels.build_channel_set(tiny, 10.0)
        rng = substream(seed, "selftest", 0)
        worst = 0.0
        for _ in range(10):
            th1 = np.exp(2j * math.pi * rng.random(cs.m1))
            th2 = np.exp(2j * math.pi * rng.random(cs.m2))
            h = channels.effective_channel(cs, th1, th2)
            f1 = beamforming.side_vector(cs, th1, "gn")
            f2 = beamforming.side_vector(cs, th2, "sat")
            worst = max(worst, float(np.max(np.abs(h - np.outer(f1, f2))) / np.max(np.abs(h))))
        return worst < 1e-9, f"worst residual {worst:.2e}"

    def closed_form_vs_search() -> tuple[bool, str]:
        cs = channels.build_channel_set(tiny, 10.0)
        sol = beamforming.baseline_solution(cs, "two_sided")
        gamma = gain_of(cs, sol)
        _, gamma_bf = beamforming.brute_force_oracle(cs, 64)
        ratio = gamma / gamma_bf
        return gamma >= gamma_bf * (1 - 1e-9) and ratio < 1.01, f"closed/discrete = {ratio:.6f}"

    def quantization_error() -> tuple[bool, str]:
        rng = substream(seed, "selftest", 1)
        theta = np.exp(2j * math.pi * rng.random(512))
        for k in (2, 4, 16):
            q = beamforming.quantize_phases(theta, k)
            err = np.abs(np.angle(q * np.conj(theta)))
            if float(err.max()) > math.pi / k + 1e-12:
                return False, f"K={k} max phase error {err.max():.3f} > pi/K"
        return True, "phase error within pi/K for K in {2,4,16}"

    def training_roundtrip() -> tuple[bool, str]:
        cs = channels.build_channel_set(tiny, 10.0)
        tc = estimation.TrainingConfig(grid_points=128, refine_iters=40)
        csi_gn, csi_sat = estimation.train_both_sides(cs, tc)
        sol = beamforming.solve_from_csi(
            csi_gn, csi_sat,
            beamforming.SideModel.from_channel_set(cs, "gn"),
            beamforming.SideModel.from_channel_set(cs, "sat"),
        )
        gamma = gain_of(cs, sol)
        ref = gain_of(cs, beamforming.baseline_solution(cs, "two_sided"))
        rel = abs(gamma - ref) / ref
        return rel < 1e-6, f"estimated vs perfect gamma: {rel:.2e}"

    check("steering vector norm", steering_norm)
    check("orbit periodicity", orbit_period)
    check("two-factor channel identity", factorization)
    check("closed form beats discrete search", closed_form_vs_search)
    check("phase quantization error bound", quantization_error)
    check("noiseless training recovers the link", training_roundtrip)

    failures = 0
    for name, ok, detail in checks:
        mark = "ok  " if ok else "FAIL"
        print(f"{mark} - {name}: {detail}")
        if not ok:
            failures += 1
    print(f"{len(checks) - failures}/{len(checks)} checks passed")
    return failures


# -- argument handling -------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: D102 - argparse hook
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key=value config file")
    common.add_argument("--out", metavar="PATH", help="write CSV here (default stdout)")
    common.add_argument("--seed", type=int, metavar="N", help="root RNG seed")
    common.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        dest="overrides",
        help="override one config key (repeatable)",
    )
    common.add_argument("--no-plot", action="store_true", help="skip the PNG figure")
    common.add_argument(
        "--help-config", action="store_true", help="list all config keys and exit"
    )

    parser = _Parser(
        prog="leoirs",
        description="Link simulator for a LEO satellite channel aided by two reflecting surfaces.",
    )
    parser.add_argument("--help-config", action="store_true", help="list all config keys and exit")
    sub = parser.add_subparsers(dest="command")
    sub.add_parser("power-sweep", parents=[common], help="rate vs transmit power")
    sub.add_parser("element-sweep", parents=[common], help="rate vs total element count")
    sub.add_parser("snapshot", parents=[common], help="single-time scheme comparison")
    sub.add_parser("tracking", parents=[common], help="tracked link over a pass")
    sub.add_parser("selftest", parents=[common], help="quick internal consistency battery")
    return parser


def _assemble(args: argparse.Namespace) -> Settings:
    raw: dict[str, str] = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        raw.update(parse_config(path.read_text(encoding="utf-8"), source=str(path)))
    for item in args.overrides:
        if "=" not in item:
            raise ConfigError(f"--set needs KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _KEYS:
            raise ConfigError(f"--set: unknown key {key!r}")
        raw[key] = value
    settings = build_settings(raw)
    if args.seed is not None:
        settings.seed = args.seed
        settings.scenario = ScenarioConfig(
            **{**_scenario_kwargs(settings.scenario), "rng_seed": args.seed}
        )
    if args.out is not None:
        settings.out = Path(args.out)
    if args.no_plot:
        settings.plot = False
    return settings


def _scenario_kwargs(cfg: ScenarioConfig) -> dict[str, object]:
    from dataclasses import fields as dc_fields

    return {f.name: getattr(cfg, f.name) for f in dc_fields(cfg)}


def _run_command(command: str, settings: Settings) -> int:
    if command == "selftest":
        failures = run_selftest(settings.seed)
        return 3 if failures else 0
    if command == "power-sweep":
        spec = SweepSpec(
            kind="tx_power_dbm",
            values=settings.sweep_values or _DEFAULT_POWER_VALUES,
            schemes=settings.schemes,
            base=settings.scenario,
            trials=settings.trials,
            t_s=settings.t_s,
            phase_levels=settings.phase_levels,
        )
        rows = run_sweep(spec, seed=settings.seed)
    elif command == "element-sweep":
        spec = SweepSpec(
            kind="elements_total",
            values=settings.sweep_values or _DEFAULT_ELEMENT_VALUES,
            schemes=settings.schemes,
            base=settings.scenario,
            trials=settings.trials,
            t_s=settings.t_s,
            phase_levels=settings.phase_levels,
        )
        rows = run_sweep(spec, seed=settings.seed)
    elif command == "snapshot":
        spec = SweepSpec(
            kind="time_s",
            values=(settings.t_s,),
            schemes=settings.schemes,
            base=settings.scenario,
            trials=settings.trials,
            t_s=settings.t_s,
            phase_levels=settings.phase_levels,
        )
        rows = run_sweep(spec, seed=settings.seed)
    elif command == "tracking":
        schemes = settings.schemes
        if schemes == SCHEMES:
            schemes = ("two_sided",)
        rows = run_tracking_experiment(
            settings.scenario,
            settings.protocol,
            seed=settings.seed,
            schemes=schemes,
            modes=settings.modes,
        )
    else:
        raise ConfigError(f"unknown command {command!r}")
    _write_output(rows, settings)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "help_config", False):
        print_config_help(sys.stdout)
        return 0
    if args.command is None:
        parser.print_help(sys.stderr)
        return 1
    try:
        settings = _assemble(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return _run_command(args.command, settings)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
