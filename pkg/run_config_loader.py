"""
Run configuration: schema validation, default resolution and the frozen
RunConfig the orchestrators consume.

A run file is one JSON object with the sections command, channel,
diversity, source, sampling and output. README.md publishes the key
schema.
"""

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from channel_models import DEFAULT_EPS_A
from coherent_fidelity import TARGET_SCALINGS
from combining import LAYOUTS
from simulation_errors import ConfigValidationError

COMMANDS = ("channel-stats", "ent-sweep", "fid-sweep", "phase-screen")
CHANNEL_MODELS = ("lognormal", "empirical", "phasescreen", "deterministic")
SCHEMES = ("bpsk", "gaussian")
METHODS = ("analytic", "montecarlo")

SECTION_KEYS = {
    "channel": {"model", "eps_A", "mu_dB", "sigma_dB", "path", "T", "theta_z_deg", "H", "w0", "wavelength", "ra",
                "A", "L_outer", "l_inner", "Vg", "v_rms", "n_grid", "dx", "n_screens", "turbulence"},
    "diversity": {"M", "layout"},
    "source": {"Vs", "scheme", "alpha", "V_mod", "P0", "target_scaling"},
    "sampling": {"n_realizations", "n_alpha", "seed", "method"},
    "output": {"path", "diagnostics_path"},
}
MODEL_KEYS = {
    "lognormal": {"mu_dB", "sigma_dB"},
    "empirical": {"path"},
    "deterministic": {"T"},
    "phasescreen": {"theta_z_deg", "H", "w0", "wavelength", "ra", "A", "L_outer", "l_inner", "Vg", "v_rms",
                    "n_grid", "dx", "n_screens", "turbulence"},
}
PHASESCREEN_DEFAULTS = {
    "theta_z_deg": 0.0, "H": 500e3, "w0": 0.035, "wavelength": 1064e-9, "ra": 0.15, "A": 9.6e-14,
    "L_outer": 5.0, "l_inner": 0.01, "Vg": 3.0, "v_rms": 21.0, "n_grid": 1024, "dx": 3e-3,
    "n_screens": 10, "turbulence": True,
}


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _number_list(value) -> list | None:
    if _is_number(value):
        return [value]
    if isinstance(value, list) and value and all(_is_number(v) for v in value):
        return value
    return None


def expand_values(value) -> list[float]:
    """A number, a list of numbers, or a {"start", "stop", "num"} range, as a flat list."""
    if isinstance(value, dict):
        return [float(v) for v in np.linspace(value["start"], value["stop"], int(value["num"]))]
    return [float(v) for v in _number_list(value)]


def _validate_values(name: str, value, minimum: float, violations: list[str]):
    if isinstance(value, dict):
        if set(value) != {"start", "stop", "num"}:
            violations.append(f"{name} range must have exactly the keys start, stop, num.")
            return
        if not (_is_number(value["start"]) and _is_number(value["stop"]) and _is_int(value["num"]) and value["num"] >= 1):
            violations.append(f"{name} range needs numeric start/stop and an integer num >= 1.")
            return
        values = [value["start"], value["stop"]]
    else:
        values = _number_list(value)
        if values is None:
            violations.append(f"{name} must be a number, a non-empty list of numbers or a range.")
            return
    bad = [v for v in values if v < minimum]
    if bad:
        violations.append(f"{name} values must be ≥ {minimum:g}, got {bad}.")


def _validate_channel(channel, command: str, violations: list[str]):
    prefix = "channel"
    if not isinstance(channel, dict):
        violations.append("channel must be an object.")
        return
    unknown = set(channel) - SECTION_KEYS["channel"]
    if unknown:
        violations.append(f"Unknown {prefix} keys: {sorted(unknown)}.")
    model = channel.get("model")
    if model not in CHANNEL_MODELS:
        violations.append(f"{prefix}.model must be one of {list(CHANNEL_MODELS)}, got {model!r}.")
        return
    if command == "phase-screen" and model != "phasescreen":
        violations.append("The phase-screen command needs channel.model = 'phasescreen'.")
    stray = set(channel) - {"model", "eps_A"} - MODEL_KEYS[model]
    if stray:
        violations.append(f"Keys {sorted(stray)} do not apply to the {model} model.")
    if "eps_A" in channel and not (_is_number(channel["eps_A"]) and channel["eps_A"] >= 0):
        violations.append(f"{prefix}.eps_A must be a number ≥ 0.")

    if model == "lognormal":
        if not (_is_number(channel.get("mu_dB")) and channel["mu_dB"] > 0):
            violations.append(f"{prefix}.mu_dB must be a number > 0.")
        if not (_is_number(channel.get("sigma_dB")) and channel["sigma_dB"] >= 0):
            violations.append(f"{prefix}.sigma_dB must be a number ≥ 0, got {channel.get('sigma_dB')!r}.")
    elif model == "empirical":
        if not isinstance(channel.get("path"), str) or not channel["path"]:
            violations.append(f"{prefix}.path must name a channel file.")
    elif model == "deterministic":
        if not (_is_number(channel.get("T")) and 0.0 <= channel["T"] <= 1.0):
            violations.append(f"{prefix}.T must lie in [0, 1].")
    else:
        theta = channel.get("theta_z_deg", 0.0)
        if not (_is_number(theta) and 0.0 <= theta < 90.0):
            violations.append(f"{prefix}.theta_z_deg must lie in [0, 90).")
        for key in ("H", "w0", "wavelength", "ra", "A", "L_outer", "l_inner", "Vg", "v_rms", "dx"):
            if key in channel and not (_is_number(channel[key]) and channel[key] > 0):
                violations.append(f"{prefix}.{key} must be a number > 0.")
        n_grid = channel.get("n_grid", 1024)
        if not (_is_int(n_grid) and n_grid >= 2 and not n_grid & (n_grid - 1)):
            violations.append(f"{prefix}.n_grid must be a power of two, got {n_grid!r}.")
        n_screens = channel.get("n_screens", 10)
        if not (_is_int(n_screens) and n_screens >= 1):
            violations.append(f"{prefix}.n_screens must be an integer ≥ 1.")
        if not isinstance(channel.get("turbulence", True), bool):
            violations.append(f"{prefix}.turbulence must be true or false.")


def _validate_source(source: dict, command: str, violations: list[str]):
    if command == "ent-sweep":
        if "Vs" not in source:
            violations.append("source.Vs is required for ent-sweep.")
        else:
            _validate_values("source.Vs", source["Vs"], 1.0, violations)
    elif command == "fid-sweep":
        scheme = source.get("scheme")
        if scheme not in SCHEMES:
            violations.append(f"source.scheme must be one of {list(SCHEMES)}, got {scheme!r}.")
        elif scheme == "bpsk":
            if "alpha" not in source:
                violations.append("source.alpha is required for the bpsk scheme.")
            else:
                _validate_values("source.alpha", source["alpha"], 0.0, violations)
            P0 = source.get("P0", 0.5)
            if not (_is_number(P0) and 0.0 <= P0 <= 1.0):
                violations.append("source.P0 must lie in [0, 1].")
        else:
            if "V_mod" not in source:
                violations.append("source.V_mod is required for the gaussian scheme.")
            else:
                _validate_values("source.V_mod", source["V_mod"], 0.0, violations)
        if source.get("target_scaling", "printed") not in TARGET_SCALINGS:
            violations.append(f"source.target_scaling must be one of {list(TARGET_SCALINGS)}.")


def validate(config) -> list[str]:
    """
    Collects every schema violation of a raw run configuration.

    Args:
        config: The parsed JSON document.

    Returns:
        list[str]: Human-readable violations; empty when the run can start.
    """
    if not isinstance(config, dict):
        return ["The run configuration must be a JSON object."]
    violations = []
    unknown = set(config) - {"command", *SECTION_KEYS}
    if unknown:
        violations.append(f"Unknown top-level keys: {sorted(unknown)}.")
    command = config.get("command")
    if command not in COMMANDS:
        violations.append(f"command must be one of {list(COMMANDS)}, got {command!r}.")

    sections = {}
    for name in SECTION_KEYS:
        section = config.get(name, {})
        if name == "channel" and isinstance(section, list) and command != "phase-screen":
            sections[name] = section
            continue
        if not isinstance(section, dict):
            violations.append(f"{name} must be an object.")
            section = {}
        elif name != "channel":
            unknown = set(section) - SECTION_KEYS[name]
            if unknown:
                violations.append(f"Unknown {name} keys: {sorted(unknown)}.")
        sections[name] = section

    if "channel" not in config:
        violations.append("channel is required.")
    else:
        channels = sections["channel"] if isinstance(sections["channel"], list) else [sections["channel"]]
        if not channels:
            violations.append("channel list must not be empty.")
        for channel in channels:
            _validate_channel(channel, command, violations)

    diversity = sections["diversity"]
    if "M" in diversity:
        M = diversity["M"]
        M_list = M if isinstance(M, list) else [M]
        if not M_list or not all(_is_int(m) for m in M_list):
            violations.append("diversity.M must be a non-empty list of integers.")
        elif any(m < 1 for m in M_list):
            violations.append(f"diversity.M must be ≥ 1, got {M}.")
    if diversity.get("layout", "auto") not in LAYOUTS:
        violations.append(f"diversity.layout must be one of {list(LAYOUTS)}.")

    _validate_source(sections["source"], command, violations)

    sampling = sections["sampling"]
    for key in ("n_realizations", "n_alpha"):
        if key in sampling and not (_is_int(sampling[key]) and sampling[key] >= 1):
            violations.append(f"sampling.{key} must be an integer ≥ 1.")
    if "seed" in sampling and not (_is_int(sampling["seed"]) and sampling["seed"] >= 0):
        violations.append("sampling.seed must be a non-negative integer.")
    if sampling.get("method", "analytic") not in METHODS:
        violations.append(f"sampling.method must be one of {list(METHODS)}.")

    output = sections["output"]
    for key in ("path", "diagnostics_path"):
        if key in output and not (isinstance(output[key], str) and output[key]):
            violations.append(f"output.{key} must be a non-empty string.")
    return violations


def _resolve_channel(channel: dict) -> dict:
    resolved = {"model": channel["model"], "eps_A": float(channel.get("eps_A", DEFAULT_EPS_A))}
    if channel["model"] == "phasescreen":
        resolved.update({key: channel.get(key, default) for key, default in PHASESCREEN_DEFAULTS.items()})
    else:
        resolved.update({key: channel[key] for key in MODEL_KEYS[channel["model"]]})
    return resolved


@dataclass(frozen=True)
class RunConfig:
    """A validated run configuration with every default filled in."""
    command: str
    channel: list[dict]
    diversity: dict = field(default_factory=dict)
    source: dict = field(default_factory=dict)
    sampling: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    @classmethod
    def resolve(cls, config: dict) -> "RunConfig":
        """
        Fills defaults into a configuration that already passed `validate`.
        """
        command = config["command"]
        channels = config["channel"] if isinstance(config["channel"], list) else [config["channel"]]
        diversity = config.get("diversity", {})
        M = diversity.get("M", [1])
        source = dict(config.get("source", {}))
        if command == "fid-sweep":
            source.setdefault("target_scaling", "printed")
            if source["scheme"] == "bpsk":
                source.setdefault("P0", 0.5)
        sampling = config.get("sampling", {})
        default_n = 1000 if command == "phase-screen" else 3000
        path = config.get("output", {}).get("path", f"results/{command}.csv")
        return cls(
            command=command,
            channel=[_resolve_channel(c) for c in channels],
            diversity={"M": M if isinstance(M, list) else [M], "layout": diversity.get("layout", "auto")},
            source=source,
            sampling={
                "n_realizations": sampling.get("n_realizations", default_n),
                "n_alpha": sampling.get("n_alpha", 200),
                "seed": sampling.get("seed", 0),
                "method": sampling.get("method", "analytic"),
            },
            output={"path": path, "diagnostics_path": config.get("output", {}).get(
                "diagnostics_path", str(Path(path).with_suffix(".diagnostics.json")))},
        )

    @property
    def seed(self) -> int:
        return self.sampling["seed"]

    @property
    def M_values(self) -> list[int]:
        return list(self.diversity["M"])

    def values(self, key: str) -> list[float]:
        """Expanded list for a source key (Vs, alpha or V_mod)."""
        return expand_values(self.source[key])

    def as_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        """Canonical one-line JSON: sorted keys, no whitespace."""
        return json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls(**json.loads(text))


class RunConfigLoader:
    """
    Reads a run file, applies command-line overrides, validates and
    resolves it.
    """

    def __init__(self, verbose: bool = True):
        self.verbose = verbose

    def read(self, path: str | Path) -> dict:
        """
        Args:
            path (str | Path): The JSON run file.

        Raises:
            OSError: If the file cannot be read.
            ConfigValidationError: If the file is not valid JSON.
        """
        text = Path(path).read_text(encoding="utf-8")
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigValidationError([f"{path} is not valid JSON: {e}"]) from e

    @staticmethod
    def apply_overrides(config: dict, command: str | None = None, seed: int | None = None,
                        out: str | None = None) -> dict:
        """Command-line values replace those of the file."""
        config = json.loads(json.dumps(config))
        if not isinstance(config, dict):
            return config
        if command is not None:
            config["command"] = command
        if seed is not None and isinstance(config.setdefault("sampling", {}), dict):
            config["sampling"]["seed"] = seed
        if out is not None and isinstance(config.setdefault("output", {}), dict):
            config["output"]["path"] = out
        return config

    def load(self, path: str | Path, command: str | None = None, seed: int | None = None,
             out: str | None = None) -> RunConfig:
        """
        Returns:
            RunConfig: The resolved configuration.

        Raises:
            ConfigValidationError: With every violation found.
        """
        config = self.apply_overrides(self.read(path), command, seed, out)
        violations = validate(config)
        if violations:
            raise ConfigValidationError(violations)
        run_config = RunConfig.resolve(config)
        if self.verbose:
            print(f"✅ Run configuration '{path}' validated ({run_config.command}, seed {run_config.seed}).")
        return run_config
