import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from channel_models import ChannelStatistics, loss_extremes_dB, loss_statistics_dB
from coherent_fidelity import FidelityResult
from entanglement import EntanglementResult

CONFIG_PREFIX = "# config: "
ENTANGLEMENT_COLUMNS = ["theta_or_model", "M", "Vs", "E_LN", "E_LN_scaled", "RCI", "T_eff", "var_sqrtT", "mean_eps",
                        "n_samples", "stderr_b"]
FIDELITY_COLUMNS = ["model", "M", "scheme", "alpha_or_Vmod", "F_avg", "stderr", "n_channel", "n_alpha", "seed"]
CHANNEL_STATS_COLUMNS = ["model", "n_samples", "mean_T", "mean_sqrtT", "var_sqrtT", "T_eff", "mean_eps",
                         "mean_loss_dB", "fading_dB", "min_loss_dB", "max_loss_dB"]


def atomic_write_text(path: str | Path, text: str) -> Path:
    """
    Writes `text` to a temp file next to `path`, then renames it into
    place. A crash leaves either the old file or none, never a partial one.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handle = tempfile.NamedTemporaryFile("w", encoding="utf-8", newline="", dir=path.parent,
                                         prefix=f".{path.name}.", suffix=".tmp", delete=False)
    try:
        with handle:
            handle.write(text)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(handle.name, path)
    except BaseException:
        Path(handle.name).unlink(missing_ok=True)
        raise
    return path


def format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "{:.12g}".format(float(value))
    return "" if value is None else str(value)


def _json_default(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def entanglement_row(result: EntanglementResult) -> list:
    stats = result.stats_used
    return [result.label, result.M, result.Vs, result.e_ln, result.e_ln_scaled, result.rci, stats.T_eff,
            stats.var_sqrtT, stats.mean_eps, stats.n_samples, result.stderr_b]


def fidelity_row(result: FidelityResult, seed: int) -> list:
    return [result.label, result.M, result.scheme.kind, result.scheme.parameter, result.f_avg, result.stderr,
            result.n_channel, result.n_alpha, seed]


def channel_stats_row(label: str, stats: ChannelStatistics, T_samples) -> list:
    mean_loss, fading = loss_statistics_dB(T_samples)
    low, high = loss_extremes_dB(T_samples)
    return [label, stats.n_samples, stats.mean_T, stats.mean_sqrtT, stats.var_sqrtT, stats.T_eff, stats.mean_eps,
            mean_loss, fading, low, high]


def read_config_echo(path: str | Path) -> str:
    """The canonical config JSON from the first line of a results CSV."""
    with open(path, encoding="utf-8") as f:
        first = f.readline().rstrip("\n")
    if not first.startswith(CONFIG_PREFIX):
        raise ValueError(f"{path} does not start with a config echo line.")
    return first[len(CONFIG_PREFIX):]


class ResultsWriterHelper:
    """
    Writes result tables and diagnostics reports.

    Every CSV opens with a `# config:` line holding the resolved run
    configuration, so each table can be regenerated from its own header.
    """

    def __init__(self, config_echo: str, verbose: bool = True):
        """
        Args:
            config_echo (str): Canonical JSON of the resolved run configuration.
            verbose (bool): Print a line per file written. Defaults to True.
        """
        if not config_echo:
            raise ValueError("A config echo is required to initialize ResultsWriterHelper.")
        self.config_echo = config_echo
        self.verbose = verbose

    def render_csv(self, columns: list[str], rows: list[list]) -> str:
        buffer = io.StringIO()
        buffer.write(f"{CONFIG_PREFIX}{self.config_echo}\n")
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"Row has {len(row)} fields, expected {len(columns)}.")
            writer.writerow([format_value(v) for v in row])
        return buffer.getvalue()

    def write_rows(self, path: str | Path, columns: list[str], rows: list[list]) -> Path:
        """
        Args:
            path (str | Path): Target CSV.
            columns (list[str]): Header row.
            rows (list[list]): Data rows, one value per column.

        Returns:
            Path: The written file.
        """
        written = atomic_write_text(path, self.render_csv(columns, rows))
        if self.verbose:
            print(f"  - 💾 {len(rows)} row(s) written to '{written}'.")
        return written

    def write_json(self, path: str | Path, payload: dict) -> Path:
        """Writes a diagnostics report with the config echo under the 'config' key."""
        document = {"config": json.loads(self.config_echo), **payload}
        text = json.dumps(document, indent=2, sort_keys=True, default=_json_default) + "\n"
        written = atomic_write_text(path, text)
        if self.verbose:
            print(f"  - 💾 Diagnostics written to '{written}'.")
        return written
