import io
from pathlib import Path

import numpy as np

from channel_models import DEFAULT_EPS_A, EmpiricalChannel
from results_writer_helper import atomic_write_text, format_value
from simulation_errors import DomainError


class ChannelFileHelper:
    """
    Reads and writes empirical transmissivity files.

    Two formats are understood: plain text with one T per line, and CSV
    with a `T1,...,TM` header and one column per subchannel. Lines starting
    with '#' are comments in both.
    """

    def __init__(self, eps_A: float = DEFAULT_EPS_A, verbose: bool = True):
        """
        Args:
            eps_A (float): Excess noise per unit transmissivity attached to
                channels read from disk. Defaults to 0.03 SNU.
            verbose (bool): Print a line per file handled. Defaults to True.
        """
        self.eps_A = eps_A
        self.verbose = verbose

    @staticmethod
    def _data_lines(text: str) -> list[str]:
        return [line.strip() for line in text.splitlines() if line.strip() and not line.lstrip().startswith("#")]

    def parse(self, text: str, label: str = "empirical", eps_A: float | None = None) -> EmpiricalChannel:
        """
        Raises:
            DomainError: If the file holds no samples, a malformed header, or
                a transmissivity outside (0, 1].
        """
        lines = self._data_lines(text)
        if not lines:
            raise DomainError(f"Channel file '{label}' holds no samples.")
        if lines[0][0].isalpha():
            header = [h.strip() for h in lines[0].split(",")]
            if header != [f"T{j + 1}" for j in range(len(header))]:
                raise DomainError(f"Channel file '{label}' header must read T1,...,TM, got {lines[0]!r}.")
            if len(lines) == 1:
                raise DomainError(f"Channel file '{label}' holds no samples.")
            samples = np.loadtxt(io.StringIO("\n".join(lines[1:])), delimiter=",", ndmin=2)
            if samples.shape[1] != len(header):
                raise DomainError(f"Channel file '{label}' rows do not match its {len(header)}-column header.")
            if samples.shape[1] == 1:
                samples = samples[:, 0]
        else:
            samples = np.loadtxt(io.StringIO("\n".join(lines)), ndmin=1)
        if np.any(samples <= 0.0) or np.any(samples > 1.0):
            raise DomainError(f"Channel file '{label}' has transmissivities outside (0, 1].")
        return EmpiricalChannel(samples, self.eps_A if eps_A is None else eps_A, label=label)

    def read(self, path: str | Path, eps_A: float | None = None) -> EmpiricalChannel:
        """
        Args:
            path (str | Path): Text or CSV channel file.
            eps_A (float | None): Overrides the helper default for this file.

        Returns:
            EmpiricalChannel: Samples labelled with the file stem.
        """
        path = Path(path)
        channel = self.parse(path.read_text(encoding="utf-8"), label=path.stem, eps_A=eps_A)
        if self.verbose:
            print(f"  - 📥 {channel.samples.shape[0]} channel samples read from '{path}' "
                  f"({channel.n_columns} column(s)).")
        return channel

    def render(self, channel: EmpiricalChannel, comments: list[str] | None = None) -> str:
        lines = [f"# {c}" for c in comments or []]
        if channel.samples.ndim == 1:
            lines += [format_value(T) for T in channel.samples]
        else:
            lines.append(",".join(f"T{j + 1}" for j in range(channel.n_columns)))
            lines += [",".join(format_value(T) for T in row) for row in channel.samples]
        return "\n".join(lines) + "\n"

    def write(self, channel: EmpiricalChannel, path: str | Path, comments: list[str] | None = None) -> Path:
        """Writes the samples atomically; single-column channels use the plain text format."""
        written = atomic_write_text(path, self.render(channel, comments))
        if self.verbose:
            print(f"  - 💾 {channel.samples.shape[0]} channel samples written to '{written}'.")
        return written
