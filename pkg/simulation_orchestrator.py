from dataclasses import dataclass, field
from pathlib import Path

from beam_propagation import BeamParams, GridSpec, UplinkGeometry
from channel_file_helper import ChannelFileHelper
from channel_models import (ChannelSampler, ChannelStatistics, DeterministicSampler, EmpiricalChannel,
                            EmpiricalSampler, LogNormalLossModel, LogNormalSampler, compute_stats)
from coherent_fidelity import ModulationScheme, sweep_fidelity
from entanglement import sweep_entanglement
from random_streams import StreamFactory
from results_writer_helper import (CHANNEL_STATS_COLUMNS, ENTANGLEMENT_COLUMNS, FIDELITY_COLUMNS,
                                   ResultsWriterHelper, channel_stats_row, entanglement_row, fidelity_row)
from run_config_loader import RunConfig
from turbulence_helper import TurbulenceProfile
from uplink_orchestrator import UplinkOrchestrator, UplinkScenario


def build_uplink_scenario(channel: dict) -> UplinkScenario:
    """Maps a resolved `phasescreen` channel section onto an UplinkScenario."""
    return UplinkScenario(
        geometry=UplinkGeometry.from_degrees(channel["theta_z_deg"], H=channel["H"]),
        beam=BeamParams(w0=channel["w0"], wavelength=channel["wavelength"], ra=channel["ra"]),
        profile=TurbulenceProfile(A=channel["A"], L_outer=channel["L_outer"], l_inner=channel["l_inner"],
                                  Vg=channel["Vg"], v_rms=channel["v_rms"]),
        grid=GridSpec(n=channel["n_grid"], dx=channel["dx"]),
        n_screens=channel["n_screens"],
        turbulence=channel["turbulence"],
        eps_A=channel["eps_A"],
    )


@dataclass
class PreparedChannel:
    """A channel ready for the sweeps: its sampler, and the raw samples when it has them."""
    label: str
    sampler: ChannelSampler
    samples: EmpiricalChannel | None = None
    diagnostics: dict = field(default_factory=dict)

    def exact_stats(self) -> ChannelStatistics | None:
        if self.samples is None or self.samples.n_columns != 1:
            return None
        return compute_stats(self.samples.samples, self.samples.eps_A)


class SimulationOrchestrator:
    """
    Runs one configured command: prepares the channels, computes the
    sweep or ensemble, writes the results table and the diagnostics report.
    """

    def __init__(self, config: RunConfig, channel_files: ChannelFileHelper, writer: ResultsWriterHelper,
                 threads: int = 1, verbose: bool = True):
        """
        Args:
            config (RunConfig): The resolved run configuration.
            channel_files (ChannelFileHelper): Reads empirical channels, writes ensembles.
            writer (ResultsWriterHelper): Writes the results table and diagnostics.
            threads (int): Worker processes. Defaults to 1.
            verbose (bool): Print phase banners. Defaults to True.
        """
        if config is None or channel_files is None or writer is None:
            raise ValueError("A config, a channel file helper and a results writer are required.")
        self.config = config
        self.channel_files = channel_files
        self.writer = writer
        self.threads = threads
        self.verbose = verbose
        self.headlines: list[str] = []

    def _log(self, message: str):
        if self.verbose:
            print(message)

    def _prepare_channel(self, channel: dict) -> PreparedChannel:
        model = channel["model"]
        if model == "lognormal":
            sampler = LogNormalSampler(LogNormalLossModel(channel["mu_dB"], channel["sigma_dB"]), channel["eps_A"])
            return PreparedChannel(sampler.label, sampler)
        if model == "deterministic":
            sampler = DeterministicSampler(channel["T"], channel["eps_A"])
            return PreparedChannel(sampler.label, sampler)
        if model == "empirical":
            samples = self.channel_files.read(channel["path"], eps_A=channel["eps_A"])
            return PreparedChannel(samples.label, EmpiricalSampler(samples), samples)
        uplink = UplinkOrchestrator(build_uplink_scenario(channel), self.threads, self.verbose)
        samples = uplink.run_ensemble(self.config.sampling["n_realizations"], self.config.seed)
        diagnostics = {**uplink.diagnostics(), "summary": samples.summary}
        return PreparedChannel(samples.label, EmpiricalSampler(samples), samples, diagnostics)

    def _prepare_channels(self) -> list[PreparedChannel]:
        """Phase 1: Builds a sampler for every configured channel."""
        self._log("\n--- 🚀 Phase 1: Preparing Channels ---")
        prepared = [self._prepare_channel(channel) for channel in self.config.channel]
        self._log(f"✅ {len(prepared)} channel(s) ready: {', '.join(p.label for p in prepared)}.")
        return prepared

    def _channel_stats(self, channels: list[PreparedChannel]) -> tuple[list[str], list[list]]:
        rows = []
        n = self.config.sampling["n_realizations"]
        for channel in channels:
            if channel.samples is not None:
                T = channel.samples.samples.ravel()
                stats = compute_stats(T, channel.samples.eps_A)
            else:
                draws = channel.sampler.draw(StreamFactory(self.config.seed), 1, n)
                T = draws.T[:, 0]
                stats = draws.stats(channel.sampler.eps_A)
            rows.append(channel_stats_row(channel.label, stats, T))
            self.headlines.append(f"{channel.label}: ⟨T⟩ = {stats.mean_T:.4g}, T_eff = {stats.T_eff:.4g}")
        return CHANNEL_STATS_COLUMNS, rows

    def _entanglement_sweep(self, channels: list[PreparedChannel]) -> tuple[list[str], list[list]]:
        config = self.config
        rows = []
        for channel in channels:
            results = sweep_entanglement(
                config.values("Vs"), config.M_values, stats=channel.exact_stats(), sampler=channel.sampler,
                method=config.sampling["method"], n=config.sampling["n_realizations"], seed=config.seed,
                layout=config.diversity["layout"], threads=self.threads,
            )
            rows += [entanglement_row(r) for r in results]
            if results:
                best = max(results, key=lambda r: r.e_ln)
                self.headlines.append(f"{channel.label}: max E_LN = {best.e_ln:.4f} (M = {best.M}, Vs = {best.Vs:g})")
        return ENTANGLEMENT_COLUMNS, rows

    def _schemes(self) -> list[ModulationScheme]:
        source = self.config.source
        if source["scheme"] == "bpsk":
            return [ModulationScheme.bpsk(alpha, source["P0"]) for alpha in self.config.values("alpha")]
        return [ModulationScheme.gaussian(V_mod) for V_mod in self.config.values("V_mod")]

    def _fidelity_sweep(self, channels: list[PreparedChannel]) -> tuple[list[str], list[list]]:
        config = self.config
        rows = []
        for channel in channels:
            results = sweep_fidelity(
                self._schemes(), config.M_values, channel.sampler, n_channel=config.sampling["n_realizations"],
                n_alpha=config.sampling["n_alpha"], seed=config.seed, layout=config.diversity["layout"],
                target_scaling=config.source["target_scaling"], threads=self.threads,
            )
            rows += [fidelity_row(r, config.seed) for r in results]
            if results:
                best = max(results, key=lambda r: r.f_avg)
                self.headlines.append(f"{channel.label}: max F_avg = {best.f_avg:.4f} (M = {best.M}, "
                                      f"{best.scheme.kind} {best.scheme.parameter:g})")
        return FIDELITY_COLUMNS, rows

    def _compute(self, channels: list[PreparedChannel]) -> tuple[list[str], list[list]] | None:
        """Phase 2: Runs the configured command over the prepared channels."""
        self._log(f"\n--- 🔬 Phase 2: Computing '{self.config.command}' ---")
        if self.config.command == "channel-stats":
            return self._channel_stats(channels)
        if self.config.command == "ent-sweep":
            return self._entanglement_sweep(channels)
        if self.config.command == "fid-sweep":
            return self._fidelity_sweep(channels)
        summary = channels[0].samples.summary
        self.headlines.append(f"{channels[0].label}: mean loss {summary['mean_loss_dB']:.2f} dB, "
                              f"fading {summary['fading_dB']:.2f} dB, diffraction {summary['diffraction_loss_dB']:.2f} dB")
        return None

    def _write_report(self, channels: list[PreparedChannel], table: tuple[list[str], list[list]] | None) -> Path:
        """Phase 3: Writes the results file and the diagnostics report."""
        self._log("\n--- 📊 Phase 3: Writing Results ---")
        output = self.config.output
        if table is None:
            path = self.channel_files.write(channels[0].samples, output["path"],
                                            comments=[f"config: {self.writer.config_echo}"])
        else:
            columns, rows = table
            path = self.writer.write_rows(output["path"], columns, rows)
        self.writer.write_json(output["diagnostics_path"], {
            "command": self.config.command,
            "results_path": str(path),
            "rows": 0 if table is None else len(table[1]),
            "channels": {c.label: c.diagnostics for c in channels if c.diagnostics},
        })
        return path

    def _summarize(self):
        """Phase 4: Prints the headline statistics."""
        self._log("\n--- 🧾 Phase 4: Summary ---")
        for line in self.headlines:
            self._log(f"  - {line}")

    def run(self) -> Path:
        """
        Executes the configured command end to end.

        Returns:
            Path: The results file (CSV table, or the ensemble channel file for phase-screen).
        """
        self.headlines = []
        channels = self._prepare_channels()
        table = self._compute(channels)
        path = self._write_report(channels, table)
        self._summarize()
        return path
