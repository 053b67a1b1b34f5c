import json
import os
import traceback

from dotenv import load_dotenv

from channel_file_helper import ChannelFileHelper
from results_writer_helper import ResultsWriterHelper
from run_config_loader import RunConfigLoader
from simulation_errors import ConfigurationError, ConfigValidationError, DomainError, NumericalError
from simulation_orchestrator import SimulationOrchestrator

# --- Exit Codes ---
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

THREADS_ENV = "CVDIV_THREADS"


class Application:
    """
    Encapsulates one command-line run, from resolving the environment and
    the configuration to the execution of the simulation workflow.
    """

    def __init__(self, verbose: bool = True, env_file: str | None = None):
        """
        Initializes the application and loads a `.env` file if present.

        Args:
            verbose (bool): Print banners and phase progress. Defaults to True.
            env_file (str | None): Explicit `.env` path; the default search
                starts from the working directory.
        """
        self.verbose = verbose
        load_dotenv(env_file)

    def resolve_threads(self, threads: int | None) -> int:
        """
        CLI value first, then the CVDIV_THREADS environment variable, then 1.

        Raises:
            ConfigValidationError: If the resolved value is not a positive integer.
        """
        if threads is None:
            raw = os.environ.get(THREADS_ENV)
            if raw is None or not raw.strip():
                return 1
            try:
                threads = int(raw)
            except ValueError:
                raise ConfigValidationError([f"{THREADS_ENV} must be an integer, got {raw!r}."]) from None
        if threads < 1:
            raise ConfigValidationError([f"threads must be ≥ 1, got {threads}."])
        return threads

    def run(self, command: str, config_path: str, seed: int | None = None, out: str | None = None,
            threads: int | None = None, dry_run: bool = False) -> int:
        """
        Executes one command.

        Returns:
            int: 0 on success, 2 for an invalid configuration, 3 for a
                numerical or configuration failure during the computation,
                4 for an I/O failure.
        """
        if self.verbose:
            print("\n" + "=" * 50)
            print(f"🚀 STARTING CVDIV {command.upper()} RUN 🚀")
            print("=" * 50)

        try:
            threads = self.resolve_threads(threads)
            config = RunConfigLoader(verbose=self.verbose).load(config_path, command=command, seed=seed, out=out)

            if dry_run:
                print(json.dumps(config.as_dict(), indent=2, sort_keys=True))
                return EXIT_OK

            # Dependency Injection
            channel_files = ChannelFileHelper(verbose=self.verbose)
            writer = ResultsWriterHelper(config.to_json(), verbose=self.verbose)
            if self.verbose:
                print(f"✅ Helpers initialized ({threads} worker(s)).")

            orchestrator = SimulationOrchestrator(config, channel_files, writer, threads, self.verbose)
            results_path = orchestrator.run()

            if self.verbose:
                print("\n" + "★" * 60)
                print(f"   🎉  {command.upper()} SUCCESSFULLY COMPLETED!  🎉")
                print("★" * 60)
                print(f"\n📄  Results: {results_path}")
                print(f"🩺  Diagnostics: {config.output['diagnostics_path']}")
                print("=" * 60 + "\n")
            return EXIT_OK

        except ConfigValidationError as e:
            print("\n🚨 INVALID RUN CONFIGURATION:")
            for violation in e.violations:
                print(f"  - {violation}")
            return EXIT_VALIDATION
        except (DomainError, NumericalError, ConfigurationError) as e:
            print(f"\n🚨 FATAL ERROR DURING EXECUTION: {e}")
            details = getattr(e, "details", None)
            if details:
                print(json.dumps(details, indent=2, sort_keys=True, default=str))
            traceback.print_exc()
            return EXIT_NUMERIC
        except OSError as e:
            print(f"\n🚨 I/O ERROR: {e}")
            traceback.print_exc()
            return EXIT_IO
        except Exception as e:
            print(f"\n🚨 FATAL ERROR DURING EXECUTION: {e}")
            traceback.print_exc()
            return EXIT_FAILURE
