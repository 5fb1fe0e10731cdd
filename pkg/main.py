import logging
import sys
from pathlib import Path
import argparse

# Add project root to Python path for proper import resolution
project_root = Path(__file__).parent
sys.path.append(str(project_root))

from src.utils.config import ConfigManager, EXPERIMENTS
from src.utils.errors import (DomainError, SchemeDivergedError, EXIT_CHECK_FAILURE,
                              EXIT_DIVERGED, EXIT_OK, EXIT_USAGE)
from src.experiments.ledger import CheckLedger
from src.experiments.runner import ExperimentRunner


def parse_arguments(argv=None):
    """
    Parse command line arguments for the cone blow-up laboratory.

    Returns:
        argparse.Namespace: Parsed command line arguments
    """
    parser = argparse.ArgumentParser(
        description='Cone-transformed Navier-Stokes Picard scheme and blow-up diagnostics',
        epilog='''
Examples:
    # Run every identity and bound check and write ledger.json
    python main.py verify

    # March one scheme instance with the default configuration
    python main.py run --out results/run

    # Viscosity sweep over the rho ladder, quiet console
    python main.py sweep --config my_config.yaml --out results/sweep --quiet

    # Blow-up fit and forcing synthesis on a stored run
    python main.py diagnose --out results/run

    # Chain-rule audit of the transformed coefficients with another seed
    python main.py audit --seed 7
''',
        formatter_class=argparse.RawDescriptionHelpFormatter  # Preserves formatting in epilog
    )

    parser.add_argument('experiment', choices=EXPERIMENTS,
                        help='Experiment to run')

    parser.add_argument('--config', type=str,
                        help='Path to a YAML configuration file (default: src/utils/config.yaml)')

    parser.add_argument('--out', type=str,
                        help='Output directory for CSV, JSON and snapshot files')

    parser.add_argument('--seed', type=int,
                        help='Seed for random test fields (default: from the config file)')

    parser.add_argument('--quiet', action='store_true',
                        help='Only log warnings and hide progress bars')

    return parser.parse_args(argv)


def main(argv=None) -> int:
    """
    Main entry point of the laboratory.

    Workflow:
    1. Parse command line arguments
    2. Configuration loading and logging setup
    3. Apply command line overrides
    4. Run the selected experiment

    Returns:
        int: Process exit code (0 success, 1 check failure, 2 usage error, 3 divergence)
    """
    # Step 1: Parse command line arguments
    args = parse_arguments(argv)

    # Step 2: Configuration loading and logging setup
    try:
        config_manager = ConfigManager(args.config, quiet=args.quiet)

        # Step 3: Apply command line overrides
        config_manager.update_config({
            'experiment': {'name': args.experiment, 'seed': args.seed},
            'output': {'output_dir': args.out},
        })
    except (ValueError, FileNotFoundError) as e:
        logging.error(f"Configuration error: {e}")
        print(f"Error: {e}")
        return EXIT_USAGE

    logging.info(f"Experiment: {args.experiment}")
    logging.info(f"Output directory: {config_manager.output_dir}")

    # Step 4: Run the selected experiment
    try:
        runner = ExperimentRunner(config_manager, progress=not args.quiet)
        result = runner.execute(args.experiment)
    except SchemeDivergedError as e:
        logging.error(f"Scheme diverged: {e}")
        print(f"Error: {e}")
        return EXIT_DIVERGED
    except (DomainError, ValueError, FileNotFoundError) as e:
        logging.error(f"Experiment '{args.experiment}' failed: {e}")
        print(f"Error: {e}")
        return EXIT_USAGE

    if isinstance(result, CheckLedger):
        if not result.passed:
            print(f"{args.experiment.capitalize()} failed: {', '.join(result.failures)}")
            return EXIT_CHECK_FAILURE
        print(f"{args.experiment.capitalize()} passed: {len(result.entries)} ledger entries")

    print(f"Results saved to: {config_manager.output_dir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
