from pathlib import Path
import yaml
import logging
from typing import Dict, List, Optional

from src.geometry.cone import ConeChart
from src.scheme.config import ConvectionVariant, SchemeConfig, Toggles

EXPERIMENTS = ('verify', 'run', 'sweep', 'diagnose', 'audit')
REQUIRED_SECTIONS = ['geometry', 'grid', 'scheme', 'kernels', 'limits', 'experiment', 'output']


class ConfigManager:
    """
    Manages configuration loading and validation for the cone blow-up laboratory.
    Handles path resolution, logging setup, and configuration validation, and
    builds the domain objects (chart, scheme configuration) from the sections.
    """
    def __init__(self, config_path=None, quiet: bool = False):
        # Application root is three levels up from src/utils/config.py
        self.app_root = Path(__file__).parent.parent.parent.absolute()

        if config_path is None:
            self.config_path = Path(__file__).parent / "config.yaml"
        else:
            self.config_path = Path(config_path)
        self.quiet = quiet

        self.config = self._load_config()
        self._set_default_paths()
        self._setup_logging()
        self._verify_paths()

    def _load_config(self) -> Dict:
        """
        Loads and validates the YAML configuration file.

        Raises:
            FileNotFoundError: If the configuration file is not found
            ValueError: If YAML is invalid, a section is missing or a value is out of range

        Returns:
            Dict: Configuration dictionary
        """
        try:
            with open(self.config_path, 'r') as file:
                config = yaml.safe_load(file)
        except FileNotFoundError:
            raise FileNotFoundError(
                f"Configuration file not found at: {self.config_path}\n"
                f"Current working directory: {Path.cwd()}"
            )
        except yaml.YAMLError as e:
            raise ValueError(f"Invalid YAML in configuration file: {e}")
        if not isinstance(config, dict):
            raise ValueError(f"Configuration file {self.config_path} does not hold a mapping")
        self._validate_config(config)
        return config

    def _validate_config(self, config: Dict) -> None:
        """
        Validates that all required sections are present and values lie in range.

        Args:
            config: Dictionary containing configuration data

        Raises:
            ValueError: If a section is missing or a value is invalid (the message names the key)
        """
        missing_sections = [section for section in REQUIRED_SECTIONS if section not in config]
        if missing_sections:
            raise ValueError(f"Missing required config sections: {', '.join(missing_sections)}")

        # Ensure sections are dictionaries, not None
        for section in REQUIRED_SECTIONS:
            if config[section] is None:
                config[section] = {}

        geometry, grid, scheme = config['geometry'], config['grid'], config['scheme']
        kernels, limits, experiment = config['kernels'], config['limits'], config['experiment']

        n = geometry.get('n', 3)
        if not isinstance(n, int) or n < 3:
            raise ValueError(f"geometry.n = {n}: construction valid only for n >= 3")
        if not _positive(geometry.get('rho', 0.02)):
            raise ValueError(f"geometry.rho must be positive, got {geometry.get('rho')}")
        points = grid.get('points_per_axis', 16)
        if not isinstance(points, int) or points < 16 or points & (points - 1):
            raise ValueError(f"grid.points_per_axis must be a power of two >= 16, got {points}")
        if not _positive(scheme.get('nu', 0.01)):
            raise ValueError(f"scheme.nu must be positive, got {scheme.get('nu')}")
        if int(scheme.get('k_max', 8)) < 1:
            raise ValueError(f"scheme.k_max must be >= 1, got {scheme.get('k_max')}")
        if not _positive(scheme.get('fp_tol', 1e-8)):
            raise ValueError(f"scheme.fp_tol must be positive, got {scheme.get('fp_tol')}")
        if int(scheme.get('slices', 64)) < 2:
            raise ValueError(f"scheme.slices must be >= 2, got {scheme.get('slices')}")
        if scheme.get('s_max') is not None and not _positive(scheme['s_max']):
            raise ValueError(f"scheme.s_max must be positive, got {scheme['s_max']}")
        variant = scheme.get('convection_variant', 'chain_rule')
        if variant not in [v.value for v in ConvectionVariant]:
            raise ValueError(f"scheme.convection_variant must be one of "
                             f"{[v.value for v in ConvectionVariant]}, got {variant}")
        terms = scheme.get('terms') or {}
        unknown = set(terms) - {'burgers', 'convection', 'damping', 'leray'}
        if unknown:
            raise ValueError(f"scheme.terms has unknown entries: {sorted(unknown)}")
        mu = kernels.get('mu', 0.5)
        if not isinstance(mu, (int, float)) or not 0 < mu < 1:
            raise ValueError(f"kernels.mu must lie in (0, 1), got {mu}")
        radial_nodes = kernels.get('radial_nodes', 64)
        if not isinstance(radial_nodes, int) or radial_nodes < 1:
            raise ValueError(f"kernels.radial_nodes must be a positive integer, got {radial_nodes}")
        nus = _as_list(limits.get('nus', [0.1, 0.01, 0.001]), 'limits.nus')
        if any(not _positive(nu) for nu in nus) or any(b >= a for a, b in zip(nus, nus[1:])):
            raise ValueError(f"limits.nus must be positive and strictly decreasing, got {nus}")
        rhos = _as_list(limits.get('rhos', [0.05, 0.02]), 'limits.rhos')
        if any(not _positive(rho) for rho in rhos):
            raise ValueError(f"limits.rhos must be positive, got {rhos}")
        name = experiment.get('name', 'verify')
        if name not in EXPERIMENTS:
            raise ValueError(f"experiment.name must be one of {EXPERIMENTS}, got {name}")

    def _set_default_paths(self) -> None:
        """
        Sets the default output directory relative to the application root if not specified.
        """
        data_dir = self.app_root / "results"
        output = self.config['output']
        if not output.get('output_dir'):
            output['output_dir'] = str(data_dir)
            logging.debug(f"Set default path for output.output_dir: {data_dir}")

    def _setup_logging(self) -> None:
        """
        Configures console logging; quiet mode lowers the level to WARNING.
        """
        try:
            stream_handler = logging.StreamHandler()
            logging.basicConfig(
                level=logging.INFO,
                format='%(asctime)s - %(levelname)s - %(message)s',
                handlers=[stream_handler]
            )
            logging.getLogger().setLevel(logging.WARNING if self.quiet else logging.INFO)
            logging.info(f"Logging initialized (config: {self.config_path})")
        except Exception as e:
            print(f"Error setting up logging: {e}")
            logging.error(f"Error setting up logging: {e}")
            raise

    def _verify_paths(self) -> None:
        """
        Creates the output directory if necessary.
        """
        path = Path(self.config['output']['output_dir'])
        try:
            path.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            logging.error(f"Cannot create output directory {path}: {e}")
            raise
        logging.info(f"Verified directory: {path}")

    @property
    def output_dir(self) -> Path:
        return Path(self.config['output']['output_dir'])

    def get_chart(self, rho: Optional[float] = None) -> ConeChart:
        """Returns the cone chart (optionally for another rho)."""
        geometry = self.config['geometry']
        return ConeChart(int(geometry.get('n', 3)), float(rho if rho is not None else geometry.get('rho', 0.02)))

    def get_toggles(self) -> Toggles:
        terms = self.config['scheme'].get('terms') or {}
        return Toggles(**{name: bool(terms.get(name, True))
                          for name in ('burgers', 'convection', 'damping', 'leray')})

    def get_scheme_config(self, **overrides) -> SchemeConfig:
        """Returns the SchemeConfig built from the scheme and grid sections.

        Args:
            overrides: SchemeConfig fields replacing configured values (rho replaces the chart)
        """
        scheme = self.config['scheme']
        rho = overrides.pop('rho', None)
        values = {
            'chart': self.get_chart(rho),
            'nu': float(scheme.get('nu', 0.01)),
            'm': int(scheme.get('m', 2)),
            'points_per_axis': int(self.config['grid'].get('points_per_axis', 16)),
            'slices': int(scheme.get('slices', 64)),
            's_max': None if scheme.get('s_max') is None else float(scheme['s_max']),
            'k_max': int(scheme.get('k_max', 8)),
            'fp_tol': float(scheme.get('fp_tol', 1e-8)),
            'toggles': self.get_toggles(),
            'convection_variant': ConvectionVariant(scheme.get('convection_variant', 'chain_rule')),
        }
        values.update(overrides)
        return SchemeConfig(**values)

    def get_limits_config(self) -> Dict:
        """Returns the limits configuration section."""
        return self.config['limits']

    def get_kernels_config(self) -> Dict:
        """Returns the kernels configuration section."""
        return self.config['kernels']

    def get_experiment_config(self) -> Dict:
        """Returns the experiment configuration section."""
        return self.config['experiment']

    def get_seed(self) -> int:
        return int(self.config['experiment'].get('seed', 0))

    def update_config(self, updates: Dict) -> None:
        """
        Updates configuration with new values, typically from the CLI.

        Args:
            updates: Dictionary containing configuration updates
                    Format: {'section': {'key': 'value'}}

        Raises:
            ValueError: If the updated configuration is invalid
        """
        for section, values in updates.items():
            if section in self.config:
                for key, value in values.items():
                    if value is not None:
                        self.config[section][key] = value
                        print(f"Config override: {section}.{key} = {value}")
                        logging.info(f"Updated config {section}.{key} = {value}")

        self._validate_config(self.config)
        self._verify_paths()

    def write_resolved(self, directory: Optional[Path] = None) -> Path:
        """Writes the fully resolved configuration as config_resolved.yaml."""
        directory = Path(directory) if directory is not None else self.output_dir
        path = directory / "config_resolved.yaml"
        try:
            directory.mkdir(parents=True, exist_ok=True)
            with open(path, 'w') as file:
                yaml.safe_dump(self.config, file, sort_keys=True)
        except OSError as e:
            logging.error(f"Failed to write resolved config {path}: {e}")
            raise
        return path


def _positive(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and value > 0


def _as_list(value, key: str) -> List[float]:
    if not isinstance(value, list):
        raise ValueError(f"{key} must be a list, got {value!r}")
    return value
