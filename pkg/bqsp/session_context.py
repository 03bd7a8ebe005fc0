from __future__ import annotations
import os
import json
import tomllib
import logging
import subprocess
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from .definitions import SimulationError
from .hilbert import FockBasisConfig
from .instructions import DurationModel
from .noise import NoiseModel

_logger = logging.getLogger(__name__)

VERSION = "0.1.0"

FOCK_DIM_ENV = 'BQSP_FOCK_DIM'


class ConfigError(ValueError):
    """An experiment configuration could not be resolved; the message names the offending key."""


def _check_keys(block: str, values: dict, allowed: set[str]):
    for key in values:
        if key not in allowed:
            raise ConfigError(f"unknown key '{key}' in {block} (expected one of: {', '.join(sorted(allowed))})")


def _field_names(cls) -> set[str]:
    return {f.name for f in fields(cls) if f.init}


def _block(name: str, cls, values: dict | None):
    if values is None:
        return cls()
    if not isinstance(values, dict):
        raise ConfigError(f"'{name}' must be a table, got {type(values).__name__}")
    _check_keys(name, values, _field_names(cls))
    try:
        return cls.from_dict(values)
    except (TypeError, ValueError, SimulationError) as e:
        raise ConfigError(f"invalid '{name}' block: {e}") from e


@dataclass
class ExperimentConfig:
    experiment: str # name of a registered experiment
    parameters: dict[str, Any] = field(default_factory=dict) # overrides of the experiment defaults
    seed: int = 0
    output_path: Path = Path('results') # directory receiving the CSV and its JSON sidecar
    fock_dim: int | None = None # global truncation override
    jobs: int = 1 # worker threads for sweep points
    noise: NoiseModel = field(default_factory=NoiseModel)
    durations: DurationModel = field(default_factory=DurationModel)

    def __post_init__(self):
        if not isinstance(self.experiment, str) or not self.experiment:
            raise ConfigError("'experiment' must be a non empty name")
        if not isinstance(self.parameters, dict):
            raise ConfigError("'parameters' must be a table")
        if self.fock_dim is not None and int(self.fock_dim) < 2:
            raise ConfigError(f"invalid 'fock_dim': {self.fock_dim}")
        if int(self.jobs) < 1:
            raise ConfigError(f"invalid 'jobs': {self.jobs}")
        self.output_path = Path(self.output_path)

    @staticmethod
    def from_dict(values: dict) -> ExperimentConfig:
        _check_keys("the configuration", values, _field_names(ExperimentConfig))
        if 'experiment' not in values:
            raise ConfigError("missing key 'experiment'")
        return ExperimentConfig(
            experiment=values['experiment'],
            parameters=dict(values.get('parameters', {})),
            seed=int(values.get('seed', 0)),
            output_path=Path(values.get('output_path', 'results')),
            fock_dim=int(values['fock_dim']) if values.get('fock_dim') is not None else None,
            jobs=int(values.get('jobs', 1)),
            noise=_block('noise', NoiseModel, values.get('noise')),
            durations=_block('durations', DurationModel, values.get('durations')),
        )

    @staticmethod
    def from_json(config_file_path: Path) -> ExperimentConfig:
        with config_file_path.open('r') as f:
            try:
                json_config: dict = json.loads(f.read())
            except json.JSONDecodeError as e:
                raise ConfigError(f"{config_file_path}: {e}") from e
        return ExperimentConfig.from_dict(json_config)

    @staticmethod
    def from_toml(config_file_path: Path) -> ExperimentConfig:
        with config_file_path.open('rb') as f:
            try:
                toml_config = tomllib.load(f)
            except tomllib.TOMLDecodeError as e:
                raise ConfigError(f"{config_file_path}: {e}") from e
        return ExperimentConfig.from_dict(toml_config)

    @staticmethod
    def load(config_file_path: Path) -> ExperimentConfig:
        config_file_path = Path(config_file_path)
        if not config_file_path.exists():
            raise ConfigError(f"configuration file not found: {config_file_path}")
        if config_file_path.suffix == '.json':
            return ExperimentConfig.from_json(config_file_path)
        return ExperimentConfig.from_toml(config_file_path)

    def to_dict(self) -> dict:
        """Fully resolved configuration, as embedded in every output header."""
        return {
            'experiment': self.experiment,
            'parameters': self.parameters,
            'seed': self.seed,
            'output_path': str(self.output_path),
            'fock_dim': self.fock_dim,
            'jobs': self.jobs,
            'noise': {f.name: getattr(self.noise, f.name) for f in fields(self.noise)},
            'durations': {f.name: getattr(self.durations, f.name) for f in fields(self.durations)},
        }


def env_fock_dim() -> int | None:
    value = os.environ.get(FOCK_DIM_ENV)
    if value is None or value == '':
        return None
    try:
        dim = int(value)
    except ValueError as e:
        raise ConfigError(f"invalid {FOCK_DIM_ENV}: {value}") from e
    if dim < 2:
        raise ConfigError(f"invalid {FOCK_DIM_ENV}: {value}")
    return dim


def version_string() -> str:
    """git-describe style version of the working tree, the package version outside a checkout."""
    try:
        out = subprocess.run(['git', 'describe', '--tags', '--always', '--dirty'], capture_output=True, text=True,
                             cwd=Path(__file__).parent, timeout=5)
    except (OSError, subprocess.SubprocessError):
        return VERSION
    described = out.stdout.strip()
    return f"{VERSION}+{described}" if out.returncode == 0 and described else VERSION


@dataclass
class RunContext:
    seed: int = 0
    jobs: int = 1
    output_dir: Path = Path('results')
    fock_dim: int | None = None # overrides every experiment's default truncation
    version: str = VERSION
    noise: NoiseModel = field(default_factory=NoiseModel)
    durations: DurationModel = field(default_factory=DurationModel)

    def __post_init__(self):
        self.output_dir = Path(self.output_dir)

    def fock_config(self, default_dim: int, leakage_tol: float = 1e-6, strict: bool = False) -> FockBasisConfig:
        dim = self.fock_dim if self.fock_dim is not None else default_dim
        return FockBasisConfig(dim, leakage_tol, strict)

    @staticmethod
    def resolve(config: ExperimentConfig, seed: int | None = None, jobs: int | None = None,
                output_dir: Path | None = None) -> RunContext:
        """CLI flags first, then BQSP_FOCK_DIM, then the configuration file."""
        env_dim = env_fock_dim()
        ctxt = RunContext(
            seed=config.seed if seed is None else seed,
            jobs=config.jobs if jobs is None else jobs,
            output_dir=config.output_path if output_dir is None else output_dir,
            fock_dim=env_dim if env_dim is not None else config.fock_dim,
            version=version_string(),
            noise=config.noise,
            durations=config.durations,
        )
        _logger.debug(f"run context: {ctxt}")
        return ctxt
