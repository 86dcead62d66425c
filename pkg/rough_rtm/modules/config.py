"""
Run configuration: INI files with the sections [surface], [medium],
[acquisition], [solver], [imaging] and [noise], two presets and
command-line overrides. Every value remembers where it came from.
"""
import configparser
import logging
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Tuple

from .errors import ConfigError, DataFormatError
from .geometry import AcquisitionGeometry, FlatProfile, ImageGrid, SurfaceProfile, builtin_profile
from .greens import KINDS, SolverOptions, TwoLayerMedium

logger = logging.getLogger(__name__)

# section -> key -> (type, default)
SCHEMA: Dict[str, Dict[str, Tuple[type, Any]]] = {
    'surface': {
        'profile': (str, 'f1'),
        'table': (str, ''),
        'support_halfwidth': (float, 4.0),
        'dip_radius': (float, 20.0),
    },
    'medium': {
        'kind': (str, 'D'),
        'k1': (float, 5.0),
        'k2': (float, 2.5),
    },
    'acquisition': {
        'regime': (str, 'near'),
        'aperture': (str, 'upper'),
        'source_radius': (float, 30.0),
        'receiver_radius': (float, 40.0),
        'n_sources': (int, 64),
        'n_receivers': (int, 64),
    },
    'solver': {
        'nodes_per_wavelength': (float, 10.0),
        'wing_wavelengths': (float, 16.0),
        'cells_per_wavelength': (float, 8.0),
        'threads': (int, 1),
    },
    'imaging': {
        'x1_min': (float, -5.0),
        'x1_max': (float, 5.0),
        'x2_min': (float, -1.5),
        'x2_max': (float, 1.0),
        'n1': (int, 128),
        'n2': (int, 32),
    },
    'noise': {
        'tau': (float, 0.0),
        'seed': (int, 0),
    },
}

PRESETS: Dict[str, Dict[str, Any]] = {
    'desk-scale': {},
    'paper-scale': {
        'surface.dip_radius': 95.0,
        'medium.k1': 10.0,
        'medium.k2': 5.0,
        'acquisition.source_radius': 100.0,
        'acquisition.receiver_radius': 100.0,
        'acquisition.n_sources': 1024,
        'acquisition.n_receivers': 1024,
    },
}

# values that depend on the kind when nobody set them
PENETRABLE_DEFAULTS = {
    'desk-scale': {'surface.dip_radius': 6.0, 'acquisition.aperture': 'full'},
    'paper-scale': {'acquisition.aperture': 'full', 'acquisition.n_sources': 2048,
                    'acquisition.n_receivers': 2048},
}

PROVENANCES = ('default', 'preset', 'file', 'flag')


def _convert(key: str, kind: type, raw: Any) -> Any:
    try:
        if kind is int and isinstance(raw, str):
            return int(raw.strip())
        return kind(raw.strip() if isinstance(raw, str) else raw)
    except (TypeError, ValueError):
        raise ConfigError(f"cannot convert {raw!r} to {kind.__name__}", key)


def _split_key(key: str) -> Tuple[str, str]:
    section, _, name = key.partition('.')
    if section not in SCHEMA:
        raise ConfigError(f"unknown section [{section}]", key)
    if name not in SCHEMA[section]:
        raise ConfigError(f"unknown key {name!r} in [{section}]", key)
    return section, name


@dataclass
class RunConfig:
    """
    Resolved parameters. values maps 'section.key' to the typed value and
    provenance maps it to one of default | preset | file | flag.
    """
    values: Dict[str, Any]
    provenance: Dict[str, str]
    preset: str = 'desk-scale'
    path: Optional[str] = None

    def __getitem__(self, key: str) -> Any:
        _split_key(key)
        return self.values[key]

    @property
    def kind(self) -> str:
        return self.values['medium.kind']

    @property
    def k1(self) -> float:
        return self.values['medium.k1']

    @property
    def k2(self) -> float:
        # impenetrable runs have a single medium
        return self.values['medium.k2'] if self.kind == 'P' else self.k1

    @property
    def dip_radius(self) -> float:
        return self.values['surface.dip_radius']

    @property
    def threads(self) -> int:
        return self.values['solver.threads']

    @property
    def tau(self) -> float:
        return self.values['noise.tau']

    @property
    def seed(self) -> int:
        return self.values['noise.seed']

    def profile(self) -> SurfaceProfile:
        name = self.values['surface.profile']
        if name == 'flat':
            return FlatProfile(self.values['surface.support_halfwidth'])
        return builtin_profile(name, self.dip_radius, self.values['surface.table'] or None)

    def medium(self) -> TwoLayerMedium:
        return TwoLayerMedium(self.k1, self.k2, 'gammaR', self.dip_radius)

    def acquisition(self, regime: str = None) -> AcquisitionGeometry:
        v = self.values
        return AcquisitionGeometry(regime or v['acquisition.regime'], v['acquisition.aperture'],
                                   v['acquisition.source_radius'], v['acquisition.receiver_radius'],
                                   v['acquisition.n_sources'], v['acquisition.n_receivers'])

    def options(self) -> SolverOptions:
        v = self.values
        return SolverOptions(v['solver.nodes_per_wavelength'], v['solver.wing_wavelengths'],
                             v['solver.cells_per_wavelength'])

    def grid(self) -> ImageGrid:
        v = self.values
        return ImageGrid(v['imaging.x1_min'], v['imaging.x1_max'], v['imaging.x2_min'],
                         v['imaging.x2_max'], v['imaging.n1'], v['imaging.n2'])

    def validate(self) -> 'RunConfig':
        """Checks every precondition of the pipeline; raises ConfigError naming the key."""
        v = self.values
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}", 'medium.kind')
        for key in ('medium.k1', 'medium.k2'):
            if not v[key] > 0:
                raise ConfigError("wavenumber must be positive", key)
        if self.dip_radius <= 0:
            raise ConfigError("dip radius must be positive", 'surface.dip_radius')
        aperture = v['acquisition.aperture']
        if self.kind == 'P' and aperture != 'full':
            raise ConfigError("penetrable runs use the full circle", 'acquisition.aperture')
        if self.kind != 'P' and aperture != 'upper':
            raise ConfigError("impenetrable runs use the upper semicircle", 'acquisition.aperture')
        if v['solver.nodes_per_wavelength'] < 6:
            raise ConfigError("must be >= 6", 'solver.nodes_per_wavelength')
        if v['solver.cells_per_wavelength'] < 4:
            raise ConfigError("must be >= 4", 'solver.cells_per_wavelength')
        if v['solver.wing_wavelengths'] < 0:
            raise ConfigError("must be >= 0", 'solver.wing_wavelengths')
        if v['solver.threads'] < 1:
            raise ConfigError("must be >= 1", 'solver.threads')
        if v['noise.tau'] < 0:
            raise ConfigError("noise level must be >= 0", 'noise.tau')
        if v['noise.seed'] < 0:
            raise ConfigError("seed must be >= 0", 'noise.seed')

        profile = self.profile()
        if profile.support_halfwidth >= self.dip_radius and v['surface.profile'] != 'gammaR-dip':
            raise ConfigError("the perturbation must lie inside B_R", 'surface.dip_radius')
        acquisition = self.acquisition()
        acquisition.validate(self.dip_radius)
        source_radius = acquisition.source_radius if acquisition.regime == 'near' else None
        self.grid().validate(self.dip_radius, source_radius)
        return self

    def describe(self) -> List[str]:
        """One line per parameter: 'section.key = value  (provenance)'."""
        width = max(len(key) for key in self.values)
        return [f"{key.ljust(width)} = {self.values[key]!s:<12} ({self.provenance[key]})"
                for key in self.values]


def _defaults() -> Tuple[Dict[str, Any], Dict[str, str]]:
    values, provenance = {}, {}
    for section, keys in SCHEMA.items():
        for name, (_, default) in keys.items():
            values[f"{section}.{name}"] = default
            provenance[f"{section}.{name}"] = 'default'
    return values, provenance


def _read_file(path: str) -> Dict[str, str]:
    if not os.path.isfile(path):
        raise FileNotFoundError(f"configuration file {path} not found")
    parser = configparser.ConfigParser(inline_comment_prefixes=('#', ';'))
    try:
        parser.read(path)
    except configparser.Error as error:
        raise DataFormatError(f"{path}: {error}")
    entries = {}
    for section in parser.sections():
        for name, raw in parser.items(section):
            key = f"{section}.{name}"
            _split_key(key)
            entries[key] = raw
    return entries


def load_config(path: str = None, preset: str = 'desk-scale',
                overrides: Mapping[str, Any] = None) -> RunConfig:
    """
    Resolution order: defaults < preset < file < overrides (flags).
    Unknown sections and keys raise ConfigError.
    """
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}", 'preset')
    values, provenance = _defaults()

    def apply(entries: Mapping[str, Any], origin: str) -> None:
        for key, raw in entries.items():
            section, name = _split_key(key)
            values[key] = _convert(key, SCHEMA[section][name][0], raw)
            provenance[key] = origin

    apply(PRESETS[preset], 'preset')
    if path is not None:
        apply(_read_file(path), 'file')
    apply({key: value for key, value in (overrides or {}).items() if value is not None}, 'flag')

    if values['medium.kind'] == 'P':
        for key, value in PENETRABLE_DEFAULTS[preset].items():
            if provenance[key] in ('default', 'preset'):
                values[key] = value
                provenance[key] = 'default' if preset == 'desk-scale' else 'preset'
    config = RunConfig(values, provenance, preset, path)
    logger.debug("resolved configuration from %s (preset %s)", path or "defaults", preset)
    return config.validate()


def write_config(config: RunConfig, path: str) -> None:
    """Writes the resolved values as an INI file that load_config reads back."""
    parser = configparser.ConfigParser()
    for key, value in config.values.items():
        section, name = _split_key(key)
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, name, str(value))
    with open(path, 'w') as stream:
        parser.write(stream)


__all__ = ['PRESETS', 'RunConfig', 'SCHEMA', 'load_config', 'write_config']
