"""
Módulo de gestión de configuración.

Proporciona acceso centralizado a la configuración del laboratorio
cargada desde archivos TOML. Las constantes racionales (exponentes,
fracciones de cobertura) se leen como fractions.Fraction para que los
umbrales se comparen de forma exacta.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Optional, Union

try:
    import tomllib  # Python 3.11+ (built-in)
except ModuleNotFoundError:  # Python 3.10: API-identical backport
    import tomli as tomllib

logger = logging.getLogger(__name__)

Rational = Union[int, float, str, Fraction]


def as_fraction(value: Rational) -> Fraction:
    """
    Convierte un valor de configuración a Fraction.

    Acepta enteros, Fractions, cadenas "a/b" o decimales y flotantes
    (estos últimos se convierten por su representación decimal, de modo
    que 0.01 se lee como 1/100 y no como su aproximación binaria).

    Raises:
        ValueError: Si el valor no representa un número racional.
    """
    if isinstance(value, bool):
        raise ValueError(f"Se esperaba un número racional, recibido: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    try:
        return Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError) as e:
        raise ValueError(f"Se esperaba un número racional, recibido: {value!r}") from e


@dataclass
class FieldConfig:
    """Configuración de la aritmética en F_p."""

    max_modulus: int = 2**31

    def __post_init__(self):
        """Valida el módulo máximo admitido."""
        if not 3 < self.max_modulus <= 2**31:
            raise ValueError(
                f"El módulo máximo debe estar en (3, 2^31], recibido: {self.max_modulus}"
            )


@dataclass
class AddcombConfig:
    """Configuración de la combinatoria aditiva."""

    dense_threshold: int = 2**20
    witness_max_size: int = 12

    def __post_init__(self):
        """Valida los límites de conteo y búsqueda."""
        if self.dense_threshold <= 0:
            raise ValueError(
                f"El umbral denso debe ser positivo, recibido: {self.dense_threshold}"
            )
        if not 1 <= self.witness_max_size <= 20:
            raise ValueError(
                f"El tamaño máximo del testigo debe estar entre 1 y 20, recibido: {self.witness_max_size}"
            )


@dataclass
class BsgConfig:
    """Constantes del extractor BSG y de su oráculo."""

    c_bsg: Rational = Fraction(1, 16)
    C_bsg: Rational = 1024
    oracle_max_n: int = 8
    sanity_band: Rational = Fraction(1, 4)

    def __post_init__(self):
        """Normaliza a Fraction y valida que las constantes sean positivas."""
        self.c_bsg = as_fraction(self.c_bsg)
        self.C_bsg = as_fraction(self.C_bsg)
        self.sanity_band = as_fraction(self.sanity_band)
        if self.c_bsg <= 0 or self.C_bsg <= 0:
            raise ValueError(
                f"Las constantes BSG deben ser positivas, recibido: c={self.c_bsg}, C={self.C_bsg}"
            )
        if not 1 <= self.oracle_max_n <= 10:
            raise ValueError(
                f"El n máximo del oráculo debe estar entre 1 y 10, recibido: {self.oracle_max_n}"
            )
        if not 0 < self.sanity_band <= 1:
            raise ValueError(
                f"La banda de cordura debe estar en (0, 1], recibido: {self.sanity_band}"
            )


@dataclass
class BeckConfig:
    """Parámetros por defecto del pipeline de rectas generadas."""

    delta: Rational = Fraction(1, 267)
    c_rich: Rational = 1
    c_pop: Rational = 1
    epsilon_cover: Rational = Fraction(1, 100)

    def __post_init__(self):
        """Normaliza a Fraction y valida rangos."""
        self.delta = as_fraction(self.delta)
        self.c_rich = as_fraction(self.c_rich)
        self.c_pop = as_fraction(self.c_pop)
        self.epsilon_cover = as_fraction(self.epsilon_cover)
        if not 0 < self.delta < 1:
            raise ValueError(f"δ debe estar en (0, 1), recibido: {self.delta}")
        if self.c_rich <= 0 or self.c_pop <= 0:
            raise ValueError(
                f"Las constantes deben ser positivas, recibido: c_rich={self.c_rich}, c_pop={self.c_pop}"
            )
        if not 0 < self.epsilon_cover < 1:
            raise ValueError(
                f"ε de cobertura debe estar en (0, 1), recibido: {self.epsilon_cover}"
            )


@dataclass
class IncidenceConfig:
    """Parámetros por defecto del pipeline de incidencias."""

    epsilon: Rational = Fraction(1, 10678)
    c_erase: Rational = 2
    c_pop: Rational = 1
    refine_depth: int = 1
    handoff_max_points: int = 2500
    beck_handoff: bool = False

    def __post_init__(self):
        """Normaliza a Fraction y valida rangos."""
        self.epsilon = as_fraction(self.epsilon)
        self.c_erase = as_fraction(self.c_erase)
        self.c_pop = as_fraction(self.c_pop)
        if not 0 < self.epsilon < Fraction(1, 2):
            raise ValueError(f"ε debe estar en (0, 1/2), recibido: {self.epsilon}")
        if self.c_erase <= 0 or self.c_pop <= 0:
            raise ValueError(
                f"Las constantes deben ser positivas, recibido: c_erase={self.c_erase}, c_pop={self.c_pop}"
            )
        if self.refine_depth < 1:
            raise ValueError(
                f"La profundidad de refinamiento debe ser >= 1, recibido: {self.refine_depth}"
            )
        if self.handoff_max_points < 0:
            raise ValueError(
                f"El límite de puntos de la rejilla debe ser no negativo, recibido: {self.handoff_max_points}"
            )


@dataclass
class HarnessConfig:
    """Configuración de barridos y persistencia."""

    seed: int = 0
    threads: int = 0
    instance_budget_s: float = 60.0
    generated_at: str = "1970-01-01T00:00:00+00:00"

    def __post_init__(self):
        """Valida semilla, hilos y presupuesto."""
        if self.seed < 0:
            raise ValueError(f"La semilla debe ser no negativa, recibido: {self.seed}")
        if self.threads < 0:
            raise ValueError(
                f"El número de hilos debe ser no negativo, recibido: {self.threads}"
            )
        if self.instance_budget_s <= 0:
            raise ValueError(
                f"El presupuesto por instancia debe ser positivo, recibido: {self.instance_budget_s}"
            )


def _level_names_mapping() -> dict[str, int]:
    """logging.getLevelNamesMapping() (3.11+), con respaldo equivalente en 3.10."""
    if hasattr(logging, "getLevelNamesMapping"):
        return logging.getLevelNamesMapping()
    return logging._nameToLevel.copy()


@dataclass
class LoggingConfig:
    """Configuración del registro de eventos."""

    level: str = "WARNING"
    format: str = "%(asctime)s %(levelname)s %(name)s: %(message)s"

    def __post_init__(self):
        """Valida el nivel de registro."""
        self.level = str(self.level).upper()
        if self.level not in _level_names_mapping():
            raise ValueError(f"Nivel de registro desconocido: {self.level}")


@dataclass
class AppConfig:
    """Configuración completa de la aplicación."""

    field: FieldConfig
    addcomb: AddcombConfig
    bsg: BsgConfig
    beck: BeckConfig
    incidence: IncidenceConfig
    harness: HarnessConfig
    logging: LoggingConfig

    def echo(self) -> Dict[str, Any]:
        """Devuelve la configuración como diccionario serializable (fracciones como 'a/b')."""

        def _plain(section: Any) -> Dict[str, Any]:
            return {
                key: (str(value) if isinstance(value, Fraction) else value)
                for key, value in vars(section).items()
            }

        return {name: _plain(getattr(self, name)) for name in _SECTIONS}


_SECTIONS = {
    "field": FieldConfig,
    "addcomb": AddcombConfig,
    "bsg": BsgConfig,
    "beck": BeckConfig,
    "incidence": IncidenceConfig,
    "harness": HarnessConfig,
    "logging": LoggingConfig,
}


class ConfigLoader:
    """
    Cargador de configuración desde archivos TOML.

    Las secciones ausentes toman los valores por defecto de su dataclass;
    las claves desconocidas se rechazan.
    """

    DEFAULT_CONFIG_FILENAME = "config.toml"

    @classmethod
    def load(cls, config_path: Optional[Path] = None) -> AppConfig:
        """
        Carga la configuración desde un archivo TOML.

        Args:
            config_path: Ruta al archivo de configuración. Si es None,
                        busca config.toml en el directorio raíz del proyecto
                        y, si no existe, usa los valores por defecto.

        Returns:
            AppConfig con toda la configuración cargada.

        Raises:
            FileNotFoundError: Si el archivo indicado explícitamente no existe.
            ValueError: Si el archivo de configuración es inválido.

        Examples:
            >>> config = ConfigLoader.load()
            >>> config.beck.delta
            Fraction(1, 267)
        """
        if config_path is None:
            config_path = cls._find_default_config()
            if not config_path.exists():
                logger.debug("Sin %s, se usan los valores por defecto", config_path)
                return cls._build_config({})

        config_path = Path(config_path)
        if not config_path.exists():
            raise FileNotFoundError(
                f"Archivo de configuración no encontrado: {config_path}"
            )

        try:
            with open(config_path, "rb") as f:
                data = tomllib.load(f)
        except Exception as e:
            raise ValueError(f"Error al leer el archivo de configuración: {e}") from e

        try:
            config = cls._build_config(data)
        except (KeyError, TypeError, ValueError) as e:
            raise ValueError(f"Configuración inválida en {config_path}: {e}") from e

        return config

    @classmethod
    def _find_default_config(cls) -> Path:
        """
        Encuentra el archivo de configuración por defecto.

        Returns:
            Path a config.toml en la raíz del proyecto.
        """
        # Ubicación de este archivo: src/lica/infrastructure/config.py
        project_root = Path(__file__).parent.parent.parent.parent
        return project_root / cls.DEFAULT_CONFIG_FILENAME

    @classmethod
    def _build_config(cls, data: Dict[str, Any]) -> AppConfig:
        """
        Construye el objeto AppConfig desde los datos del TOML.

        Raises:
            KeyError: Si aparece una sección desconocida.
            TypeError: Si una sección contiene claves desconocidas.
        """
        unknown = set(data) - set(_SECTIONS)
        if unknown:
            raise KeyError(f"Secciones desconocidas: {sorted(unknown)}")
        sections = {
            name: section_cls(**data.get(name, {}))
            for name, section_cls in _SECTIONS.items()
        }
        return AppConfig(**sections)


# Instancia global de configuración (singleton lazy)
_config: Optional[AppConfig] = None


def get_config() -> AppConfig:
    """
    Obtiene la configuración de la aplicación.

    Carga la configuración la primera vez que se llama y la cachea para
    llamadas subsiguientes.

    Examples:
        >>> get_config().harness.seed
        0
    """
    global _config
    if _config is None:
        _config = ConfigLoader.load()
    return _config


def reload_config(config_path: Optional[Path] = None) -> AppConfig:
    """
    Recarga la configuración desde el archivo.

    Útil para tests o para la opción --config de la CLI.

    Args:
        config_path: Ruta opcional al archivo de configuración.

    Returns:
        AppConfig recargada.
    """
    global _config
    _config = ConfigLoader.load(config_path)
    return _config
