"""Tests para el módulo infrastructure.config."""

import tempfile
from fractions import Fraction
from pathlib import Path

import pytest

from lica.infrastructure.config import (
    AddcombConfig,
    AppConfig,
    BeckConfig,
    BsgConfig,
    ConfigLoader,
    FieldConfig,
    HarnessConfig,
    IncidenceConfig,
    LoggingConfig,
    as_fraction,
    get_config,
    reload_config,
)


@pytest.fixture
def valid_config_content():
    """Contenido válido de un archivo de configuración."""
    return """
[field]
max_modulus = 1000003

[bsg]
c_bsg = "1/8"
C_bsg = 512

[beck]
delta = "1/100"
epsilon_cover = 0.05

[incidence]
epsilon = "1/50"
refine_depth = 2

[harness]
seed = 7
threads = 2

[logging]
level = "debug"
"""


@pytest.fixture
def temp_config_file(valid_config_content):
    """Crea un archivo temporal de configuración."""
    with tempfile.NamedTemporaryFile(mode="w", suffix=".toml", delete=False, encoding="utf-8") as f:
        f.write(valid_config_content)
        temp_path = Path(f.name)

    yield temp_path

    temp_path.unlink(missing_ok=True)


def _write_temp(content: str) -> Path:
    with tempfile.NamedTemporaryFile(mode="w", suffix=".toml", delete=False, encoding="utf-8") as f:
        f.write(content)
        return Path(f.name)


class TestAsFraction:
    """Tests para as_fraction."""

    @pytest.mark.parametrize(
        "value,expected",
        [(3, Fraction(3)), ("1/267", Fraction(1, 267)), (" 2/4 ", Fraction(1, 2)), (0.01, Fraction(1, 100))],
    )
    def test_valid_values(self, value, expected):
        """Los flotantes se leen por su representación decimal."""
        assert as_fraction(value) == expected

    @pytest.mark.parametrize("value", ["abc", "1/0", True])
    def test_invalid_values(self, value):
        """Prueba que texto, división por cero y booleanos se rechazan."""
        with pytest.raises(ValueError, match="número racional"):
            as_fraction(value)


class TestSectionConfigs:
    """Tests para la validación de cada sección."""

    def test_field_modulus_range(self):
        """Prueba que max_modulus debe estar en (3, 2^31]."""
        with pytest.raises(ValueError, match="módulo máximo"):
            FieldConfig(max_modulus=2**31 + 1)

    def test_addcomb_witness_limit(self):
        """Prueba el límite del tamaño del testigo."""
        with pytest.raises(ValueError, match="testigo"):
            AddcombConfig(witness_max_size=21)
        with pytest.raises(ValueError, match="umbral denso"):
            AddcombConfig(dense_threshold=0)

    def test_bsg_constants(self):
        """Las constantes de texto se normalizan a Fraction."""
        cfg = BsgConfig(c_bsg="1/32", sanity_band="1/2")
        assert cfg.c_bsg == Fraction(1, 32)
        assert cfg.sanity_band == Fraction(1, 2)
        with pytest.raises(ValueError, match="positivas"):
            BsgConfig(C_bsg=0)
        with pytest.raises(ValueError, match="oráculo"):
            BsgConfig(oracle_max_n=11)

    def test_beck_delta_range(self):
        """Prueba que δ fuera de (0, 1) se rechaza."""
        with pytest.raises(ValueError, match="δ debe estar en"):
            BeckConfig(delta=1)

    def test_incidence_epsilon_range(self):
        """Prueba que ε >= 1/2 se rechaza."""
        with pytest.raises(ValueError, match="ε debe estar en"):
            IncidenceConfig(epsilon="1/2")
        with pytest.raises(ValueError, match="refinamiento"):
            IncidenceConfig(refine_depth=0)

    def test_harness_validation(self):
        """Prueba semilla, hilos y presupuesto."""
        with pytest.raises(ValueError, match="semilla"):
            HarnessConfig(seed=-1)
        with pytest.raises(ValueError, match="hilos"):
            HarnessConfig(threads=-2)
        with pytest.raises(ValueError, match="presupuesto"):
            HarnessConfig(instance_budget_s=0)

    def test_logging_level(self):
        """El nivel se normaliza a mayúsculas."""
        assert LoggingConfig(level="info").level == "INFO"
        with pytest.raises(ValueError, match="Nivel de registro desconocido"):
            LoggingConfig(level="chatty")


class TestConfigLoader:
    """Tests para ConfigLoader."""

    def test_load_valid_config(self, temp_config_file):
        """Prueba que se carga correctamente un archivo válido."""
        config = ConfigLoader.load(temp_config_file)

        assert isinstance(config, AppConfig)
        assert config.field.max_modulus == 1000003
        assert config.bsg.c_bsg == Fraction(1, 8)
        assert config.beck.delta == Fraction(1, 100)
        assert config.beck.epsilon_cover == Fraction(1, 20)
        assert config.incidence.refine_depth == 2
        assert config.harness.seed == 7
        assert config.logging.level == "DEBUG"

    def test_missing_sections_use_defaults(self, temp_config_file):
        """Las secciones ausentes toman los valores por defecto."""
        config = ConfigLoader.load(temp_config_file)
        assert config.addcomb.dense_threshold == 2**20
        assert config.beck.c_rich == Fraction(1)

    def test_load_nonexistent_file_raises_error(self):
        """Prueba que un archivo inexistente lanza FileNotFoundError."""
        with pytest.raises(FileNotFoundError, match="no encontrado"):
            ConfigLoader.load(Path("/ruta/inexistente/config.toml"))

    def test_load_invalid_toml_raises_error(self):
        """Prueba que un TOML ilegible lanza ValueError."""
        temp_path = _write_temp("[beck\ndelta = ")
        try:
            with pytest.raises(ValueError, match="Error al leer"):
                ConfigLoader.load(temp_path)
        finally:
            temp_path.unlink(missing_ok=True)

    def test_unknown_section_raises_error(self):
        """Prueba que una sección desconocida se rechaza."""
        temp_path = _write_temp("[physics]\nspeed_of_light = 3.0\n")
        try:
            with pytest.raises(ValueError, match="Configuración inválida"):
                ConfigLoader.load(temp_path)
        finally:
            temp_path.unlink(missing_ok=True)

    def test_unknown_key_raises_error(self):
        """Prueba que una clave desconocida se rechaza."""
        temp_path = _write_temp("[beck]\ngamma = 2\n")
        try:
            with pytest.raises(ValueError, match="Configuración inválida"):
                ConfigLoader.load(temp_path)
        finally:
            temp_path.unlink(missing_ok=True)

    def test_invalid_value_raises_error(self):
        """Prueba que un valor fuera de rango se informa como configuración inválida."""
        temp_path = _write_temp('[beck]\ndelta = "3/2"\n')
        try:
            with pytest.raises(ValueError, match="Configuración inválida"):
                ConfigLoader.load(temp_path)
        finally:
            temp_path.unlink(missing_ok=True)

    def test_find_default_config(self):
        """El config.toml del proyecto está en la raíz."""
        path = ConfigLoader._find_default_config()
        assert path.name == "config.toml"
        assert path.exists()

    def test_project_config_matches_defaults(self):
        """config.toml reproduce los valores por defecto de las dataclasses."""
        config = ConfigLoader.load()
        assert config.beck == BeckConfig()
        assert config.incidence == IncidenceConfig()
        assert config.bsg == BsgConfig()

    def test_echo_is_serializable(self):
        """echo convierte las fracciones en cadenas."""
        echo = ConfigLoader.load().echo()
        assert echo["beck"]["delta"] == "1/267"
        assert echo["incidence"]["epsilon"] == "1/10678"
        assert set(echo) == {"field", "addcomb", "bsg", "beck", "incidence", "harness", "logging"}


class TestGlobalConfig:
    """Tests para get_config y reload_config."""

    def test_get_config_is_cached(self):
        """Dos llamadas devuelven la misma instancia."""
        assert get_config() is get_config()

    def test_reload_config(self, temp_config_file):
        """reload_config sustituye la instancia global."""
        try:
            config = reload_config(temp_config_file)
            assert get_config() is config
            assert get_config().harness.seed == 7
        finally:
            reload_config()
        assert get_config().harness.seed == 0
