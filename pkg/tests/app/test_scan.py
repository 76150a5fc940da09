"""Tests para el módulo app.scan."""

import tempfile
from collections import Counter
from pathlib import Path
from unittest.mock import patch

import pytest

from lica.app.scan import (
    STATUS_ERROR,
    STATUS_OK,
    STATUS_TIMEOUT,
    ScanConfig,
    aggregate,
    extremal_scan,
    incidence_scan,
    run_scan,
)
from lica.infrastructure.file_io import InstanceMetrics, RunRecordStore


class TestScanConfig:
    """Tests para la validación de ScanConfig."""

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="Tipo de barrido desconocido"):
            ScanConfig(kind="spectral")

    def test_family_must_match_kind(self):
        """pencil solo existe para barridos de incidencias."""
        with pytest.raises(ValueError, match="no válida para extremal"):
            ScanConfig(kind="extremal", family="pencil")
        with pytest.raises(ValueError, match="no válida para incidence"):
            ScanConfig(kind="incidence", family="exhaustive")

    def test_trials_positive(self):
        with pytest.raises(ValueError, match="trials"):
            ScanConfig(trials=0)

    def test_from_toml(self):
        """Prueba la lectura de la tabla [scan]."""
        with tempfile.TemporaryDirectory() as d:
            path = Path(d) / "scan.toml"
            path.write_text(
                '[scan]\nkind = "incidence"\nfamily = "pencil"\nprimes = [7]\nsizes = [8]\n',
                encoding="utf-8",
            )
            config = ScanConfig.from_toml(path)
        assert config.family == "pencil"
        assert config.primes == [7]

    def test_from_toml_without_table(self):
        """Prueba que falta [scan]."""
        with tempfile.TemporaryDirectory() as d:
            path = Path(d) / "scan.toml"
            path.write_text("[beck]\ndelta = 1\n", encoding="utf-8")
            with pytest.raises(ValueError, match="Falta la tabla"):
                ScanConfig.from_toml(path)

    def test_from_toml_unknown_key(self):
        """Prueba que una clave desconocida se rechaza."""
        with tempfile.TemporaryDirectory() as d:
            path = Path(d) / "scan.toml"
            path.write_text("[scan]\nprimes = [7]\nrepeat = 3\n", encoding="utf-8")
            with pytest.raises(ValueError, match="inválida"):
                ScanConfig.from_toml(path)


class TestExtremalScan:
    """Tests para los barridos de rectas generadas."""

    def test_exhaustive_family(self):
        """Todos los A de tamaño 3 en F_11: C(11, 3) = 165 instancias."""
        record = extremal_scan(ScanConfig(primes=[11], sizes=[3], threads=1))
        assert len(record.instances) == 165
        assert [item.index for item in record.instances] == list(range(165))
        assert record.verdicts["ok"] == 165
        assert record.aggregates["theorem_ratio"].min >= 1
        assert record.verdicts["min_theorem_ratio_at_least_one"] is True

    def test_exhaustive_line_counts(self):
        """El mínimo de |L(A×A)| con |A| = 3 en F_11 es el de una progresión: 20."""
        record = extremal_scan(ScanConfig(primes=[11], sizes=[3], threads=1))
        assert record.aggregates["line_count"].min == 20
        assert record.aggregates["line_count"].argmin == "p=11:0,1,2"

    def test_exhaustive_f13(self):
        """|A| = 3 en F_13: 52 conjuntos fijos por una afinidad de orden 3 dan 18 rectas, 78 progresiones 20, el resto 22."""
        record = extremal_scan(ScanConfig(primes=[13], sizes=[3], threads=1))
        assert len(record.instances) == 286
        assert Counter(item.line_count for item in record.instances) == {18: 52, 20: 78, 22: 156}
        assert record.aggregates["line_count"].argmin == "p=13:0,1,4"
        assert record.aggregates["theorem_ratio"].min >= 1
        assert record.verdicts["min_theorem_ratio_at_least_one"] is True

    def test_empty_family(self):
        """Sin primos no hay instancias y los agregados quedan vacíos."""
        record = run_scan(ScanConfig(threads=1))
        assert record.instances == []
        assert record.aggregates["line_count"].count == 0
        assert record.verdicts["min_theorem_ratio_at_least_one"] is None

    def test_generated_family_is_seeded(self):
        """La misma semilla maestra reproduce los conjuntos aleatorios."""
        config = ScanConfig(family="random", primes=[101], sizes=[4], trials=3, seed=5, threads=1)
        first = run_scan(config)
        second = run_scan(config)
        assert [i.elements for i in first.instances] == [i.elements for i in second.instances]
        assert len({tuple(i.elements) for i in first.instances}) > 1

    def test_generator_error_is_recorded(self):
        """Una instancia imposible queda con estado error y el barrido sigue."""
        config = ScanConfig(family="geometric_progression", primes=[7], sizes=[3, 7], threads=1)
        record = run_scan(config)
        assert [item.status for item in record.instances] == [STATUS_OK, STATUS_ERROR]
        assert "p-1" in record.instances[1].error
        assert record.verdicts["errors"] == 1

    def test_zero_step_error_does_not_abort_scan(self):
        """Una diferencia nula en F_11 falla solo esa instancia; F_13 se completa."""
        config = ScanConfig(
            family="arithmetic_progression", primes=[11, 13], sizes=[3], generator={"step": 11}, threads=1
        )
        record = extremal_scan(config)
        assert [item.status for item in record.instances] == [STATUS_ERROR, STATUS_OK]
        assert "no nula" in record.instances[0].error
        assert record.instances[1].elements == [0, 9, 11]
        assert record.verdicts["errors"] == 1

    def test_plain_value_error_is_recorded(self):
        """Un ValueError que no es del dominio tampoco interrumpe el barrido."""
        config = ScanConfig(primes=[7], sizes=[2], threads=1)
        with patch("lica.app.scan.sum_product_stats", side_effect=ValueError("fallo interno")):
            record = run_scan(config)
        assert all(item.status == STATUS_ERROR for item in record.instances)
        assert record.instances[0].error == "fallo interno"
        assert record.verdicts["errors"] == 21

    def test_timeout_is_recorded(self):
        """Un presupuesto mínimo marca las instancias como timeout."""
        config = ScanConfig(primes=[7], sizes=[2], threads=1, instance_budget_s=1e-9)
        record = run_scan(config)
        assert all(item.status == STATUS_TIMEOUT for item in record.instances)
        assert record.verdicts["timeouts"] == 21
        assert record.aggregates["line_count"].count == 0

    def test_with_pipeline(self):
        """run_pipeline añade el estado de la traza."""
        record = run_scan(ScanConfig(primes=[11], sizes=[2], threads=1, run_pipeline=True))
        assert all(item.trace_status is not None for item in record.instances)
        assert "traces_complete" in record.verdicts

    @pytest.mark.parametrize(
        "config",
        [
            {"primes": [7], "sizes": [2]},
            {"family": "random", "primes": [101], "sizes": [4], "trials": 16},
            {"primes": [11], "sizes": [2], "run_pipeline": True},
        ],
    )
    def test_output_independent_of_threads(self, config):
        """El RunRecord es idéntico byte a byte con 1 y 8 procesos."""
        serial = run_scan(ScanConfig(**config, seed=1, threads=1))
        parallel = run_scan(ScanConfig(**config, seed=1, threads=8))
        assert RunRecordStore.dumps(serial) == RunRecordStore.dumps(parallel)

    def test_wrong_kind(self):
        with pytest.raises(ValueError, match="extremal"):
            extremal_scan(ScanConfig(kind="incidence", family="pencil"))


class TestIncidenceScan:
    """Tests para los barridos de incidencias."""

    def test_pencil(self):
        """Haz completo de F_7 y 7 puntos más: I = 8 + 7 = 15."""
        record = incidence_scan(ScanConfig(kind="incidence", family="pencil", primes=[7], sizes=[8], threads=1))
        (item,) = record.instances
        assert item.incidences == 15
        assert item.expected_incidences == 15
        assert record.verdicts["expected_incidences_match"] is True

    def test_full_plane(self):
        """P²(F_3): 13 puntos, 4 rectas por punto."""
        record = incidence_scan(ScanConfig(kind="incidence", family="full_plane", primes=[3], threads=1))
        (item,) = record.instances
        assert item.n == 13
        assert item.incidences == 52
        assert item.expected_incidences == 52

    def test_random_family(self):
        """Las instancias aleatorias tienen |P| = |L| = n."""
        record = incidence_scan(
            ScanConfig(kind="incidence", family="random", primes=[11], sizes=[5], trials=4, threads=1)
        )
        assert len(record.instances) == 4
        assert all(item.n == 5 for item in record.instances)
        assert record.aggregates["incidences"].count == sum(1 for i in record.instances if i.status == STATUS_OK)

    def test_pencil_too_large(self):
        """Un haz de F_7 tiene 8 rectas."""
        record = incidence_scan(ScanConfig(kind="incidence", family="pencil", primes=[7], sizes=[9], threads=1))
        assert record.instances[0].status == STATUS_ERROR

    def test_wrong_kind(self):
        with pytest.raises(ValueError, match="incidencias"):
            incidence_scan(ScanConfig())


class TestAggregate:
    """Tests para aggregate."""

    def test_ties_resolved_by_index(self):
        """Con valores iguales gana el menor índice."""
        items = [
            InstanceMetrics(index=0, key="a", p=7, n=2, line_count=6),
            InstanceMetrics(index=1, key="b", p=7, n=2, line_count=6),
            InstanceMetrics(index=2, key="c", p=7, n=2, line_count=4),
        ]
        summary = aggregate(items, "line_count")
        assert summary.min == 4 and summary.argmin == "c"
        assert summary.max == 6 and summary.argmax == "a"
        assert summary.mean == pytest.approx(16 / 3)

    def test_skips_failed_instances(self):
        """Las instancias con error no cuentan."""
        items = [
            InstanceMetrics(index=0, key="a", p=7, n=2, line_count=6),
            InstanceMetrics(index=1, key="b", p=7, n=2, status="error"),
        ]
        assert aggregate(items, "line_count").count == 1
