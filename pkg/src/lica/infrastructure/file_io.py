"""
Módulo de entrada/salida de archivos.

Proporciona funcionalidades para:
- Guardar y cargar registros de ejecución (RunRecord) en JSON versionado
- Serializar trazas de los pipelines a un documento JSON versionado
- Exportar métricas por instancia y etapas de una traza a CSV
- Leer conjuntos, puntos y rectas de entrada desde JSON
"""

import csv
import json
import os
import tempfile
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from lica.core.errors import CorruptRecordError, SchemaMismatchError
from lica.core.models import Trace

SCHEMA_VERSION = 1
TRACE_SCHEMA = "lica.trace"
TRACE_VERSION = 1


class InstanceMetrics(BaseModel):
    """Métricas de una instancia de un barrido."""

    model_config = ConfigDict(extra="forbid")

    index: int
    key: str
    seed: Optional[int] = None
    status: str = "ok"
    p: int
    n: int
    elements: Optional[List[int]] = None
    line_count: Optional[int] = None
    delta_eff: Optional[float] = None
    theorem_ratio: Optional[float] = None
    sum_size: Optional[int] = None
    product_size: Optional[int] = None
    sum_product_exponent: Optional[float] = None
    incidences: Optional[int] = None
    expected_incidences: Optional[int] = None
    incidence_ratio: Optional[float] = None
    epsilon_eff: Optional[float] = None
    case: Optional[str] = None
    verdict: Optional[bool] = None
    trace_status: Optional[str] = None
    checks_pass: Optional[bool] = None
    error: Optional[str] = None


class Aggregate(BaseModel):
    """Resumen de una métrica sobre las instancias completadas."""

    model_config = ConfigDict(extra="forbid")

    count: int
    min: Optional[float] = None
    max: Optional[float] = None
    mean: Optional[float] = None
    argmin: Optional[str] = None
    argmax: Optional[str] = None


class RunRecord(BaseModel):
    """
    Registro persistido de una ejecución.

    Attributes:
        schema_version: Versión del esquema (SCHEMA_VERSION).
        kind: "extremal" o "incidence".
        timestamp: Marca temporal configurada (determinista).
        seed: Semilla maestra.
        config: Eco de la configuración efectiva.
        scan: Descripción del barrido.
        instances: Métricas por instancia, en orden de índice.
        aggregates: Métrica -> resumen.
        verdicts: Resumen de veredictos y estados.
    """

    model_config = ConfigDict(extra="forbid")

    schema_version: int = SCHEMA_VERSION
    kind: str
    timestamp: str
    seed: int
    config: Dict[str, Any] = Field(default_factory=dict)
    scan: Dict[str, Any] = Field(default_factory=dict)
    instances: List[InstanceMetrics] = Field(default_factory=list)
    aggregates: Dict[str, Aggregate] = Field(default_factory=dict)
    verdicts: Dict[str, Any] = Field(default_factory=dict)


def _atomic_write(filepath: Path, text: str) -> None:
    """Escribe en un temporal del mismo directorio y lo renombra."""
    filepath = Path(filepath)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=filepath.parent, prefix=f".{filepath.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, filepath)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


class RunRecordStore:
    """
    Persistencia de RunRecord.

    El JSON se escribe con claves ordenadas, de modo que la misma
    configuración y semilla producen archivos idénticos byte a byte.
    """

    @staticmethod
    def dumps(record: RunRecord) -> str:
        return json.dumps(record.model_dump(mode="json"), sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    @staticmethod
    def save(record: RunRecord, filepath: Path) -> Path:
        """
        Guarda el registro de forma atómica.

        Raises:
            IOError: Si no se puede escribir el archivo.
        """
        try:
            _atomic_write(filepath, RunRecordStore.dumps(record))
        except OSError as e:
            raise IOError(f"Error al guardar el registro en {filepath}: {e}") from e
        return Path(filepath)

    @staticmethod
    def load(filepath: Path) -> RunRecord:
        """
        Carga y valida un registro.

        Raises:
            FileNotFoundError: Si el archivo no existe.
            CorruptRecordError: Si el JSON es ilegible o no valida.
            SchemaMismatchError: Si la versión difiere o hay campos desconocidos.
        """
        filepath = Path(filepath)
        if not filepath.exists():
            raise FileNotFoundError(f"Registro no encontrado: {filepath}")
        try:
            data = json.loads(filepath.read_text(encoding="utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError) as e:
            raise CorruptRecordError(f"JSON inválido en {filepath}: {e}") from e
        if not isinstance(data, dict):
            raise CorruptRecordError(f"El registro {filepath} no es un objeto JSON")

        version = data.get("schema_version")
        if version != SCHEMA_VERSION:
            raise SchemaMismatchError(
                f"Versión de esquema no admitida en {filepath}: {version!r} (se espera {SCHEMA_VERSION})"
            )
        try:
            return RunRecord.model_validate(data)
        except ValidationError as e:
            unknown = [err["loc"] for err in e.errors() if err["type"] == "extra_forbidden"]
            if unknown:
                raise SchemaMismatchError(
                    f"Campos desconocidos para la versión {SCHEMA_VERSION} en {filepath}: {unknown}"
                ) from e
            raise CorruptRecordError(f"Registro inválido en {filepath}: {e}") from e


def to_jsonable(value: Any) -> Any:
    """Convierte fracciones a 'a/b', escalares numpy a Python y tuplas a listas."""
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    return value


class TraceSerializer:
    """Documento JSON versionado de una traza (esquema en docs/trace_schema.md)."""

    _COMMON = ("kind", "n", "p", "status", "empty_stage", "stages")

    @classmethod
    def to_dict(cls, trace: Trace) -> Dict[str, Any]:
        doc: Dict[str, Any] = {
            "schema": TRACE_SCHEMA,
            "version": TRACE_VERSION,
            "kind": trace.kind,
            "n": trace.n,
            "p": trace.p,
            "status": trace.status,
            "empty_stage": trace.empty_stage,
            "checks_pass": trace.checks_pass,
            "stages": [
                {
                    "stage_name": record.name,
                    "estimate": record.estimate,
                    "measured": to_jsonable(record.measured),
                    "predicted": record.predicted,
                    "ratio": record.ratio,
                    "payload_sizes": to_jsonable(record.payload_sizes),
                    "checks": to_jsonable(record.checks),
                    "details": to_jsonable(record.details),
                }
                for record in trace.stages
            ],
        }
        for name, value in vars(trace).items():
            if name in cls._COMMON:
                continue
            if isinstance(value, Trace):
                doc[name] = cls.to_dict(value)
            else:
                doc[name] = to_jsonable(value)
        return doc

    @classmethod
    def dumps(cls, trace: Trace) -> str:
        return json.dumps(cls.to_dict(trace), sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def save(cls, trace: Trace, filepath: Path) -> Path:
        try:
            _atomic_write(filepath, cls.dumps(trace))
        except OSError as e:
            raise IOError(f"Error al guardar la traza en {filepath}: {e}") from e
        return Path(filepath)


class ResultsExporter:
    """
    Exporta resultados a CSV para herramientas externas.

    El JSON sigue siendo la fuente de verdad; el CSV aplana las métricas.
    """

    @staticmethod
    def export_instances_to_csv(instances: List[InstanceMetrics], filepath: Path) -> None:
        """
        Una fila por instancia; elements se aplana como "a;b;c".

        Raises:
            IOError: Si no se puede escribir el archivo.
        """
        fieldnames = list(InstanceMetrics.model_fields)
        try:
            with open(filepath, "w", newline="", encoding="utf-8") as f:
                writer = csv.DictWriter(f, fieldnames=fieldnames)
                writer.writeheader()
                for item in instances:
                    row = item.model_dump()
                    if row["elements"] is not None:
                        row["elements"] = ";".join(str(v) for v in row["elements"])
                    writer.writerow(row)
        except OSError as e:
            raise IOError(f"Error al guardar el archivo CSV en {filepath}: {e}") from e

    @staticmethod
    def export_stages_to_csv(trace: Trace, filepath: Path) -> None:
        """
        Una fila por etapa de la traza.

        Raises:
            IOError: Si no se puede escribir el archivo.
        """
        fieldnames = ["stage_name", "estimate", "measured", "predicted", "ratio", "failed_checks"]
        try:
            with open(filepath, "w", newline="", encoding="utf-8") as f:
                writer = csv.DictWriter(f, fieldnames=fieldnames)
                writer.writeheader()
                for record in trace.stages:
                    writer.writerow(
                        {
                            "stage_name": record.name,
                            "estimate": record.estimate,
                            "measured": to_jsonable(record.measured),
                            "predicted": record.predicted,
                            "ratio": record.ratio,
                            "failed_checks": ";".join(record.failed_checks),
                        }
                    )
        except OSError as e:
            raise IOError(f"Error al guardar el archivo CSV en {filepath}: {e}") from e

    @staticmethod
    def export_rows_to_csv(rows: List[Dict[str, Any]], filepath: Path) -> None:
        """
        Exporta filas arbitrarias con las claves de la primera como columnas.

        Raises:
            ValueError: Si la lista está vacía.
            IOError: Si no se puede escribir el archivo.
        """
        if not rows:
            raise ValueError("La lista de resultados está vacía")
        try:
            with open(filepath, "w", newline="", encoding="utf-8") as f:
                writer = csv.DictWriter(f, fieldnames=list(rows[0]))
                writer.writeheader()
                for row in rows:
                    writer.writerow({k: to_jsonable(v) for k, v in row.items()})
        except OSError as e:
            raise IOError(f"Error al guardar el archivo CSV en {filepath}: {e}") from e


def load_json(filepath: Path) -> Any:
    """
    Lee un documento JSON de entrada.

    Raises:
        FileNotFoundError: Si el archivo no existe.
        ValueError: Si el JSON es inválido.
    """
    filepath = Path(filepath)
    if not filepath.exists():
        raise FileNotFoundError(f"Archivo no encontrado: {filepath}")
    try:
        with open(filepath, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ValueError(f"Archivo JSON inválido en {filepath}: {e}") from e


def load_integers(filepath: Path) -> List[int]:
    """
    Lee un arreglo JSON de enteros.

    Raises:
        ValueError: Si el documento no es una lista de enteros.
    """
    data = load_json(filepath)
    if not isinstance(data, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in data):
        raise ValueError(f"Se esperaba un arreglo JSON de enteros en {filepath}")
    return data


def load_coordinates(filepath: Path) -> List[List[int]]:
    """
    Lee un arreglo JSON de coordenadas: pares [x, y] o triples [X, Y, Z].

    Raises:
        ValueError: Si hay elementos que no son pares o triples de enteros,
            o si se mezclan pares y triples.
    """
    data = load_json(filepath)
    if not isinstance(data, list):
        raise ValueError(f"Se esperaba un arreglo JSON de coordenadas en {filepath}")
    for item in data:
        if not (
            isinstance(item, list)
            and len(item) in (2, 3)
            and all(isinstance(v, int) and not isinstance(v, bool) for v in item)
        ):
            raise ValueError(f"Coordenadas inválidas en {filepath}: {item!r}")
    if len({len(item) for item in data}) > 1:
        raise ValueError(f"No se pueden mezclar pares y triples en {filepath}")
    return data
