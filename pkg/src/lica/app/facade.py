"""
Módulo de fachada de aplicación.

Proporciona una API simplificada que desacopla la CLI de los módulos de
cálculo: traduce parámetros de usuario (primos, listas de enteros, archivos
JSON, especificaciones de generadores) a objetos del dominio, ejecuta la
operación y devuelve resultados listos para presentar o serializar.

Los errores de entrada se elevan como FacadeValidationError y los fallos
de cálculo de una instancia como FacadeComputationError.
"""

import logging
import time
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence

from lica.app.scan import ScanConfig, run_scan
from lica.core.addcomb import ElementSet, additive_energy, sum_product_stats
from lica.core.beck_pipeline import run_beck_pipeline
from lica.core.bsg import PairGraph, bsg_extract, compare_with_oracle
from lica.core.errors import LicaError
from lica.core.field import make_field
from lica.core.generators import GeneratorSpec, generate_set
from lica.core.incidence import (
    LineSet,
    PointSet,
    beck_delta_effective,
    count_incidences,
    incidence_ratio,
    spanned_lines,
)
from lica.core.incidence_pipeline import run_incidence_pipeline
from lica.core.models import BeckParams, BeckTrace, IncidenceParams, IncidenceTrace
from lica.infrastructure.config import get_config
from lica.infrastructure.file_io import RunRecord, RunRecordStore, to_jsonable

logger = logging.getLogger(__name__)

RECORD_FILENAME = "run_record.json"


class FacadeValidationError(Exception):
    """
    Excepción para errores de validación en la capa de fachada.

    Se lanza cuando los parámetros de usuario no pueden ser traducidos
    a objetos válidos del dominio (código de salida 2).
    """


class FacadeComputationError(Exception):
    """
    Excepción para fallos de cálculo sobre una instancia válida.

    Cubre agotamiento del presupuesto y errores del dominio durante el
    cálculo (código de salida 3).
    """


class ApplicationFacade:
    """
    Fachada de aplicación entre la CLI y el núcleo.

    Responsabilidades:
    - Construir cuerpos, conjuntos, puntos y rectas desde datos de usuario
    - Ejecutar conteos, pipelines, extracciones y barridos
    - Formatear resultados como diccionarios serializables
    """

    def __init__(self, threads: int = 1, budget_s: Optional[float] = None):
        """
        Args:
            threads: Procesos para los conteos que admiten paralelismo.
            budget_s: Presupuesto por ejecución de pipeline; por defecto
                el de [harness].
        """
        if threads < 1:
            raise FacadeValidationError(f"threads debe ser >= 1, recibido: {threads}")
        self.threads = threads
        self.budget_s = budget_s if budget_s is not None else get_config().harness.instance_budget_s

    # -- construcción de entradas -----------------------------------------

    @staticmethod
    def _validated(builder, *args, **kwargs):
        try:
            return builder(*args, **kwargs)
        except (KeyError, TypeError, ValueError, OSError) as e:
            raise FacadeValidationError(f"Entrada inválida: {e}") from e

    def build_set(
        self,
        prime: int,
        elements: Optional[Iterable[int]] = None,
        generator: Optional[Dict[str, Any]] = None,
        seed: Optional[int] = None,
    ) -> ElementSet:
        """
        Conjunto desde una lista de enteros (reducidos módulo p) o un generador.

        Raises:
            FacadeValidationError: Si falta la entrada o no es válida.
        """
        if (elements is None) == (generator is None):
            raise FacadeValidationError("Indique exactamente una de: lista de elementos o generador")

        def _build() -> ElementSet:
            fld = make_field(prime)
            if elements is not None:
                return ElementSet.of(fld, elements)
            return generate_set(GeneratorSpec.from_dict(generator, p=prime, seed=seed))

        return self._validated(_build)

    def build_points(self, prime: int, coords: Sequence[Sequence[int]]) -> PointSet:
        """Puntos afines (pares) o proyectivos (triples)."""

        def _build() -> PointSet:
            fld = make_field(prime)
            if coords and len(coords[0]) == 2:
                return PointSet.affine(fld, coords)
            return PointSet.projective(fld, coords)

        return self._validated(_build)

    def build_lines(self, prime: int, coords: Sequence[Sequence[int]], affine: bool = False) -> LineSet:
        """Rectas como triples: aX + bY + cZ = 0, o ax + by + c = 0 si affine."""

        def _build() -> LineSet:
            fld = make_field(prime)
            if any(len(c) != 3 for c in coords):
                raise ValueError("Las rectas se dan como triples de coeficientes")
            return (LineSet.affine if affine else LineSet.projective)(fld, coords)

        return self._validated(_build)

    def _deadline(self) -> float:
        return time.monotonic() + self.budget_s

    def _computed(self, operation, *args, **kwargs):
        try:
            return operation(*args, **kwargs)
        except (TimeoutError, ArithmeticError, LicaError) as e:
            raise FacadeComputationError(f"Error durante el cálculo: {e}") from e

    # -- operaciones -------------------------------------------------------

    def lines(self, A: ElementSet) -> Dict[str, Any]:
        """|L(A×A)|, δ_eff y la razón con |A×A|^{1+1/267}."""
        if len(A) < 2:
            raise FacadeValidationError(f"Se requiere |A| >= 2, recibido: {len(A)}")
        points = PointSet.cartesian(A, A)

        def _run():
            multiplicities = spanned_lines(points, workers=self.threads)
            return multiplicities, beck_delta_effective(points, multiplicities)

        multiplicities, report = self._computed(_run)
        return {
            "p": A.p,
            "elements": list(A.elements),
            "n": report.n,
            "line_count": report.line_count,
            "delta_eff": report.delta_eff,
            "theorem_ratio": report.theorem_ratio,
            "in_range": report.in_range,
            "multiplicity_histogram": {str(k): v for k, v in multiplicities.histogram().items()},
        }

    def incidences(self, P: PointSet, L: LineSet) -> Dict[str, Any]:
        """I(P, L) y su razón con n^{3/2-ε}, n = max(|P|, |L|)."""
        epsilon = get_config().incidence.epsilon
        if P.is_projective != L.is_projective and len(P) and len(L):
            raise FacadeValidationError("Puntos y rectas deben ser ambos afines o ambos proyectivos")
        total = self._computed(count_incidences, P, L)
        n = max(len(P), len(L), 1)
        return {
            "p": P.field.p,
            "points": len(P),
            "lines": len(L),
            "incidences": total,
            "ratio": incidence_ratio(total, n, epsilon),
            "epsilon": str(epsilon),
        }

    def sum_product(self, A: ElementSet) -> Dict[str, Any]:
        """Estadísticas suma-producto y energía aditiva de A."""
        stats = self._validated(sum_product_stats, A)
        return {
            "p": A.p,
            "elements": list(A.elements),
            "size": stats.size,
            "sum_size": stats.sum_size,
            "product_size": stats.product_size,
            "max_size": stats.max_size,
            "exponent": stats.exponent,
            "additive_energy": additive_energy(A),
        }

    def beck_pipeline(
        self,
        A1: ElementSet,
        A2: ElementSet,
        delta: Optional[str] = None,
        params: Optional[Dict[str, Any]] = None,
        strict: bool = False,
    ) -> BeckTrace:
        """Traza del pipeline de rectas generadas sobre A1 × A2."""
        overrides = dict(params or {})
        if delta is not None:
            overrides["delta"] = delta
        beck = self._validated(BeckParams.from_config, **overrides)
        self._validated(self._check_square, A1, A2)
        return self._computed(
            run_beck_pipeline,
            A1,
            A2,
            beck,
            strict=strict,
            workers=self.threads,
            deadline=self._deadline(),
        )

    @staticmethod
    def _check_square(A1: ElementSet, A2: ElementSet) -> None:
        A1.field.check(A2.field)
        if len(A1) != len(A2) or len(A1) < 2:
            raise ValueError(f"Se requiere |A1| = |A2| >= 2, recibido: {len(A1)} y {len(A2)}")

    def incidence_pipeline(
        self,
        P: PointSet,
        L: LineSet,
        epsilon: Optional[str] = None,
        strict: bool = False,
    ) -> IncidenceTrace:
        """Traza del pipeline de incidencias."""
        params = self._validated(IncidenceParams.from_config, epsilon=epsilon)
        if not (P.is_projective and L.is_projective) or len(P) != len(L) or len(P) < 2:
            raise FacadeValidationError(
                f"Se requieren puntos y rectas proyectivos con |P| = |L| >= 2, recibido: {len(P)} y {len(L)}"
            )
        return self._computed(
            run_incidence_pipeline,
            P,
            L,
            params,
            strict=strict,
            workers=self.threads,
            deadline=self._deadline(),
        )

    def bsg(self, instance: Dict[str, Any], compare: bool = False) -> Dict[str, Any]:
        """
        Extracción BSG sobre una instancia JSON.

        La instancia es {"prime": p, "X": [...], "Y": [...]} más "edges"
        ([[x, y], ...]) o "window" (conjunto de sumas admitidas).
        """

        def _graph() -> PairGraph:
            fld = make_field(instance["prime"])
            X = ElementSet.of(fld, instance["X"])
            Y = ElementSet.of(fld, instance["Y"])
            if "window" in instance:
                return PairGraph.from_sum_window(X, Y, ElementSet.of(fld, instance["window"]))
            return PairGraph(X, Y, frozenset(tuple(e) for e in instance["edges"]))

        G = self._validated(_graph)
        result = self._computed(bsg_extract, G)
        out = _bsg_dict(result)
        if compare:
            comparison = self._computed(compare_with_oracle, G)
            out["oracle"] = _bsg_dict(comparison.optimum)
            out["oracle_ratio"] = str(comparison.ratio)
            out["within_band"] = comparison.within_band
        return out

    def scan(self, config_path: Path, out_dir: Path, threads: Optional[int] = None, seed: Optional[int] = None) -> Dict[str, Any]:
        """
        Ejecuta un barrido y guarda su RunRecord en out_dir.

        Returns:
            {"record": RunRecord, "path": Path}
        """
        config = self._validated(ScanConfig.from_toml, config_path)
        if threads is not None:
            config.threads = threads
        if seed is not None:
            config.seed = seed
        try:
            record: RunRecord = run_scan(config)
        except (TimeoutError, ArithmeticError) as e:
            raise FacadeComputationError(f"Error durante el barrido: {e}") from e
        except ValueError as e:
            raise FacadeValidationError(f"Barrido inválido: {e}") from e
        path = RunRecordStore.save(record, Path(out_dir) / RECORD_FILENAME)
        logger.info("Registro guardado en %s", path)
        return {"record": record, "path": path}


def _bsg_dict(result) -> Dict[str, Any]:
    return to_jsonable(
        {
            "x_prime": list(result.x_prime.elements),
            "y_prime": list(result.y_prime.elements),
            "sumset_size": result.sumset_size,
            "alpha": result.alpha,
            "n": result.n,
            "pivot": result.pivot,
            "score": result.score,
            "size_ratio_x": result.size_ratio_x,
            "size_ratio_y": result.size_ratio_y,
            "sumset_ratio": result.sumset_ratio,
            "meets_size_bound": result.meets_size_bound,
            "meets_sumset_bound": result.meets_sumset_bound,
        }
    )
