"""
Barridos de instancias: extremos de rectas generadas y de incidencias.

Las instancias se enumeran en un orden canónico (combinaciones en orden
lexicográfico o índice de ensayo), cada una con su semilla derivada de la
semilla maestra. Los trabajadores son funciones puras que reciben todos
los parámetros ya resueltos; el resultado no depende del número de
procesos. Los agregados se reducen por (valor, índice de instancia).
"""

import itertools
import logging
import math
import os
import time
try:
    import tomllib  # Python 3.11+ (built-in)
except ModuleNotFoundError:  # Python 3.10: API-identical backport
    import tomli as tomllib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, Iterator, List, Optional, Tuple

import numpy as np

from lica.core.addcomb import ElementSet, sum_product_stats
from lica.core.beck_pipeline import run_beck_pipeline
from lica.core.errors import SizeExceedsFieldError
from lica.core.field import make_field
from lica.core.generators import KINDS, GeneratorSpec, derive_seed, generate_set
from lica.core.geometry import (
    ProjLine,
    ProjPoint,
    projective_lines,
    projective_points,
    projective_triple_from_index,
)
from lica.core.incidence import (
    LineSet,
    PointSet,
    beck_delta_effective,
    count_incidences,
    incidence_ratio,
    spanned_lines,
)
from lica.core.incidence_pipeline import run_incidence_pipeline
from lica.core.models import STATUS_COMPLETE, BeckParams, IncidenceParams
from lica.infrastructure.config import get_config
from lica.infrastructure.file_io import Aggregate, InstanceMetrics, RunRecord

logger = logging.getLogger(__name__)

SCAN_KINDS = ("extremal", "incidence")
EXTREMAL_FAMILIES = ("exhaustive",) + KINDS
INCIDENCE_FAMILIES = ("random", "pencil", "full_plane")

STATUS_OK = "ok"
STATUS_TIMEOUT = "timeout"
STATUS_ERROR = "error"

# Métricas agregadas por tipo de barrido
_AGGREGATED = {
    "extremal": ("line_count", "delta_eff", "theorem_ratio", "sum_product_exponent"),
    "incidence": ("incidences", "incidence_ratio", "epsilon_eff"),
}


@dataclass
class ScanConfig:
    """
    Descripción de un barrido.

    Attributes:
        kind (str): "extremal" o "incidence".
        family (str): Familia de instancias.
        primes (List[int]): Módulos a recorrer.
        sizes (List[int]): Tamaños a recorrer (ignorados por full_plane).
        trials (int): Instancias por (p, n) en familias no exhaustivas.
        generator (Dict[str, Any]): Parámetros extra del generador.
        run_pipeline (bool): Ejecuta el pipeline completo en cada instancia.
        seed (Optional[int]): Semilla maestra; por defecto la de [harness].
        threads (Optional[int]): Procesos; 0 = todos los núcleos.
        instance_budget_s (Optional[float]): Presupuesto por instancia.

    Raises:
        ValueError: Si el tipo o la familia no son válidos.
    """

    kind: str = "extremal"
    family: str = "exhaustive"
    primes: List[int] = field(default_factory=list)
    sizes: List[int] = field(default_factory=list)
    trials: int = 1
    generator: Dict[str, Any] = field(default_factory=dict)
    run_pipeline: bool = False
    seed: Optional[int] = None
    threads: Optional[int] = None
    instance_budget_s: Optional[float] = None

    def __post_init__(self):
        """Valida el tipo de barrido y la familia."""
        if self.kind not in SCAN_KINDS:
            raise ValueError(f"Tipo de barrido desconocido, recibido: {self.kind}")
        families = EXTREMAL_FAMILIES if self.kind == "extremal" else INCIDENCE_FAMILIES
        if self.family not in families:
            raise ValueError(
                f"Familia '{self.family}' no válida para {self.kind}. Opciones: {families}"
            )
        if self.trials < 1:
            raise ValueError(f"trials debe ser >= 1, recibido: {self.trials}")

    @classmethod
    def from_toml(cls, path: Path) -> "ScanConfig":
        """
        Lee la tabla [scan] de un archivo TOML.

        Raises:
            FileNotFoundError: Si el archivo no existe.
            ValueError: Si falta [scan] o tiene claves desconocidas.
        """
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"Descripción de barrido no encontrada: {path}")
        try:
            with open(path, "rb") as f:
                data = tomllib.load(f)
        except tomllib.TOMLDecodeError as e:
            raise ValueError(f"TOML inválido en {path}: {e}") from e
        if "scan" not in data:
            raise ValueError(f"Falta la tabla [scan] en {path}")
        try:
            return cls(**data["scan"])
        except TypeError as e:
            raise ValueError(f"Descripción de barrido inválida en {path}: {e}") from e

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class _Task:
    """Instancia lista para un trabajador (todo resuelto, sin configuración global)."""

    index: int
    kind: str
    family: str
    p: int
    n: int
    seed: int
    budget_s: float
    run_pipeline: bool
    epsilon: str
    beck: Dict[str, str]
    incidence: Dict[str, Any]
    elements: Tuple[int, ...] = ()
    generator: Optional[Dict[str, Any]] = None


def _beck_params(task: _Task) -> BeckParams:
    return BeckParams(**task.beck)


def _incidence_params(task: _Task) -> IncidenceParams:
    values = {k: v for k, v in task.incidence.items() if k != "beck"}
    return IncidenceParams(**values, beck=_beck_params(task))


def _check_deadline(deadline: float, where: str) -> None:
    if time.monotonic() > deadline:
        raise TimeoutError(f"Presupuesto agotado tras {where}")


# ---------------------------------------------------------------------------
# Trabajadores
# ---------------------------------------------------------------------------


def _run_extremal(task: _Task) -> InstanceMetrics:
    deadline = time.monotonic() + task.budget_s
    fld = make_field(task.p)
    if task.generator is not None:
        A = generate_set(GeneratorSpec.from_dict(task.generator))
    else:
        A = ElementSet(fld, task.elements)
    metrics: Dict[str, Any] = {
        "index": task.index,
        "key": f"p={task.p}:" + ",".join(str(v) for v in A),
        "seed": task.seed,
        "p": task.p,
        "n": len(A),
        "elements": list(A.elements),
    }
    points = PointSet.cartesian(A, A)
    multiplicities = spanned_lines(points)
    report = beck_delta_effective(points, multiplicities)
    metrics.update(
        line_count=report.line_count,
        delta_eff=report.delta_eff,
        theorem_ratio=report.theorem_ratio,
    )
    _check_deadline(deadline, "el conteo de rectas")
    stats = sum_product_stats(A)
    metrics.update(
        sum_size=stats.sum_size,
        product_size=stats.product_size,
        sum_product_exponent=stats.exponent,
    )
    _check_deadline(deadline, "las estadísticas suma-producto")
    if task.run_pipeline:
        trace = run_beck_pipeline(A, A, _beck_params(task), deadline=deadline)
        metrics.update(
            case=trace.case,
            verdict=trace.verdict,
            trace_status=trace.status,
            checks_pass=trace.checks_pass,
        )
    return InstanceMetrics(**metrics)


def _pencil(task: _Task) -> Tuple[PointSet, LineSet, int]:
    """
    Todas las rectas por o = [0:0:1] (las n primeras) y P = {o} ∪ (n-1 puntos).

    Cada punto distinto de o está en exactamente una recta por o, de modo
    que I = n + #{q en P \\ {o} sobre una recta elegida}.
    """
    fld = make_field(task.p)
    if task.n > task.p + 1:
        raise SizeExceedsFieldError(
            f"Un haz tiene p+1 = {task.p + 1} rectas, recibido: n = {task.n}"
        )
    origin = ProjPoint((0, 0, 1), fld)
    pencil = [line for line in projective_lines(fld) if line.contains(origin)][: task.n]
    others = [pt for pt in projective_points(fld) if pt != origin]
    rng = np.random.default_rng(task.seed)
    chosen = rng.choice(len(others), size=max(task.n - 1, 0), replace=False)
    extra = [others[int(i)] for i in sorted(chosen)]
    expected = task.n + sum(1 for q in extra if any(line.contains(q) for line in pencil))
    return PointSet(fld, tuple([origin] + extra)), LineSet(fld, tuple(pencil)), expected


def _incidence_instance(task: _Task) -> Tuple[PointSet, LineSet, Optional[int]]:
    fld = make_field(task.p)
    p = task.p
    if task.family == "full_plane":
        points = PointSet(fld, tuple(projective_points(fld)))
        lines = LineSet(fld, tuple(projective_lines(fld)))
        return points, lines, len(points) * (p + 1)
    if task.family == "pencil":
        return _pencil(task)
    total = p * p + p + 1
    if task.n > total:
        raise SizeExceedsFieldError(f"P²(F_{p}) tiene {total} puntos, recibido: n = {task.n}")
    rng = np.random.default_rng(task.seed)
    point_idx = rng.choice(total, size=task.n, replace=False)
    line_idx = rng.choice(total, size=task.n, replace=False)
    points = PointSet(fld, tuple(ProjPoint(projective_triple_from_index(int(i), p), fld) for i in point_idx))
    lines = LineSet(fld, tuple(ProjLine(projective_triple_from_index(int(i), p), fld) for i in line_idx))
    return points, lines, None


def _run_incidence(task: _Task) -> InstanceMetrics:
    deadline = time.monotonic() + task.budget_s
    points, lines, expected = _incidence_instance(task)
    n = len(points)
    total = count_incidences(points, lines)
    metrics: Dict[str, Any] = {
        "index": task.index,
        "key": f"p={task.p}:n={n}:{task.family}:{task.index}",
        "seed": task.seed,
        "p": task.p,
        "n": n,
        "incidences": total,
        "expected_incidences": expected,
        "incidence_ratio": incidence_ratio(total, n, Fraction(task.epsilon)),
        "epsilon_eff": (1.5 - math.log(total) / math.log(n)) if total and n > 1 else None,
    }
    _check_deadline(deadline, "el conteo de incidencias")
    if task.run_pipeline and n >= 2 and len(lines) == n:
        trace = run_incidence_pipeline(points, lines, _incidence_params(task), deadline=deadline)
        metrics.update(trace_status=trace.status, checks_pass=trace.checks_pass)
    return InstanceMetrics(**metrics)


def run_task(task: _Task) -> InstanceMetrics:
    """
    Ejecuta una instancia; timeout y errores de la instancia quedan registrados.

    Cualquier ValueError (incluidos los LicaError) o ArithmeticError del
    generador o de los cálculos marca solo esta instancia como error.
    """
    worker: Callable[[_Task], InstanceMetrics] = (
        _run_extremal if task.kind == "extremal" else _run_incidence
    )
    try:
        return worker(task)
    except TimeoutError as e:
        status, message = STATUS_TIMEOUT, str(e)
    except (ValueError, ArithmeticError) as e:
        status, message = STATUS_ERROR, str(e)
    return InstanceMetrics(
        index=task.index,
        key=f"p={task.p}:n={task.n}:{task.family}:{task.index}",
        seed=task.seed,
        status=status,
        p=task.p,
        n=task.n,
        elements=list(task.elements) or None,
        error=message,
    )


# ---------------------------------------------------------------------------
# Orquestación
# ---------------------------------------------------------------------------


def _tasks(config: ScanConfig, seed: int, budget: float) -> Iterator[_Task]:
    cfg = get_config()
    beck = BeckParams.from_config().to_dict()
    incidence = IncidenceParams.from_config().to_dict()
    common = dict(
        kind=config.kind,
        family=config.family,
        budget_s=budget,
        run_pipeline=config.run_pipeline,
        epsilon=str(cfg.incidence.epsilon),
        beck=beck,
        incidence=incidence,
    )
    index = 0
    for p in config.primes:
        make_field(p)
        sizes = [p * p + p + 1] if config.family == "full_plane" else config.sizes
        for n in sizes:
            if config.family == "exhaustive":
                for combo in itertools.combinations(range(p), n):
                    yield _Task(index=index, p=p, n=n, seed=derive_seed(seed, index), elements=combo, **common)
                    index += 1
                continue
            for _ in range(config.trials):
                sub_seed = derive_seed(seed, index)
                generator = None
                if config.kind == "extremal":
                    generator = GeneratorSpec.from_dict(
                        {"kind": config.family, "size": n, **config.generator}, p=p, seed=sub_seed
                    ).to_dict()
                yield _Task(index=index, p=p, n=n, seed=sub_seed, generator=generator, **common)
                index += 1


def _workers(requested: Optional[int]) -> int:
    threads = requested if requested is not None else get_config().harness.threads
    return threads if threads > 0 else (os.cpu_count() or 1)


def _execute(tasks: List[_Task], workers: int) -> List[InstanceMetrics]:
    if workers <= 1 or len(tasks) <= 1:
        return [run_task(task) for task in tasks]
    chunksize = max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_task, tasks, chunksize=chunksize))


def aggregate(instances: List[InstanceMetrics], metric: str) -> Aggregate:
    """
    Mínimo, máximo y media de una métrica sobre las instancias completadas.

    Los empates se resuelven por el menor índice de instancia.
    """
    values = [
        (float(getattr(item, metric)), item.index, item.key)
        for item in instances
        if item.status == STATUS_OK and getattr(item, metric) is not None
    ]
    if not values:
        return Aggregate(count=0)
    low = min(values, key=lambda v: (v[0], v[1]))
    high = min(values, key=lambda v: (-v[0], v[1]))
    return Aggregate(
        count=len(values),
        min=low[0],
        max=high[0],
        mean=float(np.mean([v[0] for v in values])),
        argmin=low[2],
        argmax=high[2],
    )


def _verdicts(kind: str, instances: List[InstanceMetrics], aggregates: Dict[str, Aggregate]) -> Dict[str, Any]:
    statuses = [item.status for item in instances]
    out: Dict[str, Any] = {
        "instances": len(instances),
        "ok": statuses.count(STATUS_OK),
        "timeouts": statuses.count(STATUS_TIMEOUT),
        "errors": statuses.count(STATUS_ERROR),
    }
    traced = [item for item in instances if item.trace_status is not None]
    if traced:
        out["traces_complete"] = sum(1 for item in traced if item.trace_status == STATUS_COMPLETE)
        out["all_checks_pass"] = all(item.checks_pass for item in traced)
    if kind == "extremal":
        low = aggregates["theorem_ratio"].min
        out["min_theorem_ratio_at_least_one"] = None if low is None else low >= 1
    else:
        high = aggregates["incidence_ratio"].max
        out["max_incidence_ratio_at_most_one"] = None if high is None else high <= 1
        expected = [item for item in instances if item.expected_incidences is not None]
        if expected:
            out["expected_incidences_match"] = all(
                item.incidences == item.expected_incidences for item in expected
            )
    return out


def run_scan(config: ScanConfig) -> RunRecord:
    """
    Ejecuta un barrido y devuelve su RunRecord.

    Los fallos por instancia (timeout, error del dominio) quedan registrados
    con su estado y el barrido continúa.
    """
    cfg = get_config()
    seed = config.seed if config.seed is not None else cfg.harness.seed
    budget = config.instance_budget_s if config.instance_budget_s is not None else cfg.harness.instance_budget_s
    tasks = list(_tasks(config, seed, budget))
    workers = _workers(config.threads)
    logger.info(
        "Barrido %s/%s: %d instancias, %d procesos, semilla %d",
        config.kind, config.family, len(tasks), workers, seed,
    )
    started = time.monotonic()
    instances = _execute(tasks, workers)
    aggregates = {metric: aggregate(instances, metric) for metric in _AGGREGATED[config.kind]}
    verdicts = _verdicts(config.kind, instances, aggregates)
    logger.info("Barrido terminado en %.2f s: %s", time.monotonic() - started, verdicts)
    for metric, summary in aggregates.items():
        logger.info("%s: min=%s (%s), max=%s (%s)", metric, summary.min, summary.argmin, summary.max, summary.argmax)

    scan = config.to_dict()
    scan.update(seed=seed, instance_budget_s=budget)
    scan.pop("threads")
    return RunRecord(
        kind=config.kind,
        timestamp=cfg.harness.generated_at,
        seed=seed,
        config=cfg.echo(),
        scan=scan,
        instances=instances,
        aggregates=aggregates,
        verdicts=verdicts,
    )


def extremal_scan(config: ScanConfig) -> RunRecord:
    """
    Barrido de |L(A×A)| sobre una familia de conjuntos A.

    Examples:
        >>> record = extremal_scan(ScanConfig(primes=[11], sizes=[3], threads=1))
        >>> len(record.instances)
        165
    """
    if config.kind != "extremal":
        raise ValueError(f"Se esperaba un barrido extremal, recibido: {config.kind}")
    return run_scan(config)


def incidence_scan(config: ScanConfig) -> RunRecord:
    """Barrido de I(P, L) sobre familias de P²(F_p)."""
    if config.kind != "incidence":
        raise ValueError(f"Se esperaba un barrido de incidencias, recibido: {config.kind}")
    return run_scan(config)
