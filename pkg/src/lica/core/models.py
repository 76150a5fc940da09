"""
Modelos de datos de los pipelines.

BeckParams e IncidenceParams fijan exponentes y constantes (validados al
construirse); StageRecord y las trazas guardan, etapa por etapa, lo medido,
lo predicho y las comprobaciones exactas.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Union

from lica.infrastructure.config import as_fraction, get_config

Number = Union[int, float, Fraction]

# Estados de una traza
STATUS_COMPLETE = "complete"
STATUS_TRUNCATED = "truncated"


@dataclass
class BeckParams:
    """
    Parámetros del pipeline de rectas generadas.

    Attributes:
        delta (Fraction): Exponente δ de la hipótesis |L(P)| ≈ n^{2+2δ}.
        c_rich (Fraction): Constante del umbral de rectas ricas c·n^{1-δ}.
        c_pop (Fraction): Fracción de la media exigida en los pasos de popularidad.
        c_bsg (Fraction): Cota inferior de tamaños del extractor BSG.
        C_bsg (Fraction): Cota superior de sumas del extractor BSG.
        epsilon_cover (Fraction): Fracción no cubierta admitida (0.01 = 99%).

    Raises:
        ValueError: Si δ no está en (0, 1), alguna constante no es positiva
            o ε de cobertura no está en (0, 1/2).
    """

    delta: Number = Fraction(1, 267)
    c_rich: Number = 1
    c_pop: Number = 1
    c_bsg: Number = Fraction(1, 16)
    C_bsg: Number = 1024
    epsilon_cover: Number = Fraction(1, 100)

    def __post_init__(self):
        """Normaliza a Fraction y valida rangos."""
        for name in ("delta", "c_rich", "c_pop", "c_bsg", "C_bsg", "epsilon_cover"):
            setattr(self, name, as_fraction(getattr(self, name)))
        if not 0 < self.delta < 1:
            raise ValueError(f"δ debe estar en (0, 1), recibido: {self.delta}")
        for name in ("c_rich", "c_pop", "c_bsg", "C_bsg"):
            if getattr(self, name) <= 0:
                raise ValueError(
                    f"La constante {name} debe ser positiva, recibido: {getattr(self, name)}"
                )
        # Y1' se toma entre los elementos cubiertos: la cobertura debe superar el 50%
        if not 0 < self.epsilon_cover < Fraction(1, 2):
            raise ValueError(
                f"ε de cobertura debe estar en (0, 1/2), recibido: {self.epsilon_cover}"
            )

    @classmethod
    def from_config(cls, **overrides) -> "BeckParams":
        """Construye los parámetros desde [beck] y [bsg], con sobrescrituras opcionales."""
        cfg = get_config()
        values = {
            "delta": cfg.beck.delta,
            "c_rich": cfg.beck.c_rich,
            "c_pop": cfg.beck.c_pop,
            "c_bsg": cfg.bsg.c_bsg,
            "C_bsg": cfg.bsg.C_bsg,
            "epsilon_cover": cfg.beck.epsilon_cover,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def to_dict(self) -> Dict[str, str]:
        return {name: str(value) for name, value in vars(self).items()}


@dataclass
class IncidenceParams:
    """
    Parámetros del pipeline de incidencias.

    Attributes:
        epsilon (Fraction): Exponente ε de la hipótesis I(P, L) ≈ n^{3/2-ε}.
        c_erase (Fraction): Se borran los puntos con grado > c_erase·n^{1/2+ε}.
        c_pop (Fraction): Popularidad de puntos y rectas: grado >= c_pop·n^{1/2-ε}.
        refine_depth (int): Rondas (rectas populares, puntos populares).
        handoff_max_points (int): |A||B| máximo para contar las rectas de la rejilla.
        beck_handoff (bool): Ejecuta el pipeline de Beck sobre una rejilla cuadrada.
        beck (Optional[BeckParams]): Parámetros del pipeline de Beck.
    """

    epsilon: Number = Fraction(1, 10678)
    c_erase: Number = 2
    c_pop: Number = 1
    refine_depth: int = 1
    handoff_max_points: int = 2500
    beck_handoff: bool = False
    beck: Optional[BeckParams] = None

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

    @classmethod
    def from_config(cls, **overrides) -> "IncidenceParams":
        """Construye los parámetros desde [incidence]."""
        cfg = get_config().incidence
        values = {
            "epsilon": cfg.epsilon,
            "c_erase": cfg.c_erase,
            "c_pop": cfg.c_pop,
            "refine_depth": cfg.refine_depth,
            "handoff_max_points": cfg.handoff_max_points,
            "beck_handoff": cfg.beck_handoff,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def to_dict(self) -> Dict[str, Any]:
        out = {
            name: (str(value) if isinstance(value, Fraction) else value)
            for name, value in vars(self).items()
            if name != "beck"
        }
        if self.beck is not None:
            out["beck"] = self.beck.to_dict()
        return out


@dataclass
class StageRecord:
    """
    Registro de una etapa de un pipeline.

    Attributes:
        name (str): Nombre de la etapa.
        estimate (str): Identificador de la cota que se reproduce.
        measured (Optional[Number]): Cantidad medida.
        predicted (Optional[float]): Valor que predice la cota (sin constantes).
        ratio (Optional[float]): measured / predicted.
        payload_sizes (Dict[str, int]): Cardinales de los conjuntos de la etapa.
        checks (Dict[str, bool]): Comprobaciones exactas (un False es un error).
        details (Dict[str, Any]): Valores auxiliares (elecciones de argmax, etc.).
    """

    name: str
    estimate: str
    measured: Optional[Number] = None
    predicted: Optional[float] = None
    ratio: Optional[float] = None
    payload_sizes: Dict[str, int] = field(default_factory=dict)
    checks: Dict[str, bool] = field(default_factory=dict)
    details: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        """Calcula la razón si falta y hay predicción positiva."""
        if self.ratio is None and self.measured is not None and self.predicted:
            self.ratio = float(self.measured) / self.predicted

    @property
    def failed_checks(self) -> List[str]:
        return [name for name, ok in self.checks.items() if not ok]


@dataclass
class Trace:
    """Secuencia ordenada de etapas con su estado final."""

    kind: str
    n: int
    p: int
    stages: List[StageRecord] = field(default_factory=list)
    status: str = STATUS_COMPLETE
    empty_stage: Optional[str] = None

    def add(self, record: StageRecord) -> StageRecord:
        self.stages.append(record)
        return record

    def stage(self, name: str) -> StageRecord:
        """Devuelve la etapa con ese nombre; KeyError si no se ejecutó."""
        for record in self.stages:
            if record.name == name:
                return record
        raise KeyError(f"Etapa no registrada: {name}")

    def truncate(self, stage: str) -> None:
        self.status = STATUS_TRUNCATED
        self.empty_stage = stage

    @property
    def stage_names(self) -> List[str]:
        return [record.name for record in self.stages]

    @property
    def failed_checks(self) -> Dict[str, List[str]]:
        return {r.name: r.failed_checks for r in self.stages if r.failed_checks}

    @property
    def checks_pass(self) -> bool:
        return not self.failed_checks


@dataclass(kw_only=True)
class BeckTrace(Trace):
    """
    Traza del pipeline de rectas generadas.

    Attributes:
        delta (Fraction): δ de los parámetros.
        delta_eff (Optional[float]): (ln|L(P)|/ln n - 2)/2 medido.
        verdict (Optional[bool]): 267·δ_eff >= 1.
        case (Optional[str]): "I" o "II" si se llegó a la disyuntiva.
        in_range (bool): n < √p.
    """

    kind: str = "beck"
    delta: Fraction = Fraction(1, 267)
    delta_eff: Optional[float] = None
    verdict: Optional[bool] = None
    case: Optional[str] = None
    in_range: bool = True


@dataclass(kw_only=True)
class IncidenceTrace(Trace):
    """
    Traza del pipeline de incidencias.

    Attributes:
        epsilon (Fraction): ε de los parámetros.
        incidences (Optional[int]): I(P, L) de la entrada.
        epsilon_eff (Optional[float]): 3/2 - ln I / ln n.
        at_infinity (int): Puntos de P3 que la transformación lleva al infinito.
        grid (Optional[Dict[str, List[int]]]): Rejilla {"A": [...], "B": [...]}.
        beck_trace (Optional[BeckTrace]): Traza del traspaso a Beck, si se ejecutó.
        in_range (bool): n < √p.
    """

    kind: str = "incidence"
    epsilon: Fraction = Fraction(1, 10678)
    incidences: Optional[int] = None
    epsilon_eff: Optional[float] = None
    at_infinity: int = 0
    grid: Optional[Dict[str, List[int]]] = None
    beck_trace: Optional[BeckTrace] = None
    in_range: bool = True
