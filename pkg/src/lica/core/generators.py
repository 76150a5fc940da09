"""
Familias de instancias: conjuntos de F_p generados de forma determinista.

Cada GeneratorSpec describe una familia (aleatoria, intervalo, progresiones,
subgrupo multiplicativo, unión o lista explícita) y generate_set es una
función pura de la especificación y su semilla. Las semillas de las
instancias de un barrido se derivan de la semilla maestra con derive_seed.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

from lica.core.addcomb import ElementSet
from lica.core.errors import BadSubgroupOrderError, GeneratorError, SizeExceedsFieldError
from lica.core.field import make_field

logger = logging.getLogger(__name__)

KINDS = (
    "random",
    "interval",
    "arithmetic_progression",
    "geometric_progression",
    "multiplicative_subgroup",
    "union",
    "explicit",
)


def derive_seed(master: int, index: int) -> int:
    """
    Semilla de la instancia index: sha256("master:index") truncado a 63 bits.

    Examples:
        >>> derive_seed(0, 1) == derive_seed(0, 1)
        True
        >>> derive_seed(0, 1) != derive_seed(0, 2)
        True
    """
    digest = hashlib.sha256(f"{master}:{index}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def _prime_factors(n: int) -> Tuple[int, ...]:
    factors = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            factors.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        factors.append(n)
    return tuple(factors)


def primitive_root(p: int) -> int:
    """
    Menor raíz primitiva módulo p.

    Examples:
        >>> primitive_root(7)
        3
        >>> primitive_root(1009)
        11
    """
    factors = _prime_factors(p - 1)
    for g in range(2, p):
        if all(pow(g, (p - 1) // q, p) != 1 for q in factors):
            return g
    raise ArithmeticError(f"Sin raíz primitiva módulo {p}")


@dataclass(frozen=True)
class GeneratorSpec:
    """
    Especificación de un conjunto generado.

    Attributes:
        kind (str): Una de KINDS.
        p (int): Módulo primo.
        size (Optional[int]): Número de elementos; opcional para union,
            explicit y multiplicative_subgroup (si se da, debe coincidir).
        seed (int): Semilla (solo la usa random).
        start (int): Primer término de intervalos y progresiones (en la
            geométrica, 0 se toma como 1).
        step (int): Diferencia de la progresión aritmética.
        ratio (int): Razón inicial de la progresión geométrica.
        order (Optional[int]): Orden del subgrupo multiplicativo.
        components (Tuple[GeneratorSpec, ...]): Partes de una unión.
        elements (Tuple[int, ...]): Lista de explicit.

    Raises:
        ValueError: Si kind es desconocido o faltan parámetros.
    """

    kind: str
    p: int
    size: Optional[int] = None
    seed: int = 0
    start: int = 0
    step: int = 1
    ratio: int = 2
    order: Optional[int] = None
    components: Tuple["GeneratorSpec", ...] = field(default_factory=tuple)
    elements: Tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        """Valida el tipo y los parámetros propios de cada familia."""
        if self.kind not in KINDS:
            raise ValueError(f"Familia desconocida, recibido: {self.kind}. Opciones: {KINDS}")
        if self.size is not None and self.size < 0:
            raise ValueError(f"El tamaño no puede ser negativo, recibido: {self.size}")
        needs_size = self.kind in ("random", "interval", "arithmetic_progression", "geometric_progression")
        if needs_size and self.size is None:
            raise ValueError(f"La familia {self.kind} requiere size")
        if self.kind == "multiplicative_subgroup" and self.order is None and self.size is None:
            raise ValueError("multiplicative_subgroup requiere order o size")
        if self.kind == "union" and not self.components:
            raise ValueError("union requiere al menos un componente")
        for part in self.components:
            if part.p != self.p:
                raise ValueError(
                    f"Los componentes deben usar el mismo módulo, recibido: {part.p} y {self.p}"
                )

    @classmethod
    def from_dict(cls, data: Dict[str, Any], p: Optional[int] = None, seed: Optional[int] = None) -> "GeneratorSpec":
        """
        Construye la especificación desde un diccionario (JSON o TOML).

        p y seed, si se dan, completan los valores ausentes del diccionario.
        """
        values = dict(data)
        if p is not None:
            values.setdefault("p", p)
        if seed is not None:
            values.setdefault("seed", seed)
        if "p" not in values:
            raise ValueError("La especificación del generador requiere el módulo p")
        values["components"] = tuple(
            cls.from_dict(part, p=values["p"], seed=values.get("seed"))
            for part in values.get("components", ())
        )
        values["elements"] = tuple(int(v) for v in values.get("elements", ()))
        return cls(**values)

    def to_dict(self) -> Dict[str, Any]:
        out = {name: getattr(self, name) for name in self.__dataclass_fields__}
        out["components"] = [part.to_dict() for part in self.components]
        out["elements"] = list(self.elements)
        return out


def _check_size(spec: GeneratorSpec, produced: ElementSet) -> ElementSet:
    if spec.size is not None and len(produced) != spec.size:
        raise GeneratorError(
            f"La familia {spec.kind} produjo {len(produced)} elementos distintos, se pidieron {spec.size}"
        )
    return produced


def _geometric(spec: GeneratorSpec, fld) -> ElementSet:
    p = spec.p
    n = spec.size
    if n > p - 1:
        raise SizeExceedsFieldError(
            f"Una progresión geométrica tiene a lo sumo p-1 = {p - 1} elementos, recibido: {n}"
        )
    start = spec.start % p or 1
    ratio = spec.ratio % p
    for _ in range(p):
        if ratio not in (0, 1) or n <= 1:
            terms = {start * pow(ratio, i, p) % p for i in range(n)}
            if len(terms) == n:
                if ratio != spec.ratio % p:
                    logger.debug("Razón %d colisiona; se usa %d", spec.ratio, ratio)
                return ElementSet(fld, tuple(terms))
        ratio = (ratio + 1) % p
    raise GeneratorError(f"Ninguna razón módulo {p} genera {n} términos distintos")


def _subgroup(spec: GeneratorSpec, fld) -> ElementSet:
    p = spec.p
    order = spec.order if spec.order is not None else spec.size
    if order < 1 or (p - 1) % order:
        raise BadSubgroupOrderError(f"El orden {order} no divide a p-1 = {p - 1}")
    h = pow(primitive_root(p), (p - 1) // order, p)
    return ElementSet(fld, tuple(pow(h, i, p) for i in range(order)))


def generate_set(spec: GeneratorSpec) -> ElementSet:
    """
    Genera el conjunto descrito por spec.

    Returns:
        ElementSet con exactamente size elementos distintos.

    Raises:
        SizeExceedsFieldError: Si size > p.
        BadSubgroupOrderError: Si el orden del subgrupo no divide a p-1.
        GeneratorError: Si union o explicit no tienen el tamaño pedido, si la
            diferencia de la progresión es nula o si ninguna razón sirve.

    Examples:
        >>> generate_set(GeneratorSpec("interval", p=101, size=5)).elements
        (0, 1, 2, 3, 4)
        >>> generate_set(GeneratorSpec("multiplicative_subgroup", p=7, order=3)).elements
        (1, 2, 4)
    """
    fld = make_field(spec.p)
    p = spec.p
    if spec.size is not None and spec.size > p:
        raise SizeExceedsFieldError(f"Se piden {spec.size} elementos distintos en F_{p}")

    if spec.kind == "random":
        rng = np.random.default_rng(spec.seed)
        values = rng.choice(p, size=spec.size, replace=False)
        return ElementSet.from_array(fld, values)
    if spec.kind == "interval":
        return ElementSet(fld, tuple(spec.start + i for i in range(spec.size)))
    if spec.kind == "arithmetic_progression":
        if spec.step % p == 0 and spec.size > 1:
            raise GeneratorError(f"La diferencia debe ser no nula módulo {p}, recibido: {spec.step}")
        return ElementSet(fld, tuple(spec.start + i * spec.step for i in range(spec.size)))
    if spec.kind == "geometric_progression":
        return _geometric(spec, fld)
    if spec.kind == "multiplicative_subgroup":
        return _check_size(spec, _subgroup(spec, fld))
    if spec.kind == "union":
        produced = ElementSet(fld, ())
        for part in spec.components:
            produced = produced | generate_set(part)
        return _check_size(spec, produced)
    return _check_size(spec, ElementSet(fld, spec.elements))
