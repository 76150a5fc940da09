"""
Combinatoria aditiva en F_p.

Sumas, productos, dilataciones, energías, conjuntos de cocientes y los tres
lemas de combinatoria aritmética que usa el pipeline de rectas generadas:
Plünnecke-Ruzsa (con "conjunto auxiliar"), la desigualdad triangular de
Ruzsa y el lema de cubrimiento por trasladados.

Las operaciones de conjuntos usan productos externos de numpy reducidos
módulo p; con p < 2^31 todos los productos caben en int64. Las búsquedas
exhaustivas (testigos de Plünnecke, cubrimiento) representan subconjuntos
como máscaras de bits sobre enteros de Python, indexadas por los residuos
que aparecen en los trasladados (translate_masks).
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from lica.core.errors import (
    SearchTooLargeError,
    TooSmallError,
    ZeroDilateError,
    ZeroElementError,
)
from lica.core.field import FieldElement, PrimeField, inverse_mod
from lica.infrastructure.config import as_fraction, get_config

logger = logging.getLogger(__name__)

Scalar = Union[int, FieldElement]


@dataclass(frozen=True)
class ElementSet:
    """
    Conjunto de residuos de F_p, sin duplicados y ordenado.

    Attributes:
        field (PrimeField): Cuerpo de los elementos.
        elements (Tuple[int, ...]): Residuos en [0, p), en orden creciente.

    Examples:
        >>> F = PrimeField(7)
        >>> ElementSet.of(F, [9, 2, 1]).elements
        (1, 2)
    """

    field: PrimeField
    elements: Tuple[int, ...] = ()

    def __post_init__(self):
        """Reduce módulo p, elimina duplicados y ordena."""
        p = self.field.p
        normalized = tuple(sorted({int(v) % p for v in self.elements}))
        object.__setattr__(self, "elements", normalized)

    @classmethod
    def of(cls, fld: PrimeField, values: Iterable[Scalar]) -> "ElementSet":
        """Construye el conjunto a partir de enteros o FieldElements."""
        return cls(fld, tuple(_scalar(fld, v) for v in values))

    @classmethod
    def from_array(cls, fld: PrimeField, values: np.ndarray) -> "ElementSet":
        return cls(fld, tuple(int(v) for v in np.unique(values)))

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, value) -> bool:
        return int(value) % self.field.p in self._lookup

    def __and__(self, other: "ElementSet") -> "ElementSet":
        self.field.check(other.field)
        return ElementSet(self.field, tuple(set(self.elements) & set(other.elements)))

    def __or__(self, other: "ElementSet") -> "ElementSet":
        self.field.check(other.field)
        return ElementSet(self.field, self.elements + other.elements)

    def __sub__(self, other: "ElementSet") -> "ElementSet":
        self.field.check(other.field)
        return ElementSet(self.field, tuple(set(self.elements) - set(other.elements)))

    @cached_property
    def _lookup(self) -> frozenset:
        return frozenset(self.elements)

    @property
    def p(self) -> int:
        return self.field.p

    def issubset(self, other: "ElementSet") -> bool:
        self.field.check(other.field)
        return set(self.elements) <= set(other.elements)

    def array(self) -> np.ndarray:
        return np.asarray(self.elements, dtype=np.int64)

    def members(self) -> List[FieldElement]:
        return [FieldElement(v, self.field) for v in self.elements]


def _scalar(fld: PrimeField, value: Scalar) -> int:
    if isinstance(value, FieldElement):
        fld.check(value.field)
        return value.value
    return int(value) % fld.p


def _same_field(*sets: ElementSet) -> PrimeField:
    fld = sets[0].field
    for s in sets[1:]:
        fld.check(s.field)
    return fld


def translate_masks(
    base: Sequence[int], shifts: Sequence[int], p: int, within: Optional[frozenset] = None
) -> Tuple[List[int], List[int]]:
    """
    Máscaras de bits de los trasladados s + base sobre un universo compacto.

    El bit i representa el i-ésimo residuo distinto encontrado, de modo que
    el tamaño de las máscaras no depende de p. Con within se descartan los
    residuos fuera de ese conjunto.

    Returns:
        (máscaras en el orden de shifts, residuo de cada bit)
    """
    position: Dict[int, int] = {}
    masks = []
    for s in shifts:
        m = 0
        for v in base:
            r = (s + v) % p
            if within is not None and r not in within:
                continue
            m |= 1 << position.setdefault(r, len(position))
        masks.append(m)
    residues = [0] * len(position)
    for r, i in position.items():
        residues[i] = r
    return masks, residues


def _outer(a: ElementSet, b: ElementSet, op) -> np.ndarray:
    fld = _same_field(a, b)
    if not len(a) or not len(b):
        return np.empty(0, dtype=np.int64)
    return op.outer(a.array(), b.array()) % fld.p


# ---------------------------------------------------------------------------
# Operaciones de conjuntos
# ---------------------------------------------------------------------------


def sumset(A: ElementSet, B: ElementSet) -> ElementSet:
    """
    A + B = {a + b}.

    Examples:
        >>> F = PrimeField(7)
        >>> sumset(ElementSet.of(F, [1, 2]), ElementSet.of(F, [1, 2])).elements
        (2, 3, 4)
    """
    return ElementSet.from_array(A.field, _outer(A, B, np.add))


def difference_set(A: ElementSet, B: ElementSet) -> ElementSet:
    """A - B = {a - b}."""
    return ElementSet.from_array(A.field, _outer(A, B, np.subtract))


def product_set(A: ElementSet, B: ElementSet) -> ElementSet:
    """A·B = {a·b}."""
    return ElementSet.from_array(A.field, _outer(A, B, np.multiply))


def iterated_sumset(sets: Sequence[ElementSet]) -> ElementSet:
    """X1 + X2 + ... + Xk."""
    if not sets:
        raise ValueError("Se requiere al menos un conjunto")
    total = sets[0]
    for s in sets[1:]:
        total = sumset(total, s)
    return total


def dilate(b: Scalar, A: ElementSet) -> ElementSet:
    """
    b·A = {b·a}.

    Raises:
        ZeroDilateError: Si b = 0.
    """
    factor = _scalar(A.field, b)
    if factor == 0:
        raise ZeroDilateError("No se puede dilatar por el factor 0")
    return ElementSet(A.field, tuple(factor * v for v in A.elements))


def translate(t: Scalar, A: ElementSet) -> ElementSet:
    """t + A."""
    shift = _scalar(A.field, t)
    return ElementSet(A.field, tuple(shift + v for v in A.elements))


def negate(A: ElementSet) -> ElementSet:
    """-A."""
    return ElementSet(A.field, tuple(-v for v in A.elements))


def invert_elements(A: ElementSet) -> ElementSet:
    """
    A^{-1} = {1/a}.

    Raises:
        ZeroElementError: Si 0 ∈ A.
    """
    if 0 in A:
        raise ZeroElementError("El conjunto contiene 0 y no se puede invertir")
    return ElementSet(A.field, tuple(inverse_mod(v, A.p) for v in A.elements))


# ---------------------------------------------------------------------------
# Representaciones y energía
# ---------------------------------------------------------------------------


def representation_count(A: ElementSet, B: ElementSet) -> Dict[int, int]:
    """
    Función de representación r(s) = #{(a, b) ∈ A×B : a + b = s}.

    Usa un arreglo denso indexado por residuo cuando p no supera el umbral
    configurado y conteo por valores únicos en otro caso.

    Returns:
        Diccionario s -> r(s) con s en orden creciente (solo r(s) > 0).
    """
    sums = _outer(A, B, np.add).ravel()
    if sums.size == 0:
        return {}
    if A.p <= get_config().addcomb.dense_threshold:
        counts = np.bincount(sums, minlength=A.p)
        support = np.flatnonzero(counts)
        return {int(s): int(counts[s]) for s in support}
    values, counts = np.unique(sums, return_counts=True)
    return {int(s): int(c) for s, c in zip(values, counts)}


def additive_energy(A: ElementSet, B: Optional[ElementSet] = None) -> int:
    """
    Energía aditiva E(A, B) = Σ_s r(s)², con B = A por defecto.

    Examples:
        >>> additive_energy(ElementSet.of(PrimeField(31), [0, 1, 2]))
        19
    """
    B = A if B is None else B
    return sum(c * c for c in representation_count(A, B).values())


def additive_energy_bruteforce(A: ElementSet) -> int:
    """Cuenta directamente las cuádruplas con a1 + a2 = a3 + a4."""
    p = A.p
    return sum(
        1
        for a1, a2, a3, a4 in itertools.product(A.elements, repeat=4)
        if (a1 + a2 - a3 - a4) % p == 0
    )


def ratio_set(Y1: ElementSet) -> ElementSet:
    """
    R = {(a - b)/(c - d) : a, b, c, d ∈ Y1, c != d}.

    Raises:
        TooSmallError: Si |Y1| < 2.

    Examples:
        >>> sorted(ratio_set(ElementSet.of(PrimeField(101), [0, 1])))
        [0, 1, 100]
    """
    if len(Y1) < 2:
        raise TooSmallError(f"El conjunto de cocientes requiere |Y1| >= 2, recibido: {len(Y1)}")
    D = difference_set(Y1, Y1)
    nonzero = D - ElementSet(Y1.field, (0,))
    return product_set(D, invert_elements(nonzero))


@dataclass(frozen=True)
class SumProductStats:
    """Estadísticas suma-producto de un conjunto."""

    size: int
    sum_size: int
    product_size: int
    max_size: int
    exponent: float


def sum_product_stats(A: ElementSet) -> SumProductStats:
    """
    |A+A|, |A·A|, su máximo y el exponente log_|A| max.

    Raises:
        TooSmallError: Si |A| < 2.
    """
    if len(A) < 2:
        raise TooSmallError(f"Se requiere |A| >= 2, recibido: {len(A)}")
    sum_size = len(sumset(A, A))
    product_size = len(product_set(A, A))
    max_size = max(sum_size, product_size)
    return SumProductStats(
        size=len(A),
        sum_size=sum_size,
        product_size=product_size,
        max_size=max_size,
        exponent=math.log(max_size) / math.log(len(A)),
    )


# ---------------------------------------------------------------------------
# Plünnecke-Ruzsa y Ruzsa
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlunneckeReport:
    """
    Comprobación |X1+...+Xk| <= Π|Y+Xi| / |Y|^{k-1}.

    Attributes:
        left (int): |X1 + ... + Xk|.
        right (Fraction): Cota con el conjunto auxiliar Y.
        holds (bool): left <= right.
    """

    left: int
    right: Fraction
    holds: bool
    dummy_sumsets: Tuple[int, ...]

    @property
    def ratio(self) -> float:
        return float(self.left / self.right)


def plunnecke_bound(Y: ElementSet, Xs: Sequence[ElementSet]) -> Fraction:
    """Π|Y + Xi| / |Y|^{k-1}."""
    bound = Fraction(1)
    for X in Xs:
        bound *= len(sumset(Y, X))
    return bound / Fraction(len(Y)) ** (len(Xs) - 1)


def plunnecke_check(Y: ElementSet, Xs: Sequence[ElementSet]) -> PlunneckeReport:
    """
    Evalúa la desigualdad de Plünnecke-Ruzsa con el conjunto auxiliar Y.

    Raises:
        ValueError: Si Y es vacío o no hay conjuntos Xi.

    Examples:
        >>> F = PrimeField(101)
        >>> X = ElementSet.of(F, range(5))
        >>> r = plunnecke_check(X, [X, X])
        >>> r.left, r.right
        (9, Fraction(81, 5))
    """
    if not len(Y):
        raise ValueError("El conjunto auxiliar Y no puede ser vacío")
    if not Xs:
        raise ValueError("Se requiere k >= 1 conjuntos Xi")
    _same_field(Y, *Xs)
    left = len(iterated_sumset(Xs))
    right = plunnecke_bound(Y, Xs)
    return PlunneckeReport(
        left=left,
        right=right,
        holds=left <= right,
        dummy_sumsets=tuple(len(sumset(Y, X)) for X in Xs),
    )


@dataclass(frozen=True)
class PlunneckeWitness:
    """
    Subconjunto Y' ⊆ Y con |Y'+X1+...+Xk| <= (Π|Y+Xi| / |Y|^{k-1})·|Y'|.

    Attributes:
        subset (ElementSet): Y', no vacío.
        left (int): |Y' + X1 + ... + Xk|.
        right (Fraction): (Π|Y+Xi| / |Y|^{k-1})·|Y'|.
    """

    subset: ElementSet
    left: int
    right: Fraction

    @property
    def holds(self) -> bool:
        return self.left <= self.right

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.left, len(self.subset))


def plunnecke_witness_search(Y: ElementSet, Xs: Sequence[ElementSet]) -> PlunneckeWitness:
    """
    Busca exhaustivamente el Y' ⊆ Y no vacío que minimiza |Y'+X1+...+Xk|/|Y'|.

    Los empates se resuelven a favor del Y' más grande y, a igual tamaño,
    del menor en orden lexicográfico.

    Raises:
        SearchTooLargeError: Si |Y| excede el máximo configurado (12).
    """
    limit = get_config().addcomb.witness_max_size
    if len(Y) > limit:
        raise SearchTooLargeError(
            f"La búsqueda de testigos admite |Y| <= {limit}, recibido: {len(Y)}"
        )
    if not len(Y):
        raise ValueError("El conjunto Y no puede ser vacío")
    if not Xs:
        raise ValueError("Se requiere k >= 1 conjuntos Xi")
    _same_field(Y, *Xs)

    shifts, _ = translate_masks(iterated_sumset(Xs).elements, Y.elements, Y.p)
    m = len(Y)

    unions = [0] * (1 << m)
    best_key = None
    best_mask = 0
    for subset in range(1, 1 << m):
        low = subset & -subset
        unions[subset] = unions[subset ^ low] | shifts[low.bit_length() - 1]
        size = subset.bit_count()
        members = tuple(Y.elements[i] for i in range(m) if subset >> i & 1)
        key = (Fraction(unions[subset].bit_count(), size), -size, members)
        if best_key is None or key < best_key:
            best_key, best_mask = key, subset

    chosen = ElementSet(Y.field, best_key[2])
    left = unions[best_mask].bit_count()
    right = plunnecke_bound(Y, Xs) * len(chosen)
    logger.debug("Testigo de Plünnecke: |Y'|=%d, izquierda=%d, derecha=%s", len(chosen), left, right)
    return PlunneckeWitness(subset=chosen, left=left, right=right)


@dataclass(frozen=True)
class RuzsaReport:
    """Cardinales de la desigualdad |X1-X2|·|X3| <= |X1-X3|·|X3-X2|."""

    d12: int
    d13: int
    d32: int
    size3: int
    holds: bool


def ruzsa_triangle_check(X1: ElementSet, X2: ElementSet, X3: ElementSet) -> RuzsaReport:
    """
    Evalúa la desigualdad triangular de Ruzsa.

    Raises:
        ValueError: Si X3 es vacío.
    """
    if not len(X3):
        raise ValueError("El conjunto X3 no puede ser vacío")
    _same_field(X1, X2, X3)
    d12 = len(difference_set(X1, X2))
    d13 = len(difference_set(X1, X3))
    d32 = len(difference_set(X3, X2))
    return RuzsaReport(
        d12=d12, d13=d13, d32=d32, size3=len(X3), holds=d12 * len(X3) <= d13 * d32
    )


# ---------------------------------------------------------------------------
# Lema de cubrimiento
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoveringResult:
    """
    Trasladados de X2 que cubren al menos (1 - ε)|X1| elementos de X1.

    Attributes:
        offsets (Tuple[int, ...]): Desplazamientos t en orden de selección.
        covered (int): Elementos de X1 cubiertos.
        covered_fraction (Fraction): covered / |X1|.
        bound_ratio (Fraction): #trasladados·|X2| / min(|X1+X2|, |X1-X2|).
        assignment (Dict[int, int]): Elemento cubierto -> índice del primer
            trasladado que lo cubre.
    """

    offsets: Tuple[int, ...]
    covered: int
    covered_fraction: Fraction
    bound_ratio: Fraction
    assignment: Dict[int, int]

    @property
    def count(self) -> int:
        return len(self.offsets)


def covering_translates(
    X1: ElementSet, X2: ElementSet, epsilon: Union[float, Fraction, str]
) -> CoveringResult:
    """
    Cubrimiento voraz de X1 por trasladados t + X2 con t ∈ X1 - X2.

    En cada paso elige el desplazamiento que cubre más elementos aún no
    cubiertos (empates: el menor t) hasta cubrir (1 - ε)|X1|.

    Raises:
        ValueError: Si ε no está en (0, 1) o X2 es vacío.

    Examples:
        >>> F = PrimeField(101)
        >>> covering_translates(ElementSet.of(F, range(10)), ElementSet.of(F, range(5)), 0.01).offsets
        (0, 5)
    """
    eps = as_fraction(epsilon)
    if not 0 < eps < 1:
        raise ValueError(f"ε debe estar en (0, 1), recibido: {epsilon}")
    if not len(X2):
        raise ValueError("El conjunto X2 no puede ser vacío")
    _same_field(X1, X2)

    candidates = difference_set(X1, X2).elements
    masks, residues = translate_masks(X2.elements, candidates, X1.p, within=X1._lookup)
    coverage = dict(zip(candidates, masks))

    needed = math.ceil((1 - eps) * len(X1))
    uncovered = (1 << len(residues)) - 1
    offsets: List[int] = []
    assignment: Dict[int, int] = {}
    covered = 0
    while covered < needed:
        best_t, best_gain = None, 0
        for t in candidates:
            gain = (coverage[t] & uncovered).bit_count()
            if gain > best_gain:
                best_t, best_gain = t, gain
        if best_t is None:
            break
        newly = coverage[best_t] & uncovered
        for i, v in enumerate(residues):
            if newly >> i & 1:
                assignment[v] = len(offsets)
        offsets.append(best_t)
        uncovered &= ~newly
        covered += best_gain

    denominator = min(len(sumset(X1, X2)), len(difference_set(X1, X2)))
    bound_ratio = Fraction(len(offsets) * len(X2), denominator) if denominator else Fraction(0)
    fraction = Fraction(covered, len(X1)) if len(X1) else Fraction(1)
    logger.debug(
        "Cubrimiento: %d trasladados, fracción %s, razón de cota %.4f",
        len(offsets), fraction, float(bound_ratio),
    )
    return CoveringResult(
        offsets=tuple(offsets),
        covered=covered,
        covered_fraction=fraction,
        bound_ratio=bound_ratio,
        assignment=assignment,
    )
