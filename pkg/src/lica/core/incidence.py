"""
Rectas generadas, incidencias, rectas ricas y ternas colineales.

Son los observables cuantitativos de los dos teoremas: |L(P)| para un
producto cartesiano P = A×A y el número de incidencias I(P, L) entre
puntos y rectas de P²(F_p).
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from collections.abc import Mapping
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from lica.core.addcomb import ElementSet
from lica.core.errors import NotCartesianError, TooFewPointsError
from lica.core.field import PrimeField, inverse_mod
from lica.core.geometry import (
    AffinePoint,
    Line,
    ProjLine,
    ProjPoint,
    Triple,
    affine_line_key,
    canonical_triple,
    cross,
    dot,
)

logger = logging.getLogger(__name__)

Point = Union[AffinePoint, ProjPoint]
AnyLine = Union[Line, ProjLine]

THEOREM_EXPONENT = 1 + Fraction(1, 267)


def _uniform_kind(items: Sequence, kinds: Tuple[type, type], label: str) -> Optional[type]:
    found = {type(item) for item in items}
    if len(found) > 1:
        raise ValueError(f"No se pueden mezclar {label} afines y proyectivos")
    kind = found.pop() if found else None
    if kind is not None and kind not in kinds:
        raise TypeError(f"Tipo de {label} no admitido: {kind.__name__}")
    return kind


@dataclass(frozen=True)
class PointSet:
    """
    Conjunto de puntos (todos afines o todos proyectivos) sin duplicados y ordenado.

    Attributes:
        field (PrimeField): Cuerpo común.
        points (Tuple[Point, ...]): Puntos en orden canónico.
    """

    field: PrimeField
    points: Tuple[Point, ...] = ()

    def __post_init__(self):
        """Valida el módulo, elimina duplicados y ordena."""
        points = tuple(self.points)
        _uniform_kind(points, (AffinePoint, ProjPoint), "puntos")
        for pt in points:
            self.field.check(pt.field)
        object.__setattr__(self, "points", tuple(sorted(set(points))))

    @classmethod
    def cartesian(cls, A1: ElementSet, A2: ElementSet) -> "PointSet":
        """Rejilla A1 × A2 de puntos afines."""
        A1.field.check(A2.field)
        fld = A1.field
        return cls(fld, tuple(AffinePoint.of(fld, x, y) for x in A1 for y in A2))

    @classmethod
    def affine(cls, fld: PrimeField, coords: Iterable[Sequence[int]]) -> "PointSet":
        return cls(fld, tuple(AffinePoint.of(fld, x, y) for x, y in coords))

    @classmethod
    def projective(cls, fld: PrimeField, coords: Iterable[Sequence[int]]) -> "PointSet":
        return cls(fld, tuple(ProjPoint(tuple(c), fld) for c in coords))

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[Point]:
        return iter(self.points)

    def __contains__(self, pt) -> bool:
        return pt in set(self.points)

    @property
    def is_projective(self) -> bool:
        return bool(self.points) and isinstance(self.points[0], ProjPoint)

    def homogeneous(self) -> List[Triple]:
        return [pt.homogeneous() for pt in self.points]

    def grid_factors(self) -> Optional[Tuple[ElementSet, ElementSet]]:
        """Devuelve (A1, A2) si el conjunto es exactamente A1 × A2; None en otro caso."""
        if self.is_projective or not self.points:
            return None
        coords = {pt.coords for pt in self.points}
        A1 = ElementSet(self.field, tuple(x for x, _ in coords))
        A2 = ElementSet(self.field, tuple(y for _, y in coords))
        if len(A1) * len(A2) != len(coords):
            return None
        return A1, A2


@dataclass(frozen=True)
class LineSet:
    """Conjunto de rectas canónicas (todas afines o todas proyectivas) ordenado."""

    field: PrimeField
    lines: Tuple[AnyLine, ...] = ()

    def __post_init__(self):
        """Valida el módulo, elimina duplicados y ordena."""
        lines = tuple(self.lines)
        _uniform_kind(lines, (Line, ProjLine), "rectas")
        for line in lines:
            self.field.check(line.field)
        object.__setattr__(self, "lines", tuple(sorted(set(lines))))

    @classmethod
    def projective(cls, fld: PrimeField, coords: Iterable[Sequence[int]]) -> "LineSet":
        return cls(fld, tuple(ProjLine(tuple(c), fld) for c in coords))

    @classmethod
    def affine(cls, fld: PrimeField, coords: Iterable[Sequence[int]]) -> "LineSet":
        return cls(fld, tuple(Line(a, b, c, fld) for a, b, c in coords))

    def __len__(self) -> int:
        return len(self.lines)

    def __iter__(self) -> Iterator[AnyLine]:
        return iter(self.lines)

    @property
    def is_projective(self) -> bool:
        return bool(self.lines) and isinstance(self.lines[0], ProjLine)

    def homogeneous(self) -> List[Triple]:
        return [line.homogeneous() for line in self.lines]


class LineMultiplicityMap(Mapping):
    """
    Recta generada -> k_l, número de puntos de P sobre ella (k_l >= 2).

    Cumple Σ_l k_l(k_l-1)/2 = |P|(|P|-1)/2.
    """

    def __init__(self, field: PrimeField, counts: Dict[AnyLine, int], point_count: int):
        self.field = field
        self.point_count = point_count
        self._counts = dict(sorted(counts.items()))

    def __getitem__(self, line: AnyLine) -> int:
        return self._counts[line]

    def __iter__(self):
        return iter(self._counts)

    def __len__(self) -> int:
        return len(self._counts)

    def __repr__(self) -> str:
        return f"LineMultiplicityMap({len(self)} rectas, |P|={self.point_count})"

    def lines(self) -> LineSet:
        return LineSet(self.field, tuple(self._counts))

    def pair_total(self) -> int:
        """Σ_l C(k_l, 2)."""
        return sum(k * (k - 1) // 2 for k in self._counts.values())

    def histogram(self) -> Dict[int, int]:
        """k -> número de rectas con exactamente k puntos."""
        return dict(sorted(Counter(self._counts.values()).items()))


# ---------------------------------------------------------------------------
# Rectas generadas
# ---------------------------------------------------------------------------


def _pair_counts(coords: List[Triple], p: int, projective: bool, rows: range) -> Counter:
    """Cuenta pares no ordenados (i, j), i en rows, j > i, por clave de recta canónica."""
    counts: Counter = Counter()
    n = len(coords)
    for i in rows:
        u = coords[i]
        for j in range(i + 1, n):
            v = coords[j]
            if projective:
                key = canonical_triple(cross(u, v, p), p)
            else:
                key = affine_line_key(u[0], u[1], v[0], v[1], p)
            counts[key] += 1
    return counts


def _pair_counts_task(args) -> Counter:
    return _pair_counts(*args)


def spanned_lines(P: PointSet, workers: int = 1) -> LineMultiplicityMap:
    """
    Rectas que pasan por al menos dos puntos de P, con su número exacto de puntos.

    Cuenta los pares por clave de recta canónica; el número de pares
    ordenados m_l de cada recta debe ser de la forma k(k-1), y k_l se
    recupera con la raíz cuadrada entera (comprobación interna). Con
    workers > 1 las filas de pares se reparten entre procesos y los
    contadores parciales se fusionan por clave; el mapa se recorre en orden
    de clave canónica con cualquier número de procesos.

    Raises:
        TooFewPointsError: Si |P| < 2.

    Examples:
        >>> F = PrimeField(5)
        >>> P = PointSet.affine(F, [(0, 0), (0, 1), (1, 0), (1, 1)])
        >>> len(spanned_lines(P))
        6
    """
    n = len(P)
    if n < 2:
        raise TooFewPointsError(f"Se requieren al menos 2 puntos, recibido: {n}")
    p = P.field.p
    coords = P.homogeneous()
    projective = P.is_projective

    if workers > 1 and n > 64:
        chunks = [range(start, n - 1, workers) for start in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            partials = pool.map(_pair_counts_task, [(coords, p, projective, rows) for rows in chunks])
            pair_counts: Counter = Counter()
            for partial in partials:
                pair_counts.update(partial)
    else:
        pair_counts = _pair_counts(coords, p, projective, range(n - 1))

    counts: Dict[AnyLine, int] = {}
    for key, pairs in sorted(pair_counts.items()):
        ordered = 2 * pairs
        k = (1 + math.isqrt(1 + 4 * ordered)) // 2
        if k * (k - 1) != ordered:
            raise ArithmeticError(
                f"Multiplicidad inconsistente {ordered} para la recta {key}"
            )
        line = ProjLine(key, P.field) if projective else Line(*key, field=P.field)
        counts[line] = k

    logger.debug("spanned_lines: |P|=%d, |L(P)|=%d", n, len(counts))
    return LineMultiplicityMap(P.field, counts, n)


# ---------------------------------------------------------------------------
# Incidencias
# ---------------------------------------------------------------------------


def _check_compatible(P: PointSet, L: LineSet) -> None:
    P.field.check(L.field)
    if P.points and L.lines and P.is_projective != L.is_projective:
        raise ValueError("Puntos y rectas deben ser ambos afines o ambos proyectivos")


def count_incidences(P: PointSet, L: LineSet, method: str = "bucketed") -> int:
    """
    Número de pares (punto, recta) con el punto sobre la recta.

    Args:
        method: "naive" (pertenencia punto×recta) o "bucketed" (rectas
            agrupadas por (a, b): para Z != 0 el único c compatible se
            busca en el grupo; para Z = 0 cuenta el grupo entero si
            aX + bY = 0).

    Examples:
        >>> from lica.core.geometry import projective_lines, projective_points
        >>> F = PrimeField(3)
        >>> count_incidences(PointSet(F, tuple(projective_points(F))), LineSet(F, tuple(projective_lines(F))))
        52
    """
    _check_compatible(P, L)
    p = P.field.p
    points = P.homogeneous()
    lines = L.homogeneous()

    if method == "naive":
        return sum(1 for u in points for l in lines if dot(u, l, p) == 0)
    if method != "bucketed":
        raise ValueError(f"Método de conteo desconocido: {method}")

    buckets: Dict[Tuple[int, int], Counter] = {}
    for a, b, c in lines:
        buckets.setdefault((a, b), Counter())[c] += 1
    sizes = {key: sum(bucket.values()) for key, bucket in buckets.items()}

    total = 0
    for X, Y, Z in points:
        z_inv = inverse_mod(Z, p) if Z else 0
        for (a, b), bucket in buckets.items():
            s = (a * X + b * Y) % p
            if Z:
                total += bucket.get(-s * z_inv % p, 0)
            elif s == 0:
                total += sizes[(a, b)]
    return total


def incidence_matrix(P: PointSet, L: LineSet) -> np.ndarray:
    """
    Matriz booleana |P|×|L| de incidencias.

    Cada término del producto escalar se reduce módulo p antes de sumar
    para no desbordar int64.
    """
    _check_compatible(P, L)
    p = P.field.p
    if not len(P) or not len(L):
        return np.zeros((len(P), len(L)), dtype=bool)
    pts = np.asarray(P.homogeneous(), dtype=np.int64)
    lns = np.asarray(L.homogeneous(), dtype=np.int64)
    total = np.zeros((len(P), len(L)), dtype=np.int64)
    for k in range(3):
        total += np.multiply.outer(pts[:, k], lns[:, k]) % p
    return total % p == 0


def incidence_ratio(incidences: int, n: int, epsilon: Fraction = Fraction(1, 10678)) -> float:
    """I / n^{3/2 - ε}."""
    if n <= 0:
        raise ValueError(f"n debe ser positivo, recibido: {n}")
    return incidences / n ** (1.5 - float(epsilon))


def rich_lines(P: PointSet, t: int, multiplicities: Optional[LineMultiplicityMap] = None) -> LineSet:
    """
    Rectas generadas con al menos t puntos de P.

    Raises:
        ValueError: Si t < 2.
    """
    if t < 2:
        raise ValueError(f"El umbral de rectas ricas debe ser >= 2, recibido: {t}")
    multiplicities = multiplicities if multiplicities is not None else spanned_lines(P)
    return LineSet(P.field, tuple(line for line, k in multiplicities.items() if k >= t))


# ---------------------------------------------------------------------------
# Ternas colineales
# ---------------------------------------------------------------------------


def collinear_triples_det(P: PointSet) -> int:
    """
    Ternas ordenadas de puntos distintos con determinante nulo.

    Para cada par i < j evalúa det[(1,1,1), (xi,xj,xk), (yi,yj,yk)] sobre
    todos los k de una vez; los dos ceros triviales k = i, k = j se
    descuentan y cada terna no ordenada aparece en tres pares, es decir,
    en seis ternas ordenadas.

    Raises:
        ValueError: Si P es proyectivo.

    Examples:
        >>> F = PrimeField(11)
        >>> collinear_triples_det(PointSet.affine(F, [(x, y) for x in range(3) for y in range(3)]))
        48
    """
    if P.is_projective:
        raise ValueError("collinear_triples_det requiere puntos afines")
    n = len(P)
    if n < 3:
        return 0
    p = P.field.p
    coords = np.asarray([pt.coords for pt in P.points], dtype=np.int64)
    xs, ys = coords[:, 0], coords[:, 1]
    zeros = 0
    for i in range(n - 1):
        dx = (xs[i + 1:] - xs[i]) % p
        dy = (ys[i + 1:] - ys[i]) % p
        rx = (xs - xs[i]) % p
        ry = (ys - ys[i]) % p
        det = (np.multiply.outer(dx, ry) % p - np.multiply.outer(dy, rx) % p) % p
        zeros += int(np.count_nonzero(det == 0)) - 2 * (n - i - 1)
    return 2 * zeros


def collinear_triples_via_lines(M: Mapping) -> int:
    """Σ_l k_l(k_l-1)(k_l-2)."""
    return sum(k * (k - 1) * (k - 2) for k in M.values())


# ---------------------------------------------------------------------------
# Exponente efectivo
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BeckDeltaReport:
    """
    Exponente efectivo δ_eff = (ln|L(P)|/ln n - 2)/2 de una rejilla A×A.

    Attributes:
        n (int): |A|.
        p (int): Módulo.
        line_count (int): |L(P)|.
        delta_eff (float): Exponente medido.
        theorem_ratio (float): |L(P)| / |P|^{1+1/267}.
        in_range (bool): n < √p.
    """

    n: int
    p: int
    line_count: int
    delta_eff: float
    theorem_ratio: float
    in_range: bool


def beck_delta_effective(
    P: PointSet, multiplicities: Optional[LineMultiplicityMap] = None
) -> BeckDeltaReport:
    """
    δ_eff y razón del teorema de rectas generadas para P = A1 × A2, |A1| = |A2| = n.

    Raises:
        NotCartesianError: Si P no es una rejilla cuadrada con n >= 2.

    Examples:
        >>> F = PrimeField(5)
        >>> r = beck_delta_effective(PointSet.affine(F, [(0, 0), (0, 1), (1, 0), (1, 1)]))
        >>> r.line_count, round(r.delta_eff, 4)
        (6, 0.2925)
    """
    factors = P.grid_factors()
    if factors is None:
        raise NotCartesianError("El conjunto de puntos no es un producto cartesiano")
    A1, A2 = factors
    if len(A1) != len(A2) or len(A1) < 2:
        raise NotCartesianError(
            f"Se requiere |A1| = |A2| >= 2, recibido: {len(A1)} y {len(A2)}"
        )
    n = len(A1)
    multiplicities = multiplicities if multiplicities is not None else spanned_lines(P)
    line_count = len(multiplicities)
    delta_eff = (math.log(line_count) / math.log(n) - 2) / 2
    ratio = line_count / float(len(P)) ** float(THEOREM_EXPONENT)
    report = BeckDeltaReport(
        n=n,
        p=P.field.p,
        line_count=line_count,
        delta_eff=delta_eff,
        theorem_ratio=ratio,
        in_range=n * n < P.field.p,
    )
    logger.info(
        "δ_eff: n=%d, |L|=%d, δ_eff=%.6f, razón=%.4f, en rango=%s",
        n, line_count, delta_eff, ratio, report.in_range,
    )
    return report
