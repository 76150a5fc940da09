"""
Puntos, rectas y transformaciones proyectivas sobre F_p.

Forma canónica: tanto los puntos proyectivos como las rectas (afines y
proyectivas) se guardan con la coordenada no nula más a la izquierda igual
a 1, lo que da una clave única y hasheable. Las matrices de las
transformaciones son enteros de Python: con p < 2^31 los productos no
desbordan, pero las sumas de tres productos sí lo harían en int64.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, List, Sequence, Tuple

from lica.core.errors import (
    CoincidentPointsError,
    DegenerateMapError,
)
from lica.core.field import FieldElement, PrimeField, inverse_mod

Triple = Tuple[int, int, int]
Matrix = Tuple[Triple, Triple, Triple]


def canonical_triple(coords: Sequence[int], p: int) -> Triple:
    """
    Escala un vector no nulo para que su coordenada no nula más a la izquierda sea 1.

    Raises:
        ValueError: Si el vector es nulo módulo p.
    """
    reduced = [int(c) % p for c in coords]
    for c in reduced:
        if c:
            inv = inverse_mod(c, p)
            return tuple(v * inv % p for v in reduced)  # type: ignore[return-value]
    raise ValueError(f"El vector homogéneo no puede ser nulo: {tuple(coords)}")


def cross(u: Sequence[int], v: Sequence[int], p: int) -> Triple:
    """Producto vectorial de dos triples módulo p."""
    return (
        (u[1] * v[2] - u[2] * v[1]) % p,
        (u[2] * v[0] - u[0] * v[2]) % p,
        (u[0] * v[1] - u[1] * v[0]) % p,
    )


def dot(u: Sequence[int], v: Sequence[int], p: int) -> int:
    """Producto escalar de dos triples módulo p."""
    return (u[0] * v[0] + u[1] * v[1] + u[2] * v[2]) % p


@dataclass(frozen=True, order=True)
class AffinePoint:
    """
    Punto (x, y) del plano afín F_p².

    Raises:
        FieldMismatchError: Si las coordenadas no comparten módulo.
    """

    x: FieldElement
    y: FieldElement

    def __post_init__(self):
        """Valida que las coordenadas compartan módulo."""
        self.x.field.check(self.y.field)

    @classmethod
    def of(cls, fld: PrimeField, x: int, y: int) -> "AffinePoint":
        """Construye el punto a partir de enteros (se reducen módulo p)."""
        return cls(fld(x), fld(y))

    @property
    def field(self) -> PrimeField:
        return self.x.field

    @property
    def coords(self) -> Tuple[int, int]:
        return (self.x.value, self.y.value)

    def homogeneous(self) -> Triple:
        """Coordenadas homogéneas (x, y, 1)."""
        return (self.x.value, self.y.value, 1)


@dataclass(frozen=True, order=True)
class ProjPoint:
    """
    Punto [X:Y:Z] de P²(F_p) en forma canónica.

    Raises:
        ValueError: Si las tres coordenadas son nulas.
    """

    coords: Triple
    field: PrimeField = field(compare=False)

    def __post_init__(self):
        """Canoniza el triple homogéneo."""
        object.__setattr__(self, "coords", canonical_triple(self.coords, self.field.p))

    def __eq__(self, other):
        if not isinstance(other, ProjPoint):
            return NotImplemented
        return self.coords == other.coords and self.field.p == other.field.p

    def __hash__(self):
        return hash((self.coords, self.field.p))

    @property
    def is_at_infinity(self) -> bool:
        return self.coords[2] == 0

    def homogeneous(self) -> Triple:
        return self.coords


@dataclass(frozen=True, order=True)
class Line:
    """
    Recta afín a·x + b·y + c = 0 en forma canónica (a = 1, o a = 0 y b = 1).

    Raises:
        ValueError: Si (a, b) = (0, 0).
    """

    a: int
    b: int
    c: int
    field: PrimeField = field(compare=False)

    def __post_init__(self):
        """Canoniza los coeficientes."""
        p = self.field.p
        if self.a % p == 0 and self.b % p == 0:
            raise ValueError(
                f"Una recta afín requiere (a, b) != (0, 0), recibido: ({self.a}, {self.b})"
            )
        a, b, c = canonical_triple((self.a, self.b, self.c), p)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    def __eq__(self, other):
        if not isinstance(other, Line):
            return NotImplemented
        return self.coefficients == other.coefficients and self.field.p == other.field.p

    def __hash__(self):
        return hash((self.coefficients, self.field.p))

    @property
    def coefficients(self) -> Triple:
        return (self.a, self.b, self.c)

    @property
    def is_horizontal(self) -> bool:
        return self.a == 0

    def homogeneous(self) -> Triple:
        return self.coefficients

    def contains(self, pt: AffinePoint) -> bool:
        return on_line(pt, self)


@dataclass(frozen=True, order=True)
class ProjLine:
    """Recta [a:b:c] de P²(F_p) en forma canónica."""

    coords: Triple
    field: PrimeField = field(compare=False)

    def __post_init__(self):
        """Canoniza el triple homogéneo."""
        object.__setattr__(self, "coords", canonical_triple(self.coords, self.field.p))

    def __eq__(self, other):
        if not isinstance(other, ProjLine):
            return NotImplemented
        return self.coords == other.coords and self.field.p == other.field.p

    def __hash__(self):
        return hash((self.coords, self.field.p))

    def homogeneous(self) -> Triple:
        return self.coords

    def contains(self, pt: ProjPoint) -> bool:
        self.field.check(pt.field)
        return dot(self.coords, pt.coords, self.field.p) == 0


def line_through(p1: AffinePoint, p2: AffinePoint) -> Line:
    """
    Recta canónica que pasa por dos puntos afines distintos.

    Raises:
        CoincidentPointsError: Si p1 = p2.
        FieldMismatchError: Si los puntos no comparten módulo.

    Examples:
        >>> F = PrimeField(7)
        >>> line_through(AffinePoint.of(F, 0, 1), AffinePoint.of(F, 1, 3)).coefficients
        (1, 3, 4)
    """
    p1.field.check(p2.field)
    if p1.coords == p2.coords:
        raise CoincidentPointsError(f"Los puntos coinciden: {p1.coords}")
    return Line(*affine_line_key(*p1.coords, *p2.coords, p1.field.p), field=p1.field)


def affine_line_key(x1: int, y1: int, x2: int, y2: int, p: int) -> Triple:
    """Coeficientes canónicos de la recta por (x1, y1) y (x2, y2), sin construir objetos."""
    a = (y2 - y1) % p
    b = (x1 - x2) % p
    c = -(a * x1 + b * y1) % p
    if a:
        inv = inverse_mod(a, p)
        return (1, b * inv % p, c * inv % p)
    inv = inverse_mod(b, p)
    return (0, 1, c * inv % p)


def on_line(pt: AffinePoint, line: Line) -> bool:
    """Indica si a·x + b·y + c = 0."""
    line.field.check(pt.field)
    return (line.a * pt.x.value + line.b * pt.y.value + line.c) % line.field.p == 0


def proj_line_through(P1: ProjPoint, P2: ProjPoint) -> ProjLine:
    """
    Recta proyectiva por dos puntos distintos (producto vectorial canonizado).

    Raises:
        CoincidentPointsError: Si los puntos coinciden canónicamente.

    Examples:
        >>> F = PrimeField(5)
        >>> proj_line_through(ProjPoint((1, 0, 0), F), ProjPoint((0, 1, 0), F)).coords
        (0, 0, 1)
    """
    P1.field.check(P2.field)
    if P1.coords == P2.coords:
        raise CoincidentPointsError(f"Los puntos coinciden: {P1.coords}")
    return ProjLine(cross(P1.coords, P2.coords, P1.field.p), P1.field)


def embed(pt: AffinePoint) -> ProjPoint:
    """Inmersión (x, y) -> [x:y:1]."""
    return ProjPoint(pt.homogeneous(), pt.field)


def to_affine(pt: ProjPoint) -> AffinePoint:
    """
    Carta afín Z = 1.

    Raises:
        ValueError: Si el punto está en la recta del infinito.
    """
    X, Y, Z = pt.coords
    if Z == 0:
        raise ValueError(f"El punto {pt.coords} está en la recta del infinito")
    inv = pt.field.inv(Z)
    return AffinePoint.of(pt.field, X * inv, Y * inv)


def projective_closure(line: Line) -> ProjLine:
    """Clausura proyectiva aX + bY + cZ = 0 de una recta afín."""
    return ProjLine(line.coefficients, line.field)


# ---------------------------------------------------------------------------
# Transformaciones proyectivas
# ---------------------------------------------------------------------------


def _det3(m: Matrix, p: int) -> int:
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    ) % p


def _matmul(m: Matrix, n: Matrix, p: int) -> Matrix:
    return tuple(
        tuple(sum(m[i][k] * n[k][j] for k in range(3)) % p for j in range(3))
        for i in range(3)
    )  # type: ignore[return-value]


def _matinv(m: Matrix, p: int) -> Matrix:
    det = _det3(m, p)
    if det == 0:
        raise DegenerateMapError("La matriz es singular módulo p")
    inv_det = inverse_mod(det, p)
    # Adjunta: cofactor (j, i) en la posición (i, j)
    cof = [[0] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(3):
            r = [k for k in range(3) if k != i]
            c = [k for k in range(3) if k != j]
            minor = m[r[0]][c[0]] * m[r[1]][c[1]] - m[r[0]][c[1]] * m[r[1]][c[0]]
            cof[i][j] = (-1) ** (i + j) * minor
    return tuple(
        tuple(cof[j][i] * inv_det % p for j in range(3)) for i in range(3)
    )  # type: ignore[return-value]


@dataclass(frozen=True)
class ProjectiveMap:
    """
    Transformación proyectiva dada por una matriz 3×3 invertible sobre F_p.

    Raises:
        DegenerateMapError: Si el determinante es nulo.
    """

    matrix: Matrix
    field: PrimeField

    def __post_init__(self):
        """Reduce la matriz y valida que sea invertible."""
        p = self.field.p
        reduced = tuple(tuple(int(v) % p for v in row) for row in self.matrix)
        if len(reduced) != 3 or any(len(row) != 3 for row in reduced):
            raise ValueError("La matriz de una transformación proyectiva debe ser 3×3")
        object.__setattr__(self, "matrix", reduced)
        if _det3(self.matrix, p) == 0:
            raise DegenerateMapError(
                f"La transformación proyectiva no es invertible: {self.matrix}"
            )

    @classmethod
    def identity(cls, fld: PrimeField) -> "ProjectiveMap":
        return cls(((1, 0, 0), (0, 1, 0), (0, 0, 1)), fld)

    def determinant(self) -> int:
        return _det3(self.matrix, self.field.p)

    def inverse(self) -> "ProjectiveMap":
        return ProjectiveMap(_matinv(self.matrix, self.field.p), self.field)

    def compose(self, other: "ProjectiveMap") -> "ProjectiveMap":
        """Composición self ∘ other."""
        self.field.check(other.field)
        return ProjectiveMap(_matmul(self.matrix, other.matrix, self.field.p), self.field)

    def apply(self, coords: Sequence[int]) -> Triple:
        """M·v sin canonizar."""
        p = self.field.p
        return tuple(dot(row, coords, p) for row in self.matrix)  # type: ignore[return-value]

    def is_projective_identity(self) -> bool:
        """Indica si la matriz es un múltiplo escalar de la identidad."""
        m = self.matrix
        off_diagonal = all(m[i][j] == 0 for i in range(3) for j in range(3) if i != j)
        return off_diagonal and m[0][0] == m[1][1] == m[2][2]


def apply_map(m: ProjectiveMap, pt: ProjPoint) -> ProjPoint:
    """Acción sobre puntos: v -> M·v."""
    m.field.check(pt.field)
    return ProjPoint(m.apply(pt.coords), m.field)


def apply_map_line(m: ProjectiveMap, line: ProjLine) -> ProjLine:
    """Acción sobre rectas: l -> l·M^{-1}, que preserva la incidencia."""
    m.field.check(line.field)
    p = m.field.p
    inv = _matinv(m.matrix, p)
    image = tuple(
        sum(line.coords[k] * inv[k][j] for k in range(3)) % p for j in range(3)
    )
    return ProjLine(image, m.field)


def map_to_infinity(pbar: ProjPoint, ptil: ProjPoint) -> ProjectiveMap:
    """
    Transformación que lleva pbar a [0:1:0] y ptil a [1:0:0].

    Completa {ptil, pbar} a un marco proyectivo de forma determinista: r es
    el primer punto (en el orden canónico de P²) fuera de la recta pbar-ptil
    y q el primero fuera de las tres rectas que unen ptil, pbar y r. La
    transformación devuelta envía ptil, pbar, r, q a [1:0:0], [0:1:0],
    [0:0:1], [1:1:1]. Las rectas por pbar quedan verticales y las rectas
    por ptil horizontales en la carta Z = 1.

    Raises:
        CoincidentPointsError: Si pbar = ptil.

    Examples:
        >>> F = PrimeField(7)
        >>> m = map_to_infinity(ProjPoint((0, 1, 0), F), ProjPoint((1, 0, 0), F))
        >>> m.is_projective_identity()
        True
    """
    pbar.field.check(ptil.field)
    fld = pbar.field
    p = fld.p
    base = proj_line_through(pbar, ptil)

    r = next(pt for pt in projective_points(fld) if not base.contains(pt))
    line_pr = proj_line_through(pbar, r)
    line_tr = proj_line_through(ptil, r)
    q = next(
        pt
        for pt in projective_points(fld)
        if not (base.contains(pt) or line_pr.contains(pt) or line_tr.contains(pt))
    )

    # B tiene por columnas ptil, pbar, r; N = B·diag(λ) con B·λ = q
    columns = (ptil.coords, pbar.coords, r.coords)
    B = tuple(tuple(columns[j][i] for j in range(3)) for i in range(3))
    lam = [sum(row[k] * q.coords[k] for k in range(3)) % p for row in _matinv(B, p)]
    N = tuple(tuple(B[i][j] * lam[j] % p for j in range(3)) for i in range(3))
    return ProjectiveMap(_matinv(N, p), fld)


# ---------------------------------------------------------------------------
# Enumeraciones
# ---------------------------------------------------------------------------


def projective_triples(p: int) -> Iterator[Triple]:
    """Triples canónicos de P²(F_p) en orden lexicográfico."""
    yield (0, 0, 1)
    for c in range(p):
        yield (0, 1, c)
    for b in range(p):
        for c in range(p):
            yield (1, b, c)


def projective_triple_from_index(index: int, p: int) -> Triple:
    """Triple canónico de posición index en el orden de projective_triples."""
    size = p * p + p + 1
    if not 0 <= index < size:
        raise ValueError(f"Índice fuera de rango [0, {size}): {index}")
    if index == 0:
        return (0, 0, 1)
    if index <= p:
        return (0, 1, index - 1)
    j = index - p - 1
    return (1, j // p, j % p)


def projective_points(fld: PrimeField) -> Iterator[ProjPoint]:
    """Los p²+p+1 puntos de P²(F_p) en orden canónico."""
    for t in projective_triples(fld.p):
        yield ProjPoint(t, fld)


def projective_lines(fld: PrimeField) -> Iterator[ProjLine]:
    """Las p²+p+1 rectas de P²(F_p) en orden canónico."""
    for t in projective_triples(fld.p):
        yield ProjLine(t, fld)


def affine_points(fld: PrimeField) -> Iterator[AffinePoint]:
    """Los p² puntos de F_p²."""
    for x in range(fld.p):
        for y in range(fld.p):
            yield AffinePoint.of(fld, x, y)


def affine_lines(fld: PrimeField) -> List[Line]:
    """Las p²+p rectas de F_p²: (0, 1, c) horizontales y (1, b, c)."""
    p = fld.p
    lines = [Line(0, 1, c, fld) for c in range(p)]
    lines.extend(Line(1, b, c, fld) for b in range(p) for c in range(p))
    return lines

