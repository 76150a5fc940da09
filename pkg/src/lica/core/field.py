"""
Aritmética exacta en F_p para primos impares p.

Los algoritmos del resto del paquete trabajan internamente con residuos
enteros en [0, p); FieldElement es la vista tipada que se expone en las
fronteras (entradas de usuario, certificados, pruebas).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

from lica.core.errors import (
    DegenerateMapError,
    FieldMismatchError,
    ModulusTooLargeError,
    NotPrimeError,
    TooSmallError,
    ZeroInverseError,
)
from lica.infrastructure.config import get_config

# Testigos de Miller-Rabin deterministas para n < 3 215 031 751 (> 2^31)
_MR_BASES = (2, 3, 5, 7)
_TRIAL_DIVISION_LIMIT = 2**16


def is_prime(n: int) -> bool:
    """
    Prueba de primalidad determinista.

    División por tentativa para n < 2^16 y Miller-Rabin con las bases
    {2, 3, 5, 7} en otro caso, que es exacto para todo n < 3.2·10^9.

    Examples:
        >>> is_prime(1009), is_prime(9)
        (True, False)
    """
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    if n < _TRIAL_DIVISION_LIMIT:
        d = 3
        while d * d <= n:
            if n % d == 0:
                return False
            d += 2
        return True

    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def inverse_mod(a: int, p: int) -> int:
    """
    Inverso modular por el algoritmo de Euclides extendido.

    Raises:
        ZeroInverseError: Si a ≡ 0 (mod p).
    """
    a %= p
    if a == 0:
        raise ZeroInverseError("El cero no tiene inverso multiplicativo")
    old_r, r = a, p
    old_s, s = 1, 0
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
    return old_s % p


@dataclass(frozen=True, order=True)
class PrimeField:
    """
    Contexto del cuerpo F_p.

    Attributes:
        p (int): Módulo primo, 3 <= p < 2^31.

    Raises:
        TooSmallError: Si p < 3.
        NotPrimeError: Si p es compuesto.
        ModulusTooLargeError: Si p excede el módulo máximo configurado.
    """

    p: int

    def __post_init__(self):
        """Valida el módulo."""
        if self.p < 3:
            raise TooSmallError(f"El módulo debe ser >= 3, recibido: {self.p}")
        max_modulus = get_config().field.max_modulus
        if self.p >= max_modulus:
            raise ModulusTooLargeError(
                f"El módulo debe ser menor que {max_modulus}, recibido: {self.p}"
            )
        if not is_prime(self.p):
            raise NotPrimeError(self.p)

    def __call__(self, value: Union[int, "FieldElement"]) -> "FieldElement":
        """Construye el elemento de F_p correspondiente a un entero."""
        if isinstance(value, FieldElement):
            self.check(value.field)
            return value
        return FieldElement(int(value) % self.p, self)

    def __len__(self) -> int:
        return self.p

    def check(self, other: "PrimeField") -> None:
        """Lanza FieldMismatchError si other es otro cuerpo."""
        if other.p != self.p:
            raise FieldMismatchError(
                f"Módulos incompatibles: {self.p} y {other.p}"
            )

    def elements(self) -> Iterator["FieldElement"]:
        """Enumera F_p en orden 0, 1, ..., p-1."""
        for value in range(self.p):
            yield FieldElement(value, self)

    def inv(self, value: int) -> int:
        """Inverso de un residuo entero."""
        return inverse_mod(value, self.p)


@dataclass(frozen=True, order=True)
class FieldElement:
    """
    Elemento de F_p.

    Attributes:
        value (int): Residuo en [0, p).
        field (PrimeField): Cuerpo al que pertenece.

    Los operadores aceptan enteros (que se reducen en el mismo cuerpo) y
    rechazan elementos de otros módulos.
    """

    value: int
    field: PrimeField

    def __post_init__(self):
        """Valida el rango del residuo."""
        if not 0 <= self.value < self.field.p:
            raise ValueError(
                f"El residuo debe estar en [0, {self.field.p}), recibido: {self.value}"
            )

    def _coerce(self, other: Union[int, "FieldElement"]) -> int:
        if isinstance(other, FieldElement):
            self.field.check(other.field)
            return other.value
        if isinstance(other, int):
            return other % self.field.p
        return NotImplemented

    def _wrap(self, value: int) -> "FieldElement":
        return FieldElement(value % self.field.p, self.field)

    def __add__(self, other):
        v = self._coerce(other)
        return NotImplemented if v is NotImplemented else self._wrap(self.value + v)

    __radd__ = __add__

    def __sub__(self, other):
        v = self._coerce(other)
        return NotImplemented if v is NotImplemented else self._wrap(self.value - v)

    def __rsub__(self, other):
        v = self._coerce(other)
        return NotImplemented if v is NotImplemented else self._wrap(v - self.value)

    def __mul__(self, other):
        v = self._coerce(other)
        return NotImplemented if v is NotImplemented else self._wrap(self.value * v)

    __rmul__ = __mul__

    def __truediv__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return NotImplemented
        return self._wrap(self.value * inverse_mod(v, self.field.p))

    def __rtruediv__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return NotImplemented
        return self._wrap(v * inverse_mod(self.value, self.field.p))

    def __neg__(self) -> "FieldElement":
        return self._wrap(-self.value)

    def __int__(self) -> int:
        return self.value

    def __index__(self) -> int:
        return self.value

    def __bool__(self) -> bool:
        return self.value != 0

    def __repr__(self) -> str:
        return f"{self.value} (mod {self.field.p})"

    def inverse(self) -> "FieldElement":
        """Inverso multiplicativo; ZeroInverseError para el cero."""
        return FieldElement(inverse_mod(self.value, self.field.p), self.field)


def make_field(p: int) -> PrimeField:
    """
    Crea el contexto F_p.

    Examples:
        >>> make_field(7).p
        7
        >>> make_field(9)
        Traceback (most recent call last):
        ...
        lica.core.errors.NotPrimeError: El módulo debe ser primo, recibido: 9
    """
    return PrimeField(int(p))


def inverse(x: FieldElement) -> FieldElement:
    """
    Inverso multiplicativo de x.

    Raises:
        ZeroInverseError: Si x = 0.

    Examples:
        >>> inverse(make_field(7)(3)).value
        5
    """
    return x.inverse()


def affine_normalize(t: FieldElement, y1: FieldElement, y2: FieldElement) -> FieldElement:
    """
    Aplica la transformación afín t -> (t - y1)/(y2 - y1), que lleva y1 a 0 e y2 a 1.

    Raises:
        DegenerateMapError: Si y1 = y2.
        FieldMismatchError: Si los argumentos no comparten módulo.

    Examples:
        >>> F = make_field(7)
        >>> affine_normalize(F(5), F(1), F(3)).value
        2
    """
    t.field.check(y1.field)
    t.field.check(y2.field)
    if y1.value == y2.value:
        raise DegenerateMapError(
            f"La normalización afín requiere y1 != y2, recibido: y1 = y2 = {y1.value}"
        )
    return (t - y1) / (y2 - y1)
