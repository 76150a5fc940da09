"""
Jerarquía de errores del dominio.

Todos los errores heredan de LicaError, que a su vez es un ValueError, de
modo que el código que ya valida con ValueError los sigue capturando.
"""


class LicaError(ValueError):
    """Error base de todas las operaciones del laboratorio."""


class NotPrimeError(LicaError):
    """El módulo no supera la prueba de primalidad determinista."""

    def __init__(self, p: int):
        self.p = p
        super().__init__(f"El módulo debe ser primo, recibido: {p}")


class TooSmallError(LicaError):
    """Un tamaño o módulo está por debajo del mínimo admitido."""


class ZeroInverseError(LicaError):
    """Se pidió el inverso de cero."""


class DegenerateMapError(LicaError):
    """Una transformación no es invertible (y1 = y2 o determinante nulo)."""


class FieldMismatchError(LicaError):
    """Se combinaron objetos de cuerpos con módulos distintos."""


class CoincidentPointsError(LicaError):
    """Dos puntos coinciden donde se requieren puntos distintos."""


class TooFewPointsError(LicaError):
    """El conjunto de puntos tiene menos de dos elementos."""


class NotCartesianError(LicaError):
    """El conjunto de puntos no es un producto cartesiano A×A."""


class ZeroDilateError(LicaError):
    """Dilatación por el factor cero."""


class ZeroElementError(LicaError):
    """El conjunto contiene 0 y no se puede invertir elemento a elemento."""


class SearchTooLargeError(LicaError):
    """La búsqueda exhaustiva excede el tamaño máximo configurado."""


class HypothesisViolatedError(LicaError):
    """La instancia no cumple la hipótesis del lema de extracción."""


class BadSlopeError(LicaError):
    """La pendiente b no proviene de un y3 fuera de {0, 1}."""


class EmptyStageError(LicaError):
    """Una etapa de refinamiento quedó vacía."""

    def __init__(self, stage: str, message: str = ""):
        self.stage = stage
        detail = f": {message}" if message else ""
        super().__init__(f"La etapa '{stage}' quedó vacía{detail}")


class SizeExceedsFieldError(LicaError):
    """Se pidieron más elementos distintos de los que tiene F_p."""


class ModulusTooLargeError(LicaError):
    """El módulo supera el máximo configurado en [field].max_modulus."""


class GeneratorError(LicaError):
    """Una familia generadora no puede producir el conjunto pedido."""


class BadSubgroupOrderError(LicaError):
    """El orden del subgrupo multiplicativo no divide a p-1."""


class SchemaMismatchError(LicaError):
    """El registro persistido tiene otra versión de esquema o campos desconocidos."""


class CorruptRecordError(LicaError):
    """El registro persistido no se puede leer o no es válido."""


class RangeWarning(UserWarning):
    """La instancia está fuera del rango de los teoremas (n >= √p)."""
