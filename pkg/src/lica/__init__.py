"""LICA: Laboratorio de Incidencias y Combinatoria Aditiva sobre F_p."""

__version__ = "0.1.0"
