"""
Reproducción ejecutable del argumento de incidencias punto-recta.

Dados P y L en P²(F_p) con |P| = |L| = n se recorre la reducción al caso
de rectas generadas: borrado de los puntos de grado alto (P₊), puntos y
rectas populares (P₁, L₁, P₂), vecindarios P_p, el par (p̄, p̃) de mayor
vecindario común (P₃), la transformación proyectiva que manda p̄ y p̃ a la
recta del infinito, la rejilla A × B de las coordenadas de P₃, el conteo
I(P₃, L), las ternas colineales y el traspaso a la maquinaria de rectas
generadas sobre la rejilla.

Los conjuntos se manejan como índices sobre la matriz de incidencias
de la entrada; todas las elecciones son argmax deterministas con
desempate por el orden canónico de los puntos.
"""

from __future__ import annotations

import logging
import math
import time
import warnings
from fractions import Fraction
from typing import Callable, List, Optional

import numpy as np

from lica.core.addcomb import ElementSet
from lica.core.beck_pipeline import epsilon_from_delta, run_beck_pipeline
from lica.core.errors import EmptyStageError, RangeWarning, TooSmallError
from lica.core.geometry import (
    ProjPoint,
    apply_map,
    apply_map_line,
    map_to_infinity,
    proj_line_through,
    to_affine,
)
from lica.core.incidence import (
    LineSet,
    PointSet,
    beck_delta_effective,
    count_incidences,
    incidence_matrix,
    incidence_ratio,
    spanned_lines,
)
from lica.core.models import BeckParams, IncidenceParams, IncidenceTrace, StageRecord

logger = logging.getLogger(__name__)

# Puntos a los que map_to_infinity lleva p̄ y p̃
_PBAR_IMAGE = (0, 1, 0)
_PTIL_IMAGE = (1, 0, 0)


def _triples(counts: np.ndarray) -> int:
    """Σ k(k-1)(k-2) sobre un vector de multiplicidades."""
    k = counts.astype(np.int64)
    return int((k * (k - 1) * (k - 2)).sum())


class _IncidenceRun:
    """Estado de una ejecución; cada método _stage_* produce un StageRecord."""

    STAGES = (
        "incidences",
        "erase",
        "popular_points",
        "refine",
        "neighborhoods",
        "pair",
        "projective_map",
        "grid_incidences",
        "triple_handoff",
        "beck_handoff",
        "epsilon",
    )

    def __init__(
        self,
        P: PointSet,
        L: LineSet,
        params: IncidenceParams,
        workers: int,
        deadline: Optional[float],
    ):
        self.P = P
        self.L = L
        self.params = params
        self.workers = workers
        self.deadline = deadline
        self.field = P.field
        self.p = P.field.p
        self.n = len(P)
        self.points = list(P)
        self.lines = list(L)
        self.trace = IncidenceTrace(n=self.n, p=self.p, epsilon=params.epsilon)

    def power(self, exponent) -> float:
        return float(self.n) ** float(exponent)

    def coords(self, rows) -> List[List[int]]:
        return [list(self.points[i].coords) for i in rows]

    # -- conteo y borrado --------------------------------------------------

    def _stage_incidences(self) -> StageRecord:
        self.M = incidence_matrix(self.P, self.L)
        total = int(self.M.sum())
        bucketed = count_incidences(self.P, self.L)
        self.trace.incidences = total
        self.trace.in_range = self.n * self.n < self.p
        if not self.trace.in_range:
            warnings.warn(
                f"n = {self.n} no cumple n < √p con p = {self.p}; el pipeline continúa",
                RangeWarning,
                stacklevel=4,
            )
        if total == 0:
            raise EmptyStageError("incidences", "P y L no tienen incidencias")
        self.trace.epsilon_eff = 1.5 - math.log(total) / math.log(self.n)
        return StageRecord(
            name="incidences",
            estimate="incidence_count",
            measured=total,
            predicted=self.power(Fraction(3, 2) - self.params.epsilon),
            payload_sizes={"points": self.n, "lines": len(self.lines)},
            checks={"bucketed_matches_matrix": bucketed == total},
            details={
                "epsilon_eff": self.trace.epsilon_eff,
                "theorem_ratio": incidence_ratio(total, self.n, self.params.epsilon),
                "in_range": self.trace.in_range,
            },
        )

    def _stage_erase(self) -> StageRecord:
        eps = self.params.epsilon
        threshold = float(self.params.c_erase) * self.power(Fraction(1, 2) + eps)
        self.degree = self.M.sum(axis=1).astype(np.int64)
        erased = self.degree > threshold
        self.erased = np.flatnonzero(erased)
        self.kept = np.flatnonzero(~erased)
        erased_incidences = int(self.degree[erased].sum())
        # Dos rectas distintas se cortan en a lo sumo un punto
        pair_load = int((self.degree[erased] * (self.degree[erased] - 1)).sum())
        m = len(self.lines)
        return StageRecord(
            name="erase",
            estimate="erased_incidences",
            measured=erased_incidences,
            predicted=self.n * self.n / threshold,
            payload_sizes={"P_plus": len(self.erased), "remaining": len(self.kept)},
            checks={"line_pair_bound": pair_load <= m * (m - 1)},
            details={"threshold": threshold, "P_plus": self.coords(self.erased)},
        )

    # -- popularidad -------------------------------------------------------

    def popularity_threshold(self) -> float:
        return float(self.params.c_pop) * self.power(Fraction(1, 2) - self.params.epsilon)

    def _stage_popular_points(self) -> StageRecord:
        threshold = self.popularity_threshold()
        self.P1 = self.kept[self.degree[self.kept] >= threshold]
        if not len(self.P1):
            raise EmptyStageError("popular_points", "Ningún punto alcanza el umbral de popularidad")
        remaining = int(self.degree[self.kept].sum())
        kept_incidences = int(self.degree[self.P1].sum())
        dropped = len(self.kept) - len(self.P1)
        return StageRecord(
            name="popular_points",
            estimate="popular_incidences",
            measured=kept_incidences,
            predicted=self.power(Fraction(3, 2) - self.params.epsilon),
            payload_sizes={"P1": len(self.P1)},
            checks={
                "dropped_below_threshold": remaining - kept_incidences <= dropped * threshold,
                "P1_disjoint_from_P_plus": not np.intersect1d(self.P1, self.erased).size,
            },
            details={"threshold": threshold, "P1": self.coords(self.P1)},
        )

    def _stage_refine(self) -> StageRecord:
        threshold = self.popularity_threshold()
        points = self.P1
        lines = np.arange(len(self.lines))
        rounds = []
        for _ in range(self.params.refine_depth):
            on_lines = self.M[np.ix_(points, lines)].sum(axis=0)
            lines = lines[on_lines >= threshold]
            through = self.M[np.ix_(points, lines)].sum(axis=1)
            points = points[through >= threshold]
            rounds.append({"L1": int(len(lines)), "P2": int(len(points))})
            if not len(lines) or not len(points):
                raise EmptyStageError("refine", f"Refinamiento vacío en la ronda {len(rounds)}")
        self.L1 = lines
        self.P2 = points
        measured = int(self.M[np.ix_(self.P2, self.L1)].sum())
        return StageRecord(
            name="refine",
            estimate="popular_lines",
            measured=measured,
            predicted=self.power(Fraction(3, 2) - self.params.epsilon),
            payload_sizes={"L1": len(self.L1), "P2": len(self.P2)},
            checks={
                "P2_subset_of_P1": bool(np.isin(self.P2, self.P1).all()),
                "P2_disjoint_from_P_plus": not np.intersect1d(self.P2, self.erased).size,
            },
            details={"threshold": threshold, "rounds": rounds, "P2": self.coords(self.P2)},
        )

    # -- vecindarios y par fijo --------------------------------------------

    def _stage_neighborhoods(self) -> StageRecord:
        if len(self.P2) < 2:
            raise EmptyStageError("neighborhoods", f"|P2| = {len(self.P2)} < 2")
        on_L1 = self.M[np.ix_(self.P1, self.L1)].astype(np.int64)
        # N[i, j]: P2[i] y P1[j] comparten una recta de L1
        rows = np.searchsorted(self.P1, self.P2)
        self.N = (on_L1[rows] @ on_L1.T) > 0
        self.N[np.arange(len(self.P2)), rows] = False
        sizes = self.N.sum(axis=1)
        self.common = self.N.astype(np.int64) @ self.N.T.astype(np.int64)
        upper = np.triu(self.common, k=1)
        # Cauchy-Schwarz: (Σ|P_p|)² <= |P1|·Σ_{p,p'} |P_p ∩ P_p'|
        total = int(sizes.sum())
        return StageRecord(
            name="neighborhoods",
            estimate="neighborhood_size",
            measured=int(sizes.min()),
            predicted=self.power(1 - 2 * self.params.epsilon),
            payload_sizes={"P2": len(self.P2), "P1": len(self.P1)},
            checks={
                "cauchy_schwarz": total * total <= len(self.P1) * int(self.common.sum()),
            },
            details={
                "sizes": {str(tuple(self.points[i].coords)): int(s) for i, s in zip(self.P2, sizes)},
                "max_common": int(upper.max()),
            },
        )

    def _stage_pair(self) -> StageRecord:
        upper = np.triu(self.common, k=1)
        best = int(upper.max())
        if best == 0:
            raise EmptyStageError("pair", "Ningún par de P2 tiene vecinos comunes")
        # argmax devuelve el primer par en orden de filas: desempate canónico
        i, j = np.unravel_index(int(np.argmax(upper)), upper.shape)
        self.pbar = self.points[self.P2[i]]
        self.ptil = self.points[self.P2[j]]
        self.P3 = self.P1[self.N[i] & self.N[j]]
        return StageRecord(
            name="pair",
            estimate="common_neighborhood",
            measured=len(self.P3),
            predicted=self.power(1 - 4 * self.params.epsilon),
            payload_sizes={"P3": len(self.P3)},
            checks={
                "P3_subset_of_P1": bool(np.isin(self.P3, self.P1).all()),
                "P3_is_intersection": len(self.P3) == best,
            },
            details={
                "pbar": list(self.pbar.coords),
                "ptil": list(self.ptil.coords),
                "P3": self.coords(self.P3),
            },
        )

    # -- normalización proyectiva y rejilla --------------------------------

    def _stage_projective_map(self) -> StageRecord:
        self.map = map_to_infinity(self.pbar, self.ptil)
        mapped = [apply_map(self.map, self.points[i]) for i in self.P3]
        at_infinity = [pt for pt in mapped if pt.is_at_infinity]
        self.chart = [to_affine(pt) for pt in mapped if not pt.is_at_infinity]
        self.A = sorted({pt.coords[0] for pt in self.chart})
        self.B = sorted({pt.coords[1] for pt in self.chart})
        self.trace.at_infinity = len(at_infinity)
        self.trace.grid = {"A": self.A, "B": self.B}

        through_pbar = [self.lines[k] for k in self.L1 if self.lines[k].contains(self.pbar)]
        through_ptil = [self.lines[k] for k in self.L1 if self.lines[k].contains(self.ptil)]
        vertical = all(apply_map_line(self.map, l).coords[1] == 0 for l in through_pbar)
        horizontal = all(apply_map_line(self.map, l).coords[0] == 0 for l in through_ptil)
        base = proj_line_through(self.pbar, self.ptil)
        on_base = sum(1 for i in self.P3 if base.contains(self.points[i]))
        return StageRecord(
            name="projective_map",
            estimate="grid_side",
            measured=max(len(self.A), len(self.B), 1),
            predicted=self.power(Fraction(1, 2) + self.params.epsilon),
            payload_sizes={
                "A": len(self.A),
                "B": len(self.B),
                "at_infinity": len(at_infinity),
                "chart": len(self.chart),
            },
            checks={
                "sends_pbar_to_infinity": apply_map(self.map, self.pbar).coords == _PBAR_IMAGE,
                "sends_ptil_to_infinity": apply_map(self.map, self.ptil).coords == _PTIL_IMAGE,
                "lines_through_pbar_vertical": vertical,
                "lines_through_ptil_horizontal": horizontal,
                "at_infinity_on_base_line": len(at_infinity) == on_base,
                "A_bounded_by_lines_through_pbar": len(self.A) <= len(through_pbar),
                "B_bounded_by_lines_through_ptil": len(self.B) <= len(through_ptil),
            },
            details={
                "matrix": [list(row) for row in self.map.matrix],
                "A": self.A,
                "B": self.B,
            },
        )

    def _stage_grid_incidences(self) -> StageRecord:
        measured = int(self.M[self.P3].sum())
        mapped_points = PointSet(self.field, tuple(apply_map(self.map, self.points[i]) for i in self.P3))
        self.mapped_lines = LineSet(self.field, tuple(apply_map_line(self.map, l) for l in self.lines))
        return StageRecord(
            name="grid_incidences",
            estimate="grid_incidences",
            measured=measured,
            predicted=self.power(Fraction(3, 2) - 5 * self.params.epsilon),
            payload_sizes={"P3": len(self.P3)},
            checks={
                "map_preserves_incidences": count_incidences(mapped_points, self.mapped_lines) == measured,
            },
        )

    def _stage_triple_handoff(self) -> StageRecord:
        per_line = self.M[self.P3].sum(axis=0)
        triples = _triples(per_line)

        chart_points = PointSet(self.field, tuple(self.chart))
        chart_triples = _triples(incidence_matrix(chart_points, self._affine_lines()).sum(axis=0))
        grid_size = len(self.A) * len(self.B)
        grid_triples = None
        checks = {}
        if grid_size <= self.params.handoff_max_points:
            grid = PointSet.cartesian(ElementSet(self.field, tuple(self.A)), ElementSet(self.field, tuple(self.B)))
            grid_triples = _triples(incidence_matrix(grid, self._affine_lines()).sum(axis=0))
            checks["grid_dominates_chart"] = grid_triples >= chart_triples
        checks["chart_within_P3"] = chart_triples <= triples
        return StageRecord(
            name="triple_handoff",
            estimate="collinear_triples",
            measured=triples,
            predicted=self.power(Fraction(5, 2) - 15 * self.params.epsilon),
            payload_sizes={"P3": len(self.P3), "grid": grid_size},
            checks=checks,
            details={"chart_triples": chart_triples, "grid_triples": grid_triples},
        )

    def _affine_lines(self) -> LineSet:
        """Rectas transformadas que no son la recta del infinito, en la carta Z = 1."""
        return LineSet.affine(
            self.field,
            (l.coords for l in self.mapped_lines if l.coords[:2] != (0, 0)),
        )

    # -- traspaso a rectas generadas ---------------------------------------

    def _stage_beck_handoff(self) -> StageRecord:
        grid_size = len(self.A) * len(self.B)
        if grid_size > self.params.handoff_max_points or grid_size < 2:
            return StageRecord(
                name="beck_handoff",
                estimate="grid_spanned_lines",
                payload_sizes={"grid": grid_size},
                details={"skipped": "grid_size", "handoff_max_points": self.params.handoff_max_points},
            )
        A = ElementSet(self.field, tuple(self.A))
        B = ElementSet(self.field, tuple(self.B))
        grid = PointSet.cartesian(A, B)
        multiplicities = spanned_lines(grid, workers=self.workers)
        details = {"square": len(A) == len(B)}
        predicted = None
        beck = self.params.beck if self.params.beck is not None else BeckParams.from_config()
        if len(A) == len(B):
            report = beck_delta_effective(grid, multiplicities)
            details["delta_eff"] = report.delta_eff
            predicted = float(len(A)) ** (2 + 2 * float(beck.delta))
            if self.params.beck_handoff:
                self.trace.beck_trace = run_beck_pipeline(
                    A, B, beck, workers=self.workers, deadline=self.deadline
                )
                details["beck_status"] = self.trace.beck_trace.status
        pairs = len(grid) * (len(grid) - 1) // 2
        return StageRecord(
            name="beck_handoff",
            estimate="grid_spanned_lines",
            measured=len(multiplicities),
            predicted=predicted,
            payload_sizes={"grid": grid_size, "lines": len(multiplicities)},
            checks={"pair_conservation": multiplicities.pair_total() == pairs},
            details=details,
        )

    def _stage_epsilon(self) -> StageRecord:
        beck = self.params.beck if self.params.beck is not None else BeckParams.from_config()
        relation = epsilon_from_delta(beck.delta)
        return StageRecord(
            name="epsilon",
            estimate="epsilon_from_delta",
            measured=self.trace.epsilon_eff,
            predicted=float(self.params.epsilon),
            details={
                "delta": str(beck.delta),
                "epsilon_from_delta": str(relation),
                "epsilon_matches_delta": self.params.epsilon == relation,
            },
        )

    def run(self, strict: bool) -> IncidenceTrace:
        for name in self.STAGES:
            if self.deadline is not None and time.monotonic() > self.deadline:
                raise TimeoutError(f"Presupuesto agotado antes de la etapa {name}")
            stage: Callable[[], StageRecord] = getattr(self, f"_stage_{name}")
            try:
                record = stage()
            except EmptyStageError as e:
                logger.info("Traza truncada en %s: %s", e.stage, e)
                self.trace.truncate(e.stage)
                if strict:
                    raise
                return self.trace
            self.trace.add(record)
            logger.info(
                "Etapa %s: medido=%s, predicho=%s, razón=%s",
                record.name, record.measured, record.predicted, record.ratio,
            )
            if record.failed_checks:
                logger.error("Comprobaciones fallidas en %s: %s", record.name, record.failed_checks)
        return self.trace


def run_incidence_pipeline(
    P: PointSet,
    L: LineSet,
    params: Optional[IncidenceParams] = None,
    strict: bool = False,
    workers: int = 1,
    deadline: Optional[float] = None,
) -> IncidenceTrace:
    """
    Ejecuta la reducción completa sobre (P, L) proyectivos y devuelve su traza.

    Args:
        P: Puntos de P²(F_p).
        L: Rectas de P²(F_p) con |L| = |P|.
        params: Parámetros; por defecto los de config.toml.
        strict: Si es True, una etapa vacía lanza EmptyStageError.
        workers: Procesos para el conteo de rectas de la rejilla.
        deadline: Instante (time.monotonic) a partir del cual se aborta.

    Returns:
        IncidenceTrace con status "complete" o "truncated".

    Raises:
        ValueError: Si P o L no son proyectivos o |P| != |L|.
        TooSmallError: Si n < 2.

    Warns:
        RangeWarning: Si n >= √p.

    Examples:
        >>> from lica.core.field import PrimeField
        >>> from lica.core.geometry import projective_lines, projective_points
        >>> F = PrimeField(7)
        >>> P = PointSet(F, tuple(projective_points(F)))
        >>> L = LineSet(F, tuple(projective_lines(F)))
        >>> trace = run_incidence_pipeline(P, L, IncidenceParams())
        >>> trace.incidences, trace.at_infinity, trace.grid["A"]
        (456, 6, [0, 1, 2, 3, 4, 5, 6])
    """
    P.field.check(L.field)
    if not (P.is_projective and L.is_projective):
        raise ValueError("El pipeline de incidencias requiere puntos y rectas proyectivos")
    if len(P) != len(L):
        raise ValueError(f"Se requiere |P| = |L|, recibido: {len(P)} y {len(L)}")
    if len(P) < 2:
        raise TooSmallError(f"Se requiere n >= 2, recibido: {len(P)}")
    params = params if params is not None else IncidenceParams.from_config()
    logger.info("Pipeline de incidencias: n=%d, p=%d, ε=%s", len(P), P.field.p, params.epsilon)
    return _IncidenceRun(P, L, params, workers, deadline).run(strict)
