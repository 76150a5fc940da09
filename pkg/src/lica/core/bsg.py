"""
Extracción Balog-Szemerédi-Gowers constructiva y su oráculo exhaustivo.

Si la suma x + y toma a lo sumo n valores sobre un conjunto de αn² pares
de X × Y (|X| = |Y| = n), existen X' ⊆ X, Y' ⊆ Y con |X'|, |Y'| >> α·n y
|X' + Y'| << α^{-5}·n.

El extractor sigue la prueba por caminos de longitud 2 del grafo bipartito:
se descartan los vértices de grado bajo, se elige el vecindario de un pivote
y ∈ Y y se eliminan los x con demasiados compañeros "malos" (codegree bajo).
La elección aleatoria del pivote se desaleatoriza probando todos los y.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import FrozenSet, List, Optional, Tuple

import networkx as nx
import numpy as np

from lica.core.addcomb import ElementSet, sumset
from lica.core.errors import HypothesisViolatedError, SearchTooLargeError
from lica.infrastructure.config import as_fraction, get_config

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]

# Constantes del argumento de caminos de longitud 2
_BAD_CODEGREE_DIVISOR = 512
_BAD_PAIR_WEIGHT = 64


@dataclass(frozen=True)
class PairGraph:
    """
    Grafo bipartito de pares (x, y) ⊆ X × Y.

    Attributes:
        X (ElementSet): Lado izquierdo.
        Y (ElementSet): Lado derecho.
        edges (FrozenSet[Edge]): Pares (x, y) como residuos.

    Raises:
        ValueError: Si no hay aristas o alguna arista no está en X × Y.
    """

    X: ElementSet
    Y: ElementSet
    edges: FrozenSet[Edge]

    def __post_init__(self):
        """Normaliza las aristas y valida que estén en X × Y."""
        self.X.field.check(self.Y.field)
        p = self.X.p
        edges = frozenset((int(x) % p, int(y) % p) for x, y in self.edges)
        if not edges:
            raise ValueError("El grafo de pares debe tener al menos una arista")
        outside = [e for e in edges if e[0] not in self.X or e[1] not in self.Y]
        if outside:
            raise ValueError(f"Aristas fuera de X × Y, recibido: {sorted(outside)[:5]}")
        object.__setattr__(self, "edges", edges)

    @classmethod
    def from_sum_window(cls, X: ElementSet, Y: ElementSet, window: ElementSet) -> "PairGraph":
        """Pares (x, y) cuya suma cae en window."""
        p = X.p
        return cls(X, Y, frozenset((x, y) for x in X for y in Y if (x + y) % p in window))

    @property
    def n(self) -> int:
        return len(self.X)

    @property
    def alpha(self) -> Fraction:
        """Densidad |E| / (|X|·|Y|)."""
        return Fraction(len(self.edges), len(self.X) * len(self.Y))

    def graph(self) -> nx.Graph:
        """Grafo de networkx con nodos ("x", v) y ("y", v)."""
        G = nx.Graph()
        G.add_nodes_from((("x", x) for x in self.X), bipartite=0)
        G.add_nodes_from((("y", y) for y in self.Y), bipartite=1)
        G.add_edges_from((("x", x), ("y", y)) for x, y in sorted(self.edges))
        return G

    def biadjacency(self) -> np.ndarray:
        """Matriz |X|×|Y| de ceros y unos, filas y columnas en orden canónico."""
        nodes = [("x", x) for x in self.X] + [("y", y) for y in self.Y]
        full = nx.to_numpy_array(self.graph(), nodelist=nodes, dtype=np.int64)
        return full[: len(self.X), len(self.X):]

    def sum_values(self) -> ElementSet:
        """Valores de x + y sobre las aristas."""
        return ElementSet(self.X.field, tuple(x + y for x, y in self.edges))


@dataclass(frozen=True)
class BsgResult:
    """
    Subconjuntos extraídos y sus razones frente a las cotas del lema.

    Attributes:
        x_prime, y_prime (ElementSet): X' ⊆ X, Y' ⊆ Y, no vacíos.
        sumset_size (int): |X' + Y'|.
        alpha (Fraction): Densidad del grafo.
        n (int): |X| = |Y|.
        pivot (Optional[int]): y usado como pivote (None en el oráculo).
        size_ratio_x, size_ratio_y (float): |X'|/(α n), |Y'|/(α n).
        sumset_ratio (float): |X'+Y'| / (α^{-5} n).
        meets_size_bound, meets_sumset_bound (bool): Cumplimiento de
            |X'|,|Y'| >= c·α·n y |X'+Y'| <= C·α^{-5}·n.
        score (Optional[Fraction]): Φ = |A|² - (64/α)·malos del pivote
            (None en el oráculo).
    """

    x_prime: ElementSet
    y_prime: ElementSet
    sumset_size: int
    alpha: Fraction
    n: int
    pivot: Optional[int]
    size_ratio_x: float
    size_ratio_y: float
    sumset_ratio: float
    meets_size_bound: bool
    meets_sumset_bound: bool
    score: Optional[Fraction] = None

    @property
    def min_size(self) -> int:
        return min(len(self.x_prime), len(self.y_prime))

    @property
    def meets_bounds(self) -> bool:
        return self.meets_size_bound and self.meets_sumset_bound


def _result(
    G: PairGraph,
    x_prime: ElementSet,
    y_prime: ElementSet,
    pivot: Optional[int],
    c_bsg: Fraction,
    C_bsg: Fraction,
    score: Optional[Fraction] = None,
) -> BsgResult:
    alpha, n = G.alpha, G.n
    size = len(sumset(x_prime, y_prime))
    scale = alpha ** -5 * n
    return BsgResult(
        x_prime=x_prime,
        y_prime=y_prime,
        sumset_size=size,
        alpha=alpha,
        n=n,
        pivot=pivot,
        size_ratio_x=float(len(x_prime) / (alpha * n)),
        size_ratio_y=float(len(y_prime) / (alpha * n)),
        sumset_ratio=float(size / scale),
        meets_size_bound=min(len(x_prime), len(y_prime)) >= c_bsg * alpha * n,
        meets_sumset_bound=size <= C_bsg * scale,
        score=score,
    )


def check_hypothesis(G: PairGraph) -> None:
    """
    Valida |X| = |Y| = n >= 2 y que x + y tome a lo sumo n valores sobre E.

    Raises:
        HypothesisViolatedError: Si alguna condición falla.
    """
    if len(G.X) != len(G.Y) or len(G.X) < 2:
        raise HypothesisViolatedError(
            f"Se requiere |X| = |Y| = n >= 2, recibido: {len(G.X)} y {len(G.Y)}"
        )
    sums = len(G.sum_values())
    if sums > G.n:
        raise HypothesisViolatedError(
            f"La suma toma {sums} valores distintos sobre E, más que n = {G.n}"
        )


def bsg_extract(
    G: PairGraph,
    c_bsg: Optional[Fraction] = None,
    C_bsg: Optional[Fraction] = None,
) -> BsgResult:
    """
    Extrae (X', Y') por refinamiento de caminos de longitud 2.

    Para cada pivote y0 (en orden creciente):
        A  = N(y0) ∩ {x : deg x >= αn/2}
        X' = {x ∈ A : x tiene <= 4·malos/|A| compañeros malos en A}
        Y' = {y : |N(y) ∩ X'| >= α|X'|/4}
    donde un par (x, x') es malo si su codegree es < α³n/512. En el pivote
    de mayor Φ = |A|² - (64/α)·malos se tiene |X'| >= αn/5 y |Y'| >= αn/4.
    Se conserva el candidato que cumple ambas cotas y, después, el de mayor
    min(|X'|, |Y'|), menor |X'+Y'|, mayor Φ y menor pivote.

    Args:
        G: Grafo de pares que satisface la hipótesis.
        c_bsg, C_bsg: Constantes de las cotas; por defecto las de [bsg].

    Raises:
        HypothesisViolatedError: Si la suma toma más de n valores sobre E.

    Examples:
        >>> from lica.core.field import PrimeField
        >>> F = PrimeField(11)
        >>> X = ElementSet.of(F, range(4))
        >>> r = bsg_extract(PairGraph.from_sum_window(X, X, ElementSet.of(F, range(4))))
        >>> r.meets_bounds
        True
    """
    check_hypothesis(G)
    cfg = get_config().bsg
    c_bsg = as_fraction(c_bsg) if c_bsg is not None else cfg.c_bsg
    C_bsg = as_fraction(C_bsg) if C_bsg is not None else cfg.C_bsg

    n = G.n
    E = len(G.edges)
    M = G.biadjacency()
    deg = M.sum(axis=1)
    # deg >= αn/2  <=>  2n·deg >= |E|
    high = 2 * n * deg >= E
    codeg = M @ M.T
    # codeg < α³n/512 = |E|³/(512·n^5); con codeg entero basta el techo
    bad = codeg < -(-(E**3) // (_BAD_CODEGREE_DIVISOR * n**5))

    xs = np.asarray(G.X.elements)
    ys = np.asarray(G.Y.elements)
    best: Optional[Tuple[tuple, BsgResult]] = None
    for j, y0 in enumerate(G.Y.elements):
        A = np.flatnonzero(high & (M[:, j] > 0))
        if not len(A):
            continue
        bad_rows = bad[np.ix_(A, A)].sum(axis=1)
        bad_total = int(bad_rows.sum())
        score = Fraction(len(A) ** 2) - _BAD_PAIR_WEIGHT / G.alpha * bad_total
        keep = A[bad_rows * len(A) <= 4 * bad_total]
        hits = M[keep].sum(axis=0)
        # |N(y) ∩ X'| >= α|X'|/4  <=>  4·n²·hits >= |E|·|X'|
        y_keep = np.flatnonzero(4 * n * n * hits >= E * len(keep))

        candidate = _result(
            G,
            ElementSet(G.X.field, tuple(int(v) for v in xs[keep])),
            ElementSet(G.Y.field, tuple(int(v) for v in ys[y_keep])),
            y0,
            c_bsg,
            C_bsg,
            score,
        )
        logger.debug(
            "Pivote %d: |A|=%d, malos=%d, Φ=%s, |X'|=%d, |Y'|=%d, |X'+Y'|=%d",
            y0, len(A), bad_total, score, len(keep), len(y_keep), candidate.sumset_size,
        )
        key = (not candidate.meets_bounds, -candidate.min_size, candidate.sumset_size, -score, y0)
        if best is None or key < best[0]:
            best = (key, candidate)

    result = best[1]
    logger.info(
        "BSG: n=%d, α=%s, pivote=%s, |X'|/(αn)=%.4f, |Y'|/(αn)=%.4f, |X'+Y'|/(α^-5 n)=%.6f",
        n, result.alpha, result.pivot, result.size_ratio_x, result.size_ratio_y,
        result.sumset_ratio,
    )
    return result


def _low_index(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


def bsg_oracle(G: PairGraph, constant: Fraction = Fraction(1)) -> BsgResult:
    """
    Óptimo exhaustivo: el par (X', Y') que maximiza min(|X'|, |Y'|) con
    |X'+Y'| <= constant·α^{-5}·n.

    Los empates se resuelven por mayor |X'|+|Y'|, después menor |X'+Y'| y
    después el primer par en orden de máscaras (Y' y luego X').

    Raises:
        SearchTooLargeError: Si n excede el máximo configurado (8).
    """
    limit = get_config().bsg.oracle_max_n
    n = G.n
    if max(len(G.X), len(G.Y)) > limit:
        raise SearchTooLargeError(
            f"El oráculo BSG admite n <= {limit}, recibido: {max(len(G.X), len(G.Y))}"
        )
    constant = as_fraction(constant)
    bound = constant * G.alpha ** -5 * n
    p = G.X.p
    X, Y = G.X.elements, G.Y.elements

    position = {}
    bits: List[List[int]] = [
        [1 << position.setdefault((x + y) % p, len(position)) for y in Y] for x in X
    ]

    best_key = None
    best_pair = (0, 0)
    row = [[0] * len(X) for _ in range(1 << len(Y))]
    for ys in range(1, 1 << len(Y)):
        prev, j = row[ys & (ys - 1)], _low_index(ys)
        row[ys] = [prev[i] | bits[i][j] for i in range(len(X))]
        union = [0] * (1 << len(X))
        for xs in range(1, 1 << len(X)):
            union[xs] = union[xs & (xs - 1)] | row[ys][_low_index(xs)]
            size = union[xs].bit_count()
            if size > bound:
                continue
            a, b = xs.bit_count(), ys.bit_count()
            key = (min(a, b), a + b, -size)
            if best_key is None or key > best_key:
                best_key, best_pair = key, (xs, ys)

    if best_key is None:
        raise ValueError(f"Ningún par cumple |X'+Y'| <= {bound}")
    xs, ys = best_pair
    x_prime = ElementSet(G.X.field, tuple(X[i] for i in range(len(X)) if xs >> i & 1))
    y_prime = ElementSet(G.Y.field, tuple(Y[j] for j in range(len(Y)) if ys >> j & 1))
    cfg = get_config().bsg
    return _result(G, x_prime, y_prime, None, cfg.c_bsg, cfg.C_bsg)


@dataclass(frozen=True)
class BsgComparison:
    """Extractor frente a oráculo en una instancia pequeña."""

    extracted: BsgResult
    optimum: BsgResult
    ratio: Fraction
    within_band: bool


def compare_with_oracle(G: PairGraph) -> BsgComparison:
    """
    Ejecuta extractor y oráculo y compara sus tamaños mínimos.

    La banda de cordura min(|X'|,|Y'|) >= banda·óptimo solo se registra,
    no se exige.
    """
    extracted = bsg_extract(G)
    optimum = bsg_oracle(G)
    ratio = Fraction(extracted.min_size, optimum.min_size)
    band = get_config().bsg.sanity_band
    within = ratio >= band
    log = logger.info if within else logger.warning
    log(
        "BSG extractor/oráculo: %d/%d = %s (banda %s)",
        extracted.min_size, optimum.min_size, ratio, band,
    )
    return BsgComparison(extracted=extracted, optimum=optimum, ratio=ratio, within_band=within)
