"""Tests para el módulo core.incidence."""

import math
from fractions import Fraction

import numpy as np
import pytest

from lica.core.addcomb import ElementSet
from lica.core.errors import NotCartesianError, TooFewPointsError
from lica.core.field import make_field
from lica.core.geometry import (
    AffinePoint,
    ProjPoint,
    affine_lines,
    affine_points,
    projective_lines,
    projective_points,
)
from lica.core.incidence import (
    LineSet,
    PointSet,
    beck_delta_effective,
    collinear_triples_det,
    collinear_triples_via_lines,
    count_incidences,
    incidence_matrix,
    incidence_ratio,
    rich_lines,
    spanned_lines,
)


@pytest.fixture
def grid_3x3():
    """Rejilla {0, 1, 2}² en F_11."""
    F = make_field(11)
    A = ElementSet.of(F, range(3))
    return PointSet.cartesian(A, A)


@pytest.fixture
def irregular_points():
    """Puntos afines sin estructura en F_13."""
    F = make_field(13)
    coords = [(0, 0), (1, 2), (2, 4), (3, 6), (5, 1), (7, 7), (9, 3), (12, 11), (4, 8), (6, 0)]
    return PointSet.affine(F, coords)


class TestPointAndLineSets:
    """Tests para PointSet y LineSet."""

    def test_deduplication_and_order(self):
        """Los puntos se deduplican y ordenan."""
        F = make_field(7)
        P = PointSet.affine(F, [(3, 1), (0, 2), (10, 8)])
        assert [pt.coords for pt in P] == [(0, 2), (3, 1)]
        assert AffinePoint.of(F, 3, 1) in P

    def test_mixed_kinds_raise_error(self):
        """Prueba que no se mezclan puntos afines y proyectivos."""
        F = make_field(7)
        with pytest.raises(ValueError, match="mezclar"):
            PointSet(F, (AffinePoint.of(F, 0, 0), ProjPoint((0, 0, 1), F)))

    def test_grid_factors(self, grid_3x3):
        """Una rejilla A1 × A2 recupera sus factores."""
        A1, A2 = grid_3x3.grid_factors()
        assert A1.elements == A2.elements == (0, 1, 2)

    def test_grid_factors_of_non_grid(self):
        """Un conjunto que no es producto cartesiano devuelve None."""
        F = make_field(7)
        assert PointSet.affine(F, [(0, 0), (1, 1)]).grid_factors() is None

    def test_projective_line_set(self):
        """Las rectas proyectivas se canonizan al construir."""
        F = make_field(5)
        L = LineSet.projective(F, [(2, 4, 0), (1, 2, 0), (0, 0, 3)])
        assert len(L) == 2
        assert L.is_projective


class TestSpannedLines:
    """Tests para spanned_lines."""

    def test_unit_square(self):
        """Los cuatro vértices de un cuadrado generan 6 rectas de 2 puntos."""
        F = make_field(5)
        M = spanned_lines(PointSet.affine(F, [(0, 0), (0, 1), (1, 0), (1, 1)]))
        assert len(M) == 6
        assert M.histogram() == {2: 6}

    def test_grid_3x3(self, grid_3x3):
        """La rejilla 3×3 tiene 8 rectas de 3 puntos y 12 de 2."""
        M = spanned_lines(grid_3x3)
        assert len(M) == 20
        assert M.histogram() == {2: 12, 3: 8}
        assert M.pair_total() == 36

    def test_pair_conservation(self, irregular_points):
        """Σ C(k_l, 2) = C(|P|, 2)."""
        M = spanned_lines(irregular_points)
        n = len(irregular_points)
        assert M.pair_total() == n * (n - 1) // 2
        assert all(k >= 2 for k in M.values())

    def test_projective_points(self):
        """Todos los puntos de P²(F_3) generan las 13 rectas, cada una con 4 puntos."""
        F = make_field(3)
        M = spanned_lines(PointSet(F, tuple(projective_points(F))))
        assert len(M) == 13
        assert set(M.values()) == {4}

    def test_parallel_workers_match_serial(self):
        """El resultado no depende del número de procesos."""
        F = make_field(101)
        A = ElementSet.of(F, range(9))
        P = PointSet.cartesian(A, A)
        serial = spanned_lines(P)
        parallel = spanned_lines(P, workers=2)
        assert dict(serial) == dict(parallel)

    def test_too_few_points_raises_error(self):
        """Prueba que |P| < 2 lanza TooFewPointsError."""
        F = make_field(7)
        with pytest.raises(TooFewPointsError, match="al menos 2"):
            spanned_lines(PointSet.affine(F, [(1, 1)]))

    def test_rich_lines(self, grid_3x3):
        """Las rectas con al menos 3 puntos son las 8 de la rejilla."""
        assert len(rich_lines(grid_3x3, 3)) == 8
        assert len(rich_lines(grid_3x3, 4)) == 0

    def test_rich_lines_threshold_too_small(self, grid_3x3):
        """Prueba que t < 2 se rechaza."""
        with pytest.raises(ValueError, match=">= 2"):
            rich_lines(grid_3x3, 1)


class TestIncidences:
    """Tests para count_incidences e incidence_matrix."""

    @pytest.mark.parametrize("p", [3, 5])
    def test_projective_plane(self, p):
        """P²(F_p) tiene (p² + p + 1)(p + 1) incidencias."""
        F = make_field(p)
        P = PointSet(F, tuple(projective_points(F)))
        L = LineSet(F, tuple(projective_lines(F)))
        expected = (p * p + p + 1) * (p + 1)
        assert count_incidences(P, L) == expected
        assert count_incidences(P, L, method="naive") == expected
        assert int(incidence_matrix(P, L).sum()) == expected

    def test_affine_plane(self):
        """F_3² con sus 12 rectas tiene 36 incidencias."""
        F = make_field(3)
        P = PointSet(F, tuple(affine_points(F)))
        L = LineSet(F, tuple(affine_lines(F)))
        assert count_incidences(P, L) == 36

    def test_methods_agree_on_partial_sets(self):
        """Los métodos coinciden con puntos del infinito y subconjuntos."""
        F = make_field(7)
        points = list(projective_points(F))
        lines = list(projective_lines(F))
        P = PointSet(F, tuple(points[::3]))
        L = LineSet(F, tuple(lines[1::2]))
        bucketed = count_incidences(P, L)
        assert bucketed == count_incidences(P, L, method="naive")
        assert bucketed == int(incidence_matrix(P, L).sum())

    def test_matrix_shape_and_dtype(self):
        """La matriz es booleana |P|×|L|."""
        F = make_field(5)
        P = PointSet(F, tuple(projective_points(F)))
        L = LineSet(F, tuple(projective_lines(F))[:4])
        M = incidence_matrix(P, L)
        assert M.shape == (31, 4)
        assert M.dtype == np.bool_

    def test_incompatible_kinds_raise_error(self):
        """Prueba que puntos afines y rectas proyectivas no se combinan."""
        F = make_field(5)
        P = PointSet.affine(F, [(0, 0)])
        L = LineSet.projective(F, [(1, 0, 0)])
        with pytest.raises(ValueError, match="ambos afines"):
            count_incidences(P, L)

    def test_unknown_method_raises_error(self):
        """Prueba que un método desconocido se rechaza."""
        F = make_field(3)
        P = PointSet(F, tuple(projective_points(F)))
        L = LineSet(F, tuple(projective_lines(F)))
        with pytest.raises(ValueError, match="desconocido"):
            count_incidences(P, L, method="fft")

    def test_incidence_ratio(self):
        """I / n^{3/2 - ε}."""
        assert incidence_ratio(52, 13, Fraction(1, 4)) == pytest.approx(52 / 13**1.25)
        with pytest.raises(ValueError, match="positivo"):
            incidence_ratio(1, 0)


class TestCollinearTriples:
    """Tests para el conteo de ternas colineales."""

    def test_grid_3x3(self, grid_3x3):
        """8 rectas de 3 puntos dan 8·6 = 48 ternas ordenadas."""
        assert collinear_triples_det(grid_3x3) == 48
        assert collinear_triples_via_lines(spanned_lines(grid_3x3)) == 48

    def test_methods_agree(self, irregular_points):
        """El determinante y las multiplicidades coinciden."""
        assert collinear_triples_det(irregular_points) == collinear_triples_via_lines(
            spanned_lines(irregular_points)
        )

    def test_random_point_sets(self):
        """200 conjuntos aleatorios (|P| <= 12, 11 <= p <= 31): ternas y pares coinciden."""
        primes = [11, 13, 17, 19, 23, 29, 31]
        rng = np.random.default_rng(11)
        for _ in range(200):
            p = int(rng.choice(primes))
            F = make_field(p)
            size = int(rng.integers(2, 13))
            coords = [divmod(int(i), p) for i in rng.choice(p * p, size=size, replace=False)]
            P = PointSet.affine(F, coords)
            multiplicities = spanned_lines(P)
            assert collinear_triples_det(P) == collinear_triples_via_lines(multiplicities), (p, coords)
            assert multiplicities.pair_total() == math.comb(size, 2)

    def test_fewer_than_three_points(self):
        """Con menos de 3 puntos no hay ternas."""
        F = make_field(7)
        assert collinear_triples_det(PointSet.affine(F, [(0, 0), (1, 1)])) == 0

    def test_projective_points_raise_error(self):
        """Prueba que el conteo por determinante requiere puntos afines."""
        F = make_field(3)
        with pytest.raises(ValueError, match="afines"):
            collinear_triples_det(PointSet(F, tuple(projective_points(F))))


class TestBeckDeltaEffective:
    """Tests para beck_delta_effective."""

    def test_unit_square(self):
        """{0, 1}²: 6 rectas y δ_eff = (log₂6 - 2)/2."""
        F = make_field(3)
        report = beck_delta_effective(PointSet.affine(F, [(0, 0), (0, 1), (1, 0), (1, 1)]))
        assert report.n == 2
        assert report.line_count == 6
        assert report.delta_eff == pytest.approx((math.log2(6) - 2) / 2)
        assert not report.in_range

    def test_in_range(self):
        """n² < p marca la instancia dentro del rango."""
        F = make_field(101)
        A = ElementSet.of(F, [0, 1, 5])
        report = beck_delta_effective(PointSet.cartesian(A, A))
        assert report.in_range
        assert report.theorem_ratio == pytest.approx(report.line_count / 9 ** (1 + 1 / 267))

    def test_non_grid_raises_error(self):
        """Prueba que un conjunto que no es rejilla se rechaza."""
        F = make_field(7)
        with pytest.raises(NotCartesianError, match="producto cartesiano"):
            beck_delta_effective(PointSet.affine(F, [(0, 0), (1, 1)]))

    def test_rectangular_grid_raises_error(self):
        """Prueba que |A1| != |A2| se rechaza."""
        F = make_field(7)
        P = PointSet.cartesian(ElementSet.of(F, [0, 1]), ElementSet.of(F, [0, 1, 2]))
        with pytest.raises(NotCartesianError, match="\\|A1\\| = \\|A2\\|"):
            beck_delta_effective(P)
