"""Tests para el módulo core.geometry."""

import itertools

import pytest

from lica.core.errors import CoincidentPointsError, DegenerateMapError, FieldMismatchError
from lica.core.field import make_field
from lica.core.geometry import (
    AffinePoint,
    Line,
    ProjLine,
    ProjPoint,
    ProjectiveMap,
    affine_lines,
    apply_map,
    apply_map_line,
    canonical_triple,
    embed,
    line_through,
    map_to_infinity,
    on_line,
    proj_line_through,
    projective_lines,
    projective_points,
    projective_triple_from_index,
    projective_triples,
    to_affine,
)


@pytest.fixture
def F7():
    return make_field(7)


class TestCanonicalForms:
    """Tests para la forma canónica de puntos y rectas."""

    def test_canonical_triple_scales_leading_coordinate(self):
        """La coordenada no nula más a la izquierda pasa a ser 1."""
        assert canonical_triple((0, 3, 6), 7) == (0, 1, 2)
        assert canonical_triple((2, 4, 6), 7) == (1, 2, 3)

    def test_zero_vector_raises_error(self):
        """Prueba que el vector nulo se rechaza."""
        with pytest.raises(ValueError, match="no puede ser nulo"):
            canonical_triple((0, 7, 14), 7)

    def test_projective_point_equality_up_to_scalar(self, F7):
        """[1:2:3] y [2:4:6] son el mismo punto."""
        assert ProjPoint((1, 2, 3), F7) == ProjPoint((2, 4, 6), F7)
        assert len({ProjPoint((1, 2, 3), F7), ProjPoint((3, 6, 2), F7)}) == 1

    def test_affine_line_canonical(self, F7):
        """2x + 4y + 6 = 0 se normaliza a x + 2y + 3 = 0."""
        line = Line(2, 4, 6, F7)
        assert line.coefficients == (1, 2, 3)
        assert not line.is_horizontal

    def test_horizontal_line(self, F7):
        """0x + 3y + 1 = 0 se normaliza con b = 1."""
        line = Line(0, 3, 1, F7)
        assert line.coefficients == (0, 1, 5)
        assert line.is_horizontal

    def test_degenerate_line_raises_error(self, F7):
        """Prueba que (a, b) = (0, 0) no es una recta afín."""
        with pytest.raises(ValueError, match=r"\(a, b\) != \(0, 0\)"):
            Line(0, 0, 1, F7)


class TestLinesThroughPoints:
    """Tests para line_through y proj_line_through."""

    def test_line_through_example(self, F7):
        """La recta por (0, 1) y (1, 3) es x + 3y + 4 = 0."""
        line = line_through(AffinePoint.of(F7, 0, 1), AffinePoint.of(F7, 1, 3))
        assert line.coefficients == (1, 3, 4)

    def test_line_through_contains_both_points(self, F7):
        """Para todo par de puntos distintos la recta contiene a ambos."""
        points = [AffinePoint.of(F7, x, y) for x in range(3) for y in range(3)]
        for p1, p2 in itertools.combinations(points, 2):
            line = line_through(p1, p2)
            assert on_line(p1, line) and on_line(p2, line)

    def test_coincident_points_raise_error(self, F7):
        """Prueba que dos puntos iguales no definen recta."""
        pt = AffinePoint.of(F7, 2, 5)
        with pytest.raises(CoincidentPointsError, match="coinciden"):
            line_through(pt, AffinePoint.of(F7, 9, 12))
        with pytest.raises(CoincidentPointsError):
            proj_line_through(embed(pt), ProjPoint((4, 10, 2), F7))

    def test_mismatched_fields_raise_error(self, F7):
        """Prueba que los puntos deben compartir módulo."""
        with pytest.raises(FieldMismatchError):
            line_through(AffinePoint.of(F7, 0, 0), AffinePoint.of(make_field(11), 1, 1))

    def test_line_at_infinity(self):
        """[1:0:0] y [0:1:0] generan la recta Z = 0."""
        F = make_field(5)
        line = proj_line_through(ProjPoint((1, 0, 0), F), ProjPoint((0, 1, 0), F))
        assert line.coords == (0, 0, 1)

    def test_embed_and_to_affine(self, F7):
        """La carta Z = 1 invierte la inmersión."""
        pt = AffinePoint.of(F7, 3, 4)
        assert to_affine(embed(pt)) == pt
        assert to_affine(ProjPoint((6, 8, 2), F7)).coords == (3, 4)

    def test_to_affine_at_infinity_raises_error(self, F7):
        """Prueba que un punto del infinito no tiene carta afín."""
        with pytest.raises(ValueError, match="infinito"):
            to_affine(ProjPoint((1, 2, 0), F7))


class TestEnumerations:
    """Tests para la enumeración de P²(F_p) y F_p²."""

    @pytest.mark.parametrize("p", [3, 5, 7])
    def test_projective_plane_sizes(self, p):
        """P²(F_p) tiene p² + p + 1 puntos y rectas, cada recta con p + 1 puntos."""
        fld = make_field(p)
        points = list(projective_points(fld))
        lines = list(projective_lines(fld))
        assert len(points) == len(set(points)) == p * p + p + 1
        assert len(lines) == p * p + p + 1
        assert all(sum(line.contains(pt) for pt in points) == p + 1 for line in lines)

    def test_triple_from_index_matches_enumeration(self):
        """projective_triple_from_index reproduce el orden de projective_triples."""
        for p in (3, 5):
            assert [projective_triple_from_index(i, p) for i in range(p * p + p + 1)] == list(
                projective_triples(p)
            )

    def test_triple_index_out_of_range(self):
        """Prueba que un índice fuera de rango se rechaza."""
        with pytest.raises(ValueError, match="fuera de rango"):
            projective_triple_from_index(13, 3)

    def test_affine_lines(self, F7):
        """F_p² tiene p² + p rectas, cada una con p puntos."""
        lines = affine_lines(F7)
        assert len(lines) == len(set(lines)) == 56
        assert sum(on_line(AffinePoint.of(F7, 2, 3), line) for line in lines) == 8


class TestProjectiveMap:
    """Tests para ProjectiveMap y map_to_infinity."""

    def test_singular_matrix_raises_error(self, F7):
        """Prueba que una matriz singular se rechaza."""
        with pytest.raises(DegenerateMapError, match="no es invertible"):
            ProjectiveMap(((1, 2, 3), (2, 4, 6), (0, 0, 1)), F7)

    def test_inverse_composes_to_identity(self, F7):
        """M ∘ M^{-1} es un múltiplo de la identidad."""
        m = ProjectiveMap(((1, 2, 0), (0, 1, 3), (4, 0, 1)), F7)
        assert m.compose(m.inverse()).is_projective_identity()

    def test_map_preserves_incidence(self, F7):
        """Puntos y rectas transformados conservan la incidencia."""
        m = ProjectiveMap(((2, 1, 0), (0, 1, 5), (1, 0, 3)), F7)
        points = list(projective_points(F7))
        for line in list(projective_lines(F7))[:10]:
            image = apply_map_line(m, line)
            for pt in points:
                assert line.contains(pt) == image.contains(apply_map(m, pt))

    def test_identity_when_already_at_infinity(self, F7):
        """Si pbar = [0:1:0] y ptil = [1:0:0] la transformación es la identidad."""
        m = map_to_infinity(ProjPoint((0, 1, 0), F7), ProjPoint((1, 0, 0), F7))
        assert m.is_projective_identity()

    @pytest.mark.parametrize(
        "pbar,ptil",
        [((0, 0, 1), (1, 1, 1)), ((1, 2, 1), (3, 5, 1)), ((1, 4, 0), (0, 1, 6))],
    )
    def test_map_to_infinity(self, F7, pbar, ptil):
        """pbar va a [0:1:0], ptil a [1:0:0] y las rectas por ellos quedan verticales y horizontales."""
        Pbar, Ptil = ProjPoint(pbar, F7), ProjPoint(ptil, F7)
        m = map_to_infinity(Pbar, Ptil)
        assert apply_map(m, Pbar).coords == (0, 1, 0)
        assert apply_map(m, Ptil).coords == (1, 0, 0)
        for line in projective_lines(F7):
            if line.contains(Pbar):
                assert apply_map_line(m, line).coords[1] == 0
            if line.contains(Ptil):
                assert apply_map_line(m, line).coords[0] == 0

    def test_map_to_infinity_coincident_raises_error(self, F7):
        """Prueba que pbar = ptil se rechaza."""
        pt = ProjPoint((1, 1, 1), F7)
        with pytest.raises(CoincidentPointsError):
            map_to_infinity(pt, pt)

    def test_projline_contains_checks_field(self, F7):
        """Prueba que contains rechaza puntos de otro cuerpo."""
        with pytest.raises(FieldMismatchError):
            ProjLine((1, 0, 0), F7).contains(ProjPoint((0, 1, 0), make_field(5)))
