"""Tests para el módulo core.beck_pipeline."""

import math
import time
from fractions import Fraction

import pytest

from lica.core.addcomb import ElementSet
from lica.core.beck_pipeline import (
    CASE_I,
    CASE_II,
    case_split,
    epsilon_from_delta,
    run_beck_pipeline,
    solutions_bssetup,
)
from lica.core.errors import (
    BadSlopeError,
    EmptyStageError,
    NotCartesianError,
    RangeWarning,
    TooSmallError,
)
from lica.core.field import make_field
from lica.core.generators import GeneratorSpec, generate_set
from lica.core.models import STATUS_COMPLETE, STATUS_TRUNCATED, BeckParams
from lica.infrastructure.file_io import TraceSerializer


@pytest.fixture
def F101():
    return make_field(101)


class TestEpsilonFromDelta:
    """Tests para epsilon_from_delta."""

    def test_default_delta(self):
        """δ = 1/267 da ε = 1/10678."""
        assert epsilon_from_delta(Fraction(1, 267)) == Fraction(1, 10678)

    def test_boundaries(self):
        """δ = 0 da 0 y δ = 1 da 1/38."""
        assert epsilon_from_delta(0) == 0
        assert epsilon_from_delta(1) == Fraction(1, 38)

    def test_string_and_float(self):
        """Las cadenas son exactas; los flotantes se conservan flotantes."""
        assert epsilon_from_delta("1/2") == Fraction(1, 78)
        assert epsilon_from_delta(0.5) == pytest.approx(1 / 78)

    def test_out_of_range(self):
        """Prueba que δ fuera de [0, 1] se rechaza."""
        with pytest.raises(ValueError, match="δ debe estar en"):
            epsilon_from_delta(2)


class TestSolutions:
    """Tests para solutions_bssetup."""

    def test_single_element(self, F101):
        """Con A1 = {3} y b = 1: 3 + 3 = 2·3."""
        assert solutions_bssetup(ElementSet.of(F101, [3]), None, 1) == 1

    def test_interval(self, F101):
        """x1 + x2 ∈ {0, 2, 4} con x1, x2 ∈ {0, 1, 2}: 5 pares."""
        assert solutions_bssetup(ElementSet.of(F101, range(3)), None, 1) == 5

    @pytest.mark.parametrize("b", [0, 100, 202])
    def test_degenerate_slopes(self, F101, b):
        """b = 0 y b = -1 corresponden a y3 ∈ {0, 1}."""
        with pytest.raises(BadSlopeError, match="y3 ∈"):
            solutions_bssetup(ElementSet.of(F101, range(3)), None, b)

    def test_slope_outside_a2(self, F101):
        """b = 1 corresponde a y3 = 1/2, que no está en {0, 1}."""
        A = ElementSet.of(F101, [0, 1])
        with pytest.raises(BadSlopeError, match="no está en A2"):
            solutions_bssetup(A, A, 1)


class TestCaseSplit:
    """Tests para case_split."""

    def test_case_two(self, F101):
        """{0, 1}: R = {0, 1, -1}, ξ = 2 y |Y1 + 2Y1| = 4 = |Y1|²."""
        split = case_split(ElementSet.of(F101, [0, 1]))
        assert split.case == CASE_II
        assert split.ratio_set_size == 3
        assert split.xi == 2
        assert split.r == 1
        assert split.quadruple == (0, 1, 0, 1)
        assert split.certificate_holds

    def test_case_one(self):
        """{0, 1, 2} en F_7: R = F_7 y ξ = 2 maximiza |Y1 + ξY1| = 7."""
        split = case_split(ElementSet.of(make_field(7), [0, 1, 2]))
        assert split.case == CASE_I
        assert split.ratio_set_size == 7
        assert split.xi == 2
        assert split.r == 2
        assert split.sumset_size == 7

    def test_quadruple_realizes_r(self, F101):
        """(a - b)/(c - d) = r para la cuádrupla devuelta."""
        split = case_split(ElementSet.of(F101, [1, 5, 17, 40]))
        a, b, c, d = split.quadruple
        assert c != d
        assert (a - b) * pow(c - d, -1, 101) % 101 == split.r

    def test_too_small(self, F101):
        """Prueba que |Y1| < 2 se rechaza."""
        with pytest.raises(TooSmallError):
            case_split(ElementSet.of(F101, [4]))


class TestRunBeckPipeline:
    """Tests para run_beck_pipeline."""

    def test_two_by_two_grid_truncates(self):
        """{0, 1}² no tiene rectas de 3 puntos: la traza se trunca en rich_lines."""
        A = ElementSet.of(make_field(11), [0, 1])
        trace = run_beck_pipeline(A, A, BeckParams())
        assert trace.status == STATUS_TRUNCATED
        assert trace.empty_stage == "rich_lines"
        assert trace.stage_names == ["lines"]
        assert trace.stage("lines").measured == 6
        assert trace.delta_eff == pytest.approx((math.log2(6) - 2) / 2)
        assert trace.verdict is True
        assert trace.in_range

    def test_strict_raises_on_empty_stage(self):
        """Con strict=True la etapa vacía se propaga."""
        A = ElementSet.of(make_field(11), [0, 1])
        with pytest.raises(EmptyStageError) as excinfo:
            run_beck_pipeline(A, A, BeckParams(), strict=True)
        assert excinfo.value.stage == "rich_lines"

    def test_interval_grid(self, F101):
        """Una rejilla {0..7}² recorre las etapas en orden y sus identidades exactas se cumplen."""
        A = ElementSet.of(F101, range(8))
        trace = run_beck_pipeline(A, A, BeckParams())
        assert trace.status in (STATUS_COMPLETE, STATUS_TRUNCATED)
        assert trace.stage_names[:2] == ["lines", "rich_lines"]
        assert trace.stage("lines").checks == {"pair_conservation": True}
        assert trace.stage("rich_lines").checks == {"triples_det_matches_lines": True}
        assert trace.stage("rich_lines").details["threshold"] == 8
        if trace.status == STATUS_COMPLETE:
            assert trace.stage_names[-1] == "verdict"

    def test_range_warning(self):
        """n >= √p emite RangeWarning y el pipeline continúa."""
        A = ElementSet.of(make_field(3), [0, 1])
        with pytest.warns(RangeWarning, match="√p"):
            trace = run_beck_pipeline(A, A, BeckParams())
        assert not trace.in_range
        assert trace.empty_stage == "rich_lines"

    def test_unequal_sizes(self, F101):
        """Prueba que |A1| != |A2| se rechaza."""
        with pytest.raises(NotCartesianError):
            run_beck_pipeline(ElementSet.of(F101, [0, 1]), ElementSet.of(F101, [0, 1, 2]))

    def test_too_small(self, F101):
        """Prueba que n < 2 se rechaza."""
        A = ElementSet.of(F101, [0])
        with pytest.raises(TooSmallError):
            run_beck_pipeline(A, A)

    def test_expired_deadline(self, F101):
        """Un presupuesto agotado aborta entre etapas."""
        A = ElementSet.of(F101, range(4))
        with pytest.raises(TimeoutError, match="Presupuesto agotado"):
            run_beck_pipeline(A, A, BeckParams(), deadline=time.monotonic() - 1)

    def test_parallel_matches_serial(self, F101):
        """La traza no depende del número de procesos."""
        A = ElementSet.of(F101, range(9))
        serial = run_beck_pipeline(A, A, BeckParams())
        parallel = run_beck_pipeline(A, A, BeckParams(), workers=2)
        assert serial.stage_names == parallel.stage_names
        assert [s.measured for s in serial.stages] == [s.measured for s in parallel.stages]


BECK_STAGES = [
    "lines",
    "rich_lines",
    "fixed_pair",
    "slopes",
    "popular_slopes",
    "bsg",
    "b_star",
    "popular_intersections",
    "sumset_chain",
    "dilate_sumset",
    "pair_equation",
    "fixed_translates",
    "slope_lines",
    "vertical_line",
    "case_split",
    "covering",
    "half_subsets",
    "final_chain",
    "verdict",
]


@pytest.fixture(scope="module")
def F1009():
    return make_field(1009)


@pytest.fixture(scope="module")
def interval16(F1009):
    return ElementSet.of(F1009, range(16))


@pytest.fixture(scope="module")
def geometric16(F1009):
    return generate_set(GeneratorSpec("geometric_progression", p=1009, size=16))


def _assert_sound(trace):
    """Orden de etapas, truncamiento etiquetado y comprobaciones exactas."""
    names = trace.stage_names
    assert names == BECK_STAGES[: len(names)]
    if trace.status == STATUS_TRUNCATED:
        assert trace.empty_stage == BECK_STAGES[len(names)]
    else:
        assert trace.status == STATUS_COMPLETE
        assert names == BECK_STAGES
    assert trace.checks_pass, trace.failed_checks
    if "pair_equation" in names:
        stage = trace.stage("pair_equation")
        assert stage.checks["cauchy_schwarz_lower_bound"]
        assert stage.measured >= stage.predicted
    if "case_split" in names and trace.case == CASE_II:
        stage = trace.stage("case_split")
        assert stage.checks["sq_certificate"]
        assert stage.measured == stage.payload_sizes["Y1"] ** 2


class TestLargerInstances:
    """Pipeline sobre n = 16 en F_1009, dentro del rango n < √p."""

    def test_geometric_progression_has_sixteen_terms(self, geometric16):
        assert len(geometric16) == 16
        assert geometric16.elements[:4] == (1, 2, 4, 8)

    def test_interval(self, interval16):
        """A = {0..15}: la rejilla tiene rectas de 16 puntos y δ_eff se mide."""
        trace = run_beck_pipeline(interval16, interval16, BeckParams())
        assert trace.in_range
        assert trace.stage("rich_lines").details["threshold"] == 16
        _assert_sound(trace)

    def test_geometric_progression(self, geometric16):
        """Progresión geométrica de razón 2 y longitud 16."""
        trace = run_beck_pipeline(geometric16, geometric16, BeckParams())
        assert trace.in_range
        _assert_sound(trace)

    @pytest.mark.parametrize("name", ["interval16", "geometric16"])
    def test_trace_independent_of_workers(self, name, request):
        """La traza JSON es idéntica byte a byte con 1 y 8 procesos."""
        A = request.getfixturevalue(name)
        serial = run_beck_pipeline(A, A, BeckParams(), workers=1)
        parallel = run_beck_pipeline(A, A, BeckParams(), workers=8)
        assert TraceSerializer.dumps(serial) == TraceSerializer.dumps(parallel)
