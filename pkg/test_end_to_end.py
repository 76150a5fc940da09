#!/usr/bin/env python3
"""
Script de prueba end-to-end para LICA.
Recorre conteo de rectas, pipeline de Beck, pipeline de incidencias y un
barrido pequeño, y verifica sus identidades exactas.
"""

import sys
import tempfile
import warnings
from pathlib import Path

# Agregar src al path
sys.path.insert(0, str(Path(__file__).parent / "src"))

from lica.app.facade import ApplicationFacade
from lica.core.errors import RangeWarning
from lica.core.field import make_field
from lica.core.geometry import projective_lines, projective_points
from lica.core.incidence import LineSet, PointSet
from lica.infrastructure.config import get_config
from lica.infrastructure.file_io import RunRecordStore


def test_lab_pipeline():
    """Prueba el laboratorio completo sobre instancias pequeñas."""

    print("=" * 70)
    print("PRUEBA END-TO-END: Laboratorio LICA")
    print("=" * 70)

    # 1. Cargar configuración
    print("\n[1/5] Cargando configuración...")
    try:
        config = get_config()
        print(f"✅ Configuración cargada: δ = {config.beck.delta}, ε = {config.incidence.epsilon}")
    except Exception as e:
        print(f"❌ Error al cargar configuración: {e}")
        return False

    facade = ApplicationFacade(threads=1)

    try:
        # 2. Rectas generadas por una rejilla
        print("\n[2/5] Rectas generadas por {0, 1, 2}² en F_11...")
        A = facade.build_set(11, elements=[0, 1, 2])
        lines = facade.lines(A)
        assert lines["line_count"] == 20, lines
        print(f"✅ |L(A×A)| = {lines['line_count']}, δ_eff = {lines['delta_eff']:.4f}")

        # 3. Pipeline de rectas generadas
        print("\n[3/5] Pipeline de rectas generadas sobre {0..7}² en F_101...")
        B = facade.build_set(101, elements=range(8))
        beck = facade.beck_pipeline(B, B)
        print(f"✅ Estado: {beck.status}, etapas: {len(beck.stages)}, veredicto: {beck.verdict}")
        for name, failed in beck.failed_checks.items():
            print(f"   ⚠️  {name}: {failed}")

        # 4. Pipeline de incidencias sobre el plano completo
        print("\n[4/5] Pipeline de incidencias sobre P²(F_7)...")
        F = make_field(7)
        P = PointSet(F, tuple(projective_points(F)))
        L = LineSet(F, tuple(projective_lines(F)))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RangeWarning)
            incidence = facade.incidence_pipeline(P, L)
        assert incidence.incidences == 456, incidence.incidences
        assert incidence.checks_pass, incidence.failed_checks
        print(f"✅ I(P, L) = {incidence.incidences}, rejilla {len(incidence.grid['A'])}×{len(incidence.grid['B'])}")

        # 5. Barrido exhaustivo
        print("\n[5/5] Barrido exhaustivo |A| = 3 en F_11...")
        with tempfile.TemporaryDirectory() as d:
            scan_path = Path(d) / "scan.toml"
            scan_path.write_text("[scan]\nprimes = [11]\nsizes = [3]\n", encoding="utf-8")
            outcome = facade.scan(scan_path, Path(d), threads=1)
            record = RunRecordStore.load(outcome["path"])
        assert len(record.instances) == 165
        summary = record.aggregates["line_count"]
        print(f"✅ {len(record.instances)} instancias, min |L| = {summary.min:.0f} en {summary.argmin}")

        print("\n" + "=" * 70)
        print("✅ PRUEBA END-TO-END COMPLETADA EXITOSAMENTE")
        print("=" * 70)
        return True

    except Exception as e:
        print(f"\n❌ Error durante la prueba: {e}")
        import traceback
        traceback.print_exc()
        return False


if __name__ == "__main__":
    success = test_lab_pipeline()
    sys.exit(0 if success else 1)
