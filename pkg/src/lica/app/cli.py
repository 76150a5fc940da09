"""
Interfaz de línea de comandos de LICA.

Subcomandos: lines, incidences, sum-product, beck-pipeline,
incidence-pipeline, bsg y scan. Los resultados se escriben como JSON en la
salida estándar (o en --json) y, con --csv, también como CSV.

Códigos de salida: 0 éxito, 1 uso incorrecto, 2 error de entrada o de
esquema, 3 error de cálculo en una instancia.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

from lica import __version__
from lica.app.facade import ApplicationFacade, FacadeComputationError, FacadeValidationError
from lica.core.errors import CorruptRecordError, SchemaMismatchError
from lica.core.models import Trace
from lica.infrastructure.config import get_config, reload_config
from lica.infrastructure.file_io import (
    ResultsExporter,
    TraceSerializer,
    load_coordinates,
    load_integers,
    load_json,
    to_jsonable,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_COMPUTATION = 3


class _Parser(argparse.ArgumentParser):
    """ArgumentParser cuyos errores de uso terminan con código 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# Salida
# ---------------------------------------------------------------------------


def _write_json(payload: Any, out: Optional[Path]) -> None:
    text = json.dumps(to_jsonable(payload), sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _emit_trace(args: argparse.Namespace, trace: Trace) -> None:
    if args.json is None:
        sys.stdout.write(TraceSerializer.dumps(trace))
    else:
        TraceSerializer.save(trace, args.json)
    if args.csv is not None:
        ResultsExporter.export_stages_to_csv(trace, args.csv)


def _emit_row(args: argparse.Namespace, payload: Dict[str, Any]) -> None:
    _write_json(payload, getattr(args, "json", None))
    if args.csv is not None:
        flat = {k: v for k, v in payload.items() if not isinstance(v, (dict, list))}
        ResultsExporter.export_rows_to_csv([flat], args.csv)


# ---------------------------------------------------------------------------
# Subcomandos
# ---------------------------------------------------------------------------


def _read_set(facade: ApplicationFacade, args: argparse.Namespace, path_attr: str = "set"):
    path = getattr(args, path_attr, None)
    generator = getattr(args, "gen", None)
    if path is None and generator is None:
        raise FacadeValidationError("Indique --set FILE o --gen SPEC")
    if path is not None:
        return facade.build_set(args.prime, elements=load_integers(path))
    spec_path = Path(generator)
    spec = load_json(spec_path) if spec_path.exists() else json.loads(generator)
    return facade.build_set(args.prime, generator=spec, seed=args.seed)


def _cmd_lines(facade: ApplicationFacade, args: argparse.Namespace) -> None:
    _emit_row(args, facade.lines(_read_set(facade, args)))


def _points_and_lines(facade: ApplicationFacade, args: argparse.Namespace):
    point_coords = load_coordinates(args.points)
    P = facade.build_points(args.prime, point_coords)
    affine = bool(point_coords) and len(point_coords[0]) == 2
    L = facade.build_lines(args.prime, load_coordinates(args.lines), affine=affine)
    return P, L


def _cmd_incidences(facade: ApplicationFacade, args: argparse.Namespace) -> None:
    P, L = _points_and_lines(facade, args)
    _emit_row(args, facade.incidences(P, L))


def _cmd_sum_product(facade: ApplicationFacade, args: argparse.Namespace) -> None:
    _emit_row(args, facade.sum_product(_read_set(facade, args)))


def _cmd_beck_pipeline(facade: ApplicationFacade, args: argparse.Namespace) -> None:
    A1 = facade.build_set(args.prime, elements=load_integers(args.set_a))
    A2 = facade.build_set(args.prime, elements=load_integers(args.set_b))
    params = load_json(args.params) if args.params is not None else None
    if params is not None and not isinstance(params, dict):
        raise FacadeValidationError(f"--params debe contener un objeto JSON: {args.params}")
    _emit_trace(args, facade.beck_pipeline(A1, A2, delta=args.delta, params=params, strict=args.strict))


def _cmd_incidence_pipeline(facade: ApplicationFacade, args: argparse.Namespace) -> None:
    P, L = _points_and_lines(facade, args)
    _emit_trace(args, facade.incidence_pipeline(P, L, epsilon=args.epsilon, strict=args.strict))


def _cmd_bsg(facade: ApplicationFacade, args: argparse.Namespace) -> None:
    instance = load_json(args.instance)
    if not isinstance(instance, dict):
        raise FacadeValidationError(f"La instancia debe ser un objeto JSON: {args.instance}")
    _emit_row(args, facade.bsg(instance, compare=args.compare))


def _cmd_scan(facade: ApplicationFacade, args: argparse.Namespace) -> None:
    outcome = facade.scan(args.scan_config, args.out, threads=args.threads, seed=args.seed)
    record = outcome["record"]
    if args.csv is not None:
        ResultsExporter.export_instances_to_csv(record.instances, args.csv)
    summary = {
        "path": str(outcome["path"]),
        "instances": len(record.instances),
        "aggregates": record.model_dump(mode="json")["aggregates"],
        "verdicts": record.verdicts,
    }
    _write_json(summary, None)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="lica",
        description="Laboratorio de incidencias y combinatoria aditiva sobre F_p.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--seed", type=int, default=None, help="Semilla maestra (por defecto [harness].seed).")
    parser.add_argument("--threads", type=int, default=None, help="Procesos; 0 = todos los núcleos.")
    parser.add_argument("--csv", type=Path, default=None, help="Exporta también a CSV.")
    parser.add_argument("--config", dest="config_path", type=Path, default=None, help="config.toml alternativo.")
    parser.add_argument(
        "--log-level",
        default=None,
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Nivel de logging (por defecto [logging].level).",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMANDO")

    def _command(name: str, handler: Callable, help_text: str, json_out: bool = True) -> argparse.ArgumentParser:
        cmd = sub.add_parser(name, help=help_text, description=help_text)
        cmd.set_defaults(handler=handler)
        if json_out:
            cmd.add_argument("--json", type=Path, default=None, help="Escribe el JSON en este archivo.")
        return cmd

    cmd = _command("lines", _cmd_lines, "|L(A×A)|, δ_eff y razón con |A×A|^{1+1/267}.")
    cmd.add_argument("--prime", type=int, required=True)
    source = cmd.add_mutually_exclusive_group(required=True)
    source.add_argument("--set", type=Path, help="Arreglo JSON de enteros.")
    source.add_argument("--gen", help="Especificación de generador (JSON o archivo JSON).")

    cmd = _command("incidences", _cmd_incidences, "I(P, L) y razón con n^{3/2-ε}.")
    cmd.add_argument("--prime", type=int, required=True)
    cmd.add_argument("--points", type=Path, required=True, help="Pares [x, y] o triples [X, Y, Z].")
    cmd.add_argument("--lines", type=Path, required=True, help="Triples de coeficientes.")

    cmd = _command("sum-product", _cmd_sum_product, "Estadísticas suma-producto de A.")
    cmd.add_argument("--prime", type=int, required=True)
    source = cmd.add_mutually_exclusive_group(required=True)
    source.add_argument("--set", type=Path)
    source.add_argument("--gen")

    cmd = _command("beck-pipeline", _cmd_beck_pipeline, "Traza del argumento de rectas generadas.")
    cmd.add_argument("--prime", type=int, required=True)
    cmd.add_argument("--set-a", type=Path, required=True)
    cmd.add_argument("--set-b", type=Path, required=True)
    cmd.add_argument("--delta", default=None, help='δ como "a/b" o decimal.')
    cmd.add_argument("--params", type=Path, default=None, help="Objeto JSON con parámetros del pipeline.")
    cmd.add_argument("--strict", action="store_true", help="Una etapa vacía es un error.")

    cmd = _command("incidence-pipeline", _cmd_incidence_pipeline, "Traza del argumento de incidencias.")
    cmd.add_argument("--prime", type=int, required=True)
    cmd.add_argument("--points", type=Path, required=True, help="Triples [X, Y, Z].")
    cmd.add_argument("--lines", type=Path, required=True, help="Triples [a, b, c].")
    cmd.add_argument("--epsilon", default=None, help='ε como "a/b" o decimal.')
    cmd.add_argument("--strict", action="store_true")

    cmd = _command("bsg", _cmd_bsg, "Extracción Balog-Szemerédi-Gowers sobre una instancia JSON.")
    cmd.add_argument("--instance", type=Path, required=True)
    cmd.add_argument("--compare", action="store_true", help="Compara con el oráculo exhaustivo.")

    cmd = _command("scan", _cmd_scan, "Barrido descrito por una tabla [scan] TOML.", json_out=False)
    cmd.add_argument("--config", dest="scan_config", type=Path, required=True)
    cmd.add_argument("--out", type=Path, required=True, help="Directorio del RunRecord.")
    return parser


def _configure_logging(level: Optional[str]) -> None:
    cfg = get_config().logging
    logging.basicConfig(level=level or cfg.level, format=cfg.format, stream=sys.stderr, force=True)


def main(argv: Optional[List[str]] = None) -> int:
    """Punto de entrada de la consola; devuelve el código de salida."""
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        if args.config_path is not None:
            reload_config(args.config_path)
    except (FileNotFoundError, ValueError) as e:
        sys.stderr.write(f"lica: configuración inválida: {e}\n")
        return EXIT_INPUT
    _configure_logging(args.log_level)

    threads = args.threads if args.threads is not None else get_config().harness.threads
    try:
        facade = ApplicationFacade(threads=threads if threads > 0 else (os.cpu_count() or 1))
        args.handler(facade, args)
    except (FacadeValidationError, SchemaMismatchError, CorruptRecordError) as e:
        logger.error("%s", e)
        sys.stderr.write(f"lica: {e}\n")
        return EXIT_INPUT
    except (FileNotFoundError, ValueError) as e:
        logger.error("%s", e)
        sys.stderr.write(f"lica: entrada inválida: {e}\n")
        return EXIT_INPUT
    except FacadeComputationError as e:
        logger.error("%s", e)
        sys.stderr.write(f"lica: {e}\n")
        return EXIT_COMPUTATION
    return EXIT_OK
