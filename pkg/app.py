import argparse
import logging
import sys

import colorlog

from controllers.cli_controller import COMMANDS
from forecaster.utils.config import Config


def setup_logging(verbose=False):
    """colorlog no terminal; não mexe em handlers já configurados (ex.: pytest)."""
    level = logging.DEBUG if verbose else getattr(logging, Config.LOG_LEVEL.upper(), logging.INFO)
    handler = colorlog.StreamHandler()
    handler.setFormatter(colorlog.ColoredFormatter(
        "%(log_color)s%(asctime)s - %(name)s - %(levelname)s%(reset)s - %(message)s"
    ))
    logging.basicConfig(level=level, handlers=[handler])


def _add_run_flags(parser):
    """Flags que sobrescrevem a configuração da execução."""
    parser.add_argument("--D", dest="D", type=int, help="dimensão oculta")
    parser.add_argument("--K", dest="K", type=int, help="número de modalidades")
    parser.add_argument("--fusion", choices=("bilateral", "stack"))
    parser.add_argument("--bq-heads", dest="bq_heads", type=int)
    parser.add_argument("--precision", choices=("float32", "float64"))
    parser.add_argument("--no-relative-motions", action="store_true")
    parser.add_argument("--no-map-topology", action="store_true")
    parser.add_argument("--no-bilateral-query", action="store_true")
    parser.add_argument("--no-reference-extractor", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="forecaster", description="Predição multimodal de trajetórias")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="arquivo KEY=VALUE da execução")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int)
    common.add_argument("--out")
    common.add_argument("--verbose", action="store_true")
    common.add_argument("--profile", help="desk | small | large")
    _add_run_flags(common)

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", parents=[common], help="gera corpus sintético")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--lanes", type=int)
    p.add_argument("--geometry", choices=("straight", "arc", "fork"))
    p.add_argument("--agents", type=int)
    p.add_argument("--noise", type=float)

    p = sub.add_parser("train", parents=[common], help="treina um modelo")
    p.add_argument("--data")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--no-couple-loss", action="store_true")
    p.add_argument("--no-capture-loss", action="store_true")
    p.add_argument("--resume", action="store_true")

    p = sub.add_parser("predict", parents=[common], help="prediz trajetórias de um cenário")
    p.add_argument("--checkpoint")
    p.add_argument("--scenario")
    p.add_argument("--target", type=int)
    p.add_argument("--joint", action="store_true")
    p.add_argument("--explain", action="store_true")

    p = sub.add_parser("eval", parents=[common], help="métricas num corpus rotulado")
    p.add_argument("--checkpoint")
    p.add_argument("--data")

    p = sub.add_parser("robustness", parents=[common], help="curva de degradação")
    p.add_argument("--checkpoint")
    p.add_argument("--data")
    p.add_argument("--axis", choices=("mask", "noise"), required=True)
    p.add_argument("--levels", default="0,0.25,0.5,0.75")
    p.add_argument("--no-svg", action="store_true")

    p = sub.add_parser("bench", parents=[common], help="parâmetros e latência")
    p.add_argument("--compare-fusion", action="store_true")
    p.add_argument("--runs", type=int, default=100)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
