"""
CLI Controller - um handler por comando.

Cada handler resolve a configuração (perfil -> arquivo --config -> flags),
chama o worker e devolve o código de saída: 0 sucesso, 2 validação,
3 saúde numérica, 4 IO, 1 demais erros.
"""

import logging
from pathlib import Path

from forecaster.errors import ConfigurationError, ForecasterError
from forecaster.utils.config import Config
from models.run_config import RunConfig
from repositories.config_repository import ConfigRepository
from workers.data_worker import DataWorker
from workers.eval_worker import EvalWorker
from workers.predict_worker import PredictWorker
from workers.train_worker import TrainWorker

logger = logging.getLogger(__name__)

configs = ConfigRepository()

# flag da CLI -> (seção, campo)
OVERRIDES = {
    "D": ("model", "D"),
    "K": ("model", "K"),
    "fusion": ("model", "fusion"),
    "bq_heads": ("model", "bq_heads"),
    "epochs": ("train", "epochs"),
    "lr": ("train", "lr"),
    "batch_size": ("train", "batch_size"),
    "precision": ("train", "precision"),
    "lanes": ("data", "lanes"),
    "geometry": ("data", "geometry"),
    "agents": ("data", "agents"),
    "noise": ("data", "noise"),
}

# flags --no-* de ablação -> (seção, campo)
TOGGLES = {
    "no_relative_motions": ("model", "use_relative_motions"),
    "no_map_topology": ("model", "use_map_topology"),
    "no_bilateral_query": ("model", "use_bilateral_query"),
    "no_reference_extractor": ("model", "use_reference_extractor"),
    "no_couple_loss": ("train", "use_couple_loss"),
    "no_capture_loss": ("train", "use_capture_loss"),
}


def resolve_config(args):
    """Perfil padrão, depois o arquivo --config, depois as flags da CLI."""
    config = RunConfig.for_profile(getattr(args, "profile", None) or Config.PROFILE)
    if getattr(args, "config", None):
        config = configs.read(args.config, base=config)

    sections = {"model": {}, "train": {}, "data": {}}
    for flag, (section, name) in OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is not None:
            sections[section][name] = value
    for flag, (section, name) in TOGGLES.items():
        if getattr(args, flag, False):
            sections[section][name] = False

    seed = args.seed if getattr(args, "seed", None) is not None else config.seed
    sections["train"].setdefault("seed", seed)
    return config.with_overrides(seed=seed, **sections).validate()


def _threads(args):
    return args.threads if getattr(args, "threads", None) else Config.THREADS


def _run(command, handler, args):
    try:
        handler(args)
        return 0
    except ForecasterError as e:
        logger.error(f"{command}: {e}")
        return e.exit_code
    except Exception as e:
        logger.error(f"Erro inesperado em {command}: {str(e)}", exc_info=True)
        return 1


def _require(args, *names):
    for name in names:
        if not getattr(args, name, None):
            raise ConfigurationError(f"argumento --{name.replace('_', '-')} é obrigatório")


def gen_data(args):
    """
    Gera um corpus sintético.

    Args:
        --out: diretório de saída
        --count: número de cenários
    """
    def handler(args):
        _require(args, "out")
        DataWorker().generate(resolve_config(args), args.out, args.count)

    return _run("gen-data", handler, args)


def train(args):
    """
    Treina e grava checkpoint + training_log.csv em --out.

    Args:
        --data: diretório do corpus
        --resume: continua do checkpoint em --out
    """
    def handler(args):
        _require(args, "data", "out")
        TrainWorker().run(resolve_config(args), args.data, args.out, resume=args.resume)

    return _run("train", handler, args)


def predict(args):
    """
    Predições em quadro mundo para um arquivo de cenário.

    Args:
        --checkpoint, --scenario, --out (arquivo JSON)
        --joint: prediz todos os agentes num lote só
        --explain: inclui o segmento de referência mais atendido por modo
    """
    def handler(args):
        _require(args, "checkpoint", "scenario", "out")
        config = resolve_config(args) if args.config else None
        PredictWorker().run(args.checkpoint, args.scenario, args.out, config=config,
                            joint=args.joint, explain=args.explain, target=args.target)

    return _run("predict", handler, args)


def evaluate(args):
    def handler(args):
        _require(args, "checkpoint", "data", "out")
        config = resolve_config(args) if args.config else None
        EvalWorker().evaluate(args.checkpoint, args.data, args.out, config=config, threads=_threads(args))

    return _run("eval", handler, args)


def robustness(args):
    """
    Curva de degradação.

    Args:
        --axis: mask | noise
        --levels: lista separada por vírgulas começando em 0 (ex.: 0,0.5,1.0)
    """
    def handler(args):
        _require(args, "checkpoint", "data", "out")
        config = resolve_config(args) if args.config else None
        try:
            levels = [float(v) for v in args.levels.split(",")]
        except ValueError:
            raise ConfigurationError(f"--levels inválido: {args.levels!r}")
        EvalWorker().robustness(args.checkpoint, args.data, args.out, args.axis, levels, config=config,
                                threads=_threads(args), svg=not args.no_svg, seed=args.seed)

    return _run("robustness", handler, args)


def bench(args):
    """
    Parâmetros e latência mediana (lote de 32 alvos).

    Args:
        --compare-fusion: roda bilateral e empilhada e reporta redução/speed-up
    """
    def handler(args):
        _require(args, "out")
        EvalWorker().bench(resolve_config(args), Path(args.out), compare=args.compare_fusion, runs=args.runs)

    return _run("bench", handler, args)


COMMANDS = {
    "gen-data": gen_data,
    "train": train,
    "predict": predict,
    "eval": evaluate,
    "robustness": robustness,
    "bench": bench,
}
