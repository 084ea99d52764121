import logging
from pathlib import Path

from forecaster.eval import bench, compare_fusion, evaluate, robustness_sweep
from repositories.config_repository import RUN_CONFIG_FILE, ConfigRepository
from repositories.report_repository import ReportRepository
from repositories.scenario_repository import ScenarioRepository
from workers.model_loader import load_model

logger = logging.getLogger(__name__)

scenarios = ScenarioRepository()
reports = ReportRepository()
configs = ConfigRepository()


class EvalWorker:
    def evaluate(self, checkpoint, data_dir, out_dir, config=None, threads=1):
        model, config = load_model(checkpoint, config)
        report = evaluate(model, scenarios.read_corpus(data_dir), threads=threads)
        out_dir = Path(out_dir)
        reports.write_metrics(out_dir / "metrics.csv", report)
        configs.write(out_dir / RUN_CONFIG_FILE, config)
        logger.info(
            f"Avaliação ({report.count} cenários): minADE={report.minADE_K:.4f} minFDE={report.minFDE_K:.4f} "
            f"MR={report.MR_K:.3f} brier-minFDE={report.brier_minFDE_K:.4f}"
        )
        return report

    def robustness(self, checkpoint, data_dir, out_dir, axis, levels, config=None, threads=1, svg=True, seed=None):
        model, config = load_model(checkpoint, config)
        seed = config.seed if seed is None else seed
        curve = robustness_sweep(model, scenarios.read_corpus(data_dir), axis, levels, seed=seed, threads=threads)
        out_dir = Path(out_dir)
        reports.write_curve(out_dir / f"robustness_{axis}.csv", curve)
        if svg:
            reports.write_curve_svg(out_dir / f"robustness_{axis}.svg", curve)
        configs.write(out_dir / RUN_CONFIG_FILE, config)
        return curve

    def bench(self, config, out_dir, compare=False, runs=100):
        logger.info("=" * 60)
        logger.info(f"BENCHMARK: D={config.model.D}, lote 32, {runs} execuções")
        logger.info("=" * 60)
        out_dir = Path(out_dir)
        comparison = None
        if compare:
            results, comparison = compare_fusion(config.model, runs=runs, seed=config.seed, data=config.data)
        else:
            results = [bench(config.model, runs=runs, seed=config.seed, data=config.data)]
        reports.write_bench(out_dir / "bench.csv", results, comparison)
        configs.write(out_dir / RUN_CONFIG_FILE, config)
        return results, comparison
