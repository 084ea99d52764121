"""
Artefatos de saída: logs de treino, métricas, curvas de degradação (CSV +
SVG), predições (JSON) e benchmarks.
"""

import json
import logging

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from forecaster.mtos.trainer import LOG_COLUMNS  # noqa: E402
from models.prediction import MetricsReport  # noqa: E402
from utils.files import atomic_write  # noqa: E402

logger = logging.getLogger(__name__)


class ReportRepository:
    def _write_frame(self, path, frame):
        with atomic_write(path) as handle:
            frame.to_csv(handle, index=False)
        logger.info(f"CSV salvo em {path} ({len(frame)} linhas)")

    def write_training_log(self, path, records):
        frame = pd.DataFrame([r.to_dict() for r in records], columns=list(LOG_COLUMNS))
        self._write_frame(path, frame)

    def read_training_log(self, path):
        return pd.read_csv(path)

    def write_metrics(self, path, report):
        """Uma linha de resumo com as cinco métricas."""
        self._write_frame(path, pd.DataFrame([report.to_dict()]))

    def write_curve(self, path, curve):
        """Uma linha por (nível, métrica)."""
        rows = [
            {"axis": curve.axis, "level": level, "metric": name, "value": getattr(report, name)}
            for level, report in curve.points
            for name in MetricsReport.METRIC_NAMES
        ]
        self._write_frame(path, pd.DataFrame(rows, columns=["axis", "level", "metric", "value"]))

    def write_curve_svg(self, path, curve):
        fig, ax = plt.subplots(figsize=(6, 4))
        levels = curve.levels
        for name in MetricsReport.METRIC_NAMES:
            ax.plot(levels, [getattr(report, name) for _, report in curve.points], marker="o", label=name)
        ax.set_xlabel(curve.axis)
        ax.set_ylabel("valor")
        ax.legend()
        fig.tight_layout()
        with atomic_write(path) as handle:
            fig.savefig(handle, format="svg")
        plt.close(fig)

    def write_predictions(self, path, predictions):
        payload = [p.to_dict() for p in predictions]
        with atomic_write(path) as handle:
            json.dump(payload[0] if len(payload) == 1 else payload, handle, indent=2)

    def write_bench(self, path, reports, comparison=None):
        frame = pd.DataFrame([r.to_dict() for r in reports])
        if comparison:
            for key, value in comparison.items():
                frame[key] = value
        self._write_frame(path, frame)
