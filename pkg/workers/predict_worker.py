import logging

from forecaster.model import predict_scenario
from repositories.report_repository import ReportRepository
from repositories.scenario_repository import ScenarioRepository
from workers.model_loader import load_model

logger = logging.getLogger(__name__)

scenarios = ScenarioRepository()
reports = ReportRepository()


class PredictWorker:
    def run(self, checkpoint, scenario_file, out_path, config=None, joint=False, explain=False, target=None):
        model, _ = load_model(checkpoint, config)
        scenario = scenarios.load(scenario_file)
        predictions = predict_scenario(model, scenario, target=target, joint=joint, explain=explain)
        reports.write_predictions(out_path, predictions)
        for p in predictions:
            summary = ", ".join(f"{prob:.3f}" for prob in p.probabilities)
            logger.info(f"Agente {p.agent_id}: {p.K} modos, probabilidades [{summary}]")
            if p.references is not None:
                logger.info(f"Agente {p.agent_id}: segmentos de referência por modo {list(p.references)}")
        return predictions
