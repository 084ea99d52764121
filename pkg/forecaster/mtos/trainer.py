"""
Laço de treino: Adam (beta1=0.9, beta2=0.999, eps=1e-8, sem weight decay)
com decaimento em degraus. O treino é função pura de (seed, config, dados):
a ordem dos exemplos em cada época vem de um gerador semeado por
(seed, época).
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Dict, List, Tuple

import numpy as np

from forecaster.errors import EmptyDatasetError, LabelError, NumericHealthError
from forecaster.mtos.losses import total_loss
from forecaster.nn.optim import Adam
from forecaster.scene.features import collate
from models.prediction import LossBreakdown

logger = logging.getLogger(__name__)

LOG_COLUMNS = ("epoch", "lr", "loss_total", "loss_primary", "loss_couple", "loss_capture", "grad_norm")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    lr: float
    loss_total: float
    loss_primary: float
    loss_couple: float
    loss_capture: float
    grad_norm: float

    def to_dict(self) -> Dict:
        return asdict(self)


def _check_outputs(outputs):
    for name, tensor in outputs.named_tensors():
        if not np.all(np.isfinite(tensor.values)):
            raise NumericHealthError(name)


class Trainer:
    def __init__(self, model, train_config, optimizer_state=None):
        self.model = model
        self.config = train_config
        self.optimizer = Adam(model.named_parameters(), lr=train_config.lr)
        if optimizer_state is not None:
            self.optimizer.load_state_dict(optimizer_state)

    def _grad_norm(self):
        total = 0.0
        for name, param in self.model.named_parameters():
            if param.grad is None:
                continue
            if not np.all(np.isfinite(param.grad)):
                raise NumericHealthError(f"grad({name})")
            total += float(np.sum(param.grad.astype(np.float64) ** 2))
        return math.sqrt(total)

    def train_step(self, batch, lr) -> Tuple[LossBreakdown, float]:
        self.optimizer.zero_grad()
        outputs = self.model(batch)
        _check_outputs(outputs)
        loss, breakdown = total_loss(outputs, batch, self.config)
        if not math.isfinite(breakdown.total):
            raise NumericHealthError("loss_total")
        loss.backward()
        grad_norm = self._grad_norm()
        self.optimizer.step(lr)
        return breakdown, grad_norm

    def run_epoch(self, dataset, epoch) -> EpochRecord:
        lr = self.config.lr_at(epoch)
        order = np.random.default_rng([self.config.seed, epoch]).permutation(len(dataset))
        sums = np.zeros(5)
        for start in range(0, len(order), self.config.batch_size):
            chunk = [dataset[i] for i in order[start:start + self.config.batch_size]]
            breakdown, grad_norm = self.train_step(collate(chunk), lr)
            sums += len(chunk) * np.array(
                [breakdown.total, breakdown.primary, breakdown.couple, breakdown.capture, grad_norm]
            )
        means = sums / len(dataset)
        return EpochRecord(epoch, lr, *(float(v) for v in means))

    def fit(self, dataset, start_epoch=0, on_epoch_end=None) -> List[EpochRecord]:
        """
        Treina de `start_epoch` até config.epochs. `on_epoch_end(record,
        trainer)` permite ao chamador salvar checkpoints e logs.
        """
        dataset = list(dataset)
        if not dataset:
            raise EmptyDatasetError("conjunto de treino vazio")
        if any(not item.has_labels for item in dataset):
            raise LabelError("todo exemplo de treino precisa de futuro rotulado")

        records = []
        for epoch in range(start_epoch, self.config.epochs):
            record = self.run_epoch(dataset, epoch)
            records.append(record)
            if epoch % 10 == 0 or epoch == self.config.epochs - 1:
                logger.info(
                    f"Época {epoch}: loss={record.loss_total:.4f} "
                    f"(primary={record.loss_primary:.4f}, couple={record.loss_couple:.4f}, "
                    f"capture={record.loss_capture:.4f}) lr={record.lr:g} |g|={record.grad_norm:.3f}"
                )
            if on_epoch_end is not None:
                on_epoch_end(record, self)
        return records
