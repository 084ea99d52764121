from forecaster.mtos.losses import (  # noqa: F401
    best_mode_index, loss_auxiliary, loss_capture, loss_couple, loss_gmm, loss_margin, total_loss,
)
from forecaster.mtos.trainer import EpochRecord, Trainer  # noqa: F401
