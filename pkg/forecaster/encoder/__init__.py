from forecaster.encoder.context import EncodedContext, Encoder  # noqa: F401
from forecaster.encoder.coupled_layer import AgentCoupledLayer, MapCoupledLayer, MotionGate, TopoGate  # noqa: F401
from forecaster.encoder.fusion import BilateralQuery, SocialInteraction, StackAttentionFusion  # noqa: F401
