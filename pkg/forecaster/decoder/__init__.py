from forecaster.decoder.heads import (  # noqa: F401
    CoupledMotionHead, MapConditionedRegression, MotionCaptureHead, ProbabilityHead,
)
from forecaster.decoder.reference import PooledReferences, ReferenceExtractor, most_attended_segments  # noqa: F401
