from forecaster.geometry.coupled_map import (  # noqa: F401
    CoupledMap,
    build_coupled_map,
    closest_point_index,
    label_future_relative_motions,
    relative_motion,
)
