"""2-D tabletop simulator: geometry, world dynamics, tasks, and scripted
demonstrators."""

from .geometry import iou, rect_corners, wrap_angle  # noqa: F401
from .world import (  # noqa: F401
    Action,
    EndEffector,
    SceneObject,
    SceneState,
    TaskSpec,
    evaluate_success,
    observation_vector,
    reset,
    scene_from_document,
    scene_to_document,
    step,
    task_spec,
)
from .food import (  # noqa: F401
    make_food_scene,
    preconditions_truth,
)
from .scripted import scripted_demonstrator  # noqa: F401
