"""Three-finger tripod haptic grasping: rendering, grasp model, replay and metrics."""

from .devicesim import ActuatorChannel, SimClock, advance, command_force
from .engine import ReplayReport, replay, resample
from .errors import (DegenerateGeometryError, FormatError, HapticsError, InsufficientDataError,
                     InvalidInputError, NoGraspError, TunnelingError,
                     UndefinedPerceptionError)
from .geometry import Box, Cylinder, HalfSpace, Sphere, fit_sphere, signed_distance
from .graspmodel import (GraspState, Phase, RigidObjectState, aggregate_virtual_fingers,
                         build_grasp_map, force_closure, step_grasp_state, step_object)
from .io import Scene, parse_force_frames, parse_hand_frames, parse_scene
from .kernels import BACKEND
from .metrics import HandFrame, analyze_stream, summarize_series
from .rendering import ProxyState, RenderParams, render, update_proxy
from .taxonomy import assign_virtual_fingers, filter_grasps, load_taxonomy

__version__ = "0.1.0"
