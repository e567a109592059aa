"""Simulated automatic road lighting driven by frame-differencing vehicle tracking."""

from .controller import ControllerConfig, LampBank, control_step, port_register, reset, trigger
from .detection import Detection, ForegroundMask, centroid, ceila, detect, subtract
from .harness import Scenario, SuccessRule, run_batch, run_trial, sweep
from .imaging import Frame, SceneConfig, apply_blur, apply_noise, load_frame, render_scene, save_frame
from .kinematics import Calibration, TrackState, calibrate, displacement, predict, speed, update_track

__version__ = "0.1.0"
