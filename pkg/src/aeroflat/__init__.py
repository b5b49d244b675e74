"""Flat and generalized-flat motion planning for fixed-wing aircraft."""
__version__ = "0.1.0"

from .aero import AircraftParams, FlightPoint, GnaCoefficients, dynamics_full, dynamics_simplified
from .aircraft import load_aircraft
from .errors import (
    AeroflatError,
    ChartError,
    ConfigError,
    FeedbackDesignError,
    HorizonError,
    NewtonConvergenceError,
    SimulationDivergence,
    SingularityError,
    TrimInfeasibleError,
)
from .flatplan import (
    ControlMode,
    FlatOutputChoice,
    FlatOutputTrajectory,
    flat_parametrization,
    lift_maximum,
    singularity_check,
)
from .genflat import IterationPlan, TrimProblem, calibrate, generalized_flat_parametrization
from .series import SeriesVector, TaylorSeries, newton_point, newton_series
from .sim import TrajectoryPlan, blend_eval, motion_planning, simulate, tracking_metrics
from .track import FeedbackLaw, PoleConfig, design_feedback, feedback_eval, linearize
