"""Consensus-on-only-measurement distributed filtering over directed sensor networks."""
from .consensus import (
    ConsensusDesign,
    build_design,
    design_mu_distributed,
    design_mu_unified,
    fuse_measurements,
    min_fusion_steps,
)
from .exceptions import ComdfError, ConvergenceError, DesignError, ScenarioError
from .filter import CentralState, FilterBank, GainDesign, ckf_step, comdf_step, design_gain
from .graph import DiGraph, default_topology, is_strongly_connected, laplacian
from .model import PlantModel, Sensor, SensorSuite, augment, check_observability
from .sim import MseSeries, ScenarioConfig, run_monte_carlo

__version__ = "0.1.0"
