"""Simulator and diagnostics for 2D heat-conducting incompressible flow with variable density."""
from .diagnostics import TheoremConstants, compute_record, fit_decay_rate, theorem_constants
from .dynamics import PhysParams, State, run, step
from .mesh import Grid, MacVelocity, ScalarField
from .scenarios import ScenarioSpec, build_scenario

__all__ = [
    "Grid", "MacVelocity", "ScalarField", "PhysParams", "State", "run", "step",
    "ScenarioSpec", "build_scenario", "TheoremConstants", "theorem_constants",
    "compute_record", "fit_decay_rate",
]
