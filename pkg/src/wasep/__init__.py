"""Coupled weakly asymmetric exclusion simulator with a verification harness.

The core objects are re-exported here; experiment suites live in
``wasep.verification`` and the command line in ``wasep.cli``.
"""

from .dynamics import (CoupledEnsemble, Event, EventStream, OrderingHook, OrderingViolation,
                       apply_event, evolve, next_event)
from .initial import (DensityProfile, UniformField, lipschitz_profile, product_measure,
                      sitewise_meet_join, step_profile)
from .lattice import (FluxCounter, HeightField, ScalingConstants, SiteConfiguration, Topology,
                      WindowSpec, height_field, scaling_constants)
from .observables import (discrepancy_sum, hopf_cole, proposition_report, rescaled_height,
                          total_variation)

__all__ = [
    "CoupledEnsemble", "Event", "EventStream", "OrderingHook", "OrderingViolation",
    "apply_event", "evolve", "next_event", "DensityProfile", "UniformField",
    "lipschitz_profile", "product_measure", "sitewise_meet_join", "step_profile",
    "FluxCounter", "HeightField", "ScalingConstants", "SiteConfiguration", "Topology",
    "WindowSpec", "height_field", "scaling_constants", "discrepancy_sum", "hopf_cole",
    "proposition_report", "rescaled_height", "total_variation",
]
