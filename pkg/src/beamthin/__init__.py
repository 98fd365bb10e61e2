"""Thinned multi-beam synthesis for planar phased arrays.

Binary element-activation masks are evolved with a genetic algorithm so that
each beam meets a target -3 dB beamwidth and side-lobe suppression, while the
number of beams any element serves and the total transmit power stay within
limits.
"""

from .array_model import (AngularGrid, ArrayGeometry, PowerPattern, WeightTensor,
                          array_factor, array_pattern, steering_phase, unit_cell_power)
from .errors import ConfigError, InfeasibleConstraintsError
from .ga import GAConfig, GAResult, repair_activation, run
from .metrics import (BeamMetrics, FieldOfView, beamwidth, directivity, measure_beam, sll)
from .objective import (BeamSpec, ConstraintSet, CostBreakdown, check_constraints,
                        multibeam_cost, single_beam_cost)
from .scenario import (RunReport, ScenarioConfig, assign_subbands, latlon_to_scan, preset,
                       run_scenario)

__version__ = "0.1.0"
