"""Stability analysis of periodic orbits in codimension-one dissipative systems.

The control field is synthesized from conserved and dissipated functions with
exterior algebra; characteristic multipliers come from a closed formula and
are cross-checked against the monodromy matrix.
"""

from .examples import BUILTINS, EulerParams, builtin, euler_rigid_body, harmonic_oscillator
from .expr import ParseError, ScalarField, parse
from .floquet import (HypothesisError, MultiplierReport, Outcome, StabilityVerdict,
                      analytic_multipliers, classify, eigenvalues, monodromy)
from .orbit import PeriodicOrbit, distance_to_orbit, rate_integral, verify_periodicity
from .system import (CodimensionError, DissipativeSystem, SingularPoint, control_field_X0,
                     regularity_report, vector_field)

__version__ = "0.1.0"
