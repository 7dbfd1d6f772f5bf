"""Viscosity solutions of ``h(x, u') + lam(x) u = c`` on the circle.

Two independent pipelines: implicit Lax-Oleinik semigroups on a periodic
grid (:mod:`.semigroup`) and unstable manifolds of the contact flow
(:mod:`.characteristics`).  Closed-form solutions of the toy model live in
:mod:`.reference`.
"""

from .errors import (AssemblyError, ConfigurationError, ContactHJError, DivergenceError,
                     DomainError, FamilyError, HorizonError, IntegrationError, ModelError,
                     NonHyperbolicError, StepError, TraceError)
from .model import (ContactModel, GridFunction, PeriodicGrid, TrigPoly, general_model,
                    hamiltonian_value, interpolate, lagrangian_value, legendre, make_grid,
                    quadratic_model, toy_model)
from .semigroup import (BACKWARD, FORWARD, StepParams, action_function, backward_step,
                        check_subsolution, default_step_params, evolve, forward_step,
                        residual_report, solution_pair, solve_fixed_point)
from .characteristics import (ContactState, FixedPointInfo, WaveFront, assemble_solutions,
                              find_fixed_points, linearize, ode_rhs, rk4_integrate,
                              trace_wavefront)
from .critical import CriticalEstimate, bounded_orbit, estimate_critical_value
from .reference import IntervalFamily, build_critical_solution, phi_critical, u_ab

__version__ = "0.1.0"
