"""mgglab: a Monte Carlo laboratory for mobile geometric graphs.

Poisson-distributed nodes move by discrete-time Brownian motion and are
connected at the normalized transmission range r (vol(B_r) = 1).  The
package measures detection, percolation and broadcast times, checks the
exact identities and tail shapes those times obey, and provides an
executable coupled construction of a fresh Poisson process inside a
moved crowd.
"""

__version__ = "0.1.0"

from .backend import ACTIVE as BACKEND
from .domain import (ModelParams, RngPolicy, SimDomain, ball_volume,
                     derive_range, torus_distance, torus_wrap)
from .pointprocess import (IntensityField, NodeEnsemble, sample_nonhomogeneous,
                           sample_ppp, superpose, thin)
from .motion import (MotionModel, Trajectory, propagate_intensity,
                     sample_target_trajectory, step, transition_density)
from .geograph import (GeoGraph, build_graph, contains_node,
                       crossing_components, giant_component)
from .survival import SurvivalCurve, from_event_times
from .stats import (TailFit, fit_tail, normal_tail_bound, poisson_chernoff,
                    wilson_interval)
from .coupling import (CouplingSpec, CouplingTranscript, g_density,
                       lemma_psi_check, percolation_step_coupled, psi,
                       run_coupling, sample_g)
