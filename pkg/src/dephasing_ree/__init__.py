"""Relative entropy of entanglement of three qubits under dephasing baths.

Natural units throughout: hbar = k_B = omega_0 = 1. Entropies are in nats.
"""

from .baths import (DEFAULT_KBT, BathSpec, DephasingKernel, QuadratureError, alpha, build_kernel,
                    dephasing_rate, markov_kernel, markov_rate, rates, spectral_density)
from .dynamics import (EvolutionConfig, IntegrationError, evolve, evolve_common, evolve_local,
                       evolve_ode, make_config, sz_labels)
from .qstate import (InvalidStateError, ket, partial_trace, projector, relative_entropy, tensor,
                     von_neumann_entropy)
from .ree import (EntanglementEstimate, SeparableEnsemble, SolverOptions, closest_separable_state,
                  ree)
from .series import TimeSeries, read_csv, ree_time_series
from .states import (NamedState, concurrence, make_state, pair_concurrences, parse_state,
                     three_tangle_pure)

__version__ = "0.1.0"
