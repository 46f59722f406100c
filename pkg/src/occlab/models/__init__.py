"""Model zoo: concrete occupancy processes with analytic structure."""

from .spreading import (SpreadingModel, ThresholdReport, epidemic_threshold,
                        from_weighted_graph, mean_field, spreading_rule)
from .domany_kinzel import (DomanyKinzel, dk_device_time, dk_exact_mean_zeta2,
                            dk_rule)
from .hanski import (HanskiLimit, HanskiModel, equidistributed,
                     grid_projected_variance, hanski_limit, hanski_rule,
                     injected_noise_density as hanski_injected_noise_density,
                     transfer_apply as hanski_transfer_apply)
from .graphdyn import (GraphDynModel, clt_functionals, complete_host, cut_norm,
                       cut_norm_exact, cut_norm_heuristic,
                       deterministic_edge_matrices, edge_state_to_adjacency,
                       graph_rule, graphon_step, graphon_trajectory,
                       homomorphism_density, injected_noise_matrix,
                       lambda_kernel, triangle_clt_variance, triangle_density)
from .random_rules import random_product_rule
from .descriptors import load_descriptor, model_from_descriptor
