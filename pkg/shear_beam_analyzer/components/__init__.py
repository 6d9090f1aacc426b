from . import beam_core, dense_linalg, reissner_integrator, ziegler_integrator, element_api, structure_solver, reference_solutions, bench_cli
