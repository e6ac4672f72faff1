"""Pseudospectral lab for the improved modified Boussinesq equation.

    u_tt - u_xx - u_xxtt = sign * (u^p)_xx    on the line,

solved through its frequency-space Duhamel form by Picard iteration, with
an independent RK4 integrator, certification harnesses for the multiplier
symbols steering the linear flow, and norm-inflation experiments probing
the flow map's roughness below L^2.
"""

from .grid import (
    BandWindow,
    FrequencyGrid,
    PositionField,
    SpectralField,
    lambda_symbol,
    make_grid,
    pointwise_power,
    pointwise_product,
    random_real_field,
    restricted_norm,
    sobolev_norm,
    sup_norm,
    to_frequency,
    to_position,
)
from .inflation import (
    DerivativeCheck,
    GenericTermParams,
    InflationReport,
    InflationRow,
    IPData,
    QuadratureConfig,
    brute_force_Ap,
    compute_Ap,
    flowmap_derivative_check,
    free_evolution_hat,
    generic_term_complex,
    generic_term_real,
    grid_for_boxes,
    inflation_ratio,
    make_ip_data,
    ratio_sweep,
)
from .solver import (
    CauchyData,
    ContractionReport,
    ConvergenceError,
    SolverConfig,
    Trajectory,
    dispersion_check,
    duhamel_functional,
    energy,
    energy_series,
    free_propagator,
    free_velocity,
    gaussian_data,
    mode_amplitude_trace,
    picard_window,
    rk4_solve,
    single_mode_data,
    solve,
)
from .symbols import (
    BesovEstimate,
    Symbol,
    apply_symbol,
    besov_seminorm,
    check_kernel_inequality,
    eval_symbol,
    kernel_ratio_sweep,
    symbol_difference_bound,
)

__version__ = "0.1.0"
