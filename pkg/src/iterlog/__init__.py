"""iterlog: exact renewal calculus, branching-generation Monte Carlo, and
random recursive tree profiles, with a verification suite tying the
simulators to closed forms and exact tables.
"""

from .dist import (
    LatticeLaw,
    Moments,
    RngStream,
    SmoothLaw,
    geometric_lattice,
    lattice_span_check,
    moments,
    parse_law,
    sample,
)
from .renewal import (
    AsymptoticConstants,
    ExponentialRenewal,
    RenewalTable,
    check_subadditivity,
    convolve_levels,
    increment_asymptote,
    leading_term,
    lil_constant,
    perturbed_table,
    renewal_sequence,
    renewal_table,
    second_order,
)
from .cmj import (
    FluctuationParts,
    LilStatistic,
    MonteCarloSummary,
    SimConfig,
    SimOutcome,
    clt_statistic,
    decompose_fluctuation,
    expected_population,
    lil_statistic,
    monte_carlo,
    simulate_generations,
)
from .rrt import (
    ProfileTrace,
    YuleClock,
    bernoulli_level1,
    enumerate_profiles,
    grow_discrete,
    grow_yule,
    rrt_lil_statistic,
)
from .gauss import BmPath, FkTable, b1k, b2k, sample_bm, variance_b2k

__version__ = "0.1.0"
