"""
Function spaces on F_p^n: Fourier and Efron-Stein analysis, restrictions, Markov chains.
"""
from apfree_app.services.analysis.funcspace import (
    DenseFunction,
    EfronSteinPart,
    inner_product,
    fourier_transform,
    inverse_fourier_transform,
    fourier_coefficient,
    efron_stein_part,
    efron_stein_inclusion_exclusion,
    efron_stein_decomposition,
    level_weight,
    level_weights,
    level_weights_efron_stein,
    low_degree_weight,
    product_weights,
)
from apfree_app.services.analysis.restrictions import (
    Restriction,
    restrict,
    compose_restrictions,
    sample_random_restriction,
    restriction_bump_search,
    restriction_second_moment,
    restriction_correlation_event,
    restriction_event_exact,
)
from apfree_app.services.analysis.chains import (
    MarkovChain,
    ap_difference_chain,
    second_eigenvalue,
    second_eigenvalue_modulus,
    circulant_second_eigenvalue,
    chain_spectrum,
    apply_tensor,
    correlation_lower_bound_check,
)

__all__ = [
    'DenseFunction',
    'EfronSteinPart',
    'inner_product',
    'fourier_transform',
    'inverse_fourier_transform',
    'fourier_coefficient',
    'efron_stein_part',
    'efron_stein_inclusion_exclusion',
    'efron_stein_decomposition',
    'level_weight',
    'level_weights',
    'level_weights_efron_stein',
    'low_degree_weight',
    'product_weights',
    'Restriction',
    'restrict',
    'compose_restrictions',
    'sample_random_restriction',
    'restriction_bump_search',
    'restriction_second_moment',
    'restriction_correlation_event',
    'restriction_event_exact',
    'MarkovChain',
    'ap_difference_chain',
    'second_eigenvalue',
    'second_eigenvalue_modulus',
    'circulant_second_eigenvalue',
    'chain_spectrum',
    'apply_tensor',
    'correlation_lower_bound_check',
]
