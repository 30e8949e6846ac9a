"""
Product functions, special bases and the robust-correlation search.
"""
from apfree_app.services.structure.products import (
    ProductFunction,
    has_product_structure,
    correlation,
    best_character_correlation,
    product_ascent_search,
    find_correlated_restriction,
)
from apfree_app.services.structure.bases import (
    SpecialBasis,
    BasisChangedView,
    random_special_basis,
    apply_basis_change,
    restrict_z,
    product_closure_under_basis_change,
)
from apfree_app.services.structure.operations import (
    RandomRestrictionStep,
    BasisChangeStep,
    ZRestrictionStep,
    CoordinateDropStep,
    step_from_dict,
    replay_steps,
    replay_steps_on_product,
)
from apfree_app.services.structure.robust import (
    RobustifyParams,
    RobustPair,
    DensityBump,
    Exhausted,
    robustify_correlation,
)

__all__ = [
    'ProductFunction',
    'has_product_structure',
    'correlation',
    'best_character_correlation',
    'product_ascent_search',
    'find_correlated_restriction',
    'SpecialBasis',
    'BasisChangedView',
    'random_special_basis',
    'apply_basis_change',
    'restrict_z',
    'product_closure_under_basis_change',
    'RandomRestrictionStep',
    'BasisChangeStep',
    'ZRestrictionStep',
    'CoordinateDropStep',
    'step_from_dict',
    'replay_steps',
    'replay_steps_on_product',
    'RobustifyParams',
    'RobustPair',
    'DensityBump',
    'Exhausted',
    'robustify_correlation',
]
