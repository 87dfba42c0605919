from .sets import (
    AverageQuadraticSet,
    BudgetValue,
    InfeasibleSetError,
    LinearSet,
    RhoWeightedSet,
    UncertaintySet,
    budget_grad_delta,
    budget_grad_rho,
    budget_value,
    make_uncertainty_set,
    sample_feasible,
)
