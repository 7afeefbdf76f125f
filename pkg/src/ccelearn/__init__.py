"""No-regret learning of coarse correlated equilibria in extensive-form games.

The package bundles: an extensive-form game model with perfect recall
(:mod:`ccelearn.efg`), benchmark game constructors (:mod:`ccelearn.games`),
regret matching and CFR-style solvers (:mod:`ccelearn.regret`,
:mod:`ccelearn.joint`), exact equilibrium-gap evaluation
(:mod:`ccelearn.evaluation`), and a configuration-driven experiment runner
with a CLI (:mod:`ccelearn.experiments`, :mod:`ccelearn.cli`).
"""

from .efg import (
    CHANCE,
    TERMINAL,
    BehavioralStrategy,
    GameTree,
    InfoSet,
    NormalFormPlan,
    PlanCapExceeded,
    RealizationVector,
    TreeBuilder,
    TreeError,
    behavioral_reach,
    canonicalize,
    count_plans,
    enumerate_plans,
    plan_reach,
    plan_terminals_from,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "CHANCE",
    "TERMINAL",
    "BehavioralStrategy",
    "GameTree",
    "InfoSet",
    "NormalFormPlan",
    "PlanCapExceeded",
    "RealizationVector",
    "TreeBuilder",
    "TreeError",
    "behavioral_reach",
    "canonicalize",
    "count_plans",
    "enumerate_plans",
    "plan_reach",
    "plan_terminals_from",
    "validate",
    "__version__",
]
