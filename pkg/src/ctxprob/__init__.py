"""Classical contextual models that reproduce quantum probabilities by averaging over micro-contexts."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .probspace import Event, FiniteProbabilitySpace, check_kolmogorov, conditional, measure
from .lang import (
    And, Atom, Interpretation, Model, Not, Or, PropertyInContext, StateId,
    extension, lindenbaum_classes, logical_leq, parse, to_text, truth,
)
from .muprob import MuContextualStructure, check_conditional_measure, mu_absolute, mu_conditional
from .measurement import (
    MeasurementProcedure, MeasurementRegistry, check_procedure_independence,
    compatible, is_testable, mean_conditional, reindex,
)
from .qstructure import (
    OrthoLattice, PropertySpace, StateProbabilityFamily, classical_conditioning_failure_witness,
    conditional_q_probability, first_kind_transform, induced_preorder,
    is_generalized_probability_measure, property_probability,
)
from .quantum import (
    DensityOperator, Projector, QuantumModel, born, kappa_compatible, lueders,
    ordering_family_check, proj_join, proj_meet, proj_ortho, projector_leq, quantum_conditional,
)
from .embed import Embedding, EmbeddingScheme, build_embedding, verify_embedding
