"""Free variables with variable- and choice-conditions for Hilbert's epsilon."""

from .calculus import (
    ProofState, ProofStep, RuleError, ScriptReport, alpha_beta, close, delta_minus,
    delta_plus, gamma, initial_state, instantiate_atoms, instantiate_vars,
    load_script, parse_script, run_script, run_script_text,
)
from .choice import (
    CCEntry, ChoiceCondition, ChoiceConditionError, check_cc, dump_cc,
    extended_sigma_update, is_extended_extension, parse_cc, q_formula, validate_cc,
)
from .epsilon import (
    EpsilonError, eliminate, eliminate_fresh, eps_stats, qelim,
    qelim_parallel_homogeneous, reconstruct,
)
from .parse import ParseError, Signature, parse_formula, parse_signature, parse_term
from .syntax import (
    Kind, Sequent, Substitution, Symbol, alpha_equal, apply_subst, free_symbols,
)
from .varcond import (
    VarCond, dependence, is_consistent, is_pn_substitution, is_weak_extension,
    sigma_update, to_dot,
)

__version__ = "0.1.0"
