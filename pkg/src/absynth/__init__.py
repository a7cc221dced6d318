"""Verified synthesis of integer-counter abstractions for action theories.

The pipeline: parse a relational action theory plus a refinement mapping
(`parser`), verify the mapping's restrictions by bounded finite-model
checking (`verify`), synthesize the induced high-level integer-counter
theory (`synthesis`), and certify on concrete finite instances that the two
theories are bisimilar (`bisim`).  `semantics` evaluates formulas and
programs over explicit finite states; `printer` renders everything back to
the same source language; `cli` ties the stages into a command line.
"""

from importlib import resources

from .bisim import (
    BisimCounterexample,
    BisimError,
    BisimVerdict,
    TransitionSystem,
    build_high_ts,
    build_low_ts,
    certify,
    check_bisim,
    edge_law_violations,
)
from .mapping import (
    FN_LABELS,
    PRED_LABELS,
    UNKNOWN_LABEL,
    GuardedAction,
    MappingError,
    RefinementMapping,
    apply_mapping,
    as_guarded,
    designated_atoms,
    inverse_translate,
    is_prop_exists,
    mapping_formula,
    phi_set,
)
from .parser import (
    ParseError,
    Project,
    load_project,
    parse_formula,
    parse_program,
    parse_project,
    parse_term,
    signature_of,
)
from .printer import (
    render_high,
    render_instance,
    render_low,
    render_mapping,
    render_project,
    unparse,
)
from .report import FAIL, PASS, UNKNOWN, CertReport, Check, Counterexample
from .semantics import (
    AbstractState,
    BudgetError,
    FiniteDomain,
    FiniteState,
    SemanticsError,
    abstract_state,
    do_program,
    enumerate_states,
    eval_formula,
    eval_term,
    ground_actions,
    instance_state,
    poss,
    reachable,
    successor,
)
from .synthesis import (
    SynthesisError,
    SynthesisInput,
    simplify_lia,
    synth_init,
    synth_precond,
    synth_ssa,
    synthesize,
)
from .theory import (
    ActionDecl,
    EffectClause,
    FnSSA,
    HighLIBAT,
    Instance,
    LowBAT,
    PredSSA,
    SetClause,
    TheoryError,
)
from .verify import (
    ClassEntry,
    DomainBounds,
    RestrictionResult,
    StateUniverse,
    VerifyError,
    check_alt_enabling,
    check_exclusive,
    check_invariant,
    check_restrictions,
    check_single_enabling,
    classify,
    classify_all,
    exists_atoms,
    forget_project,
    random_formula,
    template_formulas,
)

__version__ = "0.1.0"


def fixture_path(name: str = "blocks_world"):
    """Filesystem path of a bundled example project file."""
    return resources.files(__name__) / "fixtures" / f"{name}.dsl"


def load_fixture(name: str = "blocks_world"):
    """Parse a bundled example project file."""
    return parse_project(fixture_path(name).read_text(encoding="utf-8"))
