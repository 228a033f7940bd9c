"""Epistemic temporal logic over partially observed Buchi systems.

Systems are Buchi automata over events (sets of propositions); agents see a
subset of the propositions at every step.  The package builds transducers
and knowledge monitors for formulas with a knowledge operator and uses them
for model checking, diagnosability, opacity and runtime monitoring.
"""

from .analyses import (CheckResult, Nfa, PrefixClass, PropertyFamily, PropertyKind,
                       build_opacity_hardness_instance, build_property_formula,
                       check_codiagnosable, check_diagnosable, check_monitorability,
                       check_opacity, check_p_diagnosable_direct, classify_prefix, model_check)
from .automata import (BuchiAutomaton, GeneralizedBuchiAutomaton, Lasso, MooreMachine,
                       accepts_lasso, degeneralize, find_accepting_lasso, is_empty,
                       prune_productive)
from .errors import (InputError, ParseError, PreconditionError, ResourceError, RvkError,
                     VocabularyError)
from .formats import load_machine, load_system, print_machine, print_system
from .knowledge import KnowledgeMonitor, build_knowledge_monitor
from .logic import desugar, format_formula, parse_formula
from .monitor import (MonitorSession, RuntimeMonitor, Verdict, run_decentralized, run_trace,
                      start_session, step, synthesize_diagnoser, synthesize_monitor)
from .transduce import Transducer, TransducerBuilder, build_transducer
from .vocab import Vocabulary

__version__ = "0.1.0"
