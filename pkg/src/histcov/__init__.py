"""Static analysis toolkit for programs with extended coverage types and
history-expression effects: bidirectional type checking, bounded denotation,
a reference interpreter, and resource-usage policy verification."""

from .syntax import (Arrow, Const, ECT, HistoryType, Identifier, OverType,
                     Prop, Term, erase_type)
from .histexpr import (EPS, Hist, bind, eq_normalize, subst_identifier,
                       alpha_rename_mu, shift_mu_right, to_normal_form,
                       apply_interpretation)
from .registry import Registry, Universe, parse_resource_context
from .parser import parse_history, parse_program, parse_prop, parse_type
from .pretty import pretty
from .logic import eval_values, equiv, implies
from .denote import denote, denote_in_context
from .typecheck import (Checker, FreshState, TypingError, ex_quantify,
                        fa_quantify, next_delta, project_context, wf_check)
from .evaluator import run_all, run_random
from .policy import Verdict, check_event_order, check_policy, parse_policy

__version__ = "0.1.0"
