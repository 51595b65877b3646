"""Parallel compositional Boolean functional synthesis.

Given a specification phi(X, Y) the package computes Skolem functions
F(X) for the outputs Y such that phi(X, F(X)) holds whenever some Y makes
phi true.  Each node of the formula DAG is annotated bottom-up with
under-approximations of the "output cannot be 0" / "output cannot be 1"
conditions; SAT-based repair makes the annotations precise where composition
alone is not, and a pool of worker threads processes independent nodes.
"""

from .aiger import AigerError, parse_aiger, read_manifest, result_manifest, spec_to_aiger, write_aiger
from .bench import gen_factorization, gen_random_spec, random_corpus
from .cegar import CegarBudget, CegarStep, build_error_formula, perform_cegar
from .compose import (DeltaGammaVec, OpTemplate, QuadAnnotation, apply_template, build_template,
                      compose_and, compose_node, compose_or, leaf_delta_gamma)
from .formula import FormulaError, Manager, Spec, VarTable
from .pipeline import (SkolemVector, SynthesisConfig, SynthesisResult, VerificationReport,
                       reverse_substitute, synthesize, verify)
from .sat import CdclSolver, CnfDoc, Encoder, SolverBudgetExceeded, solve, tseitin
from .scheduler import PartialResultError, SchedulerConfig, SchedulerError, run

__version__ = "0.1.0"
