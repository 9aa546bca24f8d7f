"""A small Prolog engine: reader, writer, clause database and SLD solver."""

from .database import Clause, Database
from .lexer import Token, tokenize
from .reader import ClauseItem, ProgramReader, QueryItem, parse_term, read_program, read_program_item, read_term
from .solver import DEFAULT_STEP_LIMIT, Engine, Success, solve
from .terms import Atom, Compound, Float, Int, Term, Var, make_list, resolve, unify
from .writer import format_term
from .arith import eval_arith

__all__ = [
    "Atom", "Clause", "ClauseItem", "Compound", "DEFAULT_STEP_LIMIT", "Database", "Engine",
    "Float", "Int", "ProgramReader", "QueryItem", "Success", "Term", "Token", "Var",
    "eval_arith", "format_term", "make_list", "parse_term", "read_program", "read_program_item",
    "read_term", "resolve", "solve", "tokenize", "unify",
]
