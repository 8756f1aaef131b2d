"""Kernel-language frontend: parsing, validation, printing, annotation."""

from .ast import Program, For, If, Assign
from .parser import Diagnostic, KernelError, parse, parse_file
from .printer import annotate, pragma_map, pretty_print, private_scalars
from .subscripts import NonSimple, SimpleOffset, classify_subscript

__all__ = [
    "Assign",
    "Diagnostic",
    "For",
    "If",
    "KernelError",
    "NonSimple",
    "Program",
    "SimpleOffset",
    "annotate",
    "classify_subscript",
    "parse",
    "parse_file",
    "pragma_map",
    "pretty_print",
    "private_scalars",
]
