from .ast import Program
from .parser import ParseError, parse_program, validate
from .pretty import pretty
from .properties import Property, load_properties, parse_property

__all__ = [
    "ParseError",
    "Program",
    "Property",
    "load_properties",
    "parse_program",
    "parse_property",
    "pretty",
    "validate",
]
