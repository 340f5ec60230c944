"""bellwave - local wave model of a type-II SPDC Bell experiment."""

__version__ = "0.1.0"
