"""Small closed expression language: parse, differentiate, substitute, evaluate, zero-test."""

from .calculus import (
    coefficients_in,
    differentiate,
    polynomial_degree,
    replace_subexpr,
    substitute,
    substitute_many,
)
from .core import (
    KERNELS,
    MINUS_ONE,
    ONE,
    ZERO,
    Add,
    Expr,
    Kernel,
    Mul,
    Pow,
    Rational,
    Symbol,
    add,
    as_expr,
    cos,
    exp,
    kernel,
    ln,
    mul,
    normalize,
    num,
    pow_,
    sec,
    sin,
    sqrt,
    sym,
    symbols,
    tan,
    tanh,
    to_string,
)
from .numeric import evaluate, evaluate_masked, evaluate_with_scale
from .parse import parse
from .rational import cancel, divide_exact, is_zero_exact, numerator, together
from .zero import SampleResult, is_identically_zero, sample_points, sample_test

Bindings = dict  # symbol name -> float (or numpy array)

__all__ = [
    "Bindings",
    "KERNELS",
    "MINUS_ONE",
    "ONE",
    "ZERO",
    "Add",
    "Expr",
    "Kernel",
    "Mul",
    "Pow",
    "Rational",
    "SampleResult",
    "Symbol",
    "add",
    "as_expr",
    "cancel",
    "coefficients_in",
    "cos",
    "differentiate",
    "divide_exact",
    "evaluate",
    "evaluate_masked",
    "evaluate_with_scale",
    "exp",
    "is_identically_zero",
    "is_zero_exact",
    "kernel",
    "ln",
    "mul",
    "normalize",
    "num",
    "numerator",
    "parse",
    "polynomial_degree",
    "pow_",
    "replace_subexpr",
    "sample_points",
    "sample_test",
    "sec",
    "sin",
    "sqrt",
    "substitute",
    "substitute_many",
    "sym",
    "symbols",
    "tan",
    "tanh",
    "to_string",
    "together",
]
