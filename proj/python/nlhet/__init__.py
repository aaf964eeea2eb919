"""Python bindings for the nlhet solver and diagnostics."""

from ._nlhet import (
    Config,
    NlhetError,
    ParseError,
    appendix_bench,
    clean_intervals,
    explicit_layer,
    layer_fit,
    load_config,
    parse_config,
    solve,
    tail_exponent,
    verify_model,
)

__all__ = [
    "Config",
    "NlhetError",
    "ParseError",
    "appendix_bench",
    "clean_intervals",
    "explicit_layer",
    "layer_fit",
    "load_config",
    "parse_config",
    "solve",
    "tail_exponent",
    "verify_model",
]
