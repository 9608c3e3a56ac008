"""Diversity-aware RL molecule generation: python bindings for the C++ core."""

from ._core import (
    ConfigError,
    ParseError,
    canonical,
    fingerprint_bits,
    generate_corpus,
    klucb_solve,
    molecular_scaffold,
    oracle_score,
    parse_config,
    parse_error,
    parse_ok,
    penalty_erf,
    penalty_ims,
    penalty_linear,
    penalty_sigmoid,
    penalty_tanh,
    pretrain,
    run,
    sample,
    strategies,
    tanimoto_distance,
    topological_scaffold,
)

__all__ = [
    "ConfigError",
    "ParseError",
    "canonical",
    "fingerprint_bits",
    "generate_corpus",
    "klucb_solve",
    "molecular_scaffold",
    "oracle_score",
    "parse_config",
    "parse_error",
    "parse_ok",
    "penalty_erf",
    "penalty_ims",
    "penalty_linear",
    "penalty_sigmoid",
    "penalty_tanh",
    "pretrain",
    "run",
    "sample",
    "strategies",
    "tanimoto_distance",
    "topological_scaffold",
]
