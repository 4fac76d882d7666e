"""Logic-guided alpha factor search: DSL evaluation, constraint compilation,
backtesting and scripted search runs from Python."""

from __future__ import annotations

import json
import os
from typing import Any, Mapping, Optional, Sequence, Tuple

from . import _core
from ._core import (
    AgentError,
    CompileError,
    DataError,
    Error,
    FitError,
    LeakageError,
    Panel,
    ParseError,
    PreconditionError,
    SchemaError,
    canonical,
    daily_ic,
    evaluate,
    max_drawdown,
)

__all__ = [
    "AgentError", "CompileError", "DataError", "Error", "FitError", "LeakageError", "Panel",
    "ParseError", "PreconditionError", "SchemaError", "backtest", "canonical", "catalogue", "check",
    "compile_logic", "daily_ic", "evaluate", "max_drawdown", "operators", "run", "variables",
]

Interval = Tuple[str, str]


def operators(expression: str) -> list[str]:
    return sorted(_core.operators(expression))


def variables(expression: str) -> list[str]:
    return sorted(_core.variables(expression))


def catalogue() -> list[dict]:
    """Every DSL operator with its families and a one-line description."""
    return json.loads(_core.catalogue())


def compile_logic(h_struct: Mapping[str, Any]) -> dict:
    """Compile a structured logic ({"C": ..., "B": ...}) into its constraint set."""
    return json.loads(_core.compile_logic(json.dumps(h_struct)))


def check(expression: str, gamma: Mapping[str, Any]) -> dict:
    """Check an expression against a compiled constraint set."""
    return json.loads(_core.check(expression, json.dumps(gamma, sort_keys=True)))


def backtest(
    expression: str,
    panel: Panel,
    splits: Mapping[str, Sequence[str]],
    *,
    strategy: Optional[Mapping[str, Any]] = None,
    raw: bool = False,
    horizon: int = 1,
    final: bool = False,
) -> dict:
    """Train/validation reports for one expression; the test report only with final=True."""
    out = _core.backtest(
        expression,
        panel,
        json.dumps({k: list(v) for k, v in splits.items()}),
        json.dumps(dict(strategy or {})),
        raw,
        horizon,
        final,
    )
    return json.loads(out)


def run(
    config: os.PathLike | str,
    *,
    output_dir: os.PathLike | str | None = None,
    seed: Optional[int] = None,
    resume: bool = False,
    final: bool = False,
) -> dict:
    """Run (or resume) a configured search and return its summary."""
    out = _core.run(
        os.fspath(config),
        None if output_dir is None else os.fspath(output_dir),
        seed,
        resume,
        final,
    )
    return json.loads(out)
