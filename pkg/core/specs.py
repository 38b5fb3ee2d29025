"""
Pure diagnostic checks for a test run.

RULES (non-negotiable):
    - No file IO, no randomness, no optimizer calls
    - No mutation of the context (read-only)
    - Deterministic: same input -> same output
    - Return SpecResult

Each function takes a CheckContext and returns a SpecResult. Checks are
registered by name so the pipeline can list them per stage as strings.
Error-severity failures stop the run; warning-severity failures are reported.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

from core.errors import SpecError
from core.estimation import bandwidth_in_regime
from core.geometry import orthogonality_error
from core.models import BootstrapResult, Dataset, Diagnostics, FitResult, IndexFrame, StatisticOutput

ERROR = "error"
WARNING = "warning"

ORTHONORMAL_TOL = 1e-10
PSD_TOL = -1e-9


@dataclass
class SpecResult:
    """Result of evaluating a single check.

    The suggested_fix field tells the user what to change in the data or settings.
    """
    rule_id: str
    passed: bool
    message: str = ""
    suggested_fix: str = ""
    severity: str = ERROR
    tags: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rule_id": self.rule_id,
            "passed": self.passed,
            "message": self.message,
            "suggested_fix": self.suggested_fix,
            "severity": self.severity,
            "tags": self.tags,
        }


@dataclass
class CheckContext:
    """Read-only view of a run handed to every check."""
    dataset: Dataset
    h: float
    fit: Optional[FitResult] = None
    frame: Optional[IndexFrame] = None
    statistic: Optional[StatisticOutput] = None
    bootstrap: Optional[BootstrapResult] = None
    psd_diagnostic: Optional[float] = None
    diagnostics: Diagnostics = field(default_factory=Diagnostics)


# Registry: spec_name -> spec function
_SPEC_REGISTRY: Dict[str, Callable[[CheckContext], SpecResult]] = {}


def register_spec(name: str):
    """Decorator to register a check function by name."""
    def decorator(fn: Callable[[CheckContext], SpecResult]):
        _SPEC_REGISTRY[name] = fn
        return fn
    return decorator


def get_spec(name: str) -> Callable[[CheckContext], SpecResult]:
    """Look up a check by name. Raises KeyError if not found."""
    if name not in _SPEC_REGISTRY:
        raise KeyError(f"Unknown spec: '{name}'. Available: {list(_SPEC_REGISTRY.keys())}")
    return _SPEC_REGISTRY[name]


def evaluate_specs(names: list[str], context: CheckContext) -> list[SpecResult]:
    """Evaluate a list of checks against a context. Returns all results."""
    return [get_spec(name)(context) for name in names]


def all_passed(results: list[SpecResult]) -> bool:
    return all(r.passed for r in results)


def enforce(results: list[SpecResult]) -> list[str]:
    """Raise on the first failed error check; return messages of failed warnings."""
    for r in results:
        if not r.passed and r.severity == ERROR:
            raise SpecError(r.rule_id, r.message, r.suggested_fix)
    return [f"{r.rule_id}: {r.message}" for r in results if not r.passed]


# ---------------------------------------------------------------------------
# Input checks
# ---------------------------------------------------------------------------

@register_spec("sample_size")
def sample_size(context: CheckContext) -> SpecResult:
    """Pre-condition: n >= 10 observations and p >= 2 covariates."""
    n, p = context.dataset.n, context.dataset.p
    if n < 10 or p < 2:
        return SpecResult(
            rule_id="sample_size",
            passed=False,
            message=f"n={n}, p={p}; the tests need n >= 10 and p >= 2",
            suggested_fix="Provide more observations or at least two covariates",
            tags=["pre", "data"],
        )
    return SpecResult(rule_id="sample_size", passed=True, message=f"n={n}, p={p}",
                      tags=["pre", "data"])


# ---------------------------------------------------------------------------
# Fit checks
# ---------------------------------------------------------------------------

@register_spec("frame_orthonormal")
def frame_orthonormal(context: CheckContext) -> SpecResult:
    """Invariant: (beta | A(beta)) is an orthogonal matrix."""
    error = orthogonality_error(context.frame)
    if error > ORTHONORMAL_TOL:
        return SpecResult(
            rule_id="frame_orthonormal",
            passed=False,
            message=f"max |B'B - I| = {error:.3g}",
            suggested_fix="Internal error in the complement construction",
            tags=["invariant", "geometry"],
        )
    return SpecResult(rule_id="frame_orthonormal", passed=True,
                      message=f"max |B'B - I| = {error:.3g}", tags=["invariant", "geometry"])


@register_spec("complement_fallback")
def complement_fallback(context: CheckContext) -> SpecResult:
    """Warning: the direction was nearly parallel to a canonical axis."""
    used = context.frame.fallback_used
    return SpecResult(
        rule_id="complement_fallback",
        passed=not used,
        message=("near-parallel fallback used in the complement basis" if used
                 else "canonical Gram-Schmidt seeds used"),
        suggested_fix="None needed; the statistic is invariant to the complement choice",
        severity=WARNING,
        tags=["post", "geometry"],
    )


@register_spec("bandwidth_regime")
def bandwidth_regime(context: CheckContext) -> SpecResult:
    """Warning: g = 1/||beta~|| outside [0.1 n^{-1/4}, 10 n^{-1/5}]."""
    g, n = context.fit.bandwidth_g, context.dataset.n
    if not bandwidth_in_regime(g, n):
        return SpecResult(
            rule_id="bandwidth_regime",
            passed=False,
            message=f"g={g:.4g} outside [{0.1 * n ** -0.25:.4g}, {10 * n ** -0.2:.4g}]",
            suggested_fix="Inspect the fit; the asymptotic theory assumes g = n^-gamma, 1/5 < gamma < 1/4",
            severity=WARNING,
            tags=["post", "bandwidth"],
        )
    return SpecResult(rule_id="bandwidth_regime", passed=True, message=f"g={g:.4g}",
                      severity=WARNING, tags=["post", "bandwidth"])


@register_spec("bandwidth_ratio")
def bandwidth_ratio(context: CheckContext) -> SpecResult:
    """Warning: h / g^2 should be small."""
    ratio = context.h / context.fit.bandwidth_g ** 2
    return SpecResult(
        rule_id="bandwidth_ratio",
        passed=ratio < 1.0,
        message=f"h/g^2 = {ratio:.4g}",
        suggested_fix="Use a smaller bandwidth factor c",
        severity=WARNING,
        tags=["post", "bandwidth"],
    )


@register_spec("smoother_floors")
def smoother_floors(context: CheckContext) -> SpecResult:
    """Warning: a kernel denominator or density estimate hit its floor."""
    d = context.diagnostics
    hits = {k: d.get(k) for k in ("nw_denominator_floor", "density_floor") if d.get(k)}
    return SpecResult(
        rule_id="smoother_floors",
        passed=not hits,
        message=(", ".join(f"{k}={v}" for k, v in hits.items()) if hits
                 else "no floors hit"),
        suggested_fix="Check for isolated index values or extreme bandwidths",
        severity=WARNING,
        tags=["post", "numerics"],
    )


# ---------------------------------------------------------------------------
# Statistic checks
# ---------------------------------------------------------------------------

@register_spec("gram_psd")
def gram_psd(context: CheckContext) -> SpecResult:
    """Warning: the full quadratic form must be non-negative for a Gram matrix."""
    value = context.psd_diagnostic
    return SpecResult(
        rule_id="gram_psd",
        passed=value is not None and value >= PSD_TOL,
        message=f"full quadratic form = {value!r}",
        suggested_fix="Numerical trouble in the residual inner products",
        severity=WARNING,
        tags=["post", "numerics"],
    )


@register_spec("bootstrap_failures")
def bootstrap_failures(context: CheckContext) -> SpecResult:
    """Warning: more than 5% of bootstrap replicates failed."""
    boot = context.bootstrap
    share = boot.failure_share
    if share > 0.05:
        return SpecResult(
            rule_id="bootstrap_failures",
            passed=False,
            message=f"bootstrap degraded: {boot.failures} of {boot.B} replicates failed",
            suggested_fix="Increase optimizer.max_evals or optimizer.bootstrap_starts",
            severity=WARNING,
            tags=["post", "bootstrap"],
        )
    return SpecResult(rule_id="bootstrap_failures", passed=True,
                      message=f"{boot.failures} of {boot.B} replicates failed",
                      severity=WARNING, tags=["post", "bootstrap"])
