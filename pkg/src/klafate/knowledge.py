"""Executable knowledge model: ordered rule dispatch and assessment assembly.

The system failure-mode rules form a switch case over mutually exclusive
predicates: the first rule (in workbook order) that evaluates true names the
active failure mode. When none fires, a reserved exit label is returned; the
exit state is a protocol condition ("no fault"), not part of the frame, so it
carries no evidence mass.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from .errors import ConfigurationError, EvaluationError, ExclusivityError, InvalidParameterError
from .evidence import Frame, MassVector, build_evidence, spread_masses, approximation_factor
from .fmea import Workbook, causes_and_recommendations
from .ruledsl import (
    RuleExpr,
    Snapshot,
    ThresholdSet,
    check_rules_exclusive,
    eval_bool,
)

EXIT_LABEL = "no_fault"


@dataclass(frozen=True)
class KnowledgeModel:
    """Frame of system FM labels plus their dispatch rules, in workbook order."""

    frame: Frame
    rules: tuple[tuple[str, RuleExpr], ...]
    exit_label: str = EXIT_LABEL

    def __post_init__(self):
        labels = tuple(label for label, _ in self.rules)
        if labels != self.frame.labels:
            raise InvalidParameterError("rule labels must match the frame, in order")
        if self.exit_label in self.frame:
            raise InvalidParameterError(
                f"exit label {self.exit_label!r} collides with a frame label"
            )
        report = check_rules_exclusive([rule for _, rule in self.rules])
        if not report.exclusive:
            first, second = report.conflicting
            raise ExclusivityError(
                f"rules {labels[first]!r} and {labels[second]!r} can fire together",
                labels=(labels[first], labels[second]),
                witness=report.witness,
            )

    @classmethod
    def from_workbook(cls, workbook: Workbook, exit_label: str = EXIT_LABEL) -> "KnowledgeModel":
        labels = [fm.fm_id for fm in workbook.system_fms]
        return cls(
            frame=Frame(labels),
            rules=tuple((fm.fm_id, fm.rule) for fm in workbook.system_fms),
            exit_label=exit_label,
        )


@dataclass(frozen=True)
class Assessment:
    """Message for the operator: what fired, what to try, and how sure we are."""

    active_label: str
    label_text: str = ""
    effect: str = ""
    pairs: tuple[tuple[str, str], ...] = ()
    active_component_fms: tuple[str, ...] = ()
    w_r: Optional[float] = None
    evidence: Optional[MassVector] = None
    detected_at: float = 0.0
    published_at: Optional[float] = None

    def __post_init__(self):
        if self.evidence is not None and self.uncertainty is None:
            raise InvalidParameterError("evidence without uncertainty")

    @property
    def uncertainty(self) -> Optional[float]:
        return None if self.evidence is None else self.evidence.uncertainty

    @property
    def is_fault(self) -> bool:
        return self.evidence is not None


def dispatch(model: KnowledgeModel, snapshot: Snapshot, thresholds: ThresholdSet) -> str:
    """First rule (workbook order) that fires, or the exit label.

    Mutual exclusivity makes the result order-independent; ordering only
    decides how fast the exit clause is reached.
    """
    for label, rule in model.rules:
        try:
            if eval_bool(rule, snapshot, thresholds):
                return label
        except EvaluationError as err:
            raise EvaluationError(f"rule {label!r}: {err}", name=err.name) from err
    return model.exit_label


def transform_labels(model: KnowledgeModel, active_label: str, f: int) -> list[float]:
    """Per-label raw masses for the fired rule under sensitivity to zero."""
    return spread_masses(model.frame, active_label, approximation_factor(f))


def assess(
    model: KnowledgeModel,
    workbook: Workbook,
    weights: Mapping[str, float],
    snapshot: Snapshot,
    thresholds: Optional[ThresholdSet] = None,
    f: Optional[int] = None,
    detected_at: Optional[float] = None,
) -> Assessment:
    """Dispatch and assemble the full operator assessment.

    For a fired system FM this evaluates its component FMs, collects the
    matching cause/recommendation pairs (workbook row order) and builds the
    weighted evidence array. When nothing fires, a bare no-fault assessment is
    returned without evidence.
    """
    thresholds = thresholds if thresholds is not None else workbook.settings.combined()
    f = f if f is not None else workbook.approximation_exponent
    detected_at = detected_at if detected_at is not None else snapshot.timestamp

    active = dispatch(model, snapshot, thresholds)
    if active == model.exit_label:
        return Assessment(active_label=model.exit_label, detected_at=detected_at)

    missing = [label for label in model.frame.labels if label not in weights]
    if missing:
        raise ConfigurationError(f"no rule weight configured for labels {missing}")

    active_components = []
    for component in workbook.components_of(active):
        try:
            if eval_bool(component.rule, snapshot, thresholds):
                active_components.append(component.fm_id)
        except EvaluationError as err:
            raise EvaluationError(
                f"component FM {component.fm_id!r}: {err}", name=err.name
            ) from err

    pairs = causes_and_recommendations(workbook, active, active_components)
    evidence = build_evidence(
        model.frame,
        active,
        [weights[label] for label in model.frame.labels],
        f,
    )
    fm = workbook.system_fm(active)
    return Assessment(
        active_label=active,
        label_text=fm.label,
        effect=fm.effect,
        pairs=tuple(pairs),
        active_component_fms=tuple(active_components),
        w_r=weights[active],
        evidence=evidence,
        detected_at=detected_at,
    )
