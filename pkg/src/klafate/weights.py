"""Confidence weights for knowledge rules.

Every weight lives in [0, 1]. A rule's weight is the plain mean of whichever
criteria are present for it: expert panel (w_p), KPI compliance (w_k) and
user rating (w_u). Before a fault has ever been resolved, the rule weight is
the panel weight alone. Weight history is kept so the accumulated weight can
smooth out short disturbances.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

from .errors import InvalidParameterError
from .fmea import CriterionFormula, MemberProfile, Workbook
from .ruledsl import Snapshot, ThresholdSet, eval_real

PANEL_CRITERION = "w_p"
KPI_CRITERION = "w_k"
USER_CRITERION = "w_u"

# Member criteria resolve workbook threshold constants with two decimals,
# so member weights are reported at that same resolution. This also keeps
# panel means exact for round tables (0.88 + 0.75 + 0.5 -> 0.71).
MEMBER_WEIGHT_DECIMALS = 2


class CriterionUndefinedError(InvalidParameterError):
    """A criteria formula fell through to its -1 sentinel for a member."""

    def __init__(self, member: str, criterion: str):
        self.member = member
        self.criterion = criterion
        super().__init__(
            f"criterion {criterion!r} is undefined for member {member!r} "
            f"(formula returned the -1 sentinel)"
        )


def _check_unit(value: float, what: str) -> float:
    if not 0.0 <= value <= 1.0:
        raise InvalidParameterError(f"{what} must be in [0, 1], got {value!r}")
    return float(value)


def member_weight(
    profile: MemberProfile,
    formulas: Sequence[CriterionFormula],
    team_thresholds: ThresholdSet,
) -> float:
    """Mean of the member's criteria weights (experience, machine experience, KPI).

    Each formula is evaluated over the member's profile fields; a -1 result
    means no clause matched and is reported as an error naming the member.
    """
    by_name = {f.name: f for f in formulas}
    for required in ("w_eg", "w_em", "w_ka"):
        if required not in by_name:
            raise InvalidParameterError(f"missing weight-update criterion {required!r}")
    snapshot = Snapshot(profile.as_snapshot_values())
    values = []
    for name in ("w_eg", "w_em", "w_ka"):
        value = eval_real(by_name[name].formula, snapshot, team_thresholds)
        if value == -1.0:
            raise CriterionUndefinedError(profile.name, name)
        values.append(_check_unit(value, f"criterion {name!r} for {profile.name!r}"))
    return round(sum(values) / len(values), MEMBER_WEIGHT_DECIMALS)


def panel_weight(member_weights: Sequence[float]) -> float:
    """Arithmetic mean of the member weights."""
    weights = [
        _check_unit(w, "member weight") for w in member_weights
    ]
    if not weights:
        raise InvalidParameterError("panel must have at least one member")
    return sum(weights) / len(weights)


def workbook_panel_weight(workbook: Workbook) -> float:
    """Panel weight straight from a workbook's profiles and criteria formulas."""
    members = [
        member_weight(profile, workbook.weight_update, workbook.settings.team)
        for profile in workbook.profiles
    ]
    return panel_weight(members)


@dataclass(frozen=True)
class KpiEntry:
    """One KPI sample vs its target: current value, target, per-KPI confidence."""

    current: float
    target: float
    weight: float = 1.0

    def __post_init__(self):
        if self.target <= 0:
            raise InvalidParameterError(f"KPI target must be positive, got {self.target!r}")
        _check_unit(self.weight, "KPI confidence weight")


def kpi_compliance(entries: Sequence[KpiEntry]) -> float:
    """Mean of weighted current/target ratios, clamped into [0, 1].

    Performance above target would push the ratio past 1; clamping keeps the
    result usable as a confidence weight.
    """
    if not entries:
        raise InvalidParameterError("at least one KPI entry is required")
    total = sum(e.current * e.weight / e.target for e in entries)
    return min(1.0, max(0.0, total / len(entries)))


def user_rating_weight(stars: int) -> float:
    """Linear star-to-weight mapping: 1..5 stars -> 0.2..1.0."""
    if not isinstance(stars, int) or isinstance(stars, bool) or not 1 <= stars <= 5:
        raise InvalidParameterError(f"rating must be an integer in 1..5, got {stars!r}")
    return stars / 5.0


def rule_weight(criteria: Mapping[str, float]) -> float:
    """Mean over the criteria that are present (a skipped rating just drops w_u)."""
    if not criteria:
        raise InvalidParameterError("at least one criterion is required")
    values = [_check_unit(v, f"criterion {name!r}") for name, v in criteria.items()]
    return sum(values) / len(values)


@dataclass(frozen=True)
class RuleWeight:
    """Current weight of one rule, its criteria breakdown and update history."""

    rule_id: str
    current: float
    criteria: Mapping[str, float] = field(default_factory=dict)
    history: tuple[tuple[float, float], ...] = ()  # (timestamp, w_r) per update

    def __post_init__(self):
        _check_unit(self.current, "rule weight")
        object.__setattr__(self, "criteria", dict(self.criteria))

    @property
    def accumulated(self) -> float:
        """Mean over all recorded updates; equals current before any update."""
        if not self.history:
            return self.current
        return sum(w for _, w in self.history) / len(self.history)


def prior_rule_weight(rule_id: str, panel: float) -> RuleWeight:
    """Initial weight: panel criterion only, empty history."""
    return RuleWeight(rule_id=rule_id, current=panel, criteria={PANEL_CRITERION: panel})


def accumulate(
    weight: RuleWeight, new_weight: float, criteria: Optional[Mapping[str, float]] = None,
    timestamp: float = 0.0,
) -> RuleWeight:
    """Record one weight update; the accumulated value is the history mean."""
    _check_unit(new_weight, "rule weight")
    return replace(
        weight,
        current=new_weight,
        criteria=dict(criteria) if criteria is not None else dict(weight.criteria),
        history=weight.history + ((timestamp, new_weight),),
    )
