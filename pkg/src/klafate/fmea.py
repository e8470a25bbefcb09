"""Knowledge workbook: data model and CSV directory loader.

A workbook is a directory of five UTF-8 CSV files (RFC-4180, LF endings):

* ``settings.csv``       columns ``section,name,value,unit``; sections are
  ``team``, ``system`` and ``component``
* ``weight_update.csv``  columns ``criterion,formula``; real-valued criteria
  formulas over member profile fields and team thresholds
* ``system.csv``         columns ``process,subprocess,fm_id,label,effect,rule,defs``
  (plus optional legacy ``severity,occurrence,detection`` columns, parsed but
  unused by the engine)
* ``component.csv``      columns ``fm_id,system_fm,cause,recommendation,rule,defs``
* ``profiles.csv``       columns ``name,e_g,e_m,waste,production``

``defs`` cells hold semicolon-separated ``Cn := expression`` aliases local to
their row; the rule column may reference them by name. Loading is atomic:
either every file parses, typechecks and links, or nothing is returned.

Scoping is enforced at load time: weight-update formulas may only use team
thresholds, system rules only system thresholds, component rules only
component thresholds. Any other identifier in a rule is a plant variable and
must be supplied by the data source at runtime.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .errors import (
    ExclusivityError,
    LinkError,
    NotFoundError,
    RuleSyntaxError,
    TypeMismatchError,
    UnresolvedNameError,
    WorkbookError,
)
from .ruledsl import (
    REAL,
    RuleExpr,
    Threshold,
    ThresholdSet,
    check_rules_exclusive,
    parse_rule,
    print_rule,
    referenced_names,
    substitute,
    typecheck,
)

SETTINGS_FILE = "settings.csv"
WEIGHT_UPDATE_FILE = "weight_update.csv"
SYSTEM_FILE = "system.csv"
COMPONENT_FILE = "component.csv"
PROFILES_FILE = "profiles.csv"

SETTINGS_HEADER = ("section", "name", "value", "unit")
WEIGHT_UPDATE_HEADER = ("criterion", "formula")
SYSTEM_HEADER = ("process", "subprocess", "fm_id", "label", "effect", "rule", "defs")
SYSTEM_RPN_COLUMNS = ("severity", "occurrence", "detection")
COMPONENT_HEADER = ("fm_id", "system_fm", "cause", "recommendation", "rule", "defs")
PROFILES_HEADER = ("name", "e_g", "e_m", "waste", "production")

SETTINGS_SECTIONS = ("team", "system", "component")

# Snapshot fields a weight-update formula may reference, one per profile column.
PROFILE_VARIABLES = frozenset({"e_g", "e_m", "waste", "production"})
REQUIRED_CRITERIA = ("w_eg", "w_em", "w_ka")

# Name of the optional settings row carrying the sensitivity-to-zero exponent.
APPROXIMATION_SETTING = "APPROXIMATION_F"
DEFAULT_APPROXIMATION_EXPONENT = 2

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")


@dataclass(frozen=True)
class MemberProfile:
    """Expert panel member: experience years and personal KPI figures."""

    name: str
    e_g: float  # years of general experience
    e_m: float  # years of experience on this machine
    waste: float  # waste ratio in [0, 1]
    production: float  # products per minute

    def __post_init__(self):
        if not self.name:
            raise WorkbookError("profile name must be non-empty")
        if self.e_g < 0 or self.e_m < 0:
            raise WorkbookError(f"profile {self.name!r}: experience years must be >= 0")
        if not 0.0 <= self.waste <= 1.0:
            raise WorkbookError(f"profile {self.name!r}: waste must be in [0, 1]")
        if self.production < 0:
            raise WorkbookError(f"profile {self.name!r}: production must be >= 0")

    def as_snapshot_values(self) -> dict[str, float]:
        return {
            "e_g": self.e_g,
            "e_m": self.e_m,
            "waste": self.waste,
            "production": self.production,
        }


@dataclass(frozen=True)
class KnowledgeTuple:
    """One system-level failure mode row.

    Causes and recommendations for a system FM live on its component rows;
    the effect column carries the operator-facing consequence text.
    """

    process: str
    subprocess: str
    fm_id: str
    label: str
    effect: str
    rule: RuleExpr  # alias-expanded, ready to evaluate
    rule_text: str  # canonical source text (aliases intact)
    defs: tuple[tuple[str, RuleExpr], ...] = ()
    rpn: Optional[tuple[float, float, float]] = None  # legacy severity/occurrence/detection

    @property
    def weight_ref(self) -> str:
        return self.fm_id


@dataclass(frozen=True)
class ComponentFM:
    """Component-level failure mode: one (cause, recommendation) pair per row."""

    fm_id: str
    system_fm: str
    cause: str
    recommendation: str
    rule: RuleExpr
    rule_text: str
    defs: tuple[tuple[str, RuleExpr], ...] = ()


@dataclass(frozen=True)
class WorkbookSettings:
    team: ThresholdSet
    system: ThresholdSet
    component: ThresholdSet

    def combined(self) -> ThresholdSet:
        return self.team.merged(self.system, self.component)


@dataclass(frozen=True)
class CriterionFormula:
    name: str
    formula: RuleExpr
    formula_text: str


@dataclass(frozen=True)
class Workbook:
    settings: WorkbookSettings
    weight_update: tuple[CriterionFormula, ...]
    system_fms: tuple[KnowledgeTuple, ...]
    component_fms: tuple[ComponentFM, ...]
    profiles: tuple[MemberProfile, ...]
    approximation_exponent: int
    variables: frozenset[str] = field(default_factory=frozenset)

    def criterion(self, name: str) -> CriterionFormula:
        for entry in self.weight_update:
            if entry.name == name:
                return entry
        raise NotFoundError(f"no weight-update criterion named {name!r}")

    def system_fm(self, fm_id: str) -> KnowledgeTuple:
        for fm in self.system_fms:
            if fm.fm_id == fm_id:
                return fm
        raise NotFoundError(f"unknown system FM {fm_id!r}")

    def components_of(self, system_fm: str) -> tuple[ComponentFM, ...]:
        self.system_fm(system_fm)
        return tuple(c for c in self.component_fms if c.system_fm == system_fm)


def causes_and_recommendations(
    workbook: Workbook, system_fm: str, active_component_fms: Sequence[str]
) -> list[tuple[str, str]]:
    """Cause/recommendation pairs for the active component FMs, in row order.

    An empty result is legitimate and signals the no-diagnosis path.
    """
    workbook.system_fm(system_fm)
    known = {c.fm_id for c in workbook.component_fms}
    active = set(active_component_fms)
    for fm_id in active:
        if fm_id not in known:
            raise NotFoundError(f"unknown component FM {fm_id!r}")
    return [
        (c.cause, c.recommendation)
        for c in workbook.component_fms
        if c.system_fm == system_fm and c.fm_id in active
    ]


# ---------------------------------------------------------------------------
# loading

def _read_rows(path: Path, filename: str, expected_header, optional_tail=()):
    file_path = path / filename
    if not file_path.exists():
        raise WorkbookError("missing workbook file", file=filename)
    with open(file_path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise WorkbookError("file is empty, header row required", file=filename) from None
        base = tuple(h.strip() for h in header[: len(expected_header)])
        tail = tuple(h.strip() for h in header[len(expected_header):])
        if base != tuple(expected_header) or (tail and tail != tuple(optional_tail)):
            raise WorkbookError(
                f"header must be {','.join(expected_header)}"
                + (f" (optionally plus {','.join(optional_tail)})" if optional_tail else "")
                + f", got {','.join(header)}",
                file=filename,
                row=1,
            )
        rows = []
        width = len(base) + len(tail)
        for number, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != width:
                raise WorkbookError(
                    f"expected {width} columns, got {len(row)}", file=filename, row=number
                )
            rows.append((number, row))
        return bool(tail), rows


def _parse_number(text: str, filename: str, row: int, what: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise WorkbookError(f"{what} is not a number: {text!r}", file=filename, row=row) from None
    if not math.isfinite(value):
        raise WorkbookError(f"{what} must be finite: {text!r}", file=filename, row=row)
    return value


def _parse_defs(text: str, filename: str, row: int) -> list[tuple[str, RuleExpr]]:
    definitions: list[tuple[str, RuleExpr]] = []
    expanded: dict[str, RuleExpr] = {}
    if not text.strip():
        return definitions
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ":=" not in chunk:
            raise WorkbookError(
                f"definition {chunk!r} must have the form 'name := expression'",
                file=filename,
                row=row,
            )
        name, _, body = chunk.partition(":=")
        name = name.strip()
        if not _NAME_RE.match(name):
            raise WorkbookError(f"invalid definition name {name!r}", file=filename, row=row)
        if name in expanded:
            raise WorkbookError(f"duplicate definition {name!r}", file=filename, row=row)
        try:
            expr = parse_rule(body.strip())
        except RuleSyntaxError as err:
            raise WorkbookError(
                f"definition {name!r}: {err}", file=filename, row=row
            ) from err
        # later definitions may build on earlier ones within the same row
        expr = substitute(expr, expanded)
        expanded[name] = expr
        definitions.append((name, expr))
    return definitions


def _parse_scoped_rule(
    rule_text: str,
    defs_text: str,
    own_thresholds: ThresholdSet,
    foreign: dict[str, str],
    filename: str,
    row: int,
):
    """Parse rule + defs, expand aliases, typecheck against the row's scope.

    Returns (expanded expr, canonical rule text, defs, variable names used).
    """
    definitions = _parse_defs(defs_text, filename, row)
    for name, _ in definitions:
        if name in own_thresholds or name in foreign:
            raise WorkbookError(
                f"definition {name!r} shadows a settings threshold", file=filename, row=row
            )
    try:
        raw = parse_rule(rule_text)
    except RuleSyntaxError as err:
        raise WorkbookError(f"rule: {err}", file=filename, row=row) from err
    expanded = substitute(raw, dict(definitions))
    names = referenced_names(expanded)
    for name in sorted(names):
        if name in foreign:
            raise WorkbookError(
                f"{name!r} is a {foreign[name]} threshold and is out of scope here",
                file=filename,
                row=row,
            )
    variables = {n for n in names if n not in own_thresholds}
    try:
        typed = typecheck(expanded, variables=variables, thresholds=own_thresholds.names())
    except (UnresolvedNameError, TypeMismatchError) as err:
        raise WorkbookError(f"rule: {err}", file=filename, row=row) from err
    if typed.kind != "bool":
        raise WorkbookError("rule must be boolean-valued", file=filename, row=row)
    return expanded, print_rule(raw), tuple(definitions), variables


def load_workbook(path) -> Workbook:
    """Load, typecheck and link a workbook directory; all-or-nothing."""
    path = Path(path)
    if not path.is_dir():
        raise WorkbookError(f"workbook directory not found: {path}")

    # settings
    _, setting_rows = _read_rows(path, SETTINGS_FILE, SETTINGS_HEADER)
    sections: dict[str, dict[str, Threshold]] = {s: {} for s in SETTINGS_SECTIONS}
    owner: dict[str, str] = {}
    for number, (section, name, value, unit) in (
        (n, tuple(cell.strip() for cell in row)) for n, row in setting_rows
    ):
        if section not in sections:
            raise WorkbookError(
                f"unknown settings section {section!r}, expected one of {SETTINGS_SECTIONS}",
                file=SETTINGS_FILE,
                row=number,
            )
        if not _NAME_RE.match(name):
            raise WorkbookError(f"invalid threshold name {name!r}", file=SETTINGS_FILE, row=number)
        if name in owner:
            raise WorkbookError(
                f"threshold {name!r} already declared in section {owner[name]!r}",
                file=SETTINGS_FILE,
                row=number,
            )
        numeric = _parse_number(value, SETTINGS_FILE, number, f"threshold {name!r}")
        sections[section][name] = Threshold(numeric, None if unit in ("", "-") else unit)
        owner[name] = section
    settings = WorkbookSettings(
        team=ThresholdSet(sections["team"]),
        system=ThresholdSet(sections["system"]),
        component=ThresholdSet(sections["component"]),
    )

    exponent = DEFAULT_APPROXIMATION_EXPONENT
    if APPROXIMATION_SETTING in owner:
        raw = settings.combined().value(APPROXIMATION_SETTING)
        if raw != int(raw) or int(raw) < 1:
            raise WorkbookError(
                f"{APPROXIMATION_SETTING} must be an integer >= 1, got {raw}",
                file=SETTINGS_FILE,
            )
        exponent = int(raw)

    # weight update criteria
    _, criterion_rows = _read_rows(path, WEIGHT_UPDATE_FILE, WEIGHT_UPDATE_HEADER)
    criteria: list[CriterionFormula] = []
    for number, (criterion, formula_text) in (
        (n, (row[0].strip(), row[1].strip())) for n, row in criterion_rows
    ):
        if not _NAME_RE.match(criterion):
            raise WorkbookError(
                f"invalid criterion name {criterion!r}", file=WEIGHT_UPDATE_FILE, row=number
            )
        if any(c.name == criterion for c in criteria):
            raise WorkbookError(
                f"duplicate criterion {criterion!r}", file=WEIGHT_UPDATE_FILE, row=number
            )
        try:
            formula = parse_rule(formula_text)
            typed = typecheck(
                formula, variables=PROFILE_VARIABLES, thresholds=settings.team.names()
            )
        except RuleSyntaxError as err:
            raise WorkbookError(f"formula: {err}", file=WEIGHT_UPDATE_FILE, row=number) from err
        except UnresolvedNameError as err:
            section = owner.get(err.name)
            hint = (
                f" ({err.name!r} is a {section} threshold; only team thresholds and "
                f"profile fields are available here)"
                if section and section != "team"
                else ""
            )
            raise WorkbookError(
                f"formula: {err}{hint}", file=WEIGHT_UPDATE_FILE, row=number
            ) from err
        except TypeMismatchError as err:
            raise WorkbookError(f"formula: {err}", file=WEIGHT_UPDATE_FILE, row=number) from err
        if typed.kind != REAL:
            raise WorkbookError(
                f"criterion {criterion!r} must be real-valued",
                file=WEIGHT_UPDATE_FILE,
                row=number,
            )
        criteria.append(CriterionFormula(criterion, formula, print_rule(formula)))
    present = {c.name for c in criteria}
    missing = [name for name in REQUIRED_CRITERIA if name not in present]
    if missing:
        raise WorkbookError(
            f"missing required criteria: {', '.join(missing)}", file=WEIGHT_UPDATE_FILE
        )

    # profiles
    _, profile_rows = _read_rows(path, PROFILES_FILE, PROFILES_HEADER)
    profiles: list[MemberProfile] = []
    for number, row in profile_rows:
        name = row[0].strip()
        if any(p.name == name for p in profiles):
            raise WorkbookError(f"duplicate profile {name!r}", file=PROFILES_FILE, row=number)
        numbers = [
            _parse_number(cell, PROFILES_FILE, number, f"profile column {col!r}")
            for col, cell in zip(PROFILES_HEADER[1:], row[1:])
        ]
        try:
            profiles.append(MemberProfile(name, *numbers))
        except WorkbookError as err:
            raise WorkbookError(str(err), file=PROFILES_FILE, row=number) from err
    if not profiles:
        raise WorkbookError("at least one member profile is required", file=PROFILES_FILE)

    # system failure modes
    has_rpn, system_rows = _read_rows(
        path, SYSTEM_FILE, SYSTEM_HEADER, optional_tail=SYSTEM_RPN_COLUMNS
    )
    foreign_for_system = {
        name: section for name, section in owner.items() if section != "system"
    }
    system_fms: list[KnowledgeTuple] = []
    variables: set[str] = set()
    for number, row in system_rows:
        process, subprocess, fm_id, label, effect, rule_text, defs_text = (
            cell.strip() for cell in row[:7]
        )
        if not _NAME_RE.match(fm_id):
            raise WorkbookError(f"invalid fm_id {fm_id!r}", file=SYSTEM_FILE, row=number)
        if any(fm.fm_id == fm_id for fm in system_fms):
            raise WorkbookError(
                f"duplicate system FM {fm_id!r}; each failure mode has exactly one rule",
                file=SYSTEM_FILE,
                row=number,
            )
        expanded, canonical, defs, used = _parse_scoped_rule(
            rule_text, defs_text, settings.system, foreign_for_system, SYSTEM_FILE, number
        )
        rpn = None
        if has_rpn:
            rpn = tuple(
                _parse_number(cell, SYSTEM_FILE, number, f"RPN column {col!r}")
                for col, cell in zip(SYSTEM_RPN_COLUMNS, row[7:])
            )
        variables |= used
        system_fms.append(
            KnowledgeTuple(
                process=process,
                subprocess=subprocess,
                fm_id=fm_id,
                label=label,
                effect=effect,
                rule=expanded,
                rule_text=canonical,
                defs=defs,
                rpn=rpn,
            )
        )
    if not system_fms:
        raise WorkbookError("at least one system FM is required", file=SYSTEM_FILE)

    # component failure modes
    _, component_rows = _read_rows(path, COMPONENT_FILE, COMPONENT_HEADER)
    foreign_for_component = {
        name: section for name, section in owner.items() if section != "component"
    }
    system_ids = {fm.fm_id for fm in system_fms}
    component_fms: list[ComponentFM] = []
    for number, row in component_rows:
        fm_id, system_fm, cause, recommendation, rule_text, defs_text = (
            cell.strip() for cell in row
        )
        if not _NAME_RE.match(fm_id):
            raise WorkbookError(f"invalid fm_id {fm_id!r}", file=COMPONENT_FILE, row=number)
        if any(c.fm_id == fm_id for c in component_fms):
            raise WorkbookError(
                f"duplicate component FM {fm_id!r}", file=COMPONENT_FILE, row=number
            )
        if system_fm not in system_ids:
            raise LinkError(
                f"component FM {fm_id!r} references unknown system FM {system_fm!r}",
                file=COMPONENT_FILE,
                row=number,
            )
        expanded, canonical, defs, used = _parse_scoped_rule(
            rule_text,
            defs_text,
            settings.component,
            foreign_for_component,
            COMPONENT_FILE,
            number,
        )
        variables |= used
        component_fms.append(
            ComponentFM(
                fm_id=fm_id,
                system_fm=system_fm,
                cause=cause,
                recommendation=recommendation,
                rule=expanded,
                rule_text=canonical,
                defs=defs,
            )
        )

    # ordered dispatch requires mutually exclusive system rules
    report = check_rules_exclusive([fm.rule for fm in system_fms])
    if not report.exclusive:
        first, second = report.conflicting
        raise ExclusivityError(
            f"system FMs {system_fms[first].fm_id!r} and {system_fms[second].fm_id!r} "
            f"can fire together under {report.witness}",
            labels=(system_fms[first].fm_id, system_fms[second].fm_id),
            witness=report.witness,
            file=SYSTEM_FILE,
        )

    return Workbook(
        settings=settings,
        weight_update=tuple(criteria),
        system_fms=tuple(system_fms),
        component_fms=tuple(component_fms),
        profiles=tuple(profiles),
        approximation_exponent=exponent,
        variables=frozenset(variables),
    )


# ---------------------------------------------------------------------------
# saving

def _format_value(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _format_defs(defs) -> str:
    return "; ".join(f"{name} := {print_rule(expr)}" for name, expr in defs)


def _write_csv(path: Path, header, rows):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    path.write_text(buffer.getvalue(), encoding="utf-8", newline="")


def save_workbook(workbook: Workbook, path) -> None:
    """Write the workbook back as canonical CSV files (stable byte-for-byte)."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)

    settings_rows = []
    for section in SETTINGS_SECTIONS:
        section_set: ThresholdSet = getattr(workbook.settings, section)
        for name, entry in section_set.entries.items():
            settings_rows.append(
                (section, name, _format_value(entry.value), entry.unit or "-")
            )
    _write_csv(path / SETTINGS_FILE, SETTINGS_HEADER, settings_rows)

    _write_csv(
        path / WEIGHT_UPDATE_FILE,
        WEIGHT_UPDATE_HEADER,
        [(c.name, c.formula_text) for c in workbook.weight_update],
    )

    has_rpn = any(fm.rpn is not None for fm in workbook.system_fms)
    header = SYSTEM_HEADER + (SYSTEM_RPN_COLUMNS if has_rpn else ())
    system_rows = []
    for fm in workbook.system_fms:
        row = [
            fm.process,
            fm.subprocess,
            fm.fm_id,
            fm.label,
            fm.effect,
            fm.rule_text,
            _format_defs(fm.defs),
        ]
        if has_rpn:
            row.extend(_format_value(v) for v in (fm.rpn or (0.0, 0.0, 0.0)))
        system_rows.append(row)
    _write_csv(path / SYSTEM_FILE, header, system_rows)

    _write_csv(
        path / COMPONENT_FILE,
        COMPONENT_HEADER,
        [
            (c.fm_id, c.system_fm, c.cause, c.recommendation, c.rule_text, _format_defs(c.defs))
            for c in workbook.component_fms
        ],
    )

    _write_csv(
        path / PROFILES_FILE,
        PROFILES_HEADER,
        [
            (
                p.name,
                _format_value(p.e_g),
                _format_value(p.e_m),
                _format_value(p.waste),
                _format_value(p.production),
            )
            for p in workbook.profiles
        ],
    )
