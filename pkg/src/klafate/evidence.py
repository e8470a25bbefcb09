"""Weighted basic-probability-assignment core with explicit overall uncertainty.

A frame of discernment holds one label per knowledge rule. When a rule fires,
its full certainty is softened with a sensitivity-to-zero factor so that every
label keeps a sliver of mass, then each mass is scaled by the per-rule
confidence weight. Whatever weighted mass is lost becomes the explicit overall
uncertainty, so the components always sum to one.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidParameterError, NotFoundError

CONSERVATION_TOL = 1e-9


@dataclass(frozen=True)
class Frame:
    """Ordered set of rule labels; mass indices follow label positions."""

    labels: tuple[str, ...]

    def __init__(self, labels):
        labels = tuple(labels)
        if not labels:
            raise InvalidParameterError("frame needs at least one label")
        if any(not isinstance(lbl, str) or not lbl for lbl in labels):
            raise InvalidParameterError("frame labels must be non-empty strings")
        if len(set(labels)) != len(labels):
            raise InvalidParameterError(f"frame labels must be unique: {labels}")
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return len(self.labels)

    def __contains__(self, label):
        return label in self.labels

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise NotFoundError(f"label {label!r} not in frame {self.labels}") from None


@dataclass(frozen=True)
class MassVector:
    """Per-label masses plus the explicit overall uncertainty U.

    Invariant: every component lies in [0, 1] and
    sum(masses) + uncertainty == 1 within ``CONSERVATION_TOL``.
    """

    frame: Frame
    masses: tuple[float, ...]
    uncertainty: float

    def __post_init__(self):
        if len(self.masses) != len(self.frame):
            raise InvalidParameterError(
                f"{len(self.masses)} masses for a frame of {len(self.frame)}"
            )
        for m in self.masses:
            if not 0.0 <= m <= 1.0:
                raise InvalidParameterError(f"mass {m} outside [0, 1]")
        if not 0.0 <= self.uncertainty <= 1.0:
            raise InvalidParameterError(f"uncertainty {self.uncertainty} outside [0, 1]")
        total = sum(self.masses) + self.uncertainty
        if abs(total - 1.0) > CONSERVATION_TOL:
            raise InvalidParameterError(
                f"masses + uncertainty must equal 1, got {total!r}"
            )

    def mass(self, label: str) -> float:
        return self.masses[self.frame.index(label)]

    def as_array(self) -> tuple[float, ...]:
        """Flat (m_1, ..., m_n, U) form used on the wire."""
        return self.masses + (self.uncertainty,)


def approximation_factor(f: int) -> float:
    """Sensitivity-to-zero factor k = 1 - 10^(-f).

    Larger exponents push the active label's raw mass closer to (but never
    reaching) 1.
    """
    if not isinstance(f, int) or isinstance(f, bool) or f < 1:
        raise InvalidParameterError(f"approximation exponent must be an integer >= 1, got {f!r}")
    return 1.0 - 10.0 ** (-f)


def spread_masses(frame: Frame, active_label: str, k: float) -> list[float]:
    """Raw mass distribution: k on the active label, (1-k)/(n-1) elsewhere.

    A single-label frame cannot spread and gets exactly 1.0.
    """
    idx = frame.index(active_label)
    n = len(frame)
    if n == 1:
        return [1.0]
    if not 0.0 < k < 1.0:
        raise InvalidParameterError(f"spread factor must be in (0, 1), got {k!r}")
    rest = (1.0 - k) / (n - 1)
    return [k if i == idx else rest for i in range(n)]


def weighted_uncertainty(masses, weights) -> float:
    """Overall uncertainty U = 1 - sum(m_j * w_j).

    Masses must already sum to one; each weight expresses the confidence in
    its label and must lie in [0, 1].
    """
    masses = list(masses)
    weights = list(weights)
    if len(masses) != len(weights):
        raise InvalidParameterError(
            f"{len(masses)} masses but {len(weights)} weights"
        )
    if abs(sum(masses) - 1.0) > CONSERVATION_TOL:
        raise InvalidParameterError(f"masses must sum to 1, got {sum(masses)!r}")
    for w in weights:
        if not 0.0 <= w <= 1.0:
            raise InvalidParameterError(f"weight {w} outside [0, 1]")
    u = 1.0 - sum(m * w for m, w in zip(masses, weights))
    # Guard against sign noise when every weight is exactly 1.
    return min(1.0, max(0.0, u))


def build_evidence(frame: Frame, active_label: str, weights, f: int) -> MassVector:
    """Evidence array for one fired rule: weighted spread masses plus U."""
    weights = list(weights)
    if len(weights) != len(frame):
        raise InvalidParameterError(
            f"{len(weights)} weights for a frame of {len(frame)}"
        )
    k = approximation_factor(f)
    spread = spread_masses(frame, active_label, k)
    u = weighted_uncertainty(spread, weights)
    masses = tuple(m * w for m, w in zip(spread, weights))
    return MassVector(frame=frame, masses=masses, uncertainty=u)
