"""Action-unit identifiers, emotion/AU rule tables and AU-to-point bindings.

All tables are static data transcribed verbatim; lookups are pure and the
constants are exported so they can be diffed against their sources with
``faup rules --dump``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import InvalidInputError, UnsupportedTransitionError

# The 16 action units used by the rule system.
AU_IDS = frozenset({1, 2, 4, 5, 6, 7, 9, 10, 12, 14, 15, 16, 17, 20, 23, 26})

# AUs with no geometric binding (absent from the AU-to-point table): they
# cannot be confirmed from the 24-point model and are flagged non-observable.
NON_OBSERVABLE_AUS = frozenset({10, 15})

OBSERVABLE_AUS = AU_IDS - NON_OBSERVABLE_AUS


def require_au(au: int) -> int:
    if au not in AU_IDS:
        raise InvalidInputError(f"unknown action unit {au!r}; valid ids: {sorted(AU_IDS)}")
    return au


class Emotion(Enum):
    SURPRISE = "Surprise"
    FEAR = "Fear"
    DISGUST = "Disgust"
    ANGER = "Anger"
    HAPPINESS = "Happiness"
    SADNESS = "Sadness"

    def __str__(self) -> str:
        return self.value


EMOTIONS: tuple[Emotion, ...] = tuple(Emotion)

# Row labels of the per-emotion absence detectors.
NOT_LABELS: dict[Emotion, str] = {
    Emotion.SURPRISE: "NSur",
    Emotion.FEAR: "NF",
    Emotion.DISGUST: "ND",
    Emotion.ANGER: "NA",
    Emotion.HAPPINESS: "NH",
    Emotion.SADNESS: "NSad",
}


@dataclass(frozen=True)
class AUPattern:
    """A single AU or a composite AU-tuple.

    A composite matches an observation only if every member unit is present.
    """

    kind: str  # "single" | "composite"
    units: frozenset[int]

    def __post_init__(self):
        for au in self.units:
            require_au(au)
        if self.kind == "single":
            if len(self.units) != 1:
                raise InvalidInputError("single pattern must hold exactly one AU")
        elif self.kind == "composite":
            if len(self.units) < 2:
                raise InvalidInputError("composite pattern needs at least two AUs")
        else:
            raise InvalidInputError(f"unknown pattern kind {self.kind!r}")

    @classmethod
    def single(cls, au: int) -> "AUPattern":
        return cls("single", frozenset({au}))

    @classmethod
    def composite(cls, *aus: int) -> "AUPattern":
        return cls("composite", frozenset(aus))

    def matches(self, present: frozenset[int]) -> bool:
        return self.units <= present

    def __str__(self) -> str:
        ids = ",".join(str(a) for a in sorted(self.units))
        return ids if self.kind == "single" else f"({ids})"


# Full AU sets per emotion.
EMOTION_AUS: dict[Emotion, frozenset[int]] = {
    Emotion.SURPRISE: frozenset({1, 2, 5, 15, 16, 20, 26}),
    Emotion.FEAR: frozenset({1, 2, 4, 5, 15, 20, 26}),
    Emotion.DISGUST: frozenset({2, 4, 9, 15, 17}),
    Emotion.ANGER: frozenset({2, 4, 7, 9, 10, 20, 26}),
    Emotion.HAPPINESS: frozenset({1, 6, 12, 14}),
    Emotion.SADNESS: frozenset({1, 4, 15, 23}),
}

# Unique markers: any one matching pattern suffices to identify the emotion.
UNIQUE_PATTERNS: dict[Emotion, frozenset[AUPattern]] = {
    Emotion.SURPRISE: frozenset({AUPattern.single(16)}),
    Emotion.FEAR: frozenset({AUPattern.composite(4, 5)}),
    Emotion.DISGUST: frozenset({AUPattern.single(17)}),
    Emotion.ANGER: frozenset({AUPattern.single(10)}),
    Emotion.HAPPINESS: frozenset({AUPattern.single(6), AUPattern.single(12),
                                  AUPattern.single(14)}),
    Emotion.SADNESS: frozenset({AUPattern.single(23)}),
}

# AUs that never occur in an emotion: observing any of them rules it out.
ABSENCE_AUS: dict[Emotion, frozenset[int]] = {
    Emotion.SURPRISE: frozenset({4, 6, 23}),
    Emotion.FEAR: frozenset({6, 9, 16, 23}),
    Emotion.DISGUST: frozenset({1, 7}),
    Emotion.ANGER: frozenset({1, 5, 23}),
    Emotion.HAPPINESS: frozenset({2, 4, 5, 9, 10, 16, 17, 20}),
    Emotion.SADNESS: frozenset({2, 5, 6, 9, 10, 16, 20}),
}


@dataclass(frozen=True)
class TransitionRule:
    """Present/absent AU requirements for one emotion transition.

    ``present`` is any-of across patterns, all-of within a composite.
    """

    source: Emotion
    target: Emotion
    present: frozenset[AUPattern]
    absent: frozenset[int]
    derived: bool = False


# Transition rows for a Surprise source, as printed (present sets shown as
# pattern strings, absent as raw AU sets).  The Disgust row lists AU 9 both
# present and absent; the verbatim data is kept here for dumping/diffing.
SURPRISE_TRANSITIONS_RAW: dict[Emotion, tuple[frozenset[AUPattern], frozenset[int]]] = {
    Emotion.FEAR: (frozenset({AUPattern.single(4)}),
                   frozenset({7, 9, 10, 17, 23})),
    Emotion.DISGUST: (frozenset({AUPattern.composite(4, 9, 17)}),
                      frozenset({9, 10, 23})),
    Emotion.ANGER: (frozenset({AUPattern.composite(4, 7, 9, 10)}),
                    frozenset({17, 23})),
    Emotion.HAPPINESS: (frozenset({AUPattern.single(6), AUPattern.single(12),
                                   AUPattern.single(14)}),
                        frozenset({4})),
    Emotion.SADNESS: (frozenset({AUPattern.composite(4, 23)}),
                      frozenset({7, 9, 10, 17})),
}


def emotion_aus(emotion: Emotion) -> frozenset[int]:
    """Full AU set of a basic emotion."""
    return EMOTION_AUS[emotion]


def unique_patterns(emotion: Emotion) -> frozenset[AUPattern]:
    """Patterns whose presence uniquely identifies the emotion."""
    return UNIQUE_PATTERNS[emotion]


def absence_aus(emotion: Emotion) -> frozenset[int]:
    """AUs whose presence rules the emotion out."""
    return ABSENCE_AUS[emotion]


def transition_rule(source: Emotion, target: Emotion) -> TransitionRule:
    """Tabulated transition rule; only a Surprise source is tabulated.

    The Surprise->Disgust row names AU 9 in both sets; the effective rule
    keeps 9 required-present and drops it from the absent set (a rule
    demanding an AU both present and absent is unsatisfiable).  The raw row
    is preserved in SURPRISE_TRANSITIONS_RAW.
    """
    if source is not Emotion.SURPRISE:
        raise UnsupportedTransitionError(
            f"no tabulated rule for source {source}; use derive_transition_rule")
    if target is source:
        raise UnsupportedTransitionError("no self-transition rule")
    present, absent = SURPRISE_TRANSITIONS_RAW[target]
    present_aus = frozenset().union(*(p.units for p in present))
    return TransitionRule(source, target, present, absent - present_aus)


def derive_transition_rule(source: Emotion, target: Emotion) -> TransitionRule:
    """Heuristic transition rule for pairs without a tabulated row.

    present: AUs gained by the target over the source, plus the target's
    unique patterns; absent: the union of every other emotion's unique-
    pattern AUs.  This does not reproduce the tabulated absent sets and is
    flagged ``derived``.
    """
    if source is target:
        raise UnsupportedTransitionError("no self-transition rule")
    gained = emotion_aus(target) - emotion_aus(source)
    present = frozenset({AUPattern.single(au) for au in gained}) | unique_patterns(target)
    absent: set[int] = set()
    for other in EMOTIONS:
        if other is target:
            continue
        for pattern in unique_patterns(other):
            absent |= pattern.units
    return TransitionRule(source, target, present, frozenset(absent), derived=True)


@dataclass(frozen=True)
class AUFeatureBinding:
    """Geometric effect of one AU: which points move and how."""

    au: int
    au_action: str     # up | down | pull | dimple | tight | wrinkle | stretch
    points: frozenset[str]
    point_action: str  # up | down | stretch | tight


_B = AUFeatureBinding
AU_BINDINGS: dict[int, AUFeatureBinding] = {
    1: _B(1, "up", frozenset({"br1", "bl1"}), "up"),
    2: _B(2, "up", frozenset({"br3", "bl3"}), "up"),
    4: _B(4, "down", frozenset({"br1", "bl1"}), "down"),
    5: _B(5, "up", frozenset({"mm1", "mm2"}), "up"),
    6: _B(6, "up", frozenset({"mr1", "ml1"}), "stretch"),
    7: _B(7, "tight", frozenset({"mr1", "ml1"}), "tight"),
    9: _B(9, "wrinkle", frozenset({"br1", "bl1"}), "down"),
    12: _B(12, "pull", frozenset({"mr1", "ml1"}), "stretch"),
    14: _B(14, "dimple", frozenset({"mr1", "ml1"}), "stretch"),
    16: _B(16, "down", frozenset({"mm3", "mm4"}), "down"),
    17: _B(17, "up", frozenset({"mm3", "mm4"}), "up"),
    20: _B(20, "stretch", frozenset({"mr1", "ml1"}), "stretch"),
    23: _B(23, "tight", frozenset({"mr1", "ml1"}), "tight"),
    # The printed source binds AU 26 to mm3/ml3; "down" belongs to the
    # mm3/mm4 midline group (as for AUs 16 and 17), so mm3/mm4 is used here.
    26: _B(26, "down", frozenset({"mm3", "mm4"}), "down"),
}
del _B


def au_bindings(au: int) -> AUFeatureBinding | None:
    """Point binding of an AU, or None for the non-observable AUs 10 and 15."""
    require_au(au)
    return AU_BINDINGS.get(au)


def features_to_monitor(patterns: frozenset[AUPattern]) -> tuple[frozenset[str], bool]:
    """Union of bound points over all AUs of the given patterns.

    Non-observable AUs contribute nothing; the second return value warns
    when every AU was non-observable (empty point set).
    """
    if not patterns:
        raise InvalidInputError("pattern set must be non-empty")
    points: set[str] = set()
    saw_observable = False
    for pattern in patterns:
        for au in pattern.units:
            binding = au_bindings(au)
            if binding is not None:
                saw_observable = True
                points |= binding.points
    return frozenset(points), not saw_observable


def dump_tables() -> str:
    """Human-readable dump of every rule table, for diffing against sources."""
    out: list[str] = []

    def fmt_aus(aus) -> str:
        return "{" + ", ".join(str(a) for a in sorted(aus)) + "}"

    def fmt_patterns(patterns) -> str:
        return "{" + ", ".join(sorted(str(p) for p in patterns)) + "}"

    out.append("AU sets per emotion")
    for e in EMOTIONS:
        out.append(f"  {e.value:<10} {fmt_aus(EMOTION_AUS[e])}")
    out.append("")
    out.append("Unique AU subsets per emotion")
    for e in EMOTIONS:
        out.append(f"  {e.value:<10} {fmt_patterns(UNIQUE_PATTERNS[e])}")
    out.append("")
    out.append("AUs absent per emotion")
    for e in EMOTIONS:
        out.append(f"  {NOT_LABELS[e]:<5} ({e.value:<9}) {fmt_aus(ABSENCE_AUS[e])}")
    out.append("")
    out.append("Transitions from Surprise (as printed)")
    for e, (present, absent) in SURPRISE_TRANSITIONS_RAW.items():
        out.append(f"  Surprise -> {e.value:<10} P: {fmt_patterns(present)}; "
                   f"A: {fmt_aus(absent)}")
    out.append("")
    out.append("AU to feature-point bindings")
    for au in sorted(AU_BINDINGS):
        b = AU_BINDINGS[au]
        pts = ", ".join(sorted(b.points))
        out.append(f"  AU{au:<3} {b.au_action:<8} -> {{{pts}}} {b.point_action}")
    out.append(f"  non-observable: {fmt_aus(NON_OBSERVABLE_AUS)} (no binding)")
    return "\n".join(out) + "\n"
