"""AU-observation classification, decision trees and pruning planner.

Classification matches unique AU markers against an observation and
filters by the absence tables.  The absence and transition decision trees
are induced greedily by information gain over exhaustive truth tables of
their restricted attribute sets, then validated against the defining
predicates on every assignment, so the trees are accelerators with the
table predicates staying authoritative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

from .aucodes import (
    EMOTIONS,
    Emotion,
    AUPattern,
    absence_aus,
    au_bindings,
    emotion_aus,
    derive_transition_rule,
    features_to_monitor,
    require_au,
    transition_rule,
    unique_patterns,
)
from .errors import InvalidInputError, UnsupportedTransitionError

# Attribute restriction sets of the two trees.
ABSENCE_TREE_AUS: tuple[int, ...] = (1, 2, 4, 5, 6, 7, 9)
TRANSITION_TREE_AUS: tuple[int, ...] = (4, 6, 7, 10, 17, 23)


@dataclass(frozen=True)
class AUObservation:
    """Which AUs were seen present / confirmed absent; the rest are unknown."""

    present: frozenset[int] = frozenset()
    absent: frozenset[int] = frozenset()

    def __post_init__(self):
        for au in self.present | self.absent:
            require_au(au)
        overlap = self.present & self.absent
        if overlap:
            raise InvalidInputError(f"AUs both present and absent: {sorted(overlap)}")

    def status(self, au: int) -> str:
        if au in self.present:
            return "present"
        if au in self.absent:
            return "absent"
        return "unknown"


@dataclass(frozen=True)
class EmotionDecision:
    """Outcome of matching an observation: one emotion, several, or none."""

    matches: tuple[Emotion, ...]

    @property
    def is_single(self) -> bool:
        return len(self.matches) == 1

    @property
    def is_ambiguous(self) -> bool:
        return len(self.matches) > 1

    @property
    def is_indeterminate(self) -> bool:
        return not self.matches

    @property
    def emotion(self) -> Emotion | None:
        return self.matches[0] if self.is_single else None


def classify_observation(obs: AUObservation) -> EmotionDecision:
    """Match unique markers, then veto emotions whose absence set fires.

    An emotion matches when any of its unique patterns is fully present and
    none of its absence AUs were observed present.  Ambiguity (several
    matches) is a value, not an error.
    """
    matches = []
    for e in EMOTIONS:
        if not any(p.matches(obs.present) for p in unique_patterns(e)):
            continue
        if absence_aus(e) & obs.present:
            continue
        matches.append(e)
    return EmotionDecision(tuple(matches))


def absent_emotions(obs: AUObservation) -> frozenset[Emotion]:
    """Emotions ruled out by the observation (absence set intersects present)."""
    return frozenset(e for e in EMOTIONS if absence_aus(e) & obs.present)


# ---------------------------------------------------------------------------
# Decision trees
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TreeLeaf:
    # Absence tree: frozenset of ruled-out emotions (empty = indeterminate).
    # Transition tree: target Emotion or None (indeterminate).
    label: object


@dataclass(frozen=True)
class TreeTest:
    au: int
    if_absent: "TreeTest | TreeLeaf"
    if_present: "TreeTest | TreeLeaf"


@dataclass(frozen=True)
class DecisionTree:
    kind: str                      # "absence" | "transition"
    attributes: frozenset[int]
    root: "TreeTest | TreeLeaf"

    def depth(self) -> int:
        def walk(node):
            if isinstance(node, TreeLeaf):
                return 0
            return 1 + max(walk(node.if_absent), walk(node.if_present))
        return walk(self.root)

    def paths(self) -> list[tuple[tuple[int, ...], object]]:
        """(tested AUs along path, leaf label) for every root-to-leaf path."""
        out = []

        def walk(node, trail):
            if isinstance(node, TreeLeaf):
                out.append((tuple(trail), node.label))
                return
            walk(node.if_absent, trail + [node.au])
            walk(node.if_present, trail + [node.au])

        walk(self.root, [])
        return out

    def render_text(self) -> str:
        lines: list[str] = []

        def fmt(label) -> str:
            if label is None or label == frozenset():
                return "indeterminate"
            if isinstance(label, Emotion):
                return label.value
            return "{" + ", ".join(sorted(e.value for e in label)) + "}"

        def walk(node, indent):
            pad = "  " * indent
            if isinstance(node, TreeLeaf):
                lines.append(f"{pad}-> {fmt(node.label)}")
                return
            lines.append(f"{pad}AU{node.au}?")
            lines.append(f"{pad}  absent:")
            walk(node.if_absent, indent + 2)
            lines.append(f"{pad}  present:")
            walk(node.if_present, indent + 2)

        walk(self.root, 0)
        return "\n".join(lines) + "\n"

    def render_dot(self) -> str:
        lines = [f"digraph {self.kind}_tree {{"]
        counter = [0]

        def fmt(label) -> str:
            if label is None or label == frozenset():
                return "indeterminate"
            if isinstance(label, Emotion):
                return label.value
            return "not " + "/".join(sorted(e.value for e in label))

        def walk(node) -> int:
            nid = counter[0]
            counter[0] += 1
            if isinstance(node, TreeLeaf):
                lines.append(f'  n{nid} [shape=box, label="{fmt(node.label)}"];')
                return nid
            lines.append(f'  n{nid} [label="AU{node.au}"];')
            a = walk(node.if_absent)
            p = walk(node.if_present)
            lines.append(f'  n{nid} -> n{a} [label="absent"];')
            lines.append(f'  n{nid} -> n{p} [label="present"];')
            return nid

        walk(self.root)
        lines.append("}")
        return "\n".join(lines) + "\n"


def _entropy(labels: list[object]) -> float:
    counts: dict[object, int] = {}
    for lab in labels:
        counts[lab] = counts.get(lab, 0) + 1
    total = len(labels)
    h = 0.0
    for c in counts.values():
        p = c / total
        h -= p * math.log2(p)
    return h


def _induce(rows: list[tuple[dict[int, bool], object]], attrs: list[int]):
    """Greedy information-gain induction; gain ties break to the lowest AU."""
    labels = [lab for _, lab in rows]
    if len(set(map(repr, labels))) == 1:
        return TreeLeaf(labels[0])
    if not attrs:
        # cannot happen on exhaustive truth tables, kept for safety
        return TreeLeaf(labels[0])
    base = _entropy(labels)
    best_au, best_gain = None, -1.0
    for au in sorted(attrs):
        absent = [lab for a, lab in rows if not a[au]]
        present = [lab for a, lab in rows if a[au]]
        rem = (len(absent) * _entropy(absent) + len(present) * _entropy(present)) / len(rows)
        gain = base - rem
        if gain > best_gain + 1e-12:
            best_au, best_gain = au, gain
    rest = [a for a in attrs if a != best_au]
    rows_a = [(a, lab) for a, lab in rows if not a[best_au]]
    rows_p = [(a, lab) for a, lab in rows if a[best_au]]
    return TreeTest(best_au, _induce(rows_a, rest), _induce(rows_p, rest))


def absence_label(assignment: dict[int, bool]) -> frozenset[Emotion]:
    """Emotions ruled out by the present AUs of an attribute assignment."""
    present = frozenset(au for au, v in assignment.items() if v)
    return frozenset(e for e in EMOTIONS if absence_aus(e) & present)


def build_absence_tree() -> DecisionTree:
    """Tree over T = {1,2,4,5,6,7,9} reproducing the absence predicate."""
    attrs = list(ABSENCE_TREE_AUS)
    rows = []
    for bits in product([False, True], repeat=len(attrs)):
        assignment = dict(zip(attrs, bits))
        rows.append((assignment, absence_label(assignment)))
    return DecisionTree("absence", frozenset(attrs), _induce(rows, attrs))


def transition_fires(source: Emotion, target: Emotion,
                     assignment: dict[int, bool]) -> bool:
    """Does the restricted transition rule hold on an attribute assignment?"""
    allowed = frozenset(assignment)
    rule = transition_rule(source, target)
    alternatives = [p.units & allowed for p in rule.present if p.units & allowed]
    if not alternatives:
        return False
    present_ok = any(all(assignment[au] for au in alt) for alt in alternatives)
    absent_ok = all(not assignment[au] for au in rule.absent & allowed)
    return present_ok and absent_ok


def transition_label(source: Emotion, assignment: dict[int, bool]) -> Emotion | None:
    """Target emotion when exactly one restricted rule fires, else None."""
    fired = [t for t in EMOTIONS if t is not source
             and transition_fires(source, t, assignment)]
    return fired[0] if len(fired) == 1 else None


def build_transition_tree(source: Emotion = Emotion.SURPRISE) -> DecisionTree:
    """Tree over {4,6,7,10,17,23} for the emotion after a Surprise state."""
    if source is not Emotion.SURPRISE:
        raise UnsupportedTransitionError(
            f"no tabulated rule for source {source}; use derive_transition_rule")
    attrs = list(TRANSITION_TREE_AUS)
    rows = []
    for bits in product([False, True], repeat=len(attrs)):
        assignment = dict(zip(attrs, bits))
        rows.append((assignment, transition_label(source, assignment)))
    return DecisionTree("transition", frozenset(attrs), _induce(rows, attrs))


def evaluate_tree(tree: DecisionTree, obs: AUObservation):
    """Walk the tree; an unknown AU on the path yields the indeterminate label.

    Returns the leaf label (frozenset for absence trees, Emotion or None for
    transition trees); indeterminate is the empty set / None respectively.
    """
    node = tree.root
    while isinstance(node, TreeTest):
        status = obs.status(node.au)
        if status == "unknown":
            return frozenset() if tree.kind == "absence" else None
        node = node.if_present if status == "present" else node.if_absent
    return node.label


# ---------------------------------------------------------------------------
# Monitoring plans (search-space pruning)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MonitoringPlan:
    """Pruned set of feature points to watch for one emotion hypothesis."""

    hypothesis: Emotion
    prior: Emotion | None
    aus_to_check: frozenset[AUPattern]
    points: frozenset[str]
    fallback_full: bool = False


def _mapped_emotion_points(emotion: Emotion) -> frozenset[str]:
    points: set[str] = set()
    for au in emotion_aus(emotion):
        binding = au_bindings(au)
        if binding is not None:
            points |= binding.points
    return frozenset(points)


def _has_unobservable(patterns: frozenset[AUPattern]) -> bool:
    return any(au_bindings(au) is None for p in patterns for au in p.units)


def plan_monitoring(prior: Emotion | None = None) -> list[MonitoringPlan]:
    """One plan per candidate emotion, in canonical emotion order.

    Without a prior the plans watch each emotion's unique markers; with a
    Surprise prior they watch the transition rules' present patterns.  A
    hypothesis whose patterns include a non-observable AU (Anger via AU 10)
    cannot be confirmed geometrically and gets a fallback plan listing the
    mapped points of its full AU set.
    """
    plans = []
    for e in EMOTIONS:
        if prior is None:
            patterns = unique_patterns(e)
        else:
            if e is prior:
                continue
            if prior is Emotion.SURPRISE:
                rule = transition_rule(prior, e)
            else:
                rule = derive_transition_rule(prior, e)
            patterns = rule.present
        if _has_unobservable(patterns):
            plans.append(MonitoringPlan(e, prior, patterns,
                                        _mapped_emotion_points(e), fallback_full=True))
            continue
        points, warn = features_to_monitor(patterns)
        if warn:
            plans.append(MonitoringPlan(e, prior, patterns,
                                        _mapped_emotion_points(e), fallback_full=True))
        else:
            plans.append(MonitoringPlan(e, prior, patterns, points))
    return plans
