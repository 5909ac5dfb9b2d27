"""Expert rule system: accept/reject verdicts over candidate recommendations.

Rules encode instructional-design judgment as conjunctions of conditions on
session features.  They refine the collaborative candidate set and are the
sole route by which unrated recommendations reach a user, which is what
services brand-new deployments with no rating history.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .errors import (
    DuplicateRuleId,
    MalformedRules,
    OperatorKindMismatch,
    UnknownFeatureInRule,
    UnknownRecommendation,
)
from .features import (
    KIND_BOOLEAN,
    KIND_CATEGORICAL,
    KIND_NUMERIC,
    FeatureDef,
    FeatureSchema,
    SessionFeatures,
)

VERDICT_ACCEPT = "accept"
VERDICT_REJECT = "reject"
VERDICT_UNMATCHED = "unmatched"

PROVENANCE_CF = "cf"
PROVENANCE_EXPERT = "expert_added"

OP_EQ = "eq"
OP_NE = "ne"
OP_IN_SET = "in_set"
OP_RANGE = "range"
OP_IS_TRUE = "is_true"
OP_IS_FALSE = "is_false"

_OPS_BY_KIND = {
    KIND_CATEGORICAL: (OP_EQ, OP_NE, OP_IN_SET),
    KIND_NUMERIC: (OP_RANGE,),
    KIND_BOOLEAN: (OP_IS_TRUE, OP_IS_FALSE),
}


@dataclass(frozen=True)
class Condition:
    """One conjunct: a typed test against a single feature's answer."""

    feature_id: str
    op: str
    value: object = None  # str for eq/ne, tuple[str, ...] for in_set, (lo, hi) for range

    def holds(self, features: SessionFeatures) -> bool:
        # Skipped/declined features satisfy no condition: silence is not a match.
        actual = features.answers.get(self.feature_id)
        if actual is None:
            return False
        if self.op == OP_EQ:
            return actual == self.value
        if self.op == OP_NE:
            return actual != self.value
        if self.op == OP_IN_SET:
            return actual in self.value  # type: ignore[operator]
        if self.op == OP_RANGE:
            lo, hi = self.value  # type: ignore[misc]
            return lo <= actual <= hi
        if self.op == OP_IS_TRUE:
            return actual is True
        if self.op == OP_IS_FALSE:
            return actual is False
        raise MalformedRules(f"unknown operator {self.op!r}")


@dataclass(frozen=True)
class Rule:
    """Expert verdict for one recommendation, gated on a conjunction of conditions."""

    rule_id: str
    rec_id: str
    verdict: str
    priority: int
    conditions: tuple[Condition, ...]

    def matches(self, features: SessionFeatures) -> bool:
        return all(cond.holds(features) for cond in self.conditions)


@dataclass(frozen=True)
class RuleVerdict:
    verdict: str
    rule_id: Optional[str] = None  # matched rule, exposed for debugging


@dataclass(frozen=True)
class FinalEntry:
    rec_id: str
    provenance: str  # cf | expert_added
    score: float  # weighted rating for cf entries, rule priority for expert ones


@dataclass(frozen=True)
class FinalSet:
    """Refined, ordered presentation queue: cf entries first, then expert picks."""

    entries: tuple[FinalEntry, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    def rec_ids(self) -> tuple[str, ...]:
        return tuple(e.rec_id for e in self.entries)


def evaluate_rules(
    rec_id: str, features: SessionFeatures, rules: Sequence[Rule]
) -> RuleVerdict:
    """Highest-priority matching rule wins; reject wins priority ties."""
    matching = [r for r in rules if r.rec_id == rec_id and r.matches(features)]
    if not matching:
        return RuleVerdict(VERDICT_UNMATCHED)
    top = max(r.priority for r in matching)
    # reject-first, then rule_id, keeps equal-priority conflicts deterministic
    winner = min(
        (r for r in matching if r.priority == top),
        key=lambda r: (r.verdict != VERDICT_REJECT, r.rule_id),
    )
    return RuleVerdict(winner.verdict, winner.rule_id)


def refine(candidates, features: SessionFeatures, rules: Sequence[Rule], bank) -> FinalSet:
    """Refine the collaborative candidate set into the final presentation queue.

    Rated candidates survive unless an expert rule rejects them; unrated ones
    (impossible from the collaborative path, kept defensive) need an explicit
    accept.  Every active recommendation outside the candidate set that some
    rule accepts for these features is appended, ordered by rule priority.
    """
    rated = bank.rated_rec_ids()
    kept: list[FinalEntry] = []
    candidate_ids: set[str] = set()
    for entry in candidates.entries:
        candidate_ids.add(entry.rec_id)
        decision = evaluate_rules(entry.rec_id, features, rules)
        if entry.rec_id in rated:
            if decision.verdict != VERDICT_REJECT:
                kept.append(FinalEntry(entry.rec_id, PROVENANCE_CF, entry.weighted_score))
        elif decision.verdict == VERDICT_ACCEPT:
            kept.append(FinalEntry(entry.rec_id, PROVENANCE_CF, entry.weighted_score))

    expert: list[tuple[int, str]] = []
    for rec in bank.active_recommendations():
        if rec.rec_id in candidate_ids:
            continue
        decision = evaluate_rules(rec.rec_id, features, rules)
        if decision.verdict == VERDICT_ACCEPT:
            matched = next(r for r in rules if r.rule_id == decision.rule_id)
            expert.append((matched.priority, rec.rec_id))
    expert.sort(key=lambda pair: (-pair[0], pair[1]))
    kept.extend(
        FinalEntry(rec_id, PROVENANCE_EXPERT, float(priority)) for priority, rec_id in expert
    )
    return FinalSet(tuple(kept))


# --- rule document parsing ---------------------------------------------------

def load_rules(
    document: object, schema: FeatureSchema, known_rec_ids: Iterable[str]
) -> tuple[Rule, ...]:
    """Validate a rules document against the schema and known recommendations.

    All-or-nothing: the first invalid rule aborts the whole load.
    """
    if not isinstance(document, dict) or not isinstance(document.get("rules"), list):
        raise MalformedRules("rules document must be an object with a 'rules' array")
    known = set(known_rec_ids)
    seen: set[str] = set()
    out: list[Rule] = []
    for i, item in enumerate(document["rules"]):
        where = f"rules[{i}]"
        if not isinstance(item, dict):
            raise MalformedRules(f"{where}: must be an object")
        rule = _parse_rule(item, where, schema)
        if rule.rule_id in seen:
            raise DuplicateRuleId(f"{where}: duplicate rule_id {rule.rule_id!r}")
        if rule.rec_id not in known:
            raise UnknownRecommendation(
                f"{where} ({rule.rule_id!r}): unknown recommendation {rule.rec_id!r}"
            )
        seen.add(rule.rule_id)
        out.append(rule)
    return tuple(out)


def _parse_rule(item: dict, where: str, schema: FeatureSchema) -> Rule:
    rule_id = item.get("rule_id")
    rec_id = item.get("rec_id")
    verdict = item.get("verdict")
    priority = item.get("priority")
    raw_conditions = item.get("conditions")
    if not isinstance(rule_id, str) or not rule_id:
        raise MalformedRules(f"{where}.rule_id: must be a non-empty string")
    if not isinstance(rec_id, str) or not rec_id:
        raise MalformedRules(f"{where} ({rule_id!r}).rec_id: must be a non-empty string")
    if verdict not in (VERDICT_ACCEPT, VERDICT_REJECT):
        raise MalformedRules(f"{where} ({rule_id!r}).verdict: must be accept or reject")
    if isinstance(priority, bool) or not isinstance(priority, int) or priority < 0:
        raise MalformedRules(f"{where} ({rule_id!r}).priority: must be an integer >= 0")
    if not isinstance(raw_conditions, list):
        raise MalformedRules(f"{where} ({rule_id!r}).conditions: must be an array")
    if verdict == VERDICT_REJECT and not raw_conditions:
        raise MalformedRules(
            f"{where} ({rule_id!r}): reject rules need at least one condition;"
            " retire the recommendation for a blanket reject"
        )
    conditions = tuple(
        _parse_condition(cond, f"{where} ({rule_id!r}).conditions[{j}]", rule_id, schema)
        for j, cond in enumerate(raw_conditions)
    )
    return Rule(rule_id, rec_id, verdict, priority, conditions)


def _parse_condition(item: object, where: str, rule_id: str, schema: FeatureSchema) -> Condition:
    if not isinstance(item, dict):
        raise MalformedRules(f"{where}: must be an object")
    feature_id = item.get("feature")
    op = item.get("op")
    if not isinstance(feature_id, str) or not isinstance(op, str):
        raise MalformedRules(f"{where}: needs string 'feature' and 'op' fields")
    fdef = _schema_feature(schema, feature_id, rule_id, where)
    if op not in _OPS_BY_KIND[fdef.kind]:
        raise OperatorKindMismatch(
            f"{where}: rule {rule_id!r} applies {op!r} to {fdef.kind} feature {feature_id!r}"
        )
    value = _parse_condition_value(item, op, fdef, where)
    return Condition(feature_id=feature_id, op=op, value=value)


def _schema_feature(
    schema: FeatureSchema, feature_id: str, rule_id: str, where: str
) -> FeatureDef:
    for fdef in schema.features:
        if fdef.id == feature_id:
            return fdef
    raise UnknownFeatureInRule(
        f"{where}: rule {rule_id!r} references unknown feature {feature_id!r}"
    )


def _parse_condition_value(item: dict, op: str, fdef: FeatureDef, where: str) -> object:
    value = item.get("value")
    if op in (OP_EQ, OP_NE):
        if not isinstance(value, str) or value not in fdef.values:
            raise MalformedRules(
                f"{where}: value {value!r} not in vocabulary of {fdef.id!r}"
            )
        return value
    if op == OP_IN_SET:
        if (not isinstance(value, list) or not value
                or not all(isinstance(v, str) and v in fdef.values for v in value)):
            raise MalformedRules(
                f"{where}: in_set value must be a non-empty subset of {fdef.id!r} vocabulary"
            )
        return tuple(value)
    if op == OP_RANGE:
        ok = (isinstance(value, list) and len(value) == 2
              and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
              and value[0] <= value[1])
        if not ok:
            raise MalformedRules(f"{where}: range value must be [lo, hi] with lo <= hi")
        return (float(value[0]), float(value[1]))
    # is_true / is_false carry no value
    if value is not None:
        raise MalformedRules(f"{where}: {op} takes no value")
    return None


def rule_to_dict(rule: Rule) -> dict:
    out: dict = {
        "rule_id": rule.rule_id,
        "rec_id": rule.rec_id,
        "verdict": rule.verdict,
        "priority": rule.priority,
        "conditions": [],
    }
    for cond in rule.conditions:
        item: dict = {"feature": cond.feature_id, "op": cond.op}
        if cond.op == OP_IN_SET:
            item["value"] = list(cond.value)  # type: ignore[arg-type]
        elif cond.op == OP_RANGE:
            item["value"] = [cond.value[0], cond.value[1]]  # type: ignore[index]
        elif cond.op in (OP_EQ, OP_NE):
            item["value"] = cond.value
        out["conditions"].append(item)
    return out


def rules_to_document(rules: Sequence[Rule], version: str = "1") -> dict:
    return {"version": version, "rules": [rule_to_dict(r) for r in rules]}
