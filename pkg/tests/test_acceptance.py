"""Release gate: one test per shipping criterion, each printing PASS or FAIL.

Every numeric tolerance is pinned here and nowhere else.  Oracles are
independent implementations (high-precision decimal cosine, exact-rational
weighted means, recorded wire fixtures), not re-derivations from the code
under test.
"""

from __future__ import annotations

import itertools
import json
import random
import time

import protocol_rig
import support
from teachrec.bank import KnowledgeBank, SessionRecord
from teachrec.cf import CandidateSet, SimilarityScore, candidate_set, cosine_similarity, similar_sessions
from teachrec.features import FeatureVector, SessionFeatures, parse_schema
from teachrec.rules import Condition, Rule, refine
from teachrec.service import SessionService

COSINE_ABS_TOL = 1e-9
COSINE_SELF_TOL = 1e-12
COSINE_PAIRS = 1_000
COSINE_TIME_BUDGET_S = 1.0

CF_TRIALS = 200
CF_SCORE_TOL = 1e-9
CF_TIME_BUDGET_S = 10.0

COLD_START_TRIALS = 100
REJECT_TRIALS = 500
PERSISTENCE_TRIALS = 50


def test_cosine_against_high_precision_oracle(acceptance):
    rng = random.Random(0xC05)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(COSINE_PAIRS):
        dim = rng.randint(1, 64)
        a = [rng.random() * rng.choice([1.0, 1.0, 100.0]) for _ in range(dim)]
        b = [rng.random() * rng.choice([1.0, 1.0, 100.0]) for _ in range(dim)]
        got = cosine_similarity(a, b)
        want = support.cosine_oracle(a, b)
        worst = max(worst, abs(got - want))
        if abs(got - want) > COSINE_ABS_TOL:
            acceptance("cosine-oracle", False, f"off by {abs(got - want):.3e}")
        if got != cosine_similarity(b, a):
            acceptance("cosine-oracle", False, "asymmetric pair found")
        self_sim = cosine_similarity(a, a)
        if abs(self_sim - 1.0) > COSINE_SELF_TOL:
            acceptance("cosine-oracle", False, f"self-similarity {self_sim!r}")
    elapsed = time.perf_counter() - start
    acceptance(
        "cosine-oracle",
        elapsed < COSINE_TIME_BUDGET_S,
        f"{COSINE_PAIRS} pairs, worst |err| {worst:.2e}, {elapsed:.2f}s",
    )


def test_candidate_selection_matches_brute_force(acceptance):
    rng = random.Random(0xCF)
    schema = support.small_schema()
    start = time.perf_counter()
    for trial in range(CF_TRIALS):
        rec_ids = [f"rec-{i}" for i in range(rng.randint(1, 10))]
        bank = support.bank_with_recs(schema, rec_ids)
        ratings: dict[str, dict[str, int]] = {}
        for s in range(rng.randint(0, 10)):
            session_id = f"s{s}"
            vector = tuple(rng.random() for _ in range(4))
            scores = {rec_id: rng.randint(1, 5)
                      for rec_id in rng.sample(rec_ids,
                                               min(len(rec_ids), rng.randint(0, 5)))}
            support.add_peer(bank, session_id, vector, scores)
            ratings[session_id] = scores

        query = FeatureVector(tuple(rng.random() for _ in range(4)), "test-v1")
        k = rng.randint(1, 8)
        theta = rng.random()
        rho = 1.0 + rng.random() * 4.0
        peers = similar_sessions(query, bank, k=k, theta=theta)
        got = candidate_set(peers, bank, rho=rho, query=query)
        want = support.candidate_oracle(
            [(p.session_id, p.score) for p in peers], ratings, set(rec_ids), rho)

        if got.rec_ids() != tuple(rec_id for rec_id, _ in want):
            acceptance("cf-brute-force", False,
                       f"trial {trial}: membership {got.rec_ids()} vs {want}")
        for entry, (_, exact) in zip(got.entries, want):
            if abs(entry.weighted_score - float(exact)) > CF_SCORE_TOL:
                acceptance("cf-brute-force", False,
                           f"trial {trial}: {entry.rec_id} score off")
    elapsed = time.perf_counter() - start
    acceptance("cf-brute-force", elapsed < CF_TIME_BUDGET_S,
               f"{CF_TRIALS} randomized banks, {elapsed:.2f}s")


def random_schema(rng: random.Random):
    features = []
    for i in range(rng.randint(1, 4)):
        kind = rng.choice(["categorical", "numeric", "boolean"])
        if kind == "categorical":
            features.append({
                "id": f"f{i}", "prompt": f"Question {i}?", "kind": kind,
                "values": [f"v{j}" for j in range(rng.randint(2, 4))],
            })
        elif kind == "numeric":
            lo = rng.randint(0, 5)
            features.append({"id": f"f{i}", "prompt": f"Question {i}?",
                             "kind": kind, "min": lo, "max": lo + rng.randint(1, 20)})
        else:
            features.append({"id": f"f{i}", "prompt": f"Question {i}?", "kind": kind})
    return parse_schema({"version": f"rand-{rng.randint(0, 9999)}",
                         "features": features})


def random_answers(rng: random.Random, schema) -> SessionFeatures:
    answers = SessionFeatures(schema.version)
    for fdef in schema.features:
        if fdef.kind == "categorical":
            answers.set_answer(fdef.id, rng.choice(fdef.values))
        elif fdef.kind == "numeric":
            answers.set_answer(fdef.id, rng.uniform(fdef.min_value, fdef.max_value))
        else:
            answers.set_answer(fdef.id, rng.choice([True, False]))
    return answers


def matching_condition(rng: random.Random, schema, answers) -> Condition:
    fdef = rng.choice(schema.features)
    value = answers.answers[fdef.id]
    if fdef.kind == "categorical":
        return Condition(fdef.id, "eq", value)
    if fdef.kind == "numeric":
        return Condition(fdef.id, "range", (fdef.min_value, fdef.max_value))
    return Condition(fdef.id, "is_true" if value else "is_false")


def test_cold_start_always_yields_an_expert_pick(acceptance):
    rng = random.Random(0xC01D)
    for trial in range(COLD_START_TRIALS):
        schema = random_schema(rng)
        rec_ids = [f"rec-{i}" for i in range(rng.randint(1, 6))]
        bank = support.bank_with_recs(schema, rec_ids)
        answers = random_answers(rng, schema)

        guaranteed = rng.choice(rec_ids)
        rules = [Rule(f"r-sure-{trial}", guaranteed, "accept", rng.randint(0, 5),
                      (matching_condition(rng, schema, answers),))]
        for i in range(rng.randint(0, 4)):  # noise rules on other recs
            other = rng.choice(rec_ids)
            if other == guaranteed:
                continue
            rules.append(Rule(
                f"r-noise-{trial}-{i}", other, rng.choice(["accept", "reject"]),
                rng.randint(0, 5), (matching_condition(rng, schema, answers),)))
        bank.set_rules(tuple(rules))

        # empty rating store: CF has nothing, the rules must carry the session
        final = refine(CandidateSet(), answers, bank.rules(), bank)
        if len(final) < 1:
            acceptance("cold-start", False, f"trial {trial}: empty final set")
        if any(e.provenance != "expert_added" for e in final.entries):
            acceptance("cold-start", False, f"trial {trial}: non-expert entry")
    acceptance("cold-start", True, f"{COLD_START_TRIALS} schema/rule/bank triples")


def test_rejected_recommendations_never_surface(acceptance):
    rng = random.Random(0xE7EC)
    schema = support.small_schema()
    answers = SessionFeatures("test-v1", dict(support.SMALL_PROFILE))
    for trial in range(REJECT_TRIALS):
        rec_ids = [f"rec-{i}" for i in range(rng.randint(1, 5))]
        bank = support.bank_with_recs(schema, rec_ids)
        target = rng.choice(rec_ids)

        rules = []
        for i in range(rng.randint(0, 6)):
            rules.append(Rule(
                f"r{i}", rng.choice(rec_ids), rng.choice(["accept", "reject"]),
                rng.randint(0, 5),
                (Condition("subject", "eq",
                           rng.choice(["math", "writing"])),)))
        matching = [r for r in rules
                    if r.rec_id == target and r.conditions[0].value == "math"]
        top = max((r.priority for r in matching), default=0)
        # force the conflict: a reject at (at least) the max matching priority
        rules.append(Rule("r-veto", target, "reject", top,
                          (Condition("subject", "eq", "math"),)))
        bank.set_rules(tuple(rules))

        # strongest case: the rejected rec arrives as a healthy CF candidate
        support.add_peer(bank, "peer", (1, 0, 0.5, 1.0), {target: 5})
        candidates = candidate_set([SimilarityScore("peer", 1.0)], bank, rho=3.0)
        final = refine(candidates, answers, bank.rules(), bank)
        if target in [e.rec_id for e in final.entries]:
            acceptance("reject-dominance", False,
                       f"trial {trial}: {target} survived a max-priority reject")
    acceptance("reject-dominance", True, f"{REJECT_TRIALS} randomized rule sets")


def consultation(service, profile, mode="identified", user_ref="a@example.edu"):
    """Complete the question flow; returns (session_id, final queue)."""
    session_id, question = service.start_session(mode, user_ref)
    reply = ("question", question)
    while reply[0] == "question":
        fdef = reply[1]
        reply = service.submit_answer(session_id, fdef.id, profile[fdef.id])
    return session_id, service._sessions[session_id].queue


def test_feedback_loop_exact_outcomes(acceptance):
    profile = dict(support.SMALL_PROFILE)
    accept_rule = Rule("r-x", "rec-x", "accept", 1,
                       (Condition("subject", "eq", "math"),))

    def fresh_service(with_rule: bool):
        bank = support.bank_with_recs(support.small_schema(), ["rec-x"])
        if with_rule:
            bank.set_rules((accept_rule,))
        return bank, SessionService(bank.schema, bank,
                                    token_source=support.sequential_tokens())

    # A rates 5 -> B sees rec-x as a cf candidate scored exactly 5.0
    bank, service = fresh_service(with_rule=True)
    session_a, _ = consultation(service, profile)
    card = service.next_recommendation(session_a)
    service.rate_current(session_a, card.rec_id, 5)
    service.close_session(session_a)
    _, queue_b = consultation(service, profile)
    entries = {e.rec_id: e for e in queue_b.entries}
    ok = ("rec-x" in entries
          and entries["rec-x"].provenance == "cf"
          and entries["rec-x"].score == 5.0)
    if not ok:
        acceptance("feedback-loop", False, f"after a 5: {entries!r}")

    # A rates 2 -> with rho=3.0 the cf path drops rec-x; the rule readmits it
    bank, service = fresh_service(with_rule=True)
    session_a, _ = consultation(service, profile)
    card = service.next_recommendation(session_a)
    service.rate_current(session_a, card.rec_id, 2)
    service.close_session(session_a)
    _, queue_b = consultation(service, profile)
    entries = {e.rec_id: e for e in queue_b.entries}
    if not ("rec-x" in entries and entries["rec-x"].provenance == "expert_added"):
        acceptance("feedback-loop", False, f"after a 2 with rule: {entries!r}")

    # same 2-rating with no accept rule -> rec-x is gone entirely
    bank.set_rules(())
    _, queue_c = consultation(service, profile)
    if "rec-x" in [e.rec_id for e in queue_c.entries]:
        acceptance("feedback-loop", False, "a 2-rated rec survived without a rule")
    acceptance("feedback-loop", True,
               "5 -> cf@5.0; 2 -> expert-only; 2 sans rule -> absent")


def test_anonymous_snapshot_never_stores_the_identifier(acceptance, tmp_path):
    identifier = "carol.tester-7c1@example.edu"
    snapshot_path = tmp_path / "bank.json"
    bank = support.bank_with_recs(support.small_schema(), ["rec-x"],
                                  snapshot_path=snapshot_path)
    support.add_peer(bank, "peer", (1, 0, 0.5, 1.0), {"rec-x": 5})
    service = SessionService(bank.schema, bank,
                             token_source=support.sequential_tokens())

    # the client leaks the identifier on every call it can
    session_id, question = service.start_session("anonymous", user_ref=identifier)
    reply = ("question", question)
    while reply[0] == "question":
        fdef = reply[1]
        reply = service.submit_answer(session_id, fdef.id,
                                      support.SMALL_PROFILE[fdef.id])
    card = service.next_recommendation(session_id)
    service.rate_current(session_id, card.rec_id, 4)
    service.suggest_practice(session_id, "rotate lab partners weekly")
    service.close_session(session_id)
    bank.save()

    blob = snapshot_path.read_bytes()
    hits = blob.count(identifier.encode())
    acceptance("anonymity-byte-scan", hits == 0,
               f"{hits} occurrences in {len(blob)} snapshot bytes")


def test_persistence_round_trips_are_lossless(acceptance, tmp_path):
    rng = random.Random(0x5AFE)
    schema = support.small_schema()
    for trial in range(PERSISTENCE_TRIALS):
        path = tmp_path / f"bank-{trial}.json"
        rec_ids = [f"rec-{i}" for i in range(rng.randint(1, 8))]
        bank = support.bank_with_recs(schema, rec_ids, snapshot_path=path)
        for s in range(rng.randint(0, 6)):
            scores = {rec_id: rng.randint(1, 5)
                      for rec_id in rng.sample(rec_ids,
                                               rng.randint(0, len(rec_ids)))}
            support.add_peer(
                bank, f"s{s}", tuple(rng.random() for _ in range(4)), scores,
                user_ref=f"u{s}@example.edu" if rng.random() < 0.5 else None)
        for g in range(rng.randint(0, 3)):
            bank.submit_suggestion(f"practice {g}", f"s-src-{g}",
                                   suggestion_id=f"g-{g}")
        if rng.random() < 0.3 and bank.list_suggestions("pending"):
            bank.approve_suggestion(
                "g-0", rec_id="rec-approved", title="Approved",
                body="From the queue.", interaction_mode="learner-content")
        bank.set_rules((Rule("r-0", rec_ids[0], "accept", 1,
                             (Condition("subject", "eq", "math"),)),))

        reloaded = KnowledgeBank(schema, snapshot_path=path)
        reloaded.load()
        if reloaded.dump() != bank.dump():
            acceptance("persistence-fidelity", False, f"trial {trial}: dump differs")
    acceptance("persistence-fidelity", True, f"{PERSISTENCE_TRIALS} round trips")


def test_wire_protocol_matches_golden_fixtures(acceptance):
    paths = protocol_rig.fixture_paths()
    problems = list(itertools.chain.from_iterable(
        protocol_rig.replay(p) for p in paths))

    covered = set()
    codes = set()
    for path in paths:
        for step in json.loads(path.read_text())["steps"]:
            template = step["request"]["path"]
            for token in ("tok-0001", "tok-0002", "tok-0003", "ghost"):
                template = template.replace(token, "{session_id}")
            covered.add((step["request"]["method"], template))
            body = step["response"]["body"]
            if isinstance(body, dict) and "error_code" in body:
                codes.add(body["error_code"])

    required = {
        ("POST", "/v1/sessions"),
        ("POST", "/v1/sessions/{session_id}/answers"),
        ("POST", "/v1/sessions/{session_id}/next"),
        ("POST", "/v1/sessions/{session_id}/ratings"),
        ("POST", "/v1/sessions/{session_id}/suggestions"),
        ("POST", "/v1/sessions/{session_id}/close"),
        ("GET", "/v1/health"),
    }
    named_codes = {
        "ServiceNotSeeded", "MalformedRequest", "WrongQuestion", "UnknownFeature",
        "ValueOutOfRange", "NotInVocabulary", "TypeMismatch", "UnknownSession",
        "NotReady", "NotPresented", "ScoreOutOfRange", "EmptySuggestion",
    }
    if not required <= covered:
        problems.append(f"endpoints missing from fixtures: {required - covered}")
    if not named_codes <= codes:
        problems.append(f"error codes missing from fixtures: {named_codes - codes}")
    acceptance("protocol-conformance", problems == [],
               "; ".join(problems) if problems else
               f"{len(paths)} fixtures byte-for-byte, 7 endpoints, 12 codes")
