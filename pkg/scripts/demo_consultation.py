"""Walk two consultations end to end against an in-process service.

The first instructor answers the full course profile, receives the
rule-selected starter recommendations (the bank begins with no ratings), and
rates two of them.  A second instructor with the same course profile then
consults: collaborative filtering now finds the first session as a peer and
their top-rated practices lead the list.
"""

from __future__ import annotations

import json
import tempfile
from importlib import resources
from pathlib import Path

from teachrec.bank import KnowledgeBank
from teachrec.features import load_default_schema, question_payload
from teachrec.service import SessionService

PROFILE = {
    "discipline": "computer_science",
    "class_size": 85,
    "course_level": "introductory",
    "modality": "hybrid",
    "synchronicity": "mixed",
    "lab_component": True,
    "assessment_style": "project_based",
    "student_device_access": "universal",
    "instructor_tech_comfort": "comfortable",
    "session_length_minutes": 90,
}


def consult(service: SessionService, user_ref: str | None) -> list:
    mode = "identified" if user_ref else "anonymous"
    session_id, question = service.start_session(mode, user_ref)
    print(f"\n=== consultation for {user_ref or 'anonymous'} ({session_id}) ===")
    while True:
        answer = PROFILE[question.id]
        print(f"  Q: {question.prompt}")
        print(f"  A: {answer}")
        outcome, payload = service.submit_answer(session_id, question.id, answer)
        if outcome == "ready":
            print(f"  -> {payload} recommendations ready")
            break
        question = payload

    cards = []
    while True:
        card = service.next_recommendation(session_id)
        if card is None:
            break
        cards.append(card)
        print(f"  * [{card.interaction_mode}] {card.title}")
    return session_id, cards


def main() -> None:
    schema = load_default_schema()
    snapshot = Path(tempfile.mkdtemp()) / "demo_bank.json"
    bank = KnowledgeBank(schema, snapshot_path=snapshot)
    seed = resources.files("teachrec.data").joinpath("seed_bank.json")
    bank.load_document(json.loads(seed.read_text(encoding="utf-8")), source=str(seed))
    service = SessionService(schema, bank)

    print(f"bank: {bank.counts()}")
    first_q = question_payload(next(iter(schema.features)))
    print(f"first question on the wire: {json.dumps(first_q, indent=2)}")

    session_a, cards_a = consult(service, "instructor-a@example.edu")
    service.rate_current(session_a, cards_a[0].rec_id, 5)
    service.rate_current(session_a, cards_a[1].rec_id, 4)
    print(f"  rated: {cards_a[0].title} -> 5, {cards_a[1].title} -> 4")
    service.suggest_practice(session_a, "Weekly studio sessions where students demo work in progress")
    summary = service.close_session(session_a)
    print(f"  closed: presented={summary.presented} rated={summary.rated}")

    _, cards_b = consult(service, "instructor-b@example.edu")
    lead = cards_b[0]
    print(f"\npeer-informed lead for the second instructor: {lead.title}")
    print(f"snapshot on disk: {snapshot} ({snapshot.stat().st_size} bytes)")


if __name__ == "__main__":
    main()
