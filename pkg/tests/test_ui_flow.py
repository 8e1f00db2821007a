"""End-to-end review flow through the HTTP surface the browser UI drives.

The browser bundle itself is exercised by its own vitest suite under
``frontend/``; here the service runs on a fixture journal and the same API
calls the UI issues are replayed.  Static-bundle checks skip until
``frontend/dist`` has been built.
"""

from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from tablesync.review import ReviewQueue
from tablesync.service import create_app

from test_review import proposal

DIST = Path(__file__).resolve().parent.parent / "frontend" / "dist"


@pytest.fixture
def client(tmp_path):
    queue = ReviewQueue(tmp_path / "journal.jsonl")
    queue.enqueue([proposal(i) for i in range(3)],
                  source_url="https://example.org/E1")
    return TestClient(create_app(queue, static_dir=DIST))


def test_accept_with_citation_moves_to_accepted_and_updates_totals(client):
    pending = client.get("/proposals", params={"status": "pending"}).json()
    assert pending["total"] == 3
    record_id = pending["items"][0]["proposal"]["id"]

    before = client.get("/stats").json()["total"]
    response = client.post(
        f"/proposals/{record_id}/decision",
        json={"decision": "accept", "reviewer": "editor",
              "citation": {"url": "https://example.org/ref", "note": "ok"}},
    )
    assert response.status_code == 200

    accepted = client.get("/proposals", params={"status": "accepted"}).json()
    assert accepted["total"] == 1
    after = client.get("/stats").json()["total"]
    assert after["accepted"] == before["accepted"] + 1
    assert after["pending"] == before["pending"] - 1


def test_accept_without_citation_rejected_server_side(client):
    record_id = client.get("/proposals").json()["items"][0]["proposal"]["id"]
    response = client.post(f"/proposals/{record_id}/decision",
                           json={"decision": "accept", "reviewer": "editor"})
    assert response.status_code == 422
    # record untouched
    record = client.get(f"/proposals/{record_id}").json()
    assert record["status"] == "pending"


@pytest.mark.skipif(not DIST.is_dir(), reason="review UI bundle not built")
def test_bundle_served_at_ui_mount(client):
    page = client.get("/ui/")
    assert page.status_code == 200
    assert "<html" in page.text.lower()
