"""Regenerate tests/fixtures/*.json from the stub-backed service.

The UI tests feed these bodies through an intercepting fetch, so they must
be real wire bytes. Run from the repo root after changing the service's
response shapes:

    python3 frontend/scripts/capture_fixtures.py
"""

import json
import shutil
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent.parent
sys.path.insert(0, str(REPO / "tests"))

from fastapi.testclient import TestClient  # noqa: E402

from conftest import FIXTURES, fixed_clock  # noqa: E402
from ragdesk.config import load_config  # noqa: E402
from ragdesk.service import ServiceState, create_app  # noqa: E402

OUT = REPO / "frontend" / "tests" / "fixtures"
WINDOW = {"from": "2025-06-01T00:00:00Z", "to": "2025-06-30T00:00:00Z"}


def main() -> None:
    workdir = Path("/tmp/ragdesk_fixture_capture")
    shutil.rmtree(workdir, ignore_errors=True)
    shutil.copytree(FIXTURES, workdir)

    # First pass: ingest to learn the deterministic chunk ids, then extend the
    # stub generation replies with citations of real chunks.
    state = ServiceState(load_config(workdir / "config.yaml"), clock=fixed_clock)
    state.run_refresh()
    docs = state.index_store.get("document_library")
    returns_chunk = next(c for c in docs._records.values() if "MARKRETPOL000001" in c.text)
    code = state.index_store.get("code_repository")
    calc_chunk = next(c for c in code._records.values() if c.metadata.get("object_names") == "CALCRATE")

    script = json.loads((workdir / "stub_script.json").read_text())
    for entry in script:
        if entry["purpose"] != "generation":
            continue
        if "Summarise the returns policy" in entry["match_substring"]:
            entry["reply"] += f" [chunk:{returns_chunk.chunk_id}]"
        if "CALCRATE" in entry["match_substring"]:
            entry["reply"] += f" [chunk:{calc_chunk.chunk_id}]"
    (workdir / "stub_script.json").write_text(json.dumps(script, indent=1))

    state = ServiceState(load_config(workdir / "config.yaml"), clock=fixed_clock)
    app = create_app(state, with_scheduler=False)
    with TestClient(app) as client:
        body = {
            "user_id": "u1",
            "department": "IT",
            "job_title": "Developer",
            "text": "Summarise the returns policy and also explain procedure CALCRATE",
        }
        (OUT / "chat_response.json").write_bytes(client.post("/chat", json=body).content)
        client.post("/chat", json={**body, "text": "What is the returns policy?"})
        client.post("/chat", json={**body, "user_id": "u2", "text": "Hello there, how are you?"})
        (OUT / "usage.json").write_bytes(client.get("/metrics/usage", params=WINDOW).content)
        (OUT / "breakdown_question_type.json").write_bytes(
            client.get("/metrics/breakdown", params={"dimension": "question_type", **WINDOW}).content
        )
        (OUT / "breakdown_department.json").write_bytes(
            client.get("/metrics/breakdown", params={"dimension": "department", **WINDOW}).content
        )
        (OUT / "adopters.json").write_bytes(client.get("/metrics/adopters", params=WINDOW).content)
        (OUT / "health.json").write_bytes(client.get("/health").content)
    print(f"fixtures written to {OUT}")


if __name__ == "__main__":
    main()
