import pytest

pytest.importorskip("fastapi")
pytest.importorskip("httpx")

from fastapi.testclient import TestClient

from apidialog.acts import (
    DialogueAct,
    DialogueActType,
    SessionConfig,
    act_type_from_wire,
    replay_transcript,
)
from apidialog.policies import HandCraftedPolicy, SingleTurnPolicy, hand_crafted_decide
from apidialog.service import (
    ComponentNotFoundError,
    ParseError,
    create_app,
    describe_component,
    parse_input,
    render,
)


@pytest.fixture()
def client(toy_dataset):
    app = create_app(
        corpora={"fixture": toy_dataset},
        policies={"hand-crafted": HandCraftedPolicy(), "single-turn": SingleTurnPolicy()},
        default_corpus="fixture",
        default_policy="hand-crafted",
        session_seed=7,
    )
    return TestClient(app)


class TestParseInput:
    def test_plus_prefix_is_keyword(self, toy_dataset):
        act = parse_input("+knownhost", toy_dataset)
        assert act.act_type is DialogueActType.PROVIDE_KEYWORD
        assert act.payload == "knownhost"

    def test_at_prefix_is_full_documentation_request(self, toy_dataset):
        act = parse_input("@ssh_connect", toy_dataset)
        assert act.act_type is DialogueActType.ELICIT_INFO_ALL_API
        assert act.payload == "ssh_connect"

    def test_at_with_property_selector(self, toy_dataset):
        act = parse_input("@ssh_connect#summary", toy_dataset)
        assert act.act_type is DialogueActType.ELICIT_INFO_API
        assert act.payload == {"id": "ssh_connect", "properties": ["summary"]}

    def test_plain_text_is_query(self, toy_dataset):
        act = parse_input("open an ssh session", toy_dataset)
        assert act.act_type is DialogueActType.PROVIDE_QUERY
        assert act.payload == "open an ssh session"

    def test_unknown_component_includes_suggestions(self, toy_dataset):
        with pytest.raises(ComponentNotFoundError) as err:
            parse_input("@ssh_conect", toy_dataset)
        assert "ssh_connect" in err.value.suggestions

    @pytest.mark.parametrize(
        "text,expected",
        [
            ("list-results", DialogueActType.ELICIT_LIST_RESULTS),
            ("next-function", DialogueActType.ELICIT_SUGG_API),
            ("next-page", DialogueActType.USER_CHANGE_PAGE),
            ("unsure", DialogueActType.UNSURE),
            ("restart", DialogueActType.RESTART),
        ],
    )
    def test_quick_response_identifiers(self, toy_dataset, text, expected):
        assert parse_input(text, toy_dataset).act_type is expected

    def test_reject_with_ids(self, toy_dataset):
        act = parse_input("reject ssh_connect ssh_channel_open", toy_dataset)
        assert act.act_type is DialogueActType.REJECT_COMPONENTS
        assert act.payload == ["ssh_connect", "ssh_channel_open"]

    def test_empty_and_bare_prefix_rejected(self, toy_dataset):
        for bad in ("", "   ", "+", "@"):
            with pytest.raises(ParseError):
                parse_input(bad, toy_dataset)


class TestRender:
    def test_list_results_template_with_clickables(self, toy_dataset):
        ids = [c.id for c in toy_dataset.components]
        msg = render(DialogueAct(DialogueActType.LIST_RESULTS, ids), toy_dataset)
        assert msg.text == "I found these functions. Would you like to know more about any of them?"
        assert msg.clickable_items == ids

    def test_request_query_has_no_clickables(self, toy_dataset):
        msg = render(DialogueAct(DialogueActType.REQUEST_QUERY), toy_dataset)
        assert msg.clickable_items == []
        assert msg.text

    def test_sugg_keywords_clickable_passthrough(self, toy_dataset):
        msg = render(DialogueAct(DialogueActType.SUGG_KEYWORDS, ["host", "port"]), toy_dataset)
        assert msg.clickable_items == ["host", "port"]

    def test_user_act_rejected(self, toy_dataset):
        from apidialog.acts import ContractViolationError

        with pytest.raises(ContractViolationError):
            render(DialogueAct(DialogueActType.PROVIDE_QUERY, "x"), toy_dataset)

    def test_quick_responses_round_trip(self, toy_dataset):
        """Every quick response's input parses back to its declared act."""
        acts = [
            DialogueAct(DialogueActType.START),
            DialogueAct(DialogueActType.LIST_RESULTS, ["ssh_connect"]),
            DialogueAct(DialogueActType.CHANGE_PAGE, ["ssh_connect"]),
            DialogueAct(DialogueActType.CHANGE_PAGE, []),
            DialogueAct(DialogueActType.REQUEST_QUERY),
            DialogueAct(DialogueActType.SUGG_KEYWORDS, ["host"]),
            DialogueAct(DialogueActType.SUGG_API, "ssh_connect"),
            DialogueAct(DialogueActType.SUGG_INFO_API, "ssh_connect"),
            DialogueAct(DialogueActType.INFO_API, {"id": "ssh_connect", "properties": ["summary"]}),
            DialogueAct(DialogueActType.INFO_ALL_API, "ssh_connect"),
        ]
        for act in acts:
            for quick in render(act, toy_dataset).quick_responses:
                parsed = parse_input(quick.input, toy_dataset)
                assert parsed.act_type is quick.act_type, quick

    def test_describe_component_covers_properties(self, toy_dataset):
        comp = toy_dataset.get("ssh_write_knownhost")
        text = describe_component(comp)
        assert "summary:" in text
        assert "description:" in text
        assert describe_component(comp, ["summary"]) == f"summary: {comp.summary}"


class TestEndpoints:
    def test_create_returns_greeting(self, client):
        resp = client.post("/sessions", json={"corpus": "fixture", "policy": "hand-crafted"})
        assert resp.status_code == 201
        body = resp.json()
        assert body["session_id"]
        assert body["greeting"]["act"]["act_type"] == "START"
        assert "fixture" not in body["greeting"]["text"] or body["greeting"]["text"]

    def test_unknown_corpus_or_policy_rejected(self, client):
        assert client.post("/sessions", json={"corpus": "nope"}).status_code == 400
        assert client.post("/sessions", json={"policy": "nope"}).status_code == 400

    def test_step_with_keyword_matches_engine_policy(self, client, toy_dataset):
        created = client.post("/sessions", json={}).json()
        resp = client.post(f"/sessions/{created['session_id']}/acts", json={"text": "+knownhost"})
        assert resp.status_code == 200
        body = resp.json()
        assert body["user"]["act_type"] == "provideKeyword"
        assert body["user"]["payload"] == "knownhost"
        assert body["turn"] == 1

        # cross-check against the policy on an identical offline session
        offline = replay_transcript(
            toy_dataset,
            HandCraftedPolicy(),
            SessionConfig(),
            seed=7,
            user_acts=[DialogueAct(DialogueActType.PROVIDE_KEYWORD, "knownhost")],
        )
        offline_acts = [e.act for e in offline.transcript if e.actor == "system" and e.act.act_type is not DialogueActType.START]
        assert body["system"]["act"]["act_type"] == offline_acts[0].act_type.wire_name
        assert body["system"]["act"]["payload"] == offline_acts[0].payload

    def test_step_text_and_act_bodies(self, client):
        sid = client.post("/sessions", json={}).json()["session_id"]
        by_act = client.post(
            f"/sessions/{sid}/acts",
            json={"act": {"act_type": "elicitListResults", "payload": None}},
        )
        assert by_act.status_code == 200
        assert by_act.json()["system"]["act"]["act_type"] == "listResults"

    def test_malformed_bodies(self, client):
        sid = client.post("/sessions", json={}).json()["session_id"]
        assert client.post(f"/sessions/{sid}/acts", json={}).status_code == 400
        assert (
            client.post(f"/sessions/{sid}/acts", json={"act": {"act_type": "notAnAct"}}).status_code
            == 400
        )
        assert client.post(f"/sessions/{sid}/acts", json={"text": "   "}).status_code == 400

    def test_unknown_component_payload_is_400(self, client):
        sid = client.post("/sessions", json={}).json()["session_id"]
        resp = client.post(
            f"/sessions/{sid}/acts",
            json={"act": {"act_type": "rejectComponents", "payload": ["nope"]}},
        )
        assert resp.status_code == 400

    def test_at_unknown_component_404_with_suggestions(self, client):
        sid = client.post("/sessions", json={}).json()["session_id"]
        resp = client.post(f"/sessions/{sid}/acts", json={"text": "@ssh_conect"})
        assert resp.status_code == 404
        assert "ssh_connect" in resp.json()["suggestions"]

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/zzz").status_code == 404
        assert client.post("/sessions/zzz/acts", json={"text": "hi"}).status_code == 404

    def test_delete_then_step_404(self, client):
        sid = client.post("/sessions", json={}).json()["session_id"]
        assert client.delete(f"/sessions/{sid}").status_code == 204
        assert client.post(f"/sessions/{sid}/acts", json={"text": "hi"}).status_code == 404

    def test_restart_keeps_turn_count(self, client):
        sid = client.post("/sessions", json={}).json()["session_id"]
        client.post(f"/sessions/{sid}/acts", json={"text": "open a socket"})
        resp = client.post(f"/sessions/{sid}/restart")
        assert resp.status_code == 200
        body = resp.json()
        assert body["user"]["act_type"] == "restart"
        assert body["turn"] == 2  # restart's system response is a rewarded turn

    def test_concurrent_step_conflict(self, client):
        sid = client.post("/sessions", json={}).json()["session_id"]
        handle = client.app.state.store.get(sid)
        assert handle.lock.acquire(blocking=False)
        try:
            resp = client.post(f"/sessions/{sid}/acts", json={"text": "open"})
            assert resp.status_code == 409
        finally:
            handle.lock.release()

    def test_transcript_replays_to_same_state(self, client, toy_dataset):
        sid = client.post("/sessions", json={"policy": "hand-crafted"}).json()["session_id"]
        for text in ["open an ssh session", "+knownhost", "list-results", "next-function"]:
            assert client.post(f"/sessions/{sid}/acts", json={"text": text}).status_code == 200
        record = client.get(f"/sessions/{sid}").json()

        user_acts = [
            DialogueAct(act_type_from_wire(e["act_type"], "user"), e["payload"])
            for e in record["transcript"]
            if e["actor"] == "user"
        ]
        replayed = replay_transcript(toy_dataset, HandCraftedPolicy(), SessionConfig(), record["seed"], user_acts)
        original_system = [
            (e["act_type"], e["payload"]) for e in record["transcript"] if e["actor"] == "system"
        ]
        replay_system = [
            (e.act.act_type.wire_name, e.act.payload) for e in replayed.transcript if e.actor == "system"
        ]
        assert original_system == replay_system
        assert record["cumulative_core_reward"] == replayed.total_core_reward()

    def test_info_endpoint(self, client):
        body = client.get("/api/info").json()
        assert body["corpora"] == ["fixture"]
        assert set(body["policies"]) == {"hand-crafted", "single-turn"}
