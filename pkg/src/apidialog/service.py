"""HTTP session service: prefix parsing for the multipurpose search bar,
template rendering of system acts, and session lifecycle endpoints.

Input conventions: plain text is a query, ``+word`` adds a keyword,
``@name`` asks for a function's documentation (``@name#property`` for one
property). Quick-response identifiers (``list-results``, ``next-function``,
``next-page``, ``reject <ids>``, ``unsure``, ``restart``) map directly to
their acts. The full template table lives in docs/templates.md.
"""

from __future__ import annotations

import difflib
import threading
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from apidialog.acts import (
    ContractViolationError,
    DialogueAct,
    DialogueActType,
    Session,
    SessionConfig,
    UnknownComponentError,
    act_type_from_wire,
    apply_user_act,
    new_session,
    system_respond,
)
from apidialog.corpus import ApiComponent, ApiDataset


class ComponentNotFoundError(Exception):
    def __init__(self, name: str, suggestions: list[str]):
        self.name = name
        self.suggestions = suggestions
        hint = f"; did you mean: {', '.join(suggestions)}" if suggestions else ""
        super().__init__(f"unknown function {name!r}{hint}")


class ParseError(Exception):
    pass


@dataclass(frozen=True)
class QuickResponse:
    label: str
    input: str       # feeding this back through parse_input yields the act
    act_type: DialogueActType

    def to_dict(self) -> dict:
        return {"label": self.label, "input": self.input, "act_type": self.act_type.wire_name}


@dataclass
class RenderedMessage:
    text: str
    act: DialogueAct
    quick_responses: list[QuickResponse] = field(default_factory=list)
    clickable_items: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "act": self.act.to_wire(),
            "quick_responses": [q.to_dict() for q in self.quick_responses],
            "clickable_items": self.clickable_items,
        }


def _resolve_component(name: str, dataset: ApiDataset) -> str:
    if name in dataset:
        return name
    suggestions = difflib.get_close_matches(name, [c.id for c in dataset.components], n=3, cutoff=0.4)
    raise ComponentNotFoundError(name, suggestions)


def parse_input(text: str, dataset: ApiDataset) -> DialogueAct:
    """Map search-bar text to a user act."""
    text = text.strip()
    if not text:
        raise ParseError("empty input")

    if text.startswith("+"):
        keyword = text[1:].strip()
        if not keyword:
            raise ParseError("expected a keyword after '+'")
        return DialogueAct(DialogueActType.PROVIDE_KEYWORD, keyword)

    if text.startswith("@"):
        name = text[1:].strip()
        if not name:
            raise ParseError("expected a function name after '@'")
        if "#" in name:
            name, prop = name.split("#", 1)
            cid = _resolve_component(name.strip(), dataset)
            comp = dataset.get(cid)
            prop = prop.strip()
            if prop not in comp.property_names():
                raise ParseError(
                    f"function {cid!r} has no property {prop!r}; available: {', '.join(comp.property_names())}"
                )
            return DialogueAct(DialogueActType.ELICIT_INFO_API, {"id": cid, "properties": [prop]})
        return DialogueAct(DialogueActType.ELICIT_INFO_ALL_API, _resolve_component(name, dataset))

    lowered = text.lower()
    if lowered == "list-results":
        return DialogueAct(DialogueActType.ELICIT_LIST_RESULTS)
    if lowered == "next-function":
        return DialogueAct(DialogueActType.ELICIT_SUGG_API)
    if lowered == "next-page":
        return DialogueAct(DialogueActType.USER_CHANGE_PAGE)
    if lowered == "unsure":
        return DialogueAct(DialogueActType.UNSURE)
    if lowered == "restart":
        return DialogueAct(DialogueActType.RESTART)
    if lowered == "reject" or lowered.startswith("reject "):
        names = text.split()[1:]
        ids = [_resolve_component(n, dataset) for n in names]
        return DialogueAct(DialogueActType.REJECT_COMPONENTS, ids)

    return DialogueAct(DialogueActType.PROVIDE_QUERY, text)


def _signature_text(comp: ApiComponent) -> str:
    params = ", ".join(f"{p.type} {p.name}".strip() for p in comp.signature.params)
    ret = comp.signature.return_type or ""
    return f"{ret} {comp.signature.name}({params})".strip()


def describe_component(comp: ApiComponent, properties: list[str] | None = None) -> str:
    """Plain-text documentation block for a component (all properties, or a
    named subset)."""
    if properties is None:
        lines = [_signature_text(comp), f"summary: {comp.summary}"]
        lines += [f"{name}: {text}" for name, text in comp.properties.items()]
        return "\n".join(lines)
    return "\n".join(f"{name}: {comp.property_text(name)}" for name in properties)


_QR_LIST = QuickResponse("List results", "list-results", DialogueActType.ELICIT_LIST_RESULTS)
_QR_NEXT_FN = QuickResponse("Next function", "next-function", DialogueActType.ELICIT_SUGG_API)
_QR_NEXT_PAGE = QuickResponse("Next page", "next-page", DialogueActType.USER_CHANGE_PAGE)
_QR_UNSURE = QuickResponse("I'm not sure", "unsure", DialogueActType.UNSURE)


def _reject_quick(cid: str) -> QuickResponse:
    return QuickResponse("Not this one", f"reject {cid}", DialogueActType.REJECT_COMPONENTS)


def render(act: DialogueAct, dataset: ApiDataset) -> RenderedMessage:
    """Fill the response template for a system act and attach the
    context-appropriate quick responses and clickable items."""
    t = act.act_type
    if not t.is_system_act:
        raise ContractViolationError(f"{t.wire_name} is not a system act")

    if t is DialogueActType.START:
        return RenderedMessage(
            text=(
                f"Hi! I can help you find functions in the {dataset.api} API. "
                "Describe what you're looking for, type +word to add a keyword, "
                "or @name to look up a function."
            ),
            act=act,
            quick_responses=[_QR_LIST],
        )
    if t is DialogueActType.LIST_RESULTS:
        return RenderedMessage(
            text="I found these functions. Would you like to know more about any of them?",
            act=act,
            quick_responses=[_QR_NEXT_PAGE, _QR_NEXT_FN, _QR_UNSURE],
            clickable_items=list(act.payload),
        )
    if t is DialogueActType.CHANGE_PAGE:
        if not act.payload:
            return RenderedMessage(
                text="There are no more results. Try changing your search.",
                act=act,
                quick_responses=[_QR_LIST, _QR_UNSURE],
            )
        return RenderedMessage(
            text="Here are the next results.",
            act=act,
            quick_responses=[_QR_NEXT_PAGE, _QR_NEXT_FN, _QR_UNSURE],
            clickable_items=list(act.payload),
        )
    if t is DialogueActType.REQUEST_QUERY:
        return RenderedMessage(
            text="Could you describe what you're looking for in different words?",
            act=act,
            quick_responses=[_QR_LIST, _QR_UNSURE],
        )
    if t is DialogueActType.SUGG_KEYWORDS:
        return RenderedMessage(
            text="Some of these keywords might help your search. Click one to add it.",
            act=act,
            quick_responses=[_QR_LIST, _QR_UNSURE],
            clickable_items=list(act.payload),
        )
    if t is DialogueActType.SUGG_API:
        comp = dataset.get(act.payload)
        return RenderedMessage(
            text=f"How about {comp.id}? {comp.summary}",
            act=act,
            quick_responses=[_QR_NEXT_FN, _reject_quick(comp.id), _QR_LIST],
            clickable_items=[comp.id],
        )
    if t is DialogueActType.SUGG_INFO_API:
        comp = dataset.get(act.payload)
        return RenderedMessage(
            text=f"I think {comp.id} could be what you need.\n{describe_component(comp)}",
            act=act,
            quick_responses=[_QR_NEXT_FN, _reject_quick(comp.id), _QR_LIST],
            clickable_items=[comp.id],
        )
    if t is DialogueActType.INFO_API:
        comp = dataset.get(act.payload["id"])
        body = describe_component(comp, act.payload["properties"])
        return RenderedMessage(
            text=f"Here's what I have on {comp.id}:\n{body}",
            act=act,
            quick_responses=[_QR_NEXT_FN, _QR_LIST],
            clickable_items=[comp.id],
        )
    if t is DialogueActType.INFO_ALL_API:
        comp = dataset.get(act.payload)
        return RenderedMessage(
            text=f"Here's everything I have on {comp.id}:\n{describe_component(comp)}",
            act=act,
            quick_responses=[_QR_NEXT_FN, _QR_LIST],
            clickable_items=[comp.id],
        )
    raise ContractViolationError(f"no template for {t.wire_name}")


# -- HTTP layer --------------------------------------------------------------


class CreateSessionBody(BaseModel):
    corpus: str | None = None
    policy: str | None = None


class ActBody(BaseModel):
    text: str | None = None
    act: dict | None = None


@dataclass
class SessionHandle:
    session_id: str
    corpus_name: str
    policy_name: str
    session: Session
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionStore:
    def __init__(self):
        self._handles: dict[str, SessionHandle] = {}
        self._lock = threading.Lock()

    def add(self, handle: SessionHandle):
        with self._lock:
            self._handles[handle.session_id] = handle

    def get(self, session_id: str) -> SessionHandle:
        with self._lock:
            handle = self._handles.get(session_id)
        if handle is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return handle

    def remove(self, session_id: str):
        with self._lock:
            if session_id not in self._handles:
                raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
            del self._handles[session_id]


def create_app(
    corpora: dict[str, ApiDataset],
    policies: dict[str, object],
    default_corpus: str | None = None,
    default_policy: str | None = None,
    session_config: SessionConfig | None = None,
    session_seed: int = 0,
    static_dir=None,
) -> FastAPI:
    """Wire the dialogue engine into a JSON-over-HTTP app.

    ``corpora`` and ``policies`` are name registries; sessions pick one of
    each at creation time.
    """
    if not corpora:
        raise ValueError("need at least one corpus")
    if not policies:
        raise ValueError("need at least one policy")
    default_corpus = default_corpus or next(iter(corpora))
    default_policy = default_policy or next(iter(policies))
    session_config = session_config or SessionConfig()

    app = FastAPI(title="apidialog", version="0.1.0")
    store = SessionStore()
    app.state.store = store

    @app.exception_handler(ComponentNotFoundError)
    async def _component_not_found(request: Request, exc: ComponentNotFoundError):
        return JSONResponse(
            status_code=404,
            content={"detail": str(exc), "name": exc.name, "suggestions": exc.suggestions},
        )

    @app.exception_handler(ParseError)
    async def _parse_error(request: Request, exc: ParseError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(UnknownComponentError)
    async def _unknown_component(request: Request, exc: UnknownComponentError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(ContractViolationError)
    async def _contract_violation(request: Request, exc: ContractViolationError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/api/info")
    def info():
        return {
            "corpora": sorted(corpora),
            "policies": sorted(policies),
            "default_corpus": default_corpus,
            "default_policy": default_policy,
        }

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        corpus_name = body.corpus or default_corpus
        policy_name = body.policy or default_policy
        if corpus_name not in corpora:
            raise HTTPException(status_code=400, detail=f"unknown corpus {corpus_name!r}")
        if policy_name not in policies:
            raise HTTPException(status_code=400, detail=f"unknown policy {policy_name!r}")
        dataset = corpora[corpus_name]
        session = new_session(dataset, policies[policy_name], session_config, seed=session_seed)
        handle = SessionHandle(
            session_id=uuid.uuid4().hex,
            corpus_name=corpus_name,
            policy_name=policy_name,
            session=session,
        )
        store.add(handle)
        greeting = render(DialogueAct(DialogueActType.START), dataset)
        return {
            "session_id": handle.session_id,
            "corpus": corpus_name,
            "policy": policy_name,
            "greeting": greeting.to_dict(),
        }

    def _step(handle: SessionHandle, user_act: DialogueAct) -> dict:
        if not handle.lock.acquire(blocking=False):
            raise HTTPException(status_code=409, detail="another request is in flight for this session")
        try:
            session = handle.session
            dataset = session.dataset
            apply_user_act(session, user_act)
            if user_act.act_type is DialogueActType.END or session.terminal:
                system_message = None
            else:
                system_act = system_respond(session)
                system_message = render(system_act, dataset).to_dict()
            return {
                "session_id": handle.session_id,
                "user": user_act.to_wire(),
                "system": system_message,
                "turn": session.state.turn_count,
                "cumulative_core_reward": session.total_core_reward(),
                "terminal": session.terminal,
            }
        finally:
            handle.lock.release()

    @app.post("/sessions/{session_id}/acts")
    def step(session_id: str, body: ActBody):
        handle = store.get(session_id)
        dataset = handle.session.dataset
        if body.text is None and body.act is None:
            raise HTTPException(status_code=400, detail="body needs either 'text' or 'act'")
        if body.act is not None:
            try:
                act_type = act_type_from_wire(body.act["act_type"], actor="user")
            except (KeyError, ValueError) as exc:
                raise HTTPException(status_code=400, detail=f"bad act: {exc}") from exc
            user_act = DialogueAct(act_type, body.act.get("payload"))
        else:
            user_act = parse_input(body.text, dataset)
        return _step(handle, user_act)

    @app.post("/sessions/{session_id}/restart")
    def restart(session_id: str):
        handle = store.get(session_id)
        return _step(handle, DialogueAct(DialogueActType.RESTART))

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        handle = store.get(session_id)
        session = handle.session
        return {
            "session_id": handle.session_id,
            "corpus": handle.corpus_name,
            "policy": handle.policy_name,
            "seed": session.seed,
            "terminal": session.terminal,
            "turn": session.state.turn_count,
            "cumulative_core_reward": session.total_core_reward(),
            "transcript": [
                {
                    "actor": e.actor,
                    "act_type": e.act.act_type.wire_name,
                    "payload": e.act.payload,
                    "turn": e.turn,
                    "top_score": e.top_score,
                    "r": e.result_index,
                    "reward_core": e.reward_core,
                }
                for e in session.transcript
            ],
        }

    @app.delete("/sessions/{session_id}", status_code=204)
    def delete_session(session_id: str):
        store.remove(session_id)

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
