"""REST service: accounts, patient records, diagnosis reports, appointments.

All routes live under /api/v1 and speak JSON; errors use one envelope,
{"error": {"code", "message"}}. State is a single EventStore; the knowledge
base, ruleset, and both learned engines are built once at startup and shared
read-only across requests.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
from collections import Counter
from contextlib import asynccontextmanager
from datetime import datetime, timedelta, timezone
from typing import Literal

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel
from starlette.exceptions import HTTPException as StarletteHTTPException

from ..engine import (
    DiagnosisParams,
    Differential,
    DifferentialEntry,
    diagnose,
    differential_to_doc,
    recommend_treatments,
)
from ..learning import (
    EmptyText,
    augment_leave_one_out,
    classify_text,
    generate_prompts,
    kb_to_dataset,
    resolve_text,
    train_decision_tree,
    train_text_classifier,
    tree_predict,
)
from ..model import kb_from_json
from ..rules import canonicalize_ruleset, parse_ruleset
from ..seed import build_seed_kb, load_seed_rules, load_seed_templates
from .config import ServiceConfig
from .store import EventStore, new_id, utc_now

API_PREFIX = "/api/v1"
ENGINES = ("rules", "tree", "text")
GENDERS = ("female", "male", "other")
APPOINTMENT_STATUSES = ("requested", "confirmed", "completed")

_PBKDF2_ITERATIONS = 60_000


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def hash_password(password: str) -> str:
    salt = secrets.token_hex(16)
    digest = hashlib.pbkdf2_hmac(
        "sha256", password.encode(), bytes.fromhex(salt), _PBKDF2_ITERATIONS
    )
    return f"pbkdf2${_PBKDF2_ITERATIONS}${salt}${digest.hex()}"


def verify_password(password: str, stored: str) -> bool:
    try:
        _, iterations, salt, expected = stored.split("$")
        digest = hashlib.pbkdf2_hmac(
            "sha256", password.encode(), bytes.fromhex(salt), int(iterations)
        )
        return hmac.compare_digest(digest.hex(), expected)
    except (ValueError, AttributeError):
        return False


_DUMMY_CREDENTIAL = hash_password("timing-equalizer")


class SignupBody(BaseModel):
    username: str
    password: str
    role: Literal["practitioner", "patient"]


class LoginBody(BaseModel):
    username: str
    password: str


class PatientBody(BaseModel):
    name: str
    age: int
    gender: Literal["female", "male", "other"]
    assigned_practitioner: str | None = None


class SymptomsBody(BaseModel):
    text: str


class DiagnoseBody(BaseModel):
    engine: str = "rules"
    params: dict | None = None


class ChooseBody(BaseModel):
    disease_id: str


class AppointmentBody(BaseModel):
    patient_id: str
    practitioner_id: str
    scheduled_at: str


class StatusBody(BaseModel):
    status: str


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig.from_env()
    store = EventStore(config.data_dir)

    if config.kb_path is not None:
        kb = kb_from_json(config.kb_path.read_text(encoding="utf-8"))
    else:
        kb = build_seed_kb()
    if config.rules_path is not None:
        rules = canonicalize_ruleset(
            parse_ruleset(config.rules_path.read_text(encoding="utf-8"), config.rules_path.name)
        )
    else:
        rules = load_seed_rules()

    dataset = augment_leave_one_out(kb_to_dataset(kb), depth=1)
    tree = train_decision_tree(dataset)
    text_model = train_text_classifier(generate_prompts(kb, load_seed_templates()))

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        store.compact()
        store.close()

    app = FastAPI(title="unani-cdss", lifespan=lifespan)
    app.state.store = store
    app.state.kb = kb
    app.state.rules = rules

    # the web client may be served from any origin; auth is bearer-token
    # based, so reflecting origins adds no CSRF surface
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["Authorization", "Content-Type"],
    )

    # -- plumbing ----------------------------------------------------------

    @app.exception_handler(ApiError)
    async def on_api_error(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content={"error": {"code": "validation_error", "message": str(exc.errors())}},
        )

    @app.exception_handler(StarletteHTTPException)
    async def on_http_error(request: Request, exc: StarletteHTTPException):
        return JSONResponse(
            status_code=exc.status_code,
            content={"error": {"code": "http_error", "message": str(exc.detail)}},
        )

    def require_session(request: Request) -> dict:
        header = request.headers.get("authorization", "")
        if not header.lower().startswith("bearer "):
            raise ApiError(401, "unauthenticated", "missing bearer token")
        session = store.get("sessions", header[7:].strip())
        if session is None:
            raise ApiError(401, "unauthenticated", "unknown or revoked token")
        if session["expires_at"] <= utc_now():
            raise ApiError(401, "unauthenticated", "token expired")
        account = store.get("accounts", session["account_id"])
        if account is None:
            raise ApiError(401, "unauthenticated", "account no longer exists")
        return account

    def require_practitioner(request: Request) -> dict:
        account = require_session(request)
        if account["role"] != "practitioner":
            raise ApiError(403, "forbidden", "practitioner role required")
        return account

    def public_account(account: dict) -> dict:
        return {k: account[k] for k in ("id", "username", "role", "created_at")}

    def get_or_404(collection: str, record_id: str, what: str) -> dict:
        record = store.get(collection, record_id)
        if record is None:
            raise ApiError(404, f"unknown_{what}", f"no such {what}: {record_id}")
        return record

    def enriched_plan(disease_id: str) -> dict:
        plan = recommend_treatments(kb, rules, disease_id)
        def items(ids: tuple[str, ...]) -> list[dict]:
            return [
                {
                    "id": tid,
                    "label": kb.treatments[tid].label,
                    "provenance": list(plan.provenance.get(tid, ())),
                }
                for tid in ids
            ]
        return {
            "principle": items(plan.principle),
            "regimental": items(plan.regimental),
            "prevention": items(plan.prevention),
        }

    # -- auth --------------------------------------------------------------

    @app.post(API_PREFIX + "/auth/signup", status_code=201)
    def signup(body: SignupBody):
        username = body.username.strip()
        if not 3 <= len(username) <= 64:
            raise ApiError(422, "invalid_username", "username must be 3-64 characters")
        if len(body.password) < 8:
            raise ApiError(422, "weak_password", "password must be at least 8 characters")
        if store.find("accounts", username=username):
            raise ApiError(409, "duplicate_username", "username already registered")
        account = {
            "id": new_id("acc"),
            "username": username,
            "role": body.role,
            "credential": hash_password(body.password),
            "created_at": utc_now(),
        }
        store.put("accounts", account)
        return public_account(account)

    @app.post(API_PREFIX + "/auth/login")
    def login(body: LoginBody):
        matches = store.find("accounts", username=body.username.strip())
        credential = matches[0]["credential"] if matches else _DUMMY_CREDENTIAL
        if not verify_password(body.password, credential) or not matches:
            raise ApiError(401, "bad_credentials", "invalid username or password")
        account = matches[0]
        expires = datetime.now(timezone.utc) + timedelta(hours=config.token_ttl_hours)
        token = secrets.token_hex(24)
        store.put(
            "sessions",
            {"id": token, "account_id": account["id"], "expires_at": expires.isoformat()},
        )
        return {
            "token": token,
            "account_id": account["id"],
            "role": account["role"],
            "expires_at": expires.isoformat(),
        }

    # -- patients ----------------------------------------------------------

    @app.post(API_PREFIX + "/patients", status_code=201)
    def create_patient(body: PatientBody, request: Request):
        require_session(request)
        if not body.name.strip():
            raise ApiError(422, "invalid_name", "patient name must be non-empty")
        if not 0 <= body.age <= 150:
            raise ApiError(422, "invalid_age", "age must be between 0 and 150")
        if body.assigned_practitioner is not None:
            practitioner = get_or_404("accounts", body.assigned_practitioner, "practitioner")
            if practitioner["role"] != "practitioner":
                raise ApiError(422, "not_a_practitioner", "assigned account is not a practitioner")
        patient = {
            "id": new_id("pat"),
            "name": body.name.strip(),
            "age": body.age,
            "gender": body.gender,
            "symptom_entries": [],
            "assigned_practitioner": body.assigned_practitioner,
            "created_at": utc_now(),
        }
        store.put("patients", patient)
        return patient

    @app.get(API_PREFIX + "/patients")
    def list_patients(request: Request):
        require_session(request)
        return store.all("patients")

    @app.get(API_PREFIX + "/patients/{patient_id}")
    def get_patient(patient_id: str, request: Request):
        require_session(request)
        return get_or_404("patients", patient_id, "patient")

    @app.post(API_PREFIX + "/patients/{patient_id}/symptoms", status_code=201)
    def add_symptoms(patient_id: str, body: SymptomsBody, request: Request):
        require_session(request)
        patient = get_or_404("patients", patient_id, "patient")
        if not body.text.strip():
            raise ApiError(422, "empty_text", "symptom text must be non-empty")
        resolved, unresolved = resolve_text(kb, body.text)
        entry = {
            "timestamp": utc_now(),
            "raw_text": body.text,
            "resolved": sorted(resolved),
            "unresolved": unresolved,
        }
        patient["symptom_entries"].append(entry)
        store.put("patients", patient)
        warnings = [f"unrecognized: {fragment}" for fragment in unresolved]
        if not resolved:
            warnings.append("no findings recognized")
        return {"patient_id": patient_id, **entry, "warnings": warnings}

    # -- diagnosis ---------------------------------------------------------

    def parse_params(raw: dict | None) -> DiagnosisParams:
        raw = raw or {}
        allowed = {"threshold", "strict_vocabulary", "kind_weights"}
        unknown = set(raw) - allowed
        if unknown:
            raise ApiError(422, "unknown_param", f"unknown params: {sorted(unknown)}")
        try:
            return DiagnosisParams(**raw)
        except TypeError as exc:
            raise ApiError(422, "invalid_params", str(exc)) from exc

    def run_engine(engine: str, patient: dict, params: DiagnosisParams) -> Differential:
        entries = patient["symptom_entries"]
        findings = {fid for entry in entries for fid in entry["resolved"]}
        if engine == "rules":
            if not findings:
                raise ApiError(422, "no_findings", "patient has no resolved findings")
            return diagnose(kb, rules, findings, params)
        if engine == "tree":
            if not findings:
                raise ApiError(422, "no_findings", "patient has no resolved findings")
            label, dist = tree_predict(tree, tree.space.vector_of(findings))
            ranked = sorted(dist.items(), key=lambda kv: (-kv[1], kv[0]))
            return Differential(
                entries=tuple(
                    DifferentialEntry(d, p, frozenset(), frozenset(), ()) for d, p in ranked
                )
            )
        raw_text = " ".join(entry["raw_text"] for entry in entries).strip()
        if not raw_text:
            raise ApiError(422, "no_findings", "patient has no symptom text")
        try:
            return classify_text(text_model, raw_text)
        except EmptyText as exc:
            raise ApiError(422, "no_findings", str(exc)) from exc

    @app.post(API_PREFIX + "/patients/{patient_id}/diagnose", status_code=201)
    def diagnose_patient(patient_id: str, body: DiagnoseBody, request: Request):
        require_session(request)
        patient = get_or_404("patients", patient_id, "patient")
        if body.engine not in ENGINES:
            raise ApiError(400, "unknown_engine", f"engine must be one of {list(ENGINES)}")
        params = parse_params(body.params)
        differential = run_engine(body.engine, patient, params)
        report = {
            "id": new_id("rep"),
            "patient_id": patient_id,
            "engine": body.engine,
            "params": {
                "threshold": params.threshold,
                "strict_vocabulary": params.strict_vocabulary,
                "kind_weights": params.kind_weights,
            },
            "differential": differential_to_doc(differential),
            "chosen_disease": None,
            "plan": None,
            "created_at": utc_now(),
        }
        store.put("reports", report)
        return report

    @app.post(API_PREFIX + "/reports/{report_id}/choose")
    def choose_disease(report_id: str, body: ChooseBody, request: Request):
        require_session(request)
        report = get_or_404("reports", report_id, "report")
        listed = {e["disease_id"] for e in report["differential"]["entries"]}
        if body.disease_id not in listed:
            raise ApiError(
                422, "not_in_differential", f"{body.disease_id} is not in this differential"
            )
        report["chosen_disease"] = body.disease_id
        report["plan"] = enriched_plan(body.disease_id)
        store.put("reports", report)
        return report

    @app.get(API_PREFIX + "/reports/{report_id}")
    def get_report(report_id: str, request: Request):
        require_session(request)
        return get_or_404("reports", report_id, "report")

    # -- diseases ----------------------------------------------------------

    def disease_doc(disease_id: str) -> dict:
        disease = kb.diseases[disease_id]
        findings = sorted(kb.findings_of(disease_id))
        return {
            "id": disease.id,
            "name": disease.name,
            "alt_name": disease.alt_name,
            "description": disease.description,
            "symptoms": [
                {"id": f, "label": kb.findings[f].label}
                for f in findings
                if kb.findings[f].kind.value == "symptom"
            ],
            "causes": [
                {"id": f, "label": kb.findings[f].label}
                for f in findings
                if kb.findings[f].kind.value == "cause"
            ],
        }

    @app.get(API_PREFIX + "/diseases")
    def list_diseases(request: Request):
        require_session(request)
        return [disease_doc(d) for d in sorted(kb.diseases)]

    @app.get(API_PREFIX + "/diseases/{disease_id}")
    def get_disease(disease_id: str, request: Request):
        require_session(request)
        if disease_id not in kb.diseases:
            raise ApiError(404, "unknown_disease", f"no such disease: {disease_id}")
        return disease_doc(disease_id)

    @app.get(API_PREFIX + "/diseases/{disease_id}/treatments")
    def get_disease_treatments(disease_id: str, request: Request):
        require_session(request)
        if disease_id not in kb.diseases:
            raise ApiError(404, "unknown_disease", f"no such disease: {disease_id}")
        return enriched_plan(disease_id)

    # -- appointments --------------------------------------------------------

    @app.post(API_PREFIX + "/appointments", status_code=201)
    def create_appointment(body: AppointmentBody, request: Request):
        require_session(request)
        get_or_404("patients", body.patient_id, "patient")
        practitioner = get_or_404("accounts", body.practitioner_id, "practitioner")
        if practitioner["role"] != "practitioner":
            raise ApiError(422, "not_a_practitioner", "appointments need a practitioner account")
        try:
            datetime.fromisoformat(body.scheduled_at)
        except ValueError:
            raise ApiError(422, "invalid_timestamp", "scheduled_at must be ISO-8601") from None
        appointment = {
            "id": new_id("apt"),
            "patient_id": body.patient_id,
            "practitioner_id": body.practitioner_id,
            "scheduled_at": body.scheduled_at,
            "status": "requested",
            "created_at": utc_now(),
        }
        store.put("appointments", appointment)
        return appointment

    @app.get(API_PREFIX + "/appointments")
    def list_appointments(request: Request):
        require_session(request)
        return store.all("appointments")

    @app.post(API_PREFIX + "/appointments/{appointment_id}/status")
    def advance_appointment(appointment_id: str, body: StatusBody, request: Request):
        require_session(request)
        appointment = get_or_404("appointments", appointment_id, "appointment")
        if body.status not in APPOINTMENT_STATUSES:
            raise ApiError(422, "invalid_status", f"status must be one of {list(APPOINTMENT_STATUSES)}")
        if APPOINTMENT_STATUSES.index(body.status) <= APPOINTMENT_STATUSES.index(
            appointment["status"]
        ):
            raise ApiError(
                409,
                "invalid_transition",
                f"cannot move from {appointment['status']} to {body.status}",
            )
        appointment["status"] = body.status
        store.put("appointments", appointment)
        return appointment

    # -- stats ---------------------------------------------------------------

    @app.get(API_PREFIX + "/stats/dashboard")
    def dashboard_stats(request: Request):
        require_practitioner(request)
        patients = store.all("patients")
        appointments = store.all("appointments")
        reports = store.all("reports")
        genders = Counter(p["gender"] for p in patients)
        statuses = Counter(a["status"] for a in appointments)
        diagnoses = Counter(
            r["chosen_disease"] for r in reports if r["chosen_disease"] is not None
        )
        return {
            "patients_total": len(patients),
            "patients_by_gender": {g: genders.get(g, 0) for g in GENDERS},
            "appointments_by_status": {s: statuses.get(s, 0) for s in APPOINTMENT_STATUSES},
            "diagnoses_by_disease": dict(sorted(diagnoses.items())),
        }

    @app.get(API_PREFIX + "/health")
    def health():
        return {"status": "ok"}

    return app


def run_service(config: ServiceConfig | None = None) -> None:
    import uvicorn

    config = config or ServiceConfig.from_env()
    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="warning")
