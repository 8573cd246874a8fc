"""Thin HTTP JSON facade over the schema, WTP and simulation modules.

Three endpoints back the scenario workbench UI:

    GET  /schema            attribute/level/price-range document
    POST /simulate          Scenario JSON -> forecast / sweep / comparison
    GET  /wtp?cut=&season=  one cut-season slice of the WTP table

The service adds no arithmetic: every number in a response is the
corresponding library result serialized at full float precision.  State is
immutable after startup, so request handling is freely concurrent and
responses are reproducible; the /schema payload is pre-serialized once.
Cross-origin headers are permissive for the local UI.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .errors import DataError, NumericalError, SchemaError
from .likelihood import ParameterSet
from .schema import AttributeSchema
from .simulate import (
    forecast,
    forecast_to_mapping,
    price_sweep,
    scenario_from_mapping,
    seasonal_compare,
)
from .wtp import wtp_table

JSON_TYPE = "application/json; charset=utf-8"


@dataclass(frozen=True)
class ApiError(Exception):
    code: str  # bad_request | unknown_cut | infeasible | internal
    message: str
    detail: str = ""

    @property
    def status(self) -> int:
        return {"bad_request": 400, "unknown_cut": 404, "infeasible": 422}.get(self.code, 500)

    def body(self) -> dict:
        return {"error": {"code": self.code, "message": self.message, "detail": self.detail}}


class ScenarioService:
    """Request handling against immutable schema/parameter fixtures."""

    def __init__(
        self,
        schema: AttributeSchema,
        params: ParameterSet,
        marginals=None,
    ):
        self.schema = schema
        self.params = params
        self.marginals = marginals
        self._schema_bytes = _encode(schema.to_mapping())
        self._wtp = wtp_table(params, schema)

    # -- endpoints ---------------------------------------------------------

    def get_schema(self) -> bytes:
        return self._schema_bytes

    def post_simulate(self, body: bytes) -> bytes:
        try:
            doc = json.loads(body.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ApiError("bad_request", "request body is not valid JSON", str(exc))
        if not isinstance(doc, dict):
            raise ApiError("bad_request", "request body must be a JSON object")
        cut = doc.get("cut")
        if cut is not None and cut not in self.schema.cuts:
            raise ApiError("unknown_cut", f"unknown cut {cut!r}")
        try:
            scenario = scenario_from_mapping(self.schema, doc)
        except (DataError, SchemaError) as exc:
            raise ApiError("bad_request", "invalid scenario", str(exc))
        try:
            if doc.get("price_grid"):
                sweep = price_sweep(
                    self.params, scenario, [float(p) for p in doc["price_grid"]], self.marginals
                )
                payload = {
                    "points": [forecast_to_mapping(pt) for pt in sweep.points],
                    "argmax_price": sweep.argmax_price,
                    "argmax_index": sweep.argmax_index,
                }
            elif doc.get("compare_seasons"):
                cmp = seasonal_compare(self.params, scenario, self.marginals)
                payload = {
                    "winter": forecast_to_mapping(cmp.winter),
                    "summer": forecast_to_mapping(cmp.summer),
                    "delta_probabilities": list(cmp.delta_probabilities),
                    "delta_expected_quantity": cmp.delta_expected_quantity,
                }
            else:
                payload = {"forecast": forecast_to_mapping(forecast(self.params, scenario, self.marginals))}
        except (DataError, SchemaError) as exc:
            raise ApiError("bad_request", "invalid scenario", str(exc))
        except NumericalError as exc:
            raise ApiError("infeasible", "scenario is infeasible under the parameters", str(exc))
        return _encode(payload)

    def get_wtp(self, query: dict) -> bytes:
        cut = _single(query, "cut")
        season = _single(query, "season")
        if cut is None or season is None:
            raise ApiError("bad_request", "query needs cut and season")
        if cut not in self.schema.cuts:
            raise ApiError("unknown_cut", f"unknown cut {cut!r}")
        if season not in self.schema.seasons:
            raise ApiError("bad_request", f"unknown season {season!r}")
        entries = [
            {"attribute": attr, "level": level, "wtp": value}
            for (attr, level), value in sorted(self._wtp.slice(cut, season).items())
        ]
        return _encode({"cut": cut, "season": season, "entries": entries})


def _single(query: dict, name: str):
    values = query.get(name)
    return values[0] if values else None


def _encode(payload) -> bytes:
    return json.dumps(payload).encode("utf-8")


def make_handler(service: ScenarioService, quiet: bool = True):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):
            if not quiet:
                super().log_message(fmt, *args)

        def _reply(self, status: int, body: bytes) -> None:
            self.send_response(status)
            self.send_header("Content-Type", JSON_TYPE)
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.end_headers()
            self.wfile.write(body)

        def _fail(self, error: ApiError) -> None:
            self._reply(error.status, _encode(error.body()))

        def do_OPTIONS(self):  # CORS preflight
            self._reply(204, b"")

        def do_GET(self):
            url = urlparse(self.path)
            try:
                if url.path == "/schema":
                    self._reply(200, service.get_schema())
                elif url.path == "/wtp":
                    self._reply(200, service.get_wtp(parse_qs(url.query)))
                else:
                    self._fail(ApiError("bad_request", f"no such endpoint {url.path!r}"))
            except ApiError as exc:
                self._fail(exc)
            except Exception as exc:  # pragma: no cover - defensive
                self._fail(ApiError("internal", "internal error", str(exc)))

        def do_POST(self):
            url = urlparse(self.path)
            try:
                if url.path != "/simulate":
                    raise ApiError("bad_request", f"no such endpoint {url.path!r}")
                length = int(self.headers.get("Content-Length", "0"))
                body = self.rfile.read(length)
                self._reply(200, service.post_simulate(body))
            except ApiError as exc:
                self._fail(exc)
            except Exception as exc:  # pragma: no cover - defensive
                self._fail(ApiError("internal", "internal error", str(exc)))

    return Handler


def make_server(service: ScenarioService, host: str = "127.0.0.1", port: int = 0, quiet: bool = True):
    return ThreadingHTTPServer((host, port), make_handler(service, quiet=quiet))


def serve(service: ScenarioService, host: str, port: int, quiet: bool = False) -> None:
    server = make_server(service, host, port, quiet=quiet)
    address = f"http://{server.server_address[0]}:{server.server_address[1]}"
    print(f"scenario service listening on {address}", flush=True)
    try:
        server.serve_forever()
    finally:
        server.server_close()
