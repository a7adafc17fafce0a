"""LLM backends: an HTTP chat-completions client, a seeded mock and a replay file."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Mapping, Protocol

import httpx
import numpy as np

from .schema import FEATURE_SCHEMA, NA, Kind


class BackendError(RuntimeError):
    """Transport or configuration failure talking to a backend."""


@dataclass(frozen=True)
class ModelParams:
    model: str = "gpt-4o-2024-08-06"
    temperature: float = 0.2
    json_response: bool = True

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BackendCall:
    image_b64: str
    prompt: str
    params: ModelParams
    building_id: str = ""
    camera_id: str = ""


class LlmBackend(Protocol):
    name: str

    def complete(self, call: BackendCall) -> str: ...


class HttpChatBackend:
    """Chat-completions style HTTP client.

    The API key is read from the environment variable named by ``api_key_env``
    at call time and never stored in configuration.
    """

    name = "http"

    def __init__(
        self,
        base_url: str,
        model: str | None = None,
        api_key_env: str = "OPENAI_API_KEY",
        timeout_s: float = 120.0,
        transport: httpx.BaseTransport | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        self.timeout_s = timeout_s
        self._transport = transport

    def payload(self, call: BackendCall) -> dict:
        body = {
            "model": self.model or call.params.model,
            "temperature": call.params.temperature,
            "messages": [
                {
                    "role": "user",
                    "content": [
                        {"type": "text", "text": call.prompt},
                        {"type": "image_url", "image_url": {"url": f"data:image/jpeg;base64,{call.image_b64}"}},
                    ],
                }
            ],
        }
        if call.params.json_response:
            body["response_format"] = {"type": "json_object"}
        return body

    def complete(self, call: BackendCall) -> str:
        key = os.environ.get(self.api_key_env)
        if not key:
            raise BackendError(f"environment variable {self.api_key_env} is not set")
        headers = {"Authorization": f"Bearer {key}"}
        try:
            with httpx.Client(timeout=self.timeout_s, transport=self._transport) as client:
                resp = client.post(f"{self.base_url}/chat/completions", json=self.payload(call), headers=headers)
                resp.raise_for_status()
                data = resp.json()
        except (httpx.HTTPError, ValueError) as exc:
            raise BackendError(f"chat completion request failed: {exc}") from exc
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"unexpected response shape: {exc}") from exc


def _seed_from(*parts: str) -> int:
    h = hashlib.sha256("\x1f".join(parts).encode("utf-8")).digest()
    return int.from_bytes(h[:8], "little")


def random_features(rng: np.random.Generator) -> dict:
    """A schema-valid feature dict drawn from ``rng``."""
    out = {}
    for spec in FEATURE_SCHEMA:
        if spec.kind is Kind.YEAR:
            out[spec.name] = int(rng.integers(1600, 2025))
        elif spec.kind is Kind.BOOL:
            out[spec.name] = bool(rng.random() < 0.2)
        elif spec.kind in (Kind.SCALE, Kind.PERCENT):
            out[spec.name] = int(rng.integers(int(spec.lo), int(spec.hi) + 1))
        elif spec.kind is Kind.COUNT:
            out[spec.name] = int(rng.integers(0, 40))
        elif spec.kind is Kind.POSITIVE:
            out[spec.name] = int(rng.integers(1, 8))
        elif spec.kind is Kind.ENUM:
            levels = spec.values + ((NA,) if spec.allow_na else ())
            out[spec.name] = levels[int(rng.integers(len(levels)))]
        else:
            mask = rng.random(len(spec.values)) < 0.2
            out[spec.name] = [v for v, m in zip(spec.values, mask) if m]
    return out


class MockBackend:
    """Deterministic stand-in: the reply is a seeded function of the call inputs.

    ``generator`` may override how a feature dict is produced from the
    per-call RNG and the call itself.
    """

    name = "mock"

    def __init__(self, seed: int = 0, generator: Callable[[np.random.Generator, BackendCall], dict] | None = None):
        self.seed = int(seed)
        self.generator = generator

    def complete(self, call: BackendCall) -> str:
        rng = np.random.default_rng(
            _seed_from(str(self.seed), call.image_b64, call.prompt, call.params.model, repr(call.params.temperature))
        )
        feats = self.generator(rng, call) if self.generator else random_features(rng)
        return json.dumps(feats, ensure_ascii=False)


class ReplayBackend:
    """Serves canned replies keyed by ``(building_id, camera_id)``, falling back to building id."""

    name = "replay"

    def __init__(self, responses: Mapping[tuple[str, str] | str, str]):
        self._by_camera: dict[tuple[str, str], str] = {}
        self._by_building: dict[str, str] = {}
        for key, text in responses.items():
            if isinstance(key, tuple):
                self._by_camera[key] = text
            else:
                self._by_building[key] = text

    @classmethod
    def from_file(cls, path: str | Path) -> "ReplayBackend":
        """Read JSON lines of ``{"building_id", "camera_id"?, "response"}``."""
        path = Path(path)
        if not path.is_file():
            raise BackendError(f"replay file not found: {path}")
        responses: dict = {}
        with path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    bid = str(rec["building_id"])
                    text = rec["response"]
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise BackendError(f"{path}:{lineno}: bad replay record ({exc})") from exc
                if not isinstance(text, str):
                    text = json.dumps(text, ensure_ascii=False)
                key = (bid, str(rec["camera_id"])) if rec.get("camera_id") else bid
                responses[key] = text
        return cls(responses)

    def complete(self, call: BackendCall) -> str:
        text = self._by_camera.get((call.building_id, call.camera_id))
        if text is None:
            text = self._by_building.get(call.building_id)
        if text is None:
            raise BackendError(f"no canned response for building {call.building_id!r}")
        return text
