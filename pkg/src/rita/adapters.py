"""Dialogue and speech adapter seams.

The pipeline only needs two capabilities: turn a chat history plus a user
message into reply text, and turn reply text into a feature stream. The
default implementations are deterministic stubs so the whole system is
reproducible offline; a chat-completion HTTP client covers the remote case.
"""

from __future__ import annotations

import json
import os
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from typing import Protocol

from .embedder import DEFAULT_EMBEDDER, EmbedderConfig, FeatureFrameStream, embed_text_stub

GREETING_WORDS = ("hi", "hello", "hey", "good morning", "good evening", "greetings")
QUESTION_WORDS = ("what", "why", "how", "when", "where", "who", "which", "can", "do", "is", "are")
DEFAULT_INPUT_CAP = 2000


class LlmAdapter(Protocol):
    adapter_id: str

    def respond(self, history: list[tuple[str, str]], user_text: str) -> str: ...


class TtsAdapter(Protocol):
    adapter_id: str

    def synthesize(self, reply_text: str) -> FeatureFrameStream: ...


@dataclass
class StubLlm:
    """Rule-based template responder; a pure function of its inputs."""

    adapter_id: str = "stub-llm-v1"
    input_cap: int = DEFAULT_INPUT_CAP

    def respond(self, history, user_text: str) -> str:
        text = user_text.strip()
        truncated = len(text) > self.input_cap
        if truncated:
            text = text[:self.input_cap]
        lowered = text.lower()
        if any(lowered.startswith(w) for w in GREETING_WORDS):
            reply = "Hello there, nice to meet you."
        elif lowered.endswith("?") or lowered.split(" ", 1)[0] in QUESTION_WORDS:
            reply = f"Good question. Let me think about: {text}"
        else:
            reply = f"You said: {text}"
        if truncated:
            reply += " (your message was truncated)"
        return reply


@dataclass
class StubTts:
    """Feature synthesis via the deterministic character-to-viseme table."""

    cfg: EmbedderConfig = field(default_factory=lambda: DEFAULT_EMBEDDER)
    adapter_id: str = "stub-tts-v1"

    def synthesize(self, reply_text: str) -> FeatureFrameStream:
        return embed_text_stub(reply_text, self.cfg)


class RemoteLlmError(RuntimeError):
    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


@dataclass
class RemoteLlm:
    """Chat-completion style HTTP client with a timeout and a single retry.

    The credential is read from the environment variable named by
    ``credential_env`` at request time, never stored in config files.
    """

    endpoint: str
    model: str = "default"
    credential_env: str = ""
    timeout_s: float = 10.0
    adapter_id: str = "remote-llm-v1"

    def respond(self, history, user_text: str) -> str:
        messages = [{"role": role, "content": text} for role, text in history]
        messages.append({"role": "user", "content": user_text})
        payload = json.dumps({"model": self.model, "messages": messages}).encode()
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.credential_env, "") if self.credential_env else ""
        if token:
            headers["Authorization"] = f"Bearer {token}"

        last_error: Exception | None = None
        for _ in range(2):  # one attempt + one retry
            req = urllib.request.Request(self.endpoint, data=payload,
                                         headers=headers, method="POST")
            try:
                with urllib.request.urlopen(req, timeout=self.timeout_s) as resp:
                    body = resp.read()
                return self._parse(body)
            except urllib.error.HTTPError as exc:
                if exc.code in (401, 403):
                    raise RemoteLlmError(
                        f"authentication rejected by {self.endpoint} "
                        f"(HTTP {exc.code})", status=exc.code) from exc
                last_error = exc
            except (urllib.error.URLError, TimeoutError, OSError) as exc:
                last_error = exc
        raise RemoteLlmError(f"remote LLM unreachable at {self.endpoint}: "
                             f"{last_error}") from last_error

    def _parse(self, body: bytes) -> str:
        try:
            doc = json.loads(body)
            return doc["choices"][0]["message"]["content"]
        except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
            raise RemoteLlmError(f"malformed chat-completion response: {exc}") from exc


def respond_with_fallback(adapter, fallback, history, user_text):
    """Reply via ``adapter``; on failure use ``fallback`` and report why.

    Returns (reply_text, warning_or_None). With no fallback the error
    propagates.
    """
    try:
        return adapter.respond(history, user_text), None
    except RemoteLlmError as exc:
        if fallback is None:
            raise
        return (fallback.respond(history, user_text),
                f"{adapter.adapter_id} failed ({exc}); answered by "
                f"{fallback.adapter_id}")
