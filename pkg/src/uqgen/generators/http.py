"""OpenAI-compatible ``/completions`` backend with per-token logprobs."""

from __future__ import annotations

import logging
import os
import time
from typing import Any, Sequence

import httpx

from ..core import Generation, Prompt, make_step
from ..errors import BackendError, CapabilityError
from .base import CAP_FORCED, CAP_LOGPROBS, CAP_SEEDED, CAP_TOPK, Generator

log = logging.getLogger(__name__)

RETRY_STATUS = {408, 409, 429, 500, 502, 503, 504}


class OpenAICompletionsGenerator(Generator):
    """Talks to ``{base_url}/completions`` asking for ``logprobs=topk``.

    Forced-prefix continuation is emulated by appending the detokenized prefix
    to the prompt; the forced tokens come back with no score
    (``logprob=None``) and the generation is marked ``meta["emulated"]``.
    """

    def __init__(
        self,
        model: str,
        base_url: str = "https://api.openai.com/v1",
        api_key: str | None = None,
        timeout: float = 60.0,
        max_retries: int = 3,
        backoff: float = 1.0,
        max_topk: int = 5,
        allow_forced_emulation: bool = True,
        client: httpx.Client | None = None,
        sleep=time.sleep,
    ):
        self.model = model
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get("UQGEN_API_KEY")
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff = backoff
        self.max_topk = max_topk
        self.allow_forced_emulation = allow_forced_emulation
        self.id = f"openai:{model}"
        caps = {CAP_LOGPROBS, CAP_TOPK, CAP_SEEDED}
        if allow_forced_emulation:
            caps.add(CAP_FORCED)
        self.capabilities = frozenset(caps)
        self._client = client or httpx.Client(timeout=timeout)
        self._sleep = sleep

    def _post(self, body: dict[str, Any]) -> dict[str, Any]:
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        url = f"{self.base_url}/completions"
        last = "no attempt made"
        for attempt in range(self.max_retries + 1):
            if attempt:
                self._sleep(self.backoff * 2 ** (attempt - 1))
            try:
                resp = self._client.post(url, json=body, headers=headers, timeout=self.timeout)
            except httpx.HTTPError as exc:
                last = f"{type(exc).__name__}: {exc}"
                log.debug("attempt %d/%d failed: %s", attempt + 1, self.max_retries + 1, last)
                continue
            if resp.status_code in RETRY_STATUS:
                last = f"HTTP {resp.status_code}"
                continue
            if resp.status_code >= 400:
                raise BackendError(f"{self.id}: HTTP {resp.status_code}: {resp.text[:300]}", retriable=False)
            try:
                return resp.json()
            except ValueError:
                raise BackendError(f"{self.id}: response is not JSON", retriable=False) from None
        raise BackendError(f"{self.id}: request failed after {self.max_retries + 1} attempts ({last})")

    def _to_generation(self, prompt, data, temperature, seed, forced: Sequence[str], topk: int) -> Generation:
        try:
            choice = data["choices"][0]
        except (KeyError, IndexError, TypeError):
            raise BackendError(f"{self.id}: response has no choices", retriable=False) from None
        lp = choice.get("logprobs")
        if not lp or lp.get("tokens") is None or lp.get("token_logprobs") is None:
            raise CapabilityError(f"{self.id}: response carries no per-token logprobs")
        tokens = lp["tokens"]
        token_lps = lp["token_logprobs"]
        tops = lp.get("top_logprobs") or [None] * len(tokens)
        steps = []
        injected = []
        for pos, tok in enumerate(forced):
            steps.append(make_step(tok, None, (), pos)[0])
        for i, (tok, tlp, top) in enumerate(zip(tokens, token_lps, tops)):
            if tlp is None:
                raise CapabilityError(f"{self.id}: token {i} has no logprob")
            entries = sorted((top or {}).items(), key=lambda e: (-e[1], e[0]))[:topk]
            step, was_injected = make_step(tok, min(float(tlp), 0.0), entries, len(steps))
            if was_injected:
                injected.append(step.position)
            steps.append(step)
        meta: dict[str, Any] = {}
        if forced:
            meta["emulated"] = True
            meta["forced_prefix_len"] = len(forced)
        if injected:
            meta["injected"] = injected
        finish = choice.get("finish_reason") or "stop"
        if finish not in ("stop", "length"):
            finish = "stop" if finish == "eos" else "error"
        return Generation(
            prompt_id=prompt.id,
            text="".join(s.token for s in steps),
            steps=tuple(steps),
            temperature=float(temperature),
            seed=seed,
            backend_id=self.id,
            finish_reason=finish,
            meta=meta,
        )

    def _request(self, prompt, text, temperature, seed, max_tokens, topk, forced=()) -> Generation:
        self.check_topk(topk)
        body: dict[str, Any] = {
            "model": self.model,
            "prompt": text,
            "max_tokens": max_tokens,
            "temperature": temperature,
            "logprobs": topk,
        }
        if seed is not None:
            body["seed"] = seed
        return self._to_generation(prompt, self._post(body), temperature, seed, forced, topk)

    def generate(self, prompt, temperature=0.0, seed=None, max_tokens=64, topk=5) -> Generation:
        return self._request(prompt, prompt.text, temperature, seed, max_tokens, topk)

    def generate_forced(self, prompt, forced_prefix, temperature=0.0, seed=None, max_tokens=64, topk=5) -> Generation:
        if not forced_prefix:
            return self.generate(prompt, temperature, seed, max_tokens, topk)
        if not self.allow_forced_emulation:
            raise CapabilityError(f"{self.id}: forced-prefix emulation disabled by config")
        text = prompt.text + "".join(forced_prefix)
        remaining = max(max_tokens - len(forced_prefix), 1)
        return self._request(prompt, text, temperature, seed, remaining, topk, tuple(forced_prefix))
