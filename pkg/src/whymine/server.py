"""HTTP serving: answer why-questions over a loaded checkpoint.

Endpoints: POST /api/explain, GET /api/health, GET / for the chat UI's
static bundle when one is configured. Requests against a service that has
not finished loading get 503. The loaded model is never mutated, so the
threading server can answer concurrent requests safely.
"""

from __future__ import annotations

import json
import mimetypes
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional

from .conllu import parse_conllu, normalize_labels
from .dataset import EOS, Vocabulary, adapt_prompt
from .nn import beam_decode, greedy_decode
from .rewrite import RewriteError, rewrite, to_prompt


class ExplainService:
    """Owns the model + vocabulary and turns requests into candidate lists."""

    def __init__(self, model=None, vocab: Optional[Vocabulary] = None,
                 decode_defaults: Optional[dict] = None, task: str = "L2E",
                 label_scheme: str = "ud2"):
        self.model = model
        self.vocab = vocab
        self.task = task
        self.label_scheme = label_scheme
        self.decode_defaults = {"mode": "beam", "beam_size": 5, "max_len": 30}
        if decode_defaults:
            self.decode_defaults.update(decode_defaults)
        self.ready = model is not None and vocab is not None

    def load(self, model, vocab: Vocabulary):
        self.model = model
        self.vocab = vocab
        self.ready = True

    def health(self) -> dict:
        info = {"status": "ok" if self.ready else "loading", "task": self.task}
        if self.ready:
            info.update({"model": self.model.kind,
                         "vocab_size": self.model.vocab_size,
                         "d_h": self.model.d_h})
        return info

    def _decode(self, prompt_tokens, opts):
        merged = dict(self.decode_defaults)
        merged.update({k: v for k, v in (opts or {}).items() if v is not None})
        source = self.vocab.encode(prompt_tokens)
        if merged.get("mode") == "greedy":
            result = greedy_decode(self.model, source, max_len=int(merged["max_len"]))
        else:
            result = beam_decode(self.model, source,
                                 beam_size=int(merged["beam_size"]),
                                 max_len=int(merged["max_len"]),
                                 length_norm=merged.get("length_norm"))
        candidates = []
        for ids, score in result.candidates:
            words = [self.vocab.id_to_token[i] for i in ids if i != EOS]
            candidates.append({"text": " ".join(words), "score": float(score)})
        return candidates

    def explain_statement(self, s1_text: str, opts=None) -> dict:
        tokens = s1_text.split()
        if not tokens:
            raise EmptyInput("s1 is empty")
        prompt = adapt_prompt("raw", tokens)
        statement = prompt[:-1] if prompt[-1] == "because" else prompt
        return {"s1": " ".join(statement), "prompt": " ".join(prompt),
                "candidates": self._decode(prompt, opts)}

    def explain_question(self, conllu_block: str, opts=None) -> dict:
        if not conllu_block.strip():
            raise EmptyInput("question is empty")
        parsed = parse_conllu(conllu_block)
        sentences = [s for doc in parsed for s in doc.sentences]
        if not sentences:
            raise BadParse("no parseable sentence in question payload")
        sent = normalize_labels(sentences[0], self.label_scheme)
        result = rewrite(sent)  # RewriteError propagates to a 400
        prompt = [t.lower() for t in to_prompt(result)]
        return {"s1": " ".join(result.statement).lower(),
                "prompt": " ".join(prompt),
                "candidates": self._decode(prompt, opts),
                "rewrite_rule": result.applied_rule}


class EmptyInput(ValueError):
    pass


class BadParse(ValueError):
    pass


def _make_handler(service: ExplainService, ui_dir: Optional[str]):
    ui_root = Path(ui_dir).resolve() if ui_dir else None

    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):  # quiet by default
            pass

        def _send_json(self, status: int, payload: dict):
            body = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self):
            if self.path == "/api/health":
                self._send_json(200 if service.ready else 503, service.health())
                return
            self._serve_static()

        def _serve_static(self):
            if ui_root is None:
                self._send_json(200, {"message": "whymine explanation server",
                                      "ui": "not bundled",
                                      "api": ["/api/explain", "/api/health"]})
                return
            rel = self.path.lstrip("/") or "index.html"
            target = (ui_root / rel).resolve()
            if not str(target).startswith(str(ui_root)) or not target.is_file():
                if (ui_root / "index.html").is_file() and "." not in rel:
                    target = ui_root / "index.html"
                else:
                    self._send_json(404, {"error": "not_found"})
                    return
            ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
            data = target.read_bytes()
            self.send_response(200)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def do_POST(self):
            if self.path != "/api/explain":
                self._send_json(404, {"error": "not_found"})
                return
            if not service.ready:
                self._send_json(503, {"error": "loading"})
                return
            length = int(self.headers.get("Content-Length", 0))
            raw = self.rfile.read(length)
            try:
                payload = json.loads(raw.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError):
                self._send_json(400, {"error": "malformed_json"})
                return
            if not isinstance(payload, dict):
                self._send_json(400, {"error": "malformed_json"})
                return
            opts = payload.get("decode")
            try:
                if payload.get("question"):
                    response = service.explain_question(payload["question"], opts)
                elif payload.get("s1"):
                    response = service.explain_statement(payload["s1"], opts)
                else:
                    self._send_json(422, {"error": "empty_input"})
                    return
            except EmptyInput:
                self._send_json(422, {"error": "empty_input"})
                return
            except RewriteError as exc:
                self._send_json(400, {"error": "rewrite_error",
                                      "reason": exc.reason})
                return
            except BadParse as exc:
                self._send_json(400, {"error": "bad_parse", "detail": str(exc)})
                return
            self._send_json(200, response)

    return Handler


def create_server(service: ExplainService, port: int = 8080,
                  ui_dir: Optional[str] = None, host: str = "127.0.0.1"):
    handler = _make_handler(service, ui_dir)
    return ThreadingHTTPServer((host, port), handler)


def serve_forever_in_thread(server) -> threading.Thread:
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return thread
