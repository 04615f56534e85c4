"""LSP 3.17 front-end over standard streams.

Document sync, diagnostics, and query capabilities delegate to the
language runtime (helper, scope index, symbol graph); the advertised
capability set is exactly the union of what the composed language's
feature boxes declare. Positions cross the boundary as UTF-16
line/character pairs and are converted to byte offsets at the edge.
"""

from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import BinaryIO
from urllib.parse import unquote, urlparse
from urllib.request import pathname2url

from . import rpc
from .engine import ErrorEvent
from .language import ComposedLanguage, LanguageRuntime
from .orchestration import SERVER, CompilationHelper, PriorityOrder
from .positions import LineIndex
from .symbol_graph import SymbolNode

log = logging.getLogger("typeforge.server")

SEVERITY_CODES = {"error": 1, "warning": 2, "information": 3, "hint": 4}
SYMBOL_KIND_VARIABLE = 13


def configure_logging() -> None:
    level = os.environ.get("TYPEFORGE_LOG", "warning").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(name)s %(levelname)s %(message)s",
        force=True,
    )


def path_to_uri(path: str | Path) -> str:
    return "file://" + pathname2url(str(Path(path).absolute()))


def uri_to_path(uri: str) -> str:
    parsed = urlparse(uri)
    if parsed.scheme and parsed.scheme != "file":
        return uri
    return unquote(parsed.path) or uri


class WorkspaceHandler:
    """Binds a composed language to a workspace for the server.

    The ordered role names, the compilation helper, and the priority order
    all flow from here; individual priority definitions stay unaware of
    each other.
    """

    def __init__(self, language: ComposedLanguage, root: str | Path = ".") -> None:
        self._language = language
        self.root = Path(root)
        self.runtime = LanguageRuntime(language, mode=SERVER)

    def source_set(self, file_ext: str | None = None) -> list[Path]:
        ext = (file_ext or self._language.file_ext).lstrip(".")
        return sorted(self.root.rglob(f"*.{ext}"))

    def language(self) -> ComposedLanguage:
        return self._language

    def lsp_roles(self) -> tuple[str, ...]:
        return self._language.lsp_role_names

    def compilation_helper(self) -> CompilationHelper:
        return self.runtime.helper

    def priorities(self) -> PriorityOrder:
        return self._language.priorities


class Document:
    def __init__(self, uri: str, version: int, text: str) -> None:
        self.uri = uri
        self.version = version
        self.text = text
        self.line_index = LineIndex(text)


class DocumentStore:
    def __init__(self) -> None:
        self._docs: dict[str, Document] = {}

    def open(self, uri: str, version: int, text: str) -> Document:
        doc = Document(uri, version, text)
        self._docs[uri] = doc
        return doc

    def update(self, uri: str, version: int, text: str) -> Document | None:
        """Replace content; stale or unknown versions return None."""
        doc = self._docs.get(uri)
        if doc is None or version <= doc.version:
            return None
        doc.version = version
        doc.text = text
        doc.line_index = LineIndex(text)
        return doc

    def close(self, uri: str) -> None:
        self._docs.pop(uri, None)

    def get(self, uri: str) -> Document | None:
        return self._docs.get(uri)


class ProtocolError(Exception):
    def __init__(self, code: int, message: str) -> None:
        super().__init__(message)
        self.code = code


class LanguageServer:
    def __init__(
        self,
        handler: WorkspaceHandler,
        instream: BinaryIO,
        outstream: BinaryIO,
    ) -> None:
        self.handler = handler
        self.instream = instream
        self.outstream = outstream
        self.store = DocumentStore()
        self.initialized = False
        self.shutdown_received = False
        self.exit_code: int | None = None
        self.capabilities = self._build_capabilities()
        self._requests = {
            "initialize": self._initialize,
            "shutdown": self._shutdown,
            "textDocument/hover": self._hover,
            "textDocument/documentSymbol": self._document_symbol,
            "textDocument/inlayHint": self._inlay_hint,
            "textDocument/foldingRange": self._folding_range,
            "textDocument/definition": self._definition,
            "textDocument/references": self._references,
            "textDocument/semanticTokens/full": self._semantic_tokens,
            "textDocument/completion": self._completion,
        }
        self._notifications = {
            "initialized": lambda params: None,
            "exit": self._exit,
            "textDocument/didOpen": self._did_open,
            "textDocument/didChange": self._did_change,
            "textDocument/didClose": self._did_close,
        }

    # -- main loop

    def serve_forever(self) -> int:
        while self.exit_code is None:
            try:
                message = rpc.read_message(self.instream)
            except rpc.TransportClosed:
                return 1 if not self.shutdown_received else 0
            self.handle(message)
        return self.exit_code

    def handle(self, message: dict) -> None:
        method = message.get("method")
        if "id" in message and method is not None:
            self._handle_request(message["id"], method, message.get("params") or {})
        elif method is not None:
            self._handle_notification(method, message.get("params") or {})

    def _handle_request(self, request_id, method: str, params: dict) -> None:
        handler = self._requests.get(method)
        try:
            if handler is None:
                raise ProtocolError(rpc.METHOD_NOT_FOUND, f"unknown method {method}")
            if method != "initialize" and not self.initialized:
                raise ProtocolError(
                    rpc.SERVER_NOT_INITIALIZED, "server is not initialized"
                )
            result = handler(params)
        except ProtocolError as exc:
            self._send(rpc.response(request_id, error=rpc.error_payload(exc.code, str(exc))))
        else:
            self._send(rpc.response(request_id, result=result))

    def _handle_notification(self, method: str, params: dict) -> None:
        handler = self._notifications.get(method)
        if handler is None:
            if not method.startswith("$/"):
                log.debug("ignoring notification %s", method)
            return
        handler(params)

    def _send(self, message: dict) -> None:
        rpc.write_message(self.outstream, message)

    def _log_to_client(self, message: str, type_: int = 2) -> None:
        self._send(rpc.notification("window/logMessage", {"type": type_, "message": message}))

    # -- capabilities

    def _build_capabilities(self) -> dict:
        caps = self.handler.language().capabilities()
        server_caps: dict = {
            "textDocumentSync": {"openClose": True, "change": 1},
        }
        if caps.hover:
            server_caps["hoverProvider"] = True
        if caps.document_symbol:
            server_caps["documentSymbolProvider"] = True
        if caps.inlay_hint:
            server_caps["inlayHintProvider"] = True
        if caps.folding_range:
            server_caps["foldingRangeProvider"] = True
        if caps.definition:
            server_caps["definitionProvider"] = True
        if caps.references:
            server_caps["referencesProvider"] = True
        if caps.completion:
            server_caps["completionProvider"] = {"resolveProvider": False}
        if caps.token_types:
            server_caps["semanticTokensProvider"] = {
                "legend": {
                    "tokenTypes": list(caps.token_types),
                    "tokenModifiers": [],
                },
                "full": True,
            }
        return server_caps

    # -- lifecycle

    def _initialize(self, params: dict) -> dict:
        if self.initialized:
            raise ProtocolError(rpc.INVALID_REQUEST, "server is already initialized")
        self.initialized = True
        return {
            "capabilities": self.capabilities,
            "serverInfo": {
                "name": f"typeforge/{self.handler.language().name}",
            },
        }

    def _shutdown(self, params: dict):
        self.shutdown_received = True
        return None

    def _exit(self, params: dict) -> None:
        self.exit_code = 0 if self.shutdown_received else 1

    # -- document sync

    def _did_open(self, params: dict) -> None:
        if not self.initialized:
            return
        item = params["textDocument"]
        doc = self.store.open(item["uri"], item.get("version", 0), item["text"])
        self._check_and_publish(doc)

    def _did_change(self, params: dict) -> None:
        uri = params["textDocument"]["uri"]
        version = params["textDocument"].get("version", 0)
        changes = params.get("contentChanges") or []
        if not changes:
            return
        if self.store.get(uri) is None:
            log.warning("didChange for unopened document %s", uri)
            self._log_to_client(f"didChange for unopened document {uri}")
            return
        doc = self.store.update(uri, version, changes[-1]["text"])
        if doc is None:
            log.warning("stale didChange version %s for %s", version, uri)
            self._log_to_client(f"stale didChange version {version} for {uri}")
            return
        self._check_and_publish(doc)

    def _did_close(self, params: dict) -> None:
        uri = params["textDocument"]["uri"]
        if self.store.get(uri) is not None:
            self.store.close(uri)
            self._send(
                rpc.notification(
                    "textDocument/publishDiagnostics",
                    {"uri": uri, "diagnostics": []},
                )
            )

    def _check_and_publish(self, doc: Document) -> None:
        result = self.handler.runtime.check_file(uri_to_path(doc.uri), doc.text)
        diagnostics = [
            self._diagnostic_payload(doc, event) for event in result.diagnostics
        ]
        self._send(
            rpc.notification(
                "textDocument/publishDiagnostics",
                {"uri": doc.uri, "version": doc.version, "diagnostics": diagnostics},
            )
        )

    def _diagnostic_payload(self, doc: Document, event: ErrorEvent) -> dict:
        return {
            "range": self._range(doc, event.range),
            "severity": SEVERITY_CODES.get(event.severity, 1),
            "code": event.code,
            "source": "typeforge",
            "message": event.message,
        }

    # -- position plumbing

    def _document(self, params: dict) -> Document:
        uri = params["textDocument"]["uri"]
        doc = self.store.get(uri)
        if doc is None:
            raise ProtocolError(rpc.INVALID_PARAMS, f"document not open: {uri}")
        return doc

    def _offset(self, doc: Document, params: dict) -> int:
        position = params["position"]
        return doc.line_index.position_to_byte(
            position.get("line", 0), position.get("character", 0)
        )

    def _range(self, doc: Document, span: tuple[int, int]) -> dict:
        start = doc.line_index.byte_to_position(span[0])
        end = doc.line_index.byte_to_position(span[1])
        return {
            "start": {"line": start[0], "character": start[1]},
            "end": {"line": end[0], "character": end[1]},
        }

    def _location(self, doc: Document, node: SymbolNode) -> dict:
        return {"uri": doc.uri, "range": self._range(doc, node.range)}

    def _file_key(self, doc: Document) -> str:
        return uri_to_path(doc.uri)

    # -- queries

    def _hover(self, params: dict):
        doc = self._document(params)
        text = self.handler.runtime.hover_at(self._file_key(doc), self._offset(doc, params))
        if text is None:
            return None
        return {"contents": {"kind": "plaintext", "value": text}}

    def _document_symbol(self, params: dict):
        doc = self._document(params)
        return [
            {
                "name": entry.name,
                "kind": SYMBOL_KIND_VARIABLE,
                "range": self._range(doc, entry.range),
                "selectionRange": self._range(doc, entry.range),
            }
            for entry in self.handler.runtime.document_symbols(self._file_key(doc))
        ]

    def _inlay_hint(self, params: dict):
        doc = self._document(params)
        span = None
        if "range" in params:
            r = params["range"]
            span = (
                doc.line_index.position_to_byte(r["start"]["line"], r["start"]["character"]),
                doc.line_index.position_to_byte(r["end"]["line"], r["end"]["character"]),
            )
        hints = self.handler.runtime.inlay_hints(self._file_key(doc), span)
        return [
            {
                "position": dict(
                    zip(("line", "character"), doc.line_index.byte_to_position(pos))
                ),
                "label": label,
            }
            for pos, label in hints
        ]

    def _folding_range(self, params: dict):
        doc = self._document(params)
        return [
            {"startLine": start, "endLine": end}
            for start, end in self.handler.runtime.folding_ranges(self._file_key(doc))
        ]

    def _definition(self, params: dict):
        doc = self._document(params)
        node = self.handler.runtime.definition_at(
            self._file_key(doc), self._offset(doc, params)
        )
        return None if node is None else self._location(doc, node)

    def _references(self, params: dict):
        doc = self._document(params)
        include = bool(params.get("context", {}).get("includeDeclaration", False))
        nodes = self.handler.runtime.references_at(
            self._file_key(doc), self._offset(doc, params), include
        )
        return [self._location(doc, n) for n in nodes]

    def _semantic_tokens(self, params: dict):
        doc = self._document(params)
        legend = (
            self.capabilities.get("semanticTokensProvider", {})
            .get("legend", {})
            .get("tokenTypes", [])
        )
        token_index = {name: i for i, name in enumerate(legend)}
        data: list[int] = []
        prev_line = prev_char = 0
        for span, token_type in self.handler.runtime.semantic_tokens(self._file_key(doc)):
            if token_type not in token_index:
                continue
            line, char = doc.line_index.byte_to_position(span[0])
            end_line, end_char = doc.line_index.byte_to_position(span[1])
            length = end_char - char if end_line == line else 1
            delta_line = line - prev_line
            delta_char = char - prev_char if delta_line == 0 else char
            data.extend([delta_line, delta_char, length, token_index[token_type], 0])
            prev_line, prev_char = line, char
        return {"data": data}

    def _completion(self, params: dict):
        doc = self._document(params)
        names = self.handler.runtime.completions_at(
            self._file_key(doc), self._offset(doc, params)
        )
        return {
            "isIncomplete": False,
            "items": [{"label": name} for name in names],
        }


def serve_stdio(language: ComposedLanguage, root: str | Path = ".") -> int:
    import sys

    configure_logging()
    handler = WorkspaceHandler(language, root)
    server = LanguageServer(handler, sys.stdin.buffer, sys.stdout.buffer)
    return server.serve_forever()
